//! ENVI raster I/O: an ASCII `.hdr` of `key = value` pairs next to a flat
//! binary `.img`.
//!
//! Honoured header keys: `samples`, `lines`, `bands`, `header offset`,
//! `data type` (1 = u8, 12 = u16, 4 = f32, 5 = f64), `interleave`
//! (`bsq`, `bil`, `bip`), `byte order` (0 little, 1 big), `map info` and
//! `data ignore value`. Anything else is carried through untouched by the
//! parser and ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::lvcs::meters_per_degree;
use super::raster::{GeoTransform, RasterGrid, DEFAULT_NODATA};
use super::EnviError;

/// Projection label written into `map info` for rasters whose pixel sizes
/// are ground meters.
pub const TANGENT_PLANE_PROJECTION: &str = "Tangent Plane";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataType {
    U8,
    U16,
    F32,
    F64,
}

impl DataType {
    pub fn code(self) -> u32 {
        match self {
            DataType::U8 => 1,
            DataType::U16 => 12,
            DataType::F32 => 4,
            DataType::F64 => 5,
        }
    }

    pub fn from_code(code: u32) -> Result<Self, EnviError> {
        Ok(match code {
            1 => DataType::U8,
            12 => DataType::U16,
            4 => DataType::F32,
            5 => DataType::F64,
            other => return Err(EnviError::UnsupportedDataType(other)),
        })
    }

    pub fn size(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::U16 => 2,
            DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }

    fn representable(self, v: f64) -> bool {
        match self {
            DataType::U8 => v.fract() == 0.0 && (0.0..=255.0).contains(&v),
            DataType::U16 => v.fract() == 0.0 && (0.0..=65535.0).contains(&v),
            DataType::F32 => !v.is_finite() || v.abs() <= f32::MAX as f64,
            DataType::F64 => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

impl Interleave {
    pub fn parse(s: &str) -> Result<Self, EnviError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bsq" => Ok(Interleave::Bsq),
            "bil" => Ok(Interleave::Bil),
            "bip" => Ok(Interleave::Bip),
            other => Err(EnviError::UnsupportedInterleave(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        }
    }

    /// Position in the file of sample (band, row, col).
    fn offset(self, band: usize, row: usize, col: usize, bands: usize, width: usize, height: usize) -> usize {
        match self {
            Interleave::Bsq => (band * height + row) * width + col,
            Interleave::Bil => (row * bands + band) * width + col,
            Interleave::Bip => (row * width + col) * bands + band,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnviOptions {
    pub data_type: DataType,
    pub interleave: Interleave,
    pub byte_order: ByteOrder,
}

impl EnviOptions {
    pub fn new(data_type: DataType) -> Self {
        Self { data_type, interleave: Interleave::Bsq, byte_order: ByteOrder::Little }
    }

    pub fn interleave(mut self, interleave: Interleave) -> Self {
        self.interleave = interleave;
        self
    }

    pub fn byte_order(mut self, order: ByteOrder) -> Self {
        self.byte_order = order;
        self
    }
}

/// Parsed header.
#[derive(Clone, Debug, PartialEq)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub header_offset: usize,
    pub data_type: DataType,
    pub interleave: Interleave,
    pub byte_order: ByteOrder,
    pub map_info: Option<Vec<String>>,
    pub nodata: Option<f64>,
    pub band_names: Option<Vec<String>>,
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, EnviError> {
    let mut lines = text.lines();
    let magic = lines.by_ref().map(str::trim).find(|l| !l.is_empty());
    if magic != Some("ENVI") {
        return Err(EnviError::MalformedHeader("missing ENVI magic line".into()));
    }
    let mut pairs = BTreeMap::new();
    let mut pending: Option<(String, String)> = None;
    for raw in lines {
        if let Some((key, mut value)) = pending.take() {
            value.push(' ');
            value.push_str(raw.trim());
            if value.contains('}') {
                pairs.insert(key, value);
            } else {
                pending = Some((key, value));
            }
            continue;
        }
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| EnviError::MalformedHeader(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if value.starts_with('{') && !value.contains('}') {
            pending = Some((key, value));
        } else {
            pairs.insert(key, value);
        }
    }
    if let Some((key, _)) = pending {
        return Err(EnviError::MalformedHeader(format!("unterminated brace value for `{key}`")));
    }
    Ok(pairs)
}

fn brace_list(value: &str) -> Vec<String> {
    value.trim().trim_start_matches('{').trim_end_matches('}').split(',').map(|s| s.trim().to_string()).collect()
}

fn number<T: std::str::FromStr>(pairs: &BTreeMap<String, String>, key: &'static str) -> Result<Option<T>, EnviError> {
    match pairs.get(key) {
        None => Ok(None),
        Some(v) => v.trim().parse::<T>().map(Some).map_err(|_| EnviError::MalformedHeader(format!("`{key}` is not a number: `{v}`"))),
    }
}

impl EnviHeader {
    pub fn parse(text: &str) -> Result<Self, EnviError> {
        let pairs = parse_pairs(text)?;
        let required = |key: &'static str| -> Result<usize, EnviError> { number::<usize>(&pairs, key)?.ok_or(EnviError::MissingKey(key)) };
        let samples = required("samples")?;
        let lines = required("lines")?;
        let bands = required("bands")?;
        if samples == 0 || lines == 0 || bands == 0 {
            return Err(EnviError::MalformedHeader("zero-sized raster".into()));
        }
        let data_type = DataType::from_code(number::<u32>(&pairs, "data type")?.ok_or(EnviError::MissingKey("data type"))?)?;
        let interleave = match pairs.get("interleave") {
            Some(v) => Interleave::parse(v)?,
            None => Interleave::Bsq,
        };
        let byte_order = match number::<u32>(&pairs, "byte order")? {
            None | Some(0) => ByteOrder::Little,
            Some(1) => ByteOrder::Big,
            Some(other) => return Err(EnviError::MalformedHeader(format!("byte order {other}"))),
        };
        Ok(Self {
            samples,
            lines,
            bands,
            header_offset: number::<usize>(&pairs, "header offset")?.unwrap_or(0),
            data_type,
            interleave,
            byte_order,
            map_info: pairs.get("map info").map(|v| brace_list(v)),
            nodata: number::<f64>(&pairs, "data ignore value")?,
            band_names: pairs.get("band names").map(|v| brace_list(v)),
        })
    }

    /// Georeferencing described by `map info`, or a 1 m grid at (0, 0) when
    /// absent.
    pub fn transform(&self) -> Result<GeoTransform, EnviError> {
        let Some(info) = &self.map_info else {
            return GeoTransform::new(0.0, 0.0, 1.0, 1.0, self.samples, self.lines).map_err(|e| EnviError::MalformedHeader(e.to_string()));
        };
        if info.len() < 7 {
            return Err(EnviError::MalformedHeader("map info needs at least 7 fields".into()));
        }
        let num = |i: usize| -> Result<f64, EnviError> {
            info[i].parse::<f64>().map_err(|_| EnviError::MalformedHeader(format!("map info field {i} `{}`", info[i])))
        };
        let (ref_x, ref_y) = (num(1)?, num(2)?);
        let (lon, lat, mut psx, mut psy) = (num(3)?, num(4)?, num(5)?, num(6)?);
        let projection = info[0].to_ascii_lowercase();
        if projection.starts_with("geographic") {
            let (mlat, mlon) = meters_per_degree(lat);
            psx *= mlon;
            psy *= mlat;
        } else if projection != TANGENT_PLANE_PROJECTION.to_ascii_lowercase() {
            return Err(EnviError::MalformedHeader(format!("unsupported map projection `{}`", info[0])));
        }
        if ref_x != 1.0 || ref_y != 1.0 {
            return Err(EnviError::MalformedHeader("map info reference pixel must be (1, 1)".into()));
        }
        GeoTransform::new(lon, lat, psx, psy, self.samples, self.lines).map_err(|e| EnviError::MalformedHeader(e.to_string()))
    }

    fn render(grid: &RasterGrid, opts: &EnviOptions, band_names: Option<&[String]>) -> String {
        let t = &grid.transform;
        let mut s = String::new();
        let _ = writeln!(s, "ENVI");
        let _ = writeln!(s, "samples = {}", t.width);
        let _ = writeln!(s, "lines = {}", t.height);
        let _ = writeln!(s, "bands = {}", grid.bands);
        let _ = writeln!(s, "header offset = 0");
        let _ = writeln!(s, "file type = ENVI Standard");
        let _ = writeln!(s, "data type = {}", opts.data_type.code());
        let _ = writeln!(s, "interleave = {}", opts.interleave.as_str());
        let _ = writeln!(s, "byte order = {}", if opts.byte_order == ByteOrder::Big { 1 } else { 0 });
        let _ = writeln!(
            s,
            "map info = {{{TANGENT_PLANE_PROJECTION}, 1, 1, {:?}, {:?}, {:?}, {:?}, WGS-84, units=Meters}}",
            t.origin_lon, t.origin_lat, t.pixel_size_x, t.pixel_size_y
        );
        if let Some(nd) = grid.nodata {
            let _ = writeln!(s, "data ignore value = {nd:?}");
        }
        if let Some(names) = band_names {
            let _ = writeln!(s, "band names = {{{}}}", names.join(", "));
        }
        s
    }
}

fn decode(bytes: &[u8], dt: DataType, order: ByteOrder) -> f64 {
    macro_rules! read {
        ($t:ty) => {{
            let arr = bytes.try_into().expect("sample width");
            match order {
                ByteOrder::Little => <$t>::from_le_bytes(arr) as f64,
                ByteOrder::Big => <$t>::from_be_bytes(arr) as f64,
            }
        }};
    }
    match dt {
        DataType::U8 => bytes[0] as f64,
        DataType::U16 => read!(u16),
        DataType::F32 => read!(f32),
        DataType::F64 => read!(f64),
    }
}

fn encode(v: f64, dt: DataType, order: ByteOrder, out: &mut [u8]) {
    macro_rules! put {
        ($x:expr) => {{
            let b = match order {
                ByteOrder::Little => $x.to_le_bytes(),
                ByteOrder::Big => $x.to_be_bytes(),
            };
            out.copy_from_slice(&b);
        }};
    }
    match dt {
        DataType::U8 => out[0] = v as u8,
        DataType::U16 => put!(v as u16),
        DataType::F32 => put!(v as f32),
        DataType::F64 => put!(v),
    }
}

/// Decodes an ENVI header and its data bytes.
pub fn decode_envi(header_text: &str, data: &[u8]) -> Result<RasterGrid, EnviError> {
    let h = EnviHeader::parse(header_text)?;
    let transform = h.transform()?;
    let n = h.samples * h.lines * h.bands;
    let size = h.data_type.size();
    let expected = h.header_offset + n * size;
    if data.len() < expected {
        return Err(EnviError::Truncated { expected, actual: data.len() });
    }
    let body = &data[h.header_offset..];
    let mut samples = vec![0.0; n];
    for b in 0..h.bands {
        for r in 0..h.lines {
            for c in 0..h.samples {
                let at = h.interleave.offset(b, r, c, h.bands, h.samples, h.lines) * size;
                samples[(b * h.lines + r) * h.samples + c] = decode(&body[at..at + size], h.data_type, h.byte_order);
            }
        }
    }
    let nodata = Some(h.nodata.unwrap_or(DEFAULT_NODATA));
    RasterGrid::new(transform, h.bands, samples, nodata).map_err(|e| EnviError::MalformedHeader(e.to_string()))
}

/// Encodes a grid as (header text, data bytes).
pub fn encode_envi(grid: &RasterGrid, opts: &EnviOptions, band_names: Option<&[String]>) -> Result<(String, Vec<u8>), EnviError> {
    if let Some(names) = band_names {
        if names.len() != grid.bands {
            return Err(EnviError::MalformedHeader("one band name per band required".into()));
        }
    }
    if let Some(nd) = grid.nodata {
        if !opts.data_type.representable(nd) {
            return Err(EnviError::Unrepresentable { value: nd, data_type: opts.data_type.code() });
        }
    }
    let (w, h, bands) = (grid.width(), grid.height(), grid.bands);
    let size = opts.data_type.size();
    let mut bytes = vec![0u8; w * h * bands * size];
    for b in 0..bands {
        for r in 0..h {
            for c in 0..w {
                let v = grid.get(b, r, c);
                if !opts.data_type.representable(v) {
                    return Err(EnviError::Unrepresentable { value: v, data_type: opts.data_type.code() });
                }
                let at = opts.interleave.offset(b, r, c, bands, w, h) * size;
                encode(v, opts.data_type, opts.byte_order, &mut bytes[at..at + size]);
            }
        }
    }
    Ok((EnviHeader::render(grid, opts, band_names), bytes))
}

pub fn read_envi_raster(header_path: &Path, data_path: &Path) -> Result<RasterGrid, EnviError> {
    let text = fs::read_to_string(header_path)?;
    let data = fs::read(data_path)?;
    decode_envi(&text, &data)
}

pub fn write_envi_raster(grid: &RasterGrid, header_path: &Path, data_path: &Path, opts: &EnviOptions) -> Result<(), EnviError> {
    write_envi_raster_named(grid, header_path, data_path, opts, None)
}

pub fn write_envi_raster_named(
    grid: &RasterGrid,
    header_path: &Path,
    data_path: &Path,
    opts: &EnviOptions,
    band_names: Option<&[String]>,
) -> Result<(), EnviError> {
    let (header, bytes) = encode_envi(grid, opts, band_names)?;
    fs::write(header_path, header)?;
    fs::write(data_path, bytes)?;
    Ok(())
}

/// `foo.hdr` next to `foo.img`.
pub fn data_path_for(header_path: &Path) -> std::path::PathBuf {
    header_path.with_extension("img")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(bands: usize, w: usize, h: usize) -> RasterGrid {
        let t = GeoTransform::new(-117.2, 32.9, 0.5, 0.5, w, h).unwrap();
        let data = (0..w * h * bands).map(|i| (i as f64) * 0.25 - 3.0).collect();
        RasterGrid::new(t, bands, data, Some(-9999.0)).unwrap()
    }

    #[test]
    fn float32_round_trip() {
        let g = grid(1, 2, 2);
        let (hdr, bytes) = encode_envi(&g, &EnviOptions::new(DataType::F32), None).unwrap();
        assert_eq!(bytes.len(), 16);
        let back = decode_envi(&hdr, &bytes).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn interleaves_decode_to_the_same_grid() {
        let g = grid(3, 4, 2);
        // Hand-built BIL layout: for each line, every band's row in turn.
        let mut bil = Vec::new();
        for r in 0..2 {
            for b in 0..3 {
                for c in 0..4 {
                    bil.extend_from_slice(&g.get(b, r, c).to_le_bytes());
                }
            }
        }
        let (hdr_bsq, bsq) = encode_envi(&g, &EnviOptions::new(DataType::F64), None).unwrap();
        let (hdr_bil, enc_bil) = encode_envi(&g, &EnviOptions::new(DataType::F64).interleave(Interleave::Bil), None).unwrap();
        assert_eq!(enc_bil, bil);
        assert_ne!(bsq, bil);
        let a = decode_envi(&hdr_bsq, &bsq).unwrap();
        let b = decode_envi(&hdr_bil, &bil).unwrap();
        assert_eq!(a.data(), b.data());
        let (hdr_bip, bip) = encode_envi(&g, &EnviOptions::new(DataType::F64).interleave(Interleave::Bip), None).unwrap();
        assert_eq!(decode_envi(&hdr_bip, &bip).unwrap().data(), g.data());
    }

    #[test]
    fn big_endian_u16_round_trip() {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, 3, 1).unwrap();
        let g = RasterGrid::new(t, 1, vec![0.0, 513.0, 65535.0], Some(65535.0)).unwrap();
        let opts = EnviOptions::new(DataType::U16).byte_order(ByteOrder::Big);
        let (hdr, bytes) = encode_envi(&g, &opts, None).unwrap();
        assert_eq!(&bytes[2..4], &[2, 1]);
        assert_eq!(decode_envi(&hdr, &bytes).unwrap(), g);
    }

    #[test]
    fn truncated_data_is_reported() {
        let g = grid(1, 2, 2);
        let (hdr, bytes) = encode_envi(&g, &EnviOptions::new(DataType::F32), None).unwrap();
        let err = decode_envi(&hdr, &bytes[..10]).unwrap_err();
        assert!(matches!(err, EnviError::Truncated { expected: 16, actual: 10 }));
    }

    #[test]
    fn distinct_parse_errors() {
        let base = "ENVI\nsamples = 2\nlines = 2\nbands = 1\ndata type = 4\n";
        assert!(matches!(decode_envi(&format!("{base}interleave = bsx\n"), &[0; 16]), Err(EnviError::UnsupportedInterleave(_))));
        assert!(matches!(decode_envi("samples = 2\n", &[]), Err(EnviError::MalformedHeader(_))));
        assert!(matches!(decode_envi("ENVI\nlines = 2\nbands = 1\ndata type = 4\n", &[]), Err(EnviError::MissingKey("samples"))));
        assert!(matches!(decode_envi("ENVI\nsamples = 2\nlines = 2\nbands = 1\ndata type = 3\n", &[0; 16]), Err(EnviError::UnsupportedDataType(3))));
    }

    #[test]
    fn missing_ignore_value_defaults_to_sentinel() {
        let g = decode_envi("ENVI\nsamples = 1\nlines = 1\nbands = 1\ndata type = 1\n", &[7]).unwrap();
        assert_eq!(g.nodata, Some(DEFAULT_NODATA));
        assert_eq!(g.get(0, 0, 0), 7.0);
    }

    #[test]
    fn multiline_brace_values_and_geographic_map_info() {
        let text = "ENVI\nsamples = 1\nlines = 1\nbands = 2\ndata type = 1\nband names = {\n a,\n b}\n\
                    map info = {Geographic Lat/Lon, 1, 1, 10.0, 0.0, 0.001, 0.001, WGS-84}\n";
        let h = EnviHeader::parse(text).unwrap();
        assert_eq!(h.band_names.as_deref(), Some(&["a".to_string(), "b".to_string()][..]));
        let t = h.transform().unwrap();
        assert!((t.pixel_size_y - 110.574).abs() < 0.01);
    }

    #[test]
    fn unrepresentable_values_are_rejected() {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, 1, 1).unwrap();
        let g = RasterGrid::new(t, 1, vec![1.5], None).unwrap();
        assert!(matches!(encode_envi(&g, &EnviOptions::new(DataType::U8), None), Err(EnviError::Unrepresentable { .. })));
    }
}
