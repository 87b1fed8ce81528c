//! Raster round trips through ENVI files and conversions between geodetic
//! coordinates and the local tangent frame.

use scenesmith::fixture;
use scenesmith::geo::envi::ByteOrder;
use scenesmith::geo::{dsm_to_pointcloud, read_envi_raster, write_envi_raster, DataType, EnviOptions, Interleave};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("scenesmith-envi"));
    std::fs::create_dir_all(&out)?;
    let image = fixture::vnir(3);
    for (name, opts) in [
        ("bsq_le_f64", EnviOptions::new(DataType::F64)),
        ("bil_be_f64", EnviOptions::new(DataType::F64).interleave(Interleave::Bil).byte_order(ByteOrder::Big)),
        ("bip_le_f32", EnviOptions::new(DataType::F32).interleave(Interleave::Bip)),
    ] {
        let (hdr, img) = (out.join(format!("{name}.hdr")), out.join(format!("{name}.img")));
        write_envi_raster(&image, &hdr, &img, &opts)?;
        let back = read_envi_raster(&hdr, &img)?;
        let err = back.data().iter().zip(image.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{name}: {} bytes, max error {err:.1e}, transform kept: {}", std::fs::metadata(&img)?.len(), back.transform == image.transform);
    }
    println!("\n{}", std::fs::read_to_string(out.join("bsq_le_f64.hdr"))?);

    let origin = fixture::origin();
    let corner = origin.to_local(fixture::ORIGIN_LAT - 0.0005, fixture::ORIGIN_LON + 0.0005, origin.elev + 12.0)?;
    let (lat, lon, h) = origin.to_geodetic(corner)?;
    println!("({:.4}, {:.4}) local -> ({lat:.7}, {lon:.7}, {h:.3})", corner.x, corner.y);
    let cloud = dsm_to_pointcloud(&fixture::dsm(3), None, &origin)?;
    let top = cloud.points.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.z));
    println!("{} surface points, highest {top:.2} m above the origin", cloud.len());
    Ok(())
}
