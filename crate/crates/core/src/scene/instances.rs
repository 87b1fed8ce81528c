//! Instance lists: one line per placed object,
//! `asset_id x y z heading scale variant`, numbers with nine significant
//! digits in fixed notation, lines sorted by asset then position.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use crate::geo::Point3;
use crate::placement::PlacementRecord;

use super::SceneError;

/// Fixed-notation decimal with nine significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { format!("{v}") };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').trim_start_matches(['0', '.']).is_empty() {
        "0".into()
    } else {
        s
    }
}

fn order(a: &PlacementRecord, b: &PlacementRecord) -> Ordering {
    a.asset_id
        .cmp(&b.asset_id)
        .then(a.position.x.total_cmp(&b.position.x))
        .then(a.position.y.total_cmp(&b.position.y))
        .then(a.position.z.total_cmp(&b.position.z))
        .then(a.heading.total_cmp(&b.heading))
        .then(a.scale.total_cmp(&b.scale))
        .then(a.material_variant.cmp(&b.material_variant))
}

pub fn format_instance_list(records: &[PlacementRecord]) -> Result<String, SceneError> {
    let mut sorted: Vec<&PlacementRecord> = records.iter().collect();
    sorted.sort_by(|a, b| order(a, b));
    let mut s = String::with_capacity(records.len() * 80);
    for r in sorted {
        if r.asset_id.is_empty() || r.asset_id.contains(char::is_whitespace) {
            return Err(SceneError::InvalidParameter(format!("asset id `{}` must be a non-empty word", r.asset_id)));
        }
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {}",
            r.asset_id,
            format_sig9(r.position.x),
            format_sig9(r.position.y),
            format_sig9(r.position.z),
            format_sig9(r.heading),
            format_sig9(r.scale),
            r.material_variant
        );
    }
    Ok(s)
}

pub fn write_instance_list(records: &[PlacementRecord], path: &Path) -> Result<(), SceneError> {
    std::fs::write(path, format_instance_list(records)?)?;
    Ok(())
}

pub fn parse_instance_list(text: &str) -> Result<Vec<PlacementRecord>, SceneError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || SceneError::Parse(format!("instance line {}: `{line}`", n + 1));
            if f.len() != 7 {
                return Err(bad());
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
            Ok(PlacementRecord {
                asset_id: f[0].to_string(),
                position: Point3::new(num(1)?, num(2)?, num(3)?),
                heading: num(4)?,
                scale: num(5)?,
                material_variant: f[6].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn read_instance_list(path: &Path) -> Result<Vec<PlacementRecord>, SceneError> {
    parse_instance_list(&std::fs::read_to_string(path)?)
}
