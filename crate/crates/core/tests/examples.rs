use std::path::PathBuf;
use std::process::Command;

const EXAMPLES: &[&str] = &[
    "spectral_matching",
    "calibration",
    "curve_tracing",
    "quantize_materials",
    "material_remap",
    "terrain_dtm",
    "building_reconstruction",
    "road_placement",
    "tree_scatter",
    "scene_export",
    "envi_io",
    "synthetic_scene",
];

fn examples_dir() -> PathBuf {
    // target/<profile>/deps/<this test> -> target/<profile>/examples
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("examples")
}

#[test]
fn every_example_runs() {
    let dir = examples_dir();
    for name in EXAMPLES {
        let bin = dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
        assert!(bin.exists(), "example binary {} not built", bin.display());
        let out = tempfile::tempdir().unwrap();
        let res = Command::new(&bin).arg(out.path()).output().unwrap();
        assert!(res.status.success(), "{name} failed:\n{}", String::from_utf8_lossy(&res.stderr));
        assert!(!res.stdout.is_empty(), "{name} printed nothing");
    }
}
