use std::fs;
use std::path::Path;

use cascades::experiment::{read_records, run_sweep, SweepConfig};

fn small() -> SweepConfig {
    SweepConfig::from_json(
        r#"{
            "n_values": [2000],
            "beta_values": [0.3, 0.5],
            "alpha_values": [0.0, 0.8],
            "networks": 2,
            "runs": 30,
            "x_min": 10,
            "structure_thetas": [1.2],
            "structure_max": 160,
            "rrt_reps": 5,
            "curve_thetas": [0.0, 1.6],
            "curve_sizes": [10, 100]
        }"#,
    )
    .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn sweep_writes_outputs_and_replays() {
    let a = tempfile::tempdir().unwrap();
    let out = run_sweep(&small(), a.path()).unwrap();
    assert_eq!(out.records.len(), 4);
    for name in [
        "config.json",
        "fig2.csv",
        "results.jsonl",
        "fig5_alpha0.csv",
        "fig5_alpha0.8.csv",
        "fig7.csv",
        "fig9.csv",
        "summary.csv",
        "fig8.csv",
    ] {
        assert!(a.path().join(name).is_file(), "{name} missing");
        assert!(out.files.contains(&a.path().join(name)), "{name} not listed");
    }

    // one λ row per point, in canonical order
    let fig8 = read(a.path(), "fig8.csv");
    let rows: Vec<&str> = fig8.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("2000,0.3,0.0,"), "{}", rows[0]);
    assert!(rows[3].starts_with("2000,0.5,0.8,"), "{}", rows[3]);

    let on_disk = read_records(&a.path().join("results.jsonl")).unwrap();
    assert_eq!(on_disk, out.records);

    // replaying the written config reproduces everything but timing
    let replay = SweepConfig::load(&a.path().join("config.json")).unwrap();
    let b = tempfile::tempdir().unwrap();
    let again = run_sweep(&replay, b.path()).unwrap();
    let strip = |rs: &[cascades::experiment::RunRecord]| rs.iter().map(|r| r.without_timing()).collect::<Vec<_>>();
    assert_eq!(strip(&again.records), strip(&out.records));
    for name in ["config.json", "fig2.csv", "fig5_alpha0.csv", "fig5_alpha0.8.csv", "fig7.csv", "fig8.csv", "fig9.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name} differs");
    }
}

#[test]
fn points_get_distinct_seeds() {
    let pts = small().points();
    let mut seeds: Vec<u64> = pts.iter().map(|p| p.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), pts.len());
}
