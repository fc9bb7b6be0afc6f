use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ecgrisk");

const SMALL: &str = "seed = 4\n\
[segments]\nregion_s = 60.0\nmin_duration_s = 120.0\n\
[train]\nphases = [\"post\"]\nfeature_sets = [\"ecg\"]\nouter_k = 2\ninner_k = 2\nbudget = 10\n\
[synth]\nn_patients = 5\nduration_s = 120.0\nnoise_patients = 1\n";

fn ecgrisk(args: &[&str], extra: &[&Path]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for p in extra {
        cmd.arg(p);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, (Vec<u8>, std::time::SystemTime)> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let meta = std::fs::metadata(&p).unwrap();
            (p.clone(), (std::fs::read(&p).unwrap(), meta.modified().unwrap()))
        })
        .collect()
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[segments]\nbsqi_threshold = 1.5\n").unwrap();
    let out = ecgrisk(&["ingest", "--out"], &[dir.path(), Path::new("--config"), &cfg]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = ecgrisk(&["ingest", "--out"], &[dir.path(), Path::new("--config"), &cfg]);
    assert_eq!(code(&out), 2);

    let out = ecgrisk(&["ingest", "--out"], &[dir.path()]);
    assert_eq!(code(&out), 2, "missing manifest setting is a configuration error");
}

#[test]
fn unreadable_manifest_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let out = ecgrisk(&["ingest", "--out"], &[dir.path(), Path::new("--manifest"), &missing]);
    assert_eq!(code(&out), 3);

    let garbled = dir.path().join("garbled.csv");
    std::fs::write(&garbled, "who,what\n1,2\n").unwrap();
    let out = ecgrisk(&["ingest", "--out"], &[dir.path(), Path::new("--manifest"), &garbled]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn small_cohort_gates_noise_and_reruns_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let cohort = dir.path().join("cohort");
    let out_dir = dir.path().join("out");
    let config = [Path::new("--config"), &cfg];

    let out = ecgrisk(&["synth", "--out"], &[&cohort, config[0], config[1]]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = cohort.join("manifest.csv");

    // Every patient negative: no outer fold can be scored.
    let text = std::fs::read_to_string(&manifest).unwrap();
    let relabeled: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                return format!("{l}\n");
            }
            let mut cols: Vec<&str> = l.split(',').collect();
            cols[2] = "0";
            format!("{}\n", cols.join(","))
        })
        .collect();
    std::fs::write(&manifest, relabeled).unwrap();

    let with = |stage: &str| {
        ecgrisk(&[stage, "--out"], &[&out_dir, config[0], config[1], Path::new("--manifest"), &manifest])
    };
    for stage in ["ingest", "segments", "features", "stats"] {
        let out = with(stage);
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }

    let exclusions: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("exclusions.json")).unwrap()).unwrap();
    assert_eq!(exclusions["input"], 5);
    assert_eq!(exclusions["processed"], 4);
    assert_eq!(exclusions["low_quality"], 1);
    assert_eq!(exclusions["excluded"][0]["patient_id"], "P004");
    assert_eq!(exclusions["excluded"][0]["category"], "low_quality");

    let out = with("train");
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));

    let before = snapshot(&out_dir);
    for stage in ["ingest", "segments", "features", "stats"] {
        assert!(with(stage).status.success());
    }
    assert_eq!(snapshot(&out_dir), before, "rerun without --force rewrote artifacts");
}

#[test]
fn shipped_config_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../paper.toml");
    let cfg = ecgrisk_cli::PipelineConfig::load(&path).unwrap();
    assert_eq!(cfg, ecgrisk_cli::PipelineConfig::default());
}
