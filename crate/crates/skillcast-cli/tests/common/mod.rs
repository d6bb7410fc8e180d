//! Helpers shared by the integration suites: running the built binary,
//! scratch directories, and file digests.

#![allow(dead_code)] // each test binary uses its own subset

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::process::Output;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_skillcast")
}

pub struct CmdResult {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_cli(args: &[&str]) -> CmdResult {
    let output: Output = std::process::Command::new(bin())
        .args(args)
        .output()
        .expect("binary should spawn");
    CmdResult {
        code: output.status.code().expect("binary should not be killed"),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

/// Fresh scratch directory under the target tmp area.
pub fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).expect("stale scratch dir should be removable");
    }
    std::fs::create_dir_all(&dir).expect("scratch dir should be creatable");
    dir
}

pub fn write_json(path: &Path, value: &serde_json::Value) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

pub fn read_file(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

/// Relative path plus content digest for every file under `dir`, sorted, so
/// two trees can be compared file by file.
pub fn dir_digest(dir: &Path) -> Vec<(String, u64)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, u64)>) {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                let mut hasher = DefaultHasher::new();
                bytes.hash(&mut hasher);
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, hasher.finish()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out
}

/// A structurally complete run summary with the fields `correlate` reads;
/// used where building one through a real experiment run would be overkill.
pub fn crafted_summary(dataset: &str, min_correlation: f64, mean_nrmse: f64) -> serde_json::Value {
    serde_json::json!({
        "dataset": dataset,
        "experiment": "multivariate",
        "horizon": 6,
        "master_seed": 42,
        "min_correlation": min_correlation,
        "report": {
            "experiment": "multivariate",
            "horizon": 6,
            "master_seed": 42,
            "skills": ["a", "b"],
            "winner": null,
            "per_skill": [],
            "mean_nrmse": mean_nrmse,
            "mean_mape": 10.0,
            "test_months": [],
            "predicted": [],
            "actual": [],
            "outcomes": []
        }
    })
}

/// Asserts the two trees hold identical files with identical bytes.
pub fn assert_identical_trees(a: &Path, b: &Path) {
    let da = dir_digest(a);
    let db = dir_digest(b);
    let names_a: Vec<&String> = da.iter().map(|(n, _)| n).collect();
    let names_b: Vec<&String> = db.iter().map(|(n, _)| n).collect();
    assert_eq!(names_a, names_b, "file sets differ between reruns");
    for ((name, ha), (_, hb)) in da.iter().zip(&db) {
        if ha != hb {
            let ba = std::fs::read(a.join(name)).unwrap();
            let bb = std::fs::read(b.join(name)).unwrap();
            assert_eq!(ba, bb, "{name} differs between reruns");
        }
    }
}
