use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const WEIGHTED_QUAD: &str = r#"{"type":"lambda-weight","inner":{"type":"dyadic-self-similar","d":2,"weights":["0.08","0.2","0.36","0.36"]},"a":"-1/2","b":"1"}"#;
const LEBESGUE_1: &str = r#"{"type":"dyadic-self-similar","d":1,"weights":["1/2","1/2"]}"#;
const BINOMIAL_2D: &str =
    r#"{"type":"dyadic-self-similar","d":2,"weights":["0.1","0.2","0.3","0.4"]}"#;
const CUBE_POWER: &str = r#"{"type":"power","inner":{"type":"dyadic-self-similar","d":1,"weights":["0.3","0.7"]},"s":"3"}"#;

fn pelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pelab"))
        .args(args)
        .env_remove("PELAB_SPEC")
        .env_remove("PELAB_OUT")
        .output()
        .expect("binary runs")
}

fn out_dir(dir: &TempDir) -> &str {
    dir.path().to_str().unwrap()
}

/// Column `name` of a CSV file.
fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header
        .iter()
        .position(|h| *h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    lines
        .map(|l| l.split(',').nth(j).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn spectra_gives_a_constant_critical_value() {
    let dir = TempDir::new().unwrap();
    let o = pelab(&[
        "spectra",
        "--spec",
        WEIGHTED_QUAD,
        "--levels",
        "1..12",
        "--out",
        out_dir(&dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let q = column(&dir.path().join("levels.csv"), "q_n");
    assert_eq!(q.len(), 12);
    for v in q {
        assert!((v - 2.478123).abs() < 1e-6, "{v}");
    }
    assert!(dir.path().join("tau.json").exists());
}

#[test]
fn dual_on_lebesgue_halves_at_powers_of_two() {
    let dir = TempDir::new().unwrap();
    let o = pelab(&[
        "dual",
        "--spec",
        LEBESGUE_1,
        "--budget",
        "2..64",
        "--out",
        out_dir(&dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("gamma.csv");
    let n = column(&path, "n");
    let g = column(&path, "log2_gamma");
    for (n, g) in n.iter().zip(g) {
        assert_eq!(g, -(n.log2().floor()), "n={n}");
    }
}

#[test]
fn bounds_pass_for_a_cubed_binomial() {
    let dir = TempDir::new().unwrap();
    let o = pelab(&[
        "bounds",
        "--spec",
        CUBE_POWER,
        "--levels",
        "1..150",
        "--out",
        out_dir(&dir),
    ]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("verdict: PASS"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bounds.json")).unwrap()).unwrap();
    let q = json["estimates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e[0] == "q_crit")
        .unwrap()[1]
        .as_f64()
        .unwrap();
    assert!((q - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn partition_outputs_reload_and_render() {
    let dir = TempDir::new().unwrap();
    let o = pelab(&[
        "partition",
        "--spec",
        BINOMIAL_2D,
        "--threshold",
        "1e-2,1e-1,1/1000",
        "--out",
        out_dir(&dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(dir.path().join("partition.svg")).unwrap();
    assert_eq!(svg.matches("<g ").count(), 3);
    for grey in ["#d9d9d9", "#8c8c8c", "#1a1a1a"] {
        assert!(svg.contains(grey), "{grey}");
    }
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("partition_0.json")).unwrap())
            .unwrap();
    assert_eq!(doc["threshold"], "1/10");
    let rendered = dir.path().join("again.svg");
    let o = pelab(&[
        "render",
        "--partition",
        &format!(
            "{},{}",
            dir.path().join("partition_0.json").display(),
            dir.path().join("partition_1.json").display()
        ),
        "--out",
        rendered.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(rendered).unwrap().matches("<g ").count(),
        2
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let o = pelab(&[
            "multifractal",
            "--spec",
            BINOMIAL_2D,
            "--levels",
            "1..16",
            "--out",
            out_dir(dir),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn spec_can_come_from_a_file_or_the_environment() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, LEBESGUE_1).unwrap();
    let o = pelab(&[
        "bs",
        "--spec",
        spec.to_str().unwrap(),
        "--steps",
        "4",
        "--out",
        out_dir(&dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        column(&dir.path().join("bs.csv"), "card"),
        vec![1.0, 2.0, 4.0, 8.0, 16.0]
    );

    let o = Command::new(env!("CARGO_BIN_EXE_pelab"))
        .args(["dual", "--budget", "2,4"])
        .env("PELAB_SPEC", LEBESGUE_1)
        .env("PELAB_OUT", out_dir(&dir))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        column(&dir.path().join("gamma.csv"), "log2_gamma"),
        vec![-1.0, -2.0]
    );
}

#[test]
fn exit_codes_by_failure_class() {
    let dir = TempDir::new().unwrap();
    let bad_spec = pelab(&[
        "spectra",
        "--spec",
        r#"{"type":"nope"}"#,
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(bad_spec.status.code(), Some(2));
    let bad_levels = pelab(&[
        "spectra",
        "--spec",
        LEBESGUE_1,
        "--levels",
        "5..2",
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(bad_levels.status.code(), Some(2));
    let missing = pelab(&[
        "render",
        "--partition",
        "/nonexistent.json",
        "--out",
        "x.svg",
    ]);
    assert_eq!(missing.status.code(), Some(2));
    let guard = pelab(&[
        "dual",
        "--spec",
        LEBESGUE_1,
        "--budget",
        "2^40",
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(guard.status.code(), Some(3));
    let usage = pelab(&["spectra"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn failing_bounds_exit_with_one() {
    let dir = TempDir::new().unwrap();
    // Too few levels for the estimates to settle.
    let o = pelab(&[
        "bounds",
        "--spec",
        WEIGHTED_QUAD,
        "--levels",
        "1..4",
        "--tol",
        "0.001",
        "--out",
        out_dir(&dir),
    ]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict: FAIL"));
}
