use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pitslab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pitslab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PITSLAB_CACHE")
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "status {:?}\n{}", o.status, String::from_utf8_lossy(&o.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn verify_quadratic_phase() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = pitslab(&["verify", "--kind", "poly-phase", "--q2", "sqrt2", "--probes", "2"], &out);
    ok(&o);
    let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    assert_eq!(report["schema"], "pits-report/1");
    assert_eq!(report["verdict"], "ConsistentWithTheorem1");
    assert!(read(&out, "report.txt").starts_with("verdict: ConsistentWithTheorem1"));
    for f in ["config.json", "arcs.csv", "zeros.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn rerun_from_config_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    ok(&pitslab(&["zeros", "--kind", "moebius", "--annulus", "50:150"], &first));
    let second = dir.path().join("b");
    let cfg = first.join("config.json");
    ok(&pitslab(&["zeros", "--config", cfg.to_str().unwrap()], &second));
    for f in ["zeros.csv", "zeros.json", "sectors.csv"] {
        assert_eq!(read(&first, f), read(&second, f), "{f}");
    }
    // the configs differ only in the output directory
    let strip = |dir: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&read(dir, "config.json")).unwrap();
        v.as_object_mut().unwrap().remove("out");
        v
    };
    assert_eq!(strip(&first), strip(&second));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for t in ["1", "2"] {
        let out = dir.path().join(t);
        ok(&pitslab(&["eval", "--kind", "moebius", "--r-range", "100:140:5", "--angles", "64", "--threads", t], &out));
        texts.push((read(&out, "field.csv"), read(&out, "indicator.csv")));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn indicator_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&pitslab(&["eval", "--kind", "constant", "--radii", "10,20", "--angles", "16"], &out));
    let mut rdr = csv::Reader::from_path(out.join("indicator.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["r", "theta", "h"]);
    let rows: Vec<(f64, f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 32);
    for (r, theta, h) in rows {
        assert!(r == 10.0 || r == 20.0);
        // for e^z the indicator is cos(2 pi theta); near the rounding floor
        // (about h = -0.45 at r = 20) the error grows like e^{r (floor - h)}
        if h > 0.0 {
            assert!((h - (std::f64::consts::TAU * theta).cos()).abs() < 1e-6, "theta {theta} h {h}");
        }
    }
}

#[test]
fn empty_zero_set_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&pitslab(&["zeros", "--kind", "constant", "--annulus", "1:100"], &out));
    assert_eq!(read(&out, "zeros.csv"), "modulus,angle_turns,multiplicity,residual\n");
    let manifest: serde_json::Value = serde_json::from_str(&read(&out, "zeros.json")).unwrap();
    assert_eq!(manifest["count"], 0);
}

#[test]
fn nogap_json_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&pitslab(&["nogap", "--kind", "iid", "--seed", "3", "--n", "4096", "--arcs", "16"], &out));
    let v: serde_json::Value = serde_json::from_str(&read(&out, "nogap.json")).unwrap();
    let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["J", "min_normalized_mass", "threshold", "verdict", "witness"]);
    assert_eq!(v["verdict"], "FullSupport");
}

#[test]
fn parameter_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = pitslab(&["eval", "--kind", "frac-power", "--alpha", "1", "--beta", "-1"], &dir.path().join("a"));
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let o = pitslab(&["seq", "--kind", "constant", "--no-such-flag"], &dir.path().join("b"));
    assert_eq!(o.status.code(), Some(2));
    let o = pitslab(&["seq"], &dir.path().join("c"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_flags() {
    let o = Command::new(env!("CARGO_BIN_EXE_pitslab")).args(["verify", "--help"]).output().unwrap();
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in ["--kind", "--annulus", "--sectors", "--probes", "--config", "--out", "--threads"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn cache_reuses_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run = |name: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_pitslab"))
            .args(["pits", "--kind", "moebius", "--r-range", "300:320:40", "--angles", "256"])
            .arg("--out")
            .arg(dir.path().join(name))
            .env("PITSLAB_CACHE", &cache)
            .output()
            .unwrap();
        ok(&o);
        read(&dir.path().join(name), "pits.json")
    };
    let a = run("a");
    let fields: Vec<_> = walk(&cache).into_iter().filter(|p| p.extension().is_some_and(|e| e == "bin")).collect();
    assert_eq!(fields.len(), 1);
    let stamp = fs::metadata(&fields[0]).unwrap().modified().unwrap();
    assert_eq!(a, run("b"));
    assert_eq!(fs::metadata(&fields[0]).unwrap().modified().unwrap(), stamp);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}
