use std::fs;
use std::path::Path;
use std::process::Command;

fn ubopt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ubopt")).args(args).env("UBOPT_THREADS", "2").output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn solve_writes_trajectory_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.toml", "T = 6\nN = 12\n");
    let out = dir.path().join("out");
    let o = ubopt(&["solve", "--scenario", &sc, "--scheme", "nleh", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("demand_met"));

    let t = rows(&out.join("trajectory.csv"));
    assert_eq!(t.len(), 13);
    let xy = |r: &Vec<String>| (r[1].parse::<f64>().unwrap(), r[2].parse::<f64>().unwrap());
    assert_eq!(xy(&t[0]), (0.0, 10.0));
    assert_eq!(xy(&t[12]), (20.0, 10.0));
    for w in t.windows(2) {
        let (a, b) = (xy(&w[0]), xy(&w[1]));
        // 12 significant digits in the file.
        assert!((b.0 - a.0).hypot(b.1 - a.1) <= 20.0 * 0.5 * (1.0 + 1e-9) + 1e-9);
    }
    assert!(!rows(&out.join("trace.csv")).is_empty());
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "sweep.toml",
        "schemes = [\"LEH\", \"NLFTau\", \"LNC\"]\nN = 10\nT = 5\n[sweep]\nkey = \"P_s\"\nvalues = [2, 6, 10]\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = ubopt(&["sweep", "--spec", &spec, "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (x, y) = (fs::read(a.join("sweep.csv")).unwrap(), fs::read(b.join("sweep.csv")).unwrap());
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("scheme,swept_value,objective_bits,throughput_bps,converged,iterations,demand_met\n"));
    let r = rows(&a.join("sweep.csv"));
    let order: Vec<&str> = r.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(order, ["LEH", "LEH", "LEH", "NLFTau", "NLFTau", "NLFTau", "LNC", "LNC", "LNC"]);
}

#[test]
fn ehcompare_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.toml", "");
    let out = dir.path().join("eh.csv");
    let o = ubopt(&["ehcompare", "--scenario", &sc, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let r = rows(&out);
    assert_eq!(r.len(), 201);
    assert_eq!(r[0][1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(r[0][2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn usage_and_parse_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "g.toml", "");
    let bad = write(dir.path(), "b.toml", "sigma = 1.5\n");
    let unknown = write(dir.path(), "u.toml", "warp = 9\n");
    assert_eq!(ubopt(&["solve", "--scenario", &good, "--scheme", "XYZ"]).status.code(), Some(1));
    assert_eq!(ubopt(&["solve", "--scenario", &bad, "--scheme", "LEH"]).status.code(), Some(1));
    assert_eq!(ubopt(&["solve", "--scenario", &unknown, "--scheme", "LEH"]).status.code(), Some(1));
    assert_eq!(ubopt(&["solve", "--scenario", "/no/such/file", "--scheme", "LEH"]).status.code(), Some(1));
    assert_eq!(ubopt(&["frobnicate"]).status.code(), Some(1));
    let o = ubopt(&["solve", "--scenario", &bad, "--scheme", "LEH"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));
}

#[test]
fn unflyable_fixed_path_exits_2() {
    // The straight line fits in 1 s at 20 m/s; the detour over the midpoint does not.
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.toml", "T = 1\nN = 4\n");
    assert_eq!(ubopt(&["solve", "--scenario", &sc, "--scheme", "LFTra"]).status.code(), Some(2));
    assert_eq!(ubopt(&["solve", "--scenario", &sc, "--scheme", "LEH"]).status.code(), Some(0));
}
