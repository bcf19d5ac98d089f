use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn perdyn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perdyn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PERDYN_OUT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(String::from).collect()
}

#[test]
fn roots_one_to_six() {
    let dir = tempfile::tempdir().unwrap();
    let o = perdyn(&["roots", "--family", "unicritical2", "--periods", "1..6"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names.len(), 6, "{names:?}");
    let p3 = dir.path().join("per_c_star_j0_n3.csv");
    let text = std::fs::read_to_string(&p3).unwrap();
    assert!(text.lines().any(|l| l == "re,im,multiplicity,residual"));
    assert_eq!(data_rows(&p3).len(), 3);
    assert!(!text.contains('\r'));
}

#[test]
fn identically_zero_marked_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = perdyn(&["roots", "--crit", "1", "--periods", "2"], dir.path());
    assert_eq!(code(&o), 0);
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    assert!(text.contains("identically zero"), "{text}");
    assert!(data_rows(&files[0]).is_empty());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["roots", "--periods", "0"][..],
        &["roots", "--periods", "13"],
        &["roots", "--family", "cubic-ish"],
        &["equidist", "--nx", "0"],
        &["roots", "--tol", "-1"],
        &["verify", "przytycki", "--crit", "7"],
        &["frobnicate"],
    ] {
        let o = perdyn(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn force_lifts_the_ceiling() {
    let dir = tempfile::tempdir().unwrap();
    let o = perdyn(&["roots", "--periods", "13", "--force", "--kind", "per_c"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&dir.path().join("per_c_j0_n13.csv")).len(), 4096);
}

#[test]
fn verify_examples() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["verify", "nu"][..],
        &["verify", "decomposition"],
        &["verify", "przytycki", "--lambda", "i"],
        &["verify", "lyapunov", "--lambda", "-1"],
    ] {
        let o = perdyn(args, dir.path());
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert_eq!(code(&o), 0, "{args:?}: {stdout}");
        assert!(stdout.contains(": pass"), "{stdout}");
    }
    let o = perdyn(&["verify", "claim6", "--lambda", "0.3+0.2i"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.contains("reconciles"), "{stdout}");
    for name in ["nu", "decomposition", "claim6", "przytycki", "lyapunov"] {
        assert!(dir.path().join(format!("verify_{name}.csv")).exists());
    }
}

#[test]
fn failed_verification_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = perdyn(&["verify", "lyapunov", "--lambda", "0", "--tol", "1e-6"], dir.path());
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn env_overrides_out() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_perdyn"))
        .args(["roots", "--periods", "2", "--out"])
        .arg(dir.path().join("from-flag"))
        .env("PERDYN_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(target.join("per_c_star_j0_n2.csv").exists());
    assert!(!dir.path().join("from-flag").exists());
}

#[test]
fn equidist_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let o = perdyn(&["equidist", "--nx", "32", "--ny", "32"], dir.path());
    let took = t.elapsed();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // the bound is for optimized builds
    if !cfg!(debug_assertions) {
        assert!(took.as_secs_f64() < 5.0, "{took:?}");
    }
    let report = dir.path().join("convergence.csv");
    let header = std::fs::read_to_string(&report).unwrap();
    assert!(header.contains("sequence,n,l1,sup_exterior"));
    assert_eq!(data_rows(&report).len(), 12);
    for stem in ["activity_j0", "bifurcation", "e_per_c_n12", "e_per_f_star_n6"] {
        let pgm = std::fs::read_to_string(dir.path().join(format!("{stem}.pgm"))).unwrap();
        assert!(pgm.starts_with("P2\n"));
        assert!(pgm.contains("\n32 32\n65535\n"));
        let meta = std::fs::read_to_string(dir.path().join(format!("{stem}.meta"))).unwrap();
        assert!(meta.contains("nx=32\n"));
    }
}

#[test]
fn csvs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["roots", "--periods", "1..7", "--coefficients", "--kind", "per_c"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&perdyn(&args, &a)), 0);
    assert_eq!(code(&perdyn(&args, &b)), 0);
    let mut n = 0;
    for e in std::fs::read_dir(&a).unwrap() {
        let p = e.unwrap().path();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(b.join(p.file_name().unwrap())).unwrap());
        n += 1;
    }
    assert_eq!(n, 14);
}

#[test]
fn family_file_roundtrip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("quad.fam");
    std::fs::write(
        &good,
        "[family]\nname = quad\ndegree = 2\n[lift]\nA0 = 1\nA2 = 0, 1\nB2 = 1\n[critical]\nc = 0 ; 1\nc = -1 ; 0\n\
         [region]\nre = -2.5, 1.5\nim = -1.5, 1.5\n",
    )
    .unwrap();
    let o = perdyn(&["roots", "--family-file", good.to_str().unwrap(), "--periods", "3"], &dir.path().join("f"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o2 = perdyn(&["roots", "--periods", "3"], &dir.path().join("b"));
    assert_eq!(code(&o2), 0);
    let roots = |d: &str| -> Vec<(f64, f64)> {
        data_rows(&dir.path().join(d).join("per_c_star_j0_n3.csv"))
            .iter()
            .map(|l| {
                let v: Vec<f64> = l.split(',').take(2).map(|x| x.parse().unwrap()).collect();
                (v[0], v[1])
            })
            .collect()
    };
    let (f, b) = (roots("f"), roots("b"));
    assert_eq!(f.len(), 3);
    for r in &f {
        assert!(b.iter().any(|q| (r.0 - q.0).hypot(r.1 - q.1) < 1e-12), "{f:?} {b:?}");
    }

    let bad = dir.path().join("bad.fam");
    std::fs::write(&bad, "[family]\ndegree = 2\n[lift]\nA0 = 1\nQ2 = 1\n").unwrap();
    let o = perdyn(&["roots", "--family-file", bad.to_str().unwrap(), "--periods", "2"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "periods = 2\ncolour = blue\n").unwrap();
    let o = perdyn(&["roots", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("colour"), "{err}");

    std::fs::write(&cfg, "periods = 2\nnx = -4\n").unwrap();
    assert_eq!(code(&perdyn(&["roots", "--config", cfg.to_str().unwrap()], dir.path())), 2);
}
