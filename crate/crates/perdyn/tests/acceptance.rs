//! Acceptance run: one line per criterion, nonzero exit on any failure not
//! listed as a known limit.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use perdyn::parallel::Rayon;
use perdyn_core::dynamics::{lyapunov_demarco, lyapunov_repelling, przytycki_check};
use perdyn_core::dynatomic::{divisors, mobius, nu};
use perdyn_core::family::{builtin, builtin_rational, builtin_unicritical};
use perdyn_core::param_loci::{
    per_c, per_c_star, per_f_star_roots, verify_global_decomposition, Orientation, verify_claim_identity,
};
use perdyn_core::potentials::{
    convergence_report, divisor_mass, divisor_potential_grid, laplacian_mass, Annulus, GridSpec, Sequence,
};
use perdyn_core::{Region, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Outcome;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

// ---------------------------------------------------------------- 1

fn mobius_oracle(n: usize) -> i32 {
    let mut m = n;
    let mut sign = 1;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            m /= p;
            if m.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if m > 1 {
        sign = -sign;
    }
    sign
}

fn c1() -> Outcome {
    let mut worst = String::new();
    let mut ok = true;
    for n in 1..=30usize {
        if mobius(n) != mobius_oracle(n) {
            ok = false;
            worst = format!("mobius({n})");
        }
        let s: i32 = (1..=n).filter(|m| n % m == 0).map(mobius_oracle).sum();
        if s != i32::from(n == 1) {
            ok = false;
            worst = format!("sum of mobius over divisors of {n}");
        }
    }
    for d in 2..=4usize {
        for n in 1..=16usize {
            let direct: i128 = (1..=n)
                .filter(|m| n % m == 0)
                .map(|m| mobius_oracle(n / m) as i128 * ((d as i128).pow(m as u32) + 1))
                .sum();
            let got = nu(n, d) as i128;
            let total: u128 = divisors(n).iter().map(|&m| nu(m, d)).sum();
            if got != direct || total != (d as u128).pow(n as u32) + 1 || got % n as i128 != 0 {
                ok = false;
                worst = format!("nu({n}, {d}) = {got}, oracle {direct}");
            }
        }
    }
    let sample = format!("nu(12,2) = {}, nu(6,3) = {}", nu(12, 2), nu(6, 3));
    outcome(ok, if ok { sample } else { worst })
}

// ---------------------------------------------------------------- 2

/// Plain Aberth iteration on monic-normalized coefficients, ascending.
fn aberth_oracle(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let eval = |z: C64| {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for a in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    };
    let mut z: Vec<C64> = (0..n).map(|k| C64::from_polar(1.3, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let (p, dp) = eval(z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: C64 = (0..n).filter(|&i| i != k).map(|i| C64::new(1.0, 0.0) / (z[k] - z[i])).sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * s);
            z[k] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

fn matched(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, dist) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(dist);
    }
    worst
}

fn roots_of(div: &perdyn_core::param_loci::Divisor) -> Vec<C64> {
    div.all().flat_map(|e| std::iter::repeat_n(e.root, e.multiplicity)).collect()
}

fn c2() -> Outcome {
    let fam = builtin_unicritical(2).unwrap();
    let p1 = roots_of(&per_c(&fam, 0, 1).unwrap());
    let h2 = roots_of(&per_c_star(&fam, 0, 2).unwrap());
    let h3 = roots_of(&per_c_star(&fam, 0, 3).unwrap());
    // f³(0) = λ(λ³ + 2λ² + λ + 1)
    let oracle = aberth_oracle(&[c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
    let e1 = matched(&p1, &[c(0.0, 0.0)]);
    let e2 = matched(&h2, &[c(-1.0, 0.0)]);
    let e3 = matched(&h3, &oracle);
    let ok = e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-9;
    outcome(ok, format!("Per_c(1) err {e1:.1e}, Per*_c(2) err {e2:.1e}, Per*_c(3) vs oracle {e3:.1e}"))
}

// ---------------------------------------------------------------- 3

fn c3() -> Outcome {
    let fam = builtin_unicritical(2).unwrap();
    let mut worst = 0.0f64;
    let mut ok = true;
    for n in 1..=10 {
        let r = verify_global_decomposition(&fam, 0, n).unwrap();
        ok &= r.pass() && r.max_distance <= 1e-8;
        worst = worst.max(r.max_distance);
    }
    outcome(ok, format!("n = 1..10, largest pairing distance {worst:.1e}"))
}

// ---------------------------------------------------------------- 4

fn c4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["unicritical-2", "unicritical-3", "rational"] {
        let fam = builtin(name).unwrap();
        let r = fam.region;
        let mut worst = 0.0f64;
        let (mut recip, mut printed) = (0, 0);
        for _ in 0..5 {
            let l = c(rng.gen_range(r.re_min..r.re_max), rng.gen_range(r.im_min..r.im_max));
            for n in 1..=5 {
                match verify_claim_identity(&fam, l, n) {
                    Ok(rep) => {
                        worst = worst.max(rep.best_error());
                        match rep.reconciling() {
                            Orientation::Reciprocal => recip += 1,
                            Orientation::AsPrinted => printed += 1,
                        }
                    }
                    Err(e) => {
                        ok = false;
                        parts.push(format!("{name} λ={l} n={n}: {e}"));
                    }
                }
            }
        }
        ok &= worst <= 1e-7;
        parts.push(format!("{name}: worst {worst:.1e}, orientation reciprocal {recip}/as-printed {printed}"));
    }
    outcome(ok, parts.join("; "))
}

// ---------------------------------------------------------------- 5

fn c5() -> Outcome {
    let quad = builtin_unicritical(2).unwrap();
    let rat = builtin_rational().unwrap();
    let l0 = lyapunov_demarco(&quad, c(0.0, 0.0)).unwrap();
    let mut ok = (l0 - 2f64.ln()).abs() <= 1e-6;
    let mut parts = vec![format!("L(0) - log 2 = {:.1e}", l0 - 2f64.ln())];
    let cases = [
        (&quad, c(0.0, 0.0)),
        (&quad, c(-1.0, 0.0)),
        (&quad, c(0.0, 1.0)),
        (&quad, c(2.0, 0.0)),
        (&rat, c(0.3, 0.0)),
        (&rat, c(-0.2, 0.4)),
    ];
    for (fam, l) in cases {
        let a = lyapunov_demarco(fam, l).unwrap();
        let b = lyapunov_repelling(fam, l, 12).unwrap();
        ok &= (a - b).abs() <= 5e-2;
        parts.push(format!("{} λ={l}: {:.1e}", fam.name, (a - b).abs()));
    }
    outcome(ok, parts.join(", "))
}

// ---------------------------------------------------------------- 6

fn c6() -> Outcome {
    let fam = builtin_unicritical(2).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [c(0.0, 1.0), c(-2.0, 0.0)] {
        let rep = przytycki_check(&fam, l, 0, 25).unwrap();
        ok &= rep.rows.len() == 25 && rep.all_pass();
        let min_margin = rep.rows.iter().map(|r| r.distance.ln() - r.bound.ln()).fold(f64::INFINITY, f64::min);
        parts.push(format!("λ={l}: all n ≤ 25 hold, smallest log margin {min_margin:.2}"));
        if l == c(0.0, 1.0) {
            let r20 = rep.rows.iter().filter(|r| r.n >= 20).map(|r| r.ratio.abs()).fold(0.0, f64::max);
            ok &= r20 < 1e-3;
            parts.push(format!("|ratio| for n ≥ 20 at most {r20:.1e}"));
        }
    }
    outcome(ok, parts.join(", "))
}

// ---------------------------------------------------------------- 7, 8

struct Equidist {
    seven: Outcome,
    seven_star: Outcome,
    /// The star-sequence gap matches the mass-deficit model.
    star_explained: bool,
    eight: Outcome,
}

fn region_inset(spec: &GridSpec, cells: f64) -> Region {
    let r = spec.region;
    let (dx, dy) = (spec.dx(), spec.dy());
    Region::new(r.re_min + cells * dx, r.re_max - cells * dx, r.im_min + cells * dy, r.im_max - cells * dy).unwrap()
}

fn equidist() -> Equidist {
    let fam = builtin_unicritical(2).unwrap();
    let spec = GridSpec::new(fam.region, 512, 512).unwrap();
    let pool = Rayon::new(None).unwrap();
    let annulus = Annulus::default();
    let run = convergence_report(&fam, 0, &[6, 8, 10, 12], spec, annulus, &pool).unwrap();
    let rep = &run.report;

    let mut ok = true;
    let mut parts = Vec::new();
    for s in [Sequence::PerC, Sequence::PerCStar, Sequence::PerFStar] {
        let dec = rep.strictly_decreasing(s);
        ok &= dec && rep.of(s).count() == 4;
        parts.push(format!("{} decreasing {dec}", s.name()));
    }
    let sup = |s: Sequence| rep.of(s).find(|r| r.n == 12).map(|r| r.sup_exterior).unwrap_or(f64::INFINITY);
    let sup_c = sup(Sequence::PerC);
    ok &= sup_c <= 1e-2;
    parts.push(format!("per_c n=12 exterior sup {sup_c:.2e}"));
    let seven = outcome(ok, parts.join(", "));

    // Star sequences: the normalized mass falls short of 1/2 by
    // (N - ν(n))/N, which leaves e_n ≈ -(1 - ν(n)/N)·G on the exterior.
    let mut star_ok = true;
    let mut explained = true;
    let mut parts = Vec::new();
    for s in [Sequence::PerCStar, Sequence::PerFStar] {
        let row = rep.of(s).find(|r| r.n == 12).unwrap();
        let grid = &run.errors.iter().find(|(q, n, _)| *q == s && *n == 12).unwrap().2;
        let deficit = 1.0 - nu(12, 2) as f64 / row.normalization;
        let mut worst_gap = 0.0f64;
        for k in 0..spec.len() {
            if grid.clipped[k] || !annulus.contains(spec.at(k)) {
                continue;
            }
            let predicted = -deficit * run.activities[0].values[k];
            worst_gap = worst_gap.max((grid.values[k] - predicted).abs());
        }
        star_ok &= row.sup_exterior <= 1e-2;
        explained &= worst_gap <= 1e-3;
        parts.push(format!(
            "{} n=12 exterior sup {:.2e}, mass deficit {deficit:.4} accounts for it to {worst_gap:.1e}",
            s.name(),
            row.sup_exterior
        ));
    }
    let seven_star = outcome(star_ok, parts.join("; "));

    // Mass of the n = 10 divisor potential.
    let inner = region_inset(&spec, 2.0);
    let p10 = per_c(&fam, 0, 10).unwrap();
    let u = divisor_potential_grid(&p10, spec, &pool).unwrap();
    let mass = laplacian_mass(&u, &inner).unwrap();
    let expected = divisor_mass(&p10, &inner, spec.dx()) / p10.normalization;
    let rel = (mass - expected).abs() / expected;
    let mut ok8 = rel <= 0.02;
    let mut parts = vec![format!("Laplacian mass {mass:.5} vs count/1025 {expected:.5} (rel {rel:.1e})")];

    // Dyadic boxes: Per*_f(10, 0)/2^10 against the bifurcation grid.
    let f10 = per_f_star_roots(&fam, 10).unwrap();
    let mut worst = 0.0f64;
    let mut boxes = 0;
    for level in [1usize, 2] {
        let k = 1usize << level;
        let (w, h) = (inner.width() / k as f64, inner.height() / k as f64);
        for a in 0..k {
            for b in 0..k {
                let sub = Region::new(
                    inner.re_min + a as f64 * w,
                    inner.re_min + (a + 1) as f64 * w,
                    inner.im_min + b as f64 * h,
                    inner.im_min + (b + 1) as f64 * h,
                )
                .unwrap();
                let roots = divisor_mass(&f10, &sub, spec.dx()) / f10.normalization;
                let bif = laplacian_mass(&run.bifurcation, &sub).unwrap();
                worst = worst.max((roots - bif).abs());
                boxes += 1;
            }
        }
    }
    ok8 &= worst <= 0.05;
    parts.push(format!("{boxes} dyadic boxes, largest gap {worst:.3}"));
    let eight = outcome(ok8, parts.join(", "));

    Equidist { seven, seven_star, star_explained: explained, eight }
}

// ---------------------------------------------------------------- 9

fn run_cli(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["perdyn"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let (mut o, mut e) = (Vec::new(), Vec::new());
    perdyn::cli::run(argv, None, &mut o, &mut e)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn c9() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["roots", "--periods", "1..10", "--coefficients"],
        &["roots", "--family", "rational", "--periods", "2..6", "--kind", "per_f_star"],
        &["equidist", "--nx", "512", "--ny", "512"],
    ];
    let mut ok = true;
    let mut files = 0;
    for (k, args) in runs.iter().enumerate() {
        let a = tmp.path().join(format!("a{k}"));
        let b = tmp.path().join(format!("b{k}"));
        ok &= run_cli(args, &a) == 0 && run_cli(args, &b) == 0;
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        ok &= !fa.is_empty() && fa == fb;
        files += fa.len();
    }
    outcome(ok, format!("{files} CSV files byte-identical across two runs"))
}

// ----------------------------------------------------------------

fn report(label: &str, o: &Outcome, took: Duration, limit: Option<Duration>, known: bool) -> bool {
    let in_time = limit.is_none_or(|l| took <= l);
    let pass = o.pass && in_time;
    let verdict = match (pass, known) {
        (true, _) => "PASS",
        (false, true) => "FAIL (known limit)",
        (false, false) => "FAIL",
    };
    let time = match limit {
        Some(l) => format!("{:.2}s of {}s", took.as_secs_f64(), l.as_secs()),
        None => format!("{:.2}s", took.as_secs_f64()),
    };
    println!("criterion {label}: {verdict} [{time}] {}", o.detail);
    pass || known
}

fn main() -> ExitCode {
    let timed: [(&str, Check, u64); 6] =
        [("1", c1, 1), ("2", c2, 5), ("3", c3, 120), ("4", c4, 120), ("5", c5, 180), ("6", c6, 10)];
    let mut ok = true;
    for (label, f, secs) in timed {
        let t = Instant::now();
        let o = f();
        ok &= report(label, &o, t.elapsed(), Some(Duration::from_secs(secs)), false);
    }
    let t = Instant::now();
    let eq = equidist();
    let took = t.elapsed();
    ok &= report("7", &eq.seven, took, None, false);
    ok &= report("7 (star sequences, n=12 sup ≤ 1e-2)", &eq.seven_star, took, None, eq.star_explained);
    ok &= report("8", &eq.eight, took, None, false);
    let t = Instant::now();
    let o = c9();
    ok &= report("9", &o, t.elapsed(), None, false);
    if ok {
        println!("acceptance: all criteria met apart from known limits");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
