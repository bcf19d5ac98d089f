//! The `perdyn` command line.
//!
//! Exit codes: 0 success, 1 verification failure or computation error, 2
//! usage or configuration error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use perdyn_core::dynamics::{lyapunov_demarco, lyapunov_repelling, przytycki_check};
use perdyn_core::dynatomic::{divisors, mobius, nu};
use perdyn_core::family::builtin;
use perdyn_core::param_loci::{
    critical_orbit_polynomial, h_polynomial, per_c, per_c_star, per_f_star_roots, verify_claim_identity,
    verify_global_decomposition, Divisor,
};
use perdyn_core::potentials::{convergence_report, Annulus, GridSpec, Sequence};
use perdyn_core::MarkedFamily;

use crate::config::{DivisorKind, FamilySource, RunConfig};
use crate::family_file::load_family;
use crate::output::{write_coefficients_csv, write_divisor_csv, write_grid_csv, write_pgm, write_report_csv, write_table_csv};
use crate::parallel::Rayon;
use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "perdyn", version, about = "Periodic critical parameters, Green functions and bifurcation potentials")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write the divisor of parameters where a marked critical point is periodic, one CSV per period.
    Roots(Flags),
    /// Run a numerical check and print a pass/fail table.
    Verify {
        #[arg(value_enum)]
        which: Which,
        #[command(flatten)]
        flags: Flags,
    },
    /// Compare divisor potentials with the activity and bifurcation potentials on a grid.
    Equidist(Flags),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    /// Möbius and ν tables against their defining sums.
    Nu,
    /// roots(P_n) against the union of roots(H_m) over m | n.
    Decomposition,
    /// |p*_n(λ,0)| against the product of the H̃_n and the chordal correction.
    Claim6,
    /// Distance of the critical orbit from the critical point against 1/(20 Lⁿ).
    Przytycki,
    /// Lyapunov exponent from Green functions against repelling cycles.
    Lyapunov,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Built-in family: unicritical2, unicritical-<d>, rational.
    #[arg(long)]
    family: Option<String>,
    /// Family definition file.
    #[arg(long = "family-file", value_name = "PATH")]
    family_file: Option<String>,
    /// Index of the marked critical point.
    #[arg(long)]
    crit: Option<String>,
    /// Periods: `a..b` (inclusive), `n`, or a comma list.
    #[arg(long)]
    periods: Option<String>,
    /// Parameter rectangle `re0,re1,im0,im1`.
    #[arg(long, allow_hyphen_values = true)]
    region: Option<String>,
    #[arg(long)]
    nx: Option<String>,
    #[arg(long)]
    ny: Option<String>,
    /// Pass/fail tolerance of a verification.
    #[arg(long)]
    tol: Option<String>,
    /// Output directory; `PERDYN_OUT` takes precedence.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads for grid evaluation.
    #[arg(long)]
    workers: Option<String>,
    /// Allow periods above the configured ceiling.
    #[arg(long)]
    force: bool,
    /// Parameter value, e.g. `0.3+0.1i`.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long = "max-n")]
    max_n: Option<String>,
    /// Degree for `verify nu`.
    #[arg(long)]
    d: Option<String>,
    /// Divisor written by `roots`: per_c, per_c_star (default) or per_f_star.
    #[arg(long)]
    kind: Option<String>,
    /// Also write coefficient CSVs of the polynomials behind the divisors.
    #[arg(long)]
    coefficients: bool,
    /// Also write every grid as CSV.
    #[arg(long = "grid-csv")]
    grid_csv: bool,
    /// `key = value` file with the same keys as the flags; flags win.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, env_out: Option<String>) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::default();
        if let Some(p) = &self.config {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            c.apply_text(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
        }
        if self.family.is_some() && self.family_file.is_some() {
            return Err(CliError::Usage("--family and --family-file are exclusive".into()));
        }
        let pairs = [
            ("family", self.family),
            ("family-file", self.family_file),
            ("crit", self.crit),
            ("periods", self.periods),
            ("region", self.region),
            ("nx", self.nx),
            ("ny", self.ny),
            ("tol", self.tol),
            ("out", self.out),
            ("workers", self.workers),
            ("lambda", self.lambda),
            ("max-n", self.max_n),
            ("d", self.d),
            ("kind", self.kind),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
        }
        c.force |= self.force;
        c.coefficients |= self.coefficients;
        c.grid_csv |= self.grid_csv;
        c.apply_env(env_out);
        Ok(c)
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the exit code.
pub fn run<I, T>(args: I, env_out: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, env_out, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, env_out: Option<String>, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Roots(f) => cmd_roots(&f.into_config(env_out)?, out),
        Cmd::Verify { which, flags } => cmd_verify(&flags.into_config(env_out)?, which, out),
        Cmd::Equidist(f) => cmd_equidist(&f.into_config(env_out)?, out),
    }
}

fn say(out: &mut dyn Write, line: impl AsRef<str>) {
    let _ = writeln!(out, "{}", line.as_ref());
}

pub fn load(config: &RunConfig) -> Result<MarkedFamily, CliError> {
    let mut fam = match &config.family {
        FamilySource::Builtin(name) => builtin(name).map_err(|e| CliError::Usage(e.to_string()))?,
        FamilySource::File(p) => load_family(p)?,
    };
    if let Some(r) = config.region {
        fam.region = r;
    }
    Ok(fam)
}

fn require_crit(fam: &MarkedFamily, j: usize) -> Result<usize, CliError> {
    if j >= fam.critical.len() {
        return Err(CliError::Usage(format!("--crit {j}: the family has {} marked points", fam.critical.len())));
    }
    Ok(j)
}

fn divisor_comments(fam: &MarkedFamily, kind: DivisorKind, j: Option<usize>, n: usize, div: &Divisor) -> Vec<String> {
    let mut c = vec![format!(
        "family={} kind={} crit={} n={} normalization={} degree={} roots={}",
        fam.name,
        kind.name(),
        j.map_or("all".to_string(), |j| j.to_string()),
        n,
        div.normalization,
        div.degree,
        div.total()
    )];
    if div.identically_zero {
        c.push("identically zero: the marked point is periodic for every parameter, so the divisor is zero by convention".into());
    }
    c
}

pub fn cmd_roots(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let fam = load(config)?;
    let periods = config.periods.clone().ok_or_else(|| CliError::Usage("roots needs --periods".into()))?;
    config.check_periods(&periods)?;
    let kind = config.kind;
    let j = match kind {
        DivisorKind::PerFStar => None,
        _ => Some(require_crit(&fam, config.crit.unwrap_or(0))?),
    };
    for &n in &periods {
        let div = match (kind, j) {
            (DivisorKind::PerC, Some(j)) => per_c(&fam, j, n)?,
            (DivisorKind::PerCStar, Some(j)) => per_c_star(&fam, j, n)?,
            _ => per_f_star_roots(&fam, n)?,
        };
        let stem = match j {
            Some(j) => format!("{}_j{j}_n{n}", kind.name()),
            None => format!("{}_n{n}", kind.name()),
        };
        let path = config.out.join(format!("{stem}.csv"));
        write_divisor_csv(&path, &div, &divisor_comments(&fam, kind, j, n, &div))?;
        if config.coefficients {
            if let Some(j) = j {
                let poly = match kind {
                    DivisorKind::PerC => critical_orbit_polynomial(&fam, j, n)?,
                    _ => h_polynomial(&fam, j, n)?,
                };
                let label = if kind == DivisorKind::PerC { "P" } else { "H" };
                let cp = config.out.join(format!("{label}_j{j}_n{n}_coefficients.csv"));
                write_coefficients_csv(&cp, &poly, &[format!("family={} polynomial={label} crit={j} n={n}", fam.name)])?;
            }
        }
        let note = if div.identically_zero { " (identically zero)" } else { "" };
        say(out, format!("{}: {} roots{note}", path.display(), div.total()));
    }
    Ok(())
}

fn table(out: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) {
    say(out, header.join("\t"));
    for r in rows {
        say(out, r.join("\t"));
    }
}

fn verdict(ok: bool) -> String {
    if ok { "pass" } else { "FAIL" }.to_string()
}

fn finish_verify(
    config: &RunConfig,
    out: &mut dyn Write,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
    notes: &[String],
    ok: bool,
) -> Result<(), CliError> {
    table(out, header, rows);
    for n in notes {
        say(out, format!("note: {n}"));
    }
    write_table_csv(&config.out.join(format!("verify_{name}.csv")), header, rows, notes)?;
    say(out, format!("verify {name}: {}", if ok { "pass" } else { "FAIL" }));
    if ok {
        Ok(())
    } else {
        Err(CliError::Verification(format!("verify {name} failed")))
    }
}

fn lambda_of(config: &RunConfig) -> Result<perdyn_core::C64, CliError> {
    config.lambda.ok_or_else(|| CliError::Usage("this check needs --lambda".into()))
}

fn cmd_verify(config: &RunConfig, which: Which, out: &mut dyn Write) -> Result<(), CliError> {
    let g = |x: f64| format!("{x:.6e}");
    match which {
        Which::Nu => {
            let d = config.d.unwrap_or(2);
            let max_n = config.max_n.unwrap_or(12);
            let mut rows = Vec::new();
            let mut ok = true;
            for n in 1..=max_n {
                let pow = |m: usize| -> i128 { (d as i128).pow(m as u32) + 1 };
                let inv: i128 = divisors(n).into_iter().map(|m| mobius(n / m) as i128 * pow(m)).sum();
                let sum: u128 = divisors(n).into_iter().map(|m| nu(m, d)).sum();
                let v = nu(n, d);
                let pass = inv == v as i128 && sum == pow(n) as u128;
                ok &= pass;
                rows.push(vec![n.to_string(), mobius(n).to_string(), v.to_string(), inv.to_string(), sum.to_string(), verdict(pass)]);
            }
            finish_verify(config, out, "nu", &["n", "mobius", "nu", "mobius_sum", "divisor_sum", "result"], &rows, &[], ok)
        }
        Which::Decomposition => {
            let fam = load(config)?;
            let max_n = config.max_n.unwrap_or(8);
            config.check_periods(&[max_n])?;
            let js: Vec<usize> = match config.crit {
                Some(j) => vec![require_crit(&fam, j)?],
                None => (0..fam.critical.len()).collect(),
            };
            let mut rows = Vec::new();
            let mut ok = true;
            for &j in &js {
                for n in 1..=max_n {
                    let r = verify_global_decomposition(&fam, j, n)?;
                    ok &= r.pass();
                    let hs: Vec<String> = r.degrees_h.iter().map(|(m, k)| format!("{m}:{k}")).collect();
                    rows.push(vec![
                        j.to_string(),
                        n.to_string(),
                        r.degree_p.to_string(),
                        hs.join(" "),
                        g(r.max_distance),
                        r.identically_zero.to_string(),
                        verdict(r.pass()),
                    ]);
                }
            }
            let header = ["crit", "n", "deg_p", "deg_h", "max_distance", "identically_zero", "result"];
            finish_verify(config, out, "decomposition", &header, &rows, &[], ok)
        }
        Which::Claim6 => {
            let fam = load(config)?;
            let l = lambda_of(config)?;
            let max_n = config.max_n.unwrap_or(5);
            config.check_periods(&[max_n])?;
            let tol = config.tol.unwrap_or(1e-7);
            let mut rows = Vec::new();
            let mut notes = Vec::new();
            let mut ok = true;
            for n in 1..=max_n {
                let r = verify_claim_identity(&fam, l, n)?;
                let pass = r.best_error() <= tol;
                ok &= pass;
                rows.push(vec![
                    n.to_string(),
                    format!("{:?}", r.reconciling()),
                    g(r.lhs_log),
                    g(r.h_log),
                    g(r.best_error()),
                    g(r.euler_as_printed),
                    g(r.euler_reciprocal),
                    verdict(pass),
                ]);
                notes.push(format!("n={n}: {}", r.note()));
            }
            let header = ["n", "orientation", "lhs_log", "h_log", "rel_error", "euler_as_printed", "euler_reciprocal", "result"];
            finish_verify(config, out, "claim6", &header, &rows, &notes, ok)
        }
        Which::Przytycki => {
            let fam = load(config)?;
            let l = lambda_of(config)?;
            let j = require_crit(&fam, config.crit.unwrap_or(0))?;
            let max_n = config.max_n.unwrap_or(25);
            let r = przytycki_check(&fam, l, j, max_n)?;
            let rows: Vec<Vec<String>> =
                r.rows.iter().map(|x| vec![x.n.to_string(), g(x.distance), g(x.bound), g(x.ratio), verdict(x.pass)]).collect();
            let notes = vec![format!("Lipschitz constant {}", g(r.lipschitz))];
            finish_verify(config, out, "przytycki", &["n", "distance", "bound", "ratio", "result"], &rows, &notes, r.all_pass())
        }
        Which::Lyapunov => {
            let fam = load(config)?;
            let l = lambda_of(config)?;
            let n = config.max_n.unwrap_or(12);
            config.check_periods(&[n])?;
            let tol = config.tol.unwrap_or(5e-2);
            let a = lyapunov_demarco(&fam, l)?;
            let b = lyapunov_repelling(&fam, l, n)?;
            let ok = (a - b).abs() <= tol;
            let rows = vec![vec![n.to_string(), g(a), g(b), g((a - b).abs()), verdict(ok)]];
            finish_verify(config, out, "lyapunov", &["n", "demarco", "repelling", "difference", "result"], &rows, &[], ok)
        }
    }
}

pub fn cmd_equidist(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let fam = load(config)?;
    let j = require_crit(&fam, config.crit.unwrap_or(0))?;
    let periods = config.periods.clone().unwrap_or_else(|| vec![6, 8, 10, 12]);
    config.check_periods(&periods)?;
    let spec = GridSpec::new(fam.region, config.nx, config.ny).map_err(|e| CliError::Usage(e.to_string()))?;
    let pool = Rayon::new(config.workers).map_err(|e| CliError::Usage(e.to_string()))?;
    let run = convergence_report(&fam, j, &periods, spec, Annulus::default(), &pool)?;
    let dir = &config.out;
    let a = Annulus::default();
    let comments = vec![format!(
        "family={} crit={j} region={},{},{},{} nx={} ny={} exterior_annulus={}..{}",
        fam.name,
        spec.region.re_min,
        spec.region.re_max,
        spec.region.im_min,
        spec.region.im_max,
        spec.nx,
        spec.ny,
        a.r_in,
        a.r_out
    )];
    let report_path = dir.join("convergence.csv");
    write_report_csv(&report_path, &run.report, &comments)?;
    let mut grids: Vec<(String, &perdyn_core::potentials::PotentialGrid)> = Vec::new();
    for (k, g) in run.activities.iter().enumerate() {
        grids.push((format!("activity_j{k}"), g));
    }
    grids.push(("bifurcation".into(), &run.bifurcation));
    for (seq, n, g) in &run.errors {
        grids.push((format!("e_{}_n{n}", seq.name()), g));
    }
    for (stem, g) in &grids {
        write_pgm(&dir.join(format!("{stem}.pgm")), g, stem)?;
        if config.grid_csv {
            write_grid_csv(&dir.join(format!("{stem}.csv")), g)?;
        }
    }
    let header = ["sequence", "n", "l1", "sup_exterior", "roots", "clipped"];
    let rows: Vec<Vec<String>> = run
        .report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.sequence.name().into(),
                r.n.to_string(),
                format!("{:.4e}", r.l1),
                format!("{:.4e}", r.sup_exterior),
                r.root_count.to_string(),
                r.clipped.to_string(),
            ]
        })
        .collect();
    table(out, &header, &rows);
    for s in [Sequence::PerC, Sequence::PerCStar, Sequence::PerFStar] {
        if run.report.of(s).count() > 1 {
            say(out, format!("{}: errors strictly decreasing: {}", s.name(), run.report.strictly_decreasing(s)));
        }
    }
    say(out, format!("wrote {} and {} heatmaps to {}", report_path.display(), grids.len(), display(dir)));
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
