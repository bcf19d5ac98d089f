//! CSV and PGM writers. CSVs are UTF-8 with LF line endings and a header
//! row; lines starting with `#` before the header are comments. Floats are
//! written in shortest round-trip form, so equal inputs give equal bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use perdyn_core::param_loci::{Divisor, ParamPolynomial};
use perdyn_core::potentials::{ConvergenceReport, PotentialGrid};

use crate::{io_err, CliError};

/// Largest PGM sample value.
pub const PGM_MAX: u32 = 65535;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn csv_writer(path: &Path, comments: &[String]) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let mut w = create(path)?;
    for c in comments {
        writeln!(w, "# {c}").map_err(io_err(path))?;
    }
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.display().to_string(), source: e.into() }
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(io_err(path))
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
fn f(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `re, im, multiplicity, residual`, every root of the divisor sorted by
/// real then imaginary part.
pub fn write_divisor_csv(path: &Path, div: &Divisor, comments: &[String]) -> Result<(), CliError> {
    let mut w = csv_writer(path, comments)?;
    let e = csv_err(path);
    w.write_record(["re", "im", "multiplicity", "residual"]).map_err(e)?;
    let mut rows: Vec<_> = div.all().collect();
    rows.sort_by(|a, b| a.root.re.total_cmp(&b.root.re).then(a.root.im.total_cmp(&b.root.im)));
    for r in rows {
        w.write_record([f(r.root.re), f(r.root.im), r.multiplicity.to_string(), f(r.residual)])
            .map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// Coefficients in ascending degree: `k, re, im, exp2, exact, exact_re,
/// exact_im` with value `(re + i·im)·2^exp2`. The exact columns hold the
/// Gaussian-integer coefficient when the polynomial is exact and are empty
/// otherwise.
pub fn write_coefficients_csv(path: &Path, p: &ParamPolynomial, comments: &[String]) -> Result<(), CliError> {
    let mut w = csv_writer(path, comments)?;
    w.write_record(["k", "re", "im", "exp2", "exact", "exact_re", "exact_im"]).map_err(csv_err(path))?;
    let exact = p.exact();
    for (k, c) in p.coeffs().iter().enumerate() {
        let m = c.mantissa();
        let (er, ei) = match exact.and_then(|x| x.coeffs().get(k)) {
            Some(g) => (g.re.to_string(), g.im.to_string()),
            None if exact.is_some() => ("0".into(), "0".into()),
            None => (String::new(), String::new()),
        };
        w.write_record([k.to_string(), f(m.re), f(m.im), c.exponent().to_string(), exact.is_some().to_string(), er, ei])
            .map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// `re, im, value` in row-major order from the bottom row up.
pub fn write_grid_csv(path: &Path, grid: &PotentialGrid) -> Result<(), CliError> {
    let mut w = csv_writer(path, &[])?;
    w.write_record(["re", "im", "value"]).map_err(csv_err(path))?;
    for (k, v) in grid.values.iter().enumerate() {
        let l = grid.spec.at(k);
        w.write_record([f(l.re), f(l.im), f(*v)]).map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn write_report_csv(path: &Path, report: &ConvergenceReport, comments: &[String]) -> Result<(), CliError> {
    let mut w = csv_writer(path, comments)?;
    w.write_record(["sequence", "n", "l1", "sup_exterior", "exterior_cells", "root_count", "normalization", "clipped"])
        .map_err(csv_err(path))?;
    for r in &report.rows {
        w.write_record([
            r.sequence.name().to_string(),
            r.n.to_string(),
            f(r.l1),
            f(r.sup_exterior),
            r.exterior_cells.to_string(),
            r.root_count.to_string(),
            f(r.normalization),
            r.clipped.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// Generic table with a header row.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>], comments: &[String]) -> Result<(), CliError> {
    let mut w = csv_writer(path, comments)?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// Sidecar path: the image path with its extension replaced by `meta`.
pub fn meta_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("meta")
}

/// Sample for a value, mapping `[min, max]` linearly onto `0..=65535`;
/// non-finite values map to 0.
pub fn quantize(v: f64, min: f64, max: f64) -> u32 {
    if !v.is_finite() || max <= min {
        return 0;
    }
    (((v - min) / (max - min)).clamp(0.0, 1.0) * PGM_MAX as f64).round() as u32
}

/// 16-bit plain PGM with the top row at `im_max`, plus a `.meta` sidecar
/// holding the exact min/max and the grid geometry.
pub fn write_pgm(path: &Path, grid: &PotentialGrid, label: &str) -> Result<(), CliError> {
    let spec = grid.spec;
    let (min, max) = grid.min_max();
    let mut w = create(path)?;
    let mut out = format!("P2\n# {label}\n{} {}\n{PGM_MAX}\n", spec.nx, spec.ny);
    for j in (0..spec.ny).rev() {
        let mut line = String::new();
        for i in 0..spec.nx {
            let s = quantize(grid.value(i, j), min, max).to_string();
            if !line.is_empty() && line.len() + 1 + s.len() > 70 {
                out.push_str(&line);
                out.push('\n');
                line.clear();
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&s);
        }
        out.push_str(&line);
        out.push('\n');
    }
    w.write_all(out.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))?;

    let r = spec.region;
    let meta = format!(
        "label={label}\nmin={}\nmax={}\nmaxval={PGM_MAX}\nnx={}\nny={}\nre_min={}\nre_max={}\nim_min={}\nim_max={}\n\
         first_row=im_max\nclipped_cells={}\nvalue=min+(max-min)*sample/maxval\n",
        f(min),
        f(max),
        spec.nx,
        spec.ny,
        f(r.re_min),
        f(r.re_max),
        f(r.im_min),
        f(r.im_max),
        grid.clipped_count()
    );
    let mp = meta_path(path);
    let mut m = create(&mp)?;
    m.write_all(meta.as_bytes()).map_err(io_err(&mp))?;
    m.flush().map_err(io_err(&mp))
}
