//! CSV and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::{DiagnosticsRecord, WindowNorm};
use crate::error::Result;
use crate::linear::Portrait;

pub const DIAGNOSTICS_COLUMNS: [&str; 9] = [
    "t",
    "energy_E",
    "energy_space_norm",
    "h1",
    "h32",
    "h2",
    "damping_integrand",
    "l12",
    "lyapunov_quantity",
];

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

pub fn write_diagnostics_csv<W: Write>(out: W, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_COLUMNS)?;
    for r in records {
        w.write_record([
            num(r.t),
            num(r.energy_e),
            num(r.energy_space_norm),
            num(r.h1),
            num(r.h32),
            num(r.h2),
            num(r.damping_integrand),
            num(r.l12),
            opt(r.lyapunov_quantity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_windows_csv<W: Write>(out: W, windows: &[WindowNorm]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_start", "t_end", "kind", "value"])?;
    for x in windows {
        w.write_record([num(x.t_start), num(x.t_end), x.kind.label().to_string(), num(x.value)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_portrait_csv<W: Write>(out: W, portrait: &Portrait) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mu",
        "re_lambda_plus",
        "im_lambda_plus",
        "re_lambda_minus",
        "im_lambda_minus",
        "repeated",
    ])?;
    for p in &portrait.pairs {
        w.write_record([
            num(p.mu),
            num(p.lambda_plus.re),
            num(p.lambda_plus.im),
            num(p.lambda_minus.re),
            num(p.lambda_minus.im),
            p.repeated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
