//! Rate scans over detector positions and their CSV output.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, Experiment, ExperimentConfig, Process};
use crate::error::Error;
use crate::field::Position;
use crate::perturbation::{
    first_order_exponent, proportionality_exponent, rate_first_order, rate_second_order,
};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("at Q = {position:?}: {source}")]
    Evaluation { position: Vec<f64>, source: Error },
    #[error("exponent fit: {0}")]
    Fit(Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub position: Vec<f64>,
    pub w1: f64,
    pub w2: Option<f64>,
    pub psi_f_sq: f64,
    pub psi_g_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub dim: usize,
    pub rows: Vec<RateRow>,
}

fn evaluate(exp: &Experiment, q: &Position) -> crate::Result<RateRow> {
    let f = exp.primary();
    let psi_f = f.position_amplitude(q)?;
    let w1 = rate_first_order(f, exp.detector_spin, q, &exp.model)?.value;
    let (w2, psi_g_sq) = match &exp.process {
        Process::Single(_) => (None, None),
        Process::Pair(input) => (
            Some(rate_second_order(input, q, &exp.model)?.value),
            Some(input.g().position_amplitude(q)?.norm_sqr()),
        ),
    };
    Ok(RateRow {
        position: q.coords().to_vec(),
        w1,
        w2,
        psi_f_sq: psi_f.norm_sqr(),
        psi_g_sq,
    })
}

/// Evaluates the configured rates at every scan position. Rows come back in
/// scan order regardless of thread scheduling.
pub fn run_scan(config: &ExperimentConfig) -> Result<RateTable, ScanError> {
    let exp = config.build()?;
    let rows = exp
        .positions
        .par_iter()
        .map(|q| {
            evaluate(&exp, q).map_err(|source| ScanError::Evaluation {
                position: q.coords().to_vec(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RateTable {
        dim: exp.basis.dim(),
        rows,
    })
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn fmt_value(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes `x[,y,z],w1,w2,psi_f_sq,psi_g_sq` rows. Missing second-order
/// columns are left empty.
pub fn emit_csv<W: Write>(table: &RateTable, writer: W) -> Result<(), ScanError> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..table.dim)
        .map(|i| {
            AXES.get(i)
                .map_or_else(|| format!("q{i}"), |s| s.to_string())
        })
        .collect();
    header.extend(["w1", "w2", "psi_f_sq", "psi_g_sq"].map(String::from));
    out.write_record(&header)?;
    for row in &table.rows {
        let mut rec: Vec<String> = row.position.iter().copied().map(fmt_value).collect();
        rec.push(fmt_value(row.w1));
        rec.push(row.w2.map(fmt_value).unwrap_or_default());
        rec.push(fmt_value(row.psi_f_sq));
        rec.push(row.psi_g_sq.map(fmt_value).unwrap_or_default());
        out.write_record(&rec)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    /// Slope of `ln w1` against `ln |psi_f|^2`.
    pub first_order: f64,
    /// Slope of `ln w2` against `ln (|psi_f| |psi_g|)`, second-order runs only.
    pub second_order: Option<f64>,
}

/// Fits the intensity exponents over the configured scan positions.
pub fn run_exponent(config: &ExperimentConfig) -> Result<ExponentReport, ScanError> {
    let exp = config.build()?;
    let first_order =
        first_order_exponent(exp.primary(), exp.detector_spin, &exp.model, &exp.positions)
            .map_err(ScanError::Fit)?;
    let second_order = match &exp.process {
        Process::Single(_) => None,
        Process::Pair(input) => Some(
            proportionality_exponent(input, &exp.model, &exp.positions).map_err(ScanError::Fit)?,
        ),
    };
    Ok(ExponentReport {
        first_order,
        second_order,
    })
}
