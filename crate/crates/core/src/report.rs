//! Report types and the CSV/JSON writers behind every artifact.
//!
//! CSV files start with a header block of `# `-prefixed lines echoing the
//! software version, the seed and the resolved config, followed by the column
//! header and data rows. Nothing time-dependent is written, so identical
//! inputs give byte-identical files.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TELEMETRY_HEADER: &str = "generation,f_top,x_top,log_g,z_is_zero,h_value,n1_holds";
pub const SCAN_HEADER: &str = "μ,lambda,gap,mu_pow_d_times_gap,is_exception";
pub const SWEEP_HEADER: &str =
    "n,mu,lambda,ratio,replicates,successes,mean_generations,ci_low,ci_high,in_hypothesis";
pub const RUN_HEADER: &str = "replicate,generations,evaluations,success";

/// A drift estimate compared with a bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftReport {
    pub quantity: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub pass: bool,
}

impl DriftReport {
    /// Estimate expected to stay below `bound`; interval is `± sigma · se`.
    pub fn upper(quantity: &str, estimate: f64, se: f64, bound: f64, sigma: f64) -> Self {
        Self {
            quantity: quantity.into(),
            estimate,
            ci_low: estimate - sigma * se,
            ci_high: estimate + sigma * se,
            bound,
            pass: estimate <= bound + sigma * se,
        }
    }

    /// Estimate expected to stay above `bound`.
    pub fn lower(quantity: &str, estimate: f64, se: f64, bound: f64, sigma: f64) -> Self {
        Self {
            quantity: quantity.into(),
            estimate,
            ci_low: estimate - sigma * se,
            ci_high: estimate + sigma * se,
            bound,
            pass: estimate >= bound - sigma * se,
        }
    }
}

/// An empirical statistic compared with a stated bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub lemma: String,
    pub hypothesis_ok: bool,
    pub parameters: serde_json::Value,
    pub empirical: f64,
    pub standard_error: f64,
    pub bound: f64,
    pub pass: bool,
    pub samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection_rate: Option<f64>,
}

impl BoundReport {
    /// Whether this report should count against the exit status: only
    /// in-hypothesis failures do.
    pub fn is_failure(&self) -> bool {
        self.hypothesis_ok && !self.pass
    }
}

/// Writes the `# ` header block: version, seed and a TOML config echo.
pub fn write_header<W: Write>(out: &mut W, seed: u64, config_toml: &str) -> io::Result<()> {
    writeln!(out, "# comma-ea {VERSION}")?;
    writeln!(out, "# seed = {seed}")?;
    for line in config_toml.lines() {
        if line.is_empty() {
            writeln!(out, "#")?;
        } else {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

/// The data section of a CSV artifact: everything after the header block.
pub fn data_section(csv: &str) -> String {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Formats a float so that it round-trips and never depends on locale.
pub fn fmt_f64(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
