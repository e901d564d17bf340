use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::MultiplierLaw;

/// Local result for one contrast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult {
    /// `"j2 - j1"`, 1-based.
    pub label: String,
    pub first: usize,
    pub second: usize,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<usize>,
    /// Unadjusted p-value, for the Bonferroni procedures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_raw: Option<f64>,
    pub p_adjusted: f64,
    pub rejected: bool,
    pub degenerate: bool,
}

/// Global decision. For the Bonferroni procedures the statistic is the
/// smallest unadjusted p-value and the critical value is `alpha / q`; for
/// the maximum tests both live on the scale of the maximum statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Resampling {
    MonteCarlo { samples: usize, seed: u64 },
    WildBootstrap { iterations: usize, law: MultiplierLaw, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: String,
    pub alpha: f64,
    pub weights: Vec<String>,
    pub contrasts: Vec<ContrastResult>,
    pub global: GlobalResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resampling: Option<Resampling>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl TestReport {
    pub fn rejections(&self) -> usize {
        self.contrasts.iter().filter(|c| c.rejected).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Formats a p-value the way the comparison table prints it.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

/// Plain-text table with one row per contrast and one p-value column per
/// report. Locally significant entries carry a trailing `*`.
pub fn text_table(reports: &[TestReport]) -> String {
    let mut out = String::new();
    let Some(first) = reports.first() else {
        return out;
    };
    let label_w = first.contrasts.iter().map(|c| c.label.len()).max().unwrap_or(0).max(8);
    let col_w: Vec<usize> = reports.iter().map(|r| r.method.len().max(8)).collect();

    let _ = write!(out, "{:>label_w$}", "");
    for (r, w) in reports.iter().zip(&col_w) {
        let _ = write!(out, "  {:>w$}", r.method);
    }
    out.push('\n');
    for (i, c) in first.contrasts.iter().enumerate() {
        let _ = write!(out, "{:>label_w$}", c.label);
        for (r, w) in reports.iter().zip(&col_w) {
            let cell = match r.contrasts.get(i) {
                Some(c) => format!("{}{}", format_p(c.p_adjusted), if c.rejected { "*" } else { " " }),
                None => "-".to_string(),
            };
            let _ = write!(out, "  {:>w$}", cell, w = w + 1);
        }
        out.push('\n');
    }
    let _ = write!(out, "{:>label_w$}", "rejected");
    for (r, w) in reports.iter().zip(&col_w) {
        let _ = write!(out, "  {:>w$} ", r.rejections());
    }
    out.push('\n');
    let _ = write!(out, "{:>label_w$}", "global");
    for (r, w) in reports.iter().zip(&col_w) {
        let cell = format!("{}{}", format_p(r.global.p_value), if r.global.rejected { "*" } else { " " });
        let _ = write!(out, "  {:>w$}", cell, w = w + 1);
    }
    out.push('\n');
    out
}

/// Long-format CSV: one row per (method, contrast).
pub fn write_csv<W: Write>(reports: &[TestReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "contrast", "statistic", "df", "p_raw", "p_adjusted", "rejected", "degenerate"])?;
    for r in reports {
        for c in &r.contrasts {
            w.write_record([
                r.method.clone(),
                c.label.clone(),
                c.statistic.to_string(),
                c.df.map(|d| d.to_string()).unwrap_or_default(),
                c.p_raw.map(|p| p.to_string()).unwrap_or_default(),
                c.p_adjusted.to_string(),
                c.rejected.to_string(),
                c.degenerate.to_string(),
            ])?;
        }
        w.write_record([
            r.method.clone(),
            "global".to_string(),
            r.global.statistic.to_string(),
            String::new(),
            String::new(),
            r.global.p_value.to_string(),
            r.global.rejected.to_string(),
            "false".to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
