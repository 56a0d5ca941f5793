//! Plot data and tables for fitted effects and coverage distributions.
//!
//! Nothing here renders images; every artifact is a small text file that an
//! external plotter can consume.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::panel::Mode;
use crate::regress::FitResult;
use crate::sentiment::Polarity;

pub const EFFECTS_HEADER: &str = "mode,polarity,w,x,beta,ci_lo,ci_hi";
pub const HIST_HEADER: &str = "bin,count";

/// Normal critical value for the 95% whiskers.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("more than one fit for mode {mode}, polarity {polarity}, w {w}")]
    DuplicateFit {
        mode: Mode,
        polarity: Polarity,
        w: u32,
    },
    #[error("bin width must be positive and finite, got {0}")]
    BadBin(f64),
    #[error("fixed-width histogram needs at least one value")]
    EmptyInput,
    #[error("integer-count histogram got non-integer value {0}")]
    NonInteger(f64),
    #[error("effects file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// One dot with its interval: `x = -w` for the pre-news estimate and
/// `x = +w` for the post-news estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectPlotRow {
    pub mode: Mode,
    pub polarity: Polarity,
    pub w: u32,
    pub x: i64,
    pub beta: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn effect_plot_data(fits: &[FitResult]) -> Result<Vec<EffectPlotRow>, ReportError> {
    let mut seen = BTreeSet::new();
    let mut rows = Vec::with_capacity(fits.len() * 2);
    for f in fits {
        if !seen.insert((f.mode, f.polarity, f.w)) {
            return Err(ReportError::DuplicateFit {
                mode: f.mode,
                polarity: f.polarity,
                w: f.w,
            });
        }
        for (x, beta, se) in [
            (-(f.w as i64), f.beta_pre, f.se_pre),
            (f.w as i64, f.beta_post, f.se_post),
        ] {
            rows.push(EffectPlotRow {
                mode: f.mode,
                polarity: f.polarity,
                w: f.w,
                x,
                beta,
                ci_lo: beta - Z_95 * se,
                ci_hi: beta + Z_95 * se,
            });
        }
    }
    rows.sort_by_key(|r| (r.x, r.mode, r.polarity));
    Ok(rows)
}

pub fn effects_csv(rows: &[EffectPlotRow]) -> String {
    let mut out = String::from(EFFECTS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.mode, r.polarity, r.w, r.x, r.beta, r.ci_lo, r.ci_hi
        );
    }
    out
}

pub fn parse_effects_csv(text: &str) -> Result<Vec<EffectPlotRow>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == EFFECTS_HEADER => {}
        _ => {
            return Err(ReportError::Parse {
                line: 1,
                reason: "missing header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let err = |reason: String| ReportError::Parse {
            line: i + 1,
            reason,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(e.to_string()));
        rows.push(EffectPlotRow {
            mode: f[0].parse().map_err(err)?,
            polarity: f[1].parse().map_err(err)?,
            w: f[2]
                .parse()
                .map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
            x: f[3]
                .parse()
                .map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
            beta: num(f[4])?,
            ci_lo: num(f[5])?,
            ci_hi: num(f[6])?,
        });
    }
    Ok(rows)
}

/// Three significant digits in scientific notation, e.g. `3.23×10^-1`.
pub fn sci3(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    format!("{mantissa}×10^{exp}")
}

/// Fixed-layout coefficient table: one block per (mode, polarity), one
/// column per window, rows beta_pre (se), beta_post (se), diff, p value, N.
pub fn coefficient_table(fits: &[FitResult]) -> String {
    let mut groups: BTreeMap<(Mode, Polarity), Vec<&FitResult>> = BTreeMap::new();
    for f in fits {
        groups.entry((f.mode, f.polarity)).or_default().push(f);
    }
    let mut out = String::new();
    for ((mode, polarity), mut cols) in groups {
        cols.sort_by_key(|f| f.w);
        let labels = ["", "beta_pre", "beta_post", "diff", "p value", "N"];
        let mut table: Vec<Vec<String>> = vec![labels.iter().map(|s| s.to_string()).collect()];
        for f in &cols {
            table.push(vec![
                format!("w = {}", f.w),
                format!("{} ({})", sci3(f.beta_pre), sci3(f.se_pre)),
                format!("{} ({})", sci3(f.beta_post), sci3(f.se_post)),
                sci3(f.diff),
                sci3(f.diff_p),
                f.n_obs.to_string(),
            ]);
        }
        let widths: Vec<usize> = table
            .iter()
            .map(|col| col.iter().map(|c| c.chars().count()).max().unwrap_or(0))
            .collect();
        let _ = writeln!(out, "mode = {mode}, polarity = {polarity}");
        for r in 0..labels.len() {
            let mut line = String::new();
            for (c, col) in table.iter().enumerate() {
                let cell = &col[r];
                let pad = widths[c] - cell.chars().count();
                if c == 0 {
                    line.push_str(cell);
                    line.push_str(&" ".repeat(pad));
                } else {
                    line.push_str("  ");
                    line.push_str(&" ".repeat(pad));
                    line.push_str(cell);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinRule {
    /// One bin per integer value between the minimum and maximum.
    IntegerCounts,
    /// Bins `[k*width, (k+1)*width)`.
    FixedWidth(f64),
}

/// `bin` is the integer value or the lower bin edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistBin {
    pub bin: f64,
    pub count: usize,
}

/// Contiguous histogram; counts always sum to `values.len()`.
pub fn histogram(values: &[f64], rule: BinRule) -> Result<Vec<HistBin>, ReportError> {
    let (width, keys): (f64, Vec<i64>) = match rule {
        BinRule::IntegerCounts => {
            let mut keys = Vec::with_capacity(values.len());
            for &v in values {
                if !v.is_finite() || v.fract() != 0.0 {
                    return Err(ReportError::NonInteger(v));
                }
                keys.push(v as i64);
            }
            (1.0, keys)
        }
        BinRule::FixedWidth(width) => {
            if !(width.is_finite() && width > 0.0) {
                return Err(ReportError::BadBin(width));
            }
            if values.is_empty() {
                return Err(ReportError::EmptyInput);
            }
            let mut keys = Vec::with_capacity(values.len());
            for &v in values {
                if !v.is_finite() {
                    return Err(ReportError::NonInteger(v));
                }
                keys.push(bin_index(v, width));
            }
            (width, keys)
        }
    };
    let (Some(&lo), Some(&hi)) = (keys.iter().min(), keys.iter().max()) else {
        return Ok(Vec::new());
    };
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for k in keys {
        counts[(k - lo) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistBin {
            bin: (lo + i as i64) as f64 * width,
            count,
        })
        .collect())
}

/// `floor(v / width)`, except that values sitting on a bin edge up to
/// rounding error go to the bin starting at that edge.
fn bin_index(v: f64, width: f64) -> i64 {
    let q = v / width;
    let r = q.round();
    if (q - r).abs() < 1e-9 * r.abs().max(1.0) {
        r as i64
    } else {
        q.floor() as i64
    }
}

/// Decimal places needed to print multiples of `width` cleanly.
fn decimals_for(width: f64) -> usize {
    (0..=12)
        .find(|&d| {
            let scaled = width * 10f64.powi(d as i32);
            (scaled - scaled.round()).abs() < 1e-9
        })
        .unwrap_or(12)
}

pub fn hist_csv(bins: &[HistBin], rule: BinRule) -> String {
    let decimals = match rule {
        BinRule::IntegerCounts => 0,
        BinRule::FixedWidth(w) => decimals_for(w),
    };
    let mut out = String::from(HIST_HEADER);
    out.push('\n');
    for b in bins {
        let _ = writeln!(out, "{:.*},{}", decimals, b.bin, b.count);
    }
    out
}
