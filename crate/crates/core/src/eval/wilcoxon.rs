//! Wilcoxon signed-rank test for paired samples.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    /// Exact for at most 12 non-zero differences, normal otherwise.
    Auto,
    /// Enumerates all sign assignments of the observed ranks.
    Exact,
    /// Normal approximation with tie and continuity correction.
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    /// Non-zero differences used.
    pub n: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Two-sided test with the method chosen by sample size.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_with(a, b, WilcoxonMethod::Auto)
}

/// Midranks of `|d|`, 1-based.
fn midranks(abs: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0.0; abs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && abs[order[end]] == abs[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Two-sided test with an explicit method. Zero differences are dropped;
/// at least five non-zero differences must remain.
pub fn wilcoxon_with(a: &[f64], b: &[f64], method: WilcoxonMethod) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|v| *v != 0.0)
        .collect();
    if d.is_empty() {
        return Err(Error::DegenerateComparison(
            "all paired differences are zero".into(),
        ));
    }
    let n = d.len();
    if n < 5 {
        return Err(Error::DegenerateComparison(format!(
            "{n} non-zero differences; at least 5 are needed"
        )));
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let w_plus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);

    let method = match method {
        WilcoxonMethod::Auto if n <= EXACT_MAX_N => WilcoxonMethod::Exact,
        WilcoxonMethod::Auto => WilcoxonMethod::Normal,
        m => m,
    };
    let p_value = match method {
        WilcoxonMethod::Exact => {
            if n > 24 {
                return Err(Error::Capacity(format!(
                    "exact enumeration of 2^{n} sign assignments"
                )));
            }
            // Count assignments at least as extreme as the observed sum in
            // either tail. Midranks are multiples of 0.5, so sums compare
            // exactly after doubling.
            let doubled: Vec<i64> = ranks.iter().map(|r| (r * 2.0).round() as i64).collect();
            let obs = (w_plus * 2.0).round() as i64;
            let (mut low, mut high) = (0u64, 0u64);
            for mask in 0u32..1 << n {
                let s: i64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| doubled[i]).sum();
                low += u64::from(s <= obs);
                high += u64::from(s >= obs);
            }
            let count = (1u64 << n) as f64;
            (2.0 * low.min(high) as f64 / count).min(1.0)
        }
        _ => {
            let mean = total / 2.0;
            let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
            let var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0 - tie_term;
            let mut diff = w_plus - mean;
            diff -= 0.5 * diff.signum();
            let z = diff / var.sqrt();
            // Two-sided normal tail: 2 * (1 - Phi(|z|)) = erfc(|z| / sqrt 2).
            erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
        }
    };
    Ok(WilcoxonResult {
        statistic,
        n,
        p_value,
        method,
    })
}
