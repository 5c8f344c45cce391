//! Singular spectrum analysis.
//!
//! A series of length `N` is embedded into the `L x K` trajectory (Hankel)
//! matrix `Y` with `K = N - L + 1`. The eigenvectors `U_i` of the lag
//! covariance `S = Y Y^T` give the elementary matrices
//! `Y_i = sqrt(lambda_i) U_i V_i^T = U_i U_i^T Y`, which diagonal averaging
//! turns back into additive components of the original series.
//!
//! Components are computed from the projection `U_i^T Y` rather than by
//! dividing through `sqrt(lambda_i)`, so the sum over all eigenvectors is the
//! identity to machine precision even when trailing eigenvalues are noise.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelKind, TimeSeries};

/// Dense row-major matrix used for trajectory matrices and their
/// elementary terms.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    sample_rate_hz: f64,
}

impl TrajectoryMatrix {
    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::invalid("matrix must be non-empty"));
        }
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
            sample_rate_hz: crate::signal::DEFAULT_SAMPLE_RATE_HZ,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Column `c` as a vector.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

/// Lag-embeds `ts` with window length `window_len`: column `j` is
/// `[x_j, ..., x_{j+L-1}]`.
pub fn embed(ts: &TimeSeries, window_len: usize) -> Result<TrajectoryMatrix> {
    let n = ts.len();
    check_window(window_len, n)?;
    let k = n - window_len + 1;
    let x = ts.values();
    let mut data = Vec::with_capacity(window_len * k);
    for r in 0..window_len {
        data.extend_from_slice(&x[r..r + k]);
    }
    Ok(TrajectoryMatrix {
        rows: window_len,
        cols: k,
        data,
        sample_rate_hz: ts.sample_rate_hz(),
    })
}

fn check_window(window_len: usize, n: usize) -> Result<()> {
    if window_len < 2 || window_len > n {
        return Err(Error::invalid(format!(
            "window length {window_len} outside [2, {n}]"
        )));
    }
    Ok(())
}

/// Averages each anti-diagonal `r + c = n` of an `L x K` matrix into a series
/// of length `L + K - 1`.
pub fn diagonal_average(m: &TrajectoryMatrix) -> TimeSeries {
    let len = m.rows + m.cols - 1;
    let mut sums = vec![0.0; len];
    for r in 0..m.rows {
        let row = &m.data[r * m.cols..(r + 1) * m.cols];
        for (c, v) in row.iter().enumerate() {
            sums[r + c] += v;
        }
    }
    for (n, s) in sums.iter_mut().enumerate() {
        *s /= anti_diagonal_len(n, m.rows, m.cols) as f64;
    }
    TimeSeries::zeros(len, m.sample_rate_hz).with_values(sums)
}

fn anti_diagonal_len(n: usize, rows: usize, cols: usize) -> usize {
    let lo = n.saturating_sub(cols - 1);
    let hi = n.min(rows - 1);
    hi - lo + 1
}

/// How many leading components of a channel to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CountRepr", into = "CountRepr")]
pub enum ComponentCount {
    Fixed(usize),
    /// Singular-value hard threshold, see [`hard_threshold_rank`].
    Auto,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CountRepr {
    Number(usize),
    Word(String),
}

impl TryFrom<CountRepr> for ComponentCount {
    type Error = String;

    fn try_from(r: CountRepr) -> std::result::Result<Self, String> {
        match r {
            CountRepr::Number(0) => Err("component count must be >= 1".into()),
            CountRepr::Number(n) => Ok(ComponentCount::Fixed(n)),
            CountRepr::Word(w) if w.eq_ignore_ascii_case("auto") => Ok(ComponentCount::Auto),
            CountRepr::Word(w) => Err(format!("expected a count or \"auto\", got {w:?}")),
        }
    }
}

impl From<ComponentCount> for CountRepr {
    fn from(c: ComponentCount) -> Self {
        match c {
            ComponentCount::Fixed(n) => CountRepr::Number(n),
            ComponentCount::Auto => CountRepr::Word("auto".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsaConfig {
    pub window_len: usize,
    /// Leading components kept per channel. For skin conductance the count
    /// applies to the phasic part; the tonic level is always appended as one
    /// extra component.
    pub kept_components: BTreeMap<ChannelKind, ComponentCount>,
}

impl Default for SsaConfig {
    fn default() -> Self {
        let kept_components = ChannelKind::ALL
            .into_iter()
            .map(|c| {
                let n = match c {
                    ChannelKind::HEog | ChannelKind::VEog | ChannelKind::Resp => 2,
                    ChannelKind::ZEmg | ChannelKind::Scr | ChannelKind::Temp => 1,
                    ChannelKind::TEmg => 3,
                    ChannelKind::Ppg => 4,
                };
                (c, ComponentCount::Fixed(n))
            })
            .collect();
        Self {
            window_len: 12,
            kept_components,
        }
    }
}

impl SsaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 {
            return Err(Error::Config("SSA window_len must be >= 2".into()));
        }
        for ch in ChannelKind::ALL {
            match self.kept_components.get(&ch) {
                None => return Err(Error::Config(format!("kept_components missing {ch}"))),
                Some(ComponentCount::Fixed(n)) if *n > self.window_len => {
                    return Err(Error::Config(format!(
                        "{ch}: {n} kept components exceed window length {}",
                        self.window_len
                    )))
                }
                Some(ComponentCount::Fixed(0)) => {
                    return Err(Error::Config(format!("{ch}: kept components must be >= 1")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn count(&self, ch: ChannelKind) -> ComponentCount {
        self.kept_components
            .get(&ch)
            .copied()
            .unwrap_or(ComponentCount::Auto)
    }

    /// True when every channel has a fixed count.
    pub fn is_fixed(&self) -> bool {
        ChannelKind::ALL
            .iter()
            .all(|c| matches!(self.count(*c), ComponentCount::Fixed(_)))
    }
}

/// Elementary components of one series, ordered by singular value.
#[derive(Clone, Debug, PartialEq)]
pub struct SsaDecomposition {
    /// Diagonally averaged elementary components, `rank` of them.
    pub components: Vec<TimeSeries>,
    /// All `min(L, K)` singular values, descending.
    pub singular_values: Vec<f64>,
    pub window_len: usize,
    pub rank: usize,
    source_len: usize,
    sample_rate_hz: f64,
}

impl SsaDecomposition {
    /// Dimensions `(L, K)` of the trajectory matrix.
    pub fn trajectory_shape(&self) -> (usize, usize) {
        (self.window_len, self.source_len - self.window_len + 1)
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    /// Components `1..=count` (1-based), padded with zero series when the
    /// trajectory matrix has lower rank than requested: an eigentriple with
    /// a zero singular value contributes nothing.
    pub fn leading(&self, count: usize) -> Vec<TimeSeries> {
        (0..count)
            .map(|i| {
                self.components
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| TimeSeries::zeros(self.source_len, self.sample_rate_hz))
            })
            .collect()
    }

    /// Resolves a component count, evaluating the hard threshold for `Auto`.
    pub fn kept_count(&self, count: ComponentCount) -> usize {
        match count {
            ComponentCount::Fixed(n) => n,
            ComponentCount::Auto => {
                let (l, k) = self.trajectory_shape();
                hard_threshold_rank(&self.singular_values, l, k)
            }
        }
    }
}

/// Relative eigenvalue cutoff below which an eigentriple counts as zero.
const RANK_TOLERANCE: f64 = 1e-12;

/// Decomposes `ts` into its elementary SSA components.
pub fn decompose(ts: &TimeSeries, window_len: usize) -> Result<SsaDecomposition> {
    let n = ts.len();
    check_window(window_len, n)?;
    let l = window_len;
    let k = n - l + 1;
    let x = ts.values();

    // Lag covariance S = Y Y^T, S[a][b] = sum_c x[a + c] x[b + c].
    let mut s = DMatrix::<f64>::zeros(l, l);
    for a in 0..l {
        for b in a..l {
            let v: f64 = x[a..a + k].iter().zip(&x[b..b + k]).map(|(p, q)| p * q).sum();
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite lag covariance".into()));
    }
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("eigen-decomposition did not converge".into()))?;

    let mut triples: Vec<(f64, Vec<f64>, f64)> = (0..l)
        .map(|i| {
            let lambda = eig.eigenvalues[i].max(0.0);
            let u: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let comp = elementary_component(x, &u, l, k);
            let energy = comp.iter().map(|v| v * v).sum::<f64>();
            (lambda, comp, energy)
        })
        .collect();
    // Stable sort keeps solver order for exact ties after the energy key.
    triples.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.2.total_cmp(&a.2)));

    // The lag covariance has rank at most min(L, K).
    triples.truncate(l.min(k));
    let lambda_max = triples.first().map_or(0.0, |t| t.0);
    let rank = triples
        .iter()
        .filter(|t| lambda_max > 0.0 && t.0 > RANK_TOLERANCE * lambda_max)
        .count();

    let singular_values = triples.iter().map(|t| t.0.sqrt()).collect();
    let components = triples
        .into_iter()
        .take(rank)
        .map(|t| ts.with_values(t.1))
        .collect();
    Ok(SsaDecomposition {
        components,
        singular_values,
        window_len: l,
        rank,
        source_len: n,
        sample_rate_hz: ts.sample_rate_hz(),
    })
}

/// Diagonal average of `u u^T Y` without materializing the matrix.
fn elementary_component(x: &[f64], u: &[f64], l: usize, k: usize) -> Vec<f64> {
    // w[c] = sum_r u[r] * Y[r][c]
    let mut w = vec![0.0; k];
    for (r, ur) in u.iter().enumerate() {
        for (wc, xv) in w.iter_mut().zip(&x[r..r + k]) {
            *wc += ur * xv;
        }
    }
    let n = l + k - 1;
    let mut out = vec![0.0; n];
    for (r, ur) in u.iter().enumerate() {
        for (o, wc) in out[r..r + k].iter_mut().zip(&w) {
            *o += ur * wc;
        }
    }
    for (i, o) in out.iter_mut().enumerate() {
        *o /= anti_diagonal_len(i, l, k) as f64;
    }
    out
}

/// Number of singular values above the hard threshold
/// `omega(beta) * median(sigma)` for a `rows x cols` matrix with unknown
/// noise level, where `beta = min/max` aspect ratio and
/// `omega(beta) = 0.56 beta^3 - 0.95 beta^2 + 1.82 beta + 1.43`.
pub fn hard_threshold_rank(singular_values: &[f64], rows: usize, cols: usize) -> usize {
    if singular_values.is_empty() || rows == 0 || cols == 0 {
        return 0;
    }
    let beta = rows.min(cols) as f64 / rows.max(cols) as f64;
    let omega = 0.56 * beta.powi(3) - 0.95 * beta.powi(2) + 1.82 * beta + 1.43;
    let mut sorted = singular_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let tau = omega * median;
    singular_values.iter().filter(|&&s| s > tau).count()
}

/// Sums the selected components (1-based indices).
pub fn reconstruct_selected(decomp: &SsaDecomposition, indices: &[usize]) -> Result<TimeSeries> {
    let mut out = vec![0.0; decomp.source_len];
    for &i in indices {
        if i == 0 || i > decomp.rank {
            return Err(Error::invalid(format!(
                "component index {i} outside [1, {}]",
                decomp.rank
            )));
        }
        for (o, v) in out.iter_mut().zip(decomp.components[i - 1].values()) {
            *o += v;
        }
    }
    Ok(TimeSeries::zeros(decomp.source_len, decomp.sample_rate_hz).with_values(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::from_values(v).unwrap()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn embed_small() {
        let m = embed(&ts(vec![1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 3));
        assert_eq!(m.column(0), vec![1.0, 2.0]);
        assert_eq!(m.column(1), vec![2.0, 3.0]);
        assert_eq!(m.column(2), vec![3.0, 4.0]);
    }

    #[test]
    fn embed_full_window_and_bounds() {
        let x = vec![5.0, -1.0, 2.0];
        let m = embed(&ts(x.clone()), 3).unwrap();
        assert_eq!(m.cols(), 1);
        assert_eq!(m.column(0), x);
        assert!(embed(&ts(x.clone()), 1).is_err());
        assert!(embed(&ts(x), 4).is_err());
    }

    #[test]
    fn embed_is_hankel() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let m = embed(&ts(x), 7).unwrap();
        for i in 1..m.rows() {
            for j in 0..m.cols() - 1 {
                assert_eq!(m.get(i, j), m.get(i - 1, j + 1));
            }
        }
    }

    #[test]
    fn diagonal_average_inverts_embedding() {
        let x: Vec<f64> = (0..25).map(|i| (i as f64).sqrt() - 2.0).collect();
        let m = embed(&ts(x.clone()), 6).unwrap();
        for (a, b) in diagonal_average(&m).values().iter().zip(&x) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
        let one = TrajectoryMatrix::from_rows(&[vec![3.5]]).unwrap();
        assert_eq!(diagonal_average(&one).values(), &[3.5]);
    }

    #[test]
    fn diagonal_average_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = TrajectoryMatrix::from_rows(&rows).unwrap();
        let got = diagonal_average(&m);
        for n in 0..6 {
            let entries: Vec<f64> = (0..3)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .filter(|(i, j)| i + j == n)
                .map(|(i, j)| rows[i][j])
                .collect();
            let mean = entries.iter().sum::<f64>() / entries.len() as f64;
            assert_eq!(got.values()[n], mean);
        }
    }

    #[test]
    fn constant_signal_is_rank_one() {
        let x = vec![2.5; 200];
        let d = decompose(&ts(x.clone()), 12).unwrap();
        assert_eq!(d.rank, 1);
        assert!(rel_l2(d.components[0].values(), &x) < 1e-8);
    }

    #[test]
    fn sinusoid_energy_in_first_pair() {
        let x: Vec<f64> = (0..1024)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 37.0).sin())
            .collect();
        let d = decompose(&ts(x), 12).unwrap();
        let energy: Vec<f64> = d
            .singular_values
            .iter()
            .map(|s| s * s)
            .collect();
        let total: f64 = energy.iter().sum();
        assert!((energy[0] + energy[1]) / total > 0.999);
    }

    #[test]
    fn full_reconstruction_and_empty_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..300).map(|_| rng.random_range(-3.0..3.0)).collect();
        for l in [2, 5, 12, 32] {
            let d = decompose(&ts(x.clone()), l).unwrap();
            let all: Vec<usize> = (1..=d.rank).collect();
            let r = reconstruct_selected(&d, &all).unwrap();
            assert!(rel_l2(r.values(), &x) < 1e-8, "L = {l}");
        }
        let d = decompose(&ts(x), 12).unwrap();
        let z = reconstruct_selected(&d, &[]).unwrap();
        assert_eq!(z.len(), 300);
        assert!(z.values().iter().all(|&v| v == 0.0));
        assert!(reconstruct_selected(&d, &[0]).is_err());
        assert!(reconstruct_selected(&d, &[13]).is_err());
    }

    #[test]
    fn singular_values_descend() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..500).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = decompose(&ts(x), 12).unwrap();
        assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(d.singular_values.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(hard_threshold_rank(&[0.0; 12], 12, 7669), 0);
        let mut s = vec![0.01; 12];
        s[0] = 100.0;
        // beta = 12/7669, omega ~= 1.4328, tau ~= 0.0143
        assert_eq!(hard_threshold_rank(&s, 12, 7669), 1);
    }

    #[test]
    fn hard_threshold_scale_invariant() {
        let s = [9.0, 5.0, 3.1, 2.0, 1.2, 1.0, 0.9, 0.5, 0.4, 0.3, 0.2, 0.1];
        let base = hard_threshold_rank(&s, 12, 1000);
        for c in [1e-6, 0.3, 7.0, 1e8] {
            let scaled: Vec<f64> = s.iter().map(|v| v * c).collect();
            assert_eq!(hard_threshold_rank(&scaled, 12, 1000), base);
        }
    }

    #[test]
    fn leading_pads_with_zeros() {
        let d = decompose(&ts(vec![1.0; 50]), 4).unwrap();
        let comps = d.leading(3);
        assert_eq!(comps.len(), 3);
        assert!(comps[2].values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn component_count_serde() {
        let c: BTreeMap<String, ComponentCount> =
            toml::from_str("a = 3\nb = \"auto\"").unwrap();
        assert_eq!(c["a"], ComponentCount::Fixed(3));
        assert_eq!(c["b"], ComponentCount::Auto);
        assert!(toml::from_str::<BTreeMap<String, ComponentCount>>("a = 0").is_err());
    }
}
