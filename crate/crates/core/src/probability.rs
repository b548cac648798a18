//! Finite-alphabet probability primitives.
//!
//! Every information quantity is measured in nats. A divergence that is
//! unbounded (support mismatch) is reported as `f64::INFINITY` rather than as
//! an error, so callers such as the channel condition checks can inspect it.

use std::ops::Index;

use thiserror::Error;

/// Tolerance on the total mass of a pmf.
pub const PMF_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbabilityError {
    #[error("alphabet mismatch: {left} vs {right} symbols")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("empty alphabet")]
    Empty,
    #[error("weight {index} is {value}, expected a finite non-negative number")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1 within {PMF_TOLERANCE:e}")]
    NotNormalized { sum: f64 },
    #[error("mixing weight {0} outside [0, 1]")]
    MixingWeight(f64),
    #[error("joint pmf has {rows} rows but {laws} conditional laws were supplied")]
    RowCount { rows: usize, laws: usize },
}

/// Which argument of `chi_squared` sits in the denominator.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum DenomMode {
    /// `Σ (p - q)² / p`.
    #[default]
    First,
    /// `Σ (p - q)² / q`, the Pearson form.
    Second,
}

impl DenomMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DenomMode::First => "first",
            DenomMode::Second => "second",
        }
    }
}

impl std::fmt::Display for DenomMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DenomMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" | "first-arg" => Ok(DenomMode::First),
            "second" | "second-arg" => Ok(DenomMode::Second),
            other => Err(format!(
                "unknown denominator mode `{other}` (expected first|second)"
            )),
        }
    }
}

/// A probability mass function over `{0, .., len-1}`.
///
/// Construction never renormalizes: inputs whose mass is off by more than
/// [`PMF_TOLERANCE`] are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    pub fn new(weights: Vec<f64>) -> Result<Self, ProbabilityError> {
        if weights.is_empty() {
            return Err(ProbabilityError::Empty);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ProbabilityError::InvalidWeight { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            return Err(ProbabilityError::NotNormalized { sum });
        }
        Ok(Pmf(weights))
    }

    /// Point mass on `symbol`.
    pub fn point(len: usize, symbol: usize) -> Self {
        assert!(
            symbol < len,
            "symbol {symbol} outside alphabet of size {len}"
        );
        let mut w = vec![0.0; len];
        w[symbol] = 1.0;
        Pmf(w)
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        Pmf(vec![1.0 / len as f64; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.0
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
    }

    /// Expectation of `f` under this pmf.
    pub fn expect(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| w * f(i))
            .sum()
    }
}

impl Index<usize> for Pmf {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn same_alphabet(p: &Pmf, q: &Pmf) -> Result<(), ProbabilityError> {
    if p.len() != q.len() {
        return Err(ProbabilityError::AlphabetMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// `D(p‖q)` in nats. Infinite when `p` is not absolutely continuous w.r.t. `q`.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64, ProbabilityError> {
    same_alphabet(p, q)?;
    Ok(kl_unchecked(p.weights(), q.weights()))
}

pub(crate) fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        acc += pi * (pi / qi).ln();
    }
    // Rounding can leave a tiny negative residue for p ≈ q.
    acc.max(0.0)
}

/// Chi-squared distance between `p` and `q`, with the denominator chosen by `mode`.
///
/// A zero denominator entry with a non-zero numerator yields infinity.
pub fn chi_squared(p: &Pmf, q: &Pmf, mode: DenomMode) -> Result<f64, ProbabilityError> {
    same_alphabet(p, q)?;
    Ok(chi_squared_unchecked(p.weights(), q.weights(), mode))
}

pub(crate) fn chi_squared_unchecked(p: &[f64], q: &[f64], mode: DenomMode) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let diff = pi - qi;
        let denom = match mode {
            DenomMode::First => pi,
            DenomMode::Second => qi,
        };
        if denom == 0.0 {
            if diff != 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        acc += diff * diff / denom;
    }
    acc
}

/// `alpha·alt + (1-alpha)·base`.
pub fn binary_mixture(base: &Pmf, alt: &Pmf, alpha: f64) -> Result<Pmf, ProbabilityError> {
    same_alphabet(base, alt)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ProbabilityError::MixingWeight(alpha));
    }
    Ok(Pmf(mix_unchecked(base.weights(), alt.weights(), alpha)))
}

pub(crate) fn mix_unchecked(base: &[f64], alt: &[f64], alpha: f64) -> Vec<f64> {
    base.iter()
        .zip(alt)
        .map(|(&b, &a)| alpha * a + (1.0 - alpha) * b)
        .collect()
}

/// A pmf over a product alphabet `R × C`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl JointPmf {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self, ProbabilityError> {
        if weights.len() != rows * cols {
            return Err(ProbabilityError::AlphabetMismatch {
                left: weights.len(),
                right: rows * cols,
            });
        }
        let flat = Pmf::new(weights)?;
        Ok(JointPmf {
            rows,
            cols,
            weights: flat.into_weights(),
        })
    }

    /// Joint law `P(r) · P(c | r)`.
    pub fn from_conditionals(
        marginal: &Pmf,
        conditionals: &[Pmf],
    ) -> Result<Self, ProbabilityError> {
        if marginal.len() != conditionals.len() {
            return Err(ProbabilityError::RowCount {
                rows: marginal.len(),
                laws: conditionals.len(),
            });
        }
        let cols = conditionals[0].len();
        let mut weights = Vec::with_capacity(marginal.len() * cols);
        for (r, cond) in conditionals.iter().enumerate() {
            if cond.len() != cols {
                return Err(ProbabilityError::AlphabetMismatch {
                    left: cond.len(),
                    right: cols,
                });
            }
            weights.extend(cond.weights().iter().map(|&c| marginal[r] * c));
        }
        Ok(JointPmf {
            rows: marginal.len(),
            cols,
            weights,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.cols + c]
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.weights
            .chunks(self.cols)
            .map(|row| row.iter().sum())
            .collect()
    }
}

/// `I(X;Y|T)` for a joint law of `(T, X)` and a channel `x -> rows[x]`.
pub fn conditional_mutual_information(
    p_tx: &JointPmf,
    rows: &[Pmf],
) -> Result<f64, ProbabilityError> {
    if rows.len() != p_tx.cols() {
        return Err(ProbabilityError::RowCount {
            rows: p_tx.cols(),
            laws: rows.len(),
        });
    }
    let y_len = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != y_len) {
        return Err(ProbabilityError::AlphabetMismatch {
            left: bad.len(),
            right: y_len,
        });
    }
    let rows: Vec<&[f64]> = rows.iter().map(Pmf::weights).collect();
    let mut total = 0.0;
    for t in 0..p_tx.rows() {
        let cond: Vec<f64> = (0..p_tx.cols()).map(|x| p_tx.get(t, x)).collect();
        total += mutual_information_weighted(&cond, &rows);
    }
    Ok(total)
}

/// `Σ_x w(x) D(rows[x] ‖ Σ_x' w(x') rows[x'] / Σ w)`: the mutual information
/// `I(X;Y)` scaled by the total weight `Σ w`.
pub(crate) fn mutual_information_weighted(weights: &[f64], rows: &[&[f64]]) -> f64 {
    let mass: f64 = weights.iter().sum();
    if mass <= 0.0 {
        return 0.0;
    }
    let y_len = rows[0].len();
    let mut output = vec![0.0; y_len];
    for (&w, row) in weights.iter().zip(rows) {
        if w > 0.0 {
            for (o, &r) in output.iter_mut().zip(row.iter()) {
                *o += w / mass * r;
            }
        }
    }
    let mut acc = 0.0;
    for (&w, row) in weights.iter().zip(rows) {
        if w > 0.0 {
            acc += w * kl_unchecked(row, &output);
        }
    }
    acc
}
