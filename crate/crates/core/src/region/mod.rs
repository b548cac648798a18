//! Achievable `(r1, r2, k)` region: bound evaluation, the convex-mix
//! construction, and optimization over time-sharing inputs.
//!
//! All three bounds depend on an input only through four expectations
//! ([`BoundTerms`]); `r1` and `k` are ratios that are homogeneous of degree
//! zero in the intensity vector.

mod capacity;
pub mod optimizer;
pub mod search;
mod solver;

use thiserror::Error;

use crate::channel::{ChannelError, DiscreteChannel, X2Stats};
use crate::probability::{mutual_information_weighted, DenomMode, JointPmf, Pmf, ProbabilityError};

pub use capacity::{blahut_arimoto, Capacity};
pub use optimizer::{optimizer_registry, GridGolden, GridOnly, Optimizer, DEFAULT_OPTIMIZER};
pub use search::{Objective, Score, SearchOptions, SearchOutcome, SearchSpace, X2Restriction};
pub use solver::{CurveMode, CurvePoint, FrontierPoint, Optimum, Solver};

/// Slack used when comparing a target triple with the bounds.
pub const ACHIEVABILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
    #[error("input has {card_t} time-sharing classes but {got} {what}")]
    Shape {
        card_t: usize,
        got: usize,
        what: &'static str,
    },
    #[error("conditional law for class {t} has {got} symbols, expected {expected}")]
    X2Alphabet {
        t: usize,
        got: usize,
        expected: usize,
    },
    #[error("intensity eps[{t}] = {value} outside [0, 1]")]
    Intensity { t: usize, value: f64 },
    #[error("unsupported number of time-sharing classes {0}")]
    Cardinality(usize),
    #[error("weights must be non-negative and not all zero, got ({0}, {1}, {2})")]
    Weights(f64, f64, f64),
    #[error("key budget must be non-negative, got {0}")]
    KeyBudget(f64),
    #[error("r2 >= {requested} is infeasible; the largest attainable r2 is {max_r2}")]
    Infeasible { requested: f64, max_r2: f64 },
    #[error("mixing inputs need two time-sharing classes each, got {0} and {1}")]
    MixCardinality(usize, usize),
    #[error("empty grid")]
    EmptyGrid,
}

/// The optimization variable: `P_T`, `P_{X2|T}` and one intensity per class.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSharingInput {
    p_t: Pmf,
    p_x2_given_t: Vec<Pmf>,
    eps: Vec<f64>,
}

impl TimeSharingInput {
    pub fn new(p_t: Pmf, p_x2_given_t: Vec<Pmf>, eps: Vec<f64>) -> Result<Self, RegionError> {
        let card_t = p_t.len();
        if p_x2_given_t.len() != card_t {
            return Err(RegionError::Shape {
                card_t,
                got: p_x2_given_t.len(),
                what: "conditional laws",
            });
        }
        if eps.len() != card_t {
            return Err(RegionError::Shape {
                card_t,
                got: eps.len(),
                what: "intensities",
            });
        }
        let x2_size = p_x2_given_t[0].len();
        for (t, c) in p_x2_given_t.iter().enumerate() {
            if c.len() != x2_size {
                return Err(RegionError::X2Alphabet {
                    t,
                    got: c.len(),
                    expected: x2_size,
                });
            }
        }
        for (t, &value) in eps.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(RegionError::Intensity { t, value });
            }
        }
        Ok(TimeSharingInput {
            p_t,
            p_x2_given_t,
            eps,
        })
    }

    /// One class, fixed `P_X2`, intensity `eps`.
    pub fn single(p_x2: Pmf, eps: f64) -> Result<Self, RegionError> {
        Self::new(Pmf::point(1, 0), vec![p_x2], vec![eps])
    }

    pub fn card_t(&self) -> usize {
        self.p_t.len()
    }

    pub fn x2_size(&self) -> usize {
        self.p_x2_given_t[0].len()
    }

    pub fn p_t(&self) -> &Pmf {
        &self.p_t
    }

    pub fn p_x2_given_t(&self) -> &[Pmf] {
        &self.p_x2_given_t
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn joint(&self) -> JointPmf {
        JointPmf::from_conditionals(&self.p_t, &self.p_x2_given_t)
            .expect("shapes validated on construction")
    }

    /// `E_{P_TX2}[f(t, x2)]`.
    pub fn expect(&self, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for (t, cond) in self.p_x2_given_t.iter().enumerate() {
            let pt = self.p_t[t];
            if pt == 0.0 {
                continue;
            }
            acc += pt * cond.expect(|x2| f(t, x2));
        }
        acc
    }

    /// Copy with every intensity multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self, RegionError> {
        Self::new(
            self.p_t.clone(),
            self.p_x2_given_t.clone(),
            self.eps.iter().map(|e| e * c).collect(),
        )
    }
}

/// `(r1, r2, k)`: covert square-root rate, non-covert rate, key square-root rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateTriple {
    pub r1: f64,
    pub r2: f64,
    pub k: f64,
}

impl RateTriple {
    pub fn new(r1: f64, r2: f64, k: f64) -> Self {
        RateTriple { r1, r2, k }
    }
}

/// The expectations that determine all three bounds for one input.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundTerms {
    /// `E[ε_T D_Y(X2)]`
    pub eps_dy: f64,
    /// `E[ε_T D_Z(X2)]`
    pub eps_dz: f64,
    /// `E[ε_T² χ2,Z(X2)]`
    pub eps2_chi: f64,
    /// `I(X2;Y | X1=0, T)`
    pub r2: f64,
}

impl BoundTerms {
    pub fn r1(&self) -> f64 {
        sqrt2_ratio(self.eps_dy, self.eps2_chi)
    }

    /// Key bound before clamping at zero; negative when no key is needed.
    pub fn key_raw(&self) -> f64 {
        sqrt2_ratio(self.eps_dz - self.eps_dy, self.eps2_chi)
    }

    pub fn rates(&self) -> RateTriple {
        RateTriple {
            r1: self.r1(),
            r2: self.r2,
            k: self.key_raw().max(0.0),
        }
    }
}

/// `√2 · num / √den` with `0/0 = 0`.
fn sqrt2_ratio(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        0.0
    } else {
        std::f64::consts::SQRT_2 * num / den.sqrt()
    }
}

/// Channel statistics needed to evaluate the region bounds.
#[derive(Debug, Clone)]
pub struct RegionModel {
    stats: X2Stats,
    y_baseline: Vec<Pmf>,
}

impl RegionModel {
    /// Fails when the channel violates an admissibility condition.
    pub fn new(ch: &DiscreteChannel, mode: DenomMode) -> Result<Self, RegionError> {
        let stats = ch.x2_stats(mode)?;
        Ok(RegionModel {
            stats,
            y_baseline: ch.y_baseline(),
        })
    }

    pub fn from_parts(stats: X2Stats, y_baseline: Vec<Pmf>) -> Self {
        assert_eq!(
            stats.x2_size(),
            y_baseline.len(),
            "statistics and baseline rows disagree on |X2|"
        );
        RegionModel { stats, y_baseline }
    }

    pub fn stats(&self) -> &X2Stats {
        &self.stats
    }

    pub fn x2_size(&self) -> usize {
        self.stats.x2_size()
    }

    pub fn y_baseline(&self) -> &[Pmf] {
        &self.y_baseline
    }

    pub fn mode(&self) -> DenomMode {
        self.stats.mode
    }

    pub fn terms(&self, input: &TimeSharingInput) -> BoundTerms {
        debug_assert_eq!(input.x2_size(), self.x2_size());
        let s = &self.stats;
        let rows: Vec<&[f64]> = self.y_baseline.iter().map(Pmf::weights).collect();
        let mut terms = BoundTerms::default();
        for t in 0..input.card_t() {
            let pt = input.p_t[t];
            if pt == 0.0 {
                continue;
            }
            let cond = &input.p_x2_given_t[t];
            let e = input.eps[t];
            terms.eps_dy += pt * e * cond.expect(|x| s.d_y[x]);
            terms.eps_dz += pt * e * cond.expect(|x| s.d_z[x]);
            terms.eps2_chi += pt * e * e * cond.expect(|x| s.chi2_z[x]);
            terms.r2 += pt * mutual_information_weighted(cond.weights(), &rows);
        }
        terms
    }

    pub fn evaluate_bounds(&self, input: &TimeSharingInput) -> RateTriple {
        self.terms(input).rates()
    }

    /// Compares `target` with the bounds of `input`. A target with `r1 = 0` needs
    /// no key: zeroing the intensities keeps `r2` and sends the key bound to 0.
    pub fn is_achievable(&self, target: &RateTriple, input: &TimeSharingInput) -> bool {
        let b = self.evaluate_bounds(input);
        target.r1 >= 0.0
            && target.r2 >= 0.0
            && target.k >= 0.0
            && target.r2 <= b.r2 + ACHIEVABILITY_SLACK
            && target.r1 <= b.r1 + ACHIEVABILITY_SLACK
            && (target.k + ACHIEVABILITY_SLACK >= b.k || target.r1 <= ACHIEVABILITY_SLACK)
    }

    /// Builds a four-class input whose bounds are the `lambda`-mixture of the
    /// bounds of `a` and `b`.
    pub fn mix_inputs(
        &self,
        a: &TimeSharingInput,
        b: &TimeSharingInput,
        lambda: f64,
    ) -> Result<MixedInput, RegionError> {
        if a.card_t() != 2 || b.card_t() != 2 {
            return Err(RegionError::MixCardinality(a.card_t(), b.card_t()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ProbabilityError::MixingWeight(lambda).into());
        }
        let chi = &self.stats.chi2_z;
        let num = a.expect(|t, x| a.eps[t] * a.eps[t] * chi[x]);
        let den = b.expect(|t, x| b.eps[t] * b.eps[t] * chi[x]);
        let degenerate = num <= 0.0 || den <= 0.0;
        let nu = if degenerate { 0.0 } else { (num / den).sqrt() };

        let p_t = Pmf::new(vec![
            lambda * a.p_t[0],
            lambda * a.p_t[1],
            (1.0 - lambda) * b.p_t[0],
            (1.0 - lambda) * b.p_t[1],
        ])?;
        let conds = a
            .p_x2_given_t
            .iter()
            .chain(&b.p_x2_given_t)
            .cloned()
            .collect();
        let raw_gamma = vec![a.eps[0], a.eps[1], nu * b.eps[0], nu * b.eps[1]];
        let peak = raw_gamma.iter().copied().fold(0.0, f64::max);
        let scale = if peak > 1.0 { 1.0 / peak } else { 1.0 };
        let eps = raw_gamma.iter().map(|g| (g * scale).min(1.0)).collect();
        Ok(MixedInput {
            input: TimeSharingInput::new(p_t, conds, eps)?,
            raw_gamma,
            scale,
            degenerate,
        })
    }

    /// Largest `I(X2;Y|X1=0)` over single-letter inputs.
    pub fn capacity(&self) -> Capacity {
        blahut_arimoto(&self.y_baseline, 1e-13, 100_000)
    }
}

/// Result of [`RegionModel::mix_inputs`].
#[derive(Debug, Clone)]
pub struct MixedInput {
    pub input: TimeSharingInput,
    /// Intensities before rescaling into `[0, 1]`.
    pub raw_gamma: Vec<f64>,
    /// Factor applied to `raw_gamma`; the ratios are unchanged by it.
    pub scale: f64,
    /// Set when one side has `E[ε²χ2,Z] = 0`, so the construction's scale factor is undefined.
    pub degenerate: bool,
}

/// Non-negative weights of the scalarized objective `μ1·r1 + μ2·r2 − μ3·k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarWeights {
    mu1: f64,
    mu2: f64,
    mu3: f64,
}

impl ScalarWeights {
    pub fn new(mu1: f64, mu2: f64, mu3: f64) -> Result<Self, RegionError> {
        let ok =
            [mu1, mu2, mu3].iter().all(|m| m.is_finite() && *m >= 0.0) && mu1 + mu2 + mu3 > 0.0;
        if !ok {
            return Err(RegionError::Weights(mu1, mu2, mu3));
        }
        Ok(ScalarWeights { mu1, mu2, mu3 })
    }

    pub fn mu(&self) -> (f64, f64, f64) {
        (self.mu1, self.mu2, self.mu3)
    }

    /// `√2(μ1+μ3)E[εD_Y]/√E[ε²χ] − √2μ3E[εD_Z]/√E[ε²χ] + μ2·I`.
    pub fn objective(&self, terms: &BoundTerms) -> f64 {
        let eps_d = (self.mu1 + self.mu3) * terms.eps_dy - self.mu3 * terms.eps_dz;
        sqrt2_ratio(eps_d, terms.eps2_chi) + self.mu2 * terms.r2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;

    fn pmf(w: &[f64]) -> Pmf {
        Pmf::new(w.to_vec()).unwrap()
    }

    fn split_input(eps: [f64; 2]) -> TimeSharingInput {
        TimeSharingInput::new(
            pmf(&[0.5, 0.5]),
            vec![pmf(&[1.0, 0.0]), pmf(&[0.0, 1.0])],
            eps.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            TimeSharingInput::new(pmf(&[0.5, 0.5]), vec![pmf(&[1.0, 0.0])], vec![1.0, 1.0]),
            Err(RegionError::Shape {
                what: "conditional laws",
                ..
            })
        ));
        assert!(matches!(
            TimeSharingInput::new(pmf(&[1.0]), vec![pmf(&[1.0, 0.0])], vec![1.5]),
            Err(RegionError::Intensity { t: 0, .. })
        ));
        assert!(matches!(
            TimeSharingInput::new(
                pmf(&[0.5, 0.5]),
                vec![pmf(&[1.0, 0.0]), pmf(&[1.0])],
                vec![1.0, 1.0]
            ),
            Err(RegionError::X2Alphabet { t: 1, .. })
        ));
    }

    #[test]
    fn zero_intensity_gives_zero_ratios() {
        let model = RegionModel::new(&presets::helper_example(), DenomMode::First).unwrap();
        let b = model.evaluate_bounds(&split_input([0.0, 0.0]));
        assert_eq!((b.r1, b.k), (0.0, 0.0));
        assert!(b.r2.abs() < 1e-15);
    }

    #[test]
    fn singleton_rate_is_intensity_free() {
        let ch = presets::time_sharing_example();
        let model = RegionModel::new(&ch, DenomMode::Second).unwrap();
        let s = model.stats();
        let expected = std::f64::consts::SQRT_2 * s.d_y[1] / s.chi2_z[1].sqrt();
        for eps in [0.01, 0.3, 1.0] {
            let b =
                model.evaluate_bounds(&TimeSharingInput::single(Pmf::point(2, 1), eps).unwrap());
            assert!((b.r1 - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn achievability_checks() {
        let model = RegionModel::new(&presets::helper_example(), DenomMode::First).unwrap();
        let input = split_input([1.0, 0.4]);
        let b = model.evaluate_bounds(&input);
        assert!(model.is_achievable(&b, &input));
        assert!(!model.is_achievable(
            &RateTriple {
                r1: b.r1 + 0.1,
                ..b
            },
            &input
        ));
        assert!(!model.is_achievable(
            &RateTriple {
                r2: b.r2 + 0.1,
                ..b
            },
            &input
        ));
        assert!(!model.is_achievable(&RateTriple { k: b.k - 0.1, ..b }, &input) || b.k < 0.1);
        assert!(model.is_achievable(&RateTriple::new(0.0, 0.0, 0.0), &input));
        assert!(model.is_achievable(&RateTriple::new(0.0, 0.0, 7.0), &input));
    }

    #[test]
    fn no_key_needed_when_warden_divergence_is_smaller() {
        // D_Z(x2) < D_Y(x2) for both symbols of this channel.
        let model = RegionModel::new(&presets::time_sharing_example(), DenomMode::First).unwrap();
        let s = model.stats();
        assert!(s.d_z.iter().zip(&s.d_y).all(|(z, y)| z < y));
        for eps in [[0.7, 0.2], [1.0, 1.0], [0.0, 0.3]] {
            let input = split_input(eps);
            assert!(model.terms(&input).key_raw() < 0.0);
            assert_eq!(model.evaluate_bounds(&input).k, 0.0);
        }
    }

    #[test]
    fn mix_endpoints() {
        let model = RegionModel::new(&presets::helper_example(), DenomMode::First).unwrap();
        let a = split_input([1.0, 0.3]);
        let b = TimeSharingInput::new(
            pmf(&[0.2, 0.8]),
            vec![pmf(&[0.5, 0.5]), pmf(&[0.9, 0.1])],
            vec![0.6, 1.0],
        )
        .unwrap();
        let close = |x: RateTriple, y: RateTriple| {
            (x.r1 - y.r1).abs() < 1e-12 && (x.r2 - y.r2).abs() < 1e-12 && (x.k - y.k).abs() < 1e-12
        };
        let m1 = model.mix_inputs(&a, &b, 1.0).unwrap();
        assert!(close(
            model.evaluate_bounds(&m1.input),
            model.evaluate_bounds(&a)
        ));
        let m0 = model.mix_inputs(&a, &b, 0.0).unwrap();
        assert!(close(
            model.evaluate_bounds(&m0.input),
            model.evaluate_bounds(&b)
        ));
        assert_eq!(m0.input.card_t(), 4);
        assert!(!m0.degenerate);

        let silent = split_input([0.0, 0.0]);
        assert!(model.mix_inputs(&silent, &b, 0.5).unwrap().degenerate);
        assert!(matches!(
            model.mix_inputs(
                &TimeSharingInput::single(pmf(&[0.5, 0.5]), 1.0).unwrap(),
                &b,
                0.5
            ),
            Err(RegionError::MixCardinality(1, 2))
        ));
    }

    #[test]
    fn scalar_weights_validation() {
        assert!(ScalarWeights::new(0.0, 0.0, 0.0).is_err());
        assert!(ScalarWeights::new(-1.0, 1.0, 0.0).is_err());
        let w = ScalarWeights::new(1.0, 2.0, 0.5).unwrap();
        let t = BoundTerms {
            eps_dy: 0.1,
            eps_dz: 0.3,
            eps2_chi: 0.04,
            r2: 0.2,
        };
        let expected = t.r1() + 2.0 * t.r2 - 0.5 * t.key_raw();
        assert!((w.objective(&t) - expected).abs() < 1e-14);
    }

    fn arb_input() -> impl Strategy<Value = TimeSharingInput> {
        (
            0.0f64..=1.0,
            0.0f64..=1.0,
            0.0f64..=1.0,
            0.0f64..=1.0,
            0.0f64..=1.0,
        )
            .prop_map(|(p, q1, q2, e1, e2)| {
                TimeSharingInput::new(
                    Pmf::new(vec![p, 1.0 - p]).unwrap(),
                    vec![
                        Pmf::new(vec![q1, 1.0 - q1]).unwrap(),
                        Pmf::new(vec![q2, 1.0 - q2]).unwrap(),
                    ],
                    vec![e1, e2],
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn ratios_are_scale_free(input in arb_input(), c in 0.001f64..=1.0) {
            let model = RegionModel::new(&presets::helper_example(), DenomMode::First).unwrap();
            let a = model.evaluate_bounds(&input);
            let b = model.evaluate_bounds(&input.scaled(c).unwrap());
            prop_assert!((a.r1 - b.r1).abs() <= 1e-9 * (1.0 + a.r1.abs()));
            prop_assert!((a.k - b.k).abs() <= 1e-9 * (1.0 + a.k.abs()));
            prop_assert!(model.is_achievable(&a, &input.scaled(c).unwrap()));
        }

        #[test]
        fn bounds_are_achievable(input in arb_input()) {
            let model = RegionModel::new(&presets::time_sharing_example(), DenomMode::Second).unwrap();
            let b = model.evaluate_bounds(&input);
            prop_assert!(b.r1 >= 0.0 && b.r2 >= 0.0 && b.k >= 0.0);
            prop_assert!(model.is_achievable(&b, &input));
        }
    }
}
