use super::optimizer::{GridGolden, Optimizer};
use super::search::{Objective, Score, SearchOutcome, SearchSpace, X2Restriction};
use super::{
    BoundTerms, RateTriple, RegionError, RegionModel, ScalarWeights, TimeSharingInput,
    ACHIEVABILITY_SLACK,
};

/// Result of a single optimization.
#[derive(Debug, Clone)]
pub struct Optimum {
    /// Objective value at `input` (r1, r2 or the scalarized value).
    pub value: f64,
    pub input: TimeSharingInput,
    pub rates: RateTriple,
    pub terms: BoundTerms,
    pub evaluations: u64,
}

#[derive(Debug, Clone)]
pub struct FrontierPoint {
    pub r2: f64,
    /// Reported value after the right-to-left running maximum.
    pub r1: f64,
    /// Optimizer output before monotonization.
    pub raw_r1: f64,
    pub input: TimeSharingInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMode {
    Optimized,
    /// `P_{X2|T}` fixed to the point mass on the given symbol.
    ConstantX2(usize),
}

impl CurveMode {
    pub fn label(&self) -> String {
        match self {
            CurveMode::Optimized => "optimized".to_string(),
            CurveMode::ConstantX2(a) => format!("x2={a}"),
        }
    }

    fn restriction(&self) -> X2Restriction {
        match self {
            CurveMode::Optimized => X2Restriction::Free,
            CurveMode::ConstantX2(a) => X2Restriction::Constant(*a),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub k: f64,
    /// Reported value after the left-to-right running maximum.
    pub r1: f64,
    pub raw_r1: f64,
    pub input: TimeSharingInput,
}

struct MaxR1 {
    k_budget: f64,
    r2_min: f64,
}

impl Objective for MaxR1 {
    fn score(&self, t: &BoundTerms) -> Score {
        let over_key = (t.key_raw() - self.k_budget - ACHIEVABILITY_SLACK).max(0.0);
        let under_rate = (self.r2_min - t.r2 - ACHIEVABILITY_SLACK).max(0.0);
        Score {
            violation: over_key + under_rate,
            value: t.r1(),
        }
    }

    fn constrained(&self) -> bool {
        true
    }
}

struct MaxR2;

impl Objective for MaxR2 {
    fn score(&self, t: &BoundTerms) -> Score {
        Score::feasible(t.r2)
    }
}

impl Objective for ScalarWeights {
    fn score(&self, t: &BoundTerms) -> Score {
        Score::feasible(self.objective(t))
    }
}

/// Region optimizations for one channel at a fixed number of time-sharing classes.
pub struct Solver {
    model: RegionModel,
    card_t: usize,
    optimizer: Box<dyn Optimizer>,
}

impl Solver {
    pub fn new(
        model: RegionModel,
        card_t: usize,
        optimizer: Box<dyn Optimizer>,
    ) -> Result<Self, RegionError> {
        if ![1, 2, 4].contains(&card_t) {
            return Err(RegionError::Cardinality(card_t));
        }
        Ok(Solver {
            model,
            card_t,
            optimizer,
        })
    }

    /// Uses [`GridGolden`] with default options.
    pub fn with_defaults(model: RegionModel, card_t: usize) -> Result<Self, RegionError> {
        Self::new(model, card_t, Box::new(GridGolden::default()))
    }

    pub fn model(&self) -> &RegionModel {
        &self.model
    }

    pub fn card_t(&self) -> usize {
        self.card_t
    }

    pub fn optimizer_name(&self) -> &'static str {
        self.optimizer.name()
    }

    fn space(&self, restriction: X2Restriction) -> SearchSpace {
        SearchSpace {
            card_t: self.card_t,
            x2_size: self.model.x2_size(),
            restriction,
        }
    }

    fn run(&self, restriction: X2Restriction, objective: &dyn Objective) -> SearchOutcome {
        self.optimizer
            .optimize(&self.model, &self.space(restriction), objective)
    }

    fn optimum(out: SearchOutcome) -> Optimum {
        Optimum {
            value: out.score.value,
            rates: out.terms.rates(),
            terms: out.terms,
            input: out.input,
            evaluations: out.evaluations,
        }
    }

    /// Largest attainable `r2`.
    pub fn max_r2(&self) -> Optimum {
        Self::optimum(self.run(X2Restriction::Free, &MaxR2))
    }

    pub fn max_r1(&self, k_budget: f64, r2_min: f64) -> Result<Optimum, RegionError> {
        self.max_r1_restricted(k_budget, r2_min, X2Restriction::Free)
    }

    pub fn max_r1_restricted(
        &self,
        k_budget: f64,
        r2_min: f64,
        restriction: X2Restriction,
    ) -> Result<Optimum, RegionError> {
        if k_budget.is_nan() || k_budget < 0.0 {
            return Err(RegionError::KeyBudget(k_budget));
        }
        let out = self.run(restriction, &MaxR1 { k_budget, r2_min });
        if !out.score.is_feasible() {
            return Err(RegionError::Infeasible {
                requested: r2_min,
                max_r2: self.max_r2().value,
            });
        }
        Ok(Self::optimum(out))
    }

    /// `max_r1` at each target in `r2_grid`, made non-increasing in `r2`.
    pub fn frontier(
        &self,
        k_budget: f64,
        r2_grid: &[f64],
    ) -> Result<Vec<FrontierPoint>, RegionError> {
        if r2_grid.is_empty() {
            return Err(RegionError::EmptyGrid);
        }
        let mut points = r2_grid
            .iter()
            .map(|&r2| {
                let opt = self.max_r1(k_budget, r2)?;
                Ok(FrontierPoint {
                    r2,
                    r1: opt.value,
                    raw_r1: opt.value,
                    input: opt.input,
                })
            })
            .collect::<Result<Vec<_>, RegionError>>()?;
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].r2.total_cmp(&points[b].r2));
        let mut running = f64::NEG_INFINITY;
        for &i in order.iter().rev() {
            running = running.max(points[i].raw_r1);
            points[i].r1 = running;
        }
        Ok(points)
    }

    /// `max_r1` with `r2_min = 0` at each key budget, made non-decreasing in `k`.
    pub fn r1_vs_key_curve(
        &self,
        k_grid: &[f64],
        mode: CurveMode,
    ) -> Result<Vec<CurvePoint>, RegionError> {
        if k_grid.is_empty() {
            return Err(RegionError::EmptyGrid);
        }
        if let CurveMode::ConstantX2(a) = mode {
            if a >= self.model.x2_size() {
                return Err(RegionError::X2Alphabet {
                    t: 0,
                    got: a + 1,
                    expected: self.model.x2_size(),
                });
            }
        }
        let mut points = k_grid
            .iter()
            .map(|&k| {
                let opt = self.max_r1_restricted(k, 0.0, mode.restriction())?;
                Ok(CurvePoint {
                    k,
                    r1: opt.value,
                    raw_r1: opt.value,
                    input: opt.input,
                })
            })
            .collect::<Result<Vec<_>, RegionError>>()?;
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].k.total_cmp(&points[b].k));
        let mut running = f64::NEG_INFINITY;
        for &i in &order {
            running = running.max(points[i].raw_r1);
            points[i].r1 = running;
        }
        Ok(points)
    }

    pub fn scalarized(&self, weights: &ScalarWeights) -> Optimum {
        Self::optimum(self.run(X2Restriction::Free, weights))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::DiscreteChannel;
    use crate::presets;
    use crate::probability::DenomMode;

    fn solver(ch: &DiscreteChannel, card_t: usize) -> Solver {
        Solver::with_defaults(RegionModel::new(ch, DenomMode::First).unwrap(), card_t).unwrap()
    }

    #[test]
    fn rejects_unsupported_cardinality() {
        let model = RegionModel::new(&presets::helper_example(), DenomMode::First).unwrap();
        assert!(matches!(
            Solver::with_defaults(model, 3),
            Err(RegionError::Cardinality(3))
        ));
    }

    #[test]
    fn max_r2_matches_capacity() {
        let s = solver(&presets::helper_example(), 2);
        let cap = s.model().capacity().value;
        let got = s.max_r2().value;
        assert!(got <= cap + 1e-12);
        assert!(cap - got < 1e-6, "{got} vs {cap}");
    }

    #[test]
    fn infeasible_rate_is_reported() {
        let s = solver(&presets::helper_example(), 1);
        match s.max_r1(1.0, 10.0) {
            Err(RegionError::Infeasible { requested, max_r2 }) => {
                assert_eq!(requested, 10.0);
                assert!(max_r2 > 0.0 && max_r2 < 10.0);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(matches!(
            s.max_r1(-1.0, 0.0),
            Err(RegionError::KeyBudget(_))
        ));
    }

    #[test]
    fn constant_curve_matches_closed_form() {
        let ch = presets::helper_example();
        let s = solver(&ch, 2);
        let st = s.model().stats().clone();
        for a in 0..2 {
            let free = std::f64::consts::SQRT_2 * st.d_y[a] / st.chi2_z[a].sqrt();
            let curve = s
                .r1_vs_key_curve(&[0.0, 0.2, 0.5, 2.0], CurveMode::ConstantX2(a))
                .unwrap();
            for p in curve {
                let expected = if st.d_z[a] > st.d_y[a] {
                    free.min(p.k * st.d_y[a] / (st.d_z[a] - st.d_y[a]))
                } else {
                    free
                };
                assert!(
                    (p.r1 - expected).abs() < 1e-6,
                    "x2={a} k={}: {} vs {expected}",
                    p.k,
                    p.r1
                );
            }
        }
    }

    #[test]
    fn frontier_is_non_increasing() {
        let s = solver(&presets::time_sharing_example(), 2);
        let top = s.max_r2().value;
        let grid: Vec<f64> = (0..6).map(|i| top * i as f64 / 5.0).collect();
        let f = s.frontier(0.5, &grid).unwrap();
        assert!(f.windows(2).all(|w| w[0].r1 >= w[1].r1));
        assert!(f.iter().all(|p| p.r1 >= p.raw_r1));
    }
}
