use super::search::{
    refine, Evaluator, Grid, Objective, SearchOptions, SearchOutcome, SearchSpace,
};
use super::RegionModel;
use crate::registry::Registry;

/// Maximizes an [`Objective`] over one search space.
pub trait Optimizer: Send + Sync {
    fn name(&self) -> &'static str;
    fn optimize(
        &self,
        model: &RegionModel,
        space: &SearchSpace,
        objective: &dyn Objective,
    ) -> SearchOutcome;
}

/// Coarse grid followed by golden-section coordinate refinement of the best cells.
#[derive(Debug, Clone, Default)]
pub struct GridGolden {
    pub options: SearchOptions,
}

/// Best point of the coarse grid, without refinement.
#[derive(Debug, Clone, Default)]
pub struct GridOnly {
    pub options: SearchOptions,
}

impl Optimizer for GridGolden {
    fn name(&self) -> &'static str {
        "grid-golden"
    }

    fn optimize(
        &self,
        model: &RegionModel,
        space: &SearchSpace,
        objective: &dyn Objective,
    ) -> SearchOutcome {
        let eval = Evaluator::new(model);
        let grid = Grid::new(&eval, space, &self.options);
        let starts = grid.best(objective, self.options.starts.max(1));
        let mut evaluations = grid.len();
        let step = 2.0 / (grid.points - 1) as f64;
        let mut best = None;
        for (_, index) in starts {
            let (params, score, n) = refine(
                &eval,
                space,
                objective,
                grid.params(index),
                step,
                &self.options,
            );
            evaluations += n;
            if best
                .as_ref()
                .is_none_or(|(_, s): &(_, super::Score)| score.better_than(s))
            {
                best = Some((params, score));
            }
        }
        let (params, score) = best.expect("grid is never empty");
        SearchOutcome {
            terms: eval.terms(&params),
            input: params.to_input(),
            score,
            evaluations,
            grid_points: grid.points,
        }
    }
}

impl Optimizer for GridOnly {
    fn name(&self) -> &'static str {
        "grid-only"
    }

    fn optimize(
        &self,
        model: &RegionModel,
        space: &SearchSpace,
        objective: &dyn Objective,
    ) -> SearchOutcome {
        let eval = Evaluator::new(model);
        let grid = Grid::new(&eval, space, &self.options);
        let (score, index) = grid.best(objective, 1)[0];
        let params = grid.params(index);
        SearchOutcome {
            terms: eval.terms(&params),
            input: params.to_input(),
            score,
            evaluations: grid.len(),
            grid_points: grid.points,
        }
    }
}

pub const DEFAULT_OPTIMIZER: &str = "grid-golden";

pub fn optimizer_registry() -> Registry<dyn Optimizer, SearchOptions> {
    let mut r: Registry<dyn Optimizer, SearchOptions> = Registry::new("optimizer");
    r.register(
        "grid-golden",
        "coarse grid, then golden-section coordinate refinement",
        |o| Box::new(GridGolden { options: *o }),
    );
    r.register("grid-only", "coarse grid only", |o| {
        Box::new(GridOnly { options: *o })
    });
    r
}
