//! Shared search machinery over time-sharing inputs.
//!
//! A point in the search space is a class pmf `P_T`, one conditional pmf over
//! `X2` per class, and one intensity per class. The coarse stage enumerates a
//! product grid over all of these; the refinement stage runs golden-section
//! line searches along one coordinate at a time.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::{BoundTerms, RegionModel, TimeSharingInput};
use crate::probability::{mutual_information_weighted, Pmf};

/// Objective value plus total constraint violation; feasible means `violation == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub violation: f64,
    pub value: f64,
}

impl Score {
    pub fn feasible(value: f64) -> Self {
        Score {
            violation: 0.0,
            value,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.violation <= 0.0
    }

    /// Feasible beats infeasible; then smaller violation; then larger value.
    pub fn better_than(&self, other: &Score) -> bool {
        match (self.is_feasible(), other.is_feasible()) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.value > other.value,
            (false, false) => {
                self.violation < other.violation
                    || (self.violation == other.violation && self.value > other.value)
            }
        }
    }

    fn rank(&self, other: &Score) -> Ordering {
        if self.better_than(other) {
            Ordering::Less
        } else if other.better_than(self) {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }
}

/// What the optimizers maximize. Scores depend on an input only through its bound terms.
pub trait Objective: Sync {
    fn score(&self, terms: &BoundTerms) -> Score;

    /// Whether scores can carry a nonzero violation.
    fn constrained(&self) -> bool {
        false
    }
}

impl<F: Fn(&BoundTerms) -> Score + Sync> Objective for F {
    fn score(&self, terms: &BoundTerms) -> Score {
        self(terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum X2Restriction {
    #[default]
    Free,
    /// Every conditional law is the point mass on this symbol.
    Constant(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchSpace {
    pub card_t: usize,
    pub x2_size: usize,
    pub restriction: X2Restriction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Grid points per scalar dimension (before the budget cap).
    pub grid_points: usize,
    /// Golden-section iterations per line search.
    pub golden_iters: usize,
    /// Coordinate sweeps; the line-search bracket halves after each.
    pub sweeps: usize,
    /// Iterations of each nested line search in the pair pass.
    pub pair_iters: usize,
    /// Number of best grid cells refined.
    pub starts: usize,
    /// Upper bound on grid size; the per-dimension resolution is lowered to fit.
    pub grid_budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_points: 21,
            golden_iters: 60,
            sweeps: 8,
            pair_iters: 30,
            starts: 4,
            grid_budget: 4_500_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub input: TimeSharingInput,
    pub terms: BoundTerms,
    pub score: Score,
    pub evaluations: u64,
    /// Grid points per dimension actually used.
    pub grid_points: usize,
}

/// Raw coordinates of a search point.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Params {
    pub p_t: Vec<f64>,
    pub cond: Vec<Vec<f64>>,
    pub eps: Vec<f64>,
}

impl Params {
    pub fn to_input(&self) -> TimeSharingInput {
        TimeSharingInput::new(
            Pmf::new(self.p_t.clone()).expect("search keeps p_t on the simplex"),
            self.cond
                .iter()
                .map(|c| Pmf::new(c.clone()).expect("search keeps conditionals on the simplex"))
                .collect(),
            self.eps.clone(),
        )
        .expect("search keeps parameters in range")
    }
}

/// Per-conditional expectations of the channel statistics.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Aggregate {
    dy: f64,
    dz: f64,
    chi: f64,
    info: f64,
}

pub(crate) struct Evaluator<'a> {
    model: &'a RegionModel,
    rows: Vec<&'a [f64]>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a RegionModel) -> Self {
        Evaluator {
            model,
            rows: model.y_baseline().iter().map(Pmf::weights).collect(),
        }
    }

    pub fn aggregate(&self, q: &[f64]) -> Aggregate {
        let s = self.model.stats();
        let mut a = Aggregate::default();
        for (x, &w) in q.iter().enumerate() {
            if w > 0.0 {
                a.dy += w * s.d_y[x];
                a.dz += w * s.d_z[x];
                a.chi += w * s.chi2_z[x];
            }
        }
        a.info = mutual_information_weighted(q, &self.rows);
        a
    }

    pub fn terms(&self, p: &Params) -> BoundTerms {
        let mut terms = BoundTerms::default();
        for (t, &pt) in p.p_t.iter().enumerate() {
            if pt == 0.0 {
                continue;
            }
            let a = self.aggregate(&p.cond[t]);
            let e = p.eps[t];
            terms.eps_dy += pt * e * a.dy;
            terms.eps_dz += pt * e * a.dz;
            terms.eps2_chi += pt * e * e * a.chi;
            terms.r2 += pt * a.info;
        }
        terms
    }
}

/// Points of the simplex over `k` symbols with coordinates in multiples of `1/divisions`,
/// in lexicographic order.
pub(crate) fn simplex_grid(k: usize, divisions: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut counts = vec![0usize; k];
    fn rec(pos: usize, left: usize, counts: &mut Vec<usize>, d: usize, out: &mut Vec<Vec<f64>>) {
        let k = counts.len();
        if pos == k - 1 {
            counts[pos] = left;
            let mut w: Vec<f64> = counts[..k - 1]
                .iter()
                .map(|&c| c as f64 / d as f64)
                .collect();
            let head: f64 = w.iter().sum();
            w.push((1.0 - head).max(0.0));
            out.push(w);
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, d, out);
        }
    }
    rec(0, divisions, &mut counts, divisions.max(1), &mut out);
    out
}

fn simplex_count(k: usize, divisions: usize) -> u64 {
    // C(divisions + k - 1, k - 1)
    let mut c: u64 = 1;
    for i in 1..k as u64 {
        c = c * (divisions as u64 + i) / i;
    }
    c
}

fn restricted_conditionals(space: &SearchSpace, divisions: usize) -> Vec<Vec<f64>> {
    match space.restriction {
        X2Restriction::Free => simplex_grid(space.x2_size, divisions),
        X2Restriction::Constant(a) => vec![Pmf::point(space.x2_size, a).into_weights()],
    }
}

fn grid_size(space: &SearchSpace, points: usize) -> u64 {
    let d = points - 1;
    let conds = match space.restriction {
        X2Restriction::Free => simplex_count(space.x2_size, d),
        X2Restriction::Constant(_) => 1,
    };
    let t = space.card_t as u32;
    simplex_count(space.card_t, d)
        .saturating_mul(conds.saturating_pow(t))
        .saturating_mul((points as u64).pow(t))
}

/// Grid resolution actually used for `space` under `opts`.
pub(crate) fn effective_grid_points(space: &SearchSpace, opts: &SearchOptions) -> usize {
    let mut g = opts.grid_points.max(2);
    while g > 2 && grid_size(space, g) > opts.grid_budget {
        g -= 1;
    }
    g
}

/// The coarse grid over one search space.
pub(crate) struct Grid {
    card_t: usize,
    p_t: Vec<Vec<f64>>,
    conds: Vec<Vec<f64>>,
    aggs: Vec<Aggregate>,
    eps: Vec<f64>,
    pub points: usize,
}

impl Grid {
    pub fn new(eval: &Evaluator<'_>, space: &SearchSpace, opts: &SearchOptions) -> Self {
        let points = effective_grid_points(space, opts);
        let d = points - 1;
        let conds = restricted_conditionals(space, d);
        let aggs = conds.iter().map(|q| eval.aggregate(q)).collect();
        Grid {
            card_t: space.card_t,
            p_t: simplex_grid(space.card_t, d),
            conds,
            aggs,
            eps: (0..points).map(|i| i as f64 / d as f64).collect(),
            points,
        }
    }

    fn eps_count(&self) -> u64 {
        (self.eps.len() as u64).pow(self.card_t as u32)
    }

    fn cond_count(&self) -> u64 {
        (self.conds.len() as u64).pow(self.card_t as u32)
    }

    pub fn len(&self) -> u64 {
        self.p_t.len() as u64 * self.cond_count() * self.eps_count()
    }

    /// Splits `index` into base-`radix` digits, most significant first.
    fn digits(mut index: u64, radix: usize, n: usize) -> Vec<usize> {
        let mut out = vec![0; n];
        for slot in out.iter_mut().rev() {
            *slot = (index % radix as u64) as usize;
            index /= radix as u64;
        }
        out
    }

    pub fn params(&self, index: u64) -> Params {
        let eps_idx = index % self.eps_count();
        let outer = index / self.eps_count();
        let cond_idx = outer % self.cond_count();
        let pt_idx = (outer / self.cond_count()) as usize;
        Params {
            p_t: self.p_t[pt_idx].clone(),
            cond: Self::digits(cond_idx, self.conds.len(), self.card_t)
                .into_iter()
                .map(|i| self.conds[i].clone())
                .collect(),
            eps: Self::digits(eps_idx, self.eps.len(), self.card_t)
                .into_iter()
                .map(|i| self.eps[i])
                .collect(),
        }
    }

    /// The `keep` best grid points; ties go to the smaller index.
    pub fn best(&self, objective: &dyn Objective, keep: usize) -> Vec<(Score, u64)> {
        let outer_count = self.p_t.len() as u64 * self.cond_count();
        let eps_count = self.eps_count();
        let t_count = self.card_t;
        (0..outer_count)
            .into_par_iter()
            .map(|outer| {
                let pt = &self.p_t[(outer / self.cond_count()) as usize];
                let cond_idx = Self::digits(outer % self.cond_count(), self.conds.len(), t_count);
                let mut w = [[0.0f64; 3]; 8];
                let mut info = 0.0;
                for t in 0..t_count {
                    let a = &self.aggs[cond_idx[t]];
                    w[t] = [pt[t] * a.dy, pt[t] * a.dz, pt[t] * a.chi];
                    info += pt[t] * a.info;
                }
                let mut top = TopK::new(keep);
                let mut eps_digits = vec![0usize; t_count];
                for e in 0..eps_count {
                    let mut terms = BoundTerms {
                        r2: info,
                        ..BoundTerms::default()
                    };
                    for t in 0..t_count {
                        let x = self.eps[eps_digits[t]];
                        terms.eps_dy += x * w[t][0];
                        terms.eps_dz += x * w[t][1];
                        terms.eps2_chi += x * x * w[t][2];
                    }
                    top.offer(objective.score(&terms), outer * eps_count + e);
                    // odometer, last class fastest
                    for t in (0..t_count).rev() {
                        eps_digits[t] += 1;
                        if eps_digits[t] < self.eps.len() {
                            break;
                        }
                        eps_digits[t] = 0;
                    }
                }
                top
            })
            .reduce(|| TopK::new(keep), TopK::merge)
            .items
    }
}

struct TopK {
    keep: usize,
    items: Vec<(Score, u64)>,
}

impl TopK {
    fn new(keep: usize) -> Self {
        TopK {
            keep,
            items: Vec::with_capacity(keep + 1),
        }
    }

    fn order(a: &(Score, u64), b: &(Score, u64)) -> Ordering {
        a.0.rank(&b.0).then(a.1.cmp(&b.1))
    }

    fn offer(&mut self, score: Score, index: u64) {
        let item = (score, index);
        if self.items.len() == self.keep {
            let worst = self.items.last().expect("keep > 0");
            if Self::order(&item, worst) != Ordering::Less {
                return;
            }
            self.items.pop();
        }
        let pos = self
            .items
            .partition_point(|x| Self::order(x, &item) == Ordering::Less);
        self.items.insert(pos, item);
    }

    fn merge(mut self, other: TopK) -> TopK {
        for (s, i) in other.items {
            self.offer(s, i);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coord {
    Pt(usize),
    Cond(usize, usize),
    Eps(usize),
}

/// Moves `w[j]` by `s`, keeping the last entry as the remainder.
fn transfer(w: &mut [f64], j: usize, s: f64) {
    let last = w.len() - 1;
    w[j] = (w[j] + s).clamp(0.0, 1.0);
    let head: f64 = w[..last].iter().sum();
    w[last] = (1.0 - head).max(0.0);
}

fn transfer_range(w: &[f64], j: usize, h: f64) -> (f64, f64) {
    let last = w[w.len() - 1];
    ((-w[j]).max(-h), last.min(h))
}

impl Coord {
    fn same_as(self, other: Coord) -> bool {
        self == other
    }

    fn range(self, p: &Params, h: f64) -> (f64, f64) {
        match self {
            Coord::Pt(j) => transfer_range(&p.p_t, j, h),
            Coord::Cond(t, j) => transfer_range(&p.cond[t], j, h),
            Coord::Eps(t) => ((-p.eps[t]).max(-h), (1.0 - p.eps[t]).min(h)),
        }
    }

    fn apply(self, p: &Params, s: f64) -> Params {
        let mut q = p.clone();
        match self {
            Coord::Pt(j) => transfer(&mut q.p_t, j, s),
            Coord::Cond(t, j) => transfer(&mut q.cond[t], j, s),
            Coord::Eps(t) => q.eps[t] = (q.eps[t] + s).clamp(0.0, 1.0),
        }
        q
    }
}

fn coordinates(space: &SearchSpace) -> Vec<Coord> {
    let mut coords: Vec<Coord> = (0..space.card_t.saturating_sub(1)).map(Coord::Pt).collect();
    if space.restriction == X2Restriction::Free {
        for t in 0..space.card_t {
            coords.extend((0..space.x2_size - 1).map(|j| Coord::Cond(t, j)));
        }
    }
    coords.extend((0..space.card_t).map(Coord::Eps));
    coords
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search of `f` over `[lo, hi]`, also trying both endpoints.
/// Returns the best point found with its payload and score.
fn golden<T>(lo: f64, hi: f64, iters: usize, mut f: impl FnMut(f64) -> (T, Score)) -> (T, Score) {
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1.1.better_than(&f2.1) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let mut best = if f1.1.better_than(&f2.1) { f1 } else { f2 };
    for end in [lo, hi] {
        let cand = f(end);
        if cand.1.better_than(&best.1) {
            best = cand;
        }
    }
    best
}

/// Coordinate-wise golden-section ascent from `start`.
///
/// For constrained objectives each sweep also searches along pairs of
/// coordinates, re-optimizing the second coordinate at every trial point of
/// the first, so the search can follow an active constraint.
pub(crate) fn refine(
    eval: &Evaluator<'_>,
    space: &SearchSpace,
    objective: &dyn Objective,
    start: Params,
    initial_step: f64,
    opts: &SearchOptions,
) -> (Params, Score, u64) {
    let coords = coordinates(space);
    let evals = std::cell::Cell::new(0u64);
    let score_of = |p: &Params| {
        evals.set(evals.get() + 1);
        objective.score(&eval.terms(p))
    };
    let mut best_score = score_of(&start);
    let mut best = start;
    let mut h = initial_step;
    for _ in 0..opts.sweeps {
        for &c in &coords {
            let (lo, hi) = c.range(&best, h);
            if hi - lo < 1e-15 {
                continue;
            }
            let (p, sc) = golden(lo, hi, opts.golden_iters, |s| {
                let q = c.apply(&best, s);
                let sc = score_of(&q);
                (q, sc)
            });
            if sc.better_than(&best_score) {
                best = p;
                best_score = sc;
            }
        }
        if objective.constrained() {
            for &ci in &coords {
                for &cj in &coords {
                    if ci.same_as(cj) {
                        continue;
                    }
                    let (lo, hi) = ci.range(&best, h);
                    if hi - lo < 1e-15 {
                        continue;
                    }
                    let (p, sc) = golden(lo, hi, opts.pair_iters, |s| {
                        let moved = ci.apply(&best, s);
                        let (lo_j, hi_j) = cj.range(&moved, h);
                        if hi_j - lo_j < 1e-15 {
                            let sc = score_of(&moved);
                            return (moved, sc);
                        }
                        golden(lo_j, hi_j, opts.pair_iters, |r| {
                            let q = cj.apply(&moved, r);
                            let sc = score_of(&q);
                            (q, sc)
                        })
                    });
                    if sc.better_than(&best_score) {
                        best = p;
                        best_score = sc;
                    }
                }
            }
        }
        h *= 0.5;
    }
    (best, best_score, evals.get())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_grid_counts() {
        assert_eq!(simplex_grid(1, 20), vec![vec![1.0]]);
        let g = simplex_grid(2, 4);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], vec![0.0, 1.0]);
        assert_eq!(g[4], vec![1.0, 0.0]);
        for (k, d) in [(3, 5), (4, 3), (2, 20)] {
            let g = simplex_grid(k, d);
            assert_eq!(g.len() as u64, simplex_count(k, d));
            assert!(g.iter().all(|w| Pmf::new(w.clone()).is_ok()));
        }
    }

    #[test]
    fn grid_budget_lowers_resolution() {
        let opts = SearchOptions::default();
        let two = SearchSpace {
            card_t: 2,
            x2_size: 2,
            restriction: X2Restriction::Free,
        };
        assert_eq!(effective_grid_points(&two, &opts), 21);
        let four = SearchSpace { card_t: 4, ..two };
        let g = effective_grid_points(&four, &opts);
        assert!(g < 21 && grid_size(&four, g) <= opts.grid_budget);
    }

    #[test]
    fn score_ordering() {
        let feasible = Score::feasible(-5.0);
        let infeasible = Score {
            violation: 0.1,
            value: 10.0,
        };
        assert!(feasible.better_than(&infeasible));
        assert!(Score {
            violation: 0.01,
            value: 0.0
        }
        .better_than(&infeasible));
        assert!(Score::feasible(1.0).better_than(&feasible));
        assert!(!feasible.better_than(&feasible));
    }

    #[test]
    fn top_k_keeps_smallest_index_on_ties() {
        let mut top = TopK::new(2);
        for i in [5, 3, 9, 1] {
            top.offer(Score::feasible(1.0), i);
        }
        top.offer(Score::feasible(0.5), 0);
        assert_eq!(
            top.items.iter().map(|x| x.1).collect::<Vec<_>>(),
            vec![1, 3]
        );
    }
}
