//! The warden's divergence `D(Q̂_{C,w2} ‖ W_Z^{⊗n}(· | 0ⁿ, x2ⁿ(w2)))`.
//!
//! Positions where every user-1 codeword is 0 contribute identical factors to
//! both laws and drop out, so only the remaining "active" positions are
//! enumerated or sampled.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use super::{rng, Codebooks, SimError};
use crate::channel::DiscreteChannel;
use crate::registry::Registry;

pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMethod {
    Exact,
    MonteCarlo,
}

impl DeltaMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeltaMethod::Exact => "exact",
            DeltaMethod::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    pub value: f64,
    /// Zero for exact values.
    pub se: f64,
    pub method: DeltaMethod,
}

/// Per-position data for the active positions of one `w2`.
struct Active {
    /// `ones[c][j]`: codeword `c` has a 1 at active position `j`.
    ones: Vec<Vec<bool>>,
    /// `reference[j][z] = W_Z(z | 0, x2)`.
    reference: Vec<Vec<f64>>,
    /// `ratio[j][z] = W_Z(z | 1, x2) / W_Z(z | 0, x2)`, zero where both vanish.
    ratio: Vec<Vec<f64>>,
    /// `alt[j][z] = W_Z(z | 1, x2)`.
    alt: Vec<Vec<f64>>,
}

impl Active {
    fn new(cb: &Codebooks, ch: &DiscreteChannel, w2: usize) -> Result<Self, SimError> {
        cb.check_channel(ch)?;
        if w2 >= cb.m2() {
            return Err(SimError::MessageIndex {
                index: w2,
                m2: cb.m2(),
            });
        }
        let positions: Vec<usize> = (0..cb.n())
            .filter(|&i| cb.user1().iter().any(|c| c[i] == 1))
            .collect();
        let x2 = cb.codeword2(w2);
        let mut reference = Vec::with_capacity(positions.len());
        let mut ratio = Vec::with_capacity(positions.len());
        let mut alt = Vec::with_capacity(positions.len());
        for &i in &positions {
            let base = ch.w_z(0, x2[i]).weights();
            let one = ch.w_z(1, x2[i]).weights();
            let mut r = Vec::with_capacity(base.len());
            for (z, (&b, &a)) in base.iter().zip(one).enumerate() {
                if b == 0.0 && a > 0.0 {
                    return Err(SimError::AbsoluteContinuity { position: i, z });
                }
                r.push(if b == 0.0 { 0.0 } else { a / b });
            }
            reference.push(base.to_vec());
            alt.push(one.to_vec());
            ratio.push(r);
        }
        let ones = cb
            .user1()
            .iter()
            .map(|c| positions.iter().map(|&i| c[i] == 1).collect())
            .collect();
        Ok(Active {
            ones,
            reference,
            ratio,
            alt,
        })
    }

    fn len(&self) -> usize {
        self.reference.len()
    }
}

/// Exact divergence by enumeration of the warden outputs at active positions.
pub fn delta_exact(
    cb: &Codebooks,
    ch: &DiscreteChannel,
    w2: usize,
    cap: u64,
) -> Result<f64, SimError> {
    let act = Active::new(cb, ch, w2)?;
    let states = (ch.z_size() as f64).powi(act.len() as i32);
    if states > cap as f64 {
        return Err(SimError::EnumerationCap { states, cap });
    }
    let m = act.ones.len();
    // partial[d][c]: product of ratios of codeword c over the first d active positions
    let mut partial = vec![vec![1.0; m]; act.len() + 1];
    let mut total = 0.0;
    enumerate(&act, 0, 1.0, &mut partial, &mut total);
    Ok(total.max(0.0))
}

fn enumerate(act: &Active, depth: usize, ref_prob: f64, partial: &mut [Vec<f64>], total: &mut f64) {
    if depth == act.len() {
        let l = partial[depth].iter().sum::<f64>() / partial[depth].len() as f64;
        if l > 0.0 {
            *total += ref_prob * l * l.ln();
        }
        return;
    }
    for (z, &b) in act.reference[depth].iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let r = act.ratio[depth][z];
        let (head, tail) = partial.split_at_mut(depth + 1);
        for (c, next) in tail[0].iter_mut().enumerate() {
            *next = if act.ones[c][depth] {
                head[depth][c] * r
            } else {
                head[depth][c]
            };
        }
        enumerate(act, depth + 1, ref_prob * b, partial, total);
    }
}

/// Monte Carlo estimate of the divergence and its standard error.
pub fn delta_mc(
    cb: &Codebooks,
    ch: &DiscreteChannel,
    w2: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), SimError> {
    if samples < 1000 {
        return Err(SimError::Samples(samples));
    }
    let act = Active::new(cb, ch, w2)?;
    if act.len() == 0 {
        return Ok((0.0, 0.0));
    }
    let m = act.ones.len();
    let alt: Vec<WeightedIndex<f64>> = act
        .alt
        .iter()
        .map(|w| WeightedIndex::new(w).expect("channel rows are pmfs"))
        .collect();
    let base: Vec<WeightedIndex<f64>> = act
        .reference
        .iter()
        .map(|w| WeightedIndex::new(w).expect("channel rows are pmfs"))
        .collect();
    let mut rng = rng::stream(seed, rng::Role::Warden, cb.n(), w2 as u64);
    let mut ratios = vec![0.0; act.len()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let c = rng.random_range(0..m);
        for (j, r) in ratios.iter_mut().enumerate() {
            let z = if act.ones[c][j] {
                alt[j].sample(&mut rng)
            } else {
                base[j].sample(&mut rng)
            };
            *r = act.ratio[j][z];
        }
        let l = act
            .ones
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&ratios)
                    .filter(|(&one, _)| one)
                    .map(|(_, r)| r)
                    .product::<f64>()
            })
            .sum::<f64>()
            / m as f64;
        let v = l.ln();
        sum += v;
        sum_sq += v * v;
    }
    let k = samples as f64;
    let mean = sum / k;
    let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
    Ok((mean, (var / k).sqrt()))
}

/// Settings shared by the divergence estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaSettings {
    pub cap: u64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for DeltaSettings {
    fn default() -> Self {
        DeltaSettings {
            cap: DEFAULT_ENUMERATION_CAP,
            samples: 20_000,
            seed: 0,
        }
    }
}

pub trait DeltaEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(
        &self,
        cb: &Codebooks,
        ch: &DiscreteChannel,
        w2: usize,
    ) -> Result<DeltaEstimate, SimError>;
}

struct Exact(DeltaSettings);
struct MonteCarlo(DeltaSettings);
struct Auto(DeltaSettings);

impl DeltaEstimator for Exact {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn estimate(
        &self,
        cb: &Codebooks,
        ch: &DiscreteChannel,
        w2: usize,
    ) -> Result<DeltaEstimate, SimError> {
        let value = delta_exact(cb, ch, w2, self.0.cap)?;
        Ok(DeltaEstimate {
            value,
            se: 0.0,
            method: DeltaMethod::Exact,
        })
    }
}

impl DeltaEstimator for MonteCarlo {
    fn name(&self) -> &'static str {
        "monte-carlo"
    }

    fn estimate(
        &self,
        cb: &Codebooks,
        ch: &DiscreteChannel,
        w2: usize,
    ) -> Result<DeltaEstimate, SimError> {
        let (value, se) = delta_mc(cb, ch, w2, self.0.samples, self.0.seed)?;
        Ok(DeltaEstimate {
            value,
            se,
            method: DeltaMethod::MonteCarlo,
        })
    }
}

impl DeltaEstimator for Auto {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn estimate(
        &self,
        cb: &Codebooks,
        ch: &DiscreteChannel,
        w2: usize,
    ) -> Result<DeltaEstimate, SimError> {
        match Exact(self.0).estimate(cb, ch, w2) {
            Err(SimError::EnumerationCap { .. }) => MonteCarlo(self.0).estimate(cb, ch, w2),
            other => other,
        }
    }
}

pub const DEFAULT_DELTA_METHOD: &str = "auto";

pub fn delta_registry() -> Registry<dyn DeltaEstimator, DeltaSettings> {
    let mut r: Registry<dyn DeltaEstimator, DeltaSettings> = Registry::new("delta method");
    r.register(
        "exact",
        "enumerate warden outputs at active positions",
        |s| Box::new(Exact(*s)),
    );
    r.register(
        "monte-carlo",
        "average the log-likelihood ratio over sampled outputs",
        |s| Box::new(MonteCarlo(*s)),
    );
    r.register(
        "auto",
        "exact under the enumeration cap, Monte Carlo above it",
        |s| Box::new(Auto(*s)),
    );
    r
}

/// Divergence averaged over all `w2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSummary {
    pub per_w2: Vec<DeltaEstimate>,
    pub mean: f64,
    /// Standard error of `mean` from the per-`w2` Monte Carlo errors.
    pub se: f64,
    /// `Exact` only when every per-`w2` value is exact.
    pub method: DeltaMethod,
}

pub fn delta_average(
    cb: &Codebooks,
    ch: &DiscreteChannel,
    estimator: &dyn DeltaEstimator,
) -> Result<DeltaSummary, SimError> {
    let per_w2 = (0..cb.m2())
        .into_par_iter()
        .map(|w2| estimator.estimate(cb, ch, w2))
        .collect::<Result<Vec<_>, _>>()?;
    let k = per_w2.len() as f64;
    let mean = per_w2.iter().map(|d| d.value).sum::<f64>() / k;
    let se = per_w2.iter().map(|d| d.se * d.se).sum::<f64>().sqrt() / k;
    let method = if per_w2.iter().all(|d| d.method == DeltaMethod::Exact) {
        DeltaMethod::Exact
    } else {
        DeltaMethod::MonteCarlo
    };
    Ok(DeltaSummary {
        per_w2,
        mean,
        se,
        method,
    })
}
