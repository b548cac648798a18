//! Finite-blocklength realization of the covert MAC coding scheme: time-sharing
//! sequence, random codebooks, the two decoders and the warden's divergence.

mod decoder;
mod delta;
mod rng;

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Bernoulli, Distribution};
use thiserror::Error;

use crate::channel::{ChannelError, DiscreteChannel, X2Stats};
use crate::probability::Pmf;
use crate::region::{RegionError, RegionModel, TimeSharingInput};

pub use decoder::{run_trials, Hypothesis, SimStats};
pub use delta::{
    delta_average, delta_exact, delta_mc, delta_registry, DeltaEstimate, DeltaEstimator,
    DeltaMethod, DeltaSettings, DeltaSummary, DEFAULT_DELTA_METHOD, DEFAULT_ENUMERATION_CAP,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("blocklength must be at least 1")]
    Blocklength,
    #[error("{0} must be at least 1")]
    Count(&'static str),
    #[error("omega must be positive and finite, got {0}")]
    Omega(f64),
    #[error("typicality slack mu must be positive, got {0}")]
    Mu(f64),
    #[error("xi1 must lie in (0, 1), got {0}")]
    Xi1(f64),
    #[error("Bernoulli parameter eps[{t}]*omega/sqrt(n) = {value} exceeds 1")]
    BernoulliParameter { t: usize, value: f64 },
    #[error("class {t}: {count}/{n} deviates from P_T = {target} by more than mu = {mu}")]
    TypeInfeasible {
        t: usize,
        count: usize,
        n: usize,
        target: f64,
        mu: f64,
    },
    #[error("codebook uses {got} {what}, channel has {expected}")]
    Alphabet {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("codebook shape mismatch: {0}")]
    Codebook(String),
    #[error("number of trials must be positive")]
    ZeroTrials,
    #[error("exact divergence needs {states} output states, above the cap of {cap}; use the Monte Carlo estimator")]
    EnumerationCap { states: f64, cap: u64 },
    #[error("Monte Carlo divergence needs at least 1000 samples, got {0}")]
    Samples(usize),
    #[error("warden output {z} at position {position} has zero reference probability but positive probability under the codebook")]
    AbsoluteContinuity { position: usize, z: usize },
    #[error("message index {index} out of range for M2 = {m2}")]
    MessageIndex { index: usize, m2: usize },
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Law the W2 typicality test compares joint types against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TypicalityReference {
    /// `P_TX2(t, x2) · W_Y(y | 0, x2)`, the `n → ∞` limit.
    #[default]
    Asymptotic,
    /// `P_TX2(t, x2) · Σ_x1 P_X1|T(x1|t) W_Y(y | x1, x2)` at the configured `n` and `omega`.
    FiniteN,
}

impl TypicalityReference {
    pub fn as_str(&self) -> &'static str {
        match self {
            TypicalityReference::Asymptotic => "asymptotic",
            TypicalityReference::FiniteN => "finite-n",
        }
    }
}

impl fmt::Display for TypicalityReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TypicalityReference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "asymptotic" => Ok(TypicalityReference::Asymptotic),
            "finite-n" => Ok(TypicalityReference::FiniteN),
            other => Err(format!(
                "unknown typicality reference '{other}' (expected asymptotic or finite-n)"
            )),
        }
    }
}

/// `c · n^{-1/4}`.
pub fn default_omega(n: usize, c: f64) -> f64 {
    c * (n as f64).powf(-0.25)
}

/// `n^{-1/3}`.
pub fn default_mu(n: usize) -> f64 {
    (n as f64).powf(-1.0 / 3.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub key_size: usize,
    pub omega: f64,
    pub mu: f64,
    pub xi1: f64,
    pub seed: u64,
    pub reference: TypicalityReference,
    /// Replaces the W1 decoder threshold computed from the scheme parameters.
    pub eta_override: Option<f64>,
}

impl SchemeConfig {
    /// Default `omega`, `mu`, `xi1 = 0.5` and the asymptotic typicality reference.
    pub fn new(n: usize, m1: usize, m2: usize, key_size: usize, seed: u64) -> Self {
        SchemeConfig {
            n,
            m1,
            m2,
            key_size,
            omega: default_omega(n.max(1), 1.0),
            mu: default_mu(n.max(1)),
            xi1: 0.5,
            seed,
            reference: TypicalityReference::Asymptotic,
            eta_override: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(SimError::Blocklength);
        }
        for (v, name) in [
            (self.m1, "m1"),
            (self.m2, "m2"),
            (self.key_size, "key_size"),
        ] {
            if v == 0 {
                return Err(SimError::Count(name));
            }
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(SimError::Omega(self.omega));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(SimError::Mu(self.mu));
        }
        if !(self.xi1 > 0.0 && self.xi1 < 1.0) {
            return Err(SimError::Xi1(self.xi1));
        }
        Ok(())
    }

    /// `P_{X1|T}(1 | t) = eps_t · omega / √n`.
    pub fn activity(&self, eps: f64) -> f64 {
        eps * self.omega / (self.n as f64).sqrt()
    }

    /// Validates the configuration together with the input it will be used with.
    pub fn check_input(&self, input: &TimeSharingInput) -> Result<(), SimError> {
        self.validate()?;
        for (t, &e) in input.eps().iter().enumerate() {
            let value = self.activity(e);
            if value > 1.0 {
                return Err(SimError::BernoulliParameter { t, value });
            }
        }
        Ok(())
    }

    pub fn m1k(&self) -> usize {
        self.m1 * self.key_size
    }
}

/// Class counts by largest-remainder rounding of `n · P_T`, laid out in sorted blocks.
pub fn timesharing_sequence(n: usize, p_t: &Pmf, mu: f64) -> Result<Vec<usize>, SimError> {
    let targets: Vec<f64> = p_t.weights().iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = targets.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (
            targets[a] - targets[a].floor(),
            targets[b] - targets[b].floor(),
        );
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &t in order.iter().take(n.saturating_sub(assigned)) {
        counts[t] += 1;
    }
    for (t, &count) in counts.iter().enumerate() {
        let target = p_t[t];
        let bad = (count as f64 / n as f64 - target).abs() > mu || (target == 0.0 && count > 0);
        if bad {
            return Err(SimError::TypeInfeasible {
                t,
                count,
                n,
                target,
                mu,
            });
        }
    }
    Ok(counts
        .iter()
        .enumerate()
        .flat_map(|(t, &c)| std::iter::repeat_n(t, c))
        .collect())
}

/// User 1 codewords indexed by `w1 · K + s`, user 2 codewords by `w2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebooks {
    t_seq: Vec<usize>,
    card_t: usize,
    x2_size: usize,
    m1: usize,
    key_size: usize,
    c1: Vec<Vec<u8>>,
    c2: Vec<Vec<usize>>,
}

impl Codebooks {
    pub fn from_parts(
        t_seq: Vec<usize>,
        card_t: usize,
        x2_size: usize,
        m1: usize,
        key_size: usize,
        c1: Vec<Vec<u8>>,
        c2: Vec<Vec<usize>>,
    ) -> Result<Self, SimError> {
        let n = t_seq.len();
        if n == 0 {
            return Err(SimError::Blocklength);
        }
        if m1 == 0 || key_size == 0 || c2.is_empty() {
            return Err(SimError::Codebook("empty codebook".into()));
        }
        if c1.len() != m1 * key_size {
            return Err(SimError::Codebook(format!(
                "{} user-1 codewords, expected {}",
                c1.len(),
                m1 * key_size
            )));
        }
        if c1.iter().any(|c| c.len() != n || c.iter().any(|&b| b > 1))
            || c2
                .iter()
                .any(|c| c.len() != n || c.iter().any(|&x| x >= x2_size))
            || t_seq.iter().any(|&t| t >= card_t)
        {
            return Err(SimError::Codebook(
                "codeword length or symbol out of range".into(),
            ));
        }
        Ok(Codebooks {
            t_seq,
            card_t,
            x2_size,
            m1,
            key_size,
            c1,
            c2,
        })
    }

    pub fn n(&self) -> usize {
        self.t_seq.len()
    }

    pub fn t_seq(&self) -> &[usize] {
        &self.t_seq
    }

    pub fn card_t(&self) -> usize {
        self.card_t
    }

    pub fn x2_size(&self) -> usize {
        self.x2_size
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn key_size(&self) -> usize {
        self.key_size
    }

    pub fn m2(&self) -> usize {
        self.c2.len()
    }

    pub fn user1(&self) -> &[Vec<u8>] {
        &self.c1
    }

    pub fn user2(&self) -> &[Vec<usize>] {
        &self.c2
    }

    pub fn codeword1(&self, w1: usize, s: usize) -> &[u8] {
        &self.c1[w1 * self.key_size + s]
    }

    pub fn codeword2(&self, w2: usize) -> &[usize] {
        &self.c2[w2]
    }

    fn check_channel(&self, ch: &DiscreteChannel) -> Result<(), SimError> {
        if self.x2_size != ch.x2_size() {
            return Err(SimError::Alphabet {
                what: "x2 symbols",
                got: self.x2_size,
                expected: ch.x2_size(),
            });
        }
        Ok(())
    }
}

pub fn sample_codebooks(
    cfg: &SchemeConfig,
    input: &TimeSharingInput,
) -> Result<Codebooks, SimError> {
    cfg.check_input(input)?;
    let t_seq = timesharing_sequence(cfg.n, input.p_t(), cfg.mu)?;
    let activity: Vec<Bernoulli> = input
        .eps()
        .iter()
        .map(|&e| Bernoulli::new(cfg.activity(e)).expect("checked against 1 above"))
        .collect();
    let c1 = (0..cfg.m1k())
        .map(|j| {
            let mut rng = rng::stream(cfg.seed, rng::Role::User1Codeword, cfg.n, j as u64);
            t_seq
                .iter()
                .map(|&t| u8::from(activity[t].sample(&mut rng)))
                .collect()
        })
        .collect();
    let laws: Vec<WeightedIndex<f64>> = input
        .p_x2_given_t()
        .iter()
        .map(|q| WeightedIndex::new(q.weights()).expect("conditional laws are pmfs"))
        .collect();
    let c2 = (0..cfg.m2)
        .map(|w| {
            let mut rng = rng::stream(cfg.seed, rng::Role::User2Codeword, cfg.n, w as u64);
            t_seq.iter().map(|&t| laws[t].sample(&mut rng)).collect()
        })
        .collect();
    Codebooks::from_parts(
        t_seq,
        input.card_t(),
        input.x2_size(),
        cfg.m1,
        cfg.key_size,
        c1,
        c2,
    )
}

/// W1 decoder threshold `(1 − ξ1/2) · √n · ω · E[ε_T D_Y(X2)]`, unless overridden.
pub fn eta_threshold(cfg: &SchemeConfig, input: &TimeSharingInput, stats: &X2Stats) -> f64 {
    if let Some(eta) = cfg.eta_override {
        return eta;
    }
    let eps_dy = input.expect(|t, x| input.eps()[t] * stats.d_y[x]);
    (1.0 - cfg.xi1 / 2.0) * (cfg.n as f64).sqrt() * cfg.omega * eps_dy
}

/// Leading-order covertness divergence `(ω²/2) · E[ε_T² χ2,Z(X2)]`.
pub fn delta_theory(cfg: &SchemeConfig, input: &TimeSharingInput, stats: &X2Stats) -> f64 {
    let eps = input.eps();
    cfg.omega * cfg.omega / 2.0 * input.expect(|t, x| eps[t] * eps[t] * stats.chi2_z[x])
}

/// Log-size targets of the scheme, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeTargets {
    pub log_m2: f64,
    pub log_m1: f64,
    pub log_m1k: f64,
}

pub fn size_targets(
    cfg: &SchemeConfig,
    input: &TimeSharingInput,
    model: &RegionModel,
    xi: f64,
    xi1: f64,
    xi2: f64,
) -> SizeTargets {
    let terms = model.terms(input);
    let scale = cfg.omega * (cfg.n as f64).sqrt();
    SizeTargets {
        log_m2: (1.0 - xi) * cfg.n as f64 * terms.r2,
        log_m1: (1.0 - xi1) * scale * terms.eps_dy,
        log_m1k: (1.0 + xi2) * scale * terms.eps_dz,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookDiagnostics {
    /// Fraction of user-1 codewords with a 1 at each position.
    pub alpha: Vec<f64>,
    /// `lambda[w2][t][x2]`: fraction of positions with class `t` where codeword `w2` has symbol `x2`.
    pub lambda: Vec<Vec<Vec<f64>>>,
    pub eta0: f64,
}

pub fn codebook_diagnostics(
    cb: &Codebooks,
    ch: &DiscreteChannel,
) -> Result<CodebookDiagnostics, SimError> {
    cb.check_channel(ch)?;
    let n = cb.n();
    let m = cb.c1.len() as f64;
    let alpha = (0..n)
        .map(|i| cb.c1.iter().filter(|c| c[i] == 1).count() as f64 / m)
        .collect();
    let lambda = cb
        .c2
        .iter()
        .map(|c| {
            let mut table = vec![vec![0.0; cb.x2_size]; cb.card_t];
            for (&t, &x) in cb.t_seq.iter().zip(c) {
                table[t][x] += 1.0 / n as f64;
            }
            table
        })
        .collect();
    Ok(CodebookDiagnostics {
        alpha,
        lambda,
        eta0: ch.eta0(),
    })
}
