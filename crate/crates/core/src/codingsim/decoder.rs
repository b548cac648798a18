use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use super::{eta_threshold, rng, Codebooks, SchemeConfig, SimError, TypicalityReference};
use crate::channel::DiscreteChannel;
use crate::probability::DenomMode;
use crate::region::TimeSharingInput;

/// Whether user 1 transmits its codeword (`H1`) or stays silent (`H0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn index(&self) -> u8 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }
}

/// Error counts from [`run_trials`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimStats {
    pub hypothesis: Hypothesis,
    pub trials: u64,
    /// Trials counted as errors: wrong `W2`, plus wrong `W1` under `H1`.
    pub errors: u64,
    /// Trials where `W2` alone was decoded wrongly.
    pub w2_errors: u64,
}

impl SimStats {
    pub fn pe_hat(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    /// Binomial standard error of [`pe_hat`](Self::pe_hat).
    pub fn pe_se(&self) -> f64 {
        let p = self.pe_hat();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

struct Receiver<'a> {
    cb: &'a Codebooks,
    x2_size: usize,
    y_size: usize,
    reference: Vec<f64>,
    mu: f64,
    llr: Vec<f64>,
    eta: f64,
}

impl<'a> Receiver<'a> {
    fn new(
        cfg: &SchemeConfig,
        input: &TimeSharingInput,
        ch: &DiscreteChannel,
        cb: &'a Codebooks,
    ) -> Self {
        let (x2_size, y_size) = (ch.x2_size(), ch.y_size());
        let mut reference = Vec::with_capacity(input.card_t() * x2_size * y_size);
        for t in 0..input.card_t() {
            let a = cfg.activity(input.eps()[t]);
            for x2 in 0..x2_size {
                let p = input.p_t()[t] * input.p_x2_given_t()[t][x2];
                let (w0, w1) = (ch.w_y(0, x2).weights(), ch.w_y(1, x2).weights());
                for y in 0..y_size {
                    let wy = match cfg.reference {
                        TypicalityReference::Asymptotic => w0[y],
                        TypicalityReference::FiniteN => (1.0 - a) * w0[y] + a * w1[y],
                    };
                    reference.push(p * wy);
                }
            }
        }
        let mut llr = Vec::with_capacity(x2_size * y_size);
        for x2 in 0..x2_size {
            for (&a, &b) in ch.w_y(1, x2).weights().iter().zip(ch.w_y(0, x2).weights()) {
                llr.push(match (a > 0.0, b > 0.0) {
                    (false, _) => f64::NEG_INFINITY,
                    (true, false) => f64::INFINITY,
                    (true, true) => a.ln() - b.ln(),
                });
            }
        }
        // The threshold formula needs D_Y only, which does not depend on the χ² mode.
        let stats = ch.x2_stats_unchecked(DenomMode::First);
        Receiver {
            cb,
            x2_size,
            y_size,
            reference,
            mu: cfg.mu,
            llr,
            eta: eta_threshold(cfg, input, &stats),
        }
    }

    fn typical(&self, x2: &[usize], y: &[usize], counts: &mut [u32]) -> bool {
        counts.iter_mut().for_each(|c| *c = 0);
        for ((&t, &a), &b) in self.cb.t_seq().iter().zip(x2).zip(y) {
            counts[(t * self.x2_size + a) * self.y_size + b] += 1;
        }
        let n = y.len() as f64;
        counts.iter().zip(&self.reference).all(|(&c, &p)| {
            if p == 0.0 {
                c == 0
            } else {
                (c as f64 / n - p).abs() <= self.mu
            }
        })
    }

    /// Unique typical `w2`, if any.
    fn decode_w2(&self, y: &[usize], counts: &mut [u32]) -> Option<usize> {
        let mut found = None;
        for w in 0..self.cb.m2() {
            if self.typical(self.cb.codeword2(w), y, counts) {
                if found.is_some() {
                    return None;
                }
                found = Some(w);
            }
        }
        found
    }

    fn llr(&self, x1: &[u8], x2: &[usize], y: &[usize]) -> f64 {
        let (mut sum, mut pos_inf) = (0.0, false);
        for ((&b, &a), &out) in x1.iter().zip(x2).zip(y) {
            if b == 1 {
                let v = self.llr[a * self.y_size + out];
                if v == f64::NEG_INFINITY {
                    return v;
                }
                if v == f64::INFINITY {
                    pos_inf = true;
                } else {
                    sum += v;
                }
            }
        }
        if pos_inf {
            f64::INFINITY
        } else {
            sum
        }
    }

    /// Unique `w1` whose codeword under key `s` passes the threshold, if any.
    fn decode_w1(&self, s: usize, x2: &[usize], y: &[usize]) -> Option<usize> {
        let mut found = None;
        for w in 0..self.cb.m1() {
            if self.llr(self.cb.codeword1(w, s), x2, y) >= self.eta {
                if found.is_some() {
                    return None;
                }
                found = Some(w);
            }
        }
        found
    }
}

/// Monte Carlo error rates of both decoders under `hypothesis`.
///
/// Trial `i` draws its messages, key and channel noise from its own stream, so
/// `H0` and `H1` runs with the same seed see the same `(W1, S, W2)`.
pub fn run_trials(
    cfg: &SchemeConfig,
    input: &TimeSharingInput,
    ch: &DiscreteChannel,
    cb: &Codebooks,
    hypothesis: Hypothesis,
    trials: u64,
) -> Result<SimStats, SimError> {
    if trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    cfg.check_input(input)?;
    cb.check_channel(ch)?;
    if cb.card_t() != input.card_t() {
        return Err(SimError::Codebook(format!(
            "{} classes in codebook, {} in input",
            cb.card_t(),
            input.card_t()
        )));
    }
    let rx = Receiver::new(cfg, input, ch, cb);
    let rows: Vec<WeightedIndex<f64>> = (0..2)
        .flat_map(|x1| (0..ch.x2_size()).map(move |x2| (x1, x2)))
        .map(|(x1, x2)| {
            WeightedIndex::new(ch.w_y(x1, x2).weights()).expect("channel rows are pmfs")
        })
        .collect();
    let n = cb.n();
    let (w2_errors, errors) = (0..trials)
        .into_par_iter()
        .map_init(
            || (vec![0u32; rx.reference.len()], vec![0usize; n]),
            |(counts, y), trial| {
                let mut r = rng::stream(cfg.seed, rng::Role::Trial, n, trial);
                let w1 = r.random_range(0..cb.m1());
                let s = r.random_range(0..cb.key_size());
                let w2 = r.random_range(0..cb.m2());
                let x1 = cb.codeword1(w1, s);
                let x2 = cb.codeword2(w2);
                for i in 0..n {
                    let b = if hypothesis == Hypothesis::H1 {
                        x1[i] as usize
                    } else {
                        0
                    };
                    y[i] = rows[b * ch.x2_size() + x2[i]].sample(&mut r);
                }
                let w2_ok = rx.decode_w2(y, counts) == Some(w2);
                let ok =
                    w2_ok && (hypothesis == Hypothesis::H0 || rx.decode_w1(s, x2, y) == Some(w1));
                (u64::from(!w2_ok), u64::from(!ok))
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(SimStats {
        hypothesis,
        trials,
        errors,
        w2_errors,
    })
}
