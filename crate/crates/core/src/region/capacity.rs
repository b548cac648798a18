use crate::probability::{kl_unchecked, Pmf};

#[derive(Debug, Clone)]
pub struct Capacity {
    /// Capacity in nats.
    pub value: f64,
    pub input: Pmf,
    pub iterations: usize,
}

/// Blahut–Arimoto iteration for the channel `x -> rows[x]`.
///
/// Stops once the upper and lower capacity estimates differ by less than `tol`.
pub fn blahut_arimoto(rows: &[Pmf], tol: f64, max_iter: usize) -> Capacity {
    let n = rows.len();
    let y_len = rows[0].len();
    let mut p = vec![1.0 / n as f64; n];
    let mut output = vec![0.0; y_len];
    let mut lower = 0.0;
    for iter in 1..=max_iter {
        output.iter_mut().for_each(|o| *o = 0.0);
        for (px, row) in p.iter().zip(rows) {
            for (o, &w) in output.iter_mut().zip(row.weights()) {
                *o += px * w;
            }
        }
        let d: Vec<f64> = rows
            .iter()
            .map(|r| kl_unchecked(r.weights(), &output))
            .collect();
        lower = p.iter().zip(&d).map(|(px, dx)| px * dx).sum::<f64>();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < tol {
            return Capacity {
                value: lower,
                input: finish(p),
                iterations: iter,
            };
        }
        let mut total = 0.0;
        for (px, dx) in p.iter_mut().zip(&d) {
            *px *= dx.exp();
            total += *px;
        }
        p.iter_mut().for_each(|px| *px /= total);
    }
    Capacity {
        value: lower,
        input: finish(p),
        iterations: max_iter,
    }
}

fn finish(mut p: Vec<f64>) -> Pmf {
    let head: f64 = p[..p.len() - 1].iter().sum();
    let last = p.len() - 1;
    p[last] = (1.0 - head).max(0.0);
    Pmf::new(p).expect("iterates stay on the simplex")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_symmetric_channel() {
        let f = 0.11f64;
        let rows = vec![
            Pmf::new(vec![1.0 - f, f]).unwrap(),
            Pmf::new(vec![f, 1.0 - f]).unwrap(),
        ];
        let c = blahut_arimoto(&rows, 1e-14, 10_000);
        let h = -f * f.ln() - (1.0 - f) * (1.0 - f).ln();
        assert!((c.value - (std::f64::consts::LN_2 - h)).abs() < 1e-12);
        assert!((c.input[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn useless_channel_has_zero_capacity() {
        let row = Pmf::new(vec![0.3, 0.7]).unwrap();
        let c = blahut_arimoto(&[row.clone(), row], 1e-14, 100);
        assert!(c.value.abs() < 1e-15);
        assert_eq!(c.iterations, 1);
    }
}
