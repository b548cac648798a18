#![allow(dead_code)]

use covert_mac::channel::DiscreteChannel;
use covert_mac::probability::Pmf;
use covert_mac::region::TimeSharingInput;
use rand::Rng;

/// Entries drawn from `[0.1, 1)` and normalized, so every row has full support.
pub fn random_row(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

pub fn random_pmf(rng: &mut impl Rng, len: usize) -> Pmf {
    Pmf::new(random_row(rng, len)).unwrap()
}

/// Channel with full-support rows, hence admissible with probability one.
pub fn random_channel(rng: &mut impl Rng) -> DiscreteChannel {
    let x2 = rng.random_range(2..=3);
    let y = rng.random_range(2..=4);
    let z = rng.random_range(2..=4);
    let w_y = (0..2 * x2).map(|_| random_row(rng, y)).collect();
    let w_z = (0..2 * x2).map(|_| random_row(rng, z)).collect();
    let ch = DiscreteChannel::new(x2, y, z, w_y, w_z).unwrap();
    assert!(ch.check_conditions().admissible);
    ch
}

pub fn random_input(rng: &mut impl Rng, card_t: usize, x2_size: usize) -> TimeSharingInput {
    TimeSharingInput::new(
        random_pmf(rng, card_t),
        (0..card_t).map(|_| random_pmf(rng, x2_size)).collect(),
        (0..card_t).map(|_| rng.random_range(0.05..=1.0)).collect(),
    )
    .unwrap()
}

pub fn workspace_root() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn channel_file(name: &str) -> std::path::PathBuf {
    workspace_root().join("channels").join(name)
}
