//! Two built-in binary-input channels used throughout the examples and tests.

use crate::channel::DiscreteChannel;

/// A channel on which coded time-sharing strictly enlarges the region.
pub fn time_sharing_example() -> DiscreteChannel {
    DiscreteChannel::new(
        2,
        4,
        4,
        vec![
            vec![0.20, 0.30, 0.20, 0.30],
            vec![0.10, 0.20, 0.30, 0.40],
            vec![0.25, 0.45, 0.10, 0.20],
            vec![0.35, 0.25, 0.20, 0.20],
        ],
        vec![
            vec![0.30, 0.20, 0.10, 0.40],
            vec![0.30, 0.20, 0.15, 0.35],
            vec![0.35, 0.15, 0.20, 0.30],
            vec![0.23, 0.27, 0.20, 0.30],
        ],
    )
    .expect("built-in channel is valid")
    .with_name("time-sharing-example")
}

/// A channel on which a non-constant non-covert input raises the covert rate.
///
/// The second entry of row `(0,1)` of `W_Y` is 0.56; with 0.55 the row would
/// only sum to 0.99.
pub fn helper_example() -> DiscreteChannel {
    DiscreteChannel::new(
        2,
        4,
        4,
        vec![
            vec![0.35, 0.11, 0.31, 0.23],
            vec![0.03, 0.56, 0.40, 0.01],
            vec![0.51, 0.02, 0.17, 0.30],
            vec![0.04, 0.33, 0.62, 0.01],
        ],
        vec![
            vec![0.30, 0.50, 0.08, 0.12],
            vec![0.21, 0.32, 0.39, 0.08],
            vec![0.16, 0.28, 0.37, 0.19],
            vec![0.48, 0.10, 0.38, 0.04],
        ],
    )
    .expect("built-in channel is valid")
    .with_name("helper-example")
}

pub fn by_name(name: &str) -> Option<DiscreteChannel> {
    match name {
        "time-sharing-example" => Some(time_sharing_example()),
        "helper-example" => Some(helper_example()),
        _ => None,
    }
}
