#![allow(dead_code)]

use opinf_core::pod::{PodOptions, RankSelection};
use opinf_core::synthfom::{generate_grid, linspace, SynthConfig};
use opinf_core::train::{train, RegularizationChoice, TrainOptions, TrainOutcome};
use opinf_core::{Regularization, SnapshotSet};

pub fn small_config() -> SynthConfig {
    SynthConfig {
        n_x: 100,
        k: 60,
        ..SynthConfig::default()
    }
}

/// 3×3 training grid over [0.5, 1.5]² at low resolution.
pub fn small_grid() -> Vec<SnapshotSet> {
    let mu = linspace(0.5, 1.5, 3);
    generate_grid(&small_config(), &mu, &mu).unwrap()
}

pub fn small_model(sets: &[SnapshotSet]) -> TrainOutcome {
    let options = TrainOptions {
        pod: PodOptions {
            rank: RankSelection::Fixed(6),
            ..PodOptions::default()
        },
        regularization: RegularizationChoice::Fixed(Regularization::new(1e-3, 1e6, 1e-3).unwrap()),
    };
    train(sets, &options).unwrap()
}
