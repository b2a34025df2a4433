//! Fixed workloads shared by the benchmarks.

use nonmarkov_core::gaussian::initial_covariance;
use nonmarkov_core::lindblad::{pauli_x, pauli_z};
use nonmarkov_core::{
    CMatrix, ComplexCovariance, LindbladGenerator, ModeNetwork, PropagatorFamily, SweepConfig, C64,
};

pub fn sin_dephasing() -> LindbladGenerator {
    LindbladGenerator::pure_dephasing(|t: f64| t.sin())
}

/// Qubit with a driven Hamiltonian, decay at a time-dependent rate and dephasing.
pub fn driven_qubit() -> LindbladGenerator {
    let lowering = CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
    );
    LindbladGenerator::new(2)
        .with_hamiltonian_fn(|t: f64| pauli_x().scale(t.cos()))
        .with_channel(|t: f64| 0.3 + 0.5 * (2.0 * t).sin(), lowering)
        .expect("2x2 operator")
        .with_channel(|_| 0.1, pauli_z())
        .expect("2x2 operator")
}

pub fn sin_family(steps: usize) -> PropagatorFamily {
    sin_dephasing()
        .propagate(2.0 * std::f64::consts::PI, steps)
        .expect("sin dephasing propagates")
}

/// One Ohmic sweep cell with `modes` bath modes.
pub fn gaussian_cell(modes: usize) -> (SweepConfig, ModeNetwork, ComplexCovariance) {
    let config = SweepConfig {
        modes,
        ..SweepConfig::default()
    };
    let (net, cov) = config.cell_setup(0.25, 2.0).expect("default cell is valid");
    (config, net, cov)
}

pub fn tmsv(r: f64) -> ComplexCovariance {
    initial_covariance(r, 0.0, &[]).expect("valid squeezing")
}
