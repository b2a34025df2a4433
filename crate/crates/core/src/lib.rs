//! Quantifiers of non-Markovianity for open quantum evolutions.
//!
//! Two independent routes are provided:
//!
//! * a divisibility measure, built from the trace norm of the Choi matrix of
//!   the intermediate maps `E(t+ε, t)` of a propagator family or a Lindblad
//!   generator ([`divisibility`]);
//! * a model-free entanglement witness, the total upward variation of the
//!   system–ancilla entanglement ([`monitor`]), fed here by an exact Gaussian
//!   simulation of a damped oscillator in a discretized bosonic bath
//!   ([`gaussian`]).
//!
//! Superoperators act on column-stacked operators: `vec(ρ)[i + d·j] = ρ[i, j]`,
//! so that `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divisibility;
pub mod error;
pub mod gaussian;
pub mod lindblad;
pub mod monitor;
pub mod operator;
pub mod tomography;

pub use divisibility::{
    dephasing_oracle, f_ncp, g_from_family, g_from_generator, g_perturbative, rhp_integral,
    GSample, NonMarkovReport,
};
pub use error::{Error, Result};
pub use gaussian::{
    BathSpec, ComplexCovariance, ModeNetwork, QuadratureCovariance, SpectralDensity, SpectralKind,
};
pub use lindblad::{IntermediateMap, LindbladGenerator, PropagatorFamily, WindowFlag};
pub use monitor::{i_entanglement, EntanglementSeries, SweepCell, SweepConfig};
pub use operator::{
    partial_transpose, trace_norm, ChoiMatrix, DensityMatrix, Inversion, MaxEntangledState,
    Subsystem, Superoperator, C64, CMatrix,
};

/// Fixed 12-significant-digit rendering used by every text export.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0.00000000000e0"
        return "0.00000000000e0".to_string();
    }
    format!("{x:.11e}")
}
