//! Time-dependent Lindblad generators, propagator families and the
//! intermediate maps `E(t_{k+1}, t_k)` extracted from them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{
    hermitian_part, identity, unvectorize, vectorize, CMatrix, DensityMatrix, Superoperator, C64,
    DEFAULT_COND_THRESHOLD, HERMITIAN_TOL,
};

pub type MatrixFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;
pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Residual above which a pseudoinverted window is declared ill-defined.
pub const ILL_DEFINED_RESIDUAL: f64 = 1e-6;

/// Trace-preservation tolerance for family members and unflagged windows.
pub const TP_TOLERANCE: f64 = 1e-8;

/// Propagator norm treated as a blow-up.
const UNSTABLE_NORM: f64 = 1e6;

/// One dissipative channel `γ(t) (V ρ V† − ½{V†V, ρ})`. The rate may be negative.
#[derive(Clone)]
pub struct Channel {
    pub rate: RateFn,
    pub operator: MatrixFn,
}

/// `L_t(ρ) = −i[H(t), ρ] + Σ_k γ_k(t) (V_k ρ V_k† − ½{V_k†V_k, ρ})`.
#[derive(Clone)]
pub struct LindbladGenerator {
    dim: usize,
    hamiltonian: Option<MatrixFn>,
    channels: Vec<Channel>,
}

impl fmt::Debug for LindbladGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LindbladGenerator")
            .field("dim", &self.dim)
            .field("has_hamiltonian", &self.hamiltonian.is_some())
            .field("channels", &self.channels.len())
            .finish()
    }
}

fn check_square(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows(),
        });
    }
    Ok(())
}

impl LindbladGenerator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            hamiltonian: None,
            channels: Vec::new(),
        }
    }

    /// Qubit pure dephasing `dρ/dt = γ(t)(σ_z ρ σ_z − ρ)`.
    pub fn pure_dephasing(rate: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(2).with_channel(rate, pauli_z()).expect("σ_z is 2×2")
    }

    pub fn with_hamiltonian(self, h: CMatrix) -> Result<Self> {
        check_square(&h, self.dim)?;
        hermitian_part(&h)?;
        Ok(self.with_hamiltonian_fn(move |_| h.clone()))
    }

    pub fn with_hamiltonian_fn(mut self, h: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        self.hamiltonian = Some(Arc::new(h));
        self
    }

    pub fn with_channel(
        self,
        rate: impl Fn(f64) -> f64 + Send + Sync + 'static,
        operator: CMatrix,
    ) -> Result<Self> {
        check_square(&operator, self.dim)?;
        Ok(self.with_channel_fn(rate, move |_| operator.clone()))
    }

    pub fn with_channel_fn(
        mut self,
        rate: impl Fn(f64) -> f64 + Send + Sync + 'static,
        operator: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        self.channels.push(Channel {
            rate: Arc::new(rate),
            operator: Arc::new(operator),
        });
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Superoperator matrix of `L_t` under column stacking.
    pub fn generator_matrix(&self, t: f64) -> Result<Superoperator> {
        let d = self.dim;
        let id = identity(d);
        let mut l = CMatrix::zeros(d * d, d * d);
        if let Some(h) = &self.hamiltonian {
            let h = h(t);
            check_square(&h, d)?;
            let h = hermitian_part(&h)?;
            let minus_i = C64::new(0.0, -1.0);
            l += (id.kronecker(&h) - h.transpose().kronecker(&id)) * minus_i;
        }
        for ch in &self.channels {
            let gamma = (ch.rate)(t);
            let v = (ch.operator)(t);
            check_square(&v, d)?;
            let vdv = v.adjoint() * &v;
            let term = v.conjugate().kronecker(&v)
                - id.kronecker(&vdv).scale(0.5)
                - vdv.transpose().kronecker(&id).scale(0.5);
            l += term.scale(gamma);
        }
        Superoperator::from_matrix(d, l)
    }

    /// Applies `L_t` directly to an operator.
    pub fn apply(&self, t: f64, rho: &CMatrix) -> Result<CMatrix> {
        self.generator_matrix(t)?.apply(rho)
    }

    /// Single step `exp(L_{t + dt/2} dt)`.
    pub fn step_map(&self, t: f64, dt: f64) -> Result<CMatrix> {
        let l = self.generator_matrix(t + 0.5 * dt)?;
        Ok((l.matrix() * C64::new(dt, 0.0)).exp())
    }

    /// Propagator family `E(t_k, 0)` on a uniform grid of `steps` intervals.
    pub fn propagate(&self, horizon: f64, steps: usize) -> Result<PropagatorFamily> {
        check_grid(horizon, steps)?;
        let dt = horizon / steps as f64;
        let mut propagators = Vec::with_capacity(steps + 1);
        let mut current = identity(self.dim * self.dim);
        propagators.push(Superoperator::identity(self.dim));
        for k in 0..steps {
            let step = self.step_map(k as f64 * dt, dt)?;
            current = step * current;
            let norm = current.norm();
            if !norm.is_finite() || norm > UNSTABLE_NORM {
                return Err(Error::Unstable { step: k + 1, norm });
            }
            propagators.push(Superoperator::from_matrix(self.dim, current.clone())?);
        }
        let times = (0..=steps).map(|k| k as f64 * dt).collect();
        Ok(PropagatorFamily::assemble(dt, times, propagators))
    }

    /// Evolves a single state with the same stepping as [`Self::propagate`].
    pub fn evolve_state(
        &self,
        rho0: &DensityMatrix,
        horizon: f64,
        steps: usize,
    ) -> Result<StateTrajectory> {
        check_grid(horizon, steps)?;
        if rho0.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho0.dim(),
            });
        }
        let dt = horizon / steps as f64;
        let mut v = vectorize(rho0.matrix());
        let mut states = Vec::with_capacity(steps + 1);
        states.push(rho0.matrix().clone());
        for k in 0..steps {
            v = self.step_map(k as f64 * dt, dt)? * v;
            let norm = v.norm();
            if !norm.is_finite() || norm > UNSTABLE_NORM {
                return Err(Error::Unstable { step: k + 1, norm });
            }
            states.push(unvectorize(&v, self.dim));
        }
        Ok(StateTrajectory {
            times: (0..=steps).map(|k| k as f64 * dt).collect(),
            states,
        })
    }
}

fn check_grid(horizon: f64, steps: usize) -> Result<()> {
    if steps < 1 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)])
}

#[derive(Clone, Debug)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
}

/// Why an intermediate window could not be trusted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WindowFlag {
    /// `E(t_k, 0)` was pseudoinverted but the split is still consistent, or
    /// the inverse was too inaccurate to keep the window trace preserving.
    NonInvertible { condition: f64 },
    /// Pseudoinverted and `E(t_{k+1}, t_k) E(t_k, 0) ≠ E(t_{k+1}, 0)`.
    IllDefined { condition: f64, residual: f64 },
}

impl WindowFlag {
    pub fn label(&self) -> &'static str {
        match self {
            WindowFlag::NonInvertible { .. } => "non-invertible",
            WindowFlag::IllDefined { .. } => "ill-defined",
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntermediateMap {
    pub map: Superoperator,
    pub flag: Option<WindowFlag>,
}

/// `E(t_k, 0)` sampled on a uniform grid starting at `t_0 = 0`.
#[derive(Clone, Debug)]
pub struct PropagatorFamily {
    dt: f64,
    times: Vec<f64>,
    propagators: Vec<Superoperator>,
    conditions: Vec<f64>,
}

impl PropagatorFamily {
    fn assemble(dt: f64, times: Vec<f64>, propagators: Vec<Superoperator>) -> Self {
        let conditions = propagators.iter().map(Superoperator::condition_number).collect();
        Self {
            dt,
            times,
            propagators,
            conditions,
        }
    }

    /// Builds a family from externally supplied data (e.g. process
    /// tomography). Grid must be uniform and start at zero with the identity.
    pub fn from_parts(times: Vec<f64>, propagators: Vec<Superoperator>) -> Result<Self> {
        if times.len() != propagators.len() {
            return Err(Error::InvalidParameter(format!(
                "{} grid times but {} propagators",
                times.len(),
                propagators.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidParameter("need at least two grid points".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("grid must start at 0, found {}", times[0])));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        for (k, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs()) {
                return Err(Error::InvalidParameter(format!(
                    "non-uniform grid at index {}: step {} vs {}",
                    k + 1,
                    w[1] - w[0],
                    dt
                )));
            }
        }
        let dim = propagators[0].dim();
        for p in &propagators {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
        }
        let e0 = propagators[0].matrix() - identity(dim * dim);
        if e0.norm() > 1e-12 {
            return Err(Error::InvalidParameter("E(0,0) must be the identity".into()));
        }
        for p in &propagators {
            let deviation = p.trace_preservation_error();
            if deviation > TP_TOLERANCE {
                return Err(Error::NotTracePreserving { deviation });
            }
        }
        Ok(Self::assemble(dt, times, propagators))
    }

    pub fn dim(&self) -> usize {
        self.propagators[0].dim()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    pub fn len(&self) -> usize {
        self.propagators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.propagators.is_empty()
    }

    pub fn propagator(&self, k: usize) -> &Superoperator {
        &self.propagators[k]
    }

    pub fn propagators(&self) -> &[Superoperator] {
        &self.propagators
    }

    pub fn condition(&self, k: usize) -> f64 {
        self.conditions[k]
    }

    /// Number of windows `[t_k, t_{k+1}]`.
    pub fn windows(&self) -> usize {
        self.propagators.len() - 1
    }

    /// `E(t_{k+1}, t_k) = E(t_{k+1}, 0) E(t_k, 0)⁻¹`.
    pub fn intermediate_map(&self, k: usize) -> Result<IntermediateMap> {
        if k + 1 >= self.propagators.len() {
            return Err(Error::InvalidParameter(format!(
                "window {k} outside grid of {} points",
                self.propagators.len()
            )));
        }
        let start = &self.propagators[k];
        let end = &self.propagators[k + 1];
        let inv = start.invert(DEFAULT_COND_THRESHOLD);
        let mut map = end.compose(&inv.map)?;
        // inversion amplifies float drift by up to the condition number
        let drift_bound = HERMITIAN_TOL * inv.condition.max(1.0) * map.matrix().norm().max(1.0);
        if map.hermiticity_error() <= drift_bound {
            map = map.hermiticity_preserving_part();
        }
        let flag = if inv.pseudo {
            let residual = (map.compose(start)?.matrix() - end.matrix()).norm();
            Some(if residual > ILL_DEFINED_RESIDUAL {
                WindowFlag::IllDefined {
                    condition: inv.condition,
                    residual,
                }
            } else {
                WindowFlag::NonInvertible {
                    condition: inv.condition,
                }
            })
        } else if map.trace_preservation_error() > TP_TOLERANCE {
            Some(WindowFlag::NonInvertible {
                condition: inv.condition,
            })
        } else {
            None
        };
        Ok(IntermediateMap { map, flag })
    }
}
