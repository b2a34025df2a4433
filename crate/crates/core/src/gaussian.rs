//! Exact Gaussian simulation of a damped oscillator in a discretized bosonic
//! bath (rotating-wave coupling), with a decoupled ancilla.
//!
//! Modes are ordered `(system, bath_1..bath_M, ancilla)`. The Hamiltonian
//! `H = Σ Ω_jk a_j† a_k` conserves excitation number, so the Heisenberg
//! evolution is `a(t) = U a(0)` with `U = exp(−iΩt)` and the second moments
//! `N_jk = ⟨a_j† a_k⟩`, `M_jk = ⟨a_j a_k⟩` evolve as
//! `N(t) = U* N(0) Uᵀ`, `M(t) = U M(0) Uᵀ`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::monitor::EntanglementSeries;
use crate::operator::{hermitian_eigenvalues, CMatrix, C64};

/// Spectral density shape `J(ω) = α ω^s e^{−ω/ω_c}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralKind {
    Ohmic,
    SuperOhmic,
    Exponent(f64),
}

impl SpectralKind {
    pub fn exponent(&self) -> f64 {
        match self {
            SpectralKind::Ohmic => 1.0,
            SpectralKind::SuperOhmic => 3.0,
            SpectralKind::Exponent(s) => *s,
        }
    }

    /// Upper edge of the default frequency window, in units of `ω_c`.
    pub fn default_window_factor(&self) -> f64 {
        if self.exponent() <= 1.0 {
            10.0
        } else {
            15.0
        }
    }

    pub fn name(&self) -> String {
        match self {
            SpectralKind::Ohmic => "ohmic".into(),
            SpectralKind::SuperOhmic => "super-ohmic".into(),
            SpectralKind::Exponent(s) => format!("exponent:{s}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralDensity {
    pub kind: SpectralKind,
    pub alpha: f64,
    pub cutoff: f64,
}

impl SpectralDensity {
    pub fn new(kind: SpectralKind, alpha: f64, cutoff: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling α must be >= 0, got {alpha}")));
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidParameter(format!("cutoff must be > 0, got {cutoff}")));
        }
        if !(kind.exponent() > 0.0) {
            return Err(Error::InvalidParameter("spectral exponent must be > 0".into()));
        }
        Ok(Self { kind, alpha, cutoff })
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        self.alpha * omega.powf(self.kind.exponent()) * (-omega / self.cutoff).exp()
    }
}

/// Discretized bath: size, frequency window, temperature, and the simulation
/// horizon, which must stay below the recurrence time `2π/Δω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathSpec {
    pub modes: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub temperature: f64,
    pub horizon: f64,
}

impl BathSpec {
    pub fn new(modes: usize, omega_min: f64, omega_max: f64, temperature: f64, horizon: f64) -> Result<Self> {
        if modes < 1 {
            return Err(Error::InvalidParameter("bath needs at least one mode".into()));
        }
        if !(omega_min > 0.0 && omega_max > omega_min) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < ω_min < ω_max, got [{omega_min}, {omega_max}]"
            )));
        }
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::InvalidParameter(format!("temperature must be >= 0, got {temperature}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
        }
        let spec = Self {
            modes,
            omega_min,
            omega_max,
            temperature,
            horizon,
        };
        let recurrence = spec.recurrence_time();
        if horizon >= recurrence {
            return Err(Error::Recurrence {
                horizon,
                recurrence,
                required_modes: required_modes(horizon, omega_min, omega_max),
            });
        }
        Ok(spec)
    }

    pub fn delta_omega(&self) -> f64 {
        (self.omega_max - self.omega_min) / self.modes as f64
    }

    pub fn recurrence_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.delta_omega()
    }
}

/// Smallest mode count whose recurrence time exceeds `horizon`.
pub fn required_modes(horizon: f64, omega_min: f64, omega_max: f64) -> usize {
    (horizon * (omega_max - omega_min) / (2.0 * std::f64::consts::PI)).floor() as usize + 1
}

/// `min(0.8 · 2π/Δω, 50)`.
pub fn default_horizon(modes: usize, omega_min: f64, omega_max: f64) -> f64 {
    let dw = (omega_max - omega_min) / modes as f64;
    (0.8 * 2.0 * std::f64::consts::PI / dw).min(50.0)
}

/// Midpoint grid `ω_j = ω_min + (j − ½)Δω` with `g_j = √(J(ω_j) Δω)`.
pub fn discretize(density: &SpectralDensity, spec: &BathSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let dw = spec.delta_omega();
    let mut freqs = Vec::with_capacity(spec.modes);
    let mut couplings = Vec::with_capacity(spec.modes);
    for j in 1..=spec.modes {
        let w = spec.omega_min + (j as f64 - 0.5) * dw;
        let jw = density.eval(w);
        if !(jw >= 0.0) {
            return Err(Error::InvalidParameter(format!("J({w}) = {jw} is negative")));
        }
        freqs.push(w);
        couplings.push((jw * dw).sqrt());
    }
    Ok((freqs, couplings))
}

/// Frequency matrix of the system–bath–ancilla network and its
/// eigendecomposition, computed once and reused for every time.
#[derive(Clone, Debug)]
pub struct ModeNetwork {
    omega: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl ModeNetwork {
    pub fn new(
        system_frequency: f64,
        bath_frequencies: &[f64],
        couplings: &[f64],
        ancilla_frequency: f64,
    ) -> Result<Self> {
        if bath_frequencies.len() != couplings.len() {
            return Err(Error::DimensionMismatch {
                expected: bath_frequencies.len(),
                found: couplings.len(),
            });
        }
        let m = bath_frequencies.len();
        let n = m + 2;
        let mut omega = DMatrix::zeros(n, n);
        omega[(0, 0)] = system_frequency;
        for (j, (&w, &g)) in bath_frequencies.iter().zip(couplings).enumerate() {
            omega[(j + 1, j + 1)] = w;
            omega[(0, j + 1)] = g;
            omega[(j + 1, 0)] = g;
        }
        omega[(n - 1, n - 1)] = ancilla_frequency;
        let eig = omega
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 100_000)
            .ok_or_else(|| Error::Eigen(format!("frequency matrix of size {n} did not converge")))?;
        Ok(Self {
            omega,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn from_density(
        density: &SpectralDensity,
        spec: &BathSpec,
        system_frequency: f64,
        ancilla_frequency: f64,
    ) -> Result<Self> {
        let (w, g) = discretize(density, spec)?;
        Self::new(system_frequency, &w, &g, ancilla_frequency)
    }

    pub fn modes(&self) -> usize {
        self.omega.nrows()
    }

    pub const SYSTEM: usize = 0;

    pub fn ancilla(&self) -> usize {
        self.modes() - 1
    }

    pub fn frequency_matrix(&self) -> &DMatrix<f64> {
        &self.omega
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        self.eigenvalues
            .iter()
            .map(|w| C64::from_polar(1.0, -w * t))
            .collect()
    }

    /// `U = exp(−iΩt)`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let n = self.modes();
        let phases = self.phases(t);
        let v = &self.eigenvectors;
        let scaled = CMatrix::from_fn(n, n, |r, c| phases[c] * v[(r, c)]);
        let vt = v.transpose().map(|x| C64::new(x, 0.0));
        scaled * vt
    }

    /// Row `j` of `U`, without forming the whole matrix.
    pub fn unitary_row(&self, j: usize, t: f64) -> DVector<C64> {
        let v = &self.eigenvectors;
        let phases = self.phases(t);
        let weights: Vec<C64> = (0..self.modes()).map(|m| phases[m] * v[(j, m)]).collect();
        DVector::from_fn(self.modes(), |l, _| {
            (0..self.modes()).map(|m| weights[m] * v[(l, m)]).sum()
        })
    }

    /// `‖VᵀV − 1‖_max` of the eigenbasis; bounds the unitarity error of `U` at any time.
    pub fn eigenbasis_error(&self) -> f64 {
        let n = self.modes();
        let g = self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::<f64>::identity(n, n);
        g.amax()
    }
}

/// Second moments `N_jk = ⟨a_j† a_k⟩`, `M_jk = ⟨a_j a_k⟩`; first moments are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexCovariance {
    pub n: CMatrix,
    pub m: CMatrix,
}

impl ComplexCovariance {
    pub fn vacuum(modes: usize) -> Self {
        Self {
            n: CMatrix::zeros(modes, modes),
            m: CMatrix::zeros(modes, modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.n.nrows()
    }

    pub fn total_excitations(&self) -> f64 {
        self.n.trace().re
    }

    /// Restriction to the listed modes, in the given order.
    pub fn select(&self, modes: &[usize]) -> ComplexCovariance {
        let k = modes.len();
        ComplexCovariance {
            n: CMatrix::from_fn(k, k, |r, c| self.n[(modes[r], modes[c])]),
            m: CMatrix::from_fn(k, k, |r, c| self.m[(modes[r], modes[c])]),
        }
    }
}

/// Bose–Einstein occupation `1/(e^{ω/T} − 1)`, zero at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

/// Two-mode squeezed vacuum (squeezing `r`) on system and ancilla, thermal
/// bath at `temperature`, no system–bath correlations.
pub fn initial_covariance(r: f64, temperature: f64, bath_frequencies: &[f64]) -> Result<ComplexCovariance> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("squeezing must be >= 0, got {r}")));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidParameter(format!("temperature must be >= 0, got {temperature}")));
    }
    let modes = bath_frequencies.len() + 2;
    let anc = modes - 1;
    let mut cov = ComplexCovariance::vacuum(modes);
    let sh = r.sinh();
    let ch = r.cosh();
    cov.n[(0, 0)] = C64::new(sh * sh, 0.0);
    cov.n[(anc, anc)] = C64::new(sh * sh, 0.0);
    cov.m[(0, anc)] = C64::new(sh * ch, 0.0);
    cov.m[(anc, 0)] = C64::new(sh * ch, 0.0);
    for (j, &w) in bath_frequencies.iter().enumerate() {
        cov.n[(j + 1, j + 1)] = C64::new(thermal_occupation(w, temperature), 0.0);
    }
    Ok(cov)
}

/// Full covariance at time `t`.
pub fn evolve(net: &ModeNetwork, cov0: &ComplexCovariance, t: f64) -> Result<ComplexCovariance> {
    if cov0.modes() != net.modes() {
        return Err(Error::DimensionMismatch {
            expected: net.modes(),
            found: cov0.modes(),
        });
    }
    let u = net.unitary(t);
    let ut = u.transpose();
    Ok(ComplexCovariance {
        n: u.conjugate() * &cov0.n * &ut,
        m: &u * &cov0.m * &ut,
    })
}

/// Covariance of the listed modes only at time `t`; costs O(k·n²) instead of O(n³).
pub fn evolve_modes(
    net: &ModeNetwork,
    cov0: &ComplexCovariance,
    t: f64,
    modes: &[usize],
) -> Result<ComplexCovariance> {
    if cov0.modes() != net.modes() {
        return Err(Error::DimensionMismatch {
            expected: net.modes(),
            found: cov0.modes(),
        });
    }
    let rows: Vec<DVector<C64>> = modes.iter().map(|&j| net.unitary_row(j, t)).collect();
    let n_rows: Vec<DVector<C64>> = rows.iter().map(|u| &cov0.n * u).collect();
    let m_rows: Vec<DVector<C64>> = rows.iter().map(|u| &cov0.m * u).collect();
    let k = modes.len();
    Ok(ComplexCovariance {
        // N_jk = Σ conj(U_jl) N_lm U_km
        n: CMatrix::from_fn(k, k, |a, b| rows[a].conjugate().dot(&n_rows[b])),
        // M_jk = Σ U_jl M_lm U_km
        m: CMatrix::from_fn(k, k, |a, b| rows[a].dot(&m_rows[b])),
    })
}

/// Real quadrature covariance `σ_ij = ½⟨{R_i, R_j}⟩` with
/// `R = (x_1, p_1, x_2, p_2, …)`, `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`;
/// the vacuum is `½·1`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureCovariance {
    sigma: DMatrix<f64>,
}

/// Slack allowed in the uncertainty relation `σ + (i/2)J ≥ 0`.
pub const PHYSICALITY_TOL: f64 = 1e-8;

impl QuadratureCovariance {
    pub fn from_matrix(sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() || !sigma.nrows().is_multiple_of(2) {
            return Err(Error::InvalidParameter("covariance matrix must be 2k×2k".into()));
        }
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > 1e-10 {
            return Err(Error::Unphysical(format!("σ not symmetric (asymmetry {asym:e})")));
        }
        let cm = Self { sigma };
        let min = cm.uncertainty_min_eigenvalue()?;
        if min < -PHYSICALITY_TOL {
            return Err(Error::Unphysical(format!(
                "uncertainty relation violated: min eigenvalue {min:e}"
            )));
        }
        Ok(cm)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Smallest eigenvalue of `σ + (i/2)J`.
    pub fn uncertainty_min_eigenvalue(&self) -> Result<f64> {
        let n = self.sigma.nrows();
        let h = CMatrix::from_fn(n, n, |r, c| {
            let sympl = if r / 2 == c / 2 && r != c {
                if r % 2 == 0 {
                    0.5
                } else {
                    -0.5
                }
            } else {
                0.0
            };
            C64::new(self.sigma[(r, c)], sympl)
        });
        Ok(hermitian_eigenvalues(&h)?[0])
    }

    /// Logarithmic negativity (bits) of a two-mode state from its smallest
    /// partially transposed symplectic eigenvalue.
    pub fn log_negativity(&self) -> Result<f64> {
        if self.sigma.nrows() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: self.sigma.nrows(),
            });
        }
        let s = &self.sigma;
        let det2 = |r: usize, c: usize| s[(r, c)] * s[(r + 1, c + 1)] - s[(r, c + 1)] * s[(r + 1, c)];
        let delta = det2(0, 0) + det2(2, 2) - 2.0 * det2(0, 2);
        let det = s.determinant();
        let disc = delta * delta - 4.0 * det;
        if disc < -1e-9 * delta.abs().max(1.0).powi(2) {
            return Err(Error::Unphysical(format!("negative discriminant {disc:e}")));
        }
        let nu2 = 0.5 * (delta - disc.max(0.0).sqrt());
        if !(nu2 > 0.0) {
            return Err(Error::Unphysical(format!("symplectic eigenvalue² = {nu2:e}")));
        }
        Ok((-(2.0 * nu2.sqrt()).log2()).max(0.0))
    }
}

/// Quadrature covariance of two modes `(first, second)` of `cov`.
pub fn reduce_and_quadrature(cov: &ComplexCovariance, modes: (usize, usize)) -> Result<QuadratureCovariance> {
    quadrature(&cov.select(&[modes.0, modes.1]))
}

/// Quadrature covariance of every mode of `cov`.
pub fn quadrature(cov: &ComplexCovariance) -> Result<QuadratureCovariance> {
    let k = cov.modes();
    let herm = (&cov.n - cov.n.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let scale = cov.n.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    if herm > 1e-10 * scale {
        return Err(Error::Unphysical(format!("N not Hermitian (asymmetry {herm:e})")));
    }
    let mut sigma = DMatrix::zeros(2 * k, 2 * k);
    for j in 0..k {
        for l in 0..k {
            let n = cov.n[(j, l)];
            let m = cov.m[(j, l)];
            let half = if j == l { 0.5 } else { 0.0 };
            sigma[(2 * j, 2 * l)] = m.re + n.re + half;
            sigma[(2 * j + 1, 2 * l + 1)] = n.re - m.re + half;
            sigma[(2 * j, 2 * l + 1)] = m.im + n.im;
            sigma[(2 * j + 1, 2 * l)] = m.im - n.im;
        }
    }
    // remove float-level asymmetry from M not being exactly symmetric
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    QuadratureCovariance::from_matrix(sigma)
}

/// `E_N(t)` between system and ancilla on the given times.
pub fn entanglement_series(
    net: &ModeNetwork,
    cov0: &ComplexCovariance,
    times: &[f64],
) -> Result<EntanglementSeries> {
    let pair = [ModeNetwork::SYSTEM, net.ancilla()];
    let values = times
        .par_iter()
        .map(|&t| quadrature(&evolve_modes(net, cov0, t, &pair)?)?.log_negativity())
        .collect::<Result<Vec<f64>>>()?;
    EntanglementSeries::new(times.to_vec(), values)
}

/// Worst-case conservation diagnostics over a set of times.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Conservation {
    /// `max_t ‖U†U − 1‖_max`.
    pub unitarity: f64,
    /// `max_t |tr N(t) − tr N(0)|`.
    pub excitation_drift: f64,
    /// `max_t |N_anc,anc(t) − N_anc,anc(0)|`.
    pub ancilla_drift: f64,
    /// `min_t` of the smallest eigenvalue of `σ_SA + (i/2)J`.
    pub min_uncertainty_eigenvalue: f64,
}

pub fn conservation_diagnostics(
    net: &ModeNetwork,
    cov0: &ComplexCovariance,
    times: &[f64],
) -> Result<Conservation> {
    let n = net.modes();
    let anc = net.ancilla();
    let tr0 = cov0.total_excitations();
    let mut out = Conservation {
        min_uncertainty_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    for &t in times {
        let u = net.unitary(t);
        let err = (u.adjoint() * &u - CMatrix::identity(n, n))
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        out.unitarity = out.unitarity.max(err);
        let cov = evolve(net, cov0, t)?;
        out.excitation_drift = out.excitation_drift.max((cov.total_excitations() - tr0).abs());
        out.ancilla_drift = out.ancilla_drift.max((cov.n[(anc, anc)] - cov0.n[(anc, anc)]).norm());
        let sigma = reduce_and_quadrature(&cov, (ModeNetwork::SYSTEM, anc))?;
        out.min_uncertainty_eigenvalue = out
            .min_uncertainty_eigenvalue
            .min(sigma.uncertainty_min_eigenvalue()?);
    }
    Ok(out)
}
