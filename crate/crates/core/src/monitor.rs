//! Model-free witness `I^(E)`: twice the total rise of a system–ancilla
//! entanglement trajectory. Zero for every monotone decay, so a positive value
//! detects non-Markovian dynamics; zero means only "nothing detected".

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt_num;
use crate::gaussian::{
    self, default_horizon, initial_covariance, BathSpec, ModeNetwork, SpectralDensity, SpectralKind,
};

/// `I^(E)` below this many bits is not reported as a detection.
pub const DETECTION_THRESHOLD: f64 = 1e-4;

/// Entanglement `E_k ≥ 0` (bits) on a uniform, strictly increasing grid.
#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl EntanglementSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("entanglement value {v} is negative")));
        }
        if times.len() >= 2 {
            let dt = times[1] - times[0];
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
            }
            for w in times.windows(2) {
                if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs()) {
                    return Err(Error::InvalidParameter("time grid must be uniform".into()));
                }
            }
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,E_N")?;
        for (t, e) in self.times.iter().zip(&self.values) {
            writeln!(out, "{},{}", fmt_num(*t), fmt_num(*e))?;
        }
        Ok(())
    }
}

/// `I^(E) = ∫|dE/dt| dt − (E(t_0) − E(t_max))`, evaluated exactly on the
/// piecewise-linear interpolant: `2 Σ max(0, E_{k+1} − E_k)`.
pub fn i_entanglement(series: &EntanglementSeries) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "I^(E) needs at least 2 samples, got {}",
            series.len()
        )));
    }
    Ok(2.0
        * series
            .values
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .sum::<f64>())
}

/// Parameters shared by every cell of an `(α, T)` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub kind: SpectralKind,
    /// `ω_c`; defaults to 10 (ten times the system frequency).
    pub cutoff: f64,
    pub alphas: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub modes: usize,
    /// Defaults to `[1e-3 ω_c, 10 ω_c]` (Ohmic) or `[1e-3 ω_c, 15 ω_c]`.
    pub window: Option<(f64, f64)>,
    /// Defaults to `min(0.8 · 2π/Δω, 50)`.
    pub horizon: Option<f64>,
    /// Number of time samples, endpoints included.
    pub samples: usize,
    pub squeezing: f64,
    pub system_frequency: f64,
    pub ancilla_frequency: f64,
    pub keep_series: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kind: SpectralKind::Ohmic,
            cutoff: 10.0,
            alphas: Vec::new(),
            temperatures: vec![0.0],
            modes: 300,
            window: None,
            horizon: None,
            samples: 1001,
            squeezing: 1.0,
            system_frequency: 1.0,
            ancilla_frequency: 1.0,
            keep_series: false,
        }
    }
}

impl SweepConfig {
    pub fn resolved_window(&self) -> (f64, f64) {
        self.window
            .unwrap_or((1e-3 * self.cutoff, self.kind.default_window_factor() * self.cutoff))
    }

    pub fn resolved_horizon(&self) -> f64 {
        let (lo, hi) = self.resolved_window();
        self.horizon.unwrap_or_else(|| default_horizon(self.modes, lo, hi))
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let h = self.resolved_horizon();
        let n = self.samples.max(2);
        (0..n).map(|k| h * k as f64 / (n - 1) as f64).collect()
    }

    pub fn bath_spec(&self, temperature: f64) -> Result<BathSpec> {
        let (lo, hi) = self.resolved_window();
        BathSpec::new(self.modes, lo, hi, temperature, self.resolved_horizon())
    }

    /// Checks everything that does not depend on the individual cell.
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidParameter("samples must be >= 2".into()));
        }
        SpectralDensity::new(self.kind, 0.0, self.cutoff)?;
        if let Some(a) = self.alphas.iter().find(|a| !(**a >= 0.0)) {
            return Err(Error::InvalidParameter(format!("α must be >= 0, got {a}")));
        }
        self.bath_spec(0.0)?;
        if let Some(t) = self.temperatures.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::InvalidParameter(format!("temperature must be >= 0, got {t}")));
        }
        Ok(())
    }

    /// Network and initial covariance for one cell.
    pub fn cell_setup(
        &self,
        alpha: f64,
        temperature: f64,
    ) -> Result<(ModeNetwork, gaussian::ComplexCovariance)> {
        let spec = self.bath_spec(temperature)?;
        let density = SpectralDensity::new(self.kind, alpha, self.cutoff)?;
        let (freqs, couplings) = gaussian::discretize(&density, &spec)?;
        let net = ModeNetwork::new(self.system_frequency, &freqs, &couplings, self.ancilla_frequency)?;
        let cov0 = initial_covariance(self.squeezing, temperature, &freqs)?;
        Ok((net, cov0))
    }

    pub fn simulate(&self, alpha: f64, temperature: f64) -> Result<EntanglementSeries> {
        let (net, cov0) = self.cell_setup(alpha, temperature)?;
        gaussian::entanglement_series(&net, &cov0, &self.time_grid())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub alpha: f64,
    pub temperature: f64,
    /// `I^(E)`, or the failure message for this cell.
    pub outcome: std::result::Result<f64, String>,
    pub series: Option<EntanglementSeries>,
}

impl SweepCell {
    pub fn value(&self) -> Option<f64> {
        self.outcome.as_ref().ok().copied()
    }
}

/// One simulation per `(α, T)`, in parallel; rows ordered by `(T, α)` as
/// listed in the config. A failing cell does not stop the sweep.
pub fn sweep_i_entanglement(config: &SweepConfig) -> Result<Vec<SweepCell>> {
    config.validate()?;
    let grid: Vec<(f64, f64)> = config
        .temperatures
        .iter()
        .flat_map(|&t| config.alphas.iter().map(move |&a| (a, t)))
        .collect();
    Ok(grid
        .into_par_iter()
        .map(|(alpha, temperature)| {
            let run = config
                .simulate(alpha, temperature)
                .and_then(|s| i_entanglement(&s).map(|i| (i, s)));
            match run {
                Ok((i, series)) => SweepCell {
                    alpha,
                    temperature,
                    outcome: Ok(i),
                    series: config.keep_series.then_some(series),
                },
                Err(e) => SweepCell {
                    alpha,
                    temperature,
                    outcome: Err(e.to_string()),
                    series: None,
                },
            }
        })
        .collect())
}

/// Smallest `α` at `temperature` whose `I^(E)` exceeds `threshold`.
pub fn detection_onset(cells: &[SweepCell], temperature: f64, threshold: f64) -> Option<f64> {
    cells
        .iter()
        .filter(|c| c.temperature == temperature)
        .filter(|c| c.value().is_some_and(|v| v > threshold))
        .map(|c| c.alpha)
        .min_by(|a, b| a.total_cmp(b))
}

/// `alpha,T,I_E`; failed cells print `NaN`.
pub fn write_sweep_csv<W: Write>(cells: &[SweepCell], mut out: W) -> Result<()> {
    writeln!(out, "alpha,T,I_E")?;
    for c in cells {
        let v = c.value().map(fmt_num).unwrap_or_else(|| "NaN".into());
        writeln!(out, "{},{},{}", fmt_num(c.alpha), fmt_num(c.temperature), v)?;
    }
    Ok(())
}
