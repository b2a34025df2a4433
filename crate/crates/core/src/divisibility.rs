//! Divisibility-based non-Markovianity: `f_NCP`, its right derivative `g(t)`,
//! the integral `I = ∫ g dt` and the normalized `D_NM = I/(I+1)`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt_num;
use crate::lindblad::{LindbladGenerator, PropagatorFamily, WindowFlag};
use crate::operator::{hermitian_eigenvalues, identity, MaxEntangledState, Superoperator};

/// Negative `g` values smaller than this in magnitude are float noise and
/// are clamped to zero; anything more negative is an error.
pub const CLAMP_THRESHOLD: f64 = 1e-9;

/// Tolerance on `vec(1)† E = vec(1)†` for `f_NCP` input.
pub use crate::lindblad::TP_TOLERANCE;

/// Finite-difference steps for [`g_from_generator`].
pub const DEFAULT_EPSILONS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// Relative disagreement between successive extrapolation estimates beyond
/// which the generator path refines ε, and finally flags the sample.
pub const EXTRAPOLATION_TOLERANCE: f64 = 1e-4;

/// `‖(E ⊗ 1)|Φ⟩⟨Φ|‖₁`; equals one iff the trace-preserving map `E` is CP.
///
/// Divided by the Choi trace, which is one for a TP map; this removes the
/// float-level trace drift of maps obtained through an inverse, so that
/// `f_NCP ≥ 1` holds to eigensolver precision.
pub fn f_ncp(map: &Superoperator) -> Result<f64> {
    let deviation = map.trace_preservation_error();
    if deviation > TP_TOLERANCE {
        return Err(Error::NotTracePreserving { deviation });
    }
    let choi = map.choi();
    Ok(choi.trace_norm()? / choi.matrix().trace().re)
}

/// One `g(t_k)` estimate on the window `[t_k, t_{k+1}]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GSample {
    pub t: f64,
    /// `None` when the window is flagged and no value could be formed.
    pub g: Option<f64>,
    pub flag: Option<WindowFlag>,
}

impl GSample {
    /// Value usable in the integral: present and unflagged.
    pub fn usable(&self) -> Option<f64> {
        match self.flag {
            None => self.g,
            Some(_) => None,
        }
    }
}

/// `g` sampled from a propagator family, one sample per window.
#[derive(Clone, Debug)]
pub struct GSeries {
    pub samples: Vec<GSample>,
    /// Number of samples in `[-CLAMP_THRESHOLD, 0)` reset to zero.
    pub clamped: usize,
    pub horizon: f64,
}

/// `g(t_k) = (f_NCP(E(t_{k+1}, t_k)) − 1)/Δt` for every window of the family.
pub fn g_from_family(family: &PropagatorFamily) -> Result<GSeries> {
    let dt = family.dt();
    let results: Vec<Result<(GSample, bool)>> = (0..family.windows())
        .into_par_iter()
        .map(|k| {
            let t = family.times()[k];
            let window = family.intermediate_map(k)?;
            if let Some(flag) = window.flag {
                let g = f_ncp(&window.map)
                    .ok()
                    .map(|f| (f - 1.0) / dt)
                    .filter(|g| *g >= -CLAMP_THRESHOLD)
                    .map(|g| g.max(0.0));
                return Ok((GSample { t, g, flag: Some(flag) }, false));
            }
            let raw = (f_ncp(&window.map)? - 1.0) / dt;
            if raw < -CLAMP_THRESHOLD {
                return Err(Error::NegativeG { time: t, value: raw });
            }
            let clamped = raw < 0.0;
            Ok((
                GSample {
                    t,
                    g: Some(raw.max(0.0)),
                    flag: None,
                },
                clamped,
            ))
        })
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    let mut clamped = 0;
    for r in results {
        let (s, c) = r?;
        clamped += c as usize;
        samples.push(s);
    }
    Ok(GSeries {
        samples,
        clamped,
        horizon: family.horizon(),
    })
}

/// Generator-limit estimate of `g(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorG {
    pub t: f64,
    pub value: f64,
    /// Set when the extrapolation did not settle.
    pub flagged: bool,
    /// Every ε evaluated: the given sequence, continued if it did not settle.
    pub epsilons: Vec<f64>,
    /// Finite-difference quotients, one per ε.
    pub quotients: Vec<f64>,
}

/// `(‖[1 + ε(L_t ⊗ 1)]|Φ⟩⟨Φ|‖₁ − 1)/ε`, extrapolated to `ε → 0⁺`.
///
/// Since the perturbed Choi matrix has unit trace, the quotient is
/// `2 Σ max(0, −λᵢ(ε))/ε` over all but the top eigenvalue. Each `λᵢ(ε)/ε` is
/// smooth in ε, whereas their clipped sum is not, so the extrapolation
/// (Neville's scheme, polynomial in ε through the last `epsilons.len()`
/// levels) runs eigenvalue by eigenvalue.
///
/// The estimate is compared with the previous one (one degree lower on the
/// given sequence, then the previous window). While they differ by more than
/// `EXTRAPOLATION_TOLERANCE` relative (floored at `CLAMP_THRESHOLD`), the
/// sequence is continued by halving ε, down to `1e-8`; a sample that never
/// settles is flagged.
pub fn g_from_generator(gen: &LindbladGenerator, t: f64, epsilons: &[f64]) -> Result<GeneratorG> {
    if epsilons.len() < 2 {
        return Err(Error::InvalidParameter("need at least two ε values".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) || epsilons.iter().any(|e| *e < MIN_EPSILON) {
        return Err(Error::InvalidParameter(
            "ε sequence must be strictly decreasing and >= 1e-8".into(),
        ));
    }
    let phi = MaxEntangledState::new(gen.dim())?;
    let w = gen.generator_matrix(t)?.choi().matrix().clone();
    let rates_at = |eps: f64| -> Result<Vec<f64>> {
        let mut ev = hermitian_eigenvalues(&(phi.projector() + w.scale(eps)))?;
        ev.pop();
        Ok(ev.into_iter().map(|l| l / eps).collect())
    };
    let mut eps: Vec<f64> = epsilons.to_vec();
    let mut spectra = eps.iter().map(|&e| rates_at(e)).collect::<Result<Vec<_>>>()?;
    let n = eps.len();

    let mut previous = extrapolate(&eps[1..], &spectra[1..]);
    let mut estimate = extrapolate(&eps, &spectra);
    let settled = |est: f64, prev: f64| (est - prev).abs() <= (EXTRAPOLATION_TOLERANCE * est).max(CLAMP_THRESHOLD);
    while !settled(estimate, previous) {
        let next = eps[eps.len() - 1] / 2.0;
        if next < MIN_EPSILON {
            break;
        }
        eps.push(next);
        spectra.push(rates_at(next)?);
        previous = estimate;
        let k = eps.len();
        estimate = extrapolate(&eps[k - n..], &spectra[k - n..]);
    }
    let quotients = spectra
        .iter()
        .map(|rates| 2.0 * rates.iter().map(|r| (-r).max(0.0)).sum::<f64>())
        .collect();
    Ok(GeneratorG {
        t,
        value: estimate,
        flagged: !settled(estimate, previous),
        epsilons: eps,
        quotients,
    })
}

const MIN_EPSILON: f64 = 1e-8;

/// `2 Σᵢ max(0, −μᵢ)`, with `μᵢ` the Neville extrapolant to `ε = 0` of the
/// `i`-th scaled eigenvalue across the given levels.
fn extrapolate(eps: &[f64], spectra: &[Vec<f64>]) -> f64 {
    let n = eps.len();
    (0..spectra[0].len())
        .map(|i| {
            // after pass m, table[j] is the degree-m extrapolant through points j..=j+m
            let mut table: Vec<f64> = spectra.iter().map(|rates| rates[i]).collect();
            for m in 1..n {
                for j in 0..n - m {
                    let (e0, em) = (eps[j], eps[j + m]);
                    table[j] = (e0 * table[j + 1] - em * table[j]) / (e0 - em);
                }
            }
            2.0 * (-table[0]).max(0.0)
        })
        .sum()
}

/// [`g_from_generator`] at many times, in parallel.
pub fn g_series_from_generator(
    gen: &LindbladGenerator,
    times: &[f64],
    epsilons: &[f64],
) -> Result<Vec<GeneratorG>> {
    times
        .par_iter()
        .map(|&t| g_from_generator(gen, t, epsilons))
        .collect()
}

/// First-order perturbation of the trace norm:
/// `g = 2 Σ max(0, −λᵢ(Q W Q))`, `W = (L_t ⊗ 1)|Φ⟩⟨Φ|`, `Q = 1 − |Φ⟩⟨Φ|`.
pub fn g_perturbative(gen: &LindbladGenerator, t: f64) -> Result<f64> {
    let d = gen.dim();
    let phi = MaxEntangledState::new(d)?;
    let w = gen.generator_matrix(t)?.choi().matrix().clone();
    let q = identity(d * d) - phi.projector();
    let qwq = &q * w * &q;
    Ok(2.0
        * hermitian_eigenvalues(&qwq)?
            .iter()
            .map(|l| (-l).max(0.0))
            .sum::<f64>())
}

/// Trapezoidal `I` over usable samples.
#[derive(Clone, Debug, PartialEq)]
pub struct RhpIntegral {
    pub i: f64,
    pub d_nm: f64,
    /// Running integral at each sample time.
    pub cumulative: Vec<f64>,
    /// Tail of `g` not decaying: `I` is only a lower bound of the `t → ∞` value.
    pub truncated: bool,
    /// Samples left out because they were flagged.
    pub excluded: usize,
}

/// `I = ∫ g dt` by the trapezoidal rule over the sampled horizon; intervals
/// touching a flagged sample are skipped.
pub fn rhp_integral(samples: &[GSample]) -> Result<RhpIntegral> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no g samples".into()));
    }
    let mut cumulative = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for pair in samples.windows(2) {
        if let (Some(a), Some(b)) = (pair[0].usable(), pair[1].usable()) {
            acc += 0.5 * (pair[1].t - pair[0].t) * (a + b);
        }
        cumulative.push(acc);
    }
    let excluded = samples.iter().filter(|s| s.usable().is_none()).count();
    Ok(RhpIntegral {
        i: acc,
        d_nm: acc / (acc + 1.0),
        cumulative,
        truncated: tail_not_decaying(samples),
        excluded,
    })
}

fn tail_not_decaying(samples: &[GSample]) -> bool {
    let usable: Vec<f64> = samples.iter().filter_map(GSample::usable).collect();
    let chunk = usable.len() / 10;
    if chunk == 0 {
        return false;
    }
    let n = usable.len();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let tail = mean(&usable[n - chunk..]);
    let before = mean(&usable[n - 2 * chunk..n - chunk]);
    tail > CLAMP_THRESHOLD && tail >= before * (1.0 - 1e-6)
}

/// `−2 ∫_{γ<0} γ(t) dt` on the uniform grid of `steps` intervals, trapezoidal.
pub fn dephasing_oracle(rate: impl Fn(f64) -> f64, horizon: f64, steps: usize) -> f64 {
    let dt = horizon / steps as f64;
    let neg = |k: usize| rate(k as f64 * dt).min(0.0);
    let interior: f64 = (1..steps).map(neg).sum();
    -2.0 * dt * (interior + 0.5 * (neg(0) + neg(steps)))
}

/// Everything the divisibility measure produces for one family.
#[derive(Clone, Debug)]
pub struct NonMarkovReport {
    pub samples: Vec<GSample>,
    pub integral: RhpIntegral,
    pub clamped: usize,
    pub horizon: f64,
}

impl NonMarkovReport {
    pub fn from_family(family: &PropagatorFamily) -> Result<Self> {
        let series = g_from_family(family)?;
        let integral = rhp_integral(&series.samples)?;
        Ok(Self {
            samples: series.samples,
            integral,
            clamped: series.clamped,
            horizon: series.horizon,
        })
    }

    pub fn i(&self) -> f64 {
        self.integral.i
    }

    pub fn d_nm(&self) -> f64 {
        self.integral.d_nm
    }

    /// `(window index, t_k, flag)` for every flagged window.
    pub fn flagged_windows(&self) -> Vec<(usize, f64, WindowFlag)> {
        self.samples
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.flag.map(|f| (k, s.t, f)))
            .collect()
    }

    /// `t,g,I_cumulative`; flagged samples without a value print `NaN`.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,g,I_cumulative")?;
        for (s, cum) in self.samples.iter().zip(&self.integral.cumulative) {
            let g = s.g.map(fmt_num).unwrap_or_else(|| "NaN".into());
            writeln!(out, "{},{},{}", fmt_num(s.t), g, fmt_num(*cum))?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> Result<()> {
        let flagged = self.flagged_windows();
        writeln!(out, "I,D_NM,flagged_windows,horizon")?;
        writeln!(
            out,
            "{},{},{},{}",
            fmt_num(self.i()),
            fmt_num(self.d_nm()),
            flagged.len(),
            fmt_num(self.horizon)
        )?;
        writeln!(
            out,
            "# truncated_lower_bound={} clamped_samples={} excluded_samples={}",
            self.integral.truncated, self.clamped, self.integral.excluded
        )?;
        for (k, t, flag) in flagged {
            writeln!(out, "# flagged window={} t={} kind={}", k, fmt_num(t), flag.label())?;
        }
        Ok(())
    }
}
