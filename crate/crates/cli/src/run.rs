use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nonmarkov_core::monitor::{sweep_i_entanglement, write_sweep_csv};
use nonmarkov_core::tomography::{read_family, write_family};
use nonmarkov_core::{
    dephasing_oracle, fmt_num, LindbladGenerator, NonMarkovReport, SpectralKind, SweepConfig,
};

use crate::config::{Config, Resolved};
use crate::CliError;

/// What a successful run wants reported through the exit status.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub flagged: usize,
}

pub struct Output {
    dir: PathBuf,
    pub emit_plots: bool,
}

impl Output {
    pub fn new(dir: &Path, emit_plots: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            emit_plots,
        })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Numeric(format!("cannot write {}: {e}", path.display())))
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> nonmarkov_core::Result<()>) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        f(&mut w)?;
        w.flush().map_err(nonmarkov_core::Error::from)?;
        Ok(())
    }
}

type Rate = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const DEPHASING_KEYS: &[&str] = &[
    "profile",
    "rate",
    "amplitude",
    "frequency",
    "offset",
    "table",
    "horizon",
    "steps",
    "export_propagators",
];

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(msg()))
    }
}

/// `t,gamma` table, linearly interpolated.
fn load_rate_table(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read rate table {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut header = false;
    for (idx, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let bad = |m: &str| CliError::Usage(format!("{} line {}: {m}", path.display(), idx + 1));
        if !header {
            if s != "t,gamma" {
                return Err(bad("expected header \"t,gamma\""));
            }
            header = true;
            continue;
        }
        let (t, g) = s.split_once(',').ok_or_else(|| bad("expected t,gamma"))?;
        let t: f64 = t.trim().parse().map_err(|_| bad("invalid time"))?;
        let g: f64 = g.trim().parse().map_err(|_| bad("invalid rate"))?;
        if rows.last().is_some_and(|&(prev, _)| t <= prev) {
            return Err(bad("times must be strictly increasing"));
        }
        rows.push((t, g));
    }
    check(rows.len() >= 2, || format!("{}: rate table needs at least two rows", path.display()))?;
    Ok(rows)
}

fn interpolate(table: &[(f64, f64)], t: f64) -> f64 {
    let k = table.partition_point(|&(x, _)| x <= t).clamp(1, table.len() - 1);
    let ((t0, g0), (t1, g1)) = (table[k - 1], table[k]);
    g0 + (g1 - g0) * (t - t0) / (t1 - t0)
}

pub fn dephasing(cfg: &Config, out: &Output) -> Result<Outcome, CliError> {
    cfg.restrict(DEPHASING_KEYS)?;
    let mut resolved = Resolved::new("dephasing");
    let horizon = cfg.require_f64("horizon")?;
    check(horizon > 0.0, || format!("horizon must be > 0, got {horizon}"))?;
    let steps = cfg.usize("steps")?.unwrap_or_else(|| (horizon / 1e-3).ceil() as usize);
    check(steps >= 2, || format!("steps must be >= 2, got {steps}"))?;

    let profile = cfg.require_str("profile")?;
    let only = |keys: &[&str]| -> Result<(), CliError> {
        for k in ["rate", "amplitude", "frequency", "offset", "table"] {
            if !keys.contains(&k) && cfg.str(k).is_some() {
                return Err(CliError::Usage(format!("key {k:?} does not apply to profile {profile:?}")));
            }
        }
        Ok(())
    };
    resolved.text("profile", profile);
    let rate: Rate = match profile {
        "constant" => {
            only(&["rate"])?;
            let g = cfg.require_f64("rate")?;
            resolved.num("rate", g);
            Arc::new(move |_| g)
        }
        "sin" | "sinusoidal" => {
            only(&["amplitude", "frequency", "offset"])?;
            let a = cfg.f64("amplitude")?.unwrap_or(1.0);
            let w = cfg.f64("frequency")?.unwrap_or(1.0);
            let c = cfg.f64("offset")?.unwrap_or(0.0);
            resolved.num("amplitude", a);
            resolved.num("frequency", w);
            resolved.num("offset", c);
            Arc::new(move |t: f64| a * (w * t).sin() + c)
        }
        "table" => {
            only(&["table"])?;
            let path = cfg.path("table").ok_or_else(|| CliError::Usage("missing required key \"table\"".into()))?;
            let table = load_rate_table(&path)?;
            let (first, last) = (table[0].0, table[table.len() - 1].0);
            check(first <= 0.0 && last >= horizon, || {
                format!("rate table covers [{first}, {last}], horizon needs [0, {horizon}]")
            })?;
            let shown = std::fs::canonicalize(&path).unwrap_or(path);
            resolved.text("table", shown.display().to_string());
            Arc::new(move |t| interpolate(&table, t))
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown profile {other:?} (expected constant, sin or table)"
            )))
        }
    };
    let export = cfg.bool("export_propagators")?.unwrap_or(false);
    resolved.num("horizon", horizon);
    resolved.text("steps", steps.to_string());
    resolved.text("export_propagators", export.to_string());
    out.write("config.resolved.txt", |w| Ok(w.write_all(resolved.render().as_bytes())?))?;

    let gen_rate = rate.clone();
    let family = LindbladGenerator::pure_dephasing(move |t| gen_rate(t)).propagate(horizon, steps)?;
    if export {
        out.write("propagators.txt", |w| write_family(&family, w))?;
    }
    let report = NonMarkovReport::from_family(&family)?;
    let oracle = dephasing_oracle(|t| rate(t), horizon, steps);

    out.write("g_series.csv", |w| {
        writeln!(w, "t,gamma,g,I_cumulative")?;
        for (s, cum) in report.samples.iter().zip(&report.integral.cumulative) {
            let g = s.g.map(fmt_num).unwrap_or_else(|| "NaN".into());
            writeln!(w, "{},{},{},{}", fmt_num(s.t), fmt_num(rate(s.t)), g, fmt_num(*cum))?;
        }
        Ok(())
    })?;
    let flagged = report.flagged_windows();
    out.write("summary.txt", |w| {
        let abs = (report.i() - oracle).abs();
        let rel = if oracle > 0.0 { fmt_num(abs / oracle) } else { "NaN".into() };
        writeln!(w, "I,I_oracle,abs_err,rel_err,D_NM,flagged_windows,horizon")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_num(report.i()),
            fmt_num(oracle),
            fmt_num(abs),
            rel,
            fmt_num(report.d_nm()),
            flagged.len(),
            fmt_num(horizon)
        )?;
        summary_notes(&report, w)
    })?;
    if out.emit_plots {
        out.write("plot_g_series.py", |w| Ok(w.write_all(PLOT_G_SERIES.as_bytes())?))?;
    }
    Ok(Outcome { flagged: flagged.len() })
}

fn summary_notes<W: Write>(report: &NonMarkovReport, w: &mut W) -> nonmarkov_core::Result<()> {
    writeln!(
        w,
        "# truncated_lower_bound={} clamped_samples={} excluded_samples={}",
        report.integral.truncated, report.clamped, report.integral.excluded
    )?;
    for (k, t, flag) in report.flagged_windows() {
        writeln!(w, "# flagged window={} t={} kind={}", k, fmt_num(t), flag.label())?;
    }
    Ok(())
}

pub const DIVISIBILITY_KEYS: &[&str] = &["file"];

pub fn divisibility(cfg: &Config, out: &Output) -> Result<Outcome, CliError> {
    cfg.restrict(DIVISIBILITY_KEYS)?;
    let path = cfg.path("file").ok_or_else(|| CliError::Usage("missing required key \"file\"".into()))?;
    let mut resolved = Resolved::new("divisibility");
    let shown = std::fs::canonicalize(&path).unwrap_or_else(|_| path.clone());
    resolved.text("file", shown.display().to_string());
    out.write("config.resolved.txt", |w| Ok(w.write_all(resolved.render().as_bytes())?))?;

    let family = read_family(&path).map_err(|e| match e {
        nonmarkov_core::Error::Parse { .. } | nonmarkov_core::Error::Io(_) => {
            CliError::Usage(format!("{}: {e}", path.display()))
        }
        other => other.into(),
    })?;
    let report = NonMarkovReport::from_family(&family)?;
    out.write("report.csv", |w| report.write_table(w))?;
    out.write("summary.txt", |w| report.write_summary(w))?;
    if out.emit_plots {
        out.write("plot_report.py", |w| Ok(w.write_all(PLOT_REPORT.as_bytes())?))?;
    }
    Ok(Outcome {
        flagged: report.flagged_windows().len(),
    })
}

pub const SWEEP_KEYS: &[&str] = &[
    "kind",
    "alpha",
    "alpha_min",
    "alpha_max",
    "alpha_count",
    "temperatures",
    "cutoff",
    "modes",
    "omega_min",
    "omega_max",
    "horizon",
    "samples",
    "squeezing",
    "system_frequency",
    "ancilla_frequency",
    "write_series",
];

pub fn parse_kind(s: &str) -> Option<SpectralKind> {
    match s {
        "ohmic" => Some(SpectralKind::Ohmic),
        "super-ohmic" | "superohmic" => Some(SpectralKind::SuperOhmic),
        other => other
            .strip_prefix("exponent:")
            .and_then(|x| x.trim().parse().ok())
            .filter(|s: &f64| s.is_finite() && *s > 0.0)
            .map(SpectralKind::Exponent),
    }
}

fn alpha_grid(cfg: &Config) -> Result<Vec<f64>, CliError> {
    let explicit = cfg.list_f64("alpha")?;
    let ranged = ["alpha_min", "alpha_max", "alpha_count"]
        .iter()
        .any(|k| cfg.str(k).is_some());
    match (explicit, ranged) {
        (Some(_), true) => Err(CliError::Usage(
            "give either alpha or alpha_min/alpha_max/alpha_count, not both".into(),
        )),
        (Some(list), false) => Ok(list),
        (None, true) => {
            let lo = cfg.require_f64("alpha_min")?;
            let hi = cfg.require_f64("alpha_max")?;
            let n = cfg
                .usize("alpha_count")?
                .ok_or_else(|| CliError::Usage("missing required key \"alpha_count\"".into()))?;
            check(lo > 0.0 && hi >= lo, || format!("need 0 < alpha_min <= alpha_max, got {lo}, {hi}"))?;
            check(n >= 1, || "alpha_count must be >= 1".into())?;
            if n == 1 {
                return Ok(vec![lo]);
            }
            let ratio = hi / lo;
            let mut grid: Vec<f64> = (0..n).map(|k| lo * ratio.powf(k as f64 / (n - 1) as f64)).collect();
            grid[n - 1] = hi;
            Ok(grid)
        }
        (None, false) => Err(CliError::Usage("missing required key \"alpha\" (or alpha_min/alpha_max/alpha_count)".into())),
    }
}

pub fn sweep_config(cfg: &Config) -> Result<SweepConfig, CliError> {
    cfg.restrict(SWEEP_KEYS)?;
    let defaults = SweepConfig::default();
    let kind = match cfg.str("kind") {
        None => defaults.kind,
        Some(s) => parse_kind(s).ok_or_else(|| {
            CliError::Usage(format!("unknown kind {s:?} (expected ohmic, super-ohmic or exponent:<s>)"))
        })?,
    };
    let window = match (cfg.f64("omega_min")?, cfg.f64("omega_max")?) {
        (None, None) => None,
        (Some(lo), Some(hi)) => Some((lo, hi)),
        _ => return Err(CliError::Usage("give both omega_min and omega_max, or neither".into())),
    };
    let config = SweepConfig {
        kind,
        cutoff: cfg.f64("cutoff")?.unwrap_or(defaults.cutoff),
        alphas: alpha_grid(cfg)?,
        temperatures: cfg.list_f64("temperatures")?.unwrap_or(defaults.temperatures),
        modes: cfg.usize("modes")?.unwrap_or(defaults.modes),
        window,
        horizon: cfg.f64("horizon")?,
        samples: cfg.usize("samples")?.unwrap_or(defaults.samples),
        squeezing: cfg.f64("squeezing")?.unwrap_or(defaults.squeezing),
        system_frequency: cfg.f64("system_frequency")?.unwrap_or(defaults.system_frequency),
        ancilla_frequency: cfg.f64("ancilla_frequency")?.unwrap_or(defaults.ancilla_frequency),
        keep_series: cfg.bool("write_series")?.unwrap_or(false),
    };
    check(config.modes >= 1, || "modes must be >= 1".into())?;
    check(config.samples >= 2, || format!("samples must be >= 2, got {}", config.samples))?;
    if let Some(h) = config.horizon {
        check(h > 0.0, || format!("horizon must be > 0, got {h}"))?;
    }
    config.validate().map_err(|e| match e {
        nonmarkov_core::Error::Recurrence {
            horizon,
            recurrence,
            required_modes,
        } => CliError::Usage(format!(
            "refusing to run: horizon {horizon} reaches the bath recurrence time {recurrence:.6} of \
             modes = {}; set modes >= {required_modes} or shorten the horizon",
            config.modes
        )),
        other => CliError::Usage(other.to_string()),
    })?;
    Ok(config)
}

fn resolve_sweep(config: &SweepConfig) -> Resolved {
    let mut r = Resolved::new("gaussian-sweep");
    r.text("kind", config.kind.name());
    r.num("cutoff", config.cutoff);
    r.list("alpha", &config.alphas);
    r.list("temperatures", &config.temperatures);
    r.text("modes", config.modes.to_string());
    let (lo, hi) = config.resolved_window();
    r.num("omega_min", lo);
    r.num("omega_max", hi);
    r.num("horizon", config.resolved_horizon());
    r.text("samples", config.samples.to_string());
    r.num("squeezing", config.squeezing);
    r.num("system_frequency", config.system_frequency);
    r.num("ancilla_frequency", config.ancilla_frequency);
    r.text("write_series", config.keep_series.to_string());
    r
}

/// Cells whose simulation failed are reported as numeric failures after all
/// outputs are written.
pub fn gaussian_sweep(cfg: &Config, out: &Output) -> Result<Outcome, CliError> {
    let config = sweep_config(cfg)?;
    out.write("config.resolved.txt", |w| Ok(w.write_all(resolve_sweep(&config).render().as_bytes())?))?;
    let cells = sweep_i_entanglement(&config)?;
    out.write("sweep.csv", |w| write_sweep_csv(&cells, w))?;
    for cell in &cells {
        if let Some(series) = &cell.series {
            let name = format!("series_{}_{}.csv", cell.alpha, cell.temperature);
            out.write(&name, |w| series.write_csv(w))?;
        }
    }
    if out.emit_plots {
        out.write("plot_sweep.py", |w| Ok(w.write_all(PLOT_SWEEP.as_bytes())?))?;
    }
    let failed: Vec<String> = cells
        .iter()
        .filter_map(|c| {
            c.outcome
                .as_ref()
                .err()
                .map(|e| format!("alpha={} T={}: {e}", c.alpha, c.temperature))
        })
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Numeric(format!("{} sweep cells failed:\n  {}", failed.len(), failed.join("\n  "))));
    }
    Ok(Outcome::default())
}

const PLOT_SWEEP: &str = r#"# I^(E) against coupling strength, one curve per temperature.
import csv
import collections
import matplotlib.pyplot as plt

curves = collections.defaultdict(list)
with open("sweep.csv") as f:
    for row in csv.DictReader(f):
        curves[float(row["T"])].append((float(row["alpha"]), float(row["I_E"])))

for T, pts in sorted(curves.items()):
    pts.sort()
    plt.plot([a for a, _ in pts], [v for _, v in pts], "o-", label=f"T = {T:g}")
plt.xscale("log")
plt.xlabel("alpha")
plt.ylabel("I^(E)")
plt.legend()
plt.savefig("sweep.png", dpi=150)
"#;

const PLOT_G_SERIES: &str = r#"# g(t) and the running integral for a dephasing run.
import csv
import matplotlib.pyplot as plt

t, gamma, g, cum = [], [], [], []
with open("g_series.csv") as f:
    for row in csv.DictReader(f):
        t.append(float(row["t"]))
        gamma.append(float(row["gamma"]))
        g.append(float(row["g"]))
        cum.append(float(row["I_cumulative"]))

fig, ax = plt.subplots(2, 1, sharex=True)
ax[0].plot(t, gamma, label="gamma")
ax[0].plot(t, g, label="g")
ax[0].legend()
ax[1].plot(t, cum)
ax[1].set_ylabel("I(t)")
ax[1].set_xlabel("t")
fig.savefig("g_series.png", dpi=150)
"#;

const PLOT_REPORT: &str = r#"# g(t) and the running integral from a propagator file.
import csv
import matplotlib.pyplot as plt

t, g, cum = [], [], []
with open("report.csv") as f:
    for row in csv.DictReader(f):
        t.append(float(row["t"]))
        g.append(float(row["g"]))
        cum.append(float(row["I_cumulative"]))

fig, ax = plt.subplots(2, 1, sharex=True)
ax[0].plot(t, g)
ax[0].set_ylabel("g")
ax[1].plot(t, cum)
ax[1].set_ylabel("I(t)")
ax[1].set_xlabel("t")
fig.savefig("report.png", dpi=150)
"#;
