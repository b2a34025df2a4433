use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

struct Run {
    code: i32,
    stderr: String,
    out: PathBuf,
}

impl Run {
    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    /// First data row of a CSV file, as fields.
    fn row(&self, name: &str) -> Vec<String> {
        let text = self.read(name);
        text.lines().nth(1).unwrap().split(',').map(str::to_string).collect()
    }
}

fn nonmarkov(dir: &Path, command: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{command}.cfg"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out-{command}"));
    let result = Command::new(env!("CARGO_BIN_EXE_nonmarkov"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: result.status.code().unwrap(),
        stderr: String::from_utf8_lossy(&result.stderr).into_owned(),
        out,
    }
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn sin_dephasing_summary() {
    let dir = TempDir::new().unwrap();
    let run = nonmarkov(dir.path(), "dephasing", "profile = sin\nhorizon = 2pi\nsteps = 6283\n", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let row = run.row("summary.txt");
    let (i, oracle, rel) = (num(&row[0]), num(&row[1]), num(&row[3]));
    assert!((oracle - 4.0).abs() < 1e-6);
    assert!(rel < 0.01);
    assert!((i - 4.0).abs() < 0.04);
    let series = run.read("g_series.csv");
    assert_eq!(series.lines().next(), Some("t,gamma,g,I_cumulative"));
    assert_eq!(series.lines().count(), 6284);
}

#[test]
fn constant_rates() {
    let dir = TempDir::new().unwrap();
    let run = nonmarkov(dir.path(), "dephasing", "profile = constant\nrate = 1\nhorizon = 3\n", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let row = run.row("summary.txt");
    // exact zero up to roundoff in the trace norm
    assert!(num(&row[0]).abs() < 1e-9, "{}", row[0]);
    assert_eq!(num(&row[1]), 0.0);
    assert_eq!(row[3], "NaN");

    let run = nonmarkov(dir.path(), "dephasing", "profile = constant\nrate = -1\nhorizon = 3\n", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!((num(&run.row("summary.txt")[0]) - 6.0).abs() < 0.01);
}

#[test]
fn rate_table_profile() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("rates.csv"), "t,gamma\n0,-1\n1,-1\n2,1\n").unwrap();
    let run = nonmarkov(
        dir.path(),
        "dephasing",
        "profile = table\ntable = rates.csv\nhorizon = 2\nsteps = 2000\n",
        &[],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    // 2·(area of the negative part) = 2·(1 + 1/2·1/2)
    assert!((num(&run.row("summary.txt")[0]) - 2.5).abs() < 0.01);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    for (command, config, needle) in [
        ("dephasing", "profile = cosh\nhorizon = 1\n", "unknown profile"),
        ("dephasing", "profile = sin\nhorizon = 1\nspeed = 3\n", "line 3: unknown key \"speed\""),
        ("dephasing", "profile = sin\nhorizon = -1\n", "horizon"),
        ("dephasing", "profile = sin\nhorizon = 1\nsteps = 1\n", "steps"),
        ("dephasing", "profile = constant\nrate = 1\nrate = 2\nhorizon = 1\n", "already set"),
        ("gaussian-sweep", "alpha = 0.1\nmodes = 0\n", "modes"),
        ("gaussian-sweep", "alpha = 0.1\ncolour = red\n", "unknown key"),
        ("divisibility", "file = missing.txt\n", "missing.txt"),
    ] {
        let run = nonmarkov(dir.path(), command, config, &[]);
        assert_eq!(run.code, 1, "{config}: {}", run.stderr);
        assert!(run.stderr.contains(needle), "{config}: {}", run.stderr);
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_nonmarkov"))
        .args(["dephasing", "--config", "/nonexistent.cfg", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn recurrence_refusal_names_required_modes() {
    let dir = TempDir::new().unwrap();
    let run = nonmarkov(dir.path(), "gaussian-sweep", "alpha = 0.1\nmodes = 10\nhorizon = 100\n", &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("modes >= 1592"), "{}", run.stderr);
    assert!(!run.out.join("sweep.csv").exists());
}

#[test]
fn zero_coupling_sweep_is_all_zero() {
    let dir = TempDir::new().unwrap();
    let run = nonmarkov(
        dir.path(),
        "gaussian-sweep",
        "alpha = 0\ntemperatures = 0, 2, 5\nmodes = 50\nsamples = 101\nwrite_series = true\n",
        &["--emit-plots", "--jobs", "1"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let sweep = run.read("sweep.csv");
    let mut lines = sweep.lines();
    assert_eq!(lines.next(), Some("alpha,T,I_E"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(num(row.split(',').nth(2).unwrap()), 0.0);
    }
    assert!(run.out.join("plot_sweep.py").exists());
    let series = run.read("series_0_5.csv");
    assert_eq!(series.lines().next(), Some("t,E_N"));
    assert_eq!(series.lines().count(), 102);
}

#[test]
fn superohmic_needs_far_smaller_coupling() {
    let dir = TempDir::new().unwrap();
    let base = "modes = 150\nsamples = 301\n";
    let ohmic = nonmarkov(dir.path(), "gaussian-sweep", &format!("alpha = 1e-3\n{base}"), &[]);
    let dir2 = TempDir::new().unwrap();
    let sup = nonmarkov(dir2.path(), "gaussian-sweep", &format!("kind = super-ohmic\nalpha = 1e-3\n{base}"), &[]);
    assert_eq!(ohmic.code, 0, "{}", ohmic.stderr);
    assert_eq!(sup.code, 0, "{}", sup.stderr);
    let (o, s) = (num(&ohmic.row("sweep.csv")[2]), num(&sup.row("sweep.csv")[2]));
    assert_eq!(o, 0.0);
    assert!(s > 0.01, "{s}");
}

fn dephasing_family(dir: &Path, profile: &str) -> PathBuf {
    let run = nonmarkov(
        dir,
        "dephasing",
        &format!("{profile}\nhorizon = 2pi\nsteps = 2000\nexport_propagators = true\n"),
        &[],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    run.out.join("propagators.txt")
}

#[test]
fn divisibility_from_exported_files() {
    let dir = TempDir::new().unwrap();
    let file = dephasing_family(dir.path(), "profile = constant\nrate = 0.7");
    let run = nonmarkov(dir.path(), "divisibility", &format!("file = {}\n", file.display()), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(num(&run.row("summary.txt")[0]).abs() < 1e-6);

    let dir = TempDir::new().unwrap();
    let file = dephasing_family(dir.path(), "profile = sin");
    let run = nonmarkov(dir.path(), "divisibility", &format!("file = {}\n", file.display()), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!((num(&run.row("summary.txt")[0]) - 4.0).abs() < 0.08);
    assert_eq!(run.read("report.csv").lines().next(), Some("t,g,I_cumulative"));
}

#[test]
fn singular_row_is_flagged_with_exit_three() {
    let dir = TempDir::new().unwrap();
    let file = dephasing_family(dir.path(), "profile = constant\nrate = 0.3");
    // erase the coherences of E(t_1000); E(t_1001) still has them
    let broken: String = fs::read_to_string(&file)
        .unwrap()
        .lines()
        .map(|line| match line.split(',').collect::<Vec<_>>()[..] {
            ["1000", r, c, _, _] if r == c && (r == "1" || r == "2") => format!("1000,{r},{c},0,0\n"),
            _ => format!("{line}\n"),
        })
        .collect();
    let bad = dir.path().join("singular.txt");
    fs::write(&bad, broken).unwrap();
    let run = nonmarkov(dir.path(), "divisibility", &format!("file = {}\n", bad.display()), &[]);
    assert_eq!(run.code, 3, "{}", run.stderr);
    let summary = run.read("summary.txt");
    assert!(summary.contains("ill-defined"), "{summary}");
    assert_eq!(run.row("summary.txt")[2], "1");
}

#[test]
fn malformed_tomography_file_names_line() {
    let dir = TempDir::new().unwrap();
    let file = dephasing_family(dir.path(), "profile = constant\nrate = 0.3");
    let mut text = fs::read_to_string(&file).unwrap();
    text.push_str("garbage here\n");
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, &text).unwrap();
    let run = nonmarkov(dir.path(), "divisibility", &format!("file = {}\n", bad.display()), &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains(&format!("line {}", text.lines().count())), "{}", run.stderr);
}

#[test]
fn outputs_are_deterministic_and_config_round_trips() {
    let dir = TempDir::new().unwrap();
    let config = "alpha = 0.05, 0.2\ntemperatures = 0, 1\nmodes = 80\nsamples = 151\nwrite_series = true\n";
    let first = nonmarkov(dir.path(), "gaussian-sweep", config, &[]);
    assert_eq!(first.code, 0, "{}", first.stderr);

    // feed the resolved config back in
    let dir2 = TempDir::new().unwrap();
    let resolved = first.read("config.resolved.txt");
    let second = nonmarkov(dir2.path(), "gaussian-sweep", &resolved, &["--jobs", "2"]);
    assert_eq!(second.code, 0, "{}", second.stderr);
    assert_eq!(second.read("config.resolved.txt"), resolved);
    for name in ["sweep.csv", "series_0.05_0.csv", "series_0.2_1.csv"] {
        assert_eq!(first.read(name), second.read(name), "{name}");
    }

    let dir3 = TempDir::new().unwrap();
    let dephasing = "profile = sin\namplitude = 0.5\nhorizon = 3pi\nsteps = 900\n";
    let a = nonmarkov(dir3.path(), "dephasing", dephasing, &[]);
    let b = nonmarkov(dir3.path(), "dephasing", &a.read("config.resolved.txt"), &[]);
    assert_eq!(a.code, 0);
    assert_eq!(b.code, 0);
    assert_eq!(a.read("g_series.csv"), b.read("g_series.csv"));
    assert_eq!(a.read("summary.txt"), b.read("summary.txt"));
}
