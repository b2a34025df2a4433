//! Text format for propagator families, e.g. reconstructed by process
//! tomography.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! propagator-family v1
//! dim,2
//! t_index,time
//! 0,0.0
//! 1,0.001
//! ...
//! t_index,row,col,re,im
//! 0,0,0,1.0,0.0
//! ...
//! ```
//!
//! The grid section lists `t_index` values `0, 1, …, K` in order; the grid
//! must be uniform and start at `0`. The entry section must give every
//! `(t_index, row, col)` of every `d²×d²` superoperator exactly once, in any
//! order. Superoperators use column stacking (`vec(ρ)[i + d·j] = ρ[i, j]`).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt_num;
use crate::lindblad::PropagatorFamily;
use crate::operator::{CMatrix, Superoperator, C64};

pub const MAGIC: &str = "propagator-family v1";
const GRID_HEADER: &str = "t_index,time";
const ENTRY_HEADER: &str = "t_index,row,col,re,im";

pub fn write_family<W: Write>(family: &PropagatorFamily, mut out: W) -> Result<()> {
    let d = family.dim();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "dim,{d}")?;
    writeln!(out, "{GRID_HEADER}")?;
    for (k, t) in family.times().iter().enumerate() {
        writeln!(out, "{k},{}", fmt_num(*t))?;
    }
    writeln!(out, "{ENTRY_HEADER}")?;
    for (k, p) in family.propagators().iter().enumerate() {
        let m = p.matrix();
        for r in 0..d * d {
            for c in 0..d * d {
                let z = m[(r, c)];
                writeln!(out, "{k},{r},{c},{},{}", fmt_num(z.re), fmt_num(z.im))?;
            }
        }
    }
    Ok(())
}

pub fn read_family(path: &Path) -> Result<PropagatorFamily> {
    parse_family(&std::fs::read_to_string(path)?)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {name} {:?}", s.trim())))
}

#[derive(PartialEq)]
enum Section {
    Magic,
    Dim,
    GridHeader,
    Grid,
    Entries,
}

pub fn parse_family(text: &str) -> Result<PropagatorFamily> {
    let mut section = Section::Magic;
    let mut dim = 0usize;
    let mut times: Vec<f64> = Vec::new();
    let mut matrices: Vec<CMatrix> = Vec::new();
    let mut seen: Vec<bool> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        match section {
            Section::Magic => {
                if s != MAGIC {
                    return Err(parse_err(line, format!("expected {MAGIC:?}")));
                }
                section = Section::Dim;
            }
            Section::Dim => {
                let rest = s
                    .strip_prefix("dim,")
                    .ok_or_else(|| parse_err(line, "expected \"dim,<d>\""))?;
                dim = field(line, "dimension", rest)?;
                if dim < 1 {
                    return Err(parse_err(line, "dimension must be >= 1"));
                }
                section = Section::GridHeader;
            }
            Section::GridHeader => {
                if s != GRID_HEADER {
                    return Err(parse_err(line, format!("expected {GRID_HEADER:?}")));
                }
                section = Section::Grid;
            }
            Section::Grid if s == ENTRY_HEADER => {
                if times.len() < 2 {
                    return Err(parse_err(line, "grid needs at least two points"));
                }
                let n = dim * dim;
                matrices = vec![CMatrix::zeros(n, n); times.len()];
                seen = vec![false; times.len() * n * n];
                section = Section::Entries;
            }
            Section::Grid => {
                let cols: Vec<&str> = s.split(',').collect();
                if cols.len() != 2 {
                    return Err(parse_err(line, "grid row needs 2 fields: t_index,time"));
                }
                let k: usize = field(line, "t_index", cols[0])?;
                let t: f64 = field(line, "time", cols[1])?;
                if k != times.len() {
                    return Err(parse_err(line, format!("expected t_index {}, found {k}", times.len())));
                }
                if k == 0 && t != 0.0 {
                    return Err(parse_err(line, "grid must start at time 0"));
                }
                if k >= 2 {
                    let dt = times[1] - times[0];
                    let step = t - times[k - 1];
                    if (step - dt).abs() > 1e-9 * dt.max(t.abs()) {
                        return Err(parse_err(line, format!("non-uniform grid: step {step} vs {dt}")));
                    }
                } else if k == 1 && !(t > 0.0) {
                    return Err(parse_err(line, "grid must be strictly increasing"));
                }
                times.push(t);
            }
            Section::Entries => {
                let cols: Vec<&str> = s.split(',').collect();
                if cols.len() != 5 {
                    return Err(parse_err(line, "entry row needs 5 fields: t_index,row,col,re,im"));
                }
                let k: usize = field(line, "t_index", cols[0])?;
                let r: usize = field(line, "row", cols[1])?;
                let c: usize = field(line, "col", cols[2])?;
                let re: f64 = field(line, "real part", cols[3])?;
                let im: f64 = field(line, "imaginary part", cols[4])?;
                let n = dim * dim;
                if k >= times.len() || r >= n || c >= n {
                    return Err(parse_err(line, format!("index ({k},{r},{c}) out of range")));
                }
                let slot = (k * n + r) * n + c;
                if seen[slot] {
                    return Err(parse_err(line, format!("duplicate entry ({k},{r},{c})")));
                }
                seen[slot] = true;
                matrices[k][(r, c)] = C64::new(re, im);
            }
        }
    }
    if section != Section::Entries {
        return Err(parse_err(last_line, "unexpected end of file"));
    }
    if let Some(slot) = seen.iter().position(|s| !s) {
        let n = dim * dim;
        return Err(parse_err(
            last_line,
            format!("missing entry ({},{},{})", slot / (n * n), (slot / n) % n, slot % n),
        ));
    }
    let propagators = matrices
        .into_iter()
        .map(|m| Superoperator::from_matrix(dim, m))
        .collect::<Result<Vec<_>>>()?;
    PropagatorFamily::from_parts(times, propagators)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::LindbladGenerator;

    fn small_family() -> PropagatorFamily {
        LindbladGenerator::pure_dephasing(|t: f64| t.cos()).propagate(0.5, 5).unwrap()
    }

    fn render(f: &PropagatorFamily) -> String {
        let mut buf = Vec::new();
        write_family(f, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip() {
        let fam = small_family();
        let back = parse_family(&render(&fam)).unwrap();
        assert_eq!(back.len(), fam.len());
        for (a, b) in back.propagators().iter().zip(fam.propagators()) {
            assert!((a.matrix() - b.matrix()).norm() < 1e-11);
        }
    }

    #[test]
    fn non_uniform_grid_rejected_with_line() {
        let text = render(&small_family()).replace("\n3,3.00000000000e-1\n", "\n3,3.10000000000e-1\n");
        match parse_family(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("non-uniform"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let good = render(&small_family());
        let lines: Vec<&str> = good.lines().collect();
        // corrupt the first entry row (line 11)
        let mut bad = lines.clone();
        bad[10] = "0,0,0,abc,0";
        match parse_family(&bad.join("\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 11),
            other => panic!("expected parse error, got {other:?}"),
        }
        // drop an entry
        let mut missing = lines.clone();
        missing.pop();
        assert!(matches!(parse_family(&missing.join("\n")), Err(Error::Parse { .. })));
        // duplicate an entry
        let mut dup = lines.clone();
        let last = *dup.last().unwrap();
        dup.push(last);
        assert!(matches!(parse_family(&dup.join("\n")), Err(Error::Parse { .. })));
        assert!(matches!(parse_family("hello"), Err(Error::Parse { line: 1, .. })));
    }
}
