//! Plain-text dump of states and matrices: a `dims: d1,d2,...` header followed
//! by rows of `re,im` pairs (space separated), row-major. A state vector is a
//! single column.

use std::fmt::Write as _;

use super::{PureState, SiteLayout};
use crate::linalg::{CMatrix, C64};
use crate::{Error, Result};

pub fn write_matrix_text(dims: &[usize], m: &CMatrix) -> String {
    let mut out = header(dims);
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| pair(m[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_state_text(state: &PureState) -> String {
    let mut out = header(&vec![2; state.n_qubits()]);
    for a in state.amplitudes() {
        let _ = writeln!(out, "{}", pair(*a));
    }
    out
}

fn header(dims: &[usize]) -> String {
    let d: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    format!("dims: {}\n", d.join(","))
}

fn pair(z: C64) -> String {
    format!("{},{}", z.re, z.im)
}

/// Parses a matrix dump; returns the local dimensions and the matrix.
pub fn read_matrix_text(text: &str) -> Result<(Vec<usize>, CMatrix)> {
    let (dims, rows) = parse(text)?;
    let d: usize = dims.iter().product();
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Parse {
            line: rows.len() + 1,
            msg: format!("expected {d} rows of {d} entries"),
        });
    }
    Ok((dims, CMatrix::from_fn(d, d, |r, c| rows[r][c])))
}

pub fn read_state_text(text: &str) -> Result<PureState> {
    let (dims, rows) = parse(text)?;
    if dims.iter().any(|&d| d != 2) {
        return Err(Error::Parse {
            line: 1,
            msg: "state dumps must be qubit systems".into(),
        });
    }
    if rows.iter().any(|r| r.len() != 1) {
        return Err(Error::Parse {
            line: 2,
            msg: "state rows hold a single amplitude".into(),
        });
    }
    let amps = rows.into_iter().map(|r| r[0]).collect();
    PureState::new(dims.len(), amps)
}

fn parse(text: &str) -> Result<(Vec<usize>, Vec<Vec<C64>>)> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let dims_str = first.strip_prefix("dims:").ok_or(Error::Parse {
        line: 1,
        msg: "missing `dims:` header".into(),
    })?;
    let dims = dims_str
        .trim()
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
    SiteLayout::new((1..=dims.len()).collect(), dims.clone())?;
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|p| {
                let (re, im) = p.split_once(',')?;
                Some(C64::new(re.parse().ok()?, im.parse().ok()?))
            })
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::Parse {
                line: i + 1,
                msg: "expected `re,im` pairs".into(),
            })?;
        rows.push(row);
    }
    Ok((dims, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::make_ghz;

    #[test]
    fn matrix_round_trip() {
        let m = CMatrix::from_fn(4, 4, |r, c| C64::new(r as f64 / 3.0, -(c as f64) * 0.1));
        let text = write_matrix_text(&[2, 2], &m);
        assert!(text.starts_with("dims: 2,2\n"));
        let (dims, back) = read_matrix_text(&text).unwrap();
        assert_eq!(dims, vec![2, 2]);
        assert_eq!(back, m);
    }

    #[test]
    fn state_round_trip_and_errors() {
        let g = make_ghz(3).unwrap();
        assert_eq!(read_state_text(&write_state_text(&g)).unwrap(), g);
        assert!(matches!(
            read_state_text("dims 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_state_text("dims: 2\n1,0\nx,0\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
