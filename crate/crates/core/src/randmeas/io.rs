//! Line-delimited JSON dataset files.
//!
//! Line 1 is the header
//! `{"version":1,"n_sites":..,"sites":[..],"ensemble":"clifford|haar|external","seed":..,"m":..,"p":..}`;
//! every following line is one record `{"r":index,"u":[[8 floats per qubit]],"k":["0101",..]}`
//! where the 8 floats are re/im of the row-major 2x2 factor and character `j`
//! of a bitstring belongs to `sites[j]`. UTF-8 with LF line endings.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Ensemble, LocalUnitary, MeasurementDataset, MeasurementRecord};
use crate::linalg::{Mat2, C64};
use crate::{Error, Result};

pub const DATASET_VERSION: u32 = 1;

/// Unitarity tolerance applied to stored factors.
const READ_UNITARITY_TOL: f64 = 1e-6;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    n_sites: usize,
    sites: Vec<usize>,
    ensemble: Ensemble,
    seed: u64,
    m: usize,
    p: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    r: usize,
    u: Vec<[f64; 8]>,
    k: Vec<String>,
}

fn encode(m: &Mat2) -> [f64; 8] {
    let e = &m.0;
    [
        e[0][0].re, e[0][0].im, e[0][1].re, e[0][1].im, e[1][0].re, e[1][0].im, e[1][1].re,
        e[1][1].im,
    ]
}

fn decode(x: &[f64; 8]) -> Mat2 {
    Mat2::new(
        C64::new(x[0], x[1]),
        C64::new(x[2], x[3]),
        C64::new(x[4], x[5]),
        C64::new(x[6], x[7]),
    )
}

pub fn write_dataset<W: Write>(ds: &MeasurementDataset, mut out: W) -> Result<()> {
    let header = Header {
        version: DATASET_VERSION,
        n_sites: ds.n_sites,
        sites: ds.sites.clone(),
        ensemble: ds.ensemble,
        seed: ds.seed,
        m: ds.m(),
        p: ds.p,
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for (r, rec) in ds.records.iter().enumerate() {
        let line = RecordLine {
            r,
            u: rec.unitary.factors().iter().map(encode).collect(),
            k: (0..rec.outcomes.len()).map(|s| rec.bitstring(s)).collect(),
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_dataset_file(ds: &MeasurementDataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(ds, BufWriter::new(File::create(path)?))
}

/// Parses a dataset; any malformed or missing line fails the whole read.
pub fn read_dataset<R: BufRead>(input: R) -> Result<MeasurementDataset> {
    let mut lines = input.lines();
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };

    let first = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))??;
    let header: Header = serde_json::from_str(&first).map_err(|e| parse_err(1, e.to_string()))?;
    if header.version != DATASET_VERSION {
        return Err(parse_err(
            1,
            format!("unsupported version {}", header.version),
        ));
    }
    let k = header.sites.len();
    if k == 0 || k > 32 {
        return Err(parse_err(1, format!("bad site count {k}")));
    }

    let mut records = Vec::with_capacity(header.m);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.is_empty() {
            return Err(parse_err(line_no, "empty line".into()));
        }
        let rec: RecordLine =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        if rec.r != records.len() {
            return Err(parse_err(
                line_no,
                format!("expected record index {}, found {}", records.len(), rec.r),
            ));
        }
        if rec.u.len() != k {
            return Err(parse_err(
                line_no,
                format!("expected {k} unitary factors, found {}", rec.u.len()),
            ));
        }
        let unitary =
            LocalUnitary::with_tolerance(rec.u.iter().map(decode).collect(), READ_UNITARITY_TOL)
                .map_err(|e| Error::Validation(format!("line {line_no}: {e}")))?;
        let outcomes = rec
            .k
            .iter()
            .map(|s| parse_bits(s, k))
            .collect::<Option<Vec<u32>>>()
            .ok_or_else(|| {
                parse_err(line_no, format!("bitstrings must be {k} characters of 0/1"))
            })?;
        if outcomes.len() != header.p {
            return Err(parse_err(
                line_no,
                format!("expected {} outcomes, found {}", header.p, outcomes.len()),
            ));
        }
        records.push(MeasurementRecord { unitary, outcomes });
    }
    if records.len() != header.m {
        return Err(parse_err(
            records.len() + 2,
            format!(
                "header announces {} records, file holds {}",
                header.m,
                records.len()
            ),
        ));
    }
    let ds = MeasurementDataset {
        n_sites: header.n_sites,
        sites: header.sites,
        ensemble: header.ensemble,
        seed: header.seed,
        p: header.p,
        records,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn read_dataset_file(path: impl AsRef<Path>) -> Result<MeasurementDataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

fn parse_bits(s: &str, width: usize) -> Option<u32> {
    if s.len() != width {
        return None;
    }
    s.bytes().try_fold(0u32, |acc, b| match b {
        b'0' => Some(acc << 1),
        b'1' => Some((acc << 1) | 1),
        _ => None,
    })
}
