//! On-disk formats: CHFS1 field snapshots and the diagnostics CSV.
//!
//! A snapshot is little-endian regardless of host:
//!
//! ```text
//! "CHFS1"            5 bytes
//! dim                u8
//! N                  u32, once per axis
//! L                  f64
//! values             N^dim f64, x index fastest
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::harness::{DiagnosticsRecord, Trace};

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"CHFS1";

pub const CSV_HEADER: [&str; 9] = [
    "step",
    "t",
    "mass",
    "energy",
    "h1_seminorm",
    "h2_seminorm",
    "linf",
    "kappa",
    "retries",
];

/// Bytes before the payload for a grid of dimension `dim`.
pub fn snapshot_header_len(dim: usize) -> usize {
    SNAPSHOT_MAGIC.len() + 1 + 4 * dim + 8
}

pub fn encode_snapshot(u: &GridFunction) -> Vec<u8> {
    let grid = u.grid();
    let mut out = Vec::with_capacity(snapshot_header_len(grid.dim()) + 8 * grid.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.push(grid.dim() as u8);
    for _ in 0..grid.dim() {
        out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    }
    out.extend_from_slice(&grid.length().to_le_bytes());
    for v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn snapshot_error(message: impl Into<String>) -> Error {
    Error::Snapshot {
        path: PathBuf::new(),
        message: message.into(),
    }
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(snapshot_error(format!("truncated while reading {what}")));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

pub fn decode_snapshot(mut bytes: &[u8]) -> Result<GridFunction> {
    let magic = take(&mut bytes, SNAPSHOT_MAGIC.len(), "magic")?;
    if magic != SNAPSHOT_MAGIC {
        return Err(snapshot_error("bad magic"));
    }
    let dim = take(&mut bytes, 1, "dimension")?[0] as usize;
    if !(1..=3).contains(&dim) {
        return Err(snapshot_error(format!("dimension {dim} out of range")));
    }
    let mut counts = Vec::with_capacity(dim);
    for _ in 0..dim {
        let raw = take(&mut bytes, 4, "axis count")?;
        counts.push(u32::from_le_bytes(raw.try_into().unwrap()) as usize);
    }
    if counts.iter().any(|&c| c != counts[0]) {
        return Err(snapshot_error(format!("dimension mismatch: unequal axis counts {counts:?}")));
    }
    let length = f64::from_le_bytes(take(&mut bytes, 8, "box length")?.try_into().unwrap());
    let grid = Grid::new(dim, counts[0], length).map_err(|e| snapshot_error(e.to_string()))?;
    let payload = take(&mut bytes, 8 * grid.len(), "values")?;
    if !bytes.is_empty() {
        return Err(snapshot_error(format!("{} trailing bytes", bytes.len())));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridFunction::new(grid, values).map_err(|e| snapshot_error(e.to_string()))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Snapshot { message, .. } => Error::Snapshot {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    }
}

pub fn write_snapshot(u: &GridFunction, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_snapshot(u))?;
    file.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<GridFunction> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_snapshot(&bytes).map_err(|e| with_path(e, path))
}

/// Reads a snapshot and checks it lives on `expected`.
pub fn read_snapshot_on(path: &Path, expected: &Grid) -> Result<GridFunction> {
    let u = read_snapshot(path)?;
    if u.grid() != expected {
        return Err(Error::Snapshot {
            path: path.to_path_buf(),
            message: format!("dimension mismatch: file holds {}, expected {expected}", u.grid()),
        });
    }
    Ok(u)
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.step.to_string(),
            real(r.t),
            real(r.mass),
            real(r.energy),
            real(r.h1_seminorm),
            real(r.h2_seminorm),
            real(r.linf),
            real(r.kappa),
            r.retries.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    write_trace_csv(trace, fs::File::create(path)?)
}

/// Parses a diagnostics CSV. The fingerprint is not stored in the CSV and
/// comes back empty.
pub fn read_trace_csv<R: Read>(input: R) -> Result<Trace> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Trace(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut records = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| Error::Trace(format!("row {}: missing column {}", row + 1, CSV_HEADER[i])))
        };
        let float = |i: usize| -> Result<f64> {
            let s = field(i)?;
            s.parse()
                .map_err(|_| Error::Trace(format!("row {}: `{s}` in {} is not a number", row + 1, CSV_HEADER[i])))
        };
        let int = |i: usize| -> Result<usize> {
            let s = field(i)?;
            s.parse()
                .map_err(|_| Error::Trace(format!("row {}: `{s}` in {} is not an integer", row + 1, CSV_HEADER[i])))
        };
        records.push(DiagnosticsRecord {
            step: int(0)?,
            t: float(1)?,
            mass: float(2)?,
            energy: float(3)?,
            h1_seminorm: float(4)?,
            h2_seminorm: float(5)?,
            linf: float(6)?,
            kappa: float(7)?,
            retries: int(8)?,
        });
    }
    Ok(Trace {
        records,
        config_fingerprint: String::new(),
    })
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    read_trace_csv(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::random::uniform_field;

    #[test]
    fn header_length_matches_layout() {
        let g = make_grid(2, 16, 3.0).unwrap();
        let bytes = encode_snapshot(&GridFunction::zeros(g));
        assert_eq!(snapshot_header_len(2), 22);
        assert_eq!(bytes.len(), 22 + 8 * 256);
        assert_eq!(&bytes[..5], b"CHFS1");
        assert_eq!(bytes[5], 2);
        assert_eq!(&bytes[6..10], &16u32.to_le_bytes());
        assert_eq!(&bytes[14..22], &3.0f64.to_le_bytes());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for dim in 1..=3 {
            let g = make_grid(dim, 8, 1.7).unwrap();
            let u = uniform_field(g, 1.0, 9);
            let back = decode_snapshot(&encode_snapshot(&u)).unwrap();
            assert_eq!(back.grid(), u.grid());
            let a: Vec<u64> = u.values().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.values().iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_corruption() {
        let g = make_grid(2, 4, 1.0).unwrap();
        let good = encode_snapshot(&uniform_field(g, 1.0, 1));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode_snapshot(&bad).unwrap_err().to_string().contains("bad magic"));
        assert!(decode_snapshot(&good[..good.len() - 3]).unwrap_err().to_string().contains("truncated"));
        let mut skew = good.clone();
        skew[10..14].copy_from_slice(&8u32.to_le_bytes());
        assert!(decode_snapshot(&skew).unwrap_err().to_string().contains("dimension mismatch"));
    }
}
