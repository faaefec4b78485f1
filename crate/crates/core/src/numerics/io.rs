//! Matrix persistence: plain CSV (one row per line) and the `CMX1` binary
//! format (magic, `u32` rows, `u32` cols, little-endian `f64` payload).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::Matrix;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CMX1";

pub fn to_bytes(m: &Matrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::Input("too many rows".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::Input("too many cols".into()))?;
    let mut out = Vec::with_capacity(12 + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(Error::Input("not a CMX1 matrix".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[12..];
    if payload.len() != rows * cols * 8 {
        return Err(Error::Input(format!(
            "CMX1 payload is {} bytes, expected {} for {rows}x{cols}",
            payload.len(),
            rows * cols * 8
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn write_binary(m: &Matrix, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(m)?).map_err(|e| Error::io(path, e))
}

pub fn read_binary(path: &Path) -> Result<Matrix> {
    from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_csv(m: &Matrix, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Matrix> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Load {
                line: i + 1,
                message: e.to_string(),
            })?;
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    #[test]
    fn binary_header_layout() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let b = to_bytes(&m).unwrap();
        assert_eq!(&b[..4], b"CMX1");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &3u32.to_le_bytes());
        assert_eq!(&b[12..20], &1.0f64.to_le_bytes());
        assert_eq!(b.len(), 12 + 24);
    }

    #[test]
    fn files_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::random_normal(7, 5, 3.0, &mut seeded_rng(11));
        let bin = dir.path().join("m.cmx");
        write_binary(&m, &bin).unwrap();
        assert_eq!(read_binary(&bin).unwrap(), m);
        let csv = dir.path().join("m.csv");
        write_csv(&m, &csv).unwrap();
        assert_eq!(read_csv(&csv).unwrap(), m);
    }

    #[test]
    fn truncated_payload_rejected() {
        let m = Matrix::zeros(2, 2);
        let b = to_bytes(&m).unwrap();
        assert!(from_bytes(&b[..b.len() - 1]).is_err());
        assert!(from_bytes(b"XXXX00000000").is_err());
    }
}
