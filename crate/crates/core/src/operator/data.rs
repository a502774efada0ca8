use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPKY";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

/// On-disk encodings understood by [`load_data`] and [`save_data`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    /// One matrix row per line, comma-separated decimal floats, no header.
    Csv,
    /// `SPKY`, u32 LE version, u64 LE rows, u64 LE cols, then row-major f64 LE.
    Binary,
}

/// A dense `rows x cols` data matrix `Y` stored row-major.
///
/// Rows index the dimension `N`, columns index the samples `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidSpec(format!(
                "data matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        if let Some(pos) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::MalformedFormat {
                row: pos / cols + 1,
                col: pos % cols + 1,
                reason: "non-finite entry".into(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `N / M`.
    pub fn aspect_ratio(&self) -> f64 {
        self.rows as f64 / self.cols as f64
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }
}

/// Reads a data matrix from `path`.
///
/// Errors name the offending row and column (1-based).
pub fn load_data(path: impl AsRef<Path>, format: DataFormat) -> Result<DataMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        DataFormat::Csv => parse_csv(&String::from_utf8_lossy(&bytes)),
        DataFormat::Binary => decode_binary(&bytes),
    }
}

/// Writes `data` to `path` in the given format.
pub fn save_data(path: impl AsRef<Path>, data: &DataMatrix, format: DataFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        DataFormat::Csv => encode_csv(data).into_bytes(),
        DataFormat::Binary => encode_binary(data),
    };
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(&bytes).map_err(io_err)?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<DataMatrix> {
    let mut entries = Vec::new();
    let mut cols = 0usize;
    let mut rows = 0usize;
    for (line_idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line_idx + 1;
        let mut count = 0usize;
        for (col_idx, field) in line.split(',').enumerate() {
            let field = field.trim();
            let value: f64 = field.parse().map_err(|_| Error::MalformedFormat {
                row,
                col: col_idx + 1,
                reason: format!("cannot parse {field:?} as a float"),
            })?;
            if !value.is_finite() {
                return Err(Error::MalformedFormat {
                    row,
                    col: col_idx + 1,
                    reason: "non-finite entry".into(),
                });
            }
            entries.push(value);
            count += 1;
        }
        if rows == 0 {
            cols = count;
        } else if count != cols {
            return Err(Error::MalformedFormat {
                row,
                col: count.min(cols) + 1,
                reason: format!("row has {count} fields, expected {cols}"),
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::MalformedFormat {
            row: 1,
            col: 1,
            reason: "empty input".into(),
        });
    }
    DataMatrix::new(rows, cols, entries)
}

pub fn encode_csv(data: &DataMatrix) -> String {
    let mut out = String::with_capacity(data.entries.len() * 20);
    for i in 0..data.rows {
        for (j, x) in data.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            // `{:?}` prints the shortest representation that round-trips.
            out.push_str(&format!("{x:?}"));
        }
        out.push('\n');
    }
    out
}

pub fn encode_binary(data: &DataMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * data.entries.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(data.rows as u64).to_le_bytes());
    out.extend_from_slice(&(data.cols as u64).to_le_bytes());
    for x in &data.entries {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<DataMatrix> {
    let header_err = |reason: &str| Error::MalformedFormat {
        row: 0,
        col: 0,
        reason: reason.to_string(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(header_err("truncated header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(header_err("bad magic, expected SPKY"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(header_err(&format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| header_err("dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(header_err(&format!(
            "payload has {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let entries = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DataMatrix::new(rows, cols, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_two_by_three() {
        let d = parse_csv("1,2,3\n4,5,6").unwrap();
        assert_eq!((d.rows(), d.cols()), (2, 3));
        assert_eq!(d.entries(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn csv_ragged_rows_name_row_two() {
        let err = parse_csv("1,2,3\n4,5").unwrap_err();
        match err {
            Error::MalformedFormat { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_non_finite_and_garbage() {
        assert!(matches!(
            parse_csv("1,inf\n"),
            Err(Error::MalformedFormat { row: 1, col: 2, .. })
        ));
        assert!(matches!(
            parse_csv("1,2\n3,x\n"),
            Err(Error::MalformedFormat { row: 2, col: 2, .. })
        ));
    }

    #[test]
    fn binary_identity_header() {
        let mut bytes = b"SPKY".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        for x in [1.0f64, 0.0, 0.0, 1.0] {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        let d = decode_binary(&bytes).unwrap();
        assert_eq!((d.rows(), d.cols()), (2, 2));
        assert_eq!(d.entries(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(encode_binary(&d), bytes);
    }

    #[test]
    fn binary_rejects_bad_magic_and_truncation() {
        let d = DataMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let mut bytes = encode_binary(&d);
        bytes.pop();
        assert!(decode_binary(&bytes).is_err());
        let mut bytes = encode_binary(&d);
        bytes[0] = b'X';
        assert!(decode_binary(&bytes).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_data("/nonexistent/definitely/missing.spky", DataFormat::Binary);
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn file_round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let d = DataMatrix::new(2, 3, vec![0.1, -2.5, 1e-300, 3.0, 4.25, -0.0]).unwrap();
        for (name, fmt) in [("a.csv", DataFormat::Csv), ("a.spky", DataFormat::Binary)] {
            let p = dir.path().join(name);
            save_data(&p, &d, fmt).unwrap();
            let back = load_data(&p, fmt).unwrap();
            let bits = |m: &DataMatrix| m.entries().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&back), bits(&d));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn binary_round_trip_is_bit_exact(
                rows in 1usize..6,
                cols in 1usize..6,
                seed in any::<u64>(),
            ) {
                let mut state = seed;
                let entries: Vec<f64> = (0..rows * cols)
                    .map(|_| {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        let x = f64::from_bits(state);
                        if x.is_finite() { x } else { 0.5 }
                    })
                    .collect();
                let d = DataMatrix::new(rows, cols, entries).unwrap();
                let back = decode_binary(&encode_binary(&d)).unwrap();
                let bits = |m: &DataMatrix| m.entries().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                prop_assert_eq!(bits(&back), bits(&d));
                let back_csv = parse_csv(&encode_csv(&d)).unwrap();
                prop_assert_eq!(bits(&back_csv), bits(&d));
            }
        }
    }
}
