//! Plain-text numeric grids: one matrix row per line, whitespace separated,
//! values printed with shortest round-trip precision.

use nalgebra::{DMatrix, Dim, Matrix, RawStorage};

use crate::error::{Error, Result};

pub fn write_grid<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a grid written by [`write_grid`]. Blank lines and `#` comments are skipped.
pub fn parse_grid(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|e| {
                    Error::ConfigParse(format!("grid line {}: `{tok}`: {e}", lineno + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::ConfigParse(format!(
                    "grid line {}: expected {} columns, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ragged_grid_rejected() {
        assert!(parse_grid("1 2\n3\n").is_err());
        assert!(parse_grid("1 x\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(values in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 1..64), ncols in 1usize..8) {
            let nrows = values.len() / ncols;
            prop_assume!(nrows > 0);
            let m = DMatrix::from_row_slice(nrows, ncols, &values[..nrows * ncols]);
            let back = parse_grid(&write_grid(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
