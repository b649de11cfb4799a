// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use crate::error::{ProbeError, Result};
use crate::probe::Direction;

/// Pairwise cosine similarity of the `w` vectors. Symmetric, entries clamped
/// to [−1, 1].
pub fn cosine_matrix(directions: &[Direction]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = directions.first() else {
        return Ok(Vec::new());
    };
    for dir in directions {
        if dir.d() != first.d() {
            return Err(ProbeError::DimensionMismatch {
                expected: first.d(),
                found: dir.d(),
            });
        }
    }
    let n = directions.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let (a, b) = (&directions[i], &directions[j]);
            let dot: f64 = a.w().iter().zip(b.w()).map(|(x, y)| x * y).sum();
            let c = (dot / (a.w_norm() * b.w_norm())).clamp(-1.0, 1.0);
            out[i][j] = c;
            out[j][i] = c;
        }
    }
    Ok(out)
}

/// Square CSV: header row of labels, then one row per direction.
pub fn write_cosine_csv(labels: &[String], matrix: &[Vec<f64>], path: &Path) -> Result<()> {
    let mut header = vec!["direction"];
    header.extend(labels.iter().map(String::as_str));
    let rows = labels.iter().zip(matrix).map(|(label, row)| {
        std::iter::once(label.clone())
            .chain(row.iter().map(|v| v.to_string()))
            .collect::<Vec<_>>()
    });
    super::write_csv(path, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(w: &[f64]) -> Direction {
        Direction::from_parts(w.to_vec(), vec![0.0; w.len()], 0).unwrap()
    }

    #[test]
    fn analytic_cases() {
        let m = cosine_matrix(&[dir(&[1.0, 0.0]), dir(&[0.0, 1.0]), dir(&[1.0, 1.0])]).unwrap();
        assert_eq!(m[0][1], 0.0);
        assert!((m[0][2] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        for (i, row) in m.iter().enumerate() {
            assert!((row[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_mixed_widths() {
        assert!(cosine_matrix(&[dir(&[1.0]), dir(&[1.0, 2.0])]).is_err());
    }
}
