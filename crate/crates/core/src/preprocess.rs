//! Ternary encoding and column standardization.
//!
//! Votes map to {-1, 0, +1}. Standardization subtracts the column mean and
//! divides by the Euclidean norm of the deviations, so each output column
//! sums to zero and has unit 2-norm (not unit sample variance).

use std::io::Write;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::ingest::VoteDataset;

/// Ternary vote matrix, voters by bills.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedMatrix {
    z: Array2<i8>,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
}

impl EncodedMatrix {
    pub fn matrix(&self) -> &Array2<i8> {
        &self.z
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    /// Swap rows and columns (and their id lists). Used by the outlier
    /// pipeline, which standardizes the bills-by-voters orientation.
    pub fn transposed(&self) -> EncodedMatrix {
        EncodedMatrix {
            z: self.z.t().to_owned(),
            row_ids: self.col_ids.clone(),
            col_ids: self.row_ids.clone(),
        }
    }
}

/// Column-standardized real matrix with the statistics used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedMatrix {
    x: Array2<f64>,
    column_means: Vec<f64>,
    column_norms: Vec<f64>,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
}

impl StandardizedMatrix {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    /// Standardize a held-out row of ternary votes with the stored
    /// training statistics.
    pub fn standardize_row(&self, encoded: &[i8]) -> Result<Vec<f64>> {
        if encoded.len() != self.column_means.len() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "row has {} entries, matrix has {} columns",
                    encoded.len(),
                    self.column_means.len()
                ),
            });
        }
        Ok(encoded
            .iter()
            .zip(self.column_means.iter().zip(&self.column_norms))
            .map(|(&z, (&mean, &norm))| (f64::from(z) - mean) / norm)
            .collect())
    }
}

/// Encode a cleaned dataset as the ternary matrix Z. Row order follows the
/// dataset voter order, column order the bill order.
pub fn encode(d: &VoteDataset) -> EncodedMatrix {
    let m = d.n_voters();
    let n = d.n_bills();
    let mut z = Array2::<i8>::zeros((m, n));
    for vi in 0..m {
        for bi in 0..n {
            z[[vi, bi]] = d.vote(vi, bi).encoded();
        }
    }
    EncodedMatrix {
        z,
        row_ids: d.voters().iter().map(|v| v.id.clone()).collect(),
        col_ids: d.bills().iter().map(|b| b.id.clone()).collect(),
    }
}

/// Standardize each column of a real matrix: subtract the mean, divide by
/// the Euclidean norm of the deviations. Returns the matrix together with
/// the per-column means and norms. Columns are processed in a fixed order
/// with a fixed summation order, so results do not depend on threading.
pub fn standardize_columns(a: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Vec<f64>, Vec<f64>)> {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return Err(Error::DimensionMismatch {
            context: format!("cannot standardize a {m}x{n} matrix"),
        });
    }
    let mut x = a.to_owned();
    let mut means = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    for j in 0..n {
        let col = a.column(j);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            return Err(Error::ZeroVarianceColumn {
                id: format!("column {j}"),
            });
        }
        let mean = col.sum() / m as f64;
        let norm = col
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<f64>()
            .sqrt();
        for i in 0..m {
            x[[i, j]] = (a[[i, j]] - mean) / norm;
        }
        means.push(mean);
        norms.push(norm);
    }
    Ok((x, means, norms))
}

/// Standardize an encoded vote matrix over its columns.
pub fn standardize(z: &EncodedMatrix) -> Result<StandardizedMatrix> {
    let real = z.matrix().mapv(f64::from);
    let (x, column_means, column_norms) =
        standardize_columns(real.view()).map_err(|e| match e {
            Error::ZeroVarianceColumn { id } => {
                let idx: usize = id
                    .rsplit(' ')
                    .next()
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(0);
                Error::ZeroVarianceColumn {
                    id: z.col_ids().get(idx).cloned().unwrap_or(id),
                }
            }
            other => other,
        })?;
    Ok(StandardizedMatrix {
        x,
        column_means,
        column_norms,
        row_ids: z.row_ids.clone(),
        col_ids: z.col_ids.clone(),
    })
}

/// Write X as CSV: header row of bill ids, first column of voter ids,
/// entries with 12 significant digits.
pub fn write_standardized_csv(x: &StandardizedMatrix, mut w: impl Write) -> Result<()> {
    write!(w, "voter_id")?;
    for id in x.col_ids() {
        write!(w, ",{id}")?;
    }
    writeln!(w)?;
    for (i, id) in x.row_ids().iter().enumerate() {
        write!(w, "{id}")?;
        for j in 0..x.n_cols() {
            write!(w, ",{:.11e}", x.matrix()[[i, j]])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Bill, VoteDataset, VoteValue, Voter};
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;
    use ndarray::array;
    use proptest::prelude::*;

    fn dataset(rows: &[(&str, &str)], grid: &[&[VoteValue]]) -> VoteDataset {
        let voters = rows
            .iter()
            .map(|(id, g)| Voter {
                id: id.to_string(),
                group: g.to_string(),
            })
            .collect::<Vec<_>>();
        let n = grid[0].len();
        let bills = (0..n)
            .map(|j| Bill {
                id: format!("b{j}"),
                date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
                description: String::new(),
                secret_ballot: false,
            })
            .collect();
        let cells = grid.iter().flat_map(|r| r.iter().copied()).collect();
        VoteDataset::from_dense(voters, bills, cells).unwrap()
    }

    #[test]
    fn encode_maps_values_and_preserves_order() {
        use VoteValue::*;
        let d = dataset(
            &[("s1", "A"), ("s2", "B")],
            &[&[Yes, No, NotVoting], &[No, Yes, Yes]],
        );
        let z = encode(&d);
        assert_eq!(z.matrix(), &array![[1, -1, 0], [-1, 1, 1]]);
        assert_eq!(z.row_ids(), ["s1".to_string(), "s2".to_string()]);
        assert_eq!(
            z.col_ids(),
            ["b0".to_string(), "b1".to_string(), "b2".to_string()]
        );
    }

    #[test]
    fn encode_is_equivariant_under_voter_reordering() {
        use VoteValue::*;
        let d = dataset(
            &[("s1", "A"), ("s2", "B")],
            &[&[Yes, No, NotVoting], &[No, Yes, Yes]],
        );
        let swapped = dataset(
            &[("s2", "B"), ("s1", "A")],
            &[&[No, Yes, Yes], &[Yes, No, NotVoting]],
        );
        let z = encode(&d);
        let zs = encode(&swapped);
        for j in 0..3 {
            assert_eq!(z.matrix()[[0, j]], zs.matrix()[[1, j]]);
            assert_eq!(z.matrix()[[1, j]], zs.matrix()[[0, j]]);
        }
    }

    #[test]
    fn two_value_column_standardizes_to_plus_minus_inv_sqrt2() {
        let a = array![[1.0], [-1.0]];
        let (x, means, norms) = standardize_columns(a.view()).unwrap();
        assert_abs_diff_eq!(x[[0, 0]], 0.7071067811865475, epsilon = 1e-12);
        assert_abs_diff_eq!(x[[1, 0]], -0.7071067811865475, epsilon = 1e-12);
        assert_abs_diff_eq!(means[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(norms[0], std::f64::consts::SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn three_value_column_matches_hand_computation() {
        // mean 1/3, deviations [2/3, 2/3, -4/3], norm sqrt(8/3)
        let a = array![[1.0], [1.0], [-1.0]];
        let (x, means, norms) = standardize_columns(a.view()).unwrap();
        assert_abs_diff_eq!(x[[0, 0]], 0.408248290463863, epsilon = 1e-12);
        assert_abs_diff_eq!(x[[1, 0]], 0.408248290463863, epsilon = 1e-12);
        assert_abs_diff_eq!(x[[2, 0]], -0.816496580927726, epsilon = 1e-12);
        assert_abs_diff_eq!(means[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(norms[0], (8.0f64 / 3.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn constant_column_is_rejected() {
        let a = array![[1.0, 1.0], [1.0, -1.0]];
        let err = standardize_columns(a.view()).unwrap_err();
        assert!(matches!(err, Error::ZeroVarianceColumn { .. }));
    }

    #[test]
    fn zero_variance_error_names_the_bill() {
        use VoteValue::*;
        let d = dataset(&[("s1", "A"), ("s2", "B")], &[&[Yes, Yes], &[No, Yes]]);
        let z = encode(&d);
        let err = standardize(&z).unwrap_err();
        match err {
            Error::ZeroVarianceColumn { id } => assert_eq!(id, "b1"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sign_symmetry_negates_standardization_exactly() {
        use VoteValue::*;
        let d = dataset(
            &[("s1", "A"), ("s2", "B"), ("s3", "B")],
            &[&[Yes, No], &[No, Yes], &[NotVoting, Yes]],
        );
        let z = encode(&d);
        let x = standardize(&z).unwrap();

        let flipped = dataset(
            &[("s1", "A"), ("s2", "B"), ("s3", "B")],
            &[&[No, Yes], &[Yes, No], &[NotVoting, No]],
        );
        let zf = encode(&flipped);
        let xf = standardize(&zf).unwrap();

        for i in 0..x.n_rows() {
            for j in 0..x.n_cols() {
                assert_eq!(x.matrix()[[i, j]], -xf.matrix()[[i, j]]);
            }
        }
    }

    #[test]
    fn standardize_row_reuses_training_statistics() {
        use VoteValue::*;
        let d = dataset(
            &[("s1", "A"), ("s2", "B"), ("s3", "B")],
            &[&[Yes, No], &[No, Yes], &[NotVoting, Yes]],
        );
        let x = standardize(&encode(&d)).unwrap();
        let row = x.standardize_row(&[1, -1]).unwrap();
        for (j, v) in row.iter().enumerate() {
            let expect = (f64::from([1i8, -1][j]) - x.column_means()[j]) / x.column_norms()[j];
            assert_eq!(*v, expect);
        }
        assert!(x.standardize_row(&[1]).is_err());
    }

    #[test]
    fn standardized_csv_has_header_and_ids() {
        use VoteValue::*;
        let d = dataset(&[("s1", "A"), ("s2", "B")], &[&[Yes, No], &[No, Yes]]);
        let x = standardize(&encode(&d)).unwrap();
        let mut buf = Vec::new();
        write_standardized_csv(&x, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "voter_id,b0,b1");
        assert!(lines.next().unwrap().starts_with("s1,"));
    }

    proptest! {
        /// Columns sum to zero and have unit norm; the whole matrix has
        /// squared Frobenius norm n.
        #[test]
        fn standardization_invariants(seed in 0u64..500, m in 2usize..12, n in 1usize..8) {
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = || {
                state ^= state >> 30;
                state = state.wrapping_mul(0xbf58476d1ce4e5b9);
                state ^= state >> 27;
                state
            };
            // Random ternary matrix; force two distinct values per column.
            let mut a = Array2::<f64>::zeros((m, n));
            for j in 0..n {
                for i in 0..m {
                    a[[i, j]] = f64::from((next() % 3) as i32 - 1);
                }
                if (0..m).all(|i| a[[i, j]] == a[[0, j]]) {
                    a[[0, j]] = if a[[0, j]] == 1.0 { -1.0 } else { 1.0 };
                }
            }
            let (x, _, _) = standardize_columns(a.view()).unwrap();
            for j in 0..n {
                let col = x.column(j);
                let sum: f64 = col.sum();
                let norm: f64 = col.dot(&col).sqrt();
                prop_assert!(sum.abs() <= 1e-9 * m as f64);
                prop_assert!((norm - 1.0).abs() <= 1e-9);
            }
            let frob2: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!((frob2 - n as f64).abs() <= 1e-8);
        }

        /// Shifting a column by a constant does not change the output.
        #[test]
        fn standardization_is_shift_invariant(shift in -100.0f64..100.0) {
            let a = array![[1.0, 3.0], [2.0, -1.0], [4.0, 0.5]];
            let mut b = a.clone();
            for i in 0..3 {
                b[[i, 0]] += shift;
            }
            let (xa, _, _) = standardize_columns(a.view()).unwrap();
            let (xb, _, _) = standardize_columns(b.view()).unwrap();
            for i in 0..3 {
                for j in 0..2 {
                    prop_assert!((xa[[i, j]] - xb[[i, j]]).abs() < 1e-9);
                }
            }
        }
    }
}
