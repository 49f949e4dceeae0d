//! Dense PCA via singular value decomposition, projection, and
//! expressed-variance computation.

use ndarray::{Array1, Array2, ArrayView2, ArrayViewMut1, Axis};
use ndarray_linalg::SVD;

use crate::error::{Error, Result};
use crate::preprocess::StandardizedMatrix;

/// Relative singular-value threshold below which directions are treated as
/// numerical noise.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Dense,
    Sparse { p: usize },
}

/// Ordered principal directions (columns), with their singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentBasis {
    directions: Array2<f64>,
    singular_values: Vec<f64>,
    kind: BasisKind,
}

impl ComponentBasis {
    pub(crate) fn new(directions: Array2<f64>, singular_values: Vec<f64>, kind: BasisKind) -> Self {
        debug_assert_eq!(directions.ncols(), singular_values.len());
        ComponentBasis {
            directions,
            singular_values,
            kind,
        }
    }

    /// Basis with zero components over an n-dimensional variable space.
    pub fn empty(n: usize) -> Self {
        ComponentBasis {
            directions: Array2::zeros((n, 0)),
            singular_values: Vec::new(),
            kind: BasisKind::Dense,
        }
    }

    /// n-by-k matrix whose columns are the directions.
    pub fn directions(&self) -> ArrayView2<'_, f64> {
        self.directions.view()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.directions.ncols()
    }

    /// Dimension of the variable space the directions live in.
    pub fn dim(&self) -> usize {
        self.directions.nrows()
    }
}

/// Data projected onto a basis, X_k = X V_k.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedData {
    coords: Array2<f64>,
    basis: ComponentBasis,
    row_ids: Vec<String>,
}

impl ProjectedData {
    pub fn coords(&self) -> ArrayView2<'_, f64> {
        self.coords.view()
    }

    pub fn basis(&self) -> &ComponentBasis {
        &self.basis
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn n_rows(&self) -> usize {
        self.coords.nrows()
    }

    pub fn k(&self) -> usize {
        self.coords.ncols()
    }

    /// Wrap an already-projected coordinate matrix (used by tests and by
    /// synthetic generators that sample directly in the reduced space).
    pub fn from_coords(coords: Array2<f64>, row_ids: Vec<String>) -> Result<ProjectedData> {
        if coords.nrows() != row_ids.len() {
            return Err(Error::DimensionMismatch {
                context: format!("{} rows vs {} row ids", coords.nrows(), row_ids.len()),
            });
        }
        let basis = ComponentBasis::empty(coords.ncols());
        Ok(ProjectedData {
            coords,
            basis,
            row_ids,
        })
    }
}

/// Make the largest-magnitude entry of a vector positive; ties break to the
/// lowest index. Returns true when the vector was negated.
pub(crate) fn fix_sign(mut v: ArrayViewMut1<'_, f64>) -> bool {
    let mut best = 0usize;
    let mut best_abs = f64::NEG_INFINITY;
    for (i, &x) in v.iter().enumerate() {
        let a = x.abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
        true
    } else {
        false
    }
}

/// Thin SVD returning (U, s, Vt) with all factors present.
pub(crate) fn svd_thin(a: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (u, s, vt) = a.to_owned().svd(true, true)?;
    let u = u.ok_or_else(|| Error::Linalg("SVD did not return U".into()))?;
    let vt = vt.ok_or_else(|| Error::Linalg("SVD did not return Vt".into()))?;
    Ok((u, s, vt))
}

fn numerical_rank(s: &Array1<f64>) -> usize {
    match s.first() {
        None => 0,
        Some(&s0) if s0 <= 0.0 => 0,
        Some(&s0) => s.iter().take_while(|&&v| v >= RANK_TOL * s0).count(),
    }
}

/// Top-k right singular vectors of a raw matrix, sign-fixed.
pub fn pca_fit_matrix(a: ArrayView2<'_, f64>, k: usize) -> Result<ComponentBasis> {
    let (m, n) = a.dim();
    let max_k = m.min(n);
    if k == 0 {
        return Err(Error::InvalidParameter {
            reason: "k must be at least 1".into(),
        });
    }
    if k > max_k {
        return Err(Error::KTooLarge { k, max: max_k });
    }
    let (_, s, vt) = svd_thin(a)?;
    let rank = numerical_rank(&s);
    if k > rank {
        return Err(Error::RankDeficient { k, rank });
    }
    let mut directions = Array2::zeros((n, k));
    for j in 0..k {
        directions.column_mut(j).assign(&vt.row(j));
        fix_sign(directions.column_mut(j));
    }
    let singular_values = s.iter().take(k).cloned().collect();
    Ok(ComponentBasis::new(
        directions,
        singular_values,
        BasisKind::Dense,
    ))
}

/// Dense PCA of a standardized matrix.
pub fn pca_fit(x: &StandardizedMatrix, k: usize) -> Result<ComponentBasis> {
    pca_fit_matrix(x.view(), k)
}

/// Project a raw matrix onto a basis.
pub fn project_matrix(a: ArrayView2<'_, f64>, basis: &ComponentBasis) -> Result<Array2<f64>> {
    if a.ncols() != basis.dim() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "matrix has {} columns, basis expects {}",
                a.ncols(),
                basis.dim()
            ),
        });
    }
    Ok(a.dot(&basis.directions()))
}

/// Project a standardized matrix, keeping the row ids and the basis.
pub fn project(x: &StandardizedMatrix, basis: &ComponentBasis) -> Result<ProjectedData> {
    let coords = project_matrix(x.view(), basis)?;
    Ok(ProjectedData {
        coords,
        basis: basis.clone(),
        row_ids: x.row_ids().to_vec(),
    })
}

/// Orthonormal basis of the column span of V, via SVD with the usual rank
/// cutoff. Sparse directions need not be orthogonal, so expressed variance
/// is always measured against the span, never by summing per-direction
/// norms (which double-counts overlapping directions).
fn span_orthonormal(v: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if v.ncols() == 0 {
        return Ok(Array2::zeros((v.nrows(), 0)));
    }
    let (u, s, _) = svd_thin(v)?;
    let rank = numerical_rank(&s);
    Ok(u.slice_axis(Axis(1), ndarray::Slice::from(0..rank))
        .to_owned())
}

/// Fraction of total variance captured by the span of the basis:
/// ||X Q||_F^2 / ||X||_F^2 with Q an orthonormal basis of span(V_k).
pub fn expressed_variance_matrix(a: ArrayView2<'_, f64>, basis: &ComponentBasis) -> Result<f64> {
    if basis.k() == 0 {
        return Ok(0.0);
    }
    if a.ncols() != basis.dim() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "matrix has {} columns, basis expects {}",
                a.ncols(),
                basis.dim()
            ),
        });
    }
    let total: f64 = a.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let q = match basis.kind() {
        BasisKind::Dense => basis.directions().to_owned(),
        BasisKind::Sparse { .. } => span_orthonormal(basis.directions())?,
    };
    let projected = a.dot(&q);
    let captured: f64 = projected.iter().map(|v| v * v).sum();
    Ok(captured / total)
}

/// Expressed variance of a standardized matrix.
pub fn expressed_variance(x: &StandardizedMatrix, basis: &ComponentBasis) -> Result<f64> {
    expressed_variance_matrix(x.view(), basis)
}
