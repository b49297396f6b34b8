//! Dense complex linear algebra for finite-dimensional operator models.
//!
//! Everything here is dense, double precision and deterministic. Conventions
//! the rest of the crate relies on:
//!
//! * [`tensor`] is the Kronecker product with the first factor slow: row index
//!   `i * dim_b + k` addresses factor-one index `i` and factor-two index `k`.
//!   This is the canonical layout; alternative layouts are permuted into it at
//!   the serialization boundary, never inside the numerics.
//! * [`hermitian_eig`] symmetrizes its input, rejects matrices that are not
//!   Hermitian to within [`tol::TAU_HERM`], and returns eigenvalues in
//!   descending order. Ties keep the backend's order (stable sort), so equal
//!   inputs produce identical output.
//! * [`polar_decompose`] factors `a = u p` with `u` unitary and `p` positive
//!   semidefinite. On singular input the unitary factor comes from the
//!   singular-vector pairing, which is deterministic.

use nalgebra as na;
use thiserror::Error;

use crate::tol;

pub type C64 = na::Complex<f64>;
pub type CMatrix = na::DMatrix<C64>;
pub type CVector = na::DVector<C64>;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("tensor shape with total dimension {total} does not match matrix dimension {dim}")]
    ShapeMismatch { total: usize, dim: usize },
    #[error("partial trace supports exactly two factors, shape has {factors}")]
    FactorCount { factors: usize },
    #[error("factor index {keep} out of range for {factors} factors")]
    KeepOutOfRange { keep: usize, factors: usize },
    #[error("tensor shape factors must be positive")]
    ZeroFactor,
    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
}

/// Factorization of a matrix dimension into tensor factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorShape {
    dims: Vec<usize>,
}

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self, LinalgError> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(LinalgError::ZeroFactor);
        }
        Ok(Self { dims })
    }

    /// Two-factor shape, object dimension first.
    pub fn two(d0: usize, d1: usize) -> Self {
        Self::new(vec![d0, d1]).expect("factors must be positive")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Kronecker product, first factor slow.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Trace out one factor of a two-factor operator, keeping factor `keep`.
pub fn partial_trace(
    m: &CMatrix,
    shape: &TensorShape,
    keep: usize,
) -> Result<CMatrix, LinalgError> {
    check_square(m)?;
    let factors = shape.dims.len();
    if factors != 2 {
        return Err(LinalgError::FactorCount { factors });
    }
    if keep >= factors {
        return Err(LinalgError::KeepOutOfRange { keep, factors });
    }
    if shape.total() != m.nrows() {
        return Err(LinalgError::ShapeMismatch {
            total: shape.total(),
            dim: m.nrows(),
        });
    }
    let (d0, d1) = (shape.dims[0], shape.dims[1]);
    let out = if keep == 0 {
        CMatrix::from_fn(d0, d0, |i, j| {
            (0..d1).map(|k| m[(i * d1 + k, j * d1 + k)]).sum()
        })
    } else {
        CMatrix::from_fn(d1, d1, |k, l| {
            (0..d0).map(|i| m[(i * d1 + k, i * d1 + l)]).sum()
        })
    };
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Real eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose column `j` is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: CMatrix,
}

/// Decompose a Hermitian matrix after symmetrizing away round-off.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig, LinalgError> {
    check_square(m)?;
    check_finite(m)?;
    let deviation = hermiticity_error(m);
    if deviation > tol::TAU_HERM {
        return Err(LinalgError::NotHermitian {
            deviation,
            tolerance: tol::TAU_HERM,
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = na::linalg::SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues of a finite Hermitian matrix are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Polar factorization `a = unitary * psd`.
#[derive(Debug, Clone)]
pub struct PolarDecomposition {
    pub unitary: CMatrix,
    pub psd: CMatrix,
}

/// Polar decomposition built from the eigensystem of `a^H a`.
///
/// For a singular `a` the unitary factor is completed on the kernel with a
/// deterministic orthonormal basis, so equal inputs give equal factors.
pub fn polar_decompose(a: &CMatrix) -> Result<PolarDecomposition, LinalgError> {
    check_square(a)?;
    check_finite(a)?;
    let n = a.nrows();
    let h = a.adjoint() * a;
    let eig = hermitian_eig(&h)?;
    // Eigenvalues of a^H a carry twice the rounding of the singular values, so
    // values below the rank cutoff are residue and must collapse to exact
    // zeros before the square root.
    let cutoff = tol::TAU_EIG * h.norm().max(1.0) + f64::EPSILON;
    let roots: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > cutoff { l.sqrt() } else { 0.0 })
        .collect();
    let range = roots.iter().take_while(|&&s| s > 0.0).count();
    let v = &eig.eigenvectors;
    let sigma = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        roots.iter().map(|&s| C64::new(s, 0.0)),
    ));
    let psd = v * sigma * v.adjoint();
    // Image directions a·v_i/s_i exist only above the rank cutoff; the rest of
    // the unitary factor is free and filled deterministically.
    let mut image: Vec<CVector> = Vec::with_capacity(n);
    for j in 0..range {
        let mut col = CVector::from_column_slice((a * v.column(j)).as_slice());
        col /= C64::new(roots[j], 0.0);
        // Re-orthonormalize against earlier columns; they are only orthonormal
        // up to the eigensolver residual.
        for prev in &image {
            let overlap = prev.dotc(&col);
            col -= prev * overlap;
        }
        col /= C64::new(col.norm(), 0.0);
        image.push(col);
    }
    let extra = complete_orthonormal(&image, n);
    image.extend(extra);
    let mut unitary = CMatrix::zeros(n, n);
    for (j, col) in image.iter().enumerate() {
        unitary.set_column(j, col);
    }
    let unitary = unitary * v.adjoint();
    Ok(PolarDecomposition { unitary, psd })
}

/// Positive-semidefinite square root; eigenvalues below zero are treated as
/// rounding residue and clamped.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    let eig = hermitian_eig(m)?;
    let n = m.nrows();
    let v = &eig.eigenvectors;
    let sigma = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| C64::new(l.max(0.0).sqrt(), 0.0)),
    ));
    Ok(v * sigma * v.adjoint())
}

/// Frobenius distance between two matrices of equal shape.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Frobenius deviation from Hermitian symmetry.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Frobenius deviation of `m^H m` from the identity.
pub fn unitarity_error(m: &CMatrix) -> f64 {
    (m.adjoint() * m - CMatrix::identity(m.nrows(), m.ncols())).norm()
}

/// Frobenius deviation from idempotence.
pub fn idempotence_error(m: &CMatrix) -> f64 {
    (m * m - m).norm()
}

pub(crate) fn check_square(m: &CMatrix) -> Result<(), LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn check_finite(m: &CMatrix) -> Result<(), LinalgError> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

/// Extend an orthonormal set to a full basis, sweeping the standard basis in
/// index order so the completion is deterministic. Returns only the added
/// vectors.
pub fn complete_orthonormal(cols: &[CVector], dim: usize) -> Vec<CVector> {
    assert!(cols.len() <= dim, "more vectors than dimensions");
    let mut basis: Vec<CVector> = cols.to_vec();
    let mut added = Vec::with_capacity(dim - cols.len());
    for j in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = CVector::zeros(dim);
        v[j] = C64::new(1.0, 0.0);
        // Two projection sweeps keep the result orthonormal to machine
        // precision even when the candidate is nearly in the span.
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-7 {
            let unit = v.unscale(norm);
            basis.push(unit.clone());
            added.push(unit);
        }
    }
    assert_eq!(
        basis.len(),
        dim,
        "standard basis sweep must complete the space"
    );
    added
}

/// Diagonal matrix from real entries.
pub fn diag(entries: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        entries.len(),
        entries.iter().map(|&x| C64::new(x, 0.0)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Pseudo-random but fixed complex matrix, independent of the crate's
    /// sampling module.
    fn probe_matrix(n: usize, salt: u64) -> CMatrix {
        let mut state = salt.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        CMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    fn hermitian_probe(n: usize, salt: u64) -> CMatrix {
        let m = probe_matrix(n, salt);
        (&m + m.adjoint()).scale(0.5)
    }

    /// Direct four-index expansion of the Kronecker product; the oracle the
    /// production routine is checked against.
    fn naive_kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let (ra, ca) = a.shape();
        let (rb, cb) = b.shape();
        let mut out = CMatrix::zeros(ra * rb, ca * cb);
        for i in 0..ra {
            for j in 0..ca {
                for k in 0..rb {
                    for l in 0..cb {
                        out[(i * rb + k, j * cb + l)] = a[(i, j)] * b[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Index-summation oracle for the partial trace, written against the
    /// canonical layout definition rather than the production loop.
    fn naive_partial_trace(m: &CMatrix, d0: usize, d1: usize, keep: usize) -> CMatrix {
        let dk = if keep == 0 { d0 } else { d1 };
        let mut out = CMatrix::zeros(dk, dk);
        for i in 0..d0 {
            for j in 0..d0 {
                for k in 0..d1 {
                    for l in 0..d1 {
                        let entry = m[(i * d1 + k, j * d1 + l)];
                        if keep == 0 && k == l {
                            out[(i, j)] += entry;
                        }
                        if keep == 1 && i == j {
                            out[(k, l)] += entry;
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn tensor_matches_direct_expansion() {
        for salt in 0..5 {
            let a = probe_matrix(3, salt);
            let b = probe_matrix(2, salt + 100);
            assert!(frobenius_distance(&tensor(&a, &b), &naive_kron(&a, &b)) < 1e-14);
        }
    }

    #[test]
    fn tensor_trace_is_multiplicative() {
        for salt in 0..5 {
            let a = probe_matrix(4, salt);
            let b = probe_matrix(3, salt + 50);
            let t = tensor(&a, &b);
            let product = a.trace() * b.trace();
            assert!((t.trace() - product).norm() < 1e-13);
        }
    }

    #[test]
    fn tensor_is_associative() {
        let a = probe_matrix(2, 1);
        let b = probe_matrix(3, 2);
        let d = probe_matrix(2, 3);
        let left = tensor(&tensor(&a, &b), &d);
        let right = tensor(&a, &tensor(&b, &d));
        assert!(frobenius_distance(&left, &right) < 1e-14);
    }

    #[test]
    fn tensor_of_diagonals_keeps_first_factor_slow() {
        let p = 0.3;
        let rho = diag(&[p / 2.0, (1.0 - p) / 2.0, p / 2.0, (1.0 - p) / 2.0]);
        let ground = diag(&[1.0, 0.0]);
        let t = tensor(&rho, &ground);
        let expected = diag(&[0.15, 0.0, 0.35, 0.0, 0.15, 0.0, 0.35, 0.0]);
        assert!(frobenius_distance(&t, &expected) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_index_summation() {
        let shape = TensorShape::two(3, 4);
        for salt in 0..5 {
            let m = probe_matrix(12, salt);
            for keep in 0..2 {
                let fast = partial_trace(&m, &shape, keep).unwrap();
                let slow = naive_partial_trace(&m, 3, 4, keep);
                assert!(frobenius_distance(&fast, &slow) < 1e-14);
            }
        }
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let a = hermitian_probe(3, 7);
        let b = hermitian_probe(2, 8);
        let t = tensor(&a, &b);
        let shape = TensorShape::two(3, 2);
        let back = partial_trace(&t, &shape, 0).unwrap();
        let scaled = a.scale(b.trace().re);
        assert!(frobenius_distance(&back, &scaled) < 1e-13);
        let other = partial_trace(&t, &shape, 1).unwrap();
        assert!(frobenius_distance(&other, &b.scale(a.trace().re)) < 1e-13);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let shape = TensorShape::two(2, 5);
        let m = probe_matrix(10, 42);
        for keep in 0..2 {
            let out = partial_trace(&m, &shape, keep).unwrap();
            assert!((out.trace() - m.trace()).norm() < 1e-13);
        }
    }

    #[test]
    fn partial_trace_joint_diagonal_fixture() {
        // Joint post-measurement state of the two-outcome qubit-memory model
        // at p = 0.3, canonical layout with object dimension 4, memory 2.
        let joint = diag(&[0.0, 0.0, 0.0, 0.35, 0.15, 0.15, 0.0, 0.35]);
        let shape = TensorShape::two(4, 2);
        let object = partial_trace(&joint, &shape, 0).unwrap();
        assert!(frobenius_distance(&object, &diag(&[0.0, 0.35, 0.3, 0.35])) < 1e-15);
        let memory = partial_trace(&joint, &shape, 1).unwrap();
        assert!(frobenius_distance(&memory, &diag(&[0.15, 0.85])) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        let m = probe_matrix(6, 0);
        let shape = TensorShape::two(4, 2);
        assert!(matches!(
            partial_trace(&m, &shape, 0),
            Err(LinalgError::ShapeMismatch { .. })
        ));
        let three = TensorShape::new(vec![2, 3, 1]).unwrap();
        assert!(matches!(
            partial_trace(&m, &three, 0),
            Err(LinalgError::FactorCount { .. })
        ));
        assert!(matches!(
            partial_trace(&m, &TensorShape::two(2, 3), 2),
            Err(LinalgError::KeepOutOfRange { .. })
        ));
    }

    #[test]
    fn hermitian_eig_reconstructs_input() {
        for n in [2, 3, 5, 8] {
            let m = hermitian_probe(n, n as u64);
            let eig = hermitian_eig(&m).unwrap();
            let lambda = diag(&eig.eigenvalues);
            let recon = &eig.eigenvectors * lambda * eig.eigenvectors.adjoint();
            let scale = m.norm().max(1.0);
            assert!(frobenius_distance(&recon, &m) < 1e-9 * scale);
            assert!(unitarity_error(&eig.eigenvectors) < 1e-12);
        }
    }

    #[test]
    fn hermitian_eig_orders_descending() {
        let m = hermitian_probe(6, 99);
        let eig = hermitian_eig(&m).unwrap();
        for w in eig.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn hermitian_eig_known_spectrum() {
        let flip = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let eig = hermitian_eig(&flip).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eig_rejects_non_hermitian() {
        let m = probe_matrix(3, 5);
        assert!(matches!(
            hermitian_eig(&m),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn polar_reconstructs_and_separates_factors() {
        for salt in 0..5 {
            let a = probe_matrix(4, salt + 1000);
            let polar = polar_decompose(&a).unwrap();
            let recon = &polar.unitary * &polar.psd;
            let scale = a.norm().max(1.0);
            assert!(frobenius_distance(&recon, &a) < 1e-9 * scale);
            assert!(unitarity_error(&polar.unitary) < 1e-11);
            let eig = hermitian_eig(&polar.psd).unwrap();
            assert!(eig.eigenvalues.iter().all(|&l| l > -1e-11));
        }
    }

    #[test]
    fn polar_of_singular_matrix_completes_unitary() {
        let a = diag(&[1.0, 0.0]);
        let polar = polar_decompose(&a).unwrap();
        assert!(unitarity_error(&polar.unitary) < 1e-12);
        assert!(frobenius_distance(&polar.psd, &a) < 1e-12);
    }

    #[test]
    fn polar_of_swap_times_projector() {
        // a maps the first basis vector to the third and kills the rest; its
        // positive factor is the rank-one projector onto the first vector.
        let mut a = CMatrix::zeros(4, 4);
        a[(2, 0)] = c(1.0, 0.0);
        let polar = polar_decompose(&a).unwrap();
        let projector = diag(&[1.0, 0.0, 0.0, 0.0]);
        assert!(frobenius_distance(&polar.psd, &projector) < 1e-12);
        assert!((polar.unitary[(2, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(unitarity_error(&polar.unitary) < 1e-12);
    }

    #[test]
    fn completion_spans_orthogonal_complement() {
        let mut v0 = CVector::zeros(4);
        v0[0] = c(0.6, 0.0);
        v0[2] = c(0.8, 0.0);
        let added = complete_orthonormal(&[v0.clone()], 4);
        assert_eq!(added.len(), 3);
        for (i, u) in added.iter().enumerate() {
            assert!((u.norm() - 1.0).abs() < 1e-12);
            assert!(v0.dotc(u).norm() < 1e-12);
            for w in added.iter().skip(i + 1) {
                assert!(u.dotc(w).norm() < 1e-12);
            }
        }
    }
}
