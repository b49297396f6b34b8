//! Quantum states and measurement ingredients.
//!
//! A [`DensityOperator`] is validated at construction: Hermitian to within
//! [`tol::TAU_HERM`], eigenvalues no lower than `-`[`tol::TAU_EIG`], trace
//! within [`tol::TAU_EIG`] of one. Round-off negatives are clamped to zero and
//! the spectrum renormalized, so states coming out of long dilation pipelines
//! validate cleanly while genuinely unphysical matrices are rejected. The
//! validated spectrum is kept, which makes entropy evaluation a plain sum.
//!
//! [`ProjectionFamily`] models a projective measurement: pairwise orthogonal
//! projectors summing to the identity. Validation collects every violated
//! property instead of stopping at the first, so a caller sees at once that a
//! family is, say, both incomplete and non-orthogonal. Zero projectors are
//! legal members; they mark outcomes that can never fire.

use std::fmt;

use thiserror::Error;

use crate::classical::FiniteDistribution;
use crate::linalg::{self, C64, CMatrix, CVector, LinalgError};
use crate::tol;

#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("eigenvalue {value:.3e} is below the negativity limit -{limit:.1e}")]
    NegativeEigenvalue { value: f64, limit: f64 },
    #[error("trace {trace:.15} deviates from 1 by more than {tolerance:.1e}")]
    BadTrace { trace: f64, tolerance: f64 },
    #[error("vector norm {norm:.3e} is too small to normalize")]
    ZeroVector { norm: f64 },
    #[error("effect eigenvalues span [{min:.6}, {max:.6}], outside [0, 1]")]
    InvalidEffect { min: f64, max: f64 },
    #[error("unitary {index} deviates from unitarity by {deviation:.3e}")]
    NotUnitary { index: usize, deviation: f64 },
    #[error("family member {index} has dimension {dim}, expected {expected}")]
    MemberDimMismatch {
        index: usize,
        dim: usize,
        expected: usize,
    },
    #[error("family must have at least one member")]
    EmptyFamily,
}

/// One structural defect of a would-be projection family.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyViolation {
    Empty,
    DimMismatch { index: usize, dim: usize, expected: usize },
    NotHermitian { index: usize, deviation: f64 },
    NotIdempotent { index: usize, deviation: f64 },
    NotOrthogonal { first: usize, second: usize, deviation: f64 },
    NotComplete { deviation: f64 },
}

impl fmt::Display for FamilyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "family has no members"),
            Self::DimMismatch {
                index,
                dim,
                expected,
            } => write!(f, "member {index} has dimension {dim}, expected {expected}"),
            Self::NotHermitian { index, deviation } => {
                write!(f, "member {index} is not Hermitian (deviation {deviation:.3e})")
            }
            Self::NotIdempotent { index, deviation } => {
                write!(f, "member {index} is not idempotent (deviation {deviation:.3e})")
            }
            Self::NotOrthogonal {
                first,
                second,
                deviation,
            } => write!(
                f,
                "members {first} and {second} are not orthogonal (deviation {deviation:.3e})"
            ),
            Self::NotComplete { deviation } => {
                write!(f, "members do not sum to the identity (deviation {deviation:.3e})")
            }
        }
    }
}

/// Validation failure carrying every violated family property.
#[derive(Debug, Error)]
pub struct InvalidFamily {
    pub violations: Vec<FamilyViolation>,
}

impl fmt::Display for InvalidFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid projection family: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Unit-trace positive semidefinite operator with its validated spectrum.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    mat: CMatrix,
    spectrum: Vec<f64>,
}

impl DensityOperator {
    /// Validate and normalize a candidate density matrix.
    pub fn new(m: CMatrix) -> Result<Self, StateError> {
        // A matrix whose off-diagonal entries are exactly zero needs no
        // eigensolver: the diagonal is the spectrum. Permutation-built joint
        // states of diagonal inputs hit this path at large dimensions.
        if let Some(entries) = exactly_diagonal(&m) {
            let mut entries = entries;
            Self::validate_spectrum(&mut entries)?;
            let mat = linalg::diag(&entries);
            let mut spectrum = entries;
            spectrum.sort_unstable_by(|a, b| b.partial_cmp(a).expect("validated reals"));
            return Ok(Self { mat, spectrum });
        }
        let eig = linalg::hermitian_eig(&m)?;
        let mut spectrum = eig.eigenvalues;
        Self::validate_spectrum(&mut spectrum)?;
        let mat = &eig.eigenvectors
            * linalg::diag(&spectrum)
            * eig.eigenvectors.adjoint();
        Ok(Self { mat, spectrum })
    }

    /// Reject below-tolerance negatives and a wrong trace, then clamp and
    /// renormalize in place.
    fn validate_spectrum(spectrum: &mut [f64]) -> Result<(), StateError> {
        for &value in spectrum.iter() {
            if value < -tol::TAU_EIG {
                return Err(StateError::NegativeEigenvalue {
                    value,
                    limit: tol::TAU_EIG,
                });
            }
        }
        let trace: f64 = spectrum.iter().sum();
        if (trace - 1.0).abs() > tol::TAU_EIG {
            return Err(StateError::BadTrace {
                trace,
                tolerance: tol::TAU_EIG,
            });
        }
        for value in spectrum.iter_mut() {
            if *value < 0.0 {
                *value = 0.0;
            }
        }
        let clamped: f64 = spectrum.iter().sum();
        for value in spectrum.iter_mut() {
            *value /= clamped;
        }
        Ok(())
    }

    /// Diagonal state from classical probabilities.
    pub fn from_diagonal(entries: &[f64]) -> Result<Self, StateError> {
        Self::new(linalg::diag(entries))
    }

    /// Pure state from a (not necessarily normalized) vector.
    pub fn pure(v: &CVector) -> Result<Self, StateError> {
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(StateError::ZeroVector { norm });
        }
        let unit = v.unscale(norm);
        let mat = CMatrix::from_fn(v.len(), v.len(), |i, j| unit[i] * unit[j].conj());
        Self::new(mat)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = 1.0 / dim as f64;
        Self {
            mat: CMatrix::identity(dim, dim).scale(p),
            spectrum: vec![p; dim],
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Validated eigenvalues in descending order.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }
}

/// Real diagonal of a square matrix whose other entries are all exactly
/// zero, if it is one.
fn exactly_diagonal(m: &CMatrix) -> Option<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return None;
    }
    let n = m.nrows();
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..n {
            let x = m[(i, j)];
            if i == j {
                if x.im != 0.0 {
                    return None;
                }
                entries.push(x.re);
            } else if x.re != 0.0 || x.im != 0.0 {
                return None;
            }
        }
    }
    Some(entries)
}

/// Von Neumann entropy in nats. Never negative: round-off residue from
/// eigenvalues at the top of the spectrum is clamped away.
pub fn vn_entropy(rho: &DensityOperator) -> f64 {
    (-rho
        .spectrum()
        .iter()
        .filter(|&&l| l > tol::EPS_ENTROPY)
        .map(|&l| l * l.ln())
        .sum::<f64>())
    .max(0.0)
}

/// Shannon entropy of a classical distribution in nats.
pub fn shannon_entropy(d: &FiniteDistribution) -> f64 {
    d.entropy()
}

/// Pairwise orthogonal projectors summing to the identity.
#[derive(Debug, Clone)]
pub struct ProjectionFamily {
    members: Vec<CMatrix>,
    dim: usize,
}

/// Validate a candidate family, collecting every violation.
pub fn validate_projection_family(members: Vec<CMatrix>) -> Result<ProjectionFamily, InvalidFamily> {
    ProjectionFamily::new(members)
}

impl ProjectionFamily {
    pub fn new(members: Vec<CMatrix>) -> Result<Self, InvalidFamily> {
        if members.is_empty() {
            return Err(InvalidFamily {
                violations: vec![FamilyViolation::Empty],
            });
        }
        let dim = members[0].nrows();
        for (index, m) in members.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(InvalidFamily {
                    violations: vec![FamilyViolation::DimMismatch {
                        index,
                        dim: m.nrows(),
                        expected: dim,
                    }],
                });
            }
        }
        let mut violations = Vec::new();
        for (index, m) in members.iter().enumerate() {
            let herm = linalg::hermiticity_error(m);
            if herm > tol::TAU_HERM {
                violations.push(FamilyViolation::NotHermitian {
                    index,
                    deviation: herm,
                });
            }
            let idem = linalg::idempotence_error(m);
            if idem > tol::TAU_EIG {
                violations.push(FamilyViolation::NotIdempotent {
                    index,
                    deviation: idem,
                });
            }
        }
        for first in 0..members.len() {
            for second in (first + 1)..members.len() {
                let deviation = (&members[first] * &members[second]).norm();
                if deviation > tol::TAU_EIG {
                    violations.push(FamilyViolation::NotOrthogonal {
                        first,
                        second,
                        deviation,
                    });
                }
            }
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for m in &members {
            sum += m;
        }
        let completeness = (&sum - CMatrix::identity(dim, dim)).norm();
        if completeness > tol::TAU_EIG {
            violations.push(FamilyViolation::NotComplete {
                deviation: completeness,
            });
        }
        if violations.is_empty() {
            Ok(Self { members, dim })
        } else {
            Err(InvalidFamily { violations })
        }
    }

    /// Family of rank-one projectors onto the standard basis.
    pub fn standard_basis(dim: usize) -> Self {
        let members = (0..dim)
            .map(|n| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(n, n)] = C64::new(1.0, 0.0);
                m
            })
            .collect();
        Self { members, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, n: usize) -> &CMatrix {
        &self.members[n]
    }

    pub fn members(&self) -> &[CMatrix] {
        &self.members
    }

    /// Projector ranks, read off the traces.
    pub fn ranks(&self) -> Vec<usize> {
        self.members
            .iter()
            .map(|m| m.trace().re.round() as usize)
            .collect()
    }

    /// Orthonormal basis of the range of member `n`, as matrix columns.
    /// Empty for a zero projector.
    pub fn range_basis(&self, n: usize) -> CMatrix {
        let eig = linalg::hermitian_eig(self.member(n)).expect("projectors are Hermitian");
        let rank = eig.eigenvalues.iter().filter(|&&l| l > 0.5).count();
        eig.eigenvectors.columns(0, rank).into_owned()
    }
}

/// Family of unitaries indexed by measurement outcome.
#[derive(Debug, Clone)]
pub struct UnitaryFamily {
    members: Vec<CMatrix>,
    dim: usize,
}

impl UnitaryFamily {
    pub fn new(members: Vec<CMatrix>) -> Result<Self, StateError> {
        if members.is_empty() {
            return Err(StateError::EmptyFamily);
        }
        let dim = members[0].nrows();
        for (index, m) in members.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(StateError::MemberDimMismatch {
                    index,
                    dim: m.nrows(),
                    expected: dim,
                });
            }
            let deviation = linalg::unitarity_error(m);
            if deviation > tol::TAU_EIG {
                return Err(StateError::NotUnitary { index, deviation });
            }
        }
        Ok(Self { members, dim })
    }

    /// Identity on every outcome.
    pub fn identity(dim: usize, outcomes: usize) -> Self {
        Self {
            members: vec![CMatrix::identity(dim, dim); outcomes],
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, n: usize) -> &CMatrix {
        &self.members[n]
    }

    pub fn members(&self) -> &[CMatrix] {
        &self.members
    }
}

/// Measurement effect: Hermitian with spectrum inside `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Effect {
    mat: CMatrix,
}

impl Effect {
    pub fn new(m: CMatrix) -> Result<Self, StateError> {
        let eig = linalg::hermitian_eig(&m)?;
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        let max = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if min < -tol::TAU_EIG || max > 1.0 + tol::TAU_EIG {
            return Err(StateError::InvalidEffect { min, max });
        }
        Ok(Self { mat: m })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Outcome probability on a state.
    pub fn probability(&self, rho: &DensityOperator) -> f64 {
        (&self.mat * rho.matrix()).trace().re
    }
}
