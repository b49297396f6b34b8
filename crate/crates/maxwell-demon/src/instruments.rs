//! Quantum instruments and conditional action.
//!
//! A [`QuantumOperation`] is a completely positive trace-nonincreasing map in
//! Kraus form. An [`Instrument`] assigns one operation to every measurement
//! outcome such that the total operation is trace preserving.
//!
//! Two special constructions matter here. The Lueders instrument of a
//! projector family applies `P_n . P_n` on outcome `n` and never lowers the
//! entropy of the average output. The conditional-action instrument applies a
//! unitary chosen by the outcome, `U_n P_n . P_n U_n^H`; its average output
//! can have strictly lower entropy than the input, the demonic signature.
//!
//! Conditional-action instruments are exactly the instruments whose outcome
//! operations are pure (single Kraus operator up to scalar mixing) and sharp
//! (induced effect is a projector). [`Instrument::recover_maxwell_form`]
//! implements that characterization constructively through a polar
//! decomposition of each outcome's Kraus representative.

use thiserror::Error;

use crate::classical::{ClassicalError, FiniteDistribution};
use crate::linalg::{self, C64, CMatrix, LinalgError};
use crate::states::{
    DensityOperator, Effect, InvalidFamily, ProjectionFamily, StateError, UnitaryFamily,
    vn_entropy,
};
use crate::tol;

#[derive(Debug, Error)]
pub enum InstrumentError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Probability(#[from] ClassicalError),
    #[error("operation must have at least one Kraus operator")]
    EmptyOperation,
    #[error("instrument must have at least one outcome")]
    EmptyInstrument,
    #[error("Kraus operator {index} has dimension {dim}, expected {expected}")]
    KrausDimMismatch {
        index: usize,
        dim: usize,
        expected: usize,
    },
    #[error("operation increases trace: largest eigenvalue of the Kraus sum is 1 + {excess:.3e}")]
    TraceIncreasing { excess: f64 },
    #[error("outcome operations do not sum to a trace-preserving map (deviation {deviation:.3e})")]
    NotComplete { deviation: f64 },
    #[error("outcome {index} acts on dimension {dim}, expected {expected}")]
    OutcomeDimMismatch {
        index: usize,
        dim: usize,
        expected: usize,
    },
    #[error("{projectors} projectors but {unitaries} unitaries")]
    LabelMismatch { projectors: usize, unitaries: usize },
    #[error("outcome {outcome} out of range for {count} outcomes")]
    UnknownOutcome { outcome: usize, count: usize },
    #[error("operand dimension {dim} does not match instrument dimension {expected}")]
    OperandDimMismatch { dim: usize, expected: usize },
}

/// Why an instrument fails to be a conditional-action instrument.
#[derive(Debug, Error)]
pub enum NotMaxwell {
    #[error("outcome {outcome} is not pure: Gram matrix has rank {rank}")]
    NotPure { outcome: usize, rank: usize },
    #[error("outcome {outcome} is not sharp: induced effect deviates from a projector by {deviation:.3e}")]
    NotSharp { outcome: usize, deviation: f64 },
    #[error("recovered projectors do not form a valid family: {source}")]
    RecoveredFamilyInvalid {
        #[from]
        source: InvalidFamily,
    },
}

/// Completely positive trace-nonincreasing map in Kraus form.
#[derive(Debug, Clone)]
pub struct QuantumOperation {
    kraus: Vec<CMatrix>,
    dim: usize,
}

impl QuantumOperation {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self, InstrumentError> {
        if kraus.is_empty() {
            return Err(InstrumentError::EmptyOperation);
        }
        let dim = kraus[0].nrows();
        for (index, a) in kraus.iter().enumerate() {
            linalg::check_square(a)?;
            linalg::check_finite(a)?;
            if a.nrows() != dim {
                return Err(InstrumentError::KrausDimMismatch {
                    index,
                    dim: a.nrows(),
                    expected: dim,
                });
            }
        }
        let op = Self { kraus, dim };
        let eig = linalg::hermitian_eig(&op.dual_apply_matrix(&CMatrix::identity(dim, dim)))?;
        let top = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if top > 1.0 + tol::TAU_EIG {
            return Err(InstrumentError::TraceIncreasing { excess: top - 1.0 });
        }
        Ok(op)
    }

    /// Single-Kraus operation; the common case for conditional action.
    pub fn from_kraus(a: CMatrix) -> Result<Self, InstrumentError> {
        Self::new(vec![a])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Act on a state; the result is subnormalized, its trace is the outcome
    /// probability.
    pub fn apply(&self, rho: &DensityOperator) -> CMatrix {
        self.apply_matrix(rho.matrix())
    }

    /// Linear action on an arbitrary matrix.
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for a in &self.kraus {
            out += a * m * a.adjoint();
        }
        out
    }

    /// Heisenberg-dual action on an arbitrary matrix.
    pub fn dual_apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for a in &self.kraus {
            out += a.adjoint() * m * a;
        }
        out
    }

    /// Heisenberg-dual action on an effect; effects map to effects.
    pub fn dual_apply(&self, x: &Effect) -> Result<Effect, InstrumentError> {
        if x.dim() != self.dim {
            return Err(InstrumentError::OperandDimMismatch {
                dim: x.dim(),
                expected: self.dim,
            });
        }
        Ok(Effect::new(self.dual_apply_matrix(x.matrix()))?)
    }

    /// Effect this operation induces: the dual image of the identity.
    pub fn induced_effect(&self) -> CMatrix {
        self.dual_apply_matrix(&CMatrix::identity(self.dim, self.dim))
    }

    /// Probability of this outcome on a state.
    pub fn probability(&self, rho: &DensityOperator) -> f64 {
        (self.induced_effect() * rho.matrix()).trace().re
    }

    /// Gram matrix of the Kraus operators under the Frobenius inner product.
    pub fn gram(&self) -> CMatrix {
        let k = self.kraus.len();
        CMatrix::from_fn(k, k, |i, j| {
            self.kraus[i]
                .iter()
                .zip(self.kraus[j].iter())
                .map(|(a, b)| a.conj() * b)
                .sum()
        })
    }

    /// Number of linearly independent Kraus operators.
    pub fn kraus_rank(&self) -> usize {
        let gram = self.gram();
        let eig = linalg::hermitian_eig(&gram).expect("Gram matrices are Hermitian");
        let cutoff = tol::TAU_EIG * gram.norm();
        eig.eigenvalues.iter().filter(|&&l| l > cutoff).count()
    }

    /// An operation is pure when one Kraus operator carries all of it.
    pub fn is_pure(&self) -> bool {
        self.kraus_rank() <= 1
    }

    /// Collapse a pure operation to its single Kraus representative, phase
    /// fixed so the largest-magnitude entry is real positive. `None` when the
    /// operation is not pure; the zero matrix for a zero operation.
    pub fn pure_representative(&self) -> Option<CMatrix> {
        let gram = self.gram();
        let eig = linalg::hermitian_eig(&gram).expect("Gram matrices are Hermitian");
        let cutoff = tol::TAU_EIG * gram.norm();
        let rank = eig.eigenvalues.iter().filter(|&&l| l > cutoff).count();
        if rank > 1 {
            return None;
        }
        if rank == 0 {
            return Some(CMatrix::zeros(self.dim, self.dim));
        }
        let weights = eig.eigenvectors.column(0);
        let mut rep = CMatrix::zeros(self.dim, self.dim);
        for (a, w) in self.kraus.iter().zip(weights.iter()) {
            rep += a * *w;
        }
        // Gauge: rotate the dominant entry onto the positive real axis.
        let dominant = rep
            .iter()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).expect("finite entries"))
            .copied()
            .expect("nonzero representative");
        if dominant.norm() > 0.0 {
            let phase = dominant / C64::new(dominant.norm(), 0.0);
            rep *= phase.conj();
        }
        Some(rep)
    }

    /// Largest Frobenius distance of the two linear actions over the matrix
    /// unit basis; zero exactly when the operations are equal as maps.
    pub fn operation_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "operations act on different spaces");
        let mut worst = 0.0f64;
        let mut unit = CMatrix::zeros(self.dim, self.dim);
        for k in 0..self.dim {
            for l in 0..self.dim {
                unit[(k, l)] = C64::new(1.0, 0.0);
                let d = (self.apply_matrix(&unit) - other.apply_matrix(&unit)).norm();
                worst = worst.max(d);
                unit[(k, l)] = C64::new(0.0, 0.0);
            }
        }
        worst
    }
}

/// Positive operator-valued measure: effects summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    effects: Vec<Effect>,
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self, InstrumentError> {
        if effects.is_empty() {
            return Err(InstrumentError::EmptyInstrument);
        }
        let dim = effects[0].dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for (index, e) in effects.iter().enumerate() {
            if e.dim() != dim {
                return Err(InstrumentError::OutcomeDimMismatch {
                    index,
                    dim: e.dim(),
                    expected: dim,
                });
            }
            sum += e.matrix();
        }
        let deviation = (&sum - CMatrix::identity(dim, dim)).norm();
        if deviation > tol::TAU_EIG {
            return Err(InstrumentError::NotComplete { deviation });
        }
        Ok(Self { effects })
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effect(&self, n: usize) -> &Effect {
        &self.effects[n]
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    /// Outcome distribution on a state.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<FiniteDistribution, ClassicalError> {
        FiniteDistribution::new(self.effects.iter().map(|e| e.probability(rho)).collect())
    }
}

/// Outcome-indexed family of operations whose sum preserves trace.
#[derive(Debug, Clone)]
pub struct Instrument {
    ops: Vec<QuantumOperation>,
    dim: usize,
}

impl Instrument {
    pub fn new(ops: Vec<QuantumOperation>) -> Result<Self, InstrumentError> {
        if ops.is_empty() {
            return Err(InstrumentError::EmptyInstrument);
        }
        let dim = ops[0].dim();
        for (index, op) in ops.iter().enumerate() {
            if op.dim() != dim {
                return Err(InstrumentError::OutcomeDimMismatch {
                    index,
                    dim: op.dim(),
                    expected: dim,
                });
            }
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for op in &ops {
            sum += op.induced_effect();
        }
        let deviation = (&sum - CMatrix::identity(dim, dim)).norm();
        if deviation > tol::TAU_EIG {
            return Err(InstrumentError::NotComplete { deviation });
        }
        Ok(Self { ops, dim })
    }

    /// Projective readout without feedback: Kraus `P_n` on outcome `n`.
    pub fn luders(ps: &ProjectionFamily) -> Self {
        let ops = ps
            .members()
            .iter()
            .map(|p| QuantumOperation {
                kraus: vec![p.clone()],
                dim: ps.dim(),
            })
            .collect();
        Self { ops, dim: ps.dim() }
    }

    /// Conditional action: apply `U_n` when outcome `n` fires.
    pub fn maxwell(
        ps: &ProjectionFamily,
        us: &UnitaryFamily,
    ) -> Result<Self, InstrumentError> {
        if ps.len() != us.len() {
            return Err(InstrumentError::LabelMismatch {
                projectors: ps.len(),
                unitaries: us.len(),
            });
        }
        if ps.dim() != us.dim() {
            return Err(InstrumentError::OperandDimMismatch {
                dim: us.dim(),
                expected: ps.dim(),
            });
        }
        let ops = ps
            .members()
            .iter()
            .zip(us.members())
            .map(|(p, u)| QuantumOperation {
                kraus: vec![u * p],
                dim: ps.dim(),
            })
            .collect();
        Ok(Self { ops, dim: ps.dim() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.ops.len()
    }

    pub fn outcome(&self, n: usize) -> Result<&QuantumOperation, InstrumentError> {
        self.ops.get(n).ok_or(InstrumentError::UnknownOutcome {
            outcome: n,
            count: self.ops.len(),
        })
    }

    pub fn operations(&self) -> &[QuantumOperation] {
        &self.ops
    }

    /// Subnormalized post-measurement state of outcome `n`.
    pub fn apply(&self, n: usize, rho: &DensityOperator) -> Result<CMatrix, InstrumentError> {
        Ok(self.outcome(n)?.apply(rho))
    }

    /// The non-selective map: sum of all outcome operations, trace
    /// preserving.
    pub fn total_operation(&self) -> QuantumOperation {
        let kraus = self
            .ops
            .iter()
            .flat_map(|op| op.kraus().iter().cloned())
            .collect();
        QuantumOperation {
            kraus,
            dim: self.dim,
        }
    }

    /// Average post-measurement state.
    pub fn apply_total(&self, rho: &DensityOperator) -> Result<DensityOperator, InstrumentError> {
        Ok(DensityOperator::new(self.total_operation().apply(rho))?)
    }

    /// Effects `F_n` with outcome probability `tr(rho F_n)`.
    pub fn induced_povm(&self) -> Result<Povm, InstrumentError> {
        let effects = self
            .ops
            .iter()
            .map(|op| Effect::new(op.induced_effect()))
            .collect::<Result<Vec<_>, _>>()?;
        Povm::new(effects)
    }

    /// Outcome distribution on a state.
    pub fn outcome_probabilities(
        &self,
        rho: &DensityOperator,
    ) -> Result<FiniteDistribution, InstrumentError> {
        Ok(FiniteDistribution::new(
            self.ops.iter().map(|op| op.probability(rho)).collect(),
        )?)
    }

    /// Sharp means every induced effect is a projector.
    pub fn is_sharp(&self) -> bool {
        self.ops
            .iter()
            .all(|op| linalg::idempotence_error(&op.induced_effect()) <= tol::TAU_EIG)
    }

    /// Recover the projector and unitary families of a conditional-action
    /// instrument, or report why there are none.
    ///
    /// Each outcome must be pure; its Kraus representative `A` then factors as
    /// `A = U P` with `P = (A^H A)^(1/2)`. Sharpness makes `P` a projector,
    /// and completeness of the instrument makes the recovered projectors an
    /// orthogonal family. Zero outcomes recover as the zero projector with the
    /// identity unitary.
    pub fn recover_maxwell_form(&self) -> Result<(ProjectionFamily, UnitaryFamily), NotMaxwell> {
        let mut projectors = Vec::with_capacity(self.ops.len());
        let mut unitaries = Vec::with_capacity(self.ops.len());
        for (outcome, op) in self.ops.iter().enumerate() {
            let rep = match op.pure_representative() {
                Some(rep) => rep,
                None => {
                    return Err(NotMaxwell::NotPure {
                        outcome,
                        rank: op.kraus_rank(),
                    });
                }
            };
            if rep.norm() <= tol::TAU_EIG {
                projectors.push(CMatrix::zeros(self.dim, self.dim));
                unitaries.push(CMatrix::identity(self.dim, self.dim));
                continue;
            }
            let effect = rep.adjoint() * &rep;
            let deviation = linalg::idempotence_error(&effect);
            if deviation > tol::TAU_EIG {
                return Err(NotMaxwell::NotSharp { outcome, deviation });
            }
            let polar = linalg::polar_decompose(&rep).expect("representative is square and finite");
            projectors.push(polar.psd);
            unitaries.push(polar.unitary);
        }
        let ps = ProjectionFamily::new(projectors)?;
        let us = UnitaryFamily::new(unitaries)
            .expect("polar unitary factors and identities are unitary");
        Ok((ps, us))
    }

    /// Does the non-selective evolution strictly lower the entropy of this
    /// state?
    pub fn is_demonic(&self, rho: &DensityOperator) -> Result<bool, InstrumentError> {
        let out = self.apply_total(rho)?;
        Ok(vn_entropy(&out) < vn_entropy(rho) - tol::DEMONIC_MARGIN)
    }

    /// Largest outcome-wise action distance over the matrix unit basis.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(
            self.outcomes(),
            other.outcomes(),
            "instruments have different outcome counts"
        );
        self.ops
            .iter()
            .zip(other.ops.iter())
            .map(|(a, b)| a.operation_distance(b))
            .fold(0.0, f64::max)
    }
}
