//! Unitary-plus-readout realizations of measurement instruments.
//!
//! A dilation couples the object to a prepared pointer system, evolves the
//! pair with one joint unitary, and reads the pointer with a projective
//! family. Conditioning on a readout value and discarding the pointer must
//! reproduce the instrument outcome for outcome. This module builds such
//! realizations, checks claimed ones against an instrument, and tracks the
//! entropy ledger of a full cycle.
//!
//! Joint indices are canonical throughout: object index slow, pointer index
//! fast, so the pair `(i, k)` sits at flat position `i * ancilla_dim + k`.

use serde::Serialize;
use thiserror::Error;

use crate::exec;
use crate::instruments::{Instrument, InstrumentError};
use crate::linalg::{
    self, C64, CMatrix, CVector, LinalgError, TensorShape, frobenius_distance, tensor,
};
use crate::sampling::{derive_seed, random_density, random_unitary_family, rng_from};
use crate::states::{
    DensityOperator, ProjectionFamily, StateError, UnitaryFamily, vn_entropy,
};
use crate::tol;

#[derive(Debug, Error)]
pub enum DilationError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error("joint unitary is {actual}x{actual}, expected {object}x{ancilla} product {expected}")]
    JointDimMismatch {
        object: usize,
        ancilla: usize,
        expected: usize,
        actual: usize,
    },
    #[error("prepared pointer index {phi} out of range for pointer dimension {ancilla}")]
    PhiOutOfRange { phi: usize, ancilla: usize },
    #[error("joint evolution is not unitary: deviation {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("readout family acts on dimension {family}, pointer has dimension {ancilla}")]
    ReadoutDimMismatch { family: usize, ancilla: usize },
    #[error("dilation acts on object dimension {spec}, instrument on {instrument}")]
    ObjectDimMismatch { spec: usize, instrument: usize },
    #[error("dilation has {spec} readout values, instrument {instrument} outcomes")]
    OutcomeMismatch { spec: usize, instrument: usize },
    #[error("projector family has {projectors} members, unitary family {unitaries}")]
    FamilyLenMismatch { projectors: usize, unitaries: usize },
    #[error("families act on different dimensions: {projectors} vs {unitaries}")]
    FamilyDimMismatch { projectors: usize, unitaries: usize },
    #[error("exhaustive search supports dimension at most {limit}, got {dim}")]
    DimensionTooLarge { dim: usize, limit: usize },
    #[error("need at least one trial or sample")]
    EmptyBatch,
}

/// A joint unitary with a prepared pointer state and a pointer readout.
#[derive(Debug, Clone)]
pub struct DilationSpec {
    object_dim: usize,
    ancilla_dim: usize,
    phi_index: usize,
    v: CMatrix,
    q: ProjectionFamily,
}

impl DilationSpec {
    pub fn new(
        object_dim: usize,
        ancilla_dim: usize,
        phi_index: usize,
        v: CMatrix,
        q: ProjectionFamily,
    ) -> Result<Self, DilationError> {
        let expected = object_dim * ancilla_dim;
        if v.nrows() != expected || v.ncols() != expected {
            return Err(DilationError::JointDimMismatch {
                object: object_dim,
                ancilla: ancilla_dim,
                expected,
                actual: v.nrows().max(v.ncols()),
            });
        }
        if phi_index >= ancilla_dim {
            return Err(DilationError::PhiOutOfRange {
                phi: phi_index,
                ancilla: ancilla_dim,
            });
        }
        let deviation = linalg::unitarity_error(&v);
        if deviation > tol::TAU_EIG {
            return Err(DilationError::NotUnitary { deviation });
        }
        if q.dim() != ancilla_dim {
            return Err(DilationError::ReadoutDimMismatch {
                family: q.dim(),
                ancilla: ancilla_dim,
            });
        }
        Ok(Self {
            object_dim,
            ancilla_dim,
            phi_index,
            v,
            q,
        })
    }

    pub fn object_dim(&self) -> usize {
        self.object_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn phi_index(&self) -> usize {
        self.phi_index
    }

    pub fn outcomes(&self) -> usize {
        self.q.len()
    }

    pub fn joint_unitary(&self) -> &CMatrix {
        &self.v
    }

    pub fn readout(&self) -> &ProjectionFamily {
        &self.q
    }

    fn shape(&self) -> TensorShape {
        TensorShape::two(self.object_dim, self.ancilla_dim)
    }

    /// Prepared pointer state `|phi><phi|`.
    pub fn prepared_ancilla(&self) -> CMatrix {
        let mut p = CMatrix::zeros(self.ancilla_dim, self.ancilla_dim);
        p[(self.phi_index, self.phi_index)] = C64::new(1.0, 0.0);
        p
    }

    /// Joint state after the interaction, before any readout. Only the
    /// prepared-pointer slice of the joint unitary ever touches the input, so
    /// the product runs through the isometry.
    pub fn evolved_joint(&self, rho: &DensityOperator) -> CMatrix {
        let w = self.isometry();
        &w * rho.matrix() * w.adjoint()
    }

    fn readout_projector(&self, n: usize) -> CMatrix {
        tensor(
            &CMatrix::identity(self.object_dim, self.object_dim),
            self.q.member(n),
        )
    }

    /// Joint state conditioned on readout value `n`, weighted by its
    /// probability.
    pub fn selected_joint(&self, rho: &DensityOperator, n: usize) -> CMatrix {
        let proj = self.readout_projector(n);
        &proj * self.evolved_joint(rho) * proj
    }

    /// Joint state after readout with the value forgotten: the sum of the
    /// selected states. Diagonal readout families take an entrywise-mask
    /// shortcut; anything else goes through the projector products.
    pub fn measured_joint(&self, rho: &DensityOperator) -> CMatrix {
        let evolved = self.evolved_joint(rho);
        let dk = self.ancilla_dim;
        let zero = C64::new(0.0, 0.0);
        let diagonal = self.q.members().iter().all(|q| {
            (0..dk).all(|l| (0..dk).all(|m| l == m || q[(l, m)] == zero))
        });
        if diagonal {
            let mut mask = vec![0.0f64; dk * dk];
            for q in self.q.members() {
                for l in 0..dk {
                    for m in 0..dk {
                        mask[l * dk + m] += q[(l, l)].re * q[(m, m)].re;
                    }
                }
            }
            let dh = self.object_dim;
            return CMatrix::from_fn(dh * dk, dh * dk, |r, c| {
                evolved[(r, c)] * C64::new(mask[(r % dk) * dk + c % dk], 0.0)
            });
        }
        let mut total = CMatrix::zeros(evolved.nrows(), evolved.ncols());
        for n in 0..self.q.len() {
            let proj = self.readout_projector(n);
            total += &proj * &evolved * proj.adjoint();
        }
        total
    }

    /// Unnormalized object state for readout value `n`: select, then discard
    /// the pointer.
    pub fn apply(&self, rho: &DensityOperator, n: usize) -> Result<CMatrix, DilationError> {
        let evolved = self.evolved_joint(rho);
        Ok(self.contract_outcome(&evolved, n))
    }

    /// Tr_K[(1 ⊗ Q_n) M (1 ⊗ Q_n)] collapsed to one index contraction:
    /// idempotence turns the two projections plus trace into a single weight
    /// Q_n[b, a] on the pointer block of M.
    fn contract_outcome(&self, evolved: &CMatrix, n: usize) -> CMatrix {
        let dh = self.object_dim;
        let dk = self.ancilla_dim;
        let qn = self.q.member(n);
        let zero = C64::new(0.0, 0.0);
        CMatrix::from_fn(dh, dh, |i, j| {
            let mut acc = zero;
            for a in 0..dk {
                for b in 0..dk {
                    let w = qn[(b, a)];
                    if w != zero {
                        acc += evolved[(i * dk + a, j * dk + b)] * w;
                    }
                }
            }
            acc
        })
    }

    /// All conditioned object outputs from one joint evolution.
    pub fn conditioned_outputs(&self, rho: &DensityOperator) -> Vec<CMatrix> {
        let evolved = self.evolved_joint(rho);
        (0..self.q.len())
            .map(|n| self.contract_outcome(&evolved, n))
            .collect()
    }

    /// Restriction of the joint unitary to the prepared-pointer slice: the
    /// `object_dim` columns sending `x` to `V(x ⊗ e_phi)`. Always an isometry
    /// when `v` is unitary.
    pub fn isometry(&self) -> CMatrix {
        let total = self.object_dim * self.ancilla_dim;
        let mut w = CMatrix::zeros(total, self.object_dim);
        for i in 0..self.object_dim {
            let col = self.v.column(i * self.ancilla_dim + self.phi_index);
            w.set_column(i, &col);
        }
        w
    }
}

/// Canonical realization of a conditional-action instrument: pointer
/// dimension equals the outcome count, the pointer starts at index 0, and the
/// joint unitary sends `b ⊗ e_0` to `(U_n b) ⊗ e_n` for every range vector
/// `b` of the n-th projector.
pub fn build_standard_dilation(
    ps: &ProjectionFamily,
    us: &UnitaryFamily,
) -> Result<DilationSpec, DilationError> {
    if ps.len() != us.len() {
        return Err(DilationError::FamilyLenMismatch {
            projectors: ps.len(),
            unitaries: us.len(),
        });
    }
    if ps.dim() != us.dim() {
        return Err(DilationError::FamilyDimMismatch {
            projectors: ps.dim(),
            unitaries: us.dim(),
        });
    }
    let dh = ps.dim();
    let dk = ps.len();
    let total = dh * dk;
    let embed = |object: &CVector, k: usize| -> CVector {
        let mut joint = CVector::zeros(total);
        for i in 0..dh {
            joint[i * dk + k] = object[i];
        }
        joint
    };
    let mut domain: Vec<CVector> = Vec::with_capacity(total);
    let mut image: Vec<CVector> = Vec::with_capacity(total);
    for n in 0..dk {
        let basis = ps.range_basis(n);
        let moved = us.member(n) * &basis;
        for j in 0..basis.ncols() {
            domain.push(embed(&CVector::from_column_slice(basis.column(j).as_slice()), 0));
            image.push(embed(&CVector::from_column_slice(moved.column(j).as_slice()), n));
        }
    }
    // The prepared slice is exhausted; the remaining domain directions have
    // pointer index away from the start and may go anywhere orthogonal.
    for i in 0..dh {
        for k in 1..dk {
            let mut e = CVector::zeros(total);
            e[i * dk + k] = C64::new(1.0, 0.0);
            domain.push(e);
        }
    }
    let completion = linalg::complete_orthonormal(&image, total);
    image.extend(completion);
    let mut d = CMatrix::zeros(total, total);
    let mut r = CMatrix::zeros(total, total);
    for (j, col) in domain.iter().enumerate() {
        d.set_column(j, col);
    }
    for (j, col) in image.iter().enumerate() {
        r.set_column(j, col);
    }
    let v = r * d.adjoint();
    DilationSpec::new(dh, dk, 0, v, ProjectionFamily::standard_basis(dk))
}

/// Outcome of checking a claimed dilation against an instrument on a batch of
/// seeded random states.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DilationReport {
    pub trials: usize,
    pub threshold: f64,
    pub max_residual: f64,
    pub worst_trial: usize,
    pub worst_outcome: usize,
    pub pass: bool,
}

/// Compare the dilation's conditioned-and-discarded action with the
/// instrument's outcome operations on `trials` seeded random full-rank
/// states.
pub fn verify_dilation(
    spec: &DilationSpec,
    instr: &Instrument,
    trials: usize,
    seed: u64,
) -> Result<DilationReport, DilationError> {
    if spec.object_dim() != instr.dim() {
        return Err(DilationError::ObjectDimMismatch {
            spec: spec.object_dim(),
            instrument: instr.dim(),
        });
    }
    if spec.outcomes() != instr.outcomes() {
        return Err(DilationError::OutcomeMismatch {
            spec: spec.outcomes(),
            instrument: instr.outcomes(),
        });
    }
    if trials == 0 {
        return Err(DilationError::EmptyBatch);
    }
    let worst_per_trial = exec::map_indexed(trials, |t| {
        let mut rng = rng_from(derive_seed(seed, t as u64));
        let rho = random_density(spec.object_dim(), &mut rng);
        let outputs = spec.conditioned_outputs(&rho);
        let mut worst = (0.0f64, 0usize);
        for (n, via_dilation) in outputs.iter().enumerate() {
            let direct = instr.apply(n, &rho).expect("validated outcome index");
            let residual = frobenius_distance(via_dilation, &direct);
            if residual > worst.0 {
                worst = (residual, n);
            }
        }
        worst
    });
    let mut max_residual = 0.0f64;
    let mut worst_trial = 0usize;
    let mut worst_outcome = 0usize;
    for (t, &(residual, outcome)) in worst_per_trial.iter().enumerate() {
        if residual > max_residual {
            max_residual = residual;
            worst_trial = t;
            worst_outcome = outcome;
        }
    }
    Ok(DilationReport {
        trials,
        threshold: tol::TAU_EIG,
        max_residual,
        worst_trial,
        worst_outcome,
        pass: max_residual <= tol::TAU_EIG,
    })
}

/// Entropy ledger of one measurement cycle in nats.
///
/// `s0` is the input entropy; `s_tilde1` the object entropy after readout
/// while the value is still known; `s12`, `s1`, `s2` the joint, object, and
/// pointer entropies after the value is forgotten. `demon_state_residual`
/// measures how far the pointer state is from the probability mixture of the
/// readout projectors, and `s2_shannon_residual` how far its entropy is from
/// the Shannon entropy of the outcome distribution — both vanish for the
/// standard realization.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntropyBalance {
    pub s0: f64,
    pub s_tilde1: f64,
    pub s12: f64,
    pub s1: f64,
    pub s2: f64,
    pub outcome_probs: Vec<f64>,
    pub demon_state_residual: f64,
    pub s2_shannon_residual: f64,
}

pub fn entropy_balance(
    spec: &DilationSpec,
    instr: &Instrument,
    rho: &DensityOperator,
) -> Result<EntropyBalance, DilationError> {
    if spec.object_dim() != instr.dim() {
        return Err(DilationError::ObjectDimMismatch {
            spec: spec.object_dim(),
            instrument: instr.dim(),
        });
    }
    if spec.outcomes() != instr.outcomes() {
        return Err(DilationError::OutcomeMismatch {
            spec: spec.outcomes(),
            instrument: instr.outcomes(),
        });
    }
    let s0 = vn_entropy(rho);

    // Readout known: average of the raw selected states, which keeps the
    // record-weighted coherences and lower-bounds none of the later stages.
    let povm = instr.induced_povm()?;
    let mut readout_avg = CMatrix::zeros(instr.dim(), instr.dim());
    for effect in povm.effects() {
        let root = linalg::sqrt_psd(effect.matrix())?;
        readout_avg += &root * rho.matrix() * root;
    }
    let s_tilde1 = vn_entropy(&DensityOperator::new(readout_avg)?);

    let joint = spec.measured_joint(rho);
    let shape = spec.shape();
    let rho1 = linalg::partial_trace(&joint, &shape, 0)?;
    let rho2 = linalg::partial_trace(&joint, &shape, 1)?;
    let s12 = vn_entropy(&DensityOperator::new(joint)?);
    let s1 = vn_entropy(&DensityOperator::new(rho1)?);
    let rho2_state = DensityOperator::new(rho2.clone())?;
    let s2 = vn_entropy(&rho2_state);

    let probs = instr.outcome_probabilities(rho)?;
    let outcome_probs = probs.probabilities().to_vec();
    let mut mixture = CMatrix::zeros(spec.ancilla_dim(), spec.ancilla_dim());
    for (n, &p) in outcome_probs.iter().enumerate() {
        mixture += spec.readout().member(n) * C64::new(p, 0.0);
    }
    let demon_state_residual = frobenius_distance(&rho2, &mixture);
    let s2_shannon_residual = (s2 - probs.entropy()).abs();

    Ok(EntropyBalance {
        s0,
        s_tilde1,
        s12,
        s1,
        s2,
        outcome_probs,
        demon_state_residual,
        s2_shannon_residual,
    })
}

/// Spectrum obtained by compressing the state to each projector's range,
/// sorting each block's eigenvalues in descending order, and summing across
/// blocks position by position. Padded with zeros to the full dimension.
pub fn merged_spectrum(
    rho: &DensityOperator,
    ps: &ProjectionFamily,
) -> Result<Vec<f64>, DilationError> {
    if rho.dim() != ps.dim() {
        return Err(DilationError::ObjectDimMismatch {
            spec: ps.dim(),
            instrument: rho.dim(),
        });
    }
    let mut merged = vec![0.0f64; ps.dim()];
    for n in 0..ps.len() {
        let basis = ps.range_basis(n);
        if basis.ncols() == 0 {
            continue;
        }
        let compressed = basis.adjoint() * rho.matrix() * &basis;
        let eig = linalg::hermitian_eig(&compressed)?;
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            merged[i] += l.max(0.0);
        }
    }
    Ok(merged)
}

/// Entropy of the merged spectrum: the conjectured minimum over all
/// conditional actions that share the projector family.
pub fn conjectured_min_entropy(
    rho: &DensityOperator,
    ps: &ProjectionFamily,
) -> Result<f64, DilationError> {
    let merged = merged_spectrum(rho, ps)?;
    Ok(merged
        .iter()
        .filter(|&&l| l > tol::EPS_ENTROPY)
        .map(|&l| -l * l.ln())
        .sum())
}

/// Conditional actions that align every block with one shared target basis:
/// the descending eigenvectors of each compressed block map onto the columns
/// of `target`, so all blocks stack their weight on the same directions.
pub fn optimal_unitaries(
    rho: &DensityOperator,
    ps: &ProjectionFamily,
    target: &CMatrix,
) -> Result<UnitaryFamily, DilationError> {
    if rho.dim() != ps.dim() {
        return Err(DilationError::ObjectDimMismatch {
            spec: ps.dim(),
            instrument: rho.dim(),
        });
    }
    let dim = ps.dim();
    if target.nrows() != dim || target.ncols() != dim {
        return Err(DilationError::ObjectDimMismatch {
            spec: dim,
            instrument: target.nrows(),
        });
    }
    let deviation = linalg::unitarity_error(target);
    if deviation > tol::TAU_EIG {
        return Err(DilationError::NotUnitary { deviation });
    }
    let mut members = Vec::with_capacity(ps.len());
    for n in 0..ps.len() {
        let basis = ps.range_basis(n);
        if basis.ncols() == 0 {
            members.push(CMatrix::identity(dim, dim));
            continue;
        }
        let compressed = basis.adjoint() * rho.matrix() * &basis;
        let eig = linalg::hermitian_eig(&compressed)?;
        let ordered = &basis * &eig.eigenvectors;
        let mut cols: Vec<CVector> = (0..ordered.ncols())
            .map(|j| CVector::from_column_slice(ordered.column(j).as_slice()))
            .collect();
        let kernel = linalg::complete_orthonormal(&cols, dim);
        cols.extend(kernel);
        let mut source = CMatrix::zeros(dim, dim);
        for (j, col) in cols.iter().enumerate() {
            source.set_column(j, col);
        }
        members.push(target * source.adjoint());
    }
    Ok(UnitaryFamily::new(members)?)
}

/// Result of a seeded random search over conditional actions for a fixed
/// projector family.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub samples: usize,
    pub sampled_min: f64,
    pub sampled_argmin: usize,
    pub best_family: UnitaryFamily,
    pub candidate_entropy: f64,
}

/// Sample `samples` independent unitary families, track the lowest
/// post-forgetting object entropy, and report it next to the merged-spectrum
/// candidate. Small dimensions only; the search is a statistical oracle, not
/// an optimizer.
pub fn brute_force_min_entropy(
    rho: &DensityOperator,
    ps: &ProjectionFamily,
    samples: usize,
    seed: u64,
) -> Result<BruteForceResult, DilationError> {
    const DIM_LIMIT: usize = 8;
    if rho.dim() != ps.dim() {
        return Err(DilationError::ObjectDimMismatch {
            spec: ps.dim(),
            instrument: rho.dim(),
        });
    }
    if rho.dim() > DIM_LIMIT {
        return Err(DilationError::DimensionTooLarge {
            dim: rho.dim(),
            limit: DIM_LIMIT,
        });
    }
    if samples == 0 {
        return Err(DilationError::EmptyBatch);
    }
    let dim = rho.dim();
    let blocks: Vec<CMatrix> = (0..ps.len())
        .map(|n| ps.member(n) * rho.matrix() * ps.member(n))
        .collect();
    let entropies = exec::map_indexed(samples, |idx| {
        let mut rng = rng_from(derive_seed(seed, idx as u64));
        let us = random_unitary_family(dim, blocks.len(), &mut rng);
        let mut mixed = CMatrix::zeros(dim, dim);
        for (u, block) in us.members().iter().zip(&blocks) {
            mixed += u * block * u.adjoint();
        }
        let state = DensityOperator::new(mixed).expect("conditioned mixture is a state");
        vn_entropy(&state)
    });
    let mut sampled_min = f64::INFINITY;
    let mut sampled_argmin = 0usize;
    for (idx, &s) in entropies.iter().enumerate() {
        if s < sampled_min {
            sampled_min = s;
            sampled_argmin = idx;
        }
    }
    let mut rng = rng_from(derive_seed(seed, sampled_argmin as u64));
    let best_family = random_unitary_family(dim, ps.len(), &mut rng);
    let candidate_entropy = conjectured_min_entropy(rho, ps)?;
    Ok(BruteForceResult {
        samples,
        sampled_min,
        sampled_argmin,
        best_family,
        candidate_entropy,
    })
}
