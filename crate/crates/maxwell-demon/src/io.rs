//! JSON wire formats for matrices, instruments, dilations, and classical
//! scenarios.
//!
//! Internally every joint-space matrix is canonical (object index slow,
//! pointer fast). Files may declare the transposed `ancilla-outer` layout and
//! are permuted once at the boundary, never inside the numerics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classical::{ClassicalError, ConditionalMap, FiniteDistribution, Partition};
use crate::dilation::{DilationError, DilationSpec};
use crate::instruments::{Instrument, InstrumentError, QuantumOperation};
use crate::linalg::{C64, CMatrix};
use crate::states::{InvalidFamily, ProjectionFamily, StateError, UnitaryFamily};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("matrix declares dimension {dim} but row {row} has {len} entries")]
    RowLength { dim: usize, row: usize, len: usize },
    #[error("matrix declares dimension {dim} but has {rows} rows")]
    RowCount { dim: usize, rows: usize },
    #[error("real and imaginary parts have different shapes")]
    PartShapeMismatch,
    #[error("outcome labels must enumerate 0..{expected}, found label {label}")]
    BadLabel { label: usize, expected: usize },
    #[error("outcome label {label} appears more than once")]
    DuplicateLabel { label: usize },
    #[error("joint matrix of dimension {actual} does not factor as {object}x{ancilla}")]
    JointFactorMismatch {
        object: usize,
        ancilla: usize,
        actual: usize,
    },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Family(#[from] InvalidFamily),
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error(transparent)]
    Dilation(#[from] DilationError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
}

/// Index order for joint-space matrices in files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Layout {
    #[default]
    #[serde(rename = "canonical")]
    Canonical,
    #[serde(rename = "ancilla-outer")]
    AncillaOuter,
}

/// Dense complex matrix as row-major real and imaginary grids. A missing
/// imaginary grid means a real matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let grid = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..dim)
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            dim,
            re: grid(|z| z.re),
            im: Some(grid(|z| z.im)),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, IoError> {
        let dim = self.dim;
        let check = |grid: &Vec<Vec<f64>>| -> Result<(), IoError> {
            if grid.len() != dim {
                return Err(IoError::RowCount {
                    dim,
                    rows: grid.len(),
                });
            }
            for (row, entries) in grid.iter().enumerate() {
                if entries.len() != dim {
                    return Err(IoError::RowLength {
                        dim,
                        row,
                        len: entries.len(),
                    });
                }
            }
            Ok(())
        };
        check(&self.re)?;
        if let Some(im) = &self.im {
            check(im).map_err(|_| IoError::PartShapeMismatch)?;
        }
        Ok(CMatrix::from_fn(dim, dim, |i, j| {
            let re = self.re[i][j];
            let im = self.im.as_ref().map_or(0.0, |g| g[i][j]);
            C64::new(re, im)
        }))
    }
}

/// Permutation between the two joint-index orders: canonical places the pair
/// `(i, k)` at `i * ancilla + k`, ancilla-outer at `k * object + i`.
fn joint_permutation(object: usize, ancilla: usize) -> Vec<usize> {
    let mut to_outer = vec![0usize; object * ancilla];
    for i in 0..object {
        for k in 0..ancilla {
            to_outer[i * ancilla + k] = k * object + i;
        }
    }
    to_outer
}

/// Reindex a joint matrix from `src` layout into `dst` layout.
pub fn relayout_joint(
    m: &CMatrix,
    object: usize,
    ancilla: usize,
    src: Layout,
    dst: Layout,
) -> Result<CMatrix, IoError> {
    let total = object * ancilla;
    if m.nrows() != total || m.ncols() != total {
        return Err(IoError::JointFactorMismatch {
            object,
            ancilla,
            actual: m.nrows(),
        });
    }
    if src == dst {
        return Ok(m.clone());
    }
    let to_outer = joint_permutation(object, ancilla);
    let out = match (src, dst) {
        (Layout::AncillaOuter, Layout::Canonical) => {
            CMatrix::from_fn(total, total, |r, c| m[(to_outer[r], to_outer[c])])
        }
        (Layout::Canonical, Layout::AncillaOuter) => {
            let mut out = CMatrix::zeros(total, total);
            for r in 0..total {
                for c in 0..total {
                    out[(to_outer[r], to_outer[c])] = m[(r, c)];
                }
            }
            out
        }
        _ => unreachable!("equal layouts already returned"),
    };
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct OutcomeJson {
    label: usize,
    kraus: Vec<MatrixJson>,
}

/// Instrument wire format: either explicit per-outcome operator lists or a
/// projector/unitary pair meaning the conditional action they generate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum InstrumentJson {
    Conditional {
        projectors: Vec<MatrixJson>,
        unitaries: Vec<MatrixJson>,
    },
    Kraus {
        outcomes: Vec<OutcomeJson>,
    },
}

fn family_pair(
    projectors: &[MatrixJson],
    unitaries: &[MatrixJson],
) -> Result<(ProjectionFamily, UnitaryFamily), IoError> {
    let ps = ProjectionFamily::new(
        projectors
            .iter()
            .map(|m| m.to_matrix())
            .collect::<Result<_, _>>()?,
    )?;
    let us = UnitaryFamily::new(
        unitaries
            .iter()
            .map(|m| m.to_matrix())
            .collect::<Result<_, _>>()?,
    )?;
    Ok((ps, us))
}

pub fn instrument_from_json(text: &str) -> Result<Instrument, IoError> {
    let parsed: InstrumentJson = serde_json::from_str(text)?;
    match parsed {
        InstrumentJson::Conditional {
            projectors,
            unitaries,
        } => {
            let (ps, us) = family_pair(&projectors, &unitaries)?;
            Ok(Instrument::maxwell(&ps, &us)?)
        }
        InstrumentJson::Kraus { outcomes } => {
            let count = outcomes.len();
            let mut ops: Vec<Option<QuantumOperation>> = vec![None; count];
            for outcome in outcomes {
                if outcome.label >= count {
                    return Err(IoError::BadLabel {
                        label: outcome.label,
                        expected: count,
                    });
                }
                let kraus = outcome
                    .kraus
                    .iter()
                    .map(|m| m.to_matrix())
                    .collect::<Result<Vec<_>, _>>()?;
                let op = QuantumOperation::new(kraus)?;
                if ops[outcome.label].replace(op).is_some() {
                    return Err(IoError::DuplicateLabel {
                        label: outcome.label,
                    });
                }
            }
            let ops = ops
                .into_iter()
                .map(|op| op.expect("every label filled once"))
                .collect();
            Ok(Instrument::new(ops)?)
        }
    }
}

/// Emit the general per-outcome operator form.
pub fn instrument_to_json(instr: &Instrument) -> String {
    let outcomes = instr
        .operations()
        .iter()
        .enumerate()
        .map(|(label, op)| OutcomeJson {
            label,
            kraus: op.kraus().iter().map(MatrixJson::from_matrix).collect(),
        })
        .collect();
    serde_json::to_string_pretty(&InstrumentJson::Kraus { outcomes }).expect("plain data")
}

/// Emit the projector/unitary form for a conditional action.
pub fn maxwell_to_json(ps: &ProjectionFamily, us: &UnitaryFamily) -> String {
    let form = InstrumentJson::Conditional {
        projectors: ps.members().iter().map(MatrixJson::from_matrix).collect(),
        unitaries: us.members().iter().map(MatrixJson::from_matrix).collect(),
    };
    serde_json::to_string_pretty(&form).expect("plain data")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DilationJson {
    object_dim: usize,
    ancilla_dim: usize,
    phi_index: usize,
    v: MatrixJson,
    q: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<Layout>,
}

pub fn dilation_from_json(text: &str) -> Result<DilationSpec, IoError> {
    let parsed: DilationJson = serde_json::from_str(text)?;
    let layout = parsed.layout.unwrap_or_default();
    let v_raw = parsed.v.to_matrix()?;
    let v = relayout_joint(
        &v_raw,
        parsed.object_dim,
        parsed.ancilla_dim,
        layout,
        Layout::Canonical,
    )?;
    let q = ProjectionFamily::new(
        parsed
            .q
            .iter()
            .map(|m| m.to_matrix())
            .collect::<Result<_, _>>()?,
    )?;
    Ok(DilationSpec::new(
        parsed.object_dim,
        parsed.ancilla_dim,
        parsed.phi_index,
        v,
        q,
    )?)
}

pub fn dilation_to_json(spec: &DilationSpec, layout: Layout) -> Result<String, IoError> {
    let v = relayout_joint(
        spec.joint_unitary(),
        spec.object_dim(),
        spec.ancilla_dim(),
        Layout::Canonical,
        layout,
    )?;
    let doc = DilationJson {
        object_dim: spec.object_dim(),
        ancilla_dim: spec.ancilla_dim(),
        phi_index: spec.phi_index(),
        v: MatrixJson::from_matrix(&v),
        q: spec
            .readout()
            .members()
            .iter()
            .map(MatrixJson::from_matrix)
            .collect(),
        layout: Some(layout),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Classical scenario: a distribution over events, a partition into blocks,
/// a block-injective event map, and the label the record starts from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassicalConfig {
    pub p: Vec<f64>,
    pub blocks: Vec<Vec<usize>>,
    pub phi: Vec<usize>,
    pub j0: usize,
}

impl ClassicalConfig {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_parts(&self) -> Result<(FiniteDistribution, ConditionalMap, usize), IoError> {
        let p = FiniteDistribution::new(self.p.clone())?;
        let partition = Partition::new(self.p.len(), self.blocks.clone())?;
        let map = ConditionalMap::new(self.phi.clone(), partition)?;
        Ok((p, map, self.j0))
    }
}
