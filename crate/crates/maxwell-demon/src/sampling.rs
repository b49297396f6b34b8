//! Seeded random generators for states, unitaries and measurement families.
//!
//! All sampling is deterministic in the supplied generator. Batch work
//! derives one child seed per item with [`derive_seed`] and builds a fresh
//! generator from it, which keeps results independent of evaluation order and
//! thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::instruments::Instrument;
use crate::linalg::{C64, CMatrix};
use crate::states::{DensityOperator, ProjectionFamily, UnitaryFamily};

/// Deterministic generator from a bare seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stateless mix of a base seed with an item index (splitmix64 finalizer),
/// so batch items get decorrelated, order-independent streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Matrix with independent standard complex Gaussian entries.
pub fn ginibre(dim: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of the
/// triangular diagonal absorbed, which removes the QR gauge freedom.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = ginibre(dim, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / C64::new(d.norm(), 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Full-rank random state from the Hilbert-Schmidt ensemble.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = ginibre(dim, rng);
    let positive = &g * g.adjoint();
    let trace = positive.trace().re;
    DensityOperator::new(positive.scale(1.0 / trace))
        .expect("normalized Gram matrices are valid states")
}

/// Composition of `dim` into `outcomes` positive parts, uniform over single
/// increments.
pub fn random_rank_split(dim: usize, outcomes: usize, rng: &mut impl Rng) -> Vec<usize> {
    assert!(
        outcomes >= 1 && outcomes <= dim,
        "need 1 <= outcomes <= dim for positive ranks"
    );
    let mut ranks = vec![1usize; outcomes];
    for _ in 0..dim - outcomes {
        ranks[rng.random_range(0..outcomes)] += 1;
    }
    ranks
}

/// Orthogonal projector family from a Haar-random basis and a random rank
/// split.
pub fn random_projection_family(
    dim: usize,
    outcomes: usize,
    rng: &mut impl Rng,
) -> ProjectionFamily {
    let basis = haar_unitary(dim, rng);
    let ranks = random_rank_split(dim, outcomes, rng);
    let mut members = Vec::with_capacity(outcomes);
    let mut offset = 0;
    for rank in ranks {
        let block = basis.columns(offset, rank);
        members.push(&block * block.adjoint());
        offset += rank;
    }
    ProjectionFamily::new(members).expect("orthonormal blocks form a valid family")
}

/// Independent Haar unitaries, one per outcome.
pub fn random_unitary_family(dim: usize, outcomes: usize, rng: &mut impl Rng) -> UnitaryFamily {
    UnitaryFamily::new((0..outcomes).map(|_| haar_unitary(dim, rng)).collect())
        .expect("Haar samples are unitary")
}

/// Random conditional-action instrument with its generating families.
pub fn random_maxwell_instrument(
    dim: usize,
    outcomes: usize,
    rng: &mut impl Rng,
) -> (ProjectionFamily, UnitaryFamily, Instrument) {
    let ps = random_projection_family(dim, outcomes, rng);
    let us = random_unitary_family(dim, outcomes, rng);
    let instr = Instrument::maxwell(&ps, &us).expect("families share labels and dimension");
    (ps, us, instr)
}
