//! Classical counterpart of conditional action: probability vectors on a
//! finite event set, partitions into measurement outcomes, maps that act
//! injectively on each outcome block, and the bijective dilation that realizes
//! such a map on an enlarged event set carrying a memory label.
//!
//! A map `phi` that is injective on every block of a partition can lower the
//! Shannon entropy of a distribution by merging probability mass across
//! blocks. The dilation extends `phi` to a bijection on `I x J` (event set
//! times memory labels); bijections preserve entropy, so the joint entropy is
//! conserved and the drop on the event marginal is compensated by the memory
//! marginal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tol;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("probability {value:.3e} at index {index} is negative")]
    NegativeEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum:.15} which is not 1 within {tolerance:.1e}")]
    BadSum { sum: f64, tolerance: f64 },
    #[error("distribution must not be empty")]
    EmptyDistribution,
    #[error("expected size {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("element {element} appears in blocks {first} and {second}")]
    PartitionOverlap {
        element: usize,
        first: usize,
        second: usize,
    },
    #[error("element {element} is not covered by any block")]
    PartitionGap { element: usize },
    #[error("element {element} exceeds partition size {size}")]
    PartitionOutOfRange { element: usize, size: usize },
    #[error("map target {target} at index {index} exceeds event count {size}")]
    TargetOutOfRange {
        index: usize,
        target: usize,
        size: usize,
    },
    #[error("block {block}: elements {first} and {second} share the image {image}")]
    BlockCollision {
        block: usize,
        first: usize,
        second: usize,
        image: usize,
    },
    #[error("memory label {label} exceeds label count {labels}")]
    LabelOutOfRange { label: usize, labels: usize },
}

/// Probability vector on a finite event set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionJson", into = "DistributionJson")]
pub struct FiniteDistribution {
    p: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    p: Vec<f64>,
}

impl TryFrom<DistributionJson> for FiniteDistribution {
    type Error = ClassicalError;
    fn try_from(raw: DistributionJson) -> Result<Self, Self::Error> {
        FiniteDistribution::new(raw.p)
    }
}

impl From<FiniteDistribution> for DistributionJson {
    fn from(d: FiniteDistribution) -> Self {
        DistributionJson { p: d.p }
    }
}

impl FiniteDistribution {
    /// Validate entries as probabilities. Entries within round-off below zero
    /// are clamped; anything worse is rejected.
    pub fn new(p: Vec<f64>) -> Result<Self, ClassicalError> {
        if p.is_empty() {
            return Err(ClassicalError::EmptyDistribution);
        }
        let mut clean = p;
        for (index, value) in clean.iter_mut().enumerate() {
            if !value.is_finite() || *value < -tol::PROB_TOL {
                return Err(ClassicalError::NegativeEntry {
                    index,
                    value: *value,
                });
            }
            if *value < 0.0 {
                *value = 0.0;
            }
        }
        let sum: f64 = clean.iter().sum();
        if (sum - 1.0).abs() > tol::PROB_TOL {
            return Err(ClassicalError::BadSum {
                sum,
                tolerance: tol::PROB_TOL,
            });
        }
        Ok(Self { p: clean })
    }

    /// Uniform distribution on `n` events.
    pub fn uniform(n: usize) -> Self {
        Self {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// Shannon entropy in nats; masses below the entropy cutoff contribute
    /// nothing.
    pub fn entropy(&self) -> f64 {
        -self
            .p
            .iter()
            .filter(|&&x| x > tol::EPS_ENTROPY)
            .map(|&x| x * x.ln())
            .sum::<f64>()
    }
}

/// Partition of `{0, .., size-1}` into labeled blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    size: usize,
}

impl Partition {
    /// Blocks must be disjoint and cover the set; empty blocks are legal and
    /// reported through [`Partition::has_empty_blocks`].
    pub fn new(size: usize, blocks: Vec<Vec<usize>>) -> Result<Self, ClassicalError> {
        let mut block_of = vec![usize::MAX; size];
        for (b, block) in blocks.iter().enumerate() {
            for &element in block {
                if element >= size {
                    return Err(ClassicalError::PartitionOutOfRange { element, size });
                }
                if block_of[element] != usize::MAX {
                    return Err(ClassicalError::PartitionOverlap {
                        element,
                        first: block_of[element],
                        second: b,
                    });
                }
                block_of[element] = b;
            }
        }
        if let Some(element) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(ClassicalError::PartitionGap { element });
        }
        Ok(Self {
            blocks,
            block_of,
            size,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Label of the block containing `element`.
    pub fn block_of(&self, element: usize) -> usize {
        self.block_of[element]
    }

    pub fn has_empty_blocks(&self) -> bool {
        self.blocks.iter().any(|b| b.is_empty())
    }

    /// Mass each block carries under `p`.
    pub fn block_masses(&self, p: &FiniteDistribution) -> Result<Vec<f64>, ClassicalError> {
        if p.len() != self.size {
            return Err(ClassicalError::SizeMismatch {
                expected: self.size,
                got: p.len(),
            });
        }
        Ok(self
            .blocks
            .iter()
            .map(|block| block.iter().map(|&i| p.probabilities()[i]).sum())
            .collect())
    }
}

/// Map on the event set that is injective on every partition block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalMap {
    phi: Vec<usize>,
    partition: Partition,
}

impl ConditionalMap {
    pub fn new(phi: Vec<usize>, partition: Partition) -> Result<Self, ClassicalError> {
        let size = partition.size();
        if phi.len() != size {
            return Err(ClassicalError::SizeMismatch {
                expected: size,
                got: phi.len(),
            });
        }
        for (index, &target) in phi.iter().enumerate() {
            if target >= size {
                return Err(ClassicalError::TargetOutOfRange {
                    index,
                    target,
                    size,
                });
            }
        }
        for (b, block) in partition.blocks().iter().enumerate() {
            for (u, &first) in block.iter().enumerate() {
                for &second in block.iter().skip(u + 1) {
                    if phi[first] == phi[second] {
                        return Err(ClassicalError::BlockCollision {
                            block: b,
                            first,
                            second,
                            image: phi[first],
                        });
                    }
                }
            }
        }
        Ok(Self { phi, partition })
    }

    pub fn size(&self) -> usize {
        self.partition.size()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn map(&self) -> &[usize] {
        &self.phi
    }

    /// Image distribution: mass of every event is moved to its target.
    pub fn pushforward(
        &self,
        p: &FiniteDistribution,
    ) -> Result<FiniteDistribution, ClassicalError> {
        if p.len() != self.size() {
            return Err(ClassicalError::SizeMismatch {
                expected: self.size(),
                got: p.len(),
            });
        }
        let mut q = vec![0.0; self.size()];
        for (i, &target) in self.phi.iter().enumerate() {
            q[target] += p.probabilities()[i];
        }
        FiniteDistribution::new(q)
    }
}

/// Bijective extension of a conditional map to the event set times a memory
/// label set, together with the joint image distribution.
#[derive(Debug, Clone)]
pub struct ClassicalDilation {
    events: usize,
    labels: usize,
    start_label: usize,
    /// Bijection on flattened pairs `event * labels + label`.
    map: Vec<usize>,
    joint: FiniteDistribution,
}

/// Extend a conditional map to a bijection on `I x J` and push the input
/// through it. `J` indexes the partition blocks; the input enters with memory
/// fixed at `start_label`, and a mapped event records the block it came from.
/// Pairs outside the prescribed action are matched to unused image pairs in
/// ascending flat order, the unique gap-free completion.
pub fn build_classical_dilation(
    p: &FiniteDistribution,
    cm: &ConditionalMap,
    start_label: usize,
) -> Result<ClassicalDilation, ClassicalError> {
    let events = cm.size();
    if p.len() != events {
        return Err(ClassicalError::SizeMismatch {
            expected: events,
            got: p.len(),
        });
    }
    let labels = cm.partition().block_count();
    if start_label >= labels {
        return Err(ClassicalError::LabelOutOfRange {
            label: start_label,
            labels,
        });
    }
    let total = events * labels;
    let flat = |event: usize, label: usize| event * labels + label;

    let mut map = vec![usize::MAX; total];
    let mut used = vec![false; total];
    for event in 0..events {
        let image = flat(cm.map()[event], cm.partition().block_of(event));
        map[flat(event, start_label)] = image;
        used[image] = true;
    }
    // Pair leftover domain pairs with leftover image pairs in ascending order.
    let mut free_images = (0..total).filter(|&idx| !used[idx]);
    for slot in map.iter_mut() {
        if *slot == usize::MAX {
            *slot = free_images
                .next()
                .expect("domain and image leftovers are equinumerous");
        }
    }
    debug_assert!(free_images.next().is_none());

    let mut joint = vec![0.0; total];
    for event in 0..events {
        joint[map[flat(event, start_label)]] += p.probabilities()[event];
    }
    let joint = FiniteDistribution::new(joint)?;
    Ok(ClassicalDilation {
        events,
        labels,
        start_label,
        map,
        joint,
    })
}

impl ClassicalDilation {
    pub fn events(&self) -> usize {
        self.events
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn start_label(&self) -> usize {
        self.start_label
    }

    /// The bijection on flattened pairs.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// Image of a pair under the bijection.
    pub fn apply(&self, event: usize, label: usize) -> (usize, usize) {
        let image = self.map[event * self.labels + label];
        (image / self.labels, image % self.labels)
    }

    /// Joint image distribution on `I x J`.
    pub fn joint(&self) -> &FiniteDistribution {
        &self.joint
    }

    /// Event and memory marginals of the joint image distribution.
    pub fn marginals(&self) -> (FiniteDistribution, FiniteDistribution) {
        let mut event_marginal = vec![0.0; self.events];
        let mut label_marginal = vec![0.0; self.labels];
        for event in 0..self.events {
            for label in 0..self.labels {
                let mass = self.joint.probabilities()[event * self.labels + label];
                event_marginal[event] += mass;
                label_marginal[label] += mass;
            }
        }
        (
            FiniteDistribution::new(event_marginal).expect("marginal of a distribution"),
            FiniteDistribution::new(label_marginal).expect("marginal of a distribution"),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN_2: f64 = core::f64::consts::LN_2;

    fn die_map() -> ConditionalMap {
        // Six-sided die, blocks ordered (high, low); low rolls are flipped to
        // their opposite face, high rolls stay.
        let partition = Partition::new(6, vec![vec![3, 4, 5], vec![0, 1, 2]]).unwrap();
        ConditionalMap::new(vec![5, 4, 3, 3, 4, 5], partition).unwrap()
    }

    /// Fixed strictly positive test distribution.
    fn probe_distribution(n: usize, salt: u64) -> FiniteDistribution {
        let mut state = salt.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(11);
        let mut raw = Vec::with_capacity(n);
        for _ in 0..n {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            raw.push(0.05 + (state >> 11) as f64 / (1u64 << 53) as f64);
        }
        let sum: f64 = raw.iter().sum();
        FiniteDistribution::new(raw.into_iter().map(|x| x / sum).collect()).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(matches!(
            FiniteDistribution::new(vec![0.5, -0.2, 0.7]),
            Err(ClassicalError::NegativeEntry { index: 1, .. })
        ));
        assert!(matches!(
            FiniteDistribution::new(vec![0.5, 0.4]),
            Err(ClassicalError::BadSum { .. })
        ));
        // Round-off negatives are clamped, not rejected.
        let d = FiniteDistribution::new(vec![1.0, -1e-15]).unwrap();
        assert_eq!(d.probabilities()[1], 0.0);
        let sixth = FiniteDistribution::uniform(6);
        assert!((sixth.probabilities().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn entropy_of_uniform_and_point_mass() {
        assert!((FiniteDistribution::uniform(6).entropy() - 6.0f64.ln()).abs() < 1e-12);
        let point = FiniteDistribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(point.entropy(), 0.0);
    }

    #[test]
    fn partition_validation() {
        assert!(matches!(
            Partition::new(3, vec![vec![0, 1], vec![1, 2]]),
            Err(ClassicalError::PartitionOverlap { element: 1, .. })
        ));
        assert!(matches!(
            Partition::new(3, vec![vec![0, 2]]),
            Err(ClassicalError::PartitionGap { element: 1 })
        ));
        let with_empty = Partition::new(2, vec![vec![0, 1], vec![]]).unwrap();
        assert!(with_empty.has_empty_blocks());
    }

    #[test]
    fn conditional_map_rejects_block_collision() {
        let partition = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let err = ConditionalMap::new(vec![2, 2, 0, 1], partition).unwrap_err();
        assert!(matches!(
            err,
            ClassicalError::BlockCollision {
                block: 0,
                first: 0,
                second: 1,
                image: 2,
            }
        ));
    }

    #[test]
    fn collisions_across_blocks_are_legal_and_merge_mass() {
        let partition = Partition::new(2, vec![vec![0], vec![1]]).unwrap();
        let cm = ConditionalMap::new(vec![0, 0], partition).unwrap();
        let p = FiniteDistribution::new(vec![0.3, 0.7]).unwrap();
        let q = cm.pushforward(&p).unwrap();
        assert_eq!(q.probabilities(), &[1.0, 0.0]);
        assert!(q.entropy() < p.entropy());
    }

    #[test]
    fn pushforward_conserves_mass() {
        let cm = die_map();
        for salt in 0..10 {
            let p = probe_distribution(6, salt);
            let q = cm.pushforward(&p).unwrap();
            let total: f64 = q.probabilities().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    /// Merging two positive masses strictly lowers their entropy
    /// contribution.
    #[test]
    fn fusing_two_masses_lowers_entropy_term() {
        let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
        for ai in 1..20 {
            for bi in 1..20 {
                let (a, b) = (ai as f64 / 40.0, bi as f64 / 40.0);
                if a + b > 1.0 {
                    continue;
                }
                assert!(
                    term(a + b) < term(a) + term(b),
                    "merge of {a} and {b} failed to drop"
                );
            }
        }
    }

    /// Restricted growth strings: every partition of `{0..n-1}` into at most
    /// `max_blocks` nonempty blocks, each exactly once.
    fn partitions(n: usize, max_blocks: usize) -> Vec<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        let mut labels = vec![0usize; n];
        loop {
            let blocks_used = labels.iter().copied().max().unwrap() + 1;
            let mut blocks = vec![Vec::new(); blocks_used];
            for (i, &l) in labels.iter().enumerate() {
                blocks[l].push(i);
            }
            out.push(blocks);
            // Advance to the next restricted growth string.
            let mut pos = n;
            loop {
                if pos == 1 {
                    return out;
                }
                pos -= 1;
                let cap = labels[..pos].iter().copied().max().unwrap() + 1;
                if labels[pos] < cap.min(max_blocks - 1) {
                    labels[pos] += 1;
                    for l in labels.iter_mut().skip(pos + 1) {
                        *l = 0;
                    }
                    break;
                }
                labels[pos] = 0;
            }
        }
    }

    /// All injections of a block into `{0..n-1}`, by backtracking.
    fn injections(block_len: usize, n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(block_len);
        let mut used = vec![false; n];
        fn rec(
            depth: usize,
            block_len: usize,
            n: usize,
            current: &mut Vec<usize>,
            used: &mut Vec<bool>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if depth == block_len {
                out.push(current.clone());
                return;
            }
            for v in 0..n {
                if !used[v] {
                    used[v] = true;
                    current.push(v);
                    rec(depth + 1, block_len, n, current, used, out);
                    current.pop();
                    used[v] = false;
                }
            }
        }
        rec(0, block_len, n, &mut current, &mut used, &mut out);
        out
    }

    /// Entropy never increases under a block-injective pushforward, checked by
    /// exhausting every map for every partition into at most three blocks.
    #[test]
    fn pushforward_entropy_monotone_exhaustive() {
        for n in 2..=6 {
            let p = probe_distribution(n, n as u64);
            let h_p = p.entropy();
            let mut q = vec![0.0; n];
            for blocks in partitions(n, 3) {
                let per_block: Vec<Vec<Vec<usize>>> =
                    blocks.iter().map(|b| injections(b.len(), n)).collect();
                let mut choice = vec![0usize; blocks.len()];
                loop {
                    q.iter_mut().for_each(|x| *x = 0.0);
                    for (b, block) in blocks.iter().enumerate() {
                        let images = &per_block[b][choice[b]];
                        for (slot, &element) in block.iter().enumerate() {
                            q[images[slot]] += p.probabilities()[element];
                        }
                    }
                    let h_q = -q
                        .iter()
                        .filter(|&&x| x > 0.0)
                        .map(|&x| x * x.ln())
                        .sum::<f64>();
                    assert!(
                        h_q <= h_p + 1e-12,
                        "entropy rose from {h_p} to {h_q} for blocks {blocks:?}"
                    );
                    // Odometer over per-block injection choices.
                    let mut b = 0;
                    loop {
                        if b == blocks.len() {
                            break;
                        }
                        choice[b] += 1;
                        if choice[b] < per_block[b].len() {
                            break;
                        }
                        choice[b] = 0;
                        b += 1;
                    }
                    if b == blocks.len() {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn dilation_extends_to_a_bijection_deterministically() {
        let cm = die_map();
        let p = probe_distribution(6, 3);
        let first = build_classical_dilation(&p, &cm, 0).unwrap();
        let second = build_classical_dilation(&p, &cm, 0).unwrap();
        assert_eq!(first.map(), second.map());
        let mut image: Vec<usize> = first.map().to_vec();
        image.sort_unstable();
        let expected: Vec<usize> = (0..12).collect();
        assert_eq!(image, expected, "extension must be a bijection");
        // The prescribed action is untouched by the extension.
        for event in 0..6 {
            let (target, label) = first.apply(event, 0);
            assert_eq!(target, cm.map()[event]);
            assert_eq!(label, cm.partition().block_of(event));
        }
    }

    #[test]
    fn marginals_do_not_depend_on_the_extension() {
        // Different start labels force different completions of the
        // prescribed action to a bijection; the observable marginals must not
        // notice.
        let cm = die_map();
        for salt in 0..4 {
            let p = probe_distribution(6, 40 + salt);
            let baseline = build_classical_dilation(&p, &cm, 0).unwrap();
            let alternative = build_classical_dilation(&p, &cm, 1).unwrap();
            assert_ne!(baseline.map(), alternative.map());
            let (e0, l0) = baseline.marginals();
            let (e1, l1) = alternative.marginals();
            for (a, b) in e0.probabilities().iter().zip(e1.probabilities()) {
                assert!((a - b).abs() < 1e-15);
            }
            for (a, b) in l0.probabilities().iter().zip(l1.probabilities()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn memory_marginal_compensates_entropy_drop() {
        use rand::Rng;
        use rand::seq::SliceRandom;

        let mut rng = crate::sampling::rng_from(0x00c1a551ca1);
        for _ in 0..60 {
            let n = rng.random_range(2..=7);
            let block_count = rng.random_range(1..=n.min(3));
            let mut elements: Vec<usize> = (0..n).collect();
            elements.shuffle(&mut rng);
            let sizes = crate::sampling::random_rank_split(n, block_count, &mut rng);
            let mut blocks = Vec::with_capacity(block_count);
            let mut cursor = 0;
            for size in sizes {
                blocks.push(elements[cursor..cursor + size].to_vec());
                cursor += size;
            }
            let partition = Partition::new(n, blocks.clone()).unwrap();
            // Per block, an injective assignment of images.
            let mut phi = vec![0usize; n];
            for block in &blocks {
                let mut images: Vec<usize> = (0..n).collect();
                images.shuffle(&mut rng);
                for (slot, &element) in block.iter().enumerate() {
                    phi[element] = images[slot];
                }
            }
            let cm = ConditionalMap::new(phi, partition).unwrap();
            let p = probe_distribution(n, rng.random::<u64>());
            let q = cm.pushforward(&p).unwrap();
            let start = rng.random_range(0..block_count);
            let dilation = build_classical_dilation(&p, &cm, start).unwrap();
            let (_, labels) = dilation.marginals();
            // What the output forgets, the memory must hold.
            assert!(
                labels.entropy() >= p.entropy() - q.entropy() - 1e-12,
                "memory entropy {} cannot cover drop {}",
                labels.entropy(),
                p.entropy() - q.entropy()
            );
        }
    }

    #[test]
    fn dilation_marginals_are_pushforward_and_block_masses() {
        let cm = die_map();
        for salt in 0..5 {
            let p = probe_distribution(6, 100 + salt);
            let dilation = build_classical_dilation(&p, &cm, 0).unwrap();
            let (event_marginal, label_marginal) = dilation.marginals();
            let q = cm.pushforward(&p).unwrap();
            for i in 0..6 {
                assert!((event_marginal.probabilities()[i] - q.probabilities()[i]).abs() < 1e-12);
            }
            let masses = cm.partition().block_masses(&p).unwrap();
            for (j, &mass) in masses.iter().enumerate() {
                assert!((label_marginal.probabilities()[j] - mass).abs() < 1e-12);
            }
            // A bijection cannot create or destroy entropy.
            assert!((dilation.joint().entropy() - p.entropy()).abs() < 1e-12);
        }
    }

    #[test]
    fn die_fixture_matches_published_table() {
        let cm = die_map();
        let p = FiniteDistribution::uniform(6);
        let q = cm.pushforward(&p).unwrap();
        assert!((p.entropy() - 6.0f64.ln()).abs() < 1e-12);
        assert!((q.entropy() - 3.0f64.ln()).abs() < 1e-12);

        let dilation = build_classical_dilation(&p, &cm, 0).unwrap();
        let expected_action = [(5, 1), (4, 1), (3, 1), (3, 0), (4, 0), (5, 0)];
        for (event, &(target, label)) in expected_action.iter().enumerate() {
            assert_eq!(dilation.apply(event, 0), (target, label));
        }
        let joint = dilation.joint();
        let sixth = 1.0 / 6.0;
        for (flat, &mass) in joint.probabilities().iter().enumerate() {
            let (event, label) = (flat / 2, flat % 2);
            let expected = if event >= 3 { sixth } else { 0.0 };
            assert!(
                (mass - expected).abs() < 1e-12,
                "unexpected joint mass {mass} at ({event}, {label})"
            );
        }
        assert!((joint.entropy() - 6.0f64.ln()).abs() < 1e-12);
        let (_, label_marginal) = dilation.marginals();
        assert!((label_marginal.entropy() - LN_2).abs() < 1e-12);
        // Entropy lost by the die is exactly the entropy the memory gains.
        assert!((q.entropy() + label_marginal.entropy() - p.entropy()).abs() < 1e-12);
    }
}
