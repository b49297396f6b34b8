//! Structural property tests: algebraic identities of the tensor layer, exact
//! serialization round-trips, and the bridge between the classical and
//! quantum formulations of conditional action.

use proptest::prelude::*;

use maxwell_demon::classical::{ConditionalMap, FiniteDistribution, Partition};
use maxwell_demon::instruments::Instrument;
use maxwell_demon::io::{Layout, MatrixJson, relayout_joint};
use maxwell_demon::linalg::{TensorShape, frobenius_distance, partial_trace, tensor};
use maxwell_demon::sampling::{ginibre, random_rank_split, rng_from};
use maxwell_demon::states::{DensityOperator, ProjectionFamily, UnitaryFamily};
use maxwell_demon::{C64, CMatrix};

fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e300..1e300f64,
        -1.0..1.0f64,
        -1e-300..1e-300f64,
        Just(0.0),
        Just(-0.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn tensor_product_is_associative(seed in any::<u64>(),
                                     da in 1usize..=3,
                                     db in 1usize..=3,
                                     dc in 1usize..=3) {
        let mut rng = rng_from(seed);
        let a = ginibre(da, &mut rng);
        let b = ginibre(db, &mut rng);
        let c = ginibre(dc, &mut rng);
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        let scale = left.norm().max(1.0);
        prop_assert!(frobenius_distance(&left, &right) <= 1e-12 * scale);
    }

    #[test]
    fn partial_trace_splits_a_product(seed in any::<u64>(),
                                      dh in 1usize..=4,
                                      dk in 1usize..=4) {
        let mut rng = rng_from(seed);
        let a = ginibre(dh, &mut rng);
        let b = ginibre(dk, &mut rng);
        let joint = tensor(&a, &b);
        let shape = TensorShape::two(dh, dk);

        let first = partial_trace(&joint, &shape, 0).unwrap();
        let second = partial_trace(&joint, &shape, 1).unwrap();
        let scale = joint.norm().max(1.0);
        prop_assert!(frobenius_distance(&first, &(&a * b.trace())) <= 1e-12 * scale);
        prop_assert!(frobenius_distance(&second, &(&b * a.trace())) <= 1e-12 * scale);
        // Tracing out either factor preserves the full trace.
        prop_assert!((first.trace() - joint.trace()).norm() <= 1e-12 * scale);
        prop_assert!((second.trace() - joint.trace()).norm() <= 1e-12 * scale);
    }

    #[test]
    fn matrix_json_round_trips_exactly(dim in 1usize..=4,
                                       entries in prop::collection::vec(finite_f64(), 32)) {
        let mut m = CMatrix::zeros(dim, dim);
        let mut cursor = 0usize;
        for i in 0..dim {
            for j in 0..dim {
                let re = entries[cursor % entries.len()];
                let im = entries[(cursor + 7) % entries.len()];
                m[(i, j)] = C64::new(re, im);
                cursor += 1;
            }
        }
        let text = serde_json::to_string(&MatrixJson::from_matrix(&m)).unwrap();
        let parsed: MatrixJson = serde_json::from_str(&text).unwrap();
        let back = parsed.to_matrix().unwrap();
        for i in 0..dim {
            for j in 0..dim {
                prop_assert_eq!(back[(i, j)].re, m[(i, j)].re);
                prop_assert_eq!(back[(i, j)].im, m[(i, j)].im);
            }
        }
    }

    #[test]
    fn relayout_is_an_exact_involution(seed in any::<u64>(),
                                       dh in 1usize..=4,
                                       dk in 1usize..=4) {
        let mut rng = rng_from(seed);
        let joint = ginibre(dh * dk, &mut rng);
        let outer =
            relayout_joint(&joint, dh, dk, Layout::Canonical, Layout::AncillaOuter).unwrap();
        let back =
            relayout_joint(&outer, dh, dk, Layout::AncillaOuter, Layout::Canonical).unwrap();
        // Pure reindexing: entries must come back bit for bit.
        for i in 0..dh * dk {
            for j in 0..dh * dk {
                prop_assert_eq!(back[(i, j)], joint[(i, j)]);
            }
        }
        // Spot-check the index convention itself on one entry.
        let (i, k, i2, k2) = (dh - 1, 0, 0, dk - 1);
        prop_assert_eq!(
            outer[(k * dh + i, k2 * dh + i2)],
            joint[(i * dk + k, i2 * dk + k2)]
        );
    }

    #[test]
    fn classical_pushforward_matches_quantum_total_action(seed in any::<u64>(),
                                                          n in 2usize..=6) {
        let mut rng = rng_from(seed);
        use rand::Rng;
        use rand::seq::SliceRandom;

        // Random partition of 0..n with block-injective images.
        let block_count = rng.random_range(1..=n.min(3));
        let mut elements: Vec<usize> = (0..n).collect();
        elements.shuffle(&mut rng);
        let sizes = random_rank_split(n, block_count, &mut rng);
        let mut blocks = Vec::with_capacity(block_count);
        let mut cursor = 0;
        for size in sizes {
            blocks.push(elements[cursor..cursor + size].to_vec());
            cursor += size;
        }
        let mut phi = vec![0usize; n];
        for block in &blocks {
            let mut images: Vec<usize> = (0..n).collect();
            images.shuffle(&mut rng);
            for (slot, &element) in block.iter().enumerate() {
                phi[element] = images[slot];
            }
        }
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total_mass: f64 = weights.iter().sum();
        let p =
            FiniteDistribution::new(weights.iter().map(|w| w / total_mass).collect()).unwrap();

        let partition = Partition::new(n, blocks.clone()).unwrap();
        let cm = ConditionalMap::new(phi.clone(), partition).unwrap();
        let q = cm.pushforward(&p).unwrap();

        // Same data as a quantum conditional action: block projectors and
        // permutation actions that realize each block's reassignment.
        let mut projectors = Vec::with_capacity(block_count);
        let mut actions = Vec::with_capacity(block_count);
        for block in &blocks {
            let mut mask = vec![0.0; n];
            for &element in block {
                mask[element] = 1.0;
            }
            projectors.push(maxwell_demon::linalg::diag(&mask));

            // Complete the block's injection to a permutation of all levels.
            let mut image = vec![usize::MAX; n];
            let mut taken = vec![false; n];
            for &element in block {
                image[element] = phi[element];
                taken[phi[element]] = true;
            }
            let mut free = (0..n).filter(|&v| !taken[v]);
            for slot in image.iter_mut() {
                if *slot == usize::MAX {
                    *slot = free.next().expect("counting");
                }
            }
            let mut u = CMatrix::zeros(n, n);
            for (source, &target) in image.iter().enumerate() {
                u[(target, source)] = C64::new(1.0, 0.0);
            }
            actions.push(u);
        }
        let ps = ProjectionFamily::new(projectors).unwrap();
        let us = UnitaryFamily::new(actions).unwrap();
        let instr = Instrument::maxwell(&ps, &us).unwrap();

        let rho = DensityOperator::from_diagonal(p.probabilities()).unwrap();
        let out = instr.apply_total(&rho).unwrap();
        let expected = maxwell_demon::linalg::diag(q.probabilities());
        prop_assert!(frobenius_distance(out.matrix(), &expected) <= 1e-12);
    }
}
