//! Randomized invariants for the norm engine: solver agreement, norm
//! axioms, projection contractivity, witness soundness, and relabeling
//! invariance.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bairesum::norm::{
    family_objective, norm_pair, segment_value, t0_norm, t2_norm, t2_norm_bruteforce,
};
use bairesum::numeric::{rat, tolerance};
use bairesum::oracle::{c0_spreading, l2_spreading, lp_spreading, BranchNormOracle};
use bairesum::project::{project_interval, project_segment};
use bairesum::segment::RangeInterval;
use bairesum::tree::{bfs_enumeration, FiniteTree, NodeId};
use bairesum::vector::TreeVector;

const BUDGET: u64 = 10_000_000;

/// Random tree with 1..=max nodes plus a coefficient in [-9, 9] / [1, 4]
/// for every node (zeros dropped).
fn instance(max: usize) -> impl Strategy<Value = (FiniteTree, TreeVector)> {
    (1usize..=max, any::<u64>()).prop_flat_map(|(n, seed)| {
        let tree = FiniteTree::random(n, seed);
        proptest::collection::vec((-9i64..=9, 1i64..=4), n).prop_map(move |coeffs| {
            let pairs: Vec<(NodeId, i64, i64)> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, (num, _))| *num != 0)
                .map(|(i, &(num, den))| (i as NodeId, num, den))
                .collect();
            (tree.clone(), TreeVector::from_pairs(&pairs).unwrap())
        })
    })
}

fn exact_models() -> Vec<Box<dyn BranchNormOracle>> {
    vec![Box::new(c0_spreading()), Box::new(l2_spreading())]
}

fn close(a: &BigRational, b: &BigRational) -> bool {
    (a - b).abs() <= tolerance()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The subtree solver agrees with exhaustive family enumeration:
    /// exactly for exact models, within tolerance on squared values for
    /// the dyadic ones.
    #[test]
    fn solver_matches_brute_force((tree, z) in instance(14)) {
        for oracle in exact_models() {
            let dp = t2_norm(&tree, &z, oracle.as_ref()).unwrap();
            let brute = t2_norm_bruteforce(&tree, &z, oracle.as_ref(), BUDGET).unwrap();
            prop_assert_eq!(&dp.value.sq, &brute.value.sq);
            // Witness extents may differ on equal-value ties; each must
            // replay to the value it came with.
            let dp_replay = family_objective(&tree, &z, oracle.as_ref(), &dp.family).sq;
            prop_assert_eq!(&dp_replay, &dp.value.sq);
            let brute_replay = family_objective(&tree, &z, oracle.as_ref(), &brute.family).sq;
            prop_assert_eq!(&brute_replay, &brute.value.sq);
        }
        for oracle in [lp_spreading(1, 1).unwrap(), lp_spreading(3, 2).unwrap()] {
            let dp = t2_norm(&tree, &z, &oracle).unwrap();
            let brute = t2_norm_bruteforce(&tree, &z, &oracle, BUDGET).unwrap();
            prop_assert!(close(&dp.value.sq, &brute.value.sq),
                "dp {} vs brute {}", dp.value.sq, brute.value.sq);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// A single segment is a one-element family.
    #[test]
    fn segment_norm_is_dominated((tree, z) in instance(16)) {
        for oracle in exact_models() {
            let (t2, t0) = norm_pair(&tree, &z, oracle.as_ref()).unwrap();
            prop_assert!(t0.sq <= t2.sq);
        }
    }

    /// Absolute homogeneity, exact under exact models. Scaling by a huge
    /// denominator also forces the rational evaluation path, so this
    /// doubles as a machine-integer vs. rational cross-check.
    #[test]
    fn homogeneity_is_exact((tree, z) in instance(12), num in -7i64..=7, shift in 0u32..=40) {
        prop_assume!(num != 0);
        let factor = rat(num, 1) / rat(1i64 << shift, 1);
        let scaled = z.scale(&factor);
        let factor_sq = &factor * &factor;
        for oracle in exact_models() {
            let (t2, t0) = norm_pair(&tree, &z, oracle.as_ref()).unwrap();
            let (s2, s0) = norm_pair(&tree, &scaled, oracle.as_ref()).unwrap();
            prop_assert_eq!(s2.sq, &factor_sq * &t2.sq);
            prop_assert_eq!(s0.sq, &factor_sq * &t0.sq);
        }
    }

    /// Triangle inequality, decided exactly on squares:
    /// s <= a + b  iff  s^2 - a^2 - b^2 <= 0 or (s^2-a^2-b^2)^2 <= 4 a^2 b^2.
    #[test]
    fn triangle_inequality((tree, x) in instance(12), coeffs in proptest::collection::vec((-9i64..=9, 1i64..=4), 12)) {
        let pairs: Vec<(NodeId, i64, i64)> = coeffs
            .iter()
            .enumerate()
            .take(tree.len())
            .filter(|(_, (num, _))| *num != 0)
            .map(|(i, &(num, den))| (i as NodeId, num, den))
            .collect();
        let y = TreeVector::from_pairs(&pairs).unwrap();
        let sum = x.add(&y);
        for oracle in exact_models() {
            for pick in [0, 1] {
                let (v_sum, v_x, v_y) = {
                    let s = norm_pair(&tree, &sum, oracle.as_ref()).unwrap();
                    let a = norm_pair(&tree, &x, oracle.as_ref()).unwrap();
                    let b = norm_pair(&tree, &y, oracle.as_ref()).unwrap();
                    if pick == 0 {
                        (s.0.sq, a.0.sq, b.0.sq)
                    } else {
                        (s.1.sq, a.1.sq, b.1.sq)
                    }
                };
                let d = &v_sum - &v_x - &v_y;
                let holds = d <= BigRational::zero()
                    || &d * &d <= rat(4, 1) * &v_x * &v_y;
                prop_assert!(holds, "triangle violated: s^2={v_sum} a^2={v_x} b^2={v_y}");
            }
        }
    }

    /// Norms vanish exactly on the zero vector.
    #[test]
    fn positive_definiteness((tree, z) in instance(12)) {
        for oracle in exact_models() {
            let (t2, t0) = norm_pair(&tree, &z, oracle.as_ref()).unwrap();
            prop_assert_eq!(t2.sq.is_zero(), z.is_zero());
            prop_assert_eq!(t0.sq.is_zero(), z.is_zero());
        }
    }

    /// Zeroing coefficients outside any enumeration-position interval
    /// never increases either norm (bi-monotonicity), and projecting to a
    /// segment is contractive and idempotent.
    #[test]
    fn projections_are_contractive((tree, z) in instance(12), lo in 0u32..16, len in 0u32..16, a in 0u32..16, b in 0u32..16) {
        let enumeration = bfs_enumeration(&tree);
        let interval = RangeInterval::new(lo, lo.saturating_add(len));
        let pz = project_interval(&z, &enumeration, interval);
        let n = tree.len() as u32;
        let (lo_n, hi_n) = ((a % n).min(b % n), (a % n).max(b % n));
        let seg_proj = if tree.is_ancestor_or_equal(lo_n, hi_n) {
            let seg = bairesum::segment::Segment::from_endpoints(&tree, lo_n, hi_n).unwrap();
            Some(project_segment(&z, &seg))
        } else {
            None
        };
        for oracle in exact_models() {
            let (t2, t0) = norm_pair(&tree, &z, oracle.as_ref()).unwrap();
            let (p2, p0) = norm_pair(&tree, &pz, oracle.as_ref()).unwrap();
            prop_assert!(p2.sq <= t2.sq);
            prop_assert!(p0.sq <= t0.sq);
            if let Some(sz) = &seg_proj {
                let (s2, s0) = norm_pair(&tree, sz, oracle.as_ref()).unwrap();
                prop_assert!(s2.sq <= t2.sq);
                prop_assert!(s0.sq <= t0.sq);
            }
        }
        if let Some(sz) = &seg_proj {
            let seg = bairesum::segment::Segment::from_endpoints(&tree, lo_n, hi_n).unwrap();
            prop_assert_eq!(&project_segment(sz, &seg), sz);
        }
        prop_assert_eq!(&project_interval(&pz, &enumeration, interval), &pz);
    }

    /// Re-evaluating a returned witness reproduces the returned value.
    #[test]
    fn witnesses_are_sound((tree, z) in instance(12)) {
        for oracle in exact_models() {
            let r2 = t2_norm(&tree, &z, oracle.as_ref()).unwrap();
            let replay = family_objective(&tree, &z, oracle.as_ref(), &r2.family);
            prop_assert_eq!(replay.sq, r2.value.sq);
            let r0 = t0_norm(&tree, &z, oracle.as_ref()).unwrap();
            match r0.segment {
                Some(seg) => prop_assert_eq!(
                    segment_value(&tree, &z, oracle.as_ref(), &seg).sq(),
                    r0.value.sq
                ),
                None => prop_assert!(z.is_zero()),
            }
        }
    }

    /// Norm values never read node identities: relabeling the tree by a
    /// random isomorphism leaves both norms unchanged.
    #[test]
    fn relabeling_preserves_norms((tree, z) in instance(12), seed in any::<u64>()) {
        let n = tree.len();
        let mut perm: Vec<NodeId> = (0..n as NodeId).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        perm.shuffle(&mut rng);
        let old_parents = tree.parents_vec();
        let mut new_parents: Vec<Option<NodeId>> = vec![None; n];
        for v in 0..n {
            new_parents[perm[v] as usize] = old_parents[v].map(|p| perm[p as usize]);
        }
        let relabeled = FiniteTree::build(&new_parents).unwrap();
        let moved = TreeVector::new(
            z.iter().map(|(v, c)| (perm[v as usize], c.clone())).collect::<Vec<_>>(),
        )
        .unwrap();
        for oracle in exact_models() {
            let (t2, t0) = norm_pair(&tree, &z, oracle.as_ref()).unwrap();
            let (r2, r0) = norm_pair(&relabeled, &moved, oracle.as_ref()).unwrap();
            prop_assert_eq!(t2.sq, r2.sq);
            prop_assert_eq!(t0.sq, r0.sq);
        }
    }

    /// For any family, the squared family norm dominates the sum of the
    /// members' squared values (incomparable stacking). The witness of a
    /// projected vector is such a family for the original.
    #[test]
    fn family_sums_never_exceed_the_norm((tree, z) in instance(12), lo in 0u32..8, len in 0u32..8) {
        let enumeration = bfs_enumeration(&tree);
        let interval = RangeInterval::new(lo, lo.saturating_add(len));
        let pz = project_interval(&z, &enumeration, interval);
        for oracle in exact_models() {
            let fam = t2_norm(&tree, &pz, oracle.as_ref()).unwrap().family;
            let stacked = family_objective(&tree, &z, oracle.as_ref(), &fam);
            let (t2, _) = norm_pair(&tree, &z, oracle.as_ref()).unwrap();
            prop_assert!(stacked.sq <= t2.sq);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The l1 model squares to a rational too; its dp values still satisfy
    /// homogeneity within tolerance.
    #[test]
    fn dyadic_models_are_nearly_homogeneous((tree, z) in instance(10)) {
        let oracle = lp_spreading(3, 2).unwrap();
        let scaled = z.scale(&rat(3, 2));
        let (t2, _) = norm_pair(&tree, &z, &oracle).unwrap();
        let (s2, _) = norm_pair(&tree, &scaled, &oracle).unwrap();
        let expected = rat(9, 4) * &t2.sq;
        prop_assert!((&s2.sq - &expected).abs() <= rat(9, 4) * tolerance() * (BigRational::one() + &t2.sq),
            "scaled {} vs expected {}", s2.sq, expected);
    }
}
