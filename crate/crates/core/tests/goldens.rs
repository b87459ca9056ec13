//! Golden values for the norm engine, asserted through the public API.
//! Every value here was fixed by hand (small exhaustive search or direct
//! arithmetic) before the implementation existed.

use bairesum::norm::{
    family_objective, norm_pair, segment_value, t0_norm, t2_norm, t2_norm_bruteforce,
};
use bairesum::numeric::rat;
use bairesum::oracle::{c0_spreading, l1_spreading, l2_spreading};
use bairesum::segment::Segment;
use bairesum::tree::FiniteTree;
use bairesum::vector::TreeVector;

fn vec_of(pairs: &[(u32, i64, i64)]) -> TreeVector {
    TreeVector::from_pairs(pairs).unwrap()
}

/// Root 0 with children 1 and 2.
fn star() -> FiniteTree {
    FiniteTree::build(&[None, Some(0), Some(0)]).unwrap()
}

/// Chain 0 -> 1.
fn chain2() -> FiniteTree {
    FiniteTree::build(&[None, Some(0)]).unwrap()
}

#[test]
fn segment_values_on_a_two_node_segment() {
    let t = chain2();
    let z = vec_of(&[(0, 2, 1), (1, 1, 1)]);
    let seg = Segment::from_endpoints(&t, 0, 1).unwrap();
    // sup-norm model takes the larger coefficient; the l2 model sums squares.
    assert_eq!(segment_value(&t, &z, &c0_spreading(), &seg).sq(), rat(4, 1));
    assert_eq!(segment_value(&t, &z, &l2_spreading(), &seg).sq(), rat(5, 1));
    let zero_here = vec_of(&[(0, 0, 1)]);
    assert_eq!(
        segment_value(&t, &zero_here, &l2_spreading(), &seg).sq(),
        rat(0, 1)
    );
}

#[test]
fn siblings_three_four_make_five() {
    let t = star();
    let z = vec_of(&[(1, 3, 1), (2, 4, 1)]);
    let c0 = c0_spreading();
    let brute = t2_norm_bruteforce(&t, &z, &c0, 1_000_000).unwrap();
    assert_eq!(brute.value.sq, rat(25, 1));
    assert!(brute.value.exact);
    // Witness: the two singleton segments, in min-id order.
    assert_eq!(brute.family.node_lists(), vec![vec![1], vec![2]]);
    let dp = t2_norm(&t, &z, &c0).unwrap();
    assert_eq!(dp.value.sq, rat(25, 1));
    assert_eq!(dp.family.node_lists(), vec![vec![1], vec![2]]);
}

#[test]
fn chain_of_ones_under_both_models() {
    let t = chain2();
    let z = vec_of(&[(0, 1, 1), (1, 1, 1)]);
    // Two singletons on a chain are forbidden (comparable minima), so the
    // sup-norm family value stays at 1; the l2 model reaches sqrt(2).
    assert_eq!(
        t2_norm_bruteforce(&t, &z, &c0_spreading(), 1_000_000)
            .unwrap()
            .value
            .sq,
        rat(1, 1)
    );
    assert_eq!(t2_norm(&t, &z, &c0_spreading()).unwrap().value.sq, rat(1, 1));
    assert_eq!(t2_norm(&t, &z, &l2_spreading()).unwrap().value.sq, rat(2, 1));
    assert_eq!(t0_norm(&t, &z, &l2_spreading()).unwrap().value.sq, rat(2, 1));
}

#[test]
fn star_with_weighted_root() {
    let t = star();
    let z = vec_of(&[(0, 2, 1), (1, 1, 1), (2, 1, 1)]);
    // Root path beats the two children: max(4, 1+1) = 4.
    assert_eq!(t2_norm(&t, &z, &c0_spreading()).unwrap().value.sq, rat(4, 1));
    // l2 model: the root-child segment scores 4+1 = 5, beating 1+1.
    assert_eq!(t2_norm(&t, &z, &l2_spreading()).unwrap().value.sq, rat(5, 1));
}

#[test]
fn singleton_is_normalized() {
    let t = star();
    let z = vec_of(&[(2, 1, 1)]);
    for oracle in [&c0_spreading() as &dyn bairesum::oracle::BranchNormOracle] {
        assert_eq!(t2_norm(&t, &z, oracle).unwrap().value.sq, rat(1, 1));
    }
    assert_eq!(t2_norm(&t, &z, &l1_spreading()).unwrap().value.sq, rat(1, 1));
    assert_eq!(t2_norm(&t, &z, &l2_spreading()).unwrap().value.sq, rat(1, 1));
}

#[test]
fn segment_norm_on_an_antichain_takes_the_best_node() {
    let t = star();
    let z = vec_of(&[(1, 3, 1), (2, 4, 1)]);
    let r = t0_norm(&t, &z, &c0_spreading()).unwrap();
    assert_eq!(r.value.sq, rat(16, 1));
    assert_eq!(r.segment.unwrap().nodes(), &[2]);
}

#[test]
fn zero_vector_has_zero_norms_and_no_witness() {
    let t = star();
    let z = TreeVector::default();
    let r2 = t2_norm(&t, &z, &l2_spreading()).unwrap();
    assert_eq!(r2.value.sq, rat(0, 1));
    assert!(r2.value.exact);
    assert!(r2.family.is_empty());
    let r0 = t0_norm(&t, &z, &l2_spreading()).unwrap();
    assert_eq!(r0.value.sq, rat(0, 1));
    assert!(r0.segment.is_none());
}

#[test]
fn norm_pair_goldens() {
    let t = star();
    let c0 = c0_spreading();
    // Antichain {3, 4}: family value 5, segment value 4.
    let z = vec_of(&[(1, 3, 1), (2, 4, 1)]);
    let (t2, t0) = norm_pair(&t, &z, &c0).unwrap();
    assert_eq!((t2.sq, t0.sq), (rat(25, 1), rat(16, 1)));
    // Singleton: both norms 1.
    let z = vec_of(&[(0, 1, 1)]);
    let (t2, t0) = norm_pair(&t, &z, &c0).unwrap();
    assert_eq!((t2.sq, t0.sq), (rat(1, 1), rat(1, 1)));
    // Zero: both norms 0.
    let (t2, t0) = norm_pair(&t, &TreeVector::default(), &c0).unwrap();
    assert_eq!((t2.sq, t0.sq), (rat(0, 1), rat(0, 1)));
}

#[test]
fn witnesses_reproduce_their_values() {
    let t = FiniteTree::build(&[None, Some(0), Some(1), Some(0), None, Some(4)]).unwrap();
    let z = vec_of(&[(0, 1, 2), (1, -2, 3), (2, 5, 7), (3, 1, 1), (5, -3, 4)]);
    for oracle in [
        &c0_spreading() as &dyn bairesum::oracle::BranchNormOracle,
        &l1_spreading(),
        &l2_spreading(),
    ] {
        let r2 = t2_norm(&t, &z, oracle).unwrap();
        let replay = family_objective(&t, &z, oracle, &r2.family);
        assert_eq!(replay.sq, r2.value.sq);
        let r0 = t0_norm(&t, &z, oracle).unwrap();
        let seg = r0.segment.unwrap();
        assert_eq!(segment_value(&t, &z, oracle, &seg).sq(), r0.value.sq);
    }
}

#[test]
fn deep_chain_under_l2_takes_the_whole_branch() {
    // Chain of 4 ones: l2 family norm is 2 (single full segment), sup-norm
    // family value stays 1.
    let t = FiniteTree::build(&[None, Some(0), Some(1), Some(2)]).unwrap();
    let z = vec_of(&[(0, 1, 1), (1, 1, 1), (2, 1, 1), (3, 1, 1)]);
    assert_eq!(t2_norm(&t, &z, &l2_spreading()).unwrap().value.sq, rat(4, 1));
    assert_eq!(t2_norm(&t, &z, &c0_spreading()).unwrap().value.sq, rat(1, 1));
    let r0 = t0_norm(&t, &z, &l2_spreading()).unwrap();
    assert_eq!(r0.segment.unwrap().nodes(), &[0, 1, 2, 3]);
}
