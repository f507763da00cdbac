mod oracles;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;
use skelforge_core::consensus::hints;
use skelforge_core::synth;
use skelforge_core::{
    build_ladder, decompose, integrate, merge_branches, prune_branch, AnnotatorSubmission, BinaryMask, Error,
    Point, Rationale, SkeletonRaster,
};

/// Shape and four prunings of its ladder with distinct RE.
fn fixtures() -> (BinaryMask, SkeletonRaster, Vec<SkeletonRaster>) {
    let ladder = build_ladder(&synth::quadruped(0.75), 4, 12).unwrap();
    let full = ladder.steps[0].clone();
    let graph = decompose(&full);
    let first_leaf = graph.leaf_branches()[0].id;
    let pruned = prune_branch(&graph, &BTreeSet::from([first_leaf])).unwrap().into_raster();
    let picks = vec![full.clone(), pruned, ladder.steps[4].clone(), ladder.last().clone()];
    (ladder.shape, full, picks)
}

fn submissions(shape: &BinaryMask, skeletons: &[SkeletonRaster]) -> Vec<AnnotatorSubmission> {
    skeletons
        .iter()
        .enumerate()
        .map(|(i, s)| AnnotatorSubmission::new(format!("a{i}"), s.clone(), shape).unwrap())
        .collect()
}

#[test]
fn exhaustive_triples_follow_the_voting_rule() {
    let (shape, full, fx) = fixtures();
    let res: Vec<f64> = submissions(&shape, &fx).iter().map(|s| s.re).collect();
    let mut distinct = res.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    assert_eq!(distinct.len(), 4, "fixtures need distinct RE: {res:?}");

    let mut cases = 0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                // ordered triples cover every multiset in every order
                let chosen = [fx[a].clone(), fx[b].clone(), fx[c].clone()];
                let subs = submissions(&shape, &chosen);
                let sets: Vec<BTreeSet<Point>> = chosen.iter().map(|s| s.points().clone()).collect();
                let sub_res: Vec<f64> = subs.iter().map(|s| s.re).collect();
                let expected = oracles::consensus_pick(&sets, &sub_res).expect("triples always decide");
                let out = integrate(&subs, &shape, Some(&full)).unwrap();
                assert_eq!(out.skeleton.points(), &sets[expected], "triple {a}{b}{c}");
                let distinct_count = sets.iter().collect::<BTreeSet<_>>().len();
                match distinct_count {
                    1 => assert_eq!(out.rationale, Rationale::MaxVotes { votes: 3 }),
                    2 => assert_eq!(out.rationale, Rationale::MaxVotes { votes: 2 }),
                    _ => assert!(matches!(out.rationale, Rationale::MedianError { distinct: 3, .. })),
                }
                cases += 1;
            }
        }
    }
    assert_eq!(cases, 64);
}

#[test]
fn median_of_three_and_lower_median_of_four() {
    let (shape, _, fx) = fixtures();
    let subs = submissions(&shape, &fx[..3]);
    let mut res: Vec<f64> = subs.iter().map(|s| s.re).collect();
    let out = integrate(&subs, &shape, None).unwrap();
    res.sort_by(f64::total_cmp);
    assert_eq!(AnnotatorSubmission::new("x", out.skeleton, &shape).unwrap().re, res[1]);

    let subs = submissions(&shape, &fx);
    let mut res: Vec<f64> = subs.iter().map(|s| s.re).collect();
    res.sort_by(f64::total_cmp);
    let out = integrate(&subs, &shape, None).unwrap();
    assert!(matches!(out.rationale, Rationale::MedianError { distinct: 4, lower_median: true, re } if re == res[1]));
}

#[test]
fn two_two_tie_merges() {
    let (shape, full, fx) = fixtures();
    let subs = submissions(&shape, &[fx[2].clone(), fx[2].clone(), fx[3].clone(), fx[3].clone()]);
    let out = integrate(&subs, &shape, Some(&full)).unwrap();
    assert_eq!(out.rationale, Rationale::BranchUnion { distinct: 2 });
    // the later ladder step is a subset of the earlier, so the union is it
    assert_eq!(out.skeleton.points(), fx[2].points());
}

#[test]
fn hints_match_pairwise_scan() {
    let (shape, _, fx) = fixtures();
    let mut rng = oracles::rng(9);
    for _ in 0..50 {
        let chosen: Vec<SkeletonRaster> = (0..10).map(|_| fx.choose(&mut rng).unwrap().clone()).collect();
        let subs = submissions(&shape, &chosen);
        let h = hints(&subs);
        for s in &chosen {
            let count = chosen.iter().filter(|t| t.points() == s.points()).count();
            assert_eq!(h[&s.digest()], count);
        }
        assert_eq!(h.values().sum::<usize>(), 10);
    }
}

#[test]
fn merge_rejects_foreign_skeleton() {
    let (shape, full, fx) = fixtures();
    let mut foreign = fx[3].points().clone();
    let outside = shape.points().find(|p| !full.contains(*p)).unwrap();
    foreign.insert(outside);
    let alien = SkeletonRaster::from_points(shape.width(), shape.height(), foreign);
    let subs = vec![
        AnnotatorSubmission { annotator_id: "a".into(), skeleton: fx[2].clone(), re: 0.0 },
        AnnotatorSubmission { annotator_id: "b".into(), skeleton: alien, re: 0.0 },
    ];
    assert!(matches!(merge_branches(&subs, Some(&full)), Err(Error::IncompatibleLadders(_))));
    assert!(matches!(integrate(&[], &shape, None), Err(Error::NoSubmissions)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn merged_pruning_removes_only_what_both_removed(seed in 0u64..1_000_000) {
        let (shape, full, _) = fixtures();
        let mut rng = oracles::rng(seed);
        let graph = decompose(&full);
        let prune_some = |rng: &mut rand_chacha::ChaCha8Rng| {
            let ids: BTreeSet<_> = graph.leaf_branches().iter().filter(|_| rng.random_bool(0.5)).map(|b| b.id).collect();
            if ids.is_empty() { full.clone() } else { prune_branch(&graph, &ids).unwrap().into_raster() }
        };
        let a = prune_some(&mut rng);
        let b = prune_some(&mut rng);
        let removed_a: BTreeSet<Point> = full.points().difference(a.points()).copied().collect();
        let removed_b: BTreeSet<Point> = full.points().difference(b.points()).copied().collect();
        let both: BTreeSet<Point> = removed_a.intersection(&removed_b).copied().collect();
        let expected: BTreeSet<Point> = full.points().difference(&both).copied().collect();
        let subs = submissions(&shape, &[a, b]);
        let merged = merge_branches(&subs, Some(&full)).unwrap();
        prop_assert_eq!(merged.points(), &expected);
        prop_assert_eq!(merged.component_count(), 1);
    }

    #[test]
    fn integrate_is_permutation_invariant(seed in 0u64..1_000_000) {
        let (shape, full, fx) = fixtures();
        let mut rng = oracles::rng(seed);
        let n = rng.random_range(1..=6);
        let chosen: Vec<SkeletonRaster> = (0..n).map(|_| fx.choose(&mut rng).unwrap().clone()).collect();
        let subs = submissions(&shape, &chosen);
        let base = integrate(&subs, &shape, Some(&full)).unwrap();
        let mut shuffled = subs.clone();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let other = integrate(&shuffled, &shape, Some(&full)).unwrap();
        prop_assert_eq!(base.skeleton, other.skeleton);
        prop_assert_eq!(base.rationale, other.rationale);
    }
}
