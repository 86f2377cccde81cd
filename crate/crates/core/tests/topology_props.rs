use proptest::prelude::*;
use skysheaf::topology::{
    check_stage_pair, check_stages, make_cover, nerve, Cover, CoverSequence, MarkedSpace, Structure,
};
use std::collections::BTreeSet;

fn memberships(n: usize, max_elements: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::btree_set(0..n, 0..=n), 1..=max_elements)
        .prop_map(|sets| sets.into_iter().map(|s| s.into_iter().collect()).collect())
}

fn space(n: usize, fibers: &[usize]) -> MarkedSpace {
    MarkedSpace::new(fibers[..n].to_vec(), Structure::Abstract).unwrap()
}

// Brute-force reading of the four axioms on one stage pair.
fn oracle(prev: &[Vec<usize>], next: &[Vec<usize>], n_points: usize) -> (bool, bool, bool, bool) {
    let sets = |c: &[Vec<usize>]| -> Vec<BTreeSet<usize>> { c.iter().map(|m| m.iter().copied().collect()).collect() };
    let (p, q) = (sets(prev), sets(next));
    let covered: BTreeSet<usize> = q.iter().flatten().copied().collect();
    let locality = covered.len() < n_points;
    let strictness = p.len() > q.len();
    let non_triviality = q.iter().all(|target| {
        (0u32..(1 << p.len()) - 1).any(|mask| {
            let u: BTreeSet<usize> = (0..p.len())
                .filter(|a| mask & (1 << a) != 0)
                .flat_map(|a| p[a].iter().copied())
                .collect();
            &u == target
        })
    });
    let distinctness = (0..q.len()).all(|a| (a + 1..q.len()).all(|b| q[a] != q[b]));
    (locality, strictness, non_triviality, distinctness)
}

proptest! {
    #[test]
    fn stage_pair_matches_brute_force(
        prev in memberships(5, 5),
        next in memberships(5, 4),
    ) {
        let sp = space(5, &[1; 5]);
        let a = make_cover(&sp, &prev).unwrap();
        let b = make_cover(&sp, &next).unwrap();
        let got = check_stage_pair(&a, &b, 1, false);
        let want = oracle(&prev, &next, 5);
        prop_assert_eq!((got.locality, got.strictness, got.non_triviality, got.distinctness), want);
    }

    #[test]
    fn axioms_ignore_fibers_and_geometry(
        prev in memberships(4, 4),
        next in memberships(4, 3),
        fibers in prop::collection::vec(1usize..=3, 4),
    ) {
        let plain = space(4, &[1; 4]);
        let thick = MarkedSpace::new(fibers, Structure::Line).unwrap();
        let report = |sp: &MarkedSpace| {
            let stages = vec![make_cover(sp, &prev).unwrap(), make_cover(sp, &next).unwrap()];
            check_stages(&stages).unwrap()
        };
        prop_assert_eq!(report(&plain), report(&thick));
    }

    #[test]
    fn nerve_faces_shrink_with_more_elements(m in memberships(5, 5)) {
        let sp = space(5, &[1; 5]);
        let cover = make_cover(&sp, &m).unwrap();
        let nv = nerve(&cover, cover.len());
        for (s, members) in nv.faces() {
            for drop in 0..s.len() {
                let mut smaller = s.clone();
                smaller.remove(drop);
                if smaller.is_empty() {
                    continue;
                }
                let bigger = nv.face(&smaller).expect("sub-face present");
                prop_assert!(members.is_subset(bigger));
            }
        }
    }

    #[test]
    fn refinement_keeps_members_inside(m in memberships(6, 4), keep in prop::collection::vec(any::<bool>(), 6)) {
        // intersecting every element with a fixed set is a refinement
        let sp = space(6, &[1; 6]);
        let coarse = make_cover(&sp, &m).unwrap();
        let fine_m: Vec<Vec<usize>> = m.iter().map(|e| e.iter().copied().filter(|&p| keep[p]).collect()).collect();
        let fine = make_cover(&sp, &fine_m).unwrap();
        for a in 0..coarse.len() {
            prop_assert!(fine.members(a).is_subset(coarse.members(a)));
        }
    }
}

fn cover(sp: &MarkedSpace, m: &[&[usize]]) -> Cover {
    make_cover(sp, &m.iter().map(|e| e.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn sequence_needs_global_last_stage() {
    let sp = space(3, &[1; 3]);
    let stages = vec![cover(&sp, &[&[0], &[1], &[2]]), cover(&sp, &[&[0, 1]])];
    assert!(CoverSequence::new(sp.clone(), stages).is_err());
    let ok = vec![cover(&sp, &[&[0], &[1], &[2]]), cover(&sp, &[&[0, 1, 2]])];
    assert!(CoverSequence::new(sp, ok).is_ok());
}

#[test]
fn first_violations_are_recorded() {
    let sp = space(4, &[1; 4]);
    let stages = vec![
        cover(&sp, &[&[0], &[1], &[2], &[3]]),
        cover(&sp, &[&[0, 1], &[0, 1]]),
        cover(&sp, &[&[0, 1, 2, 3]]),
    ];
    let r = check_stages(&stages).unwrap();
    assert_eq!(r.first_violation.distinctness, Some(1));
    // the global stage holds every point, so locality is recorded there
    assert_eq!(r.first_violation.locality, Some(2));
    assert!(!r.verdict);
}
