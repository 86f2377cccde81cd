//! Deterministic families of small covers used by the property checks.

use crate::topology::{make_cover, Cover, MarkedSpace};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SweepCase {
    pub cover: Cover,
    pub k: usize,
}

/// Every multiset of 1 to `max_elements` subsets (empty included) of an
/// `n`-point space, as 0-based memberships.
pub fn all_memberships(n: usize, max_elements: usize) -> Vec<Vec<Vec<usize>>> {
    let subsets: Vec<Vec<usize>> = (0..1usize << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    (1..=max_elements)
        .flat_map(|size| {
            (0..subsets.len())
                .combinations_with_replacement(size)
                .map(|idx| idx.into_iter().map(|i| subsets[i].clone()).collect())
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Exhaustive covers on up to three points with up to five elements, for
/// fibers of dimension 1 and 2 and `k ∈ {1, 2}`, followed by
/// `random_cases` seeded covers on 4 to 6 points.
pub fn cover_sweep(random_cases: usize, seed: u64) -> Vec<SweepCase> {
    let mut out = Vec::new();
    for n in 1..=3 {
        let memberships = all_memberships(n, 5);
        let mut fibers: Vec<Vec<usize>> = vec![vec![1; n], vec![2; n]];
        if n > 1 {
            fibers.push((0..n).map(|i| 1 + i % 2).collect());
        }
        for f in fibers {
            let space = MarkedSpace::new(f, crate::topology::Structure::Abstract).expect("valid");
            for m in &memberships {
                let cover = make_cover(&space, m).expect("valid");
                for k in 1..=2 {
                    out.push(SweepCase {
                        cover: cover.clone(),
                        k,
                    });
                }
            }
        }
    }
    out.extend(random_covers(random_cases, 4..=6, 5, seed));
    out
}

/// Seeded covers with a random point count in `points`, 1 to `max_elements`
/// elements, fibers in {1, 2} and `k ∈ {1, 2}`.
pub fn random_covers(
    count: usize,
    points: std::ops::RangeInclusive<usize>,
    max_elements: usize,
    seed: u64,
) -> Vec<SweepCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(points.clone());
            let fibers: Vec<usize> = (0..n).map(|_| rng.random_range(1..=2)).collect();
            let space = MarkedSpace::new(fibers, crate::topology::Structure::Abstract).expect("valid");
            let e = rng.random_range(1..=max_elements);
            let memberships: Vec<Vec<usize>> = (0..e)
                .map(|_| (0..n).filter(|_| rng.random_bool(0.5)).collect())
                .collect();
            SweepCase {
                cover: make_cover(&space, &memberships).expect("valid"),
                k: rng.random_range(1..=2),
            }
        })
        .collect()
}
