use proptest::prelude::*;
use skysheaf::sections::{
    compose_coord, gaussian_points, mixed_difference, product_counterexample, sections_equal, CoordMap, LinearSection,
    Section, SectionBuilder,
};
use skysheaf::topology::{MarkedSpace, OpenSet, Structure};

fn random_section(d: usize, k: usize, seed: u64) -> Section {
    let w = gaussian_points(d * k, 1, seed).remove(0);
    let mut b = SectionBuilder::new(d);
    let ins = b.inputs();
    let tanh = skysheaf::sections::Activation::tanh();
    let outs = (0..k)
        .map(|r| {
            let lin = b.affine(&ins, &w[r * d..(r + 1) * d], 0.3);
            let act = b.activate(lin, &tanh);
            let prod = b.product(&ins);
            b.affine(&[act, prod], &[1.0, 0.5], 0.0)
        })
        .collect();
    b.finish(outs)
}

proptest! {
    #[test]
    fn restrict_after_extend_is_identity(
        fibers in prop::collection::vec(1usize..=2, 5),
        inner in prop::collection::btree_set(0usize..5, 1..=3),
        extra in prop::collection::btree_set(0usize..5, 0..=2),
        k in 1usize..=2,
        seed in 0u64..1000,
    ) {
        let space = MarkedSpace::new(fibers, Structure::Abstract).unwrap();
        let u = OpenSet::new("u", inner.iter().copied());
        let v = OpenSet::new("v", inner.iter().chain(&extra).copied());
        let s = random_section(space.dim(&u.members), k, seed).on(u.clone());
        let extended = compose_coord(&s, &CoordMap::projection(&space, &v, &u).unwrap()).unwrap();
        let back = compose_coord(&extended, &CoordMap::zero_pad(&space, &u, &v).unwrap()).unwrap();
        let eq = sections_equal(&back, &s, 50, 0.0, seed).unwrap();
        prop_assert!(eq.equal, "deviation {}", eq.max_deviation);
    }

    #[test]
    fn linear_sections_match_matvec(k in 1usize..=3, d in 1usize..=4, seed in 0u64..1000) {
        let w = gaussian_points(k * d, 1, seed).remove(0);
        let lin = LinearSection::new(k, d, w.clone()).unwrap();
        let s = lin.to_section();
        for y in gaussian_points(d, 10, seed + 1) {
            let by_hand: Vec<f64> = (0..k).map(|r| (0..d).map(|c| w[r * d + c] * y[c]).sum()).collect();
            prop_assert_eq!(s.evaluate(&y).unwrap(), by_hand.clone());
            prop_assert_eq!(lin.apply(&y), by_hand);
        }
    }

    #[test]
    fn product_is_not_separable_anywhere(d in 2usize..=5, i in 0usize..5, j in 0usize..5, seed in 0u64..100) {
        prop_assume!(i < d && j < d && i != j);
        let space = MarkedSpace::uniform(d, 1).unwrap();
        let u = OpenSet::new("u", 0..d);
        let h = product_counterexample(&space, &u, 1).unwrap();
        let base = vec![1.0; d];
        prop_assert_eq!(mixed_difference(&h, i, j, &base, 1.0).unwrap(), vec![1.0]);
        // a sum of one-coordinate pieces has no mixed term
        let mut b = SectionBuilder::new(d);
        let ins = b.inputs();
        let tanh = skysheaf::sections::Activation::tanh();
        let pieces: Vec<_> = ins.iter().map(|&x| b.activate(x, &tanh)).collect();
        let total = b.sum(&pieces);
        let sep = b.finish(vec![total]);
        let y = gaussian_points(d, 1, seed).remove(0);
        let md = mixed_difference(&sep, i, j, &y, 0.7).unwrap();
        prop_assert!(md[0].abs() <= 1e-12);
    }
}

#[test]
fn counterexample_needs_two_coordinates() {
    let space = MarkedSpace::uniform(1, 1).unwrap();
    assert!(product_counterexample(&space, &OpenSet::new("u", [0]), 1).is_err());
}

#[test]
fn json_round_trip() {
    let s = random_section(3, 2, 4);
    let catalog = skysheaf::sections::ActivationCatalog::default();
    let back = Section::from_json(&s.to_json(), &catalog).unwrap();
    let y = [0.2, -1.0, 0.5];
    assert_eq!(s.evaluate(&y).unwrap(), back.evaluate(&y).unwrap());
}
