use proptest::prelude::*;
use skysheaf::io::parse_network_doc;
use skysheaf::network::random_factoring_network;
use skysheaf::sections::polynomial::int;
use skysheaf::sections::ActivationCatalog;
use skysheaf::sweep::random_covers;
use skysheaf::topology::{make_cover, MarkedSpace};
use skysheaf::witnesses::{
    adversarial_attack, attack_with_shifts, cosheaf_kernel_decompose, glue_witness, hidden_global_family,
    kernel_witness, pairwise_family, WitnessReport,
};
use skysheaf::Error;

const SUMPOOL: &str = include_str!("../../../fixtures/sumpool.json");

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn attacks_keep_outputs(seed in 0u64..10_000, delta in 0.5f64..50.0, p in 1.0f64..3.0) {
        let net = random_factoring_network(seed).unwrap();
        let (spec, r) = adversarial_attack(&net, 0, p, delta, seed, 20).unwrap();
        prop_assert!(r.verdict, "{:?}", r);
        prop_assert!(spec.displacement() > delta);
        let layer = net.layer(0);
        for inputs in &layer.aggregation {
            for c in 0..layer.out_dim {
                let s = inputs.iter().fold(int(0), |acc, &a| acc + &spec.shifts[a][c]);
                prop_assert_eq!(s, int(0));
            }
        }
    }

    #[test]
    fn glue_round_trips(seed in 0u64..10_000, poly in any::<bool>()) {
        for case in random_covers(3, 2..=6, 5, seed) {
            let locals = hidden_global_family(&case.cover, case.k, poly, seed).unwrap();
            let (_, r) = glue_witness(&case.cover, &locals, 100, 1e-9, seed).unwrap();
            prop_assert!(r.verdict);
        }
    }

    #[test]
    fn kernel_families_decompose(seed in 0u64..10_000) {
        for case in random_covers(3, 2..=6, 5, seed) {
            let (locals, _) = pairwise_family(&case.cover, case.k, seed).unwrap();
            let dec = cosheaf_kernel_decompose(&locals, &case.cover).unwrap();
            prop_assert!(dec.is_antisymmetric());
            prop_assert!(dec.sums_to_zero());
        }
    }
}

fn claim(r: &WitnessReport) -> String {
    r.to_json()["claim"].as_str().unwrap().to_string()
}

#[test]
fn sumpool_attack_has_length_root_eighteen() {
    let net = parse_network_doc(SUMPOOL, &ActivationCatalog::default(), 7).unwrap();
    for seed in 0..10 {
        let (spec, r) = adversarial_attack(&net, 0, 2.0, 4.0, seed, 20).unwrap();
        assert!((spec.displacement() - 18f64.sqrt()).abs() < 1e-12);
        assert_eq!(claim(&r), "thm4.2");
    }
    let odd: Vec<Vec<_>> = [1, 1, 0, 0].iter().map(|&v| vec![int(v)]).collect();
    assert!(matches!(
        attack_with_shifts(&net, 0, 2.0, 1.0, &odd, 0, 5),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn disjoint_pair_glues_to_a_sum() {
    let space = MarkedSpace::uniform(2, 1).unwrap();
    let cover = make_cover(&space, &[vec![0], vec![1]]).unwrap();
    let f1 = skysheaf::sections::Section::affine(1, &[2.0], &[0.0]);
    let f2 = skysheaf::sections::Section::affine(1, &[-1.0], &[0.0]);
    let (glued, r) = glue_witness(&cover, &[f1, f2], 50, 1e-12, 0).unwrap();
    assert!(r.verdict);
    assert_eq!(glued.evaluate(&[3.0, 5.0]).unwrap(), vec![1.0]);
}

#[test]
fn kernel_example_on_three_points() {
    // f1 = y2, f2 = -y2 on {1,2}, {2,3}
    let space = MarkedSpace::uniform(3, 1).unwrap();
    let cover = make_cover(&space, &[vec![0, 1], vec![1, 2]]).unwrap();
    let f1 = skysheaf::sections::Section::affine(2, &[0.0, 1.0], &[0.0]);
    let f2 = skysheaf::sections::Section::affine(2, &[-1.0, 0.0], &[0.0]);
    let (dec, r) = kernel_witness(&cover, &[f1, f2]).unwrap();
    assert!(r.verdict);
    assert_eq!(claim(&r), "rem2.9-kernel");
    assert_eq!(dec.pairs.len(), 2);
    assert!(dec.is_antisymmetric());
}
