use super::{lp_norm, Claim, WitnessReport};
use crate::error::{Error, Result};
use crate::linalg::{rational_to_f64, IntMatrix};
use crate::network::{Deviation, Network, Perturbation};
use crate::sections::gaussian_points;
use crate::topology::check_stage_pair;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact shifts for the φ-images of one factoring layer; every output's
/// aggregated shifts sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub layer: usize,
    pub p: f64,
    pub delta: f64,
    /// `shifts[α]` is added to `φ_α(v_α)`.
    pub shifts: Vec<Vec<BigRational>>,
    pub null_space_dim: usize,
}

impl AttackSpec {
    pub fn shifts_f64(&self) -> Vec<Vec<f64>> {
        self.shifts
            .iter()
            .map(|m| m.iter().map(rational_to_f64).collect())
            .collect()
    }

    /// `(Σ_α ‖m_α‖_p^p)^{1/p}`, built from the per-input norms.
    pub fn displacement(&self) -> f64 {
        self.shifts_f64()
            .iter()
            .map(|m| lp_norm(m, self.p).powf(self.p))
            .sum::<f64>()
            .powf(1.0 / self.p)
    }

    pub fn perturbation(&self) -> Perturbation {
        Perturbation {
            layer: self.layer,
            shifts: self.shifts_f64(),
        }
    }
}

/// Incidence of `layer` tensored with the identity on its width: rows are
/// `(output, channel)`, columns `(input, channel)`.
fn constraint_matrix(net: &Network, layer: usize) -> IntMatrix {
    let l = net.layer(layer);
    let n_in = net.sequence().stage(layer).len();
    let k = l.out_dim;
    let inc = l.incidence(n_in);
    let mut m = IntMatrix::zeros(inc.rows() * k, n_in * k);
    for b in 0..inc.rows() {
        for a in 0..n_in {
            if inc.get(b, a) != 0 {
                for c in 0..k {
                    m.set(b * k + c, a * k + c, 1);
                }
            }
        }
    }
    m
}

fn check_layer(net: &Network, layer: usize, p: f64, delta: f64) -> Result<()> {
    if layer >= net.layers().len() {
        return Err(Error::Precondition(format!(
            "network has {} layers, asked for layer {layer}",
            net.layers().len()
        )));
    }
    if !(p > 0.0 && p.is_finite()) || !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Precondition("p and δ must be positive and finite".into()));
    }
    let l = net.layer(layer);
    if !l.is_factoring() {
        return Err(Error::Precondition(format!(
            "layer {layer} is a {} layer and does not factor through inclusion",
            l.kind_name()
        )));
    }
    let seq = net.sequence();
    let ax = check_stage_pair(seq.stage(layer), seq.stage(layer + 1), layer + 1, false);
    if !ax.strictness {
        return Err(Error::Precondition(format!("strictness fails at stage {}", layer + 1)));
    }
    if !ax.non_triviality {
        return Err(Error::Precondition(format!(
            "non-triviality fails at stage {}",
            layer + 1
        )));
    }
    Ok(())
}

/// Builds a zero-sum perturbation of the φ-images of factoring layer
/// `layer` whose displacement exceeds `delta`. The seed picks one basis
/// vector of the exact null space and a sign; an integer scale
/// `⌊δ / ‖v‖_p⌋ + 1` lifts it above the threshold.
pub fn adversarial_attack(
    net: &Network,
    layer: usize,
    p: f64,
    delta: f64,
    seed: u64,
    n_inputs: usize,
) -> Result<(AttackSpec, WitnessReport)> {
    check_layer(net, layer, p, delta)?;
    let basis = constraint_matrix(net, layer).null_space();
    if basis.is_empty() {
        return Err(Error::Falsified(format!(
            "incidence of layer {layer} has a trivial kernel"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = rng.random_range(0..basis.len());
    let sign = if rng.random_bool(0.5) { 1 } else { -1 };
    let v = &basis[pick];
    let norm = lp_norm(&v.iter().map(rational_to_f64).collect::<Vec<_>>(), p);
    let scale = (delta / norm).floor().to_i64().unwrap_or(i64::MAX - 1) + 1;
    let factor = BigRational::from_integer(BigInt::from(sign * scale));
    let flat: Vec<BigRational> = v.iter().map(|x| x * &factor).collect();
    attack_from_flat(net, layer, p, delta, flat, basis.len(), seed, n_inputs)
}

/// Runs the attack report for explicit shifts (one vector per input of
/// `layer`), rejecting shifts that do not sum to zero on every output.
pub fn attack_with_shifts(
    net: &Network,
    layer: usize,
    p: f64,
    delta: f64,
    shifts: &[Vec<BigRational>],
    seed: u64,
    n_inputs: usize,
) -> Result<(AttackSpec, WitnessReport)> {
    check_layer(net, layer, p, delta)?;
    let k = net.layer(layer).out_dim;
    let n_in = net.sequence().stage(layer).len();
    if shifts.len() != n_in || shifts.iter().any(|s| s.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: n_in * k,
            got: shifts.iter().map(Vec::len).sum(),
        });
    }
    let null_dim = constraint_matrix(net, layer).null_space().len();
    let flat = shifts.iter().flatten().cloned().collect();
    attack_from_flat(net, layer, p, delta, flat, null_dim, seed, n_inputs)
}

#[allow(clippy::too_many_arguments)]
fn attack_from_flat(
    net: &Network,
    layer: usize,
    p: f64,
    delta: f64,
    flat: Vec<BigRational>,
    null_space_dim: usize,
    seed: u64,
    n_inputs: usize,
) -> Result<(AttackSpec, WitnessReport)> {
    let k = net.layer(layer).out_dim;
    let residual = crate::linalg::apply_rational(&constraint_matrix(net, layer), &flat);
    let zero_sum = residual.iter().all(Zero::is_zero);
    if !zero_sum {
        return Err(Error::Precondition("shifts do not sum to zero on every output".into()));
    }
    let spec = AttackSpec {
        layer,
        p,
        delta,
        shifts: flat.chunks(k).map(<[BigRational]>::to_vec).collect(),
        null_space_dim,
    };
    let flat_f64: Vec<f64> = flat.iter().map(rational_to_f64).collect();
    let direct = lp_norm(&flat_f64, p);
    let displacement = spec.displacement();
    let pert = spec.perturbation();
    let dev = Deviation::zero(net.space());
    let mut output_dev: f64 = 0.0;
    let mut image_gap: f64 = 0.0;
    for x in gaussian_points(net.input_dim(), n_inputs, seed) {
        let clean = net.forward(&dev, &x)?;
        let moved = net.forward_perturbed(&dev, &x, Some(&pert))?;
        for (a, b) in clean.output().iter().zip(moved.output()) {
            output_dev = output_dev.max((a - b).abs());
        }
        let diff: Vec<f64> = clean.phi_images[layer]
            .iter()
            .flatten()
            .zip(moved.phi_images[layer].iter().flatten())
            .flat_map(|(u, w)| u.iter().zip(w).map(|(a, b)| b - a))
            .collect();
        image_gap = image_gap.max((lp_norm(&diff, p) - displacement).abs());
    }
    let mut report = WitnessReport::new(Claim::Attack, Some(seed));
    report
        .input("layer", layer)
        .input("p", p)
        .input("delta", delta)
        .input("random_inputs", n_inputs)
        .measure("null_space_dim", null_space_dim)
        .measure(
            "shifts",
            spec.shifts
                .iter()
                .map(|m| m.iter().map(ToString::to_string).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        )
        .measure("displacement", displacement)
        .measure("displacement_formula_gap", (direct - displacement).abs())
        .measure("output_max_deviation", output_dev)
        .measure("image_displacement_gap", image_gap)
        .check("shifts sum to zero on every output", zero_sum)
        .check("displacement exceeds delta", displacement > delta)
        .check(
            "displacement formula agrees",
            (direct - displacement).abs() <= 1e-12 * direct.max(1.0),
        )
        .check("outputs agree", output_dev <= 1e-9)
        .check(
            "images move by the displacement",
            image_gap <= 1e-9 * displacement.max(1.0),
        );
    Ok((spec, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_network_doc;
    use crate::sections::ActivationCatalog;

    const SUMPOOL: &str = r#"{
        "n_points": 4,
        "covers": [[[1],[2],[3],[4]], [[1,2],[3,4]], [[1,2,3,4]]],
        "layers": [
            {"kind": "factors", "aggregation": [[1,2],[3,4]], "out_dim": 1, "phi": "identity"},
            {"kind": "factors", "aggregation": [[1,2]], "out_dim": 1, "phi": "random", "activation": "sigmoid"}
        ]
    }"#;

    fn sumpool() -> Network {
        parse_network_doc(SUMPOOL, &ActivationCatalog::default(), 7).unwrap()
    }

    #[test]
    fn sumpool_kernel() {
        let net = sumpool();
        assert_eq!(constraint_matrix(&net, 0).null_space().len(), 2);
        let (spec, r) = adversarial_attack(&net, 0, 2.0, 4.0, 7, 20).unwrap();
        assert!(r.verdict, "{r:?}");
        assert!((spec.displacement() - 18f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn explicit_shifts() {
        let net = sumpool();
        let m: Vec<Vec<BigRational>> = [3, -3, 0, 0]
            .iter()
            .map(|&v| vec![crate::sections::polynomial::int(v)])
            .collect();
        let (spec, r) = attack_with_shifts(&net, 0, 2.0, 4.0, &m, 1, 20).unwrap();
        assert!(r.verdict);
        assert!((spec.displacement() - 18f64.sqrt()).abs() < 1e-12);
        assert!(r.measured_f64("output_max_deviation").unwrap() <= 1e-12);
        let bad: Vec<Vec<BigRational>> = [3, 0, 0, 0]
            .iter()
            .map(|&v| vec![crate::sections::polynomial::int(v)])
            .collect();
        assert!(attack_with_shifts(&net, 0, 2.0, 4.0, &bad, 1, 20).is_err());
    }

    #[test]
    fn bijective_aggregation_is_rejected() {
        let doc = r#"{
            "n_points": 2,
            "covers": [[[1],[2]], [[1],[2]], [[1,2]]],
            "layers": [
                {"kind": "factors", "aggregation": [[1],[2]], "out_dim": 1, "phi": "identity"},
                {"kind": "factors", "aggregation": [[1,2]], "out_dim": 1, "phi": "identity"}
            ]
        }"#;
        let net = parse_network_doc(doc, &ActivationCatalog::default(), 0).unwrap();
        match adversarial_attack(&net, 0, 2.0, 1.0, 0, 5) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("strictness")),
            other => panic!("{other:?}"),
        }
    }
}
