use super::{Claim, WitnessReport};
use crate::error::{Error, Result};
use crate::network::{Deviation, LayerKind, Network};
use crate::sections::{gaussian_points, ActivationCatalog, ActivationMeta};
use serde::Serialize;

/// Half-width of the sampled input plane.
const PLANE_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DependencyClass {
    NotSurjective,
    NotOpen,
    OpenBijective,
    OpenSurjectiveNonInjective,
}

pub fn classify(meta: &ActivationMeta) -> DependencyClass {
    if !meta.surjective {
        DependencyClass::NotSurjective
    } else if !meta.open {
        DependencyClass::NotOpen
    } else if meta.bijective {
        DependencyClass::OpenBijective
    } else {
        DependencyClass::OpenSurjectiveNonInjective
    }
}

/// `resolution²` points on a seeded affine plane through the input space.
fn plane_grid(dim: usize, resolution: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts = gaussian_points(dim, 3, seed);
    let normalize = |v: &mut Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|x| *x /= n);
    };
    let (mut u, mut w) = (pts.remove(1), pts.remove(1));
    normalize(&mut u);
    normalize(&mut w);
    let centre = pts.remove(0);
    let step = |t: usize| {
        if resolution < 2 {
            0.0
        } else {
            -PLANE_RADIUS + 2.0 * PLANE_RADIUS * t as f64 / (resolution - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(resolution * resolution);
    for a in 0..resolution {
        for b in 0..resolution {
            let (s, t) = (step(a), step(b));
            out.push((0..dim).map(|c| centre[c] + s * u[c] + t * w[c]).collect());
        }
    }
    out
}

/// Classifies the final activation and exhibits a global target no
/// deviation reaches. Unreachability of a constant outside the activation's
/// range is sampled over a `resolution × resolution` grid, so the report
/// only states that no counterexample was found at that resolution.
pub fn dataset_dependency(
    net: &Network,
    catalog: &ActivationCatalog,
    resolution: usize,
    seed: u64,
) -> Result<WitnessReport> {
    let last = net
        .layers()
        .last()
        .ok_or_else(|| Error::Precondition("network has no layers".into()))?;
    let LayerKind::Factors { activations, .. } = &last.kind else {
        return Err(Error::Precondition(format!(
            "last layer is a {} layer and does not factor through inclusion",
            last.kind_name()
        )));
    };
    let act = &activations[0];
    if activations.iter().any(|a| a.name() != act.name()) {
        return Err(Error::Unsupported("final layer mixes activations".into()));
    }
    let registered = catalog.get(act.name())?;
    let meta = registered.meta();
    let class = classify(&meta);
    let mut report = WitnessReport::new(Claim::DatasetDependency, Some(seed));
    report
        .input("activation", act.name())
        .input("resolution", resolution)
        .measure("class", class);
    match class {
        DependencyClass::NotSurjective => constant_target(net, &meta, resolution, seed, &mut report)?,
        DependencyClass::OpenBijective => product_target(net, seed, &mut report)?,
        DependencyClass::NotOpen => {
            return Err(Error::Unsupported(format!(
                "`{}` is surjective but not open; no target construction is implemented",
                act.name()
            )))
        }
        DependencyClass::OpenSurjectiveNonInjective => {
            return Err(Error::Unsupported(format!(
                "`{}` is open, surjective and not injective; no target construction is implemented",
                act.name()
            )))
        }
    }
    Ok(report)
}

fn constant_target(
    net: &Network,
    meta: &ActivationMeta,
    resolution: usize,
    seed: u64,
    report: &mut WitnessReport,
) -> Result<()> {
    let (lo, hi) = meta.range;
    let target = if hi.is_finite() {
        hi + 1.0
    } else if lo.is_finite() {
        lo - 1.0
    } else {
        return Err(Error::Unsupported(
            "non-surjective activation with unbounded range".into(),
        ));
    };
    let dev = Deviation::zero(net.space());
    let mut min_gap = f64::INFINITY;
    let (mut out_lo, mut out_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let grid = plane_grid(net.input_dim(), resolution, seed);
    for x in &grid {
        let trace = net.forward(&dev, x)?;
        let out = trace.output();
        let gap = out.iter().fold(0.0f64, |m, v| m.max((v - target).abs()));
        min_gap = min_gap.min(gap);
        for &v in out {
            out_lo = out_lo.min(v);
            out_hi = out_hi.max(v);
        }
    }
    let found = min_gap <= 1e-6;
    report
        .measure("target", target)
        .measure("grid_points", grid.len())
        .measure("min_distance_to_target", min_gap)
        .measure("output_min", out_lo)
        .measure("output_max", out_hi)
        .measure(
            "finding",
            if found {
                "target attained on the grid".to_string()
            } else {
                format!("no counterexample found at resolution {resolution}")
            },
        )
        .check("target lies outside the activation range", target > hi || target < lo)
        .check("grid never attains the target", !found);
    Ok(())
}

/// Two points never sharing an element of the last internal stage give a
/// coordinate pair across which every reachable pre-activation is
/// separable, while the product target is not.
fn product_target(net: &Network, seed: u64, report: &mut WitnessReport) -> Result<()> {
    let seq = net.sequence();
    let last = net.layers().len() - 1;
    let cover = seq.stage(last);
    let n = net.space().n_points();
    let pair = (0..n)
        .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
        .find(|&(p, q)| !(0..cover.len()).any(|a| cover.members(a).contains(&p) && cover.members(a).contains(&q)))
        .ok_or_else(|| {
            Error::Precondition("every pair of points shares an element of the last internal stage".into())
        })?;
    let offsets: Vec<usize> = net
        .space()
        .fiber_dims()
        .iter()
        .scan(0, |acc, &l| {
            let o = *acc;
            *acc += l;
            Some(o)
        })
        .collect();
    let (i, j) = (offsets[pair.0], offsets[pair.1]);
    let dev = Deviation::zero(net.space());
    let layer = net.layer(last);
    let pre_activation = |x: &[f64]| -> Result<Vec<f64>> {
        let trace = net.forward(&dev, x)?;
        let images = trace.phi_images[last].as_ref().expect("factoring layer");
        let mut acc = vec![0.0; layer.out_dim];
        for &a in &layer.aggregation[0] {
            for (s, v) in acc.iter_mut().zip(&images[a]) {
                *s += v;
            }
        }
        Ok(acc)
    };
    let mut bases = vec![vec![0.0; net.input_dim()], vec![1.0; net.input_dim()]];
    bases.extend(gaussian_points(net.input_dim(), 4, seed));
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for b in &bases {
        let at = |di: f64, dj: f64| {
            let mut y = b.clone();
            y[i] += di;
            y[j] += dj;
            pre_activation(&y)
        };
        let (pp, p0, p1, b0) = (at(1.0, 1.0)?, at(1.0, 0.0)?, at(0.0, 1.0)?, at(0.0, 0.0)?);
        for r in 0..pp.len() {
            worst = worst.max((pp[r] - p0[r] - p1[r] + b0[r]).abs());
            scale = scale.max(pp[r].abs()).max(b0[r].abs());
        }
    }
    // The target's pre-image under F is y_i y_j, whose mixed difference is
    // (b_i + 1)(b_j + 1) - (b_i + 1) b_j - b_i (b_j + 1) + b_i b_j = 1.
    let target_md = 1.0;
    report
        .measure("points", [pair.0 + 1, pair.1 + 1])
        .measure("coordinates", [i + 1, j + 1])
        .measure("network_mixed_difference", worst)
        .measure("target_mixed_difference", target_md)
        .measure("target", format!("F(y{} * y{})", i + 1, j + 1))
        .check(
            "network pre-activations are separable across the pair",
            worst <= 1e-9 * scale,
        )
        .check("product target is not separable", target_md > 1e-9 * scale);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::cnn_demo;
    use crate::sections::Activation;

    #[test]
    fn catalog_classes() {
        let cat = ActivationCatalog::default();
        let class = |n: &str| classify(&cat.get(n).unwrap().meta());
        assert_eq!(class("sigmoid"), DependencyClass::NotSurjective);
        assert_eq!(class("tanh"), DependencyClass::NotSurjective);
        assert_eq!(class("relu"), DependencyClass::NotSurjective);
        assert_eq!(class("identity"), DependencyClass::OpenBijective);
    }

    #[test]
    fn sigmoid_demo_misses_two() {
        let net = cnn_demo(Activation::sigmoid(), 3);
        let r = dataset_dependency(&net, &ActivationCatalog::default(), 20, 1).unwrap();
        assert!(r.verdict, "{r:?}");
        assert_eq!(r.measured_f64("target"), Some(2.0));
        assert!(r.measured_f64("output_max").unwrap() <= 1.0);
    }

    #[test]
    fn identity_demo_is_separable() {
        let net = cnn_demo(Activation::identity(), 3);
        let r = dataset_dependency(&net, &ActivationCatalog::default(), 20, 1).unwrap();
        assert!(r.verdict, "{r:?}");
    }
}
