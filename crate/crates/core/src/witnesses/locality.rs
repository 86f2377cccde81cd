use super::{Claim, WitnessReport};
use crate::error::{Error, Result};
use crate::network::{Deviation, LayerKind, Network};
use crate::sections::{
    compose_coord, gaussian_points, mixed_difference, product_counterexample, sections_equal, CoordMap, Section,
    SectionBuilder,
};
use crate::topology::{Cover, OpenSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn require_missing_points(cover: &Cover) -> Result<OpenSet> {
    let union = cover.union_set();
    if let Some(a) = (0..cover.len()).find(|&a| cover.members(a) == &union.members) {
        return Err(Error::Precondition(format!(
            "element {} contains every point of the union",
            a + 1
        )));
    }
    Ok(union)
}

/// `Σ y` copied into `k` outputs.
fn coordinate_sum(d: usize, k: usize) -> Section {
    let mut b = SectionBuilder::new(d);
    let ins = b.inputs();
    let s = b.sum(&ins);
    b.finish(vec![s; k])
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// Restriction checks for `ghost` and for the pair `base`, `base + ghost`.
fn record_restrictions(
    report: &mut WitnessReport,
    cover: &Cover,
    union: &OpenSet,
    ghost: &Section,
    base: &Section,
    samples: usize,
    seed: u64,
) -> Result<()> {
    let space = cover.space();
    let d = space.dim(&union.members);
    let k = ghost.output_dim();
    let shifted = base.add(ghost)?;
    let mut ghost_dev: f64 = 0.0;
    let mut pair_dev: f64 = 0.0;
    for a in 0..cover.len() {
        let pad = CoordMap::zero_pad(space, cover.element(a), union)?;
        let restricted = compose_coord(ghost, &pad)?;
        let zero = Section::zero(restricted.input_dim(), k);
        ghost_dev = ghost_dev.max(sections_equal(&restricted, &zero, samples, 0.0, seed)?.max_deviation);
        let rg = compose_coord(base, &pad)?;
        let rgh = compose_coord(&shifted, &pad)?;
        pair_dev = pair_dev.max(sections_equal(&rg, &rgh, samples, 0.0, seed)?.max_deviation);
    }
    let ones = vec![1.0; d];
    let ghost_ones = ghost.evaluate(&ones)?;
    let ghost_norm = ghost_ones.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let global_gap = sup_diff(&base.evaluate(&ones)?, &shifted.evaluate(&ones)?);
    report
        .measure("restriction_max_deviation", ghost_dev)
        .measure("counterexample_at_ones_sup_norm", ghost_norm)
        .measure("pair_restriction_max_deviation", pair_dev)
        .measure("pair_global_gap_at_ones", global_gap)
        .check("counterexample restricts to zero on every element", ghost_dev == 0.0)
        .check("counterexample at (1,...,1) has sup norm 1", ghost_norm == 1.0)
        .check("base and base + counterexample agree on every element", pair_dev == 0.0)
        .check("base and base + counterexample differ globally", global_gap > 0.0);
    Ok(())
}

/// The product counterexample on the union of `cover`, with a report showing
/// it restricts to zero on every element. `base` defaults to the coordinate sum.
pub fn locality_witness(
    cover: &Cover,
    k: usize,
    base: Option<&Section>,
    samples: usize,
    seed: u64,
) -> Result<(Section, WitnessReport)> {
    let union = require_missing_points(cover)?;
    let space = cover.space();
    let d = space.dim(&union.members);
    let ghost = product_counterexample(space, &union, k)?;
    let default_base = coordinate_sum(d, k);
    let base = base.unwrap_or(&default_base);
    if base.input_dim() != d || base.output_dim() != k {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: base.input_dim(),
        });
    }
    let mut report = WitnessReport::new(Claim::Locality, Some(seed));
    report
        .input("cover", one_based(cover))
        .input("k", k)
        .input("samples", samples);
    record_restrictions(&mut report, cover, &union, &ghost, base, samples, seed)?;
    Ok((ghost, report))
}

fn one_based(cover: &Cover) -> Vec<Vec<usize>> {
    (0..cover.len())
        .map(|a| cover.members(a).iter().map(|p| p + 1).collect())
        .collect()
}

/// A seeded section `Σ_α g_α ∘ proj_α` on the union of `cover`, each `g_α`
/// mixing a `tanh` layer with the product of its own coordinates.
pub fn separable_section(cover: &Cover, k: usize, seed: u64) -> Result<Section> {
    let space = cover.space();
    let union = cover.union_set();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { 0.5 * rng.sample::<f64, _>(StandardNormal) };
    let mut terms = Vec::with_capacity(cover.len());
    for a in 0..cover.len() {
        let el = cover.element(a);
        let d = space.dim(&el.members);
        let mut b = SectionBuilder::new(d);
        let ins = b.inputs();
        let prod = b.product(&ins);
        let tanh = crate::sections::Activation::tanh();
        let outs = (0..k)
            .map(|_| {
                let coeffs: Vec<f64> = (0..d).map(|_| normal()).collect();
                let lin = b.affine(&ins, &coeffs, normal());
                let act = b.activate(lin, &tanh);
                b.affine(&[act, prod], &[1.0, normal()], 0.0)
            })
            .collect();
        let local = b.finish(outs);
        terms.push(compose_coord(&local, &CoordMap::projection(space, &union, el)?)?);
    }
    let weighted: Vec<(f64, &Section)> = terms.iter().map(|t| (1.0, t)).collect();
    Ok(Section::linear_combination(&weighted)?.on(union))
}

/// Two points of the union that share no element, as coordinate indices
/// into the union's fiber space.
fn cross_pair(cover: &Cover) -> Option<(usize, usize, usize, usize)> {
    let union = cover.union_set();
    let pts: Vec<usize> = union.members.iter().copied().collect();
    let space = cover.space();
    for (x, &p) in pts.iter().enumerate() {
        for &q in &pts[x + 1..] {
            let shared = (0..cover.len()).any(|a| cover.members(a).contains(&p) && cover.members(a).contains(&q));
            if !shared {
                let i = space.coord_range(&union.members, p)?.start;
                let j = space.coord_range(&union.members, q)?.start;
                return Some((p, q, i, j));
            }
        }
    }
    None
}

/// Mixed differences across a coordinate pair no element contains: 1 for the
/// product counterexample, zero for `n_separable` seeded separable sections.
pub fn surjectivity_witness(cover: &Cover, k: usize, n_separable: usize, seed: u64) -> Result<WitnessReport> {
    let union = require_missing_points(cover)?;
    let (p, q, i, j) =
        cross_pair(cover).ok_or_else(|| Error::Precondition("every pair of points shares an element".into()))?;
    let space = cover.space();
    let d = space.dim(&union.members);
    let ghost = product_counterexample(space, &union, k)?;
    let ones = vec![1.0; d];
    let ghost_md = mixed_difference(&ghost, i, j, &ones, 1.0)?;
    let ghost_md_max = ghost_md.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sep_max: f64 = 0.0;
    for s in 0..n_separable as u64 {
        let sec = separable_section(cover, k, seed.wrapping_add(s))?;
        for base in std::iter::once(ones.clone()).chain(gaussian_points(d, 2, seed ^ (s + 1))) {
            for v in mixed_difference(&sec, i, j, &base, 1.0)? {
                sep_max = sep_max.max(v.abs());
            }
        }
    }
    let mut report = WitnessReport::new(Claim::Surjectivity, Some(seed));
    report
        .input("cover", one_based(cover))
        .input("k", k)
        .input("separable_samples", n_separable)
        .input("points", [p + 1, q + 1])
        .measure("counterexample_mixed_difference", ghost_md_max)
        .measure("separable_max_mixed_difference", sep_max)
        .check("counterexample mixed difference is 1", ghost_md.iter().all(|&v| v == 1.0))
        .check("separable mixed differences vanish", sep_max <= 1e-12);
    Ok(report)
}

/// Non-unique explanation for a network: its output section, with and
/// without the counterexample added, restricts identically to every element
/// of the last internal stage. For networks that begin with max pooling,
/// also runs [`pooled_collision`].
pub fn non_unique_explanation(net: &Network, samples: usize, seed: u64) -> Result<(Section, WitnessReport)> {
    let seq = net.sequence();
    if seq.len() < 2 {
        return Err(Error::Precondition("network has no internal stage".into()));
    }
    let cover = seq.stage(seq.len() - 2);
    let union = require_missing_points(cover)?;
    let base = net.to_section(&Deviation::zero(net.space()))?;
    let ghost = product_counterexample(net.space(), &union, net.output_dim())?;
    let mut report = WitnessReport::new(Claim::NonUniqueExplanation, Some(seed));
    report
        .input("stage", seq.len() - 2)
        .input("cover", one_based(cover))
        .input("samples", samples);
    record_restrictions(&mut report, cover, &union, &ghost, &base, samples, seed)?;
    if let Some(c) = pooled_collision(net, seed)? {
        report
            .measure("collision_input_distance", c.input_distance)
            .measure("collision_pooled_deviation", c.pooled_deviation)
            .measure("collision_output_deviation", c.output_deviation)
            .check("permuted blocks differ as images", c.input_distance > 0.0)
            .check("permuted blocks share pooled features", c.pooled_deviation == 0.0)
            .check("permuted blocks share outputs", c.output_deviation == 0.0);
    }
    Ok((ghost, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collision {
    pub image: Vec<f64>,
    pub rearranged: Vec<f64>,
    pub input_distance: f64,
    pub pooled_deviation: f64,
    pub output_deviation: f64,
}

/// For a network whose first layer max-pools disjoint blocks of points,
/// rotates the point values within every block of a seeded image. The two
/// images differ but have identical pooled features. `None` when the first
/// layer is not such a pooling layer.
pub fn pooled_collision(net: &Network, seed: u64) -> Result<Option<Collision>> {
    let Some(layer) = net.layers().first() else {
        return Ok(None);
    };
    if !matches!(layer.kind, LayerKind::Max) {
        return Ok(None);
    }
    let mut seen = vec![false; net.space().n_points()];
    for agg in &layer.aggregation {
        for &a in agg {
            if std::mem::replace(&mut seen[a], true) {
                return Ok(None);
            }
        }
    }
    if layer.aggregation.iter().all(|a| a.len() < 2) {
        return Ok(None);
    }
    let fibers = net.space().fiber_dims();
    let offsets: Vec<usize> = fibers
        .iter()
        .scan(0, |acc, &l| {
            let o = *acc;
            *acc += l;
            Some(o)
        })
        .collect();
    let image = gaussian_points(net.input_dim(), 1, seed).remove(0);
    let mut rearranged = image.clone();
    for agg in &layer.aggregation {
        for (t, &a) in agg.iter().enumerate() {
            let from = agg[(t + 1) % agg.len()];
            let (oa, of) = (offsets[a], offsets[from]);
            rearranged[oa..oa + fibers[a]].copy_from_slice(&image[of..of + fibers[from]]);
        }
    }
    let dev = Deviation::zero(net.space());
    let clean = net.forward(&dev, &image)?;
    let moved = net.forward(&dev, &rearranged)?;
    let pooled_deviation = clean.stages[1]
        .iter()
        .zip(&moved.stages[1])
        .map(|(a, b)| sup_diff(a, b))
        .fold(0.0, f64::max);
    Ok(Some(Collision {
        input_distance: sup_diff(&image, &rearranged),
        pooled_deviation,
        output_deviation: sup_diff(clean.output(), moved.output()),
        image,
        rearranged,
    }))
}
