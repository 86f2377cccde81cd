//! Constructors for convolutional, recurrent and attention networks.

use super::{Layer, LayerKind, MultiHead, Network};
use crate::error::{Error, Result};
use crate::sections::{Activation, Section, SectionBuilder};
use crate::topology::{CoverSequence, MarkedSpace, Members, Structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const RGB: usize = 3;

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Sum,
    Avg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CnnStage {
    /// Convolution over `size × size` blocks with stride `size` (a 1×1
    /// convolution when `size == 1`). `filter`, when given, holds one
    /// row-major `channels × c_in` matrix per block offset, offsets in
    /// row-major order; otherwise weights are drawn from the seed.
    Conv {
        size: usize,
        channels: usize,
        activation: Activation,
        filter: Option<Vec<f64>>,
    },
    Pool {
        kind: PoolKind,
        size: usize,
        stride: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnPlan {
    pub stages: Vec<CnnStage>,
    /// Output width of the fully connected head.
    pub k: usize,
    pub head: Activation,
}

impl CnnPlan {
    /// Non-overlapping 2×2 pooling stages followed by the head.
    pub fn pooling(kind: PoolKind, levels: usize, k: usize, head: Activation) -> Self {
        Self {
            stages: vec![
                CnnStage::Pool {
                    kind,
                    size: 2,
                    stride: 2
                };
                levels
            ],
            k,
            head,
        }
    }
}

// Stage under construction: a grid of patches with memberships and width.
struct Grid {
    rows: usize,
    cols: usize,
    members: Vec<Members>,
    width: usize,
}

/// Builds a CNN on an `n × n` image with RGB fibers.
///
/// Pooling and strided convolution coarsen the patch grid; the head maps
/// every remaining patch into ℝ^k. When the last stage already is a single
/// patch holding every pixel, it is the global stage and the head is fused
/// into that layer.
pub fn build_cnn(n: usize, plan: &CnnPlan, seed: u64) -> Result<Network> {
    if n < 2 {
        return Err(Error::PlanMismatch("grid side must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = MarkedSpace::grid(n, n, RGB)?;
    let mut grid = Grid {
        rows: n,
        cols: n,
        members: (0..n * n).map(|i| Members::from([i])).collect(),
        width: RGB,
    };
    let mut stages: Vec<Vec<Vec<usize>>> = vec![members_lists(&grid.members)];
    let mut layers = Vec::new();
    for (si, stage) in plan.stages.iter().enumerate() {
        let (size, stride) = match stage {
            CnnStage::Conv { size, .. } => (*size, *size),
            CnnStage::Pool { size, stride, .. } => (*size, *stride),
        };
        let (agg, next) = window(&grid, size, stride).ok_or_else(|| {
            Error::PlanMismatch(format!(
                "stage {si}: {size}x{size}/{stride} does not tile a {}x{} grid",
                grid.rows, grid.cols
            ))
        })?;
        let layer = match stage {
            CnnStage::Conv {
                channels,
                activation,
                filter,
                ..
            } => conv_layer(
                &agg,
                size,
                grid.width,
                *channels,
                activation,
                filter.as_deref(),
                &mut rng,
            )?,
            CnnStage::Pool { kind, .. } => pool_layer(&agg, grid.width, *kind),
        };
        grid = next;
        grid.width = layer.out_dim;
        stages.push(members_lists(&grid.members));
        layers.push(layer);
    }
    let n_points = n * n;
    let fused = grid.members.len() == 1 && grid.members[0].len() == n_points && !layers.is_empty();
    if fused {
        stages.pop();
        let last = layers.pop().expect("nonempty");
        let in_dims = if layers.is_empty() {
            vec![RGB; n_points]
        } else {
            vec![layers.last().expect("nonempty").out_dim; stages.last().expect("nonempty").len()]
        };
        layers.push(fuse_head(last, &in_dims, plan, &mut rng)?);
    } else {
        let m = grid.members.len();
        let w = grid.width;
        let phis = (0..m)
            .map(|a| {
                let bias = if a == 0 {
                    gaussian(&mut rng, plan.k, 0.1)
                } else {
                    vec![0.0; plan.k]
                };
                Section::affine(w, &gaussian(&mut rng, plan.k * w, 0.5), &bias)
            })
            .collect();
        layers.push(Layer::factors_uniform(
            vec![(0..m).collect()],
            plan.k,
            phis,
            plan.head.clone(),
        ));
    }
    stages.push(vec![(0..n_points).collect()]);
    let seq = CoverSequence::from_stages(&space, &stages)?;
    Network::new(seq, layers)
}

fn members_lists(members: &[Members]) -> Vec<Vec<usize>> {
    members.iter().map(|m| m.iter().copied().collect()).collect()
}

fn window(grid: &Grid, size: usize, stride: usize) -> Option<(Vec<Vec<usize>>, Grid)> {
    if size == 0 || stride == 0 || size > grid.rows || size > grid.cols {
        return None;
    }
    if !(grid.rows - size).is_multiple_of(stride) || !(grid.cols - size).is_multiple_of(stride) {
        return None;
    }
    let rows = (grid.rows - size) / stride + 1;
    let cols = (grid.cols - size) / stride + 1;
    let mut agg = Vec::with_capacity(rows * cols);
    let mut members = Vec::with_capacity(rows * cols);
    for a in 0..rows {
        for b in 0..cols {
            let idx: Vec<usize> = (0..size)
                .flat_map(|u| (0..size).map(move |v| (a * stride + u) * grid.cols + b * stride + v))
                .collect();
            members.push(idx.iter().flat_map(|&i| grid.members[i].iter().copied()).collect());
            agg.push(idx);
        }
    }
    Some((
        agg,
        Grid {
            rows,
            cols,
            members,
            width: grid.width,
        },
    ))
}

fn conv_layer(
    agg: &[Vec<usize>],
    size: usize,
    c_in: usize,
    c_out: usize,
    act: &Activation,
    filter: Option<&[f64]>,
    rng: &mut ChaCha8Rng,
) -> Result<Layer> {
    let per = c_out * c_in;
    let offsets = size * size;
    let (weights, bias) = match filter {
        Some(f) if f.len() == per * offsets => (f.to_vec(), vec![0.0; c_out]),
        Some(f) => {
            return Err(Error::PlanMismatch(format!(
                "filter has {} entries, expected {}",
                f.len(),
                per * offsets
            )))
        }
        None => (gaussian(rng, per * offsets, 0.5), gaussian(rng, c_out, 0.1)),
    };
    let n_in: usize = agg.iter().map(Vec::len).sum();
    let mut phis = vec![None; n_in];
    for idx in agg {
        for (o, &a) in idx.iter().enumerate() {
            let b = if o == 0 { bias.clone() } else { vec![0.0; c_out] };
            phis[a] = Some(Section::affine(c_in, &weights[o * per..(o + 1) * per], &b));
        }
    }
    let phis = phis
        .into_iter()
        .map(|p| p.expect("stride == size covers every input once"))
        .collect();
    Ok(Layer::factors_uniform(agg.to_vec(), c_out, phis, act.clone()))
}

fn pool_layer(agg: &[Vec<usize>], width: usize, kind: PoolKind) -> Layer {
    let n_in = agg.iter().flatten().max().map_or(0, |m| m + 1);
    match kind {
        PoolKind::Max => Layer::max(agg.to_vec(), width),
        PoolKind::Sum | PoolKind::Avg => {
            let scale = if kind == PoolKind::Avg {
                1.0 / agg.first().map_or(1, Vec::len) as f64
            } else {
                1.0
            };
            let mut w = vec![0.0; width * width];
            for i in 0..width {
                w[i * width + i] = scale;
            }
            let phi = Section::affine(width, &w, &vec![0.0; width]);
            Layer::factors_uniform(agg.to_vec(), width, vec![phi; n_in], Activation::identity())
        }
    }
}

// Folds the head into a layer whose single output is the global stage.
fn fuse_head(last: Layer, in_dims: &[usize], plan: &CnnPlan, rng: &mut ChaCha8Rng) -> Result<Layer> {
    let w = last.out_dim;
    let head = Section::affine(w, &gaussian(rng, plan.k * w, 0.5), &gaussian(rng, plan.k, 0.1));
    let head_act = Section::activation(plan.k, &plan.head);
    match &last.kind {
        LayerKind::Factors { phis, activations } if activations.iter().all(Activation::is_identity) => {
            // head ∘ Σ φ_α = Σ (linear part ∘ φ_α) + bias, the bias kept on one input
            let linear = Section::affine(w, &head_linear(&head, w, plan.k), &vec![0.0; plan.k]);
            let first = last.aggregation[0][0];
            let phis = phis
                .iter()
                .enumerate()
                .map(|(a, phi)| {
                    if a == first {
                        head.compose(phi)
                    } else {
                        linear.compose(phi)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Layer::factors_uniform(
                last.aggregation.clone(),
                plan.k,
                phis,
                plan.head.clone(),
            ))
        }
        _ => {
            let agg = &last.aggregation[0];
            let sub_dims: Vec<usize> = agg.iter().map(|&a| in_dims[a]).collect();
            let inner = single_output_section(&last, &sub_dims)?;
            let map = head_act.compose(&head.compose(&inner)?)?;
            Ok(Layer {
                aggregation: last.aggregation.clone(),
                out_dim: plan.k,
                kind: LayerKind::Map { maps: vec![map] },
            })
        }
    }
}

fn head_linear(head: &Section, w: usize, k: usize) -> Vec<f64> {
    let zero = head.evaluate(&vec![0.0; w]).expect("shape");
    let mut out = vec![0.0; k * w];
    for c in 0..w {
        let mut e = vec![0.0; w];
        e[c] = 1.0;
        let col = head.evaluate(&e).expect("shape");
        for r in 0..k {
            out[r * w + c] = col[r] - zero[r];
        }
    }
    out
}

// The map of a one-output layer on the concatenation of its aggregated inputs.
fn single_output_section(layer: &Layer, sub_dims: &[usize]) -> Result<Section> {
    let total: usize = sub_dims.iter().sum();
    let agg = &layer.aggregation[0];
    let mut b = SectionBuilder::new(total);
    let ins = b.inputs();
    let mut blocks = Vec::new();
    let mut off = 0;
    for &d in sub_dims {
        blocks.push(ins[off..off + d].to_vec());
        off += d;
    }
    let outs = match &layer.kind {
        LayerKind::Max => (0..layer.out_dim)
            .map(|c| {
                let args: Vec<_> = blocks.iter().map(|blk| blk[c]).collect();
                b.max(&args)
            })
            .collect(),
        LayerKind::Factors { phis, activations } => {
            let images: Vec<Vec<usize>> = agg
                .iter()
                .zip(&blocks)
                .map(|(&a, blk)| b.import(&phis[a], blk))
                .collect();
            (0..layer.out_dim)
                .map(|c| {
                    let args: Vec<_> = images.iter().map(|img| img[c]).collect();
                    let s = b.sum(&args);
                    b.activate(s, &activations[0])
                })
                .collect()
        }
        _ => return Err(Error::Unsupported("cannot fuse this layer kind".into())),
    };
    Ok(b.finish(outs))
}

/// The demo CNN: a 4×4 RGB image, 2×2 sum pooling to four patches, and a
/// fully connected head into ℝ^2 with the given activation.
pub fn cnn_demo(head: Activation, seed: u64) -> Network {
    build_cnn(4, &CnnPlan::pooling(PoolKind::Sum, 1, 2, head), seed).expect("demo plan fits")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecurrentKind {
    /// Growing prefixes `{x_1..x_t}` absorbing one point per stage.
    Rnn,
    /// Sliding windows, starting at the given width and growing by one.
    Lstm { window: usize },
}

/// Cover stages of a recurrent network on `n` ordered points, including the
/// singleton and global stages (0-based memberships).
pub fn rnn_stages(n: usize, kind: RecurrentKind) -> Result<Vec<Vec<Vec<usize>>>> {
    if n < 2 {
        return Err(Error::PlanMismatch("need at least two points".into()));
    }
    let mut stages: Vec<Vec<Vec<usize>>> = vec![(0..n).map(|i| vec![i]).collect()];
    match kind {
        RecurrentKind::Rnn => {
            for t in 1..n {
                let mut s = vec![(0..=t).collect::<Vec<_>>()];
                s.extend((t + 1..n).map(|j| vec![j]));
                stages.push(s);
            }
        }
        RecurrentKind::Lstm { window } => {
            if window < 2 || window > n {
                return Err(Error::PlanMismatch(format!("window {window} must lie in 2..={n}")));
            }
            for size in window..=n {
                stages.push((0..=n - size).map(|i| (i..i + size).collect()).collect());
            }
        }
    }
    Ok(stages)
}

pub fn build_rnn_cover(n: usize, kind: RecurrentKind) -> Result<CoverSequence> {
    let space = MarkedSpace::new(vec![1; n.max(1)], Structure::Line)?;
    CoverSequence::from_stages(&space, &rnn_stages(n, kind)?)
}

/// A recurrent network with scalar inputs and hidden width `hidden` on the
/// covers of [`build_rnn_cover`]. Merging steps use `tanh`; points carried
/// unchanged to the next stage are embedded linearly.
pub fn build_recurrent(n: usize, kind: RecurrentKind, hidden: usize, head: Activation, seed: u64) -> Result<Network> {
    let seq = build_rnn_cover(n, kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tanh = Activation::tanh();
    let mut layers = Vec::new();
    let last_layer = seq.len() - 2;
    for s in 0..seq.len() - 1 {
        let (prev, next) = (seq.stage(s), seq.stage(s + 1));
        let in_w = if s == 0 { 1 } else { hidden };
        let act_for = |merge: bool| {
            if s == last_layer {
                head.clone()
            } else if merge {
                tanh.clone()
            } else {
                Activation::identity()
            }
        };
        let mut aggregation = Vec::with_capacity(next.len());
        let mut activations = Vec::with_capacity(next.len());
        for b in 0..next.len() {
            let agg: Vec<usize> = (0..prev.len())
                .filter(|&a| prev.members(a).is_subset(next.members(b)))
                .collect();
            activations.push(act_for(agg.len() > 1));
            aggregation.push(agg);
        }
        let phis = (0..prev.len())
            .map(|a| {
                let bias = if a + 1 == prev.len() {
                    gaussian(&mut rng, hidden, 0.1)
                } else {
                    vec![0.0; hidden]
                };
                Section::affine(in_w, &gaussian(&mut rng, hidden * in_w, 0.5), &bias)
            })
            .collect();
        layers.push(Layer::factors(aggregation, hidden, phis, activations));
    }
    Network::new(seq, layers)
}

/// A seeded two-layer network whose layers both factor through inclusion:
/// 4 to 8 points with fibers of width 1 or 2, grouped into 2 to 4 blocks
/// (adjacent blocks may share a point), then a global head into ℝ^2.
pub fn random_factoring_network(seed: u64) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=8usize);
    let fibers: Vec<usize> = (0..n).map(|_| rng.random_range(1..=2)).collect();
    let space = MarkedSpace::new(fibers.clone(), Structure::Line)?;
    let blocks = rng.random_range(2..=4usize.min(n - 1));
    let mut cuts: Vec<usize> = rand::seq::index::sample(&mut rng, n - 1, blocks - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(n);
    let overlap = rng.random_bool(0.5);
    let middle: Vec<Vec<usize>> = cuts
        .windows(2)
        .map(|w| {
            // a block may borrow its right neighbour's first point, unless
            // that would make it the whole space
            let grow = overlap && w[1] < n && !(w[0] == 0 && w[1] + 1 == n);
            let end = if grow { w[1] + 1 } else { w[1] };
            (w[0]..end).collect()
        })
        .collect();
    let singles: Vec<Vec<usize>> = (0..n).map(|p| vec![p]).collect();
    let seq = CoverSequence::from_stages(&space, &[singles, middle.clone(), vec![(0..n).collect()]])?;
    let width = rng.random_range(1..=3usize);
    let phis0 = fibers
        .iter()
        .map(|&l| Section::affine(l, &gaussian(&mut rng, width * l, 0.7), &gaussian(&mut rng, width, 0.2)))
        .collect();
    let layer0 = Layer::factors_uniform(middle.clone(), width, phis0, Activation::tanh());
    let phis1 = (0..middle.len())
        .map(|_| Section::affine(width, &gaussian(&mut rng, 2 * width, 0.7), &[0.0, 0.0]))
        .collect();
    let layer1 = Layer::factors_uniform(vec![(0..middle.len()).collect()], 2, phis1, Activation::identity());
    Network::new(seq, vec![layer0, layer1])
}

/// Token positions on the cylinder: point `(i, j)` for `i ∈ 1..=n`,
/// `j ∈ 1..=d`, listed with `i` major. The angle coordinate uses `sin` for
/// even `i` and `cos` for odd `i`; the height is `(2j − 1) / 2d`.
pub fn positional_encoding(n: usize, d: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n * d);
    for i in 1..=n {
        for j in 1..=d {
            let arg = i as f64 / 10000f64.powf(2.0 * j as f64 / d as f64);
            let s = if i % 2 == 0 { arg.sin() } else { arg.cos() };
            out.push((s, (2 * j - 1) as f64 / (2 * d) as f64));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionConfig {
    pub n: usize,
    pub d: usize,
    pub heads: usize,
    pub w: usize,
    pub seed: u64,
    /// Per head `d × w` matrices; drawn from the seed when absent.
    pub queries: Option<Vec<Vec<f64>>>,
    pub keys: Option<Vec<Vec<f64>>>,
    pub values: Option<Vec<Vec<f64>>>,
    /// `hw × d` output projection.
    pub output: Option<Vec<f64>>,
}

impl AttentionConfig {
    pub fn new(n: usize, d: usize, heads: usize, w: usize, seed: u64) -> Self {
        Self {
            n,
            d,
            heads,
            w,
            seed,
            queries: None,
            keys: None,
            values: None,
            output: None,
        }
    }
}

/// A single attention block on `n` tokens of width `d`.
///
/// Stage 0 has one scalar point per token coordinate. Layer 0 gathers each
/// token and appends its value vectors `x_i W_V^h` (the raw token is kept for
/// queries and keys). Layer 1 is multi-head attention, whose outputs all
/// read every token. Layer 2 projects each token with `W_Z` into its block
/// of the global output ℝ^{nd}.
pub fn build_attention(cfg: &AttentionConfig) -> Result<Network> {
    let AttentionConfig { n, d, heads, w, .. } = *cfg;
    if n == 0 || d == 0 || heads == 0 || w == 0 {
        return Err(Error::PlanMismatch("attention dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let per_head = |given: &Option<Vec<Vec<f64>>>, rng: &mut ChaCha8Rng| -> Result<Vec<Vec<f64>>> {
        match given {
            Some(m) if m.len() == heads && m.iter().all(|x| x.len() == d * w) => Ok(m.clone()),
            Some(_) => Err(Error::PlanMismatch("per-head matrices must be d x w".into())),
            None => Ok((0..heads).map(|_| gaussian(rng, d * w, 0.5)).collect()),
        }
    };
    let queries = per_head(&cfg.queries, &mut rng)?;
    let keys = per_head(&cfg.keys, &mut rng)?;
    let values = per_head(&cfg.values, &mut rng)?;
    let wz = match &cfg.output {
        Some(m) if m.len() == heads * w * d => m.clone(),
        Some(_) => return Err(Error::PlanMismatch("output projection must be hw x d".into())),
        None => gaussian(&mut rng, heads * w * d, 0.5),
    };

    let space = MarkedSpace::uniform(n * d, 1)?;
    let tokens: Vec<Vec<usize>> = (0..n).map(|i| (i * d..(i + 1) * d).collect()).collect();
    let all: Vec<usize> = (0..n * d).collect();
    let stages = vec![
        (0..n * d).map(|p| vec![p]).collect(),
        tokens.clone(),
        vec![all.clone(); n],
        vec![all],
    ];
    let seq = CoverSequence::from_stages(&space, &stages)?;

    let token_dim = d + heads * w;
    let gather: Vec<Section> = (0..n * d)
        .map(|p| {
            let j = p % d;
            let mut col = vec![0.0; token_dim];
            col[j] = 1.0;
            for (h, v) in values.iter().enumerate() {
                for c in 0..w {
                    col[d + h * w + c] = v[j * w + c];
                }
            }
            Section::affine(1, &col, &vec![0.0; token_dim])
        })
        .collect();
    let gather = Layer::factors_uniform(tokens, token_dim, gather, Activation::identity());

    let attention = Layer {
        aggregation: vec![(0..n).collect(); n],
        out_dim: heads * w,
        kind: LayerKind::Attention(MultiHead { d, w, queries, keys }),
    };

    let hw = heads * w;
    let project: Vec<Section> = (0..n)
        .map(|i| {
            // row-major (n d) × (h w): block i holds W_Zᵀ
            let mut m = vec![0.0; n * d * hw];
            for r in 0..d {
                for c in 0..hw {
                    m[(i * d + r) * hw + c] = wz[c * d + r];
                }
            }
            Section::affine(hw, &m, &vec![0.0; n * d])
        })
        .collect();
    let project = Layer::factors_uniform(vec![(0..n).collect()], n * d, project, Activation::identity());
    Network::new(seq, vec![gather, attention, project])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Deviation;
    use crate::topology::check_na_axioms;

    #[test]
    fn cnn_covers() {
        let net = build_cnn(4, &CnnPlan::pooling(PoolKind::Sum, 2, 2, Activation::sigmoid()), 1).unwrap();
        let sizes: Vec<usize> = net.sequence().stages().iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![16, 4, 1]);
        let net = build_cnn(2, &CnnPlan::pooling(PoolKind::Max, 1, 1, Activation::identity()), 1).unwrap();
        let sizes: Vec<usize> = net.sequence().stages().iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![4, 1]);
        let r = check_na_axioms(net.sequence()).unwrap();
        assert!(!r.stages[0].locality && r.stages[0].strictness && r.stages[0].distinctness);
    }

    #[test]
    fn patch_memberships() {
        let net = cnn_demo(Activation::sigmoid(), 0);
        let patches = net.sequence().stage(1);
        assert_eq!(patches.members(0), &Members::from([0, 1, 4, 5]));
        assert_eq!(patches.members(3), &Members::from([10, 11, 14, 15]));
    }

    #[test]
    fn identity_filter_copies_pixels() {
        let mut eye = vec![0.0; 9];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        let plan = CnnPlan {
            stages: vec![CnnStage::Conv {
                size: 1,
                channels: 3,
                activation: Activation::identity(),
                filter: Some(eye),
            }],
            k: 1,
            head: Activation::identity(),
        };
        let net = build_cnn(2, &plan, 0).unwrap();
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let t = net.forward(&Deviation::zero(net.space()), &x).unwrap();
        assert_eq!(t.stages[1].concat(), x);
    }

    #[test]
    fn plan_must_tile() {
        let plan = CnnPlan {
            stages: vec![CnnStage::Pool {
                kind: PoolKind::Max,
                size: 3,
                stride: 2,
            }],
            k: 1,
            head: Activation::identity(),
        };
        assert!(matches!(build_cnn(4, &plan, 0), Err(Error::PlanMismatch(_))));
    }

    #[test]
    fn recurrent_covers() {
        let rnn = rnn_stages(3, RecurrentKind::Rnn).unwrap();
        assert_eq!(rnn[1], vec![vec![0, 1], vec![2]]);
        assert_eq!(rnn[2], vec![vec![0, 1, 2]]);
        assert_eq!(rnn_stages(2, RecurrentKind::Rnn).unwrap()[1], vec![vec![0, 1]]);
        let lstm = rnn_stages(4, RecurrentKind::Lstm { window: 2 }).unwrap();
        assert_eq!(lstm[1], vec![vec![0, 1], vec![1, 2], vec![2, 3]]);
        assert_eq!(lstm[2], vec![vec![0, 1, 2], vec![1, 2, 3]]);
        assert_eq!(lstm.len(), 4);
        assert!(build_rnn_cover(1, RecurrentKind::Rnn).is_err());
    }

    #[test]
    fn recurrent_network_runs() {
        for kind in [RecurrentKind::Rnn, RecurrentKind::Lstm { window: 2 }] {
            let net = build_recurrent(4, kind, 3, Activation::tanh(), 2).unwrap();
            let out = net
                .forward(&Deviation::zero(net.space()), &[0.1, -0.2, 0.3, 0.4])
                .unwrap();
            assert_eq!(out.output().len(), 3);
        }
    }

    #[test]
    fn positional_encoding_case_split() {
        let pe = positional_encoding(2, 4);
        let (s, t) = pe[4]; // i = 2, j = 1
        assert!((s - (2.0f64 / 100.0).sin()).abs() < 1e-15);
        assert_eq!(t, 0.125);
        let (s, _) = pe[0]; // i = 1, j = 1
        assert!((s - (0.01f64).cos()).abs() < 1e-15);
    }

    #[test]
    fn zero_queries_average_values() {
        let mut cfg = AttentionConfig::new(3, 2, 1, 2, 4);
        cfg.queries = Some(vec![vec![0.0; 4]]);
        cfg.keys = Some(vec![vec![0.0; 4]]);
        let net = build_attention(&cfg).unwrap();
        let x = [1.0, 2.0, -1.0, 0.5, 3.0, 0.0];
        let t = net.forward(&Deviation::zero(net.space()), &x).unwrap();
        let tokens = &t.stages[1];
        let mean: Vec<f64> = (0..2)
            .map(|c| tokens.iter().map(|v| v[2 + c]).sum::<f64>() / 3.0)
            .collect();
        for out in &t.stages[2] {
            for (a, b) in out.iter().zip(&mean) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
