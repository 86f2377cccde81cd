//! Layered networks over cover sequences.
//!
//! Stage `n` of a network holds one value per element of the `n`-th cover.
//! Stage-0 values live in the fibers ℝ^{l_i}; every later stage has a single
//! width `k_n`. Layer `n` maps stage `n` to stage `n + 1`.

mod builders;

pub use builders::{
    build_attention, build_cnn, build_recurrent, build_rnn_cover, cnn_demo, positional_encoding,
    random_factoring_network, rnn_stages, AttentionConfig, CnnPlan, CnnStage, PoolKind, RecurrentKind,
};

use crate::error::{Error, Result};
use crate::linalg::{rational_to_f64, IntMatrix};
use crate::sections::polynomial::polynomials_of;
use crate::sections::{gaussian_points, Activation, LinearSection, Section, SectionBuilder};
use crate::topology::{CoverSequence, MarkedSpace};
use nalgebra::DMatrix;
use num_traits::Zero;
use serde::Serialize;

/// Multi-head dot-product attention over token values `(x_i, V_i^1, …, V_i^h)`
/// with `x_i ∈ ℝ^d` and `V_i^h ∈ ℝ^w`. Output `i` is
/// `concat_h Σ_j softmax_j(⟨x_i W_Q^h, x_j W_K^h⟩ / √w) V_j^h`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHead {
    pub d: usize,
    pub w: usize,
    /// Per head, row-major `d × w`.
    pub queries: Vec<Vec<f64>>,
    pub keys: Vec<Vec<f64>>,
}

impl MultiHead {
    pub fn heads(&self) -> usize {
        self.queries.len()
    }

    pub fn token_dim(&self) -> usize {
        self.d + self.heads() * self.w
    }

    fn project(&self, x: &[f64], m: &[f64]) -> Vec<f64> {
        (0..self.w)
            .map(|c| (0..self.d).map(|r| x[r] * m[r * self.w + c]).sum())
            .collect()
    }

    /// Attention weights per head, as `n × n` row-stochastic matrices.
    pub fn weights(&self, tokens: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
        let scale = (self.w as f64).sqrt();
        (0..self.heads())
            .map(|h| {
                let q: Vec<Vec<f64>> = tokens
                    .iter()
                    .map(|t| self.project(&t[..self.d], &self.queries[h]))
                    .collect();
                let k: Vec<Vec<f64>> = tokens
                    .iter()
                    .map(|t| self.project(&t[..self.d], &self.keys[h]))
                    .collect();
                q.iter()
                    .map(|qi| {
                        let logits: Vec<f64> = k
                            .iter()
                            .map(|kj| qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() / scale)
                            .collect();
                        softmax(&logits)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn apply(&self, tokens: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let weights = self.weights(tokens);
        (0..tokens.len())
            .map(|i| {
                let mut out = Vec::with_capacity(self.heads() * self.w);
                for (h, wh) in weights.iter().enumerate() {
                    let off = self.d + h * self.w;
                    for c in 0..self.w {
                        out.push(tokens.iter().zip(&wh[i]).map(|(t, a)| a * t[off + c]).sum());
                    }
                }
                out
            })
            .collect()
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind {
    /// Output `β` is `F_β(Σ_{α ∈ Ã_β} φ_α(v_α))`.
    Factors {
        phis: Vec<Section>,
        activations: Vec<Activation>,
    },
    /// Coordinatewise maximum over the aggregated inputs.
    Max,
    /// Output `β` is an arbitrary section of the concatenated inputs of `Ã_β`.
    Map { maps: Vec<Section> },
    /// Output `β` is the attention output of token `β`; every output
    /// aggregates every token.
    Attention(MultiHead),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `aggregation[β]` lists the input elements feeding output `β`.
    pub aggregation: Vec<Vec<usize>>,
    pub out_dim: usize,
    pub kind: LayerKind,
}

impl Layer {
    pub fn factors(
        aggregation: Vec<Vec<usize>>,
        out_dim: usize,
        phis: Vec<Section>,
        activations: Vec<Activation>,
    ) -> Self {
        Self {
            aggregation,
            out_dim,
            kind: LayerKind::Factors { phis, activations },
        }
    }

    /// A factoring layer with the same activation on every output.
    pub fn factors_uniform(
        aggregation: Vec<Vec<usize>>,
        out_dim: usize,
        phis: Vec<Section>,
        activation: Activation,
    ) -> Self {
        let n = aggregation.len();
        Self::factors(aggregation, out_dim, phis, vec![activation; n])
    }

    pub fn max(aggregation: Vec<Vec<usize>>, out_dim: usize) -> Self {
        Self {
            aggregation,
            out_dim,
            kind: LayerKind::Max,
        }
    }

    pub fn is_factoring(&self) -> bool {
        matches!(self.kind, LayerKind::Factors { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            LayerKind::Factors { .. } => "factors",
            LayerKind::Max => "max",
            LayerKind::Map { .. } => "map",
            LayerKind::Attention(_) => "attention",
        }
    }

    pub fn n_outputs(&self) -> usize {
        self.aggregation.len()
    }

    /// 0/1 matrix with rows indexed by outputs and columns by inputs.
    pub fn incidence(&self, n_inputs: usize) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.aggregation.len(), n_inputs);
        for (b, agg) in self.aggregation.iter().enumerate() {
            for &a in agg {
                m.set(b, a, 1);
            }
        }
        m
    }

    /// Applies the layer. `shift[α]`, when given, is added to `φ_α(v_α)`
    /// before aggregation. Returns the outputs and, for factoring layers,
    /// the (shifted) φ-images.
    pub fn apply(&self, inputs: &[Vec<f64>], shift: Option<&[Vec<f64>]>) -> (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>) {
        match &self.kind {
            LayerKind::Factors { phis, activations } => {
                let mut buf = Vec::new();
                let images: Vec<Vec<f64>> = inputs
                    .iter()
                    .zip(phis)
                    .enumerate()
                    .map(|(a, (v, phi))| {
                        let mut img = phi.eval_with(v, &mut buf);
                        if let Some(s) = shift {
                            for (x, m) in img.iter_mut().zip(&s[a]) {
                                *x += m;
                            }
                        }
                        img
                    })
                    .collect();
                let outs = self
                    .aggregation
                    .iter()
                    .zip(activations)
                    .map(|(agg, act)| {
                        let mut acc = vec![0.0; self.out_dim];
                        for &a in agg {
                            for (x, y) in acc.iter_mut().zip(&images[a]) {
                                *x += y;
                            }
                        }
                        acc.iter().map(|&x| act.apply(x)).collect()
                    })
                    .collect();
                (outs, Some(images))
            }
            LayerKind::Max => {
                let outs = self
                    .aggregation
                    .iter()
                    .map(|agg| {
                        (0..self.out_dim)
                            .map(|c| agg.iter().map(|&a| inputs[a][c]).fold(f64::NEG_INFINITY, f64::max))
                            .collect()
                    })
                    .collect();
                (outs, None)
            }
            LayerKind::Map { maps } => {
                let mut buf = Vec::new();
                let outs = self
                    .aggregation
                    .iter()
                    .zip(maps)
                    .map(|(agg, m)| {
                        let cat: Vec<f64> = agg.iter().flat_map(|&a| inputs[a].iter().copied()).collect();
                        m.eval_with(&cat, &mut buf)
                    })
                    .collect();
                (outs, None)
            }
            LayerKind::Attention(mh) => (mh.apply(inputs), None),
        }
    }

    /// The factoring layer as a single section on the concatenated inputs,
    /// assembled from coordinate selections, the φ maps and the activations.
    pub fn factored_section(&self, in_dims: &[usize]) -> Result<Section> {
        let LayerKind::Factors { phis, activations } = &self.kind else {
            return Err(Error::Unsupported(format!(
                "{} layers do not factor through inclusion",
                self.kind_name()
            )));
        };
        let total: usize = in_dims.iter().sum();
        let mut offsets = Vec::with_capacity(in_dims.len());
        let mut acc = 0;
        for &d in in_dims {
            offsets.push(acc);
            acc += d;
        }
        let pulled: Vec<Section> = phis
            .iter()
            .enumerate()
            .map(|(a, phi)| phi.compose(&block_selector(total, offsets[a], in_dims[a])))
            .collect::<Result<_>>()?;
        let parts = self
            .aggregation
            .iter()
            .zip(activations)
            .map(|(agg, act)| {
                let terms: Vec<(f64, &Section)> = agg.iter().map(|&a| (1.0, &pulled[a])).collect();
                let sum = Section::linear_combination(&terms)?;
                Section::activation(self.out_dim, act).compose(&sum)
            })
            .collect::<Result<Vec<_>>>()?;
        Section::stack(&parts)
    }
}

fn block_selector(total: usize, offset: usize, len: usize) -> Section {
    let mut b = SectionBuilder::new(total);
    let outs = (offset..offset + len).map(|i| b.input(i)).collect();
    b.finish(outs)
}

/// Per-point maps `ν_i: ℝ^{l_i} → ℝ^{l_i}`; the network sees `x_i + ν_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub maps: Vec<Section>,
}

impl Deviation {
    pub fn zero(space: &MarkedSpace) -> Self {
        Self {
            maps: space.fiber_dims().iter().map(|&l| Section::zero(l, l)).collect(),
        }
    }

    /// Constant offsets, one vector per point.
    pub fn constant(offsets: &[Vec<f64>]) -> Self {
        Self {
            maps: offsets.iter().map(|o| Section::constant(o.len(), o)).collect(),
        }
    }

    fn check(&self, space: &MarkedSpace) -> Result<()> {
        if self.maps.len() != space.n_points() {
            return Err(Error::DimensionMismatch {
                expected: space.n_points(),
                got: self.maps.len(),
            });
        }
        for (m, &l) in self.maps.iter().zip(space.fiber_dims()) {
            if m.input_dim() != l || m.output_dim() != l {
                return Err(Error::DimensionMismatch {
                    expected: l,
                    got: m.input_dim().max(m.output_dim()),
                });
            }
        }
        Ok(())
    }
}

/// Shifts added to the φ-images of one factoring layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub layer: usize,
    pub shifts: Vec<Vec<f64>>,
}

/// Values of every stage of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub stages: Vec<Vec<Vec<f64>>>,
    /// Per layer, the φ-images of a factoring layer.
    pub phi_images: Vec<Option<Vec<Vec<f64>>>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.stages.last().expect("at least one stage")[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    seq: CoverSequence,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(seq: CoverSequence, layers: Vec<Layer>) -> Result<Self> {
        if layers.len() + 1 != seq.len() {
            return Err(Error::InvalidNetwork(format!(
                "{} stages need {} layers, got {}",
                seq.len(),
                seq.len() - 1,
                layers.len()
            )));
        }
        let net = Self { seq, layers };
        for n in 0..net.layers.len() {
            net.check_layer(n)?;
        }
        Ok(net)
    }

    fn check_layer(&self, n: usize) -> Result<()> {
        let layer = &self.layers[n];
        let (prev, next) = (self.seq.stage(n), self.seq.stage(n + 1));
        let bad = |msg: String| Err(Error::InvalidNetwork(format!("layer {n}: {msg}")));
        if layer.aggregation.len() != next.len() {
            return bad(format!(
                "{} aggregation lists for {} output elements",
                layer.aggregation.len(),
                next.len()
            ));
        }
        for (b, agg) in layer.aggregation.iter().enumerate() {
            if agg.is_empty() {
                return bad(format!("output {b} aggregates nothing"));
            }
            for &a in agg {
                if a >= prev.len() {
                    return bad(format!("output {b} reads missing input {a}"));
                }
                if !prev.members(a).is_subset(next.members(b)) {
                    return bad(format!("input {a} is not contained in output {b}"));
                }
            }
        }
        let dims = self.stage_dims(n);
        match &layer.kind {
            LayerKind::Factors { phis, activations } => {
                if phis.len() != prev.len() || activations.len() != next.len() {
                    return bad("one φ per input and one activation per output required".into());
                }
                for (a, phi) in phis.iter().enumerate() {
                    if phi.input_dim() != dims[a] || phi.output_dim() != layer.out_dim {
                        return bad(format!(
                            "φ_{a} maps ℝ^{} → ℝ^{}, expected ℝ^{} → ℝ^{}",
                            phi.input_dim(),
                            phi.output_dim(),
                            dims[a],
                            layer.out_dim
                        ));
                    }
                }
            }
            LayerKind::Max => {
                if let Some(a) = layer.aggregation.iter().flatten().find(|&&a| dims[a] != layer.out_dim) {
                    return bad(format!("max pooling input {a} has width {}", dims[*a]));
                }
            }
            LayerKind::Map { maps } => {
                if maps.len() != next.len() {
                    return bad("one map per output required".into());
                }
                for (b, (m, agg)) in maps.iter().zip(&layer.aggregation).enumerate() {
                    let d: usize = agg.iter().map(|&a| dims[a]).sum();
                    if m.input_dim() != d || m.output_dim() != layer.out_dim {
                        return bad(format!("map {b} has the wrong shape"));
                    }
                }
            }
            LayerKind::Attention(mh) => {
                if dims.iter().any(|&d| d != mh.token_dim()) || layer.out_dim != mh.heads() * mh.w {
                    return bad("attention shapes do not match the token width".into());
                }
                if next.len() != prev.len() || layer.aggregation.iter().any(|a| a.len() != prev.len()) {
                    return bad("attention outputs one value per token from all tokens".into());
                }
                let per_head = mh.d * mh.w;
                if mh.keys.len() != mh.heads() || mh.queries.iter().chain(&mh.keys).any(|m| m.len() != per_head) {
                    return bad("query/key matrices must be d x w per head".into());
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &MarkedSpace {
        self.seq.space()
    }

    pub fn sequence(&self) -> &CoverSequence {
        &self.seq
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, n: usize) -> &Layer {
        &self.layers[n]
    }

    /// Widths of the values held by the elements of stage `n`.
    pub fn stage_dims(&self, n: usize) -> Vec<usize> {
        if n == 0 {
            self.space().fiber_dims().to_vec()
        } else {
            vec![self.layers[n - 1].out_dim; self.seq.stage(n).len()]
        }
    }

    pub fn input_dim(&self) -> usize {
        self.space().total_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    /// The activation of the last layer when it factors through inclusion.
    pub fn final_activation(&self) -> Option<&Activation> {
        match &self.layers.last()?.kind {
            LayerKind::Factors { activations, .. } => activations.first(),
            _ => None,
        }
    }

    pub fn forward(&self, dev: &Deviation, x: &[f64]) -> Result<Trace> {
        self.forward_perturbed(dev, x, None)
    }

    pub fn forward_perturbed(&self, dev: &Deviation, x: &[f64], pert: Option<&Perturbation>) -> Result<Trace> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        dev.check(self.space())?;
        if let Some(p) = pert {
            self.check_perturbation(p)?;
        }
        let mut stage0 = Vec::with_capacity(self.space().n_points());
        let mut off = 0;
        let mut buf = Vec::new();
        for (i, &l) in self.space().fiber_dims().iter().enumerate() {
            let xi = &x[off..off + l];
            let nu = dev.maps[i].eval_with(xi, &mut buf);
            stage0.push(xi.iter().zip(&nu).map(|(a, b)| a + b).collect());
            off += l;
        }
        let mut stages = vec![stage0];
        let mut phi_images = Vec::with_capacity(self.layers.len());
        for (n, layer) in self.layers.iter().enumerate() {
            let shift = pert.filter(|p| p.layer == n).map(|p| p.shifts.as_slice());
            let (out, images) = layer.apply(stages.last().expect("nonempty"), shift);
            stages.push(out);
            phi_images.push(images);
        }
        Ok(Trace { stages, phi_images })
    }

    fn check_perturbation(&self, p: &Perturbation) -> Result<()> {
        let layer = self
            .layers
            .get(p.layer)
            .ok_or_else(|| Error::InvalidNetwork(format!("no layer {}", p.layer)))?;
        if !layer.is_factoring() {
            return Err(Error::Precondition(format!(
                "layer {} does not factor through inclusion",
                p.layer
            )));
        }
        let n_in = self.seq.stage(p.layer).len();
        if p.shifts.len() != n_in || p.shifts.iter().any(|s| s.len() != layer.out_dim) {
            return Err(Error::DimensionMismatch {
                expected: n_in * layer.out_dim,
                got: p.shifts.iter().map(Vec::len).sum(),
            });
        }
        Ok(())
    }

    /// Compiles the whole network (with deviation) into one section.
    pub fn to_section(&self, dev: &Deviation) -> Result<Section> {
        dev.check(self.space())?;
        let mut b = SectionBuilder::new(self.input_dim());
        let ins = b.inputs();
        let mut values: Vec<Vec<usize>> = Vec::new();
        let mut off = 0;
        for (i, &l) in self.space().fiber_dims().iter().enumerate() {
            let xi = &ins[off..off + l];
            let nu = b.import(&dev.maps[i], xi);
            values.push(xi.iter().zip(&nu).map(|(&a, &c)| b.sum(&[a, c])).collect());
            off += l;
        }
        for layer in &self.layers {
            values = match &layer.kind {
                LayerKind::Factors { phis, activations } => {
                    let images: Vec<Vec<usize>> = values.iter().zip(phis).map(|(v, phi)| b.import(phi, v)).collect();
                    layer
                        .aggregation
                        .iter()
                        .zip(activations)
                        .map(|(agg, act)| {
                            (0..layer.out_dim)
                                .map(|c| {
                                    let args: Vec<_> = agg.iter().map(|&a| images[a][c]).collect();
                                    let s = b.sum(&args);
                                    b.activate(s, act)
                                })
                                .collect()
                        })
                        .collect()
                }
                LayerKind::Max => layer
                    .aggregation
                    .iter()
                    .map(|agg| {
                        (0..layer.out_dim)
                            .map(|c| {
                                let args: Vec<_> = agg.iter().map(|&a| values[a][c]).collect();
                                b.max(&args)
                            })
                            .collect()
                    })
                    .collect(),
                LayerKind::Map { maps } => layer
                    .aggregation
                    .iter()
                    .zip(maps)
                    .map(|(agg, m)| {
                        let cat: Vec<_> = agg.iter().flat_map(|&a| values[a].iter().copied()).collect();
                        b.import(m, &cat)
                    })
                    .collect(),
                LayerKind::Attention(_) => {
                    return Err(Error::Unsupported(
                        "attention layers have no expression form (softmax is not in the node set)".into(),
                    ))
                }
            };
        }
        let out = values.into_iter().next().expect("global stage has one element");
        Ok(b.finish(out))
    }

    /// The end-to-end matrix when every layer factors through inclusion with
    /// linear φ maps and identity activations.
    pub fn linear_matrix(&self) -> Option<LinearSection> {
        let mut acc = LinearSection::identity(self.input_dim());
        for (n, layer) in self.layers.iter().enumerate() {
            let LayerKind::Factors { phis, activations } = &layer.kind else {
                return None;
            };
            if !activations.iter().all(Activation::is_identity) {
                return None;
            }
            let in_dims = self.stage_dims(n);
            let in_off = offsets(&in_dims);
            let blocks: Vec<Vec<f64>> = phis.iter().map(linear_block).collect::<Option<_>>()?;
            let rows = layer.n_outputs() * layer.out_dim;
            let cols: usize = in_dims.iter().sum();
            let mut w = vec![0.0; rows * cols];
            for (b, agg) in layer.aggregation.iter().enumerate() {
                for &a in agg {
                    for r in 0..layer.out_dim {
                        for c in 0..in_dims[a] {
                            w[(b * layer.out_dim + r) * cols + in_off[a] + c] += blocks[a][r * in_dims[a] + c];
                        }
                    }
                }
            }
            let m = LinearSection::new(rows, cols, w).ok()?;
            acc = m.compose(&acc).ok()?;
        }
        Some(acc)
    }
}

fn offsets(dims: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    dims.iter()
        .map(|&d| {
            let o = acc;
            acc += d;
            o
        })
        .collect()
}

// Row-major matrix of a section that is exactly linear (no constant term).
fn linear_block(s: &Section) -> Option<Vec<f64>> {
    let polys = polynomials_of(s).ok()?;
    let d = s.input_dim();
    let mut w = vec![0.0; polys.len() * d];
    for (r, p) in polys.iter().enumerate() {
        for (e, c) in p.terms() {
            if c.is_zero() {
                continue;
            }
            let deg: u32 = e.iter().sum();
            if deg != 1 {
                return None;
            }
            let i = e.iter().position(|&x| x == 1).expect("degree one");
            w[r * d + i] = rational_to_f64(c);
        }
    }
    Some(w)
}

/// Outcome of checking that a layer commutes with its factorization.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FactorsCheck {
    /// Direct evaluation and the assembled section agree.
    Verified { passed: bool, max_deviation: f64 },
    /// The layer is not of factoring kind. The residual of the best affine
    /// fit on the concatenated inputs measures how far it is from any
    /// affine sum-of-pieces form.
    Inapplicable { kind: String, affine_fit_residual: f64 },
}

impl FactorsCheck {
    pub fn passed(&self) -> bool {
        matches!(self, FactorsCheck::Verified { passed: true, .. })
    }
}

pub fn factors_check(layer: &Layer, in_dims: &[usize], n_samples: usize, tol: f64, seed: u64) -> Result<FactorsCheck> {
    let total: usize = in_dims.iter().sum();
    let offs = offsets(in_dims);
    let split =
        |y: &[f64]| -> Vec<Vec<f64>> { in_dims.iter().zip(&offs).map(|(&d, &o)| y[o..o + d].to_vec()).collect() };
    let points = gaussian_points(total, n_samples, seed);
    if !layer.is_factoring() {
        let rows: Vec<Vec<f64>> = points.iter().map(|y| layer.apply(&split(y), None).0.concat()).collect();
        return Ok(FactorsCheck::Inapplicable {
            kind: layer.kind_name().into(),
            affine_fit_residual: affine_fit_residual(&points, &rows),
        });
    }
    let assembled = layer.factored_section(in_dims)?;
    let mut max_deviation: f64 = 0.0;
    let mut buf = Vec::new();
    for y in &points {
        let direct = layer.apply(&split(y), None).0.concat();
        let via = assembled.eval_with(y, &mut buf);
        for (a, b) in direct.iter().zip(&via) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    Ok(FactorsCheck::Verified {
        passed: max_deviation <= tol,
        max_deviation,
    })
}

// Max absolute residual of the least-squares affine fit `inputs -> outputs`.
fn affine_fit_residual(inputs: &[Vec<f64>], outputs: &[Vec<f64>]) -> f64 {
    let n = inputs.len();
    let d = inputs.first().map_or(0, Vec::len);
    let k = outputs.first().map_or(0, Vec::len);
    let a = DMatrix::from_fn(n, d + 1, |r, c| if c == d { 1.0 } else { inputs[r][c] });
    let b = DMatrix::from_fn(n, k, |r, c| outputs[r][c]);
    let svd = a.clone().svd(true, true);
    let Ok(x) = svd.solve(&b, 1e-12) else {
        return f64::INFINITY;
    };
    (a * x - b).amax()
}
