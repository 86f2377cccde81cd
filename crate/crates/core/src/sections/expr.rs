//! Sections as scalar expression DAGs.

use super::activation::{Activation, ActivationCatalog};
use crate::error::{Error, Result};
use crate::topology::OpenSet;
use serde::{Deserialize, Serialize};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Input(usize),
    Const(f64),
    Affine {
        args: Vec<NodeId>,
        coeffs: Vec<f64>,
        bias: f64,
    },
    Activate {
        arg: NodeId,
        act: Activation,
    },
    Product(Vec<NodeId>),
    Sum(Vec<NodeId>),
    Max(Vec<NodeId>),
}

impl Node {
    fn args(&self) -> &[NodeId] {
        match self {
            Node::Input(_) | Node::Const(_) => &[],
            Node::Affine { args, .. } => args,
            Node::Activate { arg, .. } => std::slice::from_ref(arg),
            Node::Product(a) | Node::Sum(a) | Node::Max(a) => a,
        }
    }
}

/// A map ℝ^{input_dim} → ℝ^{outputs.len()} given by a DAG of scalar nodes.
/// Every node refers only to nodes with smaller ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    domain: Option<OpenSet>,
    input_dim: usize,
    nodes: Vec<Node>,
    outputs: Vec<NodeId>,
}

/// Incremental construction with constant folding.
#[derive(Debug, Clone)]
pub struct SectionBuilder {
    input_dim: usize,
    nodes: Vec<Node>,
}

impl SectionBuilder {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn constant_of(&self, id: NodeId) -> Option<f64> {
        match self.nodes[id] {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn input(&mut self, i: usize) -> NodeId {
        assert!(i < self.input_dim, "input {i} out of range");
        self.push(Node::Input(i))
    }

    pub fn inputs(&mut self) -> Vec<NodeId> {
        (0..self.input_dim).map(|i| self.input(i)).collect()
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        self.push(Node::Const(c))
    }

    /// `bias + Σ coeffs[i]·args[i]`; constant arguments and zero
    /// coefficients are folded away.
    pub fn affine(&mut self, args: &[NodeId], coeffs: &[f64], bias: f64) -> NodeId {
        assert_eq!(args.len(), coeffs.len());
        let mut bias = bias;
        let mut kept_args = Vec::new();
        let mut kept_coeffs = Vec::new();
        for (&a, &c) in args.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            match self.constant_of(a) {
                Some(v) => bias += c * v,
                None => {
                    kept_args.push(a);
                    kept_coeffs.push(c);
                }
            }
        }
        if kept_args.is_empty() {
            return self.constant(bias);
        }
        if kept_args.len() == 1 && kept_coeffs[0] == 1.0 && bias == 0.0 {
            return kept_args[0];
        }
        self.push(Node::Affine {
            args: kept_args,
            coeffs: kept_coeffs,
            bias,
        })
    }

    pub fn activate(&mut self, arg: NodeId, act: &Activation) -> NodeId {
        if act.is_identity() {
            return arg;
        }
        match self.constant_of(arg) {
            Some(c) => self.constant(act.apply(c)),
            None => self.push(Node::Activate { arg, act: act.clone() }),
        }
    }

    pub fn product(&mut self, args: &[NodeId]) -> NodeId {
        let mut factor = 1.0;
        let mut rest = Vec::new();
        for &a in args {
            match self.constant_of(a) {
                Some(c) => factor *= c,
                None => rest.push(a),
            }
        }
        if factor == 0.0 || rest.is_empty() {
            return self.constant(factor);
        }
        let p = if rest.len() == 1 {
            rest[0]
        } else {
            self.push(Node::Product(rest))
        };
        if factor == 1.0 {
            p
        } else {
            self.affine(&[p], &[factor], 0.0)
        }
    }

    pub fn sum(&mut self, args: &[NodeId]) -> NodeId {
        let mut c = 0.0;
        let mut rest = Vec::new();
        for &a in args {
            match self.constant_of(a) {
                Some(v) => c += v,
                None => rest.push(a),
            }
        }
        match (rest.len(), c == 0.0) {
            (0, _) => self.constant(c),
            (1, true) => rest[0],
            (_, true) => self.push(Node::Sum(rest)),
            _ => {
                let ones = vec![1.0; rest.len()];
                self.affine(&rest, &ones, c)
            }
        }
    }

    pub fn max(&mut self, args: &[NodeId]) -> NodeId {
        assert!(!args.is_empty(), "max of nothing");
        if args.len() == 1 {
            return args[0];
        }
        if let Some(vals) = args.iter().map(|&a| self.constant_of(a)).collect::<Option<Vec<_>>>() {
            return self.constant(vals.into_iter().fold(f64::NEG_INFINITY, f64::max));
        }
        self.push(Node::Max(args.to_vec()))
    }

    /// Copies `s` into this builder with its inputs wired to `inputs`;
    /// returns the ids of its outputs.
    pub fn import(&mut self, s: &Section, inputs: &[NodeId]) -> Vec<NodeId> {
        assert_eq!(s.input_dim, inputs.len(), "import arity");
        let mut map = Vec::with_capacity(s.nodes.len());
        for node in &s.nodes {
            let id = match node {
                Node::Input(i) => inputs[*i],
                Node::Const(c) => self.constant(*c),
                Node::Affine { args, coeffs, bias } => {
                    let a: Vec<_> = args.iter().map(|&x| map[x]).collect();
                    self.affine(&a, coeffs, *bias)
                }
                Node::Activate { arg, act } => self.activate(map[*arg], act),
                Node::Product(args) => {
                    let a: Vec<_> = args.iter().map(|&x| map[x]).collect();
                    self.product(&a)
                }
                Node::Sum(args) => {
                    let a: Vec<_> = args.iter().map(|&x| map[x]).collect();
                    self.sum(&a)
                }
                Node::Max(args) => {
                    let a: Vec<_> = args.iter().map(|&x| map[x]).collect();
                    self.max(&a)
                }
            };
            map.push(id);
        }
        s.outputs.iter().map(|&o| map[o]).collect()
    }

    pub fn finish(self, outputs: Vec<NodeId>) -> Section {
        Section {
            domain: None,
            input_dim: self.input_dim,
            nodes: self.nodes,
            outputs,
        }
        .pruned()
    }
}

impl Section {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn domain(&self) -> Option<&OpenSet> {
        self.domain.as_ref()
    }

    /// Attaches the open set this section lives on.
    pub fn on(mut self, domain: OpenSet) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn identity(d: usize) -> Self {
        let mut b = SectionBuilder::new(d);
        let ins = b.inputs();
        b.finish(ins)
    }

    pub fn zero(input_dim: usize, k: usize) -> Self {
        Self::constant(input_dim, &vec![0.0; k])
    }

    pub fn constant(input_dim: usize, values: &[f64]) -> Self {
        let mut b = SectionBuilder::new(input_dim);
        let outs = values.iter().map(|&v| b.constant(v)).collect();
        b.finish(outs)
    }

    /// `y ↦ W y + bias` for a row-major `k × d` matrix.
    pub fn affine(d: usize, weights: &[f64], bias: &[f64]) -> Self {
        let k = bias.len();
        assert_eq!(weights.len(), k * d, "weights must be k x d");
        let mut b = SectionBuilder::new(d);
        let ins = b.inputs();
        let outs = (0..k)
            .map(|r| b.affine(&ins, &weights[r * d..(r + 1) * d], bias[r]))
            .collect();
        b.finish(outs)
    }

    /// Pointwise activation ℝ^d → ℝ^d.
    pub fn activation(d: usize, act: &Activation) -> Self {
        let mut b = SectionBuilder::new(d);
        let ins = b.inputs();
        let outs = ins.iter().map(|&i| b.activate(i, act)).collect();
        b.finish(outs)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Section) -> Result<Section> {
        if inner.output_dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: inner.output_dim(),
            });
        }
        let mut b = SectionBuilder::new(inner.input_dim);
        let ins = b.inputs();
        let mid = b.import(inner, &ins);
        let outs = b.import(self, &mid);
        let mut out = b.finish(outs);
        out.domain = inner.domain.clone();
        Ok(out)
    }

    /// `Σ c_i · s_i` over sections with equal shapes.
    pub fn linear_combination(terms: &[(f64, &Section)]) -> Result<Section> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidSection("empty combination".into()))?;
        let (d, k) = (first.input_dim, first.output_dim());
        for (_, s) in terms {
            if s.input_dim != d || s.output_dim() != k {
                return Err(Error::InvalidSection(format!(
                    "cannot combine a {d}->{k} section with a {}->{} section",
                    s.input_dim,
                    s.output_dim()
                )));
            }
        }
        let mut b = SectionBuilder::new(d);
        let ins = b.inputs();
        let parts: Vec<Vec<NodeId>> = terms.iter().map(|(_, s)| b.import(s, &ins)).collect();
        let coeffs: Vec<f64> = terms.iter().map(|(c, _)| *c).collect();
        let outs = (0..k)
            .map(|r| {
                let args: Vec<_> = parts.iter().map(|p| p[r]).collect();
                b.affine(&args, &coeffs, 0.0)
            })
            .collect();
        let mut out = b.finish(outs);
        out.domain = first.domain.clone();
        Ok(out)
    }

    /// Concatenates the outputs of sections sharing an input space.
    pub fn stack(parts: &[Section]) -> Result<Section> {
        let d = parts
            .first()
            .ok_or_else(|| Error::InvalidSection("nothing to stack".into()))?
            .input_dim;
        let mut b = SectionBuilder::new(d);
        let ins = b.inputs();
        let mut outs = Vec::new();
        for p in parts {
            if p.input_dim != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.input_dim,
                });
            }
            outs.extend(b.import(p, &ins));
        }
        Ok(b.finish(outs))
    }

    pub fn add(&self, other: &Section) -> Result<Section> {
        Self::linear_combination(&[(1.0, self), (1.0, other)])
    }

    pub fn sub(&self, other: &Section) -> Result<Section> {
        Self::linear_combination(&[(1.0, self), (-1.0, other)])
    }

    /// Evaluates at `y`.
    pub fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: y.len(),
            });
        }
        let mut buf = Vec::with_capacity(self.nodes.len());
        Ok(self.eval_with(y, &mut buf))
    }

    /// Evaluation without the dimension check, reusing `buf`.
    pub fn eval_with(&self, y: &[f64], buf: &mut Vec<f64>) -> Vec<f64> {
        buf.clear();
        for node in &self.nodes {
            let v = match node {
                Node::Input(i) => y[*i],
                Node::Const(c) => *c,
                Node::Affine { args, coeffs, bias } => {
                    args.iter().zip(coeffs).fold(*bias, |acc, (&a, &c)| acc + c * buf[a])
                }
                Node::Activate { arg, act } => act.apply(buf[*arg]),
                Node::Product(args) => args.iter().map(|&a| buf[a]).product(),
                Node::Sum(args) => args.iter().map(|&a| buf[a]).sum(),
                Node::Max(args) => args.iter().map(|&a| buf[a]).fold(f64::NEG_INFINITY, f64::max),
            };
            buf.push(v);
        }
        self.outputs.iter().map(|&o| buf[o]).collect()
    }

    /// Input coordinates each output actually depends on.
    pub fn dependencies(&self) -> Vec<Vec<usize>> {
        let mut deps: Vec<Vec<usize>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let d = match node {
                Node::Input(i) => vec![*i],
                other => {
                    let mut acc: Vec<usize> = other.args().iter().flat_map(|&a| deps[a].iter().copied()).collect();
                    acc.sort_unstable();
                    acc.dedup();
                    acc
                }
            };
            deps.push(d);
        }
        self.outputs.iter().map(|&o| deps[o].clone()).collect()
    }

    // Drops nodes not reachable from the outputs and renumbers.
    fn pruned(self) -> Section {
        let mut live = vec![false; self.nodes.len()];
        for &o in &self.outputs {
            live[o] = true;
        }
        for id in (0..self.nodes.len()).rev() {
            if live[id] {
                for &a in self.nodes[id].args() {
                    live[a] = true;
                }
            }
        }
        if live.iter().all(|&l| l) {
            return self;
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (id, node) in self.nodes.into_iter().enumerate() {
            if !live[id] {
                continue;
            }
            let r = |x: &NodeId| remap[*x];
            let node = match node {
                Node::Affine { args, coeffs, bias } => Node::Affine {
                    args: args.iter().map(r).collect(),
                    coeffs,
                    bias,
                },
                Node::Activate { arg, act } => Node::Activate { arg: remap[arg], act },
                Node::Product(a) => Node::Product(a.iter().map(r).collect()),
                Node::Sum(a) => Node::Sum(a.iter().map(r).collect()),
                Node::Max(a) => Node::Max(a.iter().map(r).collect()),
                leaf => leaf,
            };
            remap[id] = nodes.len();
            nodes.push(node);
        }
        Section {
            domain: self.domain,
            input_dim: self.input_dim,
            nodes,
            outputs: self.outputs.iter().map(|&o| remap[o]).collect(),
        }
    }

    /// Checks ids, arities and input indices of a hand-assembled node list.
    pub fn from_nodes(input_dim: usize, nodes: Vec<Node>, outputs: Vec<NodeId>) -> Result<Self> {
        for (id, node) in nodes.iter().enumerate() {
            if let Node::Input(i) = node {
                if *i >= input_dim {
                    return Err(Error::InvalidSection(format!(
                        "node {id} reads input {i} of {input_dim}"
                    )));
                }
            }
            if let Some(&a) = node.args().iter().find(|&&a| a >= id) {
                return Err(Error::InvalidSection(format!(
                    "node {id} refers to node {a}, which is not earlier"
                )));
            }
            match node {
                Node::Affine { args, coeffs, .. } if args.len() != coeffs.len() => {
                    return Err(Error::InvalidSection(format!(
                        "affine node {id} has {} args and {} coefficients",
                        args.len(),
                        coeffs.len()
                    )))
                }
                Node::Max(a) if a.is_empty() => {
                    return Err(Error::InvalidSection(format!("max node {id} has no arguments")))
                }
                _ => {}
            }
        }
        if let Some(&o) = outputs.iter().find(|&&o| o >= nodes.len()) {
            return Err(Error::InvalidSection(format!("output refers to missing node {o}")));
        }
        Ok(Section {
            domain: None,
            input_dim,
            nodes,
            outputs,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| {
                let op = match n {
                    Node::Input(index) => NodeOp::Input { index: *index },
                    Node::Const(value) => NodeOp::Const { value: *value },
                    Node::Affine { args, coeffs, bias } => NodeOp::Affine {
                        args: args.clone(),
                        coeffs: coeffs.clone(),
                        bias: *bias,
                    },
                    Node::Activate { arg, act } => NodeOp::Activate {
                        arg: *arg,
                        activation: act.name().to_string(),
                    },
                    Node::Product(args) => NodeOp::Product { args: args.clone() },
                    Node::Sum(args) => NodeOp::Sum { args: args.clone() },
                    Node::Max(args) => NodeOp::Max { args: args.clone() },
                };
                NodeRepr { id, op }
            })
            .collect();
        let repr = SectionRepr {
            input_dim: self.input_dim,
            domain: self.domain.as_ref().map(|d| d.members.iter().map(|&m| m + 1).collect()),
            nodes,
            outputs: self.outputs.clone(),
        };
        serde_json::to_value(repr).expect("section serializes")
    }

    pub fn from_json(value: &serde_json::Value, catalog: &ActivationCatalog) -> Result<Self> {
        let repr: SectionRepr = serde_json::from_value(value.clone())?;
        let mut nodes = Vec::with_capacity(repr.nodes.len());
        for (pos, n) in repr.nodes.into_iter().enumerate() {
            if n.id != pos {
                return Err(Error::InvalidSection(format!(
                    "node ids must be 0, 1, 2, ... (found {} at position {pos})",
                    n.id
                )));
            }
            nodes.push(match n.op {
                NodeOp::Input { index } => Node::Input(index),
                NodeOp::Const { value } => Node::Const(value),
                NodeOp::Affine { args, coeffs, bias } => Node::Affine { args, coeffs, bias },
                NodeOp::Activate { arg, activation } => Node::Activate {
                    arg,
                    act: catalog.get(&activation)?,
                },
                NodeOp::Product { args } => Node::Product(args),
                NodeOp::Sum { args } => Node::Sum(args),
                NodeOp::Max { args } => Node::Max(args),
            });
        }
        let mut s = Self::from_nodes(repr.input_dim, nodes, repr.outputs)?;
        if let Some(d) = repr.domain {
            if d.contains(&0) {
                return Err(Error::InvalidSection("domain indices are 1-based".into()));
            }
            s.domain = Some(OpenSet::new("domain", d.into_iter().map(|m| m - 1)));
        }
        Ok(s)
    }
}

#[derive(Serialize, Deserialize)]
struct SectionRepr {
    input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<Vec<usize>>,
    nodes: Vec<NodeRepr>,
    outputs: Vec<NodeId>,
}

#[derive(Serialize, Deserialize)]
struct NodeRepr {
    id: NodeId,
    #[serde(flatten)]
    op: NodeOp,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum NodeOp {
    Input {
        index: usize,
    },
    Const {
        value: f64,
    },
    Affine {
        args: Vec<NodeId>,
        coeffs: Vec<f64>,
        bias: f64,
    },
    Activate {
        arg: NodeId,
        activation: String,
    },
    Product {
        args: Vec<NodeId>,
    },
    Sum {
        args: Vec<NodeId>,
    },
    Max {
        args: Vec<NodeId>,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_identity_and_affine() {
        assert_eq!(
            Section::identity(3).evaluate(&[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let s = Section::affine(1, &[2.0], &[1.0]);
        assert_eq!(s.evaluate(&[0.5]).unwrap(), vec![2.0]);
        assert_eq!(
            s.evaluate(&[0.5, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn relu_difference_is_identity() {
        let relu = Activation::relu();
        let mut b = SectionBuilder::new(1);
        let x = b.input(0);
        let pos = b.activate(x, &relu);
        let negx = b.affine(&[x], &[-1.0], 0.0);
        let neg = b.activate(negx, &relu);
        let out = b.affine(&[pos, neg], &[1.0, -1.0], 0.0);
        let s = b.finish(vec![out]);
        for y in [-2.5, 0.0, 3.25] {
            assert_eq!(s.evaluate(&[y]).unwrap(), vec![y]);
        }
    }

    #[test]
    fn constants_fold_through_products() {
        let mut b = SectionBuilder::new(2);
        let x = b.input(0);
        let z = b.constant(0.0);
        let p = b.product(&[x, z]);
        let s = b.finish(vec![p]);
        assert_eq!(s.nodes(), &[Node::Const(0.0)]);
    }

    #[test]
    fn compose_and_combine() {
        let double = Section::affine(1, &[2.0], &[0.0]);
        let shift = Section::affine(1, &[1.0], &[3.0]);
        let c = double.compose(&shift).unwrap();
        assert_eq!(c.evaluate(&[1.0]).unwrap(), vec![8.0]);
        let diff = double.sub(&shift).unwrap();
        assert_eq!(diff.evaluate(&[1.0]).unwrap(), vec![-2.0]);
        assert!(double.compose(&Section::identity(2)).is_err());
    }

    #[test]
    fn dependencies_track_inputs() {
        let s = Section::affine(3, &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0], &[0.0, 1.0]);
        assert_eq!(s.dependencies(), vec![vec![0, 2], vec![]]);
    }

    #[test]
    fn json_round_trip() {
        let mut b = SectionBuilder::new(2);
        let ins = b.inputs();
        let p = b.product(&ins);
        let t = b.activate(p, &Activation::tanh());
        let m = b.max(&[t, ins[0]]);
        let s = b.finish(vec![m, p]).on(OpenSet::new("u", [0, 2]));
        let json = s.to_json();
        let back = Section::from_json(&json, &ActivationCatalog::default()).unwrap();
        assert_eq!(back.evaluate(&[0.3, -1.2]).unwrap(), s.evaluate(&[0.3, -1.2]).unwrap());
        assert_eq!(back.domain().unwrap().members, s.domain().unwrap().members);
    }

    #[test]
    fn rejects_cycles_and_unknown_activations() {
        let bad = Section::from_nodes(1, vec![Node::Sum(vec![0])], vec![0]);
        assert!(matches!(bad, Err(Error::InvalidSection(_))));
        let json = serde_json::json!({
            "input_dim": 1,
            "nodes": [{"id": 0, "op": "input", "index": 0},
                      {"id": 1, "op": "activate", "arg": 0, "activation": "swish"}],
            "outputs": [1]
        });
        assert_eq!(
            Section::from_json(&json, &ActivationCatalog::default()),
            Err(Error::UnregisteredActivation("swish".into()))
        );
    }
}
