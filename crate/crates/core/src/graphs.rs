//! Graphs as 1-complexes: the directed double cover, unfolding trees,
//! 1-WL colour refinement, and comparisons of depth-truncated covers.

use crate::error::{Error, Result};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// A simple undirected graph with optional small-integer node labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    labels: Vec<u32>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Nodes are `0..n`; each edge is stored as `(min, max)`.
    pub fn new(n: usize, edges: &[(usize, usize)], labels: Option<Vec<u32>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) outside {n} nodes")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {}", u + 1)));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        adj.iter_mut().for_each(|a| a.sort_unstable());
        let labels = labels.unwrap_or_else(|| vec![0; n]);
        if labels.len() != n {
            return Err(Error::InvalidGraph(format!("{} labels for {n} nodes", labels.len())));
        }
        Ok(Self {
            n,
            edges: seen.into_iter().collect(),
            labels,
            adj,
        })
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges, None).expect("cycles with n >= 3 are simple")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges, None).expect("paths are simple")
    }

    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let edges: Vec<_> = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(u, v)| (u + self.n, v + self.n)))
            .collect();
        let labels = self.labels.iter().chain(&other.labels).copied().collect();
        Graph::new(self.n + other.n, &edges, Some(labels)).expect("union of simple graphs")
    }

    /// The graph with node `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        let mut check = perm.to_vec();
        check.sort_unstable();
        if perm.len() != self.n || check.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(Error::InvalidGraph("relabelling is not a permutation".into()));
        }
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        let mut labels = vec![0; self.n];
        for (v, &p) in perm.iter().enumerate() {
            labels[p] = self.labels[v];
        }
        Graph::new(self.n, &edges, Some(labels))
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::InvalidGraph(format!("node {} outside {} nodes", v + 1, self.n)))
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    labels: Option<Vec<u32>>,
}

/// Reads `{"n_nodes", "edges", "labels"?}` (1-based) or, when the text is
/// not JSON, a whitespace edge list with one `u v` pair per line. Edge
/// lists may declare isolated nodes with a `nodes N` line; `#` starts a
/// comment.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let one_based = |(u, v): (usize, usize)| -> Result<(usize, usize)> {
        if u == 0 || v == 0 {
            Err(Error::Parse("node indices are 1-based".into()))
        } else {
            Ok((u - 1, v - 1))
        }
    };
    if text.trim_start().starts_with('{') {
        let doc: GraphDoc = serde_json::from_str(text)?;
        let edges = doc.edges.into_iter().map(one_based).collect::<Result<Vec<_>>>()?;
        return Graph::new(doc.n_nodes, &edges, doc.labels);
    }
    let mut declared = 0;
    let mut edges = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("line {}: `{s}` is not a node index", no + 1)))
        };
        match fields.as_slice() {
            ["nodes", n] => declared = num(n)?,
            [u, v] => edges.push(one_based((num(u)?, num(v)?))?),
            _ => return Err(Error::Parse(format!("line {}: expected `u v`", no + 1))),
        }
    }
    let n = edges
        .iter()
        .map(|&(u, v)| u.max(v) + 1)
        .max()
        .unwrap_or(0)
        .max(declared);
    Graph::new(n, &edges, None)
}

/// What an arc of the double cover lies over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    /// Index into the base graph's edge list.
    Edge(usize),
    /// The unit self-loop at a node.
    Loop(usize),
}

/// The directed graph over the self-looped graph: each undirected edge lifts
/// to its two orientations and each self-loop to a single arc, so the
/// projection has degree 2 away from the nodes and is ramified at them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DoubleCover {
    pub n_nodes: usize,
    pub arcs: Vec<(usize, usize)>,
    /// `projection[i]` is the base cell under `arcs[i]`.
    pub projection: Vec<Base>,
}

impl DoubleCover {
    pub fn loop_lifts(&self) -> usize {
        self.projection.iter().filter(|b| matches!(b, Base::Loop(_))).count()
    }

    pub fn edge_arcs(&self) -> usize {
        self.arcs.len() - self.loop_lifts()
    }

    /// Number of arcs over each base cell, edges first then loops.
    pub fn fiber_sizes(&self, base: &Graph) -> (Vec<usize>, Vec<usize>) {
        let mut edges = vec![0; base.edges().len()];
        let mut loops = vec![0; base.n_nodes()];
        for b in &self.projection {
            match *b {
                Base::Edge(e) => edges[e] += 1,
                Base::Loop(v) => loops[v] += 1,
            }
        }
        (edges, loops)
    }
}

pub fn double_cover(g: &Graph) -> DoubleCover {
    let mut arcs = Vec::with_capacity(2 * g.edges.len() + g.n);
    let mut projection = Vec::with_capacity(arcs.capacity());
    for (i, &(u, v)) in g.edges.iter().enumerate() {
        arcs.extend([(u, v), (v, u)]);
        projection.extend([Base::Edge(i); 2]);
    }
    for v in 0..g.n {
        arcs.push((v, v));
        projection.push(Base::Loop(v));
    }
    DoubleCover {
        n_nodes: g.n,
        arcs,
        projection,
    }
}

/// A rooted tree of walks: the children of a copy of node `v` are copies of
/// every neighbour of `v`, including the one it was reached from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnfoldingTree {
    pub depth: usize,
    /// Underlying graph node of each tree vertex; vertex 0 is the root.
    pub node: Vec<usize>,
    pub label: Vec<u32>,
    pub children: Vec<Vec<usize>>,
}

impl UnfoldingTree {
    pub fn root(&self) -> usize {
        self.node[0]
    }

    pub fn len(&self) -> usize {
        self.node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node.is_empty()
    }

    /// Number of tree vertices at each depth.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.depth + 1];
        let mut level = vec![0usize];
        for s in sizes.iter_mut() {
            *s = level.len();
            level = level.iter().flat_map(|&t| self.children[t].iter().copied()).collect();
        }
        sizes
    }
}

pub fn unfolding_tree(g: &Graph, v: usize, k: usize) -> Result<UnfoldingTree> {
    g.check_node(v)?;
    let mut t = UnfoldingTree {
        depth: k,
        node: vec![v],
        label: vec![g.labels[v]],
        children: vec![Vec::new()],
    };
    let mut frontier = vec![0usize];
    for _ in 0..k {
        let mut next = Vec::new();
        for &parent in &frontier {
            for &w in g.neighbors(t.node[parent]) {
                let id = t.node.len();
                t.node.push(w);
                t.label.push(g.labels[w]);
                t.children.push(Vec::new());
                t.children[parent].push(id);
                next.push(id);
            }
        }
        frontier = next;
    }
    Ok(t)
}

fn ahu(t: &UnfoldingTree, v: usize) -> Vec<u8> {
    let mut kids: Vec<Vec<u8>> = t.children[v].iter().map(|&c| ahu(t, c)).collect();
    kids.sort_unstable();
    let mut out = t.label[v].to_string().into_bytes();
    out.push(b'(');
    kids.iter().for_each(|k| out.extend_from_slice(k));
    out.push(b')');
    out
}

/// AHU encoding: `label(` followed by the sorted child codes and `)`.
/// Equal codes exactly for isomorphic labelled rooted trees.
pub fn tree_canonical(t: &UnfoldingTree) -> Vec<u8> {
    ahu(t, 0)
}

/// Per-round colours of 1-WL refinement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WlColoring {
    pub rounds: usize,
    /// `colors[t][v]`, for `t` in `0..=rounds`.
    pub colors: Vec<Vec<u32>>,
    /// First round whose partition equals the previous one.
    pub stable_round: usize,
}

impl WlColoring {
    pub fn partition(&self, round: usize) -> Vec<usize> {
        partition_of(&self.colors[round])
    }
}

/// Each node's class as the index of the first node sharing its key.
pub fn partition_of<T: Eq + std::hash::Hash>(keys: &[T]) -> Vec<usize> {
    let mut first: HashMap<&T, usize> = HashMap::new();
    keys.iter()
        .enumerate()
        .map(|(v, k)| *first.entry(k).or_insert(v))
        .collect()
}

// Sorted distinct keys get consecutive ids, so the map is injective and
// independent of node order.
fn reindex<T: Ord + Clone>(keys: &[T]) -> Vec<u32> {
    let dict: BTreeMap<T, u32> = keys
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, i as u32))
        .collect();
    keys.iter().map(|k| dict[k]).collect()
}

fn wl_step(g: &Graph, colors: &[u32]) -> Vec<u32> {
    let sigs: Vec<(u32, Vec<u32>)> = (0..g.n)
        .map(|v| {
            let mut ns: Vec<u32> = g.neighbors(v).iter().map(|&w| colors[w]).collect();
            ns.sort_unstable();
            (colors[v], ns)
        })
        .collect();
    reindex(&sigs)
}

pub fn wl_refine(g: &Graph, rounds: usize) -> WlColoring {
    let mut colors = vec![reindex(&g.labels)];
    let mut stable_round = None;
    let mut t = 0;
    while t < rounds || stable_round.is_none() {
        let next = wl_step(g, &colors[t]);
        if stable_round.is_none() && partition_of(&next) == partition_of(&colors[t]) {
            stable_round = Some(t + 1);
        }
        colors.push(next);
        t += 1;
    }
    colors.truncate(rounds + 1);
    WlColoring {
        rounds,
        colors,
        stable_round: stable_round.expect("refinement stabilises"),
    }
}

/// Whether the round-`k` WL partition equals the partition of nodes by the
/// canonical code of their depth-`k` unfolding trees.
pub fn wl_equals_unfolding(g: &Graph, k: usize) -> bool {
    let wl = wl_refine(g, k).partition(k);
    let codes: Vec<Vec<u8>> = (0..g.n)
        .map(|v| tree_canonical(&unfolding_tree(g, v, k).expect("valid node")))
        .collect();
    wl == partition_of(&codes)
}

/// Unfolding-tree classes shared between graphs: class ids at each depth
/// are assigned over both graphs together, in sorted signature order.
struct TreeClasses {
    // signature[t][id] = (label, sorted child ids at depth t - 1)
    signatures: Vec<Vec<(u32, Vec<u32>)>>,
}

impl TreeClasses {
    fn code(&self, depth: usize, id: u32, budget: &mut usize) -> Option<String> {
        let (label, kids) = &self.signatures[depth][id as usize];
        let mut parts = Vec::with_capacity(kids.len());
        if depth > 0 {
            for &c in kids {
                parts.push(self.code(depth - 1, c, budget)?);
            }
        }
        parts.sort_unstable();
        let s = format!("{label}({})", parts.concat());
        *budget = budget.checked_sub(s.len())?;
        Some(s)
    }
}

fn tree_classes(graphs: &[&Graph], k: usize) -> (TreeClasses, Vec<Vec<u32>>) {
    let labels: Vec<u32> = graphs.iter().flat_map(|g| g.labels.iter().copied()).collect();
    let offsets: Vec<usize> = graphs
        .iter()
        .scan(0, |acc, g| {
            let o = *acc;
            *acc += g.n;
            Some(o)
        })
        .collect();
    let mut sigs: Vec<(u32, Vec<u32>)> = labels.iter().map(|&l| (l, Vec::new())).collect();
    let mut ids = reindex(&sigs);
    let mut signatures = vec![dictionary(&sigs, &ids)];
    for _ in 0..k {
        sigs = graphs
            .iter()
            .zip(&offsets)
            .flat_map(|(g, &o)| {
                let ids = &ids;
                (0..g.n).map(move |v| {
                    let mut kids: Vec<u32> = g.neighbors(v).iter().map(|&w| ids[o + w]).collect();
                    kids.sort_unstable();
                    (g.labels[v], kids)
                })
            })
            .collect();
        ids = reindex(&sigs);
        signatures.push(dictionary(&sigs, &ids));
    }
    let per_graph = graphs
        .iter()
        .zip(&offsets)
        .map(|(g, &o)| ids[o..o + g.n].to_vec())
        .collect();
    (TreeClasses { signatures }, per_graph)
}

fn dictionary(sigs: &[(u32, Vec<u32>)], ids: &[u32]) -> Vec<(u32, Vec<u32>)> {
    let n = ids.iter().map(|&i| i as usize + 1).max().unwrap_or(0);
    let mut out = vec![(0, Vec::new()); n];
    for (s, &i) in sigs.iter().zip(ids) {
        out[i as usize] = s.clone();
    }
    out
}

/// Canonical codes of every node's depth-`k` unfolding tree, computed level
/// by level without materialising the trees.
pub fn unfolding_codes(g: &Graph, k: usize) -> Vec<Vec<u8>> {
    let (classes, ids) = tree_classes(&[g], k);
    ids[0]
        .iter()
        .map(|&id| {
            let mut budget = usize::MAX;
            classes.code(k, id, &mut budget).expect("unbounded budget").into_bytes()
        })
        .collect()
}

const CODE_BUDGET: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub depth: usize,
    pub distinguishable: bool,
    /// Node counts per unfolding-tree class (`t<depth>.<id>`).
    pub histogram_1: BTreeMap<String, usize>,
    pub histogram_2: BTreeMap<String, usize>,
    /// First class whose counts differ, with its canonical code when short.
    pub differing_class: Option<String>,
    pub differing_code: Option<String>,
}

/// Compares the multisets of depth-`k` unfolding trees of two graphs.
pub fn compare_graphs(g1: &Graph, g2: &Graph, k: usize) -> Comparison {
    let (classes, ids) = tree_classes(&[g1, g2], k);
    let hist = |ids: &[u32]| -> BTreeMap<u32, usize> { ids.iter().copied().counts().into_iter().collect() };
    let (h1, h2) = (hist(&ids[0]), hist(&ids[1]));
    let differing = h1
        .keys()
        .chain(h2.keys())
        .copied()
        .sorted()
        .dedup()
        .find(|c| h1.get(c) != h2.get(c));
    let name = |c: u32| format!("t{k}.{c}");
    let rename = |h: &BTreeMap<u32, usize>| h.iter().map(|(&c, &n)| (name(c), n)).collect();
    Comparison {
        depth: k,
        distinguishable: differing.is_some(),
        histogram_1: rename(&h1),
        histogram_2: rename(&h2),
        differing_class: differing.map(name),
        differing_code: differing.and_then(|c| classes.code(k, c, &mut { CODE_BUDGET })),
    }
}

/// One representative of every isomorphism class of unlabelled simple
/// graphs on `n` nodes (`n ≤ 7`), found by minimising the edge bitmask
/// over all node permutations.
pub fn small_graphs(n: usize) -> Vec<Graph> {
    assert!(n <= 7, "exhaustive enumeration is limited to 7 nodes");
    let pairs: Vec<(usize, usize)> = (0..n).tuple_combinations().collect();
    let mut index = vec![vec![0usize; n]; n];
    for (i, &(u, v)) in pairs.iter().enumerate() {
        index[u][v] = i;
        index[v][u] = i;
    }
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let mut canon = BTreeSet::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let best = perms
            .iter()
            .map(|p| {
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .fold(0u64, |acc, (_, &(u, v))| acc | (1 << index[p[u]][p[v]]))
            })
            .min()
            .unwrap_or(0);
        canon.insert(best);
    }
    canon
        .into_iter()
        .map(|mask| {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &e)| e)
                .collect();
            Graph::new(n, &edges, None).expect("simple by construction")
        })
        .collect()
}
