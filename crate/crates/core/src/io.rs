//! JSON documents for spaces, cover lists and networks. Point and element
//! indices in documents are 1-based.

use crate::error::{Error, Result};
use crate::network::{Layer, Network};
use crate::sections::{ActivationCatalog, Section};
use crate::topology::{make_cover, Cover, CoverSequence, MarkedSpace, Structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDoc {
    n_points: usize,
    #[serde(default)]
    fiber_dims: Option<Vec<usize>>,
    #[serde(default)]
    structure: Option<StructureDoc>,
    covers: Vec<Vec<Vec<usize>>>,
    #[serde(default)]
    layers: Option<Vec<LayerDoc>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StructureDoc {
    Grid { rows: usize, cols: usize },
    Graph { edges: Vec<(usize, usize)> },
    Line,
    Abstract,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LayerDoc {
    Factors {
        aggregation: Vec<Vec<usize>>,
        out_dim: usize,
        phi: PhiDoc,
        #[serde(default = "identity_name")]
        activation: String,
    },
    Max {
        aggregation: Vec<Vec<usize>>,
    },
}

fn identity_name() -> String {
    "identity".into()
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PhiDoc {
    Named(String),
    Matrices(Vec<MatrixDoc>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    #[serde(default)]
    bias: Option<Vec<f64>>,
}

/// A parsed cover document: the space and every listed cover as 0-based
/// memberships.
#[derive(Debug, Clone)]
pub struct CoverDoc {
    pub space: MarkedSpace,
    pub covers: Vec<Vec<Vec<usize>>>,
}

impl CoverDoc {
    pub fn cover(&self, i: usize) -> Result<Cover> {
        make_cover(&self.space, &self.covers[i])
    }

    /// Reads the listed covers as the stages of a sequence.
    pub fn sequence(&self) -> Result<CoverSequence> {
        CoverSequence::from_stages(&self.space, &self.covers)
    }
}

fn one_based(list: &[usize], bound: usize, what: &str) -> Result<Vec<usize>> {
    list.iter()
        .map(|&i| {
            if i == 0 || i > bound {
                Err(Error::Parse(format!("{what} index {i} outside 1..={bound}")))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

fn parse_space(doc: &SpaceDoc) -> Result<MarkedSpace> {
    let n = doc.n_points;
    let fibers = doc.fiber_dims.clone().unwrap_or_else(|| vec![1; n]);
    if fibers.len() != n {
        return Err(Error::Parse(format!(
            "fiber_dims lists {} entries for {n} points",
            fibers.len()
        )));
    }
    let structure = match &doc.structure {
        None | Some(StructureDoc::Abstract) => Structure::Abstract,
        Some(StructureDoc::Line) => Structure::Line,
        Some(StructureDoc::Grid { rows, cols }) => Structure::Grid {
            rows: *rows,
            cols: *cols,
        },
        Some(StructureDoc::Graph { edges }) => Structure::Graph {
            edges: edges
                .iter()
                .map(|&(u, v)| {
                    let e = one_based(&[u, v], n, "edge")?;
                    Ok((e[0], e[1]))
                })
                .collect::<Result<_>>()?,
        },
    };
    MarkedSpace::new(fibers, structure)
}

fn parse_doc(text: &str) -> Result<(SpaceDoc, CoverDoc)> {
    let doc: SpaceDoc = serde_json::from_str(text)?;
    let space = parse_space(&doc)?;
    let n = space.n_points();
    let covers = doc
        .covers
        .iter()
        .map(|c| c.iter().map(|m| one_based(m, n, "point")).collect())
        .collect::<Result<_>>()?;
    Ok((doc, CoverDoc { space, covers }))
}

/// Parses `{"n_points", "fiber_dims", "structure", "covers"}`.
pub fn parse_cover_doc(text: &str) -> Result<CoverDoc> {
    parse_doc(text).map(|(_, c)| c)
}

/// Parses a cover document whose `covers` are the stages of a network and
/// whose `layers` describe each stage transition. `"phi": "random"` draws
/// weights from `seed`; `"phi": "identity"` needs equal widths.
pub fn parse_network_doc(text: &str, catalog: &ActivationCatalog, seed: u64) -> Result<Network> {
    let (doc, covers) = parse_doc(text)?;
    let seq = covers.sequence()?;
    let layer_docs = doc
        .layers
        .ok_or_else(|| Error::Parse("network document needs a `layers` list".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(layer_docs.len());
    let mut width: Vec<usize> = seq.space().fiber_dims().to_vec();
    for (n, ld) in layer_docs.into_iter().enumerate() {
        let n_in = seq.stages().get(n).map_or(0, Cover::len);
        let agg_of = |agg: &[Vec<usize>]| -> Result<Vec<Vec<usize>>> {
            agg.iter().map(|a| one_based(a, n_in, "input element")).collect()
        };
        let layer = match ld {
            LayerDoc::Max { aggregation } => {
                let out = *width.first().unwrap_or(&0);
                Layer::max(agg_of(&aggregation)?, out)
            }
            LayerDoc::Factors {
                aggregation,
                out_dim,
                phi,
                activation,
            } => {
                let act = catalog.get(&activation)?;
                let phis = match phi {
                    PhiDoc::Named(s) if s == "identity" => width
                        .iter()
                        .map(|&w| {
                            if w == out_dim {
                                Ok(Section::identity(w))
                            } else {
                                Err(Error::Parse(format!("identity φ needs width {out_dim}, input has {w}")))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?,
                    PhiDoc::Named(s) if s == "random" => width
                        .iter()
                        .map(|&w| {
                            let weights: Vec<f64> = (0..out_dim * w)
                                .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
                                .collect();
                            Section::affine(w, &weights, &vec![0.0; out_dim])
                        })
                        .collect(),
                    PhiDoc::Named(s) => return Err(Error::Parse(format!("unknown φ shorthand `{s}`"))),
                    PhiDoc::Matrices(ms) => ms
                        .iter()
                        .map(|m| {
                            if m.weights.len() != m.rows * m.cols {
                                return Err(Error::Parse(format!(
                                    "matrix declares {}x{} but has {} weights",
                                    m.rows,
                                    m.cols,
                                    m.weights.len()
                                )));
                            }
                            let bias = m.bias.clone().unwrap_or_else(|| vec![0.0; m.rows]);
                            if bias.len() != m.rows {
                                return Err(Error::Parse("bias length must equal rows".into()));
                            }
                            Ok(Section::affine(m.cols, &m.weights, &bias))
                        })
                        .collect::<Result<Vec<_>>>()?,
                };
                Layer::factors_uniform(agg_of(&aggregation)?, out_dim, phis, act)
            }
        };
        let n_out = seq.stages().get(n + 1).map_or(0, Cover::len);
        width = vec![layer.out_dim; n_out];
        layers.push(layer);
    }
    Network::new(seq, layers)
}

/// Reads a value as a JSON document from text.
pub fn parse_json(text: &str) -> Result<Value> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Deviation;

    const SUMPOOL: &str = r#"{
        "n_points": 4,
        "covers": [[[1],[2],[3],[4]], [[1,2],[3,4]], [[1,2,3,4]]],
        "layers": [
            {"kind": "factors", "aggregation": [[1,2],[3,4]], "out_dim": 1, "phi": "identity"},
            {"kind": "factors", "aggregation": [[1,2]], "out_dim": 1, "phi": "random", "activation": "sigmoid"}
        ]
    }"#;

    #[test]
    fn reads_covers_one_based() {
        let doc = parse_cover_doc(r#"{"n_points": 2, "covers": [[[1],[2]]]}"#).unwrap();
        assert_eq!(doc.covers, vec![vec![vec![0], vec![1]]]);
        assert!(parse_cover_doc(r#"{"n_points": 2, "covers": [[[0]]]}"#).is_err());
        assert!(parse_cover_doc(r#"{"n_points": 2, "covers": [[[3]]]}"#).is_err());
        assert!(parse_cover_doc(r#"{"n_points": 2, "fiber_dims": [1], "covers": []}"#).is_err());
        let g =
            parse_cover_doc(r#"{"n_points": 4, "structure": {"kind": "grid", "rows": 2, "cols": 2}, "covers": []}"#)
                .unwrap();
        assert_eq!(g.space.structure(), &Structure::Grid { rows: 2, cols: 2 });
    }

    #[test]
    fn reads_networks() {
        let net = parse_network_doc(SUMPOOL, &ActivationCatalog::default(), 7).unwrap();
        assert_eq!(net.layers().len(), 2);
        let again = parse_network_doc(SUMPOOL, &ActivationCatalog::default(), 7).unwrap();
        let dev = Deviation::zero(net.space());
        let x = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(net.forward(&dev, &x).unwrap(), again.forward(&dev, &x).unwrap());
        let bad = SUMPOOL.replace("sigmoid", "softsign");
        assert!(matches!(
            parse_network_doc(&bad, &ActivationCatalog::default(), 7),
            Err(Error::UnregisteredActivation(_))
        ));
    }
}
