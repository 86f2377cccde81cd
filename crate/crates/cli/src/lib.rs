//! Command-line driver: parses arguments, runs one suite and renders a JSON
//! report. Exit codes: 0 when every verdict passes, 1 when one fails, 2 on
//! invalid input.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use skysheaf::cech::{cech_cohomology, sheaf_axiom_check};
use skysheaf::graphs::{compare_graphs, parse_graph, wl_equals_unfolding};
use skysheaf::io::{parse_cover_doc, parse_network_doc, CoverDoc};
use skysheaf::linalg::parse_rational;
use skysheaf::network::{
    build_attention, build_cnn, build_recurrent, cnn_demo, AttentionConfig, CnnPlan, Network, PoolKind, RecurrentKind,
};
use skysheaf::sections::{Activation, ActivationCatalog, Section};
use skysheaf::topology::{check_na_axioms, check_stage_pair, AxiomReport};
use skysheaf::witnesses::{
    adversarial_attack, attack_with_shifts, dataset_dependency, glue_witness, hidden_global_family, kernel_witness,
    locality_witness, non_unique_explanation, pairwise_family, surjectivity_witness, WitnessReport,
};
use skysheaf::Error;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "skysheaf",
    version,
    about = "Witness suites for neighborhood-aggregating networks"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for sampled equality tests.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Sample count for sampled equality tests.
    #[arg(long, global = true, default_value_t = 100)]
    pub samples: usize,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Neighborhood-aggregating axioms of a cover sequence.
    Axioms {
        #[arg(long)]
        cover: PathBuf,
    },
    /// Čech cohomology of the Hom sheaf on every cover of a document.
    Cohomology {
        #[arg(long)]
        cover: PathBuf,
        /// Output width of the sections.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Highest degree computed (default: min(3, elements - 1), at least 1).
        #[arg(long)]
        max_degree: Option<usize>,
    },
    /// Constructive witnesses.
    Witness {
        #[arg(value_enum)]
        claim: ClaimArg,
        #[command(flatten)]
        opts: WitnessOpts,
    },
    /// Compares two graphs by their depth-k unfolding trees.
    WlCompare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Builds an example network and runs the suite against it.
    Demo {
        #[arg(value_enum)]
        kind: DemoKind,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClaimArg {
    #[value(name = "prop2.8")]
    Locality,
    #[value(name = "thm4.1")]
    NonUnique,
    #[value(name = "thm4.2")]
    Attack,
    #[value(name = "thm4.3")]
    Dependency,
    Glue,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoKind {
    Cnn,
    Rnn,
    Attention,
}

#[derive(Debug, Clone, Args)]
pub struct WitnessOpts {
    /// Cover document (prop2.8, glue, kernel).
    #[arg(long)]
    pub cover: Option<PathBuf>,
    /// Network document (thm4.1, thm4.2, thm4.3); defaults to a demo CNN.
    #[arg(long)]
    pub net: Option<PathBuf>,
    /// JSON list of local sections, one per cover element (glue, kernel).
    #[arg(long)]
    pub locals: Option<PathBuf>,
    /// Output width of generated sections.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Layer attacked by thm4.2.
    #[arg(long, default_value_t = 0)]
    pub layer: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Explicit comma-separated shifts for thm4.2, input-major.
    #[arg(long, allow_hyphen_values = true)]
    pub perturbation: Option<String>,
    /// Grid side for thm4.3.
    #[arg(long, default_value_t = 100)]
    pub resolution: usize,
    /// Random inputs compared by thm4.2.
    #[arg(long, default_value_t = 20)]
    pub inputs: usize,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub report: Value,
}

impl Outcome {
    pub fn render(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("reports serialize") + "\n"
    }
}

struct InputError(String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

type Run<T> = std::result::Result<T, InputError>;

fn read(path: &Path) -> Run<String> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn need<'a>(path: &'a Option<PathBuf>, flag: &str) -> Run<&'a Path> {
    path.as_deref()
        .ok_or_else(|| InputError(format!("--{flag} is required")))
}

struct Envelope {
    body: Map<String, Value>,
    verdict: bool,
}

impl Envelope {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        let mut body = Map::new();
        body.insert("schema".into(), json!(1));
        body.insert("command".into(), json!(command));
        body.insert("seed".into(), json!(cfg.seed));
        Self { body, verdict: true }
    }

    fn set(&mut self, key: &str, value: Value) {
        self.body.insert(key.into(), value);
    }

    fn push_report(&mut self, r: &WitnessReport) {
        self.verdict &= r.verdict;
        self.body
            .entry("reports")
            .or_insert_with(|| json!([]))
            .as_array_mut()
            .expect("reports is a list")
            .push(r.to_json());
    }

    fn check(&mut self, name: &str, passed: bool) {
        self.verdict &= passed;
        self.body
            .entry("checks")
            .or_insert_with(|| json!([]))
            .as_array_mut()
            .expect("checks is a list")
            .push(json!({"name": name, "passed": passed}));
    }

    fn finish(mut self) -> Outcome {
        self.body.insert("verdict".into(), json!(self.verdict));
        Outcome {
            code: if self.verdict { 0 } else { 1 },
            report: Value::Object(self.body),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return Outcome {
                code,
                report: json!({"schema": 1, "message": e.to_string()}),
            };
        }
    };
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(InputError(msg)) => Outcome {
            code: 2,
            report: json!({"schema": 1, "error": msg}),
        },
    };
    if let Some(path) = &cli.config.out {
        if let Err(e) = std::fs::write(path, outcome.render()) {
            return Outcome {
                code: 2,
                report: json!({"schema": 1, "error": format!("{}: {e}", path.display())}),
            };
        }
    }
    outcome
}

fn execute(cli: &Cli) -> Run<Outcome> {
    let cfg = &cli.config;
    match &cli.command {
        Command::Axioms { cover } => axioms(cfg, cover),
        Command::Cohomology { cover, k, max_degree } => cohomology(cfg, cover, *k, *max_degree),
        Command::Witness { claim, opts } => witness(cfg, *claim, opts),
        Command::WlCompare { first, second, depth } => wl_compare(cfg, first, second, *depth),
        Command::Demo { kind, p, delta } => demo(cfg, *kind, *p, *delta),
    }
}

fn axioms(cfg: &RunConfig, path: &Path) -> Run<Outcome> {
    let doc = parse_cover_doc(&read(path)?)?;
    let report = check_na_axioms(&doc.sequence()?)?;
    let mut env = Envelope::new("axioms", cfg);
    env.set("axioms", to_value(&report));
    env.check("axioms hold on every internal stage", report.verdict);
    Ok(env.finish())
}

fn cohomology(cfg: &RunConfig, path: &Path, k: usize, max_degree: Option<usize>) -> Run<Outcome> {
    let doc = parse_cover_doc(&read(path)?)?;
    if doc.covers.is_empty() {
        return Err(InputError("document lists no covers".into()));
    }
    let mut env = Envelope::new("cohomology", cfg);
    let mut results = Vec::new();
    for i in 0..doc.covers.len() {
        let cover = doc.cover(i)?;
        let q = max_degree.unwrap_or_else(|| cover.len().saturating_sub(1).clamp(1, 3));
        let coh = cech_cohomology(&cover, k, q)?;
        let exact = sheaf_axiom_check(&cover, k);
        env.check(&format!("cover {}: higher cohomology vanishes", i + 1), coh.exact);
        env.check(&format!("cover {}: sheaf sequence is exact", i + 1), exact.verdict);
        env.check(
            &format!("cover {}: coboundaries square to zero", i + 1),
            coh.squares_to_zero,
        );
        results.push(json!({"cover": i + 1, "cohomology": to_value(&coh), "exactness": to_value(&exact)}));
    }
    env.set("k", json!(k));
    env.set("results", Value::Array(results));
    Ok(env.finish())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn load_net(opts: &WitnessOpts, cfg: &RunConfig, default: impl FnOnce() -> Network) -> Run<Network> {
    match &opts.net {
        Some(p) => Ok(parse_network_doc(&read(p)?, &ActivationCatalog::default(), cfg.seed)?),
        None => Ok(default()),
    }
}

fn load_locals(path: &Path) -> Run<Vec<Section>> {
    let value: Value = serde_json::from_str(&read(path)?).map_err(|e| InputError(e.to_string()))?;
    let list = value
        .as_array()
        .ok_or_else(|| InputError("locals file must hold a JSON list of sections".into()))?;
    let catalog = ActivationCatalog::default();
    Ok(list
        .iter()
        .map(|v| Section::from_json(v, &catalog))
        .collect::<Result<_, _>>()?)
}

fn cover_doc(opts: &WitnessOpts) -> Run<CoverDoc> {
    let doc = parse_cover_doc(&read(need(&opts.cover, "cover")?)?)?;
    if doc.covers.is_empty() {
        return Err(InputError("document lists no covers".into()));
    }
    Ok(doc)
}

fn parse_shifts(text: &str, net: &Network, layer: usize) -> Run<Vec<Vec<skysheaf::linalg::BigRational>>> {
    let values = text.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>()?;
    let k = net
        .layers()
        .get(layer)
        .ok_or_else(|| InputError(format!("network has no layer {layer}")))?
        .out_dim;
    if k == 0 || values.len() % k != 0 {
        return Err(InputError(format!(
            "{} shifts do not split into vectors of width {k}",
            values.len()
        )));
    }
    Ok(values.chunks(k).map(<[_]>::to_vec).collect())
}

fn witness(cfg: &RunConfig, claim: ClaimArg, opts: &WitnessOpts) -> Run<Outcome> {
    let name = format!("witness {}", claim.to_possible_value().expect("named").get_name());
    let mut env = Envelope::new(&name, cfg);
    match claim {
        ClaimArg::Locality => {
            let doc = cover_doc(opts)?;
            for i in 0..doc.covers.len() {
                let cover = doc.cover(i)?;
                let (_, r) = locality_witness(&cover, opts.k, None, cfg.samples, cfg.seed)?;
                env.push_report(&r);
                env.push_report(&surjectivity_witness(&cover, opts.k, 50, cfg.seed)?);
            }
        }
        ClaimArg::NonUnique => {
            let net = load_net(opts, cfg, || {
                build_cnn(
                    4,
                    &CnnPlan::pooling(PoolKind::Max, 1, 2, Activation::identity()),
                    cfg.seed,
                )
                .expect("demo plan fits")
            })?;
            let (_, r) = non_unique_explanation(&net, cfg.samples, cfg.seed)?;
            env.push_report(&r);
        }
        ClaimArg::Attack => {
            let net = load_net(opts, cfg, || cnn_demo(Activation::identity(), cfg.seed))?;
            let (_, r) = match &opts.perturbation {
                Some(text) => {
                    let shifts = parse_shifts(text, &net, opts.layer)?;
                    attack_with_shifts(&net, opts.layer, opts.p, opts.delta, &shifts, cfg.seed, opts.inputs)?
                }
                None => match adversarial_attack(&net, opts.layer, opts.p, opts.delta, cfg.seed, opts.inputs) {
                    Err(Error::Falsified(msg)) => {
                        env.set("falsified", json!(msg));
                        env.check("attack null space is nonzero", false);
                        return Ok(env.finish());
                    }
                    other => other?,
                },
            };
            env.push_report(&r);
        }
        ClaimArg::Dependency => {
            let net = load_net(opts, cfg, || cnn_demo(Activation::sigmoid(), cfg.seed))?;
            let r = dataset_dependency(&net, &ActivationCatalog::default(), opts.resolution, cfg.seed)?;
            env.push_report(&r);
        }
        ClaimArg::Glue => {
            let doc = cover_doc(opts)?;
            let cover = doc.cover(0)?;
            match &opts.locals {
                Some(p) => {
                    let locals = load_locals(p)?;
                    let (_, r) = glue_witness(&cover, &locals, cfg.samples, cfg.tol, cfg.seed)?;
                    env.push_report(&r);
                }
                None => {
                    for poly in [false, true] {
                        let locals = hidden_global_family(&cover, opts.k, poly, cfg.seed)?;
                        let (_, r) = glue_witness(&cover, &locals, cfg.samples, cfg.tol, cfg.seed)?;
                        env.push_report(&r);
                    }
                }
            }
        }
        ClaimArg::Kernel => {
            let doc = cover_doc(opts)?;
            let cover = doc.cover(0)?;
            let locals = match &opts.locals {
                Some(p) => load_locals(p)?,
                None => pairwise_family(&cover, opts.k, cfg.seed)?.0,
            };
            let (_, r) = kernel_witness(&cover, &locals)?;
            env.push_report(&r);
        }
    }
    Ok(env.finish())
}

fn wl_compare(cfg: &RunConfig, first: &Path, second: &Path, depth: usize) -> Run<Outcome> {
    let g1 = parse_graph(&read(first)?)?;
    let g2 = parse_graph(&read(second)?)?;
    let cmp = compare_graphs(&g1, &g2, depth);
    let mut env = Envelope::new("wl-compare", cfg);
    env.set("depth", json!(depth));
    env.set("distinguishable", json!(cmp.distinguishable));
    env.set("comparison", to_value(&cmp));
    env.check(
        "first graph: WL partition matches unfolding trees",
        wl_equals_unfolding(&g1, depth),
    );
    env.check(
        "second graph: WL partition matches unfolding trees",
        wl_equals_unfolding(&g2, depth),
    );
    Ok(env.finish())
}

fn internal_axioms_hold(ax: &AxiomReport) -> bool {
    ax.stages
        .iter()
        .filter(|s| !s.terminal)
        .all(|s| s.strictness && s.non_triviality && s.distinctness)
}

// Attacks every factoring layer whose stage pair is strict and non-trivial.
fn attack_all(env: &mut Envelope, net: &Network, p: f64, delta: f64, seed: u64) -> Run<()> {
    let seq = net.sequence();
    let mut skipped = Vec::new();
    for (n, layer) in net.layers().iter().enumerate() {
        let ax = check_stage_pair(seq.stage(n), seq.stage(n + 1), n + 1, false);
        if !layer.is_factoring() || !ax.strictness || !ax.non_triviality {
            skipped.push(n);
            continue;
        }
        let (_, r) = adversarial_attack(net, n, p, delta, seed, 20)?;
        env.push_report(&r);
    }
    env.set("attack_skipped_layers", json!(skipped));
    Ok(())
}

fn demo(cfg: &RunConfig, kind: DemoKind, p: f64, delta: f64) -> Run<Outcome> {
    let seed = cfg.seed;
    let name = format!("demo {}", kind.to_possible_value().expect("named").get_name());
    let mut env = Envelope::new(&name, cfg);
    let catalog = ActivationCatalog::default();
    match kind {
        DemoKind::Cnn => {
            let net = cnn_demo(Activation::sigmoid(), seed);
            let ax = check_na_axioms(net.sequence())?;
            env.set("axioms", to_value(&ax));
            env.check(
                "cnn internal stages are strict, non-trivial and distinct",
                internal_axioms_hold(&ax),
            );
            attack_all(&mut env, &net, p, delta, seed)?;
            env.push_report(&non_unique_explanation(&net, cfg.samples, seed)?.1);
            let pooled = build_cnn(4, &CnnPlan::pooling(PoolKind::Max, 1, 2, Activation::identity()), seed)?;
            env.push_report(&non_unique_explanation(&pooled, cfg.samples, seed)?.1);
            env.push_report(&dataset_dependency(&net, &catalog, 100, seed)?);
        }
        DemoKind::Rnn => {
            let net = build_recurrent(6, RecurrentKind::Lstm { window: 2 }, 3, Activation::tanh(), seed)?;
            let ax = check_na_axioms(net.sequence())?;
            env.set("axioms", to_value(&ax));
            attack_all(&mut env, &net, p, delta, seed)?;
            env.push_report(&dataset_dependency(&net, &catalog, 100, seed)?);
        }
        DemoKind::Attention => {
            let net = build_attention(&AttentionConfig::new(3, 2, 2, 2, seed))?;
            let ax = check_na_axioms(net.sequence())?;
            env.set("axioms", to_value(&ax));
            env.check(
                "attention covers violate locality",
                ax.first_violation.locality.is_some(),
            );
            attack_all(&mut env, &net, p, delta, seed)?;
        }
    }
    Ok(env.finish())
}
