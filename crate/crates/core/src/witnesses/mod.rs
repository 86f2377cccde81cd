//! Constructive witnesses: machine-checkable evidence for the structural
//! failures of the section presheaf and their consequences for networks.

mod attack;
mod dependency;
mod glue;
mod kernel;
mod locality;

pub use attack::{adversarial_attack, attack_with_shifts, AttackSpec};
pub use dependency::{classify, dataset_dependency, DependencyClass};
pub use glue::{glue_inclusion_exclusion, glue_witness, hidden_global_family};
pub use kernel::{cosheaf_kernel_decompose, kernel_witness, pairwise_family, KernelDecomposition};
pub use locality::{
    locality_witness, non_unique_explanation, pooled_collision, separable_section, surjectivity_witness,
};

use serde::Serialize;
use serde_json::{Map, Value};

/// Claim identifiers carried by reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Claim {
    /// Restrictions to a cover do not determine a global section.
    #[serde(rename = "prop2.8-locality")]
    Locality,
    /// Sums of extended local sections miss non-separable global sections.
    #[serde(rename = "prop2.8-surjectivity")]
    Surjectivity,
    /// Compatible local sections glue by inclusion–exclusion.
    #[serde(rename = "rem2.9-glue")]
    Glue,
    /// Kernel elements of the extension sum decompose pairwise.
    #[serde(rename = "rem2.9-kernel")]
    Kernel,
    /// Distinct inputs share every local explanation.
    #[serde(rename = "thm4.1")]
    NonUniqueExplanation,
    /// Zero-sum perturbations of a factoring layer are invisible downstream.
    #[serde(rename = "thm4.2")]
    Attack,
    /// Some global targets are unreachable for every deviation.
    #[serde(rename = "thm4.3")]
    DatasetDependency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

/// Evidence object emitted by every witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub schema: u32,
    pub claim: Claim,
    pub inputs: Value,
    pub measured: Value,
    pub checks: Vec<Check>,
    pub verdict: bool,
    pub seed: Option<u64>,
}

impl WitnessReport {
    pub fn new(claim: Claim, seed: Option<u64>) -> Self {
        Self {
            schema: 1,
            claim,
            inputs: Value::Object(Map::new()),
            measured: Value::Object(Map::new()),
            checks: Vec::new(),
            verdict: true,
            seed,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        insert(&mut self.inputs, key, value);
        self
    }

    pub fn measure(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        insert(&mut self.measured, key, value);
        self
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool) -> &mut Self {
        self.verdict &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
        });
        self
    }

    pub fn measured_f64(&self, key: &str) -> Option<f64> {
        self.measured.get(key)?.as_f64()
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("reports serialize")
    }
}

fn insert(target: &mut Value, key: &str, value: impl Serialize) {
    let v = serde_json::to_value(value).expect("report values serialize");
    target
        .as_object_mut()
        .expect("report maps are objects")
        .insert(key.to_string(), v);
}

/// `(Σ |v_i|^p)^{1/p}`.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}
