//! Pointwise activations and their mapping properties.

use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Mapping properties of an activation viewed as a map ℝ → ℝ, together with
/// the closure of its image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActivationMeta {
    pub surjective: bool,
    pub open: bool,
    pub bijective: bool,
    /// Infimum and supremum of the image (possibly infinite).
    pub range: (f64, f64),
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct Activation {
    name: String,
    func: Arc<ScalarFn>,
    meta: ActivationMeta,
}

impl Activation {
    pub fn new(
        name: impl Into<String>,
        func: impl Fn(f64) -> f64 + Send + Sync + 'static,
        meta: ActivationMeta,
    ) -> Self {
        Self {
            name: name.into(),
            func: Arc::new(func),
            meta,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn meta(&self) -> ActivationMeta {
        self.meta
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (self.func)(x)
    }

    /// Looks up one of the built-in activations.
    pub fn builtin(name: &str) -> Result<Self> {
        builtins()
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnregisteredActivation(name.to_string()))
    }

    pub fn identity() -> Self {
        Self::builtin("identity").expect("builtin")
    }

    pub fn relu() -> Self {
        Self::builtin("relu").expect("builtin")
    }

    pub fn sigmoid() -> Self {
        Self::builtin("sigmoid").expect("builtin")
    }

    pub fn tanh() -> Self {
        Self::builtin("tanh").expect("builtin")
    }

    pub fn is_identity(&self) -> bool {
        self.name == "identity"
    }
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.meta == other.meta
    }
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Activation({})", self.name)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn builtins() -> &'static BTreeMap<String, Activation> {
    static BUILTINS: OnceLock<BTreeMap<String, Activation>> = OnceLock::new();
    BUILTINS.get_or_init(|| {
        let unbounded = (f64::NEG_INFINITY, f64::INFINITY);
        let meta = |surjective, open, bijective, range| ActivationMeta {
            surjective,
            open,
            bijective,
            range,
        };
        [
            Activation::new(
                "relu",
                |x: f64| x.max(0.0),
                meta(false, false, false, (0.0, f64::INFINITY)),
            ),
            Activation::new("sigmoid", sigmoid, meta(false, true, false, (0.0, 1.0))),
            Activation::new("tanh", f64::tanh, meta(false, true, false, (-1.0, 1.0))),
            Activation::new("sin", f64::sin, meta(false, false, false, (-1.0, 1.0))),
            Activation::new("cos", f64::cos, meta(false, false, false, (-1.0, 1.0))),
            Activation::new("identity", |x| x, meta(true, true, true, unbounded)),
        ]
        .into_iter()
        .map(|a| (a.name.clone(), a))
        .collect()
    })
}

/// Named activations available to deserializers and networks. Starts with
/// the built-ins; further activations must declare their metadata.
#[derive(Debug, Clone)]
pub struct ActivationCatalog {
    entries: BTreeMap<String, Activation>,
}

impl Default for ActivationCatalog {
    fn default() -> Self {
        Self {
            entries: builtins().clone(),
        }
    }
}

impl ActivationCatalog {
    pub fn register(&mut self, activation: Activation) {
        self.entries.insert(activation.name.clone(), activation);
    }

    pub fn get(&self, name: &str) -> Result<Activation> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnregisteredActivation(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Activation> {
        self.entries.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_evaluate() {
        assert_eq!(Activation::relu().apply(-2.0), 0.0);
        assert_eq!(Activation::relu().apply(2.5), 2.5);
        assert!((Activation::sigmoid().apply(0.0) - 0.5).abs() < 1e-15);
        assert!(Activation::sigmoid().apply(-800.0) >= 0.0);
        assert_eq!(Activation::identity().apply(-3.0), -3.0);
        assert_eq!(Activation::builtin("cos").unwrap().apply(0.0), 1.0);
    }

    #[test]
    fn metadata_matches_images() {
        let s = Activation::sigmoid().meta();
        assert!(!s.surjective && s.open && !s.bijective);
        assert_eq!(s.range, (0.0, 1.0));
        let id = Activation::identity().meta();
        assert!(id.surjective && id.open && id.bijective);
    }

    #[test]
    fn unknown_names_are_rejected_until_registered() {
        let mut cat = ActivationCatalog::default();
        assert_eq!(cat.get("cube"), Err(Error::UnregisteredActivation("cube".into())));
        let meta = ActivationMeta {
            surjective: true,
            open: true,
            bijective: true,
            range: (f64::NEG_INFINITY, f64::INFINITY),
        };
        cat.register(Activation::new("cube", |x| x * x * x, meta));
        assert_eq!(cat.get("cube").unwrap().apply(2.0), 8.0);
        assert_eq!(cat.iter().count(), 7);
    }
}
