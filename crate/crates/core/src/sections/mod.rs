//! Local sections: evaluable maps from the fibers over an open set to ℝ^k.

mod activation;
mod coord;
mod expr;
pub mod polynomial;

pub use activation::{Activation, ActivationCatalog, ActivationMeta};
pub use coord::{compose_coord, CoordKind, CoordMap};
pub use expr::{Node, NodeId, Section, SectionBuilder};

use crate::error::{Error, Result};
use crate::topology::{MarkedSpace, OpenSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-9;

/// A linear map ℝ^d → ℝ^k stored as a row-major `k × d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSection {
    k: usize,
    d: usize,
    weights: Vec<f64>,
}

impl LinearSection {
    pub fn new(k: usize, d: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != k * d {
            return Err(Error::DimensionMismatch {
                expected: k * d,
                got: weights.len(),
            });
        }
        Ok(Self { k, d, weights })
    }

    pub fn identity(d: usize) -> Self {
        let mut w = vec![0.0; d * d];
        for i in 0..d {
            w[i * d + i] = 1.0;
        }
        Self { k: d, d, weights: w }
    }

    pub fn rows(&self) -> usize {
        self.k
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.d + c]
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.d);
        (0..self.k)
            .map(|r| {
                self.weights[r * self.d..(r + 1) * self.d]
                    .iter()
                    .zip(y)
                    .map(|(w, x)| w * x)
                    .sum()
            })
            .collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearSection) -> Result<LinearSection> {
        if inner.k != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: inner.k,
            });
        }
        let mut w = vec![0.0; self.k * inner.d];
        for r in 0..self.k {
            for m in 0..self.d {
                let a = self.get(r, m);
                if a == 0.0 {
                    continue;
                }
                for c in 0..inner.d {
                    w[r * inner.d + c] += a * inner.get(m, c);
                }
            }
        }
        LinearSection::new(self.k, inner.d, w)
    }

    pub fn to_section(&self) -> Section {
        Section::affine(self.d, &self.weights, &vec![0.0; self.k])
    }
}

/// The section over `u` whose `k` outputs all equal the product of every
/// input coordinate. It vanishes whenever one coordinate is zero.
pub fn product_counterexample(space: &MarkedSpace, u: &OpenSet, k: usize) -> Result<Section> {
    let d = space.dim(&u.members);
    if d < 2 {
        return Err(Error::DegenerateCounterexample(d));
    }
    let mut b = SectionBuilder::new(d);
    let ins = b.inputs();
    let p = b.product(&ins);
    Ok(b.finish(vec![p; k]).on(u.clone()))
}

/// Outcome of a sampled equality test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equality {
    pub equal: bool,
    pub max_deviation: f64,
}

/// Seeded standard-normal points of dimension `d`.
pub fn gaussian_points(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

/// Compares two sections at `n_samples` seeded Gaussian points in sup norm.
pub fn sections_equal(a: &Section, b: &Section, n_samples: usize, tol: f64, seed: u64) -> Result<Equality> {
    if a.input_dim() != b.input_dim() || a.output_dim() != b.output_dim() {
        return Err(Error::InvalidSection(format!(
            "shapes differ: {}->{} vs {}->{}",
            a.input_dim(),
            a.output_dim(),
            b.input_dim(),
            b.output_dim()
        )));
    }
    let mut max_deviation: f64 = 0.0;
    let (mut ba, mut bb) = (Vec::new(), Vec::new());
    for y in gaussian_points(a.input_dim(), n_samples, seed) {
        let va = a.eval_with(&y, &mut ba);
        let vb = b.eval_with(&y, &mut bb);
        for (x, z) in va.iter().zip(&vb) {
            let dev = (x - z).abs();
            max_deviation = if dev.is_nan() {
                f64::INFINITY
            } else {
                max_deviation.max(dev)
            };
        }
    }
    Ok(Equality {
        equal: max_deviation <= tol,
        max_deviation,
    })
}

/// Second mixed finite difference
/// `s(b + h e_i + h e_j) − s(b + h e_i) − s(b + h e_j) + s(b)`.
pub fn mixed_difference(s: &Section, i: usize, j: usize, base: &[f64], h: f64) -> Result<Vec<f64>> {
    if i == j {
        return Err(Error::InvalidSection("mixed difference needs i != j".into()));
    }
    if h <= 0.0 {
        return Err(Error::InvalidSection("step must be positive".into()));
    }
    let d = s.input_dim();
    if i >= d || j >= d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: i.max(j) + 1,
        });
    }
    let shifted = |di: f64, dj: f64| {
        let mut y = base.to_vec();
        y[i] += di;
        y[j] += dj;
        s.evaluate(&y)
    };
    let pp = shifted(h, h)?;
    let p0 = shifted(h, 0.0)?;
    let p1 = shifted(0.0, h)?;
    let b0 = s.evaluate(base)?;
    Ok((0..s.output_dim()).map(|r| pp[r] - p0[r] - p1[r] + b0[r]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize) -> MarkedSpace {
        MarkedSpace::uniform(n, 1).unwrap()
    }

    #[test]
    fn counterexample_values() {
        let u = OpenSet::new("u", [0, 1, 2]);
        let f = product_counterexample(&space(3), &u, 2).unwrap();
        assert_eq!(f.evaluate(&[1.0, 2.0, 3.0]).unwrap(), vec![6.0, 6.0]);
        assert_eq!(f.evaluate(&[1.0, 0.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        let u2 = OpenSet::new("u", [0, 1]);
        let f2 = product_counterexample(&space(2), &u2, 1).unwrap();
        assert_eq!(f2.evaluate(&[3.0, 4.0]).unwrap(), vec![12.0]);
        let f4 = product_counterexample(&space(4), &OpenSet::new("u", 0..4), 3).unwrap();
        assert_eq!(f4.evaluate(&[1.0; 4]).unwrap(), vec![1.0; 3]);
        assert_eq!(
            product_counterexample(&space(2), &OpenSet::new("u", [1]), 1),
            Err(Error::DegenerateCounterexample(1))
        );
    }

    #[test]
    fn counterexample_restricts_to_zero() {
        let s = space(3);
        let u = OpenSet::new("u", [0, 1, 2]);
        let sub = OpenSet::new("w", [0, 1]);
        let f = product_counterexample(&s, &u, 1).unwrap();
        let pad = CoordMap::zero_pad(&s, &sub, &u).unwrap();
        let r = compose_coord(&f, &pad).unwrap();
        let eq = sections_equal(&r, &Section::zero(2, 1), 100, 0.0, 1).unwrap();
        assert!(eq.equal);
        assert_eq!(eq.max_deviation, 0.0);
    }

    #[test]
    fn equality_is_seeded() {
        let f = product_counterexample(&space(2), &OpenSet::new("u", [0, 1]), 1).unwrap();
        let z = Section::zero(2, 1);
        let a = sections_equal(&f, &z, 100, 1e-9, 5).unwrap();
        let b = sections_equal(&f, &z, 100, 1e-9, 5).unwrap();
        assert!(!a.equal);
        assert_eq!(a, b);
        assert!(sections_equal(&f, &f, 100, 0.0, 5).unwrap().equal);
    }

    #[test]
    fn mixed_difference_of_product_is_one() {
        let f = product_counterexample(&space(2), &OpenSet::new("u", [0, 1]), 1).unwrap();
        assert_eq!(mixed_difference(&f, 0, 1, &[0.0, 0.0], 1.0).unwrap(), vec![1.0]);
        let lin = Section::affine(2, &[2.0, -3.0], &[0.5]);
        assert_eq!(mixed_difference(&lin, 0, 1, &[0.3, 0.7], 1.0).unwrap(), vec![0.0]);
        assert!(mixed_difference(&lin, 1, 1, &[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn linear_section_embeds() {
        let m = LinearSection::new(2, 3, vec![1.0, 0.0, 2.0, -1.0, 1.0, 0.0]).unwrap();
        let y = [0.5, -2.0, 4.0];
        assert_eq!(m.to_section().evaluate(&y).unwrap(), m.apply(&y));
        let c = m.compose(&LinearSection::identity(3)).unwrap();
        assert_eq!(c, m);
    }
}
