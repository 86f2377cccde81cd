//! Exact multivariate polynomials with rational coefficients.

use super::expr::{Node, Section, SectionBuilder};
use crate::error::{Error, Result};
use crate::linalg::rational_to_f64;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

pub type Exponents = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    n_vars: usize,
    terms: BTreeMap<Exponents, BigRational>,
}

impl Polynomial {
    pub fn zero(n_vars: usize) -> Self {
        Self {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(vec![0; n_vars], c);
        p
    }

    pub fn var(n_vars: usize, i: usize) -> Self {
        let mut e = vec![0; n_vars];
        e[i] = 1;
        let mut p = Self::zero(n_vars);
        p.add_term(e, BigRational::one());
        p
    }

    pub fn monomial(exponents: Exponents, c: BigRational) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exponents: Exponents, c: BigRational) {
        assert_eq!(exponents.len(), self.n_vars);
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exponents).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    /// Rewrites variable `i` as variable `mapping[i]` of an `n_vars`-variable ring.
    pub fn relabel(&self, mapping: &[usize], n_vars: usize) -> Self {
        assert_eq!(mapping.len(), self.n_vars);
        let mut out = Self::zero(n_vars);
        for (e, v) in &self.terms {
            let mut ne = vec![0; n_vars];
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    ne[mapping[i]] += x;
                }
            }
            out.add_term(ne, v.clone());
        }
        out
    }

    /// Sets the variables with `keep[i] == None` to zero and renumbers the rest.
    pub fn restrict(&self, keep: &[Option<usize>], n_vars: usize) -> Self {
        assert_eq!(keep.len(), self.n_vars);
        let mut out = Self::zero(n_vars);
        'terms: for (e, v) in &self.terms {
            let mut ne = vec![0; n_vars];
            for (i, &x) in e.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                match keep[i] {
                    Some(j) => ne[j] += x,
                    None => continue 'terms,
                }
            }
            out.add_term(ne, v.clone());
        }
        out
    }

    pub fn evaluate(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(y)
                    .fold(rational_to_f64(c), |acc, (&k, &x)| acc * x.powi(k as i32))
            })
            .sum()
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars);
        let mut out = self.clone();
        for (e, v) in &rhs.terms {
            out.add_term(e.clone(), v.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-BigRational::one())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars);
        let mut out = Polynomial::zero(self.n_vars);
        for (ea, va) in &self.terms {
            for (eb, vb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, va * vb);
            }
        }
        out
    }
}

/// Exact rational value of a finite float.
pub fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::NotPolynomial(format!("non-finite coefficient {x}")))
}

/// Expands every output of a section built from inputs, constants, affine,
/// sum and product nodes (identity activations are transparent).
pub fn polynomials_of(s: &Section) -> Result<Vec<Polynomial>> {
    let n = s.input_dim();
    let mut vals: Vec<Polynomial> = Vec::with_capacity(s.nodes().len());
    for (id, node) in s.nodes().iter().enumerate() {
        let p = match node {
            Node::Input(i) => Polynomial::var(n, *i),
            Node::Const(c) => Polynomial::constant(n, exact(*c)?),
            Node::Affine { args, coeffs, bias } => {
                let mut acc = Polynomial::constant(n, exact(*bias)?);
                for (&a, &c) in args.iter().zip(coeffs) {
                    acc = &acc + &vals[a].scale(&exact(c)?);
                }
                acc
            }
            Node::Sum(args) => args.iter().fold(Polynomial::zero(n), |acc, &a| &acc + &vals[a]),
            Node::Product(args) => args
                .iter()
                .fold(Polynomial::constant(n, BigRational::one()), |acc, &a| &acc * &vals[a]),
            Node::Activate { arg, act } if act.is_identity() => vals[*arg].clone(),
            Node::Activate { act, .. } => {
                return Err(Error::NotPolynomial(format!("node {id} applies {}", act.name())))
            }
            Node::Max(_) => return Err(Error::NotPolynomial(format!("node {id} is a max"))),
        };
        vals.push(p);
    }
    Ok(s.outputs().iter().map(|&o| vals[o].clone()).collect())
}

/// Builds a section evaluating the given polynomials (all over `n_vars`).
pub fn section_of(polys: &[Polynomial], n_vars: usize) -> Section {
    let mut b = SectionBuilder::new(n_vars);
    let ins = b.inputs();
    let outs = polys
        .iter()
        .map(|p| {
            assert_eq!(p.n_vars(), n_vars);
            let mut monos = Vec::new();
            let mut coeffs = Vec::new();
            for (e, c) in p.terms() {
                let factors: Vec<_> = e
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &k)| std::iter::repeat_n(ins[i], k as usize))
                    .collect();
                let m = if factors.is_empty() {
                    b.constant(1.0)
                } else {
                    b.product(&factors)
                };
                monos.push(m);
                coeffs.push(rational_to_f64(c));
            }
            b.affine(&monos, &coeffs, 0.0)
        })
        .collect();
    b.finish(outs)
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sections::Activation;

    #[test]
    fn expands_products_of_sums() {
        // (y0 + 1) * y1
        let mut b = SectionBuilder::new(2);
        let ins = b.inputs();
        let s = b.affine(&[ins[0]], &[1.0], 1.0);
        let p = b.product(&[s, ins[1]]);
        let sec = b.finish(vec![p]);
        let polys = polynomials_of(&sec).unwrap();
        let expect = &Polynomial::monomial(vec![1, 1], int(1)) + &Polynomial::var(2, 1);
        assert_eq!(polys[0], expect);
        let back = section_of(&polys, 2);
        assert_eq!(back.evaluate(&[2.0, 3.0]).unwrap(), vec![9.0]);
    }

    #[test]
    fn cancellation_is_exact() {
        let x = Polynomial::var(1, 0);
        assert!((&x - &x).is_zero());
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        let p = &x.scale(&third) + &x.scale(&-third);
        assert!(p.is_zero());
    }

    #[test]
    fn restrict_and_relabel() {
        // y0*y1 + y2 with y1 set to zero, y2 renamed to 0
        let p = &Polynomial::monomial(vec![1, 1, 0], int(1)) + &Polynomial::var(3, 2);
        let r = p.restrict(&[None, None, Some(0)], 1);
        assert_eq!(r, Polynomial::var(1, 0));
        let q = Polynomial::var(1, 0).relabel(&[2], 3);
        assert_eq!(q, Polynomial::var(3, 2));
    }

    #[test]
    fn rejects_nonpolynomial_nodes() {
        let s = Section::activation(1, &Activation::tanh());
        assert!(matches!(polynomials_of(&s), Err(Error::NotPolynomial(_))));
        let id = Section::activation(2, &Activation::identity());
        assert_eq!(polynomials_of(&id).unwrap().len(), 2);
    }
}
