//! The sheaf of linear maps U ↦ Hom(ℝ^{d_U}, ℝ^k) as finite linear algebra:
//! restriction matrices, the sheaf-axiom sequence, and Čech cohomology of a
//! cover.
//!
//! A linear map on ℝ^{d_V} is stored in the basis of matrix units `E_{r,c}`,
//! ordered `r * d_V + c`. Restricting to `U ⊆ V` keeps the columns belonging
//! to points of `U`, so every restriction matrix is a 0/1 selector and all
//! coboundaries have entries in {-1, 0, 1}. Ranks are exact.

use crate::error::{Error, Result};
use crate::linalg::IntMatrix;
use crate::topology::{nerve, Cover, MarkedSpace, Members, OpenSet};
use serde::Serialize;

/// `Hom(ℝ^{d_U}, ℝ^k)` over an open set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomSpace {
    pub members: Members,
    pub k: usize,
    pub d: usize,
}

impl HomSpace {
    pub fn new(space: &MarkedSpace, members: &Members, k: usize) -> Self {
        Self {
            members: members.clone(),
            k,
            d: space.dim(members),
        }
    }

    pub fn dim(&self) -> usize {
        self.k * self.d
    }
}

/// Matrix of `A ↦ A ∘ i_{U,V}` from `Hom(ℝ^{d_V},ℝ^k)` to `Hom(ℝ^{d_U},ℝ^k)`.
pub fn restriction_matrix(space: &MarkedSpace, v: &OpenSet, u: &OpenSet, k: usize) -> Result<IntMatrix> {
    if !u.is_subset_of(v) {
        return Err(Error::NotNested {
            inner: u.id.clone(),
            outer: v.id.clone(),
        });
    }
    Ok(selector(space, &v.members, &u.members, k))
}

fn selector(space: &MarkedSpace, outer: &Members, inner: &Members, k: usize) -> IntMatrix {
    let dv = space.dim(outer);
    let du = space.dim(inner);
    let cols: Vec<usize> = inner
        .iter()
        .flat_map(|&p| space.coord_range(outer, p).expect("nested"))
        .collect();
    let mut m = IntMatrix::zeros(k * du, k * dv);
    for r in 0..k {
        for (c, &src) in cols.iter().enumerate() {
            m.set(r * du + c, r * dv + src, 1);
        }
    }
    m
}

/// Cochain spaces and coboundaries of the Hom sheaf over a cover, with
/// cochains indexed by increasing tuples of element indices.
#[derive(Debug, Clone)]
pub struct CechComplex {
    /// `tuples[q]` lists the `(q+1)`-tuples in lexicographic order.
    tuples: Vec<Vec<Vec<usize>>>,
    dims: Vec<usize>,
    coboundaries: Vec<IntMatrix>,
}

impl CechComplex {
    /// Builds `C^0, …, C^{top}` and `δ_0, …, δ_{top-1}`.
    pub fn new(cover: &Cover, k: usize, top: usize) -> Self {
        let space = cover.space();
        let nv = nerve(cover, top + 1);
        let mut tuples: Vec<Vec<Vec<usize>>> = vec![Vec::new(); top + 1];
        let mut faces: Vec<Vec<&Members>> = vec![Vec::new(); top + 1];
        for (s, m) in nv.faces() {
            if s.len() <= top + 1 {
                tuples[s.len() - 1].push(s.clone());
                faces[s.len() - 1].push(m);
            }
        }
        let offsets: Vec<Vec<usize>> = faces
            .iter()
            .map(|fs| {
                let mut acc = 0;
                let mut out = Vec::with_capacity(fs.len() + 1);
                for m in fs {
                    out.push(acc);
                    acc += k * space.dim(m);
                }
                out.push(acc);
                out
            })
            .collect();
        let dims: Vec<usize> = offsets.iter().map(|o| *o.last().expect("nonempty")).collect();
        let mut coboundaries = Vec::with_capacity(top);
        for q in 0..top {
            let mut delta = IntMatrix::zeros(dims[q + 1], dims[q]);
            for (ti, tau) in tuples[q + 1].iter().enumerate() {
                for i in 0..tau.len() {
                    let mut sigma = tau.clone();
                    sigma.remove(i);
                    let si = tuples[q].binary_search(&sigma).expect("faces of faces are present");
                    let block = selector(space, faces[q][si], faces[q + 1][ti], k);
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    delta.add_block(offsets[q + 1][ti], offsets[q][si], &block, sign);
                }
            }
            coboundaries.push(delta);
        }
        Self {
            tuples,
            dims,
            coboundaries,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn tuples(&self, q: usize) -> &[Vec<usize>] {
        &self.tuples[q]
    }

    pub fn coboundary(&self, q: usize) -> &IntMatrix {
        &self.coboundaries[q]
    }

    pub fn exact_ranks(&self) -> Vec<usize> {
        self.coboundaries.iter().map(IntMatrix::rank).collect()
    }

    pub fn float_ranks(&self, tol: f64) -> Vec<usize> {
        self.coboundaries.iter().map(|d| d.rank_float(tol)).collect()
    }

    /// Whether every `δ_{q+1} δ_q` vanishes, in exact integer arithmetic.
    pub fn squares_to_zero(&self) -> bool {
        self.coboundaries.windows(2).all(|w| w[1].mul(&w[0]).is_zero())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CohomologyReport {
    /// `h[q] = dim H^q` for `q = 0..=max_degree`.
    pub h: Vec<usize>,
    /// Cochain dimensions `dim C^q` for `q = 0..=max_degree`.
    pub dims: Vec<usize>,
    /// Exact ranks of `δ_0, …, δ_{max_degree}`.
    pub ranks: Vec<usize>,
    pub squares_to_zero: bool,
    /// `k` times the fiber dimension of the union of the cover.
    pub expected_h0: usize,
    /// `h^0` is as expected and every higher group vanishes.
    pub exact: bool,
}

pub fn cech_cohomology(cover: &Cover, k: usize, max_degree: usize) -> Result<CohomologyReport> {
    if max_degree < 1 {
        return Err(Error::Precondition("max_degree must be at least 1".into()));
    }
    let cx = CechComplex::new(cover, k, max_degree + 1);
    let ranks = cx.exact_ranks();
    let dims = cx.dims()[..=max_degree].to_vec();
    let h: Vec<usize> = (0..=max_degree)
        .map(|q| dims[q] - ranks[q] - if q > 0 { ranks[q - 1] } else { 0 })
        .collect();
    let expected_h0 = k * cover.space().dim(cover.covered());
    let exact = h[0] == expected_h0 && h[1..].iter().all(|&x| x == 0);
    Ok(CohomologyReport {
        h,
        dims,
        ranks,
        squares_to_zero: cx.squares_to_zero(),
        expected_h0,
        exact,
    })
}

/// Ranks along `0 → F(U) → ∏ F(U_α) → ∏ F(U_α ∩ U_β)` for the Hom sheaf.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactnessReport {
    pub global_dim: usize,
    pub product_dim: usize,
    pub overlap_dim: usize,
    pub restriction_rank: usize,
    pub coboundary_rank: usize,
    pub injective: bool,
    pub middle_kernel_dim: usize,
    pub middle_image_dim: usize,
    pub composite_zero: bool,
    pub middle_exact: bool,
    /// Cokernel of `⊕ Hom(ℝ^{d_α},ℝ^k) → Hom(ℝ^{d_U},ℝ^k)` given by
    /// precomposition with projections.
    pub cosheaf_cokernel_dim: usize,
    pub verdict: bool,
}

pub fn sheaf_axiom_check(cover: &Cover, k: usize) -> ExactnessReport {
    let space = cover.space();
    let union = cover.covered();
    let blocks: Vec<IntMatrix> = (0..cover.len())
        .map(|a| selector(space, union, cover.members(a), k))
        .collect();
    let global_dim = k * space.dim(union);
    let rho = IntMatrix::vstack(&blocks, global_dim);
    let cx = CechComplex::new(cover, k, 1);
    let delta = cx.coboundary(0);
    let restriction_rank = rho.rank();
    let coboundary_rank = delta.rank();
    let middle_kernel_dim = cx.dims()[0] - coboundary_rank;
    let composite_zero = delta.mul(&rho).is_zero();
    let injective = restriction_rank == global_dim;
    let middle_exact = composite_zero && restriction_rank == middle_kernel_dim;
    // Extension by projection is the transpose of restriction on matrix units.
    let cosheaf_cokernel_dim = global_dim - rho.transpose().rank();
    ExactnessReport {
        global_dim,
        product_dim: cx.dims()[0],
        overlap_dim: cx.dims()[1],
        restriction_rank,
        coboundary_rank,
        injective,
        middle_kernel_dim,
        middle_image_dim: restriction_rank,
        composite_zero,
        middle_exact,
        cosheaf_cokernel_dim,
        verdict: injective && middle_exact,
    }
}

/// Whether every restriction `Hom(V) → Hom(U)` for the `(V, U)` pairs is
/// surjective.
pub fn flasque_check(space: &MarkedSpace, k: usize, pairs: &[(OpenSet, OpenSet)]) -> Result<bool> {
    for (v, u) in pairs {
        let m = restriction_matrix(space, v, u, k)?;
        if m.rank() != m.rows() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::make_cover;

    fn space(n: usize) -> MarkedSpace {
        MarkedSpace::uniform(n, 1).unwrap()
    }

    #[test]
    fn restriction_selectors() {
        let s = space(2);
        let v = OpenSet::new("v", [0, 1]);
        let u = OpenSet::new("u", [0]);
        assert_eq!(restriction_matrix(&s, &v, &v, 1).unwrap(), IntMatrix::identity(2));
        assert_eq!(
            restriction_matrix(&s, &v, &u, 1).unwrap(),
            IntMatrix::from_rows(&[vec![1, 0]])
        );
        let empty = restriction_matrix(&s, &v, &OpenSet::new("e", []), 1).unwrap();
        assert_eq!((empty.rows(), empty.cols()), (0, 2));
        assert!(restriction_matrix(&s, &u, &v, 1).is_err());
    }

    #[test]
    fn restriction_with_fibers_and_k() {
        let s = MarkedSpace::new(vec![1, 2], crate::topology::Structure::Abstract).unwrap();
        let v = OpenSet::new("v", [0, 1]);
        let u = OpenSet::new("u", [1]);
        let m = restriction_matrix(&s, &v, &u, 2).unwrap();
        // rows: (r, c) over d_U = 2; cols: (r, c) over d_V = 3
        let expect = IntMatrix::from_rows(&[
            vec![0, 1, 0, 0, 0, 0],
            vec![0, 0, 1, 0, 0, 0],
            vec![0, 0, 0, 0, 1, 0],
            vec![0, 0, 0, 0, 0, 1],
        ]);
        assert_eq!(m, expect);
    }

    #[test]
    fn exactness_examples() {
        let c = make_cover(&space(2), &[vec![0], vec![1]]).unwrap();
        let r = sheaf_axiom_check(&c, 1);
        assert!(r.verdict);
        assert_eq!((r.global_dim, r.product_dim, r.overlap_dim), (2, 2, 0));

        let c = make_cover(&space(2), &[vec![0, 1]]).unwrap();
        assert!(sheaf_axiom_check(&c, 1).verdict);

        let c = make_cover(&space(3), &[vec![0, 1], vec![1, 2]]).unwrap();
        let r = sheaf_axiom_check(&c, 1);
        assert!(r.verdict);
        assert_eq!(r.middle_kernel_dim, 3);
        assert_eq!((r.product_dim, r.overlap_dim), (4, 1));
        assert_eq!(r.cosheaf_cokernel_dim, 0);
    }

    #[test]
    fn cohomology_examples() {
        let c = make_cover(&space(2), &[vec![0], vec![1]]).unwrap();
        assert_eq!(cech_cohomology(&c, 1, 1).unwrap().h, vec![2, 0]);

        let c = make_cover(&space(3), &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        let r = cech_cohomology(&c, 1, 2).unwrap();
        assert_eq!(r.h, vec![3, 0, 0]);
        assert!(r.squares_to_zero && r.exact);

        let c = make_cover(&space(3), &[vec![0, 1, 2]]).unwrap();
        assert_eq!(cech_cohomology(&c, 2, 3).unwrap().h, vec![6, 0, 0, 0]);
        assert!(cech_cohomology(&c, 2, 0).is_err());
    }

    #[test]
    fn flasque_examples() {
        let s = space(3);
        let a = OpenSet::new("a", [0, 1]);
        let b = OpenSet::new("b", [0]);
        let all = OpenSet::new("all", [0, 1, 2]);
        let none = OpenSet::new("none", []);
        assert!(flasque_check(&s, 1, &[(a.clone(), b)]).unwrap());
        assert!(flasque_check(&s, 2, &[(a.clone(), a)]).unwrap());
        assert!(flasque_check(&s, 1, &[(all, none)]).unwrap());
    }
}
