use super::glue::check_shapes;
use super::{Claim, WitnessReport};
use crate::error::{Error, Result};
use crate::sections::polynomial::{int, polynomials_of, section_of, Exponents, Polynomial};
use crate::sections::Section;
use crate::topology::{Cover, Members};
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt::Write;

/// Pairwise summands `f_{α,β}` over the coordinates of the cover's union,
/// one polynomial per output. Both orders of every pair are stored and
/// `f_{β,α} = −f_{α,β}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDecomposition {
    pub n_vars: usize,
    pub k: usize,
    pub n_elements: usize,
    pub pairs: BTreeMap<(usize, usize), Vec<Polynomial>>,
}

impl KernelDecomposition {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&[Polynomial]> {
        self.pairs.get(&(a, b)).map(Vec::as_slice)
    }

    /// `Σ_β f_{α,β}`.
    pub fn reconstruct(&self, a: usize) -> Vec<Polynomial> {
        let mut out = vec![Polynomial::zero(self.n_vars); self.k];
        for ((x, _), polys) in &self.pairs {
            if *x == a {
                for (o, p) in out.iter_mut().zip(polys) {
                    *o = &*o + p;
                }
            }
        }
        out
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.pairs.iter().all(|(&(a, b), polys)| {
            self.pairs
                .get(&(b, a))
                .is_some_and(|other| polys.iter().zip(other).all(|(p, q)| (p + q).is_zero()))
        })
    }

    /// `Σ_α Σ_β f_{α,β}` is the zero polynomial in every output.
    pub fn sums_to_zero(&self) -> bool {
        let mut total = vec![Polynomial::zero(self.n_vars); self.k];
        for polys in self.pairs.values() {
            for (t, p) in total.iter_mut().zip(polys) {
                *t = &*t + p;
            }
        }
        total.iter().all(Polynomial::is_zero)
    }
}

/// Local polynomials of `f_α ∘ proj_α`, as polynomials in the union's coordinates.
fn extended(cover: &Cover, locals: &[Section]) -> Result<(usize, Vec<Vec<Polynomial>>)> {
    let space = cover.space();
    let union = cover.union_set();
    let n = space.dim(&union.members);
    let ext = locals
        .iter()
        .enumerate()
        .map(|(a, f)| {
            let members = cover.members(a);
            let mapping: Vec<usize> = members
                .iter()
                .flat_map(|&p| space.coord_range(&union.members, p).expect("element inside union"))
                .collect();
            Ok(polynomials_of(f)?.iter().map(|p| p.relabel(&mapping, n)).collect())
        })
        .collect::<Result<_>>()?;
    Ok((n, ext))
}

fn support(owners: &[usize], e: &Exponents) -> Members {
    e.iter().zip(owners).filter(|(&x, _)| x > 0).map(|(_, &p)| p).collect()
}

/// Splits a family of polynomial locals whose extensions sum to zero into
/// antisymmetric pairwise summands supported on pairwise intersections.
/// Every monomial is routed through the lowest-indexed element containing
/// its support.
pub fn cosheaf_kernel_decompose(locals: &[Section], cover: &Cover) -> Result<KernelDecomposition> {
    let k = check_shapes(locals, cover)?;
    let (n_vars, ext) = extended(cover, locals)?;
    let space = cover.space();
    let owners = space.coord_owners(&cover.union_set().members);
    let holders = |e: &Exponents| -> Vec<usize> {
        let s = support(&owners, e);
        (0..cover.len()).filter(|&b| s.is_subset(cover.members(b))).collect()
    };
    for (a, polys) in ext.iter().enumerate() {
        for p in polys {
            if p.terms().keys().any(|e| holders(e).len() < 2) {
                return Err(Error::MonomialOutsideOverlaps { element: a });
            }
        }
    }
    for r in 0..k {
        let total = ext.iter().fold(Polynomial::zero(n_vars), |acc, polys| &acc + &polys[r]);
        if !total.is_zero() {
            return Err(Error::NotInKernel);
        }
    }
    let mut pairs: BTreeMap<(usize, usize), Vec<Polynomial>> = BTreeMap::new();
    for (a, polys) in ext.iter().enumerate() {
        for (r, p) in polys.iter().enumerate() {
            for (e, c) in p.terms() {
                let root = holders(e)[0];
                if root == a {
                    continue;
                }
                for (x, y, coeff) in [(a, root, c.clone()), (root, a, -c.clone())] {
                    let entry = pairs.entry((x, y)).or_insert_with(|| vec![Polynomial::zero(n_vars); k]);
                    entry[r].add_term(e.clone(), coeff);
                }
            }
        }
    }
    pairs.retain(|_, polys| polys.iter().any(|p| !p.is_zero()));
    Ok(KernelDecomposition {
        n_vars,
        k,
        n_elements: cover.len(),
        pairs,
    })
}

/// Readable form with variables `y1, y2, …` in union coordinates.
pub fn render(p: &Polynomial) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (t, (e, c)) in p.terms().iter().enumerate() {
        let sign = if c.is_negative() { "-" } else { "+" };
        if t == 0 {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        let mag = c.abs();
        let vars: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0)
            .map(|(i, &x)| {
                if x == 1 {
                    format!("y{}", i + 1)
                } else {
                    format!("y{}^{x}", i + 1)
                }
            })
            .collect();
        if vars.is_empty() || mag != int(1) {
            out.push_str(&mag.to_string());
            if !vars.is_empty() {
                out.push('*');
            }
        }
        out.push_str(&vars.join("*"));
    }
    out
}

/// Decomposes `locals` and reports the exact reconstruction checks.
pub fn kernel_witness(cover: &Cover, locals: &[Section]) -> Result<(KernelDecomposition, WitnessReport)> {
    let dec = cosheaf_kernel_decompose(locals, cover)?;
    let (_, ext) = extended(cover, locals)?;
    let reconstructs = (0..cover.len()).all(|a| dec.reconstruct(a) == ext[a]);
    let rendered: BTreeMap<String, Vec<String>> = dec
        .pairs
        .iter()
        .map(|(&(a, b), polys)| (format!("{},{}", a + 1, b + 1), polys.iter().map(render).collect()))
        .collect();
    let mut report = WitnessReport::new(Claim::Kernel, None);
    report
        .input(
            "cover",
            (0..cover.len())
                .map(|a| cover.members(a).iter().map(|p| p + 1).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        )
        .measure("pairs", rendered)
        .check("summands are antisymmetric", dec.is_antisymmetric())
        .check("summands reconstruct every local", reconstructs)
        .check("summands sum to zero", dec.sums_to_zero());
    Ok((dec, report))
}

/// A seeded kernel element built from random integer polynomials `g_{α,β}`
/// on each nonempty pairwise overlap: `f_α` gains `g_{α,β}` and `f_β` loses
/// it. Returns the locals and the generators' antisymmetrization in union
/// coordinates.
#[allow(clippy::type_complexity)]
pub fn pairwise_family(
    cover: &Cover,
    k: usize,
    seed: u64,
) -> Result<(Vec<Section>, BTreeMap<(usize, usize), Vec<Polynomial>>)> {
    let space = cover.space();
    let union = cover.union_set();
    let n = space.dim(&union.members);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims: Vec<usize> = (0..cover.len()).map(|a| space.dim(cover.members(a))).collect();
    let mut locals: Vec<Vec<Polynomial>> = dims.iter().map(|&d| vec![Polynomial::zero(d); k]).collect();
    let mut generators = BTreeMap::new();
    let to_coords = |members: &Members, target: &Members| -> Vec<usize> {
        members
            .iter()
            .flat_map(|&p| space.coord_range(target, p).expect("nested"))
            .collect()
    };
    for a in 0..cover.len() {
        for b in a + 1..cover.len() {
            let overlap = cover.intersection(&[a, b]);
            if overlap.is_empty() {
                continue;
            }
            let d = space.dim(&overlap);
            let g: Vec<Polynomial> = (0..k)
                .map(|_| {
                    let mut p = Polynomial::zero(d);
                    for _ in 0..rng.random_range(1..=4) {
                        let e: Exponents = (0..d).map(|_| rng.random_range(0..=2)).collect();
                        let c = rng.random_range(1..=3) * if rng.random_bool(0.5) { 1 } else { -1 };
                        p.add_term(e, int(c));
                    }
                    p
                })
                .collect();
            let into_a = to_coords(&overlap, cover.members(a));
            let into_b = to_coords(&overlap, cover.members(b));
            let into_u = to_coords(&overlap, &union.members);
            for (r, p) in g.iter().enumerate() {
                locals[a][r] = &locals[a][r] + &p.relabel(&into_a, dims[a]);
                locals[b][r] = &locals[b][r] - &p.relabel(&into_b, dims[b]);
            }
            let global: Vec<Polynomial> = g.iter().map(|p| p.relabel(&into_u, n)).collect();
            let negated = global.iter().map(|p| p.scale(&-int(1))).collect();
            generators.insert((a, b), global);
            generators.insert((b, a), negated);
        }
    }
    let sections = locals
        .iter()
        .zip(&dims)
        .map(|(polys, &d)| section_of(polys, d))
        .collect();
    Ok((sections, generators))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{make_cover, MarkedSpace};

    #[test]
    fn two_element_example() {
        let space = MarkedSpace::uniform(3, 1).unwrap();
        let cover = make_cover(&space, &[vec![0, 1], vec![1, 2]]).unwrap();
        let f1 = Section::affine(2, &[0.0, 1.0], &[0.0]);
        let f2 = Section::affine(2, &[-1.0, 0.0], &[0.0]);
        let (dec, r) = kernel_witness(&cover, &[f1, f2]).unwrap();
        assert!(r.verdict);
        assert_eq!(render(&dec.get(0, 1).unwrap()[0]), "y2");
        assert_eq!(render(&dec.get(1, 0).unwrap()[0]), "-y2");
    }

    #[test]
    fn zero_locals() {
        let space = MarkedSpace::uniform(3, 1).unwrap();
        let cover = make_cover(&space, &[vec![0, 1], vec![1, 2]]).unwrap();
        let z = Section::zero(2, 1);
        assert!(cosheaf_kernel_decompose(&[z.clone(), z], &cover).unwrap().is_empty());
    }

    #[test]
    fn rejects_outside_monomials_and_nonzero_sums() {
        let space = MarkedSpace::uniform(3, 1).unwrap();
        let cover = make_cover(&space, &[vec![0, 1], vec![1, 2]]).unwrap();
        let f1 = Section::affine(2, &[1.0, 0.0], &[0.0]);
        let f2 = Section::zero(2, 1);
        assert_eq!(
            cosheaf_kernel_decompose(&[f1, f2.clone()], &cover),
            Err(Error::MonomialOutsideOverlaps { element: 0 })
        );
        let f1 = Section::affine(2, &[0.0, 1.0], &[0.0]);
        assert_eq!(cosheaf_kernel_decompose(&[f1, f2], &cover), Err(Error::NotInKernel));
    }

    #[test]
    fn generated_families_round_trip() {
        let space = MarkedSpace::new(vec![1, 2, 1, 1], crate::topology::Structure::Abstract).unwrap();
        let cover = make_cover(&space, &[vec![0, 1], vec![1, 2], vec![0, 2, 3]]).unwrap();
        for seed in 0..5 {
            let (locals, gens) = pairwise_family(&cover, 2, seed).unwrap();
            let (dec, r) = kernel_witness(&cover, &locals).unwrap();
            assert!(r.verdict, "{r:?}");
            for a in 0..3 {
                let mut expect = vec![Polynomial::zero(dec.n_vars); 2];
                for ((x, _), g) in &gens {
                    if *x == a {
                        for (e, p) in expect.iter_mut().zip(g) {
                            *e = &*e + p;
                        }
                    }
                }
                assert_eq!(dec.reconstruct(a), expect);
            }
        }
    }
}
