use super::{Claim, WitnessReport};
use crate::error::{Error, Result};
use crate::sections::{compose_coord, sections_equal, CoordMap, Section, SectionBuilder};
use crate::topology::{Cover, Members, OpenSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const MAX_ELEMENTS: usize = 20;

fn face(members: Members, mask: u32) -> OpenSet {
    OpenSet::new(format!("face{mask:b}"), members)
}

pub(super) fn check_shapes(locals: &[Section], cover: &Cover) -> Result<usize> {
    if locals.len() != cover.len() {
        return Err(Error::DimensionMismatch {
            expected: cover.len(),
            got: locals.len(),
        });
    }
    if cover.len() > MAX_ELEMENTS {
        return Err(Error::Unsupported(format!(
            "inclusion-exclusion over {} elements",
            cover.len()
        )));
    }
    let k = locals[0].output_dim();
    for (a, f) in locals.iter().enumerate() {
        let d = cover.space().dim(cover.members(a));
        if f.input_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.input_dim(),
            });
        }
        if f.output_dim() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: f.output_dim(),
            });
        }
    }
    Ok(k)
}

/// `f_α` restricted to `f ⊆ U_α`.
fn restrict(cover: &Cover, f: &Section, a: usize, target: &OpenSet) -> Result<Section> {
    compose_coord(f, &CoordMap::zero_pad(cover.space(), target, cover.element(a))?)
}

/// Glues compatible local sections into one section on the union:
/// `f = Σ_{∅≠S} (−1)^{|S|+1} f_S ∘ proj_S`, where `f_S` is the common
/// restriction of the locals to `∩_{α∈S} U_α`. Empty intersections take
/// part too: there the restriction is the constant value at zero.
pub fn glue_inclusion_exclusion(
    locals: &[Section],
    cover: &Cover,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<Section> {
    check_shapes(locals, cover)?;
    let n = cover.len();
    for a in 0..n {
        for b in a + 1..n {
            let overlap = face(cover.intersection(&[a, b]), (1 << a) | (1 << b));
            let ra = restrict(cover, &locals[a], a, &overlap)?;
            let rb = restrict(cover, &locals[b], b, &overlap)?;
            let eq = sections_equal(&ra, &rb, samples, tol, seed)?;
            if !eq.equal {
                return Err(Error::Incompatible {
                    first: a,
                    second: b,
                    deviation: eq.max_deviation,
                });
            }
        }
    }
    let union = cover.union_set();
    let mut terms = Vec::with_capacity((1 << n) - 1);
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|&a| mask & (1 << a) != 0).collect();
        let f_s = face(cover.intersection(&idx), mask);
        let local = restrict(cover, &locals[idx[0]], idx[0], &f_s)?;
        let extended = compose_coord(&local, &CoordMap::projection(cover.space(), &union, &f_s)?)?;
        let sign = if idx.len() % 2 == 1 { 1.0 } else { -1.0 };
        terms.push((sign, extended));
    }
    let refs: Vec<(f64, &Section)> = terms.iter().map(|(s, t)| (*s, t)).collect();
    Ok(Section::linear_combination(&refs)?.on(union))
}

/// Glues `locals` and restricts the result back to every element.
pub fn glue_witness(
    cover: &Cover,
    locals: &[Section],
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<(Section, WitnessReport)> {
    let glued = glue_inclusion_exclusion(locals, cover, samples, tol, seed)?;
    let union = cover.union_set();
    let mut worst: f64 = 0.0;
    let mut per_element = Vec::with_capacity(cover.len());
    for (a, f) in locals.iter().enumerate() {
        let back = compose_coord(&glued, &CoordMap::zero_pad(cover.space(), cover.element(a), &union)?)?;
        let dev = sections_equal(&back, f, samples, tol, seed)?.max_deviation;
        worst = worst.max(dev);
        per_element.push(dev);
    }
    let mut report = WitnessReport::new(Claim::Glue, Some(seed));
    report
        .input(
            "cover",
            (0..cover.len())
                .map(|a| cover.members(a).iter().map(|p| p + 1).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        )
        .input("samples", samples)
        .input("tol", tol)
        .measure("restriction_deviation", per_element)
        .measure("max_deviation", worst)
        .measure("terms", (1u64 << cover.len()) - 1)
        .check("glued section restricts to every local", worst <= tol);
    Ok((glued, report))
}

/// Locals `G ∘ pad_α` of a hidden seeded global section `G` on the union,
/// affine when `polynomial` is false and quadratic otherwise.
pub fn hidden_global_family(cover: &Cover, k: usize, polynomial: bool, seed: u64) -> Result<Vec<Section>> {
    let union = cover.union_set();
    let d = cover.space().dim(&union.members);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let mut b = SectionBuilder::new(d);
    let ins = b.inputs();
    let outs = (0..k)
        .map(|_| {
            let coeffs: Vec<f64> = (0..d).map(|_| normal()).collect();
            let lin = b.affine(&ins, &coeffs, normal());
            if !polynomial || d < 2 {
                return lin;
            }
            let pairs: Vec<_> = ins.windows(2).map(|w| b.product(w)).collect();
            let weights: Vec<f64> = pairs.iter().map(|_| normal()).collect();
            let quad = b.affine(&pairs, &weights, 0.0);
            b.sum(&[lin, quad])
        })
        .collect();
    let global = b.finish(outs);
    (0..cover.len())
        .map(|a| compose_coord(&global, &CoordMap::zero_pad(cover.space(), cover.element(a), &union)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{make_cover, MarkedSpace};

    #[test]
    fn disjoint_sum() {
        let space = MarkedSpace::uniform(2, 1).unwrap();
        let cover = make_cover(&space, &[vec![0], vec![1]]).unwrap();
        let f1 = Section::affine(1, &[2.0], &[0.0]);
        let f2 = Section::affine(1, &[-1.0], &[0.0]);
        let f = glue_inclusion_exclusion(&[f1, f2], &cover, 50, 1e-9, 1).unwrap();
        assert_eq!(f.evaluate(&[3.0, 5.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn biased_locals_agree_on_the_empty_overlap() {
        let space = MarkedSpace::uniform(2, 1).unwrap();
        let cover = make_cover(&space, &[vec![0], vec![1]]).unwrap();
        let f1 = Section::affine(1, &[1.0], &[1.0]);
        let f2 = Section::affine(1, &[1.0], &[1.0]);
        let (f, r) = glue_witness(&cover, &[f1, f2], 50, 1e-9, 1).unwrap();
        assert_eq!(f.evaluate(&[2.0, 3.0]).unwrap(), vec![6.0]);
        assert!(r.verdict);
        let f3 = Section::affine(1, &[1.0], &[2.0]);
        let f1 = Section::affine(1, &[1.0], &[1.0]);
        assert!(matches!(
            glue_inclusion_exclusion(&[f1, f3], &cover, 50, 1e-9, 1),
            Err(Error::Incompatible {
                first: 0,
                second: 1,
                ..
            })
        ));
    }

    #[test]
    fn incompatible_overlap() {
        let space = MarkedSpace::uniform(3, 1).unwrap();
        let cover = make_cover(&space, &[vec![0, 1], vec![1, 2]]).unwrap();
        let f1 = Section::affine(2, &[0.0, 1.0], &[0.0]);
        let f2 = Section::affine(2, &[2.0, 0.0], &[0.0]);
        match glue_inclusion_exclusion(&[f1, f2], &cover, 100, 1e-9, 4) {
            Err(Error::Incompatible {
                first,
                second,
                deviation,
            }) => {
                assert_eq!((first, second), (0, 1));
                assert!(deviation >= 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hidden_families_round_trip() {
        let space = MarkedSpace::new(vec![1, 2, 1, 1], crate::topology::Structure::Abstract).unwrap();
        let cover = make_cover(&space, &[vec![0, 1], vec![1, 2], vec![0, 2, 3]]).unwrap();
        for poly in [false, true] {
            let locals = hidden_global_family(&cover, 2, poly, 11).unwrap();
            let (_, r) = glue_witness(&cover, &locals, 100, 1e-9, 3).unwrap();
            assert!(r.verdict, "{r:?}");
        }
    }
}
