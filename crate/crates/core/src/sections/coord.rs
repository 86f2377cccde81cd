//! Coordinate projections and zero-padding between nested open sets.

use super::expr::{Section, SectionBuilder};
use crate::error::{Error, Result};
use crate::topology::{MarkedSpace, OpenSet};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordKind {
    /// ℝ^{d_V} → ℝ^{d_U}, dropping coordinates of points outside U.
    Projection,
    /// ℝ^{d_U} → ℝ^{d_V}, writing zeros at coordinates of points outside U.
    ZeroPad,
}

/// A coordinate map between the fiber spaces of two nested open sets.
/// `slots[t]` names the source coordinate copied into target coordinate `t`,
/// or `None` for a zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordMap {
    kind: CoordKind,
    source: OpenSet,
    target: OpenSet,
    source_dim: usize,
    slots: Vec<Option<usize>>,
}

impl CoordMap {
    /// Projection from the larger `v` onto the smaller `u`.
    pub fn projection(space: &MarkedSpace, v: &OpenSet, u: &OpenSet) -> Result<Self> {
        nested(u, v)?;
        let slots = u
            .members
            .iter()
            .flat_map(|&p| space.coord_range(&v.members, p).expect("nested"))
            .map(Some)
            .collect();
        Ok(Self {
            kind: CoordKind::Projection,
            source: v.clone(),
            target: u.clone(),
            source_dim: space.dim(&v.members),
            slots,
        })
    }

    /// Zero-padding from the smaller `u` into the larger `v`.
    pub fn zero_pad(space: &MarkedSpace, u: &OpenSet, v: &OpenSet) -> Result<Self> {
        nested(u, v)?;
        let slots = v
            .members
            .iter()
            .flat_map(|&p| {
                let fiber = space.fiber_dims()[p];
                match space.coord_range(&u.members, p) {
                    Some(r) => r.map(Some).collect::<Vec<_>>(),
                    None => vec![None; fiber],
                }
            })
            .collect();
        Ok(Self {
            kind: CoordKind::ZeroPad,
            source: u.clone(),
            target: v.clone(),
            source_dim: space.dim(&u.members),
            slots,
        })
    }

    pub fn kind(&self) -> CoordKind {
        self.kind
    }

    pub fn source(&self) -> &OpenSet {
        &self.source
    }

    pub fn target(&self) -> &OpenSet {
        &self.target
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Option<usize>] {
        &self.slots
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.source_dim, "coordinate map arity");
        self.slots.iter().map(|s| s.map_or(0.0, |i| y[i])).collect()
    }

    /// The map as a section ℝ^{source} → ℝ^{target}.
    pub fn to_section(&self) -> Section {
        let mut b = SectionBuilder::new(self.source_dim);
        let zero = b.constant(0.0);
        let ins = b.inputs();
        let outs = self.slots.iter().map(|s| s.map_or(zero, |i| ins[i])).collect();
        b.finish(outs).on(self.source.clone())
    }
}

fn nested(u: &OpenSet, v: &OpenSet) -> Result<()> {
    if u.is_subset_of(v) {
        Ok(())
    } else {
        Err(Error::NotNested {
            inner: u.id.clone(),
            outer: v.id.clone(),
        })
    }
}

/// `s ∘ m`, a section on the source of `m`.
pub fn compose_coord(s: &Section, m: &CoordMap) -> Result<Section> {
    if m.target_dim() != s.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: s.input_dim(),
            got: m.target_dim(),
        });
    }
    s.compose(&m.to_section())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Structure;

    #[test]
    fn projection_after_pad_is_identity() {
        let space = MarkedSpace::new(vec![2, 1, 1], Structure::Abstract).unwrap();
        let u = OpenSet::new("u", [0, 2]);
        let v = OpenSet::new("v", [0, 1, 2]);
        let pad = CoordMap::zero_pad(&space, &u, &v).unwrap();
        let proj = CoordMap::projection(&space, &v, &u).unwrap();
        let y = [1.5, -2.0, 7.0];
        assert_eq!(pad.apply(&y), vec![1.5, -2.0, 0.0, 7.0]);
        assert_eq!(proj.apply(&pad.apply(&y)), y.to_vec());
        assert_eq!(proj.apply(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn rejects_non_nested() {
        let space = MarkedSpace::uniform(3, 1).unwrap();
        let a = OpenSet::new("a", [0, 1]);
        let b = OpenSet::new("b", [1, 2]);
        assert_eq!(
            CoordMap::projection(&space, &a, &b),
            Err(Error::NotNested {
                inner: "b".into(),
                outer: "a".into()
            })
        );
    }

    #[test]
    fn composition_updates_domain() {
        let space = MarkedSpace::uniform(2, 1).unwrap();
        let u = OpenSet::new("u", [0]);
        let v = OpenSet::new("v", [0, 1]);
        let g = Section::affine(1, &[3.0], &[1.0]).on(u.clone());
        let proj = CoordMap::projection(&space, &v, &u).unwrap();
        let ext = compose_coord(&g, &proj).unwrap();
        assert_eq!(ext.domain().unwrap().id, "v");
        assert_eq!(ext.evaluate(&[2.0, 100.0]).unwrap(), vec![7.0]);
        let pad = CoordMap::zero_pad(&space, &u, &v).unwrap();
        assert!(compose_coord(&g, &pad).is_err());
    }
}
