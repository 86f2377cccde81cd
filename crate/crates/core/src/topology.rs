//! Finite marked spaces, open sets as membership sets, covers, nerves and the
//! neighborhood-aggregating axiom checker.
//!
//! Points are 0-based here; the JSON layer converts from 1-based indices.
//! Every structure map in the crate depends on an open set only through the
//! marked points it contains, so an open set is modeled as an id plus its
//! membership set and intersections are plain set intersections.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

pub type Members = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structure {
    Grid { rows: usize, cols: usize },
    Graph { edges: Vec<(usize, usize)> },
    Line,
    Abstract,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedSpace {
    fiber_dims: Vec<usize>,
    structure: Structure,
}

impl MarkedSpace {
    pub fn new(fiber_dims: Vec<usize>, structure: Structure) -> Result<Self> {
        if fiber_dims.is_empty() || fiber_dims.contains(&0) {
            return Err(Error::InvalidSpace);
        }
        let n = fiber_dims.len();
        match &structure {
            Structure::Grid { rows, cols } if rows * cols != n => {
                return Err(Error::DimensionMismatch {
                    expected: rows * cols,
                    got: n,
                })
            }
            Structure::Graph { edges } => {
                for &(u, v) in edges {
                    for p in [u, v] {
                        if p >= n {
                            return Err(Error::PointOutOfRange { index: p, n_points: n });
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(Self { fiber_dims, structure })
    }

    /// `n` points of fiber dimension `l`, no geometry.
    pub fn uniform(n: usize, l: usize) -> Result<Self> {
        Self::new(vec![l; n], Structure::Abstract)
    }

    /// Row-major grid of `rows x cols` cells, each of fiber dimension `l`.
    pub fn grid(rows: usize, cols: usize, l: usize) -> Result<Self> {
        Self::new(vec![l; rows * cols], Structure::Grid { rows, cols })
    }

    pub fn n_points(&self) -> usize {
        self.fiber_dims.len()
    }

    pub fn fiber_dims(&self) -> &[usize] {
        &self.fiber_dims
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn all_points(&self) -> Members {
        (0..self.n_points()).collect()
    }

    /// Dimension of the concatenated fibers over `members`.
    pub fn dim(&self, members: &Members) -> usize {
        members.iter().map(|&i| self.fiber_dims[i]).sum()
    }

    pub fn total_dim(&self) -> usize {
        self.fiber_dims.iter().sum()
    }

    /// Coordinates of `point` inside the concatenated space of `members`,
    /// or `None` when the point is not a member.
    pub fn coord_range(&self, members: &Members, point: usize) -> Option<Range<usize>> {
        if !members.contains(&point) {
            return None;
        }
        let start: usize = members.range(..point).map(|&i| self.fiber_dims[i]).sum();
        Some(start..start + self.fiber_dims[point])
    }

    /// The point owning each coordinate of the concatenated space of `members`.
    pub fn coord_owners(&self, members: &Members) -> Vec<usize> {
        members
            .iter()
            .flat_map(|&i| std::iter::repeat_n(i, self.fiber_dims[i]))
            .collect()
    }

    fn check_members(&self, members: &Members) -> Result<()> {
        match members.iter().find(|&&i| i >= self.n_points()) {
            Some(&index) => Err(Error::PointOutOfRange {
                index,
                n_points: self.n_points(),
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenSet {
    pub id: String,
    pub members: Members,
}

impl OpenSet {
    pub fn new(id: impl Into<String>, members: impl IntoIterator<Item = usize>) -> Self {
        Self {
            id: id.into(),
            members: members.into_iter().collect(),
        }
    }

    pub fn is_subset_of(&self, other: &OpenSet) -> bool {
        self.members.is_subset(&other.members)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cover {
    space: MarkedSpace,
    elements: Vec<OpenSet>,
    covered: Members,
}

/// Builds a cover from 0-based membership lists, assigning ids `U0, U1, ...`.
pub fn make_cover(space: &MarkedSpace, memberships: &[Vec<usize>]) -> Result<Cover> {
    let elements = memberships
        .iter()
        .enumerate()
        .map(|(i, m)| OpenSet::new(format!("U{i}"), m.iter().copied()))
        .collect();
    Cover::new(space.clone(), elements)
}

impl Cover {
    pub fn new(space: MarkedSpace, elements: Vec<OpenSet>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyCover);
        }
        let mut ids = BTreeSet::new();
        let mut covered = Members::new();
        for e in &elements {
            space.check_members(&e.members)?;
            if !ids.insert(e.id.as_str()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
            covered.extend(&e.members);
        }
        Ok(Self {
            space,
            elements,
            covered,
        })
    }

    pub fn space(&self) -> &MarkedSpace {
        &self.space
    }

    pub fn elements(&self) -> &[OpenSet] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &OpenSet {
        &self.elements[i]
    }

    pub fn members(&self, i: usize) -> &Members {
        &self.elements[i].members
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Union of all members.
    pub fn covered(&self) -> &Members {
        &self.covered
    }

    /// The union of the cover as an open set with id `"union"`.
    pub fn union_set(&self) -> OpenSet {
        OpenSet::new("union", self.covered.iter().copied())
    }

    /// Membership of the intersection of the elements indexed by `indices`.
    pub fn intersection(&self, indices: &[usize]) -> Members {
        let mut it = indices.iter();
        let Some(&first) = it.next() else {
            return self.covered.clone();
        };
        let mut acc = self.members(first).clone();
        for &i in it {
            acc.retain(|p| self.members(i).contains(p));
        }
        acc
    }
}

/// Intersections of all index subsets up to a size bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nerve {
    max_order: usize,
    faces: BTreeMap<Vec<usize>, Members>,
}

pub fn nerve(cover: &Cover, max_order: usize) -> Nerve {
    let n = cover.len();
    let order = max_order.min(n);
    let mut faces = BTreeMap::new();
    // grow subsets in lexicographic order, reusing the parent's intersection
    let mut frontier: Vec<(Vec<usize>, Members)> = (0..n).map(|i| (vec![i], cover.members(i).clone())).collect();
    for size in 1..=order {
        let mut next = Vec::new();
        for (s, m) in frontier {
            if size < order {
                let last = *s.last().expect("subsets are nonempty");
                for j in last + 1..n {
                    let mut t = s.clone();
                    t.push(j);
                    let meet = m.intersection(cover.members(j)).copied().collect();
                    next.push((t, meet));
                }
            }
            faces.insert(s, m);
        }
        frontier = next;
    }
    Nerve {
        max_order: order,
        faces,
    }
}

impl Nerve {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Membership of the face indexed by the sorted subset `s`.
    pub fn face(&self, s: &[usize]) -> Option<&Members> {
        self.faces.get(s)
    }

    pub fn faces(&self) -> impl Iterator<Item = (&Vec<usize>, &Members)> {
        self.faces.iter()
    }

    pub fn faces_of_size(&self, size: usize) -> impl Iterator<Item = (&Vec<usize>, &Members)> {
        self.faces.iter().filter(move |(s, _)| s.len() == size)
    }
}

/// Stages `C_0, ..., C_m, C_global` of a discrete deep learning technique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverSequence {
    space: MarkedSpace,
    stages: Vec<Cover>,
}

impl CoverSequence {
    /// Checks that stage 0 isolates each point in order and that the last
    /// stage is the single global element.
    pub fn new(space: MarkedSpace, stages: Vec<Cover>) -> Result<Self> {
        if stages.len() < 2 {
            return Err(Error::InvalidSequence(
                "need at least a stage-0 cover and the global cover".into(),
            ));
        }
        let n = space.n_points();
        if stages.iter().any(|c| c.space() != &space) {
            return Err(Error::InvalidSequence("stages live on different spaces".into()));
        }
        let first = &stages[0];
        if first.len() != n {
            return Err(Error::InvalidSequence(format!(
                "stage 0 has {} elements, expected {n}",
                first.len()
            )));
        }
        for i in 0..n {
            if first.members(i).len() != 1 || !first.members(i).contains(&i) {
                return Err(Error::InvalidSequence(format!(
                    "stage-0 element {i} must contain exactly point {i}"
                )));
            }
        }
        let last = stages.last().expect("len checked");
        if last.len() != 1 || last.members(0).len() != n {
            return Err(Error::InvalidSequence(
                "last stage must be the single global open set".into(),
            ));
        }
        Ok(Self { space, stages })
    }

    /// Builds a sequence from 0-based memberships; the singleton stage and the
    /// global stage are prepended and appended.
    pub fn from_internal(space: &MarkedSpace, internal: &[Vec<Vec<usize>>]) -> Result<Self> {
        let n = space.n_points();
        let mut stages = Vec::with_capacity(internal.len() + 2);
        let singletons: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        stages.push(stage_cover(space, 0, &singletons)?);
        for (s, m) in internal.iter().enumerate() {
            stages.push(stage_cover(space, s + 1, m)?);
        }
        stages.push(stage_cover(space, internal.len() + 1, &[(0..n).collect::<Vec<_>>()])?);
        Self::new(space.clone(), stages)
    }

    /// Builds a sequence from every stage's 0-based memberships, including
    /// the singleton and global stages.
    pub fn from_stages(space: &MarkedSpace, stages: &[Vec<Vec<usize>>]) -> Result<Self> {
        let covers = stages
            .iter()
            .enumerate()
            .map(|(s, m)| stage_cover(space, s, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space.clone(), covers)
    }

    pub fn space(&self) -> &MarkedSpace {
        &self.space
    }

    pub fn stages(&self) -> &[Cover] {
        &self.stages
    }

    pub fn stage(&self, i: usize) -> &Cover {
        &self.stages[i]
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// 0-based memberships of every stage.
    pub fn memberships(&self) -> Vec<Vec<Vec<usize>>> {
        self.stages
            .iter()
            .map(|c| {
                c.elements()
                    .iter()
                    .map(|e| e.members.iter().copied().collect())
                    .collect()
            })
            .collect()
    }
}

fn stage_cover(space: &MarkedSpace, stage: usize, memberships: &[Vec<usize>]) -> Result<Cover> {
    let elements = memberships
        .iter()
        .enumerate()
        .map(|(i, m)| OpenSet::new(format!("s{stage}.{i}"), m.iter().copied()))
        .collect();
    Cover::new(space.clone(), elements)
}

/// The four axioms evaluated on one consecutive stage pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageAxioms {
    /// Index of the output stage; the pair is `(target - 1, target)`.
    pub target: usize,
    /// The output stage is the global cover.
    pub terminal: bool,
    pub locality: bool,
    pub strictness: bool,
    pub non_triviality: bool,
    pub distinctness: bool,
    /// A point outside every output element, when one exists.
    pub uncovered_point: Option<usize>,
    /// First output element that is not a union of a proper input subfamily.
    pub non_trivial_failure: Option<usize>,
    /// First pair of output elements with equal membership.
    pub duplicate_pair: Option<(usize, usize)>,
}

impl StageAxioms {
    pub fn all_hold(&self) -> bool {
        self.locality && self.strictness && self.non_triviality && self.distinctness
    }
}

/// First stage pair (by output-stage index) violating each axiom.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FirstViolations {
    pub locality: Option<usize>,
    pub strictness: Option<usize>,
    pub non_triviality: Option<usize>,
    pub distinctness: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub stages: Vec<StageAxioms>,
    pub first_violation: FirstViolations,
    /// All four axioms hold on every pair whose output stage is not global.
    /// The global stage contains every point, so locality can never hold there.
    pub verdict: bool,
}

pub fn check_na_axioms(seq: &CoverSequence) -> Result<AxiomReport> {
    check_stages(seq.stages())
}

/// Axiom check on an arbitrary list of covers over one space. The last cover
/// is treated as terminal when it is a single element holding every point.
pub fn check_stages(stages: &[Cover]) -> Result<AxiomReport> {
    if stages.len() < 2 {
        return Err(Error::InvalidSequence("axioms need at least two stages".into()));
    }
    let n = stages[0].space().n_points();
    let mut report = AxiomReport {
        stages: Vec::with_capacity(stages.len() - 1),
        first_violation: FirstViolations::default(),
        verdict: true,
    };
    for t in 1..stages.len() {
        let next = &stages[t];
        let terminal = t == stages.len() - 1 && next.len() == 1 && next.members(0).len() == n;
        let s = check_stage_pair(&stages[t - 1], next, t, terminal);
        let fv = &mut report.first_violation;
        for (ok, slot) in [
            (s.locality, &mut fv.locality),
            (s.strictness, &mut fv.strictness),
            (s.non_triviality, &mut fv.non_triviality),
            (s.distinctness, &mut fv.distinctness),
        ] {
            if !ok && slot.is_none() {
                *slot = Some(t);
            }
        }
        if !terminal && !s.all_hold() {
            report.verdict = false;
        }
        report.stages.push(s);
    }
    Ok(report)
}

pub fn check_stage_pair(prev: &Cover, next: &Cover, target: usize, terminal: bool) -> StageAxioms {
    let n = next.space().n_points();
    let uncovered_point = (0..n).find(|p| !next.covered().contains(p));
    let non_trivial_failure = (0..next.len()).find(|&b| !is_proper_union(prev, next.members(b)));
    let mut duplicate_pair = None;
    'outer: for a in 0..next.len() {
        for b in a + 1..next.len() {
            if next.members(a) == next.members(b) {
                duplicate_pair = Some((a, b));
                break 'outer;
            }
        }
    }
    StageAxioms {
        target,
        terminal,
        locality: uncovered_point.is_some(),
        strictness: prev.len() > next.len(),
        non_triviality: non_trivial_failure.is_none(),
        distinctness: duplicate_pair.is_none(),
        uncovered_point,
        non_trivial_failure,
        duplicate_pair,
    }
}

/// Whether `target` is the union of a proper subfamily of `prev`.
///
/// Only elements contained in `target` can take part in such a union, so the
/// candidate family is exactly those. If that family is already proper the
/// union test decides; otherwise some element must be redundant.
pub fn is_proper_union(prev: &Cover, target: &Members) -> bool {
    let inside: Vec<usize> = (0..prev.len()).filter(|&a| prev.members(a).is_subset(target)).collect();
    let union: Members = inside.iter().flat_map(|&a| prev.members(a).iter().copied()).collect();
    if &union != target {
        return false;
    }
    if inside.len() < prev.len() {
        return true;
    }
    (0..inside.len()).any(|skip| {
        let rest: Members = inside
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .flat_map(|(_, &a)| prev.members(a).iter().copied())
            .collect();
        &rest == target
    })
}

/// A subfamily of `prev` whose union is `target`, if any (all contained elements).
pub fn union_subfamily(prev: &Cover, target: &Members) -> Option<Vec<usize>> {
    let inside: Vec<usize> = (0..prev.len()).filter(|&a| prev.members(a).is_subset(target)).collect();
    let union: Members = inside.iter().flat_map(|&a| prev.members(a).iter().copied()).collect();
    (&union == target).then_some(inside)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize) -> MarkedSpace {
        MarkedSpace::uniform(n, 1).unwrap()
    }

    fn set(v: &[usize]) -> Members {
        v.iter().copied().collect()
    }

    #[test]
    fn cover_union_and_ids() {
        let c = make_cover(&space(2), &[vec![0], vec![1]]).unwrap();
        assert_eq!(c.covered(), &set(&[0, 1]));
        let c = make_cover(&space(3), &[vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(c.covered(), &set(&[0, 1, 2]));
        assert_eq!(c.intersection(&[0, 1]), set(&[1]));
        let g = MarkedSpace::grid(2, 2, 1).unwrap();
        let c = make_cover(&g, &[vec![0, 1], vec![2, 3], vec![0, 2]]).unwrap();
        assert_eq!(c.covered(), &set(&[0, 1, 2, 3]));
    }

    #[test]
    fn cover_errors() {
        assert_eq!(make_cover(&space(2), &[]), Err(Error::EmptyCover));
        assert!(matches!(
            make_cover(&space(2), &[vec![2]]),
            Err(Error::PointOutOfRange { index: 2, .. })
        ));
        let dup = Cover::new(space(2), vec![OpenSet::new("a", [0]), OpenSet::new("a", [1])]);
        assert_eq!(dup, Err(Error::DuplicateId("a".into())));
        assert_eq!(
            MarkedSpace::new(vec![1, 0], Structure::Abstract),
            Err(Error::InvalidSpace)
        );
        assert!(MarkedSpace::new(vec![1; 5], Structure::Grid { rows: 2, cols: 2 }).is_err());
    }

    #[test]
    fn nerve_faces() {
        let c = make_cover(&space(2), &[vec![0], vec![1]]).unwrap();
        assert_eq!(nerve(&c, 2).face(&[0, 1]), Some(&Members::new()));

        let c = make_cover(&space(3), &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        let nv = nerve(&c, 3);
        assert_eq!(nv.face(&[0, 1, 2]), Some(&Members::new()));
        for pair in [[0, 1], [0, 2], [1, 2]] {
            assert!(!nv.face(&pair).unwrap().is_empty());
        }

        let c = make_cover(&space(3), &[vec![0, 1, 2]]).unwrap();
        assert_eq!(nerve(&c, 1).face(&[0]), Some(&set(&[0, 1, 2])));
    }

    #[test]
    fn coordinates_follow_member_order() {
        let s = MarkedSpace::new(vec![2, 1, 3], Structure::Line).unwrap();
        let m = set(&[0, 2]);
        assert_eq!(s.dim(&m), 5);
        assert_eq!(s.coord_range(&m, 2), Some(2..5));
        assert_eq!(s.coord_range(&m, 1), None);
        assert_eq!(s.coord_owners(&m), vec![0, 0, 2, 2, 2]);
    }

    #[test]
    fn sequence_validation() {
        let s = space(3);
        assert!(CoverSequence::from_internal(&s, &[vec![vec![0, 1], vec![1, 2]]]).is_ok());
        let bad = CoverSequence::from_stages(&s, &[vec![vec![0, 1], vec![2]], vec![vec![0, 1, 2]]]);
        assert!(matches!(bad, Err(Error::InvalidSequence(_))));
        let bad = CoverSequence::from_stages(&s, &[vec![vec![0], vec![1], vec![2]]]);
        assert!(bad.is_err());
    }

    #[test]
    fn axioms_on_four_to_two() {
        let s = space(4);
        let seq = CoverSequence::from_internal(&s, &[vec![vec![0, 1], vec![0, 2]]]).unwrap();
        let r = check_na_axioms(&seq).unwrap();
        assert!(r.stages[0].all_hold());
        assert_eq!(r.stages[0].uncovered_point, Some(3));
        assert!(r.stages[1].terminal);
        assert!(!r.stages[1].locality);
        assert!(r.verdict);
        assert_eq!(r.first_violation.locality, Some(2));
    }

    #[test]
    fn identical_stages_fail_strictness() {
        let s = space(3);
        let mid = vec![vec![0, 1], vec![1, 2]];
        let seq = CoverSequence::from_internal(&s, &[mid.clone(), mid]).unwrap();
        let r = check_na_axioms(&seq).unwrap();
        assert!(!r.stages[1].strictness);
        assert_eq!(r.first_violation.strictness, Some(2));
        assert!(!r.verdict);
    }

    #[test]
    fn duplicated_full_elements_fail_locality_and_distinctness() {
        let s = space(2);
        let seq = CoverSequence::from_internal(&s, &[vec![vec![0, 1], vec![0, 1]]]).unwrap();
        let r = check_na_axioms(&seq).unwrap();
        let st = &r.stages[0];
        assert!(!st.locality && !st.distinctness);
        assert_eq!(st.duplicate_pair, Some((0, 1)));
    }

    #[test]
    fn proper_union_needs_redundancy_when_family_is_full() {
        let s = space(3);
        let prev = make_cover(&s, &[vec![0, 1], vec![1, 2], vec![1]]).unwrap();
        assert!(is_proper_union(&prev, &set(&[0, 1, 2])));
        let prev = make_cover(&s, &[vec![0, 1], vec![2]]).unwrap();
        assert!(!is_proper_union(&prev, &set(&[0, 1, 2])));
        assert!(is_proper_union(&prev, &set(&[2])));
        assert!(!is_proper_union(&prev, &set(&[0])));
        assert!(is_proper_union(&prev, &Members::new()));
    }
}
