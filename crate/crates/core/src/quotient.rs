//! Finite isometric actions, orbit quotients with the Hausdorff metric, and
//! the pushforward of measures onto orbit classes.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::metric::{MetricSpace, PointId};
use crate::rational::{self, Rational};
use crate::transport::{self, SignedMeasure};

/// A finite group acting by isometries on an explicit finite space, stored
/// as its set of point permutations.
#[derive(Debug, Clone)]
pub struct FiniteAction {
    space: Arc<MetricSpace>,
    perms: Vec<Vec<usize>>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidAction(msg.into())
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    // (a ∘ b)(x) = a(b(x))
    b.iter().map(|&x| a[x]).collect()
}

impl FiniteAction {
    /// `perms` must contain the identity, be closed under composition and
    /// act by isometries.
    pub fn from_permutations(space: Arc<MetricSpace>, perms: Vec<Vec<usize>>) -> Result<Self> {
        if !space.is_explicit() {
            return Err(invalid("actions need an explicit finite space"));
        }
        let n = space.len();
        if perms.is_empty() {
            return Err(invalid("no permutations"));
        }
        for p in &perms {
            if p.len() != n {
                return Err(invalid(format!("permutation of length {} on {n} points", p.len())));
            }
            let mut seen = vec![false; n];
            for &x in p {
                if x >= n || std::mem::replace(&mut seen[x], true) {
                    return Err(invalid(format!("{p:?} is not a bijection")));
                }
            }
        }
        let set: BTreeSet<Vec<usize>> = perms.iter().cloned().collect();
        let identity: Vec<usize> = (0..n).collect();
        if !set.contains(&identity) {
            return Err(invalid("identity permutation missing"));
        }
        for a in &set {
            for b in &set {
                if !set.contains(&compose(a, b)) {
                    return Err(invalid(format!("not closed: {a:?} ∘ {b:?}")));
                }
            }
        }
        let perms: Vec<Vec<usize>> = set.into_iter().collect();
        check_isometry(&space, &perms)?;
        Ok(FiniteAction { space, perms })
    }

    /// The group generated by `generators` under composition.
    pub fn generated_by(space: Arc<MetricSpace>, generators: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.len();
        let identity: Vec<usize> = (0..n).collect();
        for g in &generators {
            if g.len() != n {
                return Err(invalid(format!("permutation of length {} on {n} points", g.len())));
            }
            let distinct: BTreeSet<usize> = g.iter().copied().collect();
            if distinct.len() != n || g.iter().any(|&x| x >= n) {
                return Err(invalid(format!("{g:?} is not a bijection")));
            }
        }
        let mut set: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut queue = VecDeque::from([identity]);
        while let Some(p) = queue.pop_front() {
            if !set.insert(p.clone()) {
                continue;
            }
            for g in &generators {
                let q = compose(g, &p);
                if !set.contains(&q) {
                    queue.push_back(q);
                }
            }
        }
        Self::from_permutations(space, set.into_iter().collect())
    }

    /// Checks the action axioms on `elements` (which must be closed under
    /// multiplication) and records the induced permutations.
    pub fn from_group<G: Group>(
        space: Arc<MetricSpace>,
        group: &G,
        elements: &[G::Elem],
        act: impl Fn(&G::Elem, usize) -> usize,
    ) -> Result<Self> {
        let n = space.len();
        let table: Vec<Vec<usize>> = elements
            .iter()
            .map(|g| (0..n).map(|x| act(g, x)).collect())
            .collect();
        let index: HashMap<String, usize> = elements
            .iter()
            .enumerate()
            .map(|(i, g)| (group.canonical(g), i))
            .collect();
        let e = index
            .get(&group.canonical(&group.identity()))
            .ok_or_else(|| invalid("identity missing from the element list"))?;
        if table[*e].iter().enumerate().any(|(x, &y)| x != y) {
            return Err(invalid("identity does not act trivially"));
        }
        for (i, g) in elements.iter().enumerate() {
            for (j, h) in elements.iter().enumerate() {
                let gh = index
                    .get(&group.canonical(&group.multiply(g, h)))
                    .ok_or_else(|| invalid("element list is not closed"))?;
                for x in 0..n {
                    if table[*gh][x] != table[i][table[j][x]] {
                        return Err(invalid(format!(
                            "act(gh, x) != act(g, act(h, x)) at x = {}",
                            space.points()[x]
                        )));
                    }
                }
            }
        }
        Self::from_permutations(space, table)
    }

    pub fn trivial(space: Arc<MetricSpace>) -> Result<Self> {
        let n = space.len();
        Self::from_permutations(space, vec![(0..n).collect()])
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn order(&self) -> usize {
        self.perms.len()
    }
}

fn check_isometry(space: &MetricSpace, perms: &[Vec<usize>]) -> Result<()> {
    let n = space.len();
    let d = |i: usize, j: usize| space.entry(i, j).expect("explicit");
    for p in perms {
        for x in 0..n {
            for y in 0..n {
                if d(p[x], p[y]) != d(x, y) {
                    let pts = space.points();
                    return Err(invalid(format!(
                        "{p:?} is not an isometry at ({}, {})",
                        pts[x], pts[y]
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Orbit classes as sorted point indices, ordered by least member.
pub fn orbits(action: &FiniteAction) -> Vec<Vec<usize>> {
    let n = action.space.len();
    let mut class_of = vec![usize::MAX; n];
    let mut classes = Vec::new();
    for x in 0..n {
        if class_of[x] != usize::MAX {
            continue;
        }
        let members: BTreeSet<usize> = action.perms.iter().map(|p| p[x]).collect();
        for &y in &members {
            class_of[y] = classes.len();
        }
        classes.push(members.into_iter().collect());
    }
    classes
}

/// The orbit space with `d_H(Gx, Gy) = min_h d(hx, y)`.
#[derive(Debug)]
pub struct QuotientSpace {
    base: Arc<MetricSpace>,
    classes: Vec<Vec<usize>>,
    class_of: HashMap<PointId, usize>,
    metric: MetricSpace,
}

impl QuotientSpace {
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_points(&self, c: usize) -> Vec<PointId> {
        self.classes[c]
            .iter()
            .map(|&i| self.base.points()[i].clone())
            .collect()
    }

    pub fn class_id(&self, c: usize) -> &PointId {
        &self.metric.points()[c]
    }

    pub fn class_of(&self, p: &PointId) -> Option<usize> {
        self.class_of.get(p).copied()
    }

    pub fn metric(&self) -> &MetricSpace {
        &self.metric
    }

    pub fn base(&self) -> &Arc<MetricSpace> {
        &self.base
    }
}

fn class_label(space: &MetricSpace, members: &[usize]) -> PointId {
    let names: Vec<&str> = members.iter().map(|&i| space.points()[i].as_str()).collect();
    PointId::new(format!("{{{}}}", names.join(",")))
}

pub fn quotient_metric(action: &FiniteAction) -> QuotientSpace {
    let space = &action.space;
    let classes = orbits(action);
    let d = |i: usize, j: usize| space.entry(i, j).expect("explicit").clone();
    let reps: Vec<usize> = classes.iter().map(|c| c[0]).collect();
    let matrix: Vec<Vec<Rational>> = reps
        .iter()
        .map(|&x| {
            reps.iter()
                .map(|&y| {
                    action
                        .perms
                        .iter()
                        .map(|p| d(p[x], y))
                        .min()
                        .expect("identity present")
                })
                .collect()
        })
        .collect();
    let labels: Vec<PointId> = classes.iter().map(|c| class_label(space, c)).collect();
    let class_of = classes
        .iter()
        .enumerate()
        .flat_map(|(c, members)| members.iter().map(move |&i| (space.points()[i].clone(), c)))
        .collect();
    QuotientSpace {
        base: space.clone(),
        metric: MetricSpace::from_matrix(labels, matrix).expect("square matrix with distinct labels"),
        classes,
        class_of,
    }
}

/// `(A xi)(c) = Σ_{x ∈ c} xi(x)`.
pub fn pushforward(xi: &SignedMeasure, q: &QuotientSpace) -> Result<SignedMeasure> {
    let mass = xi.total_mass();
    if !mass.is_zero() {
        return Err(Error::MeanNotZero(rational::format(&mass)));
    }
    let mut out = SignedMeasure::new();
    for (p, m) in xi.entries() {
        let c = q.class_of(p).ok_or_else(|| Error::UnknownPoint(p.clone()))?;
        out.add_mass(q.class_id(c).clone(), m.clone());
    }
    Ok(out)
}

/// A measure on the base space that pushes forward to `zeta` with norm at
/// most `(1 + epsilon)‖zeta‖`.
///
/// Each move of an optimal plan for `zeta` is realized between the closest
/// pair of orbit members; on finite spaces that pair attains `d_H`, so the
/// norms are equal for every `epsilon >= 0`.
pub fn lift(zeta: &SignedMeasure, q: &QuotientSpace, epsilon: &Rational) -> Result<SignedMeasure> {
    if epsilon.is_negative() {
        return Err(Error::InvalidTask("epsilon must be nonnegative".into()));
    }
    let (_, plan) = transport::arens_eells_norm(zeta, &q.metric)?;
    let base = &q.base;
    let index_of = |id: &PointId| q.metric.index_of(id).ok_or_else(|| Error::UnknownPoint(id.clone()));
    let mut out = SignedMeasure::new();
    for mv in &plan.moves {
        let b = &q.classes[index_of(&mv.source)?];
        let c = &q.classes[index_of(&mv.sink)?];
        let mut best: Option<(Rational, usize, usize)> = None;
        for &x in b {
            for &y in c {
                let d = base.entry(x, y).expect("explicit").clone();
                if best.as_ref().is_none_or(|(m, _, _)| d < *m) {
                    best = Some((d, x, y));
                }
            }
        }
        let (_, x, y) = best.expect("orbits are nonempty");
        out.add_mass(base.points()[x].clone(), mv.mass.clone());
        out.add_mass(base.points()[y].clone(), -mv.mass.clone());
    }
    Ok(out)
}
