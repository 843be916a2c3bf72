use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, PointId};
use crate::rational::{self, Rational};
use crate::transport::SignedMeasure;

use super::Group;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A finitely supported probability measure on a group, keyed by normal form.
pub struct SimplexElement<G: Group> {
    group: Arc<G>,
    weights: BTreeMap<PointId, (G::Elem, Rational)>,
}

impl<G: Group> Clone for SimplexElement<G> {
    fn clone(&self) -> Self {
        SimplexElement {
            group: self.group.clone(),
            weights: self.weights.clone(),
        }
    }
}

impl<G: Group> std::fmt::Debug for SimplexElement<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map()
            .entries(
                self.weights
                    .iter()
                    .map(|(k, (_, w))| (k.as_str(), rational::format(w))),
            )
            .finish()
    }
}

impl<G: Group> PartialEq for SimplexElement<G> {
    fn eq(&self, other: &Self) -> bool {
        self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|((k1, (_, w1)), (k2, (_, w2)))| k1 == k2 && w1 == w2)
    }
}

impl<G: Group> SimplexElement<G> {
    /// Merges repeated elements; weights must be positive and sum to 1.
    pub fn new(
        group: Arc<G>,
        entries: impl IntoIterator<Item = (G::Elem, Rational)>,
    ) -> Result<Self> {
        let mut weights: BTreeMap<PointId, (G::Elem, Rational)> = BTreeMap::new();
        for (g, w) in entries {
            if !w.is_positive() {
                return Err(Error::InvalidMeasure(format!(
                    "weight {} at {} is not positive",
                    rational::format(&w),
                    group.canonical(&g)
                )));
            }
            let key = group.key(&g);
            weights
                .entry(key)
                .and_modify(|(_, acc)| *acc += &w)
                .or_insert((g, w));
        }
        let total: Rational = weights.values().map(|(_, w)| w).sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {}",
                rational::format(&total)
            )));
        }
        Ok(SimplexElement { group, weights })
    }

    pub fn dirac(group: Arc<G>, g: G::Elem) -> Self {
        Self::new(group, [(g, Rational::one())]).expect("unit mass")
    }

    /// Uniform measure on a multiset (repetitions add weight).
    pub fn uniform(group: Arc<G>, elems: &[G::Elem]) -> Result<Self> {
        if elems.is_empty() {
            return Err(Error::EmptySet);
        }
        let w = rational::ratio(1, elems.len() as i64);
        Self::new(group, elems.iter().map(|g| (g.clone(), w.clone())))
    }

    /// Reads a nonnegative measure whose point ids are normal-form keys.
    pub fn from_measure(group: Arc<G>, measure: &SignedMeasure) -> Result<Self> {
        let mut entries = Vec::with_capacity(measure.len());
        for (p, w) in measure.entries() {
            let g = group
                .parse(p.as_str())
                .ok_or_else(|| Error::UnknownPoint(p.clone()))?;
            entries.push((g, w.clone()));
        }
        Self::new(group, entries)
    }

    pub fn group(&self) -> &Arc<G> {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(element, weight)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&G::Elem, &Rational)> {
        self.weights.values().map(|(g, w)| (g, w))
    }

    pub fn support(&self) -> Vec<G::Elem> {
        self.weights.values().map(|(g, _)| g.clone()).collect()
    }

    pub fn weight(&self, g: &G::Elem) -> Rational {
        self.weights
            .get(&self.group.key(g))
            .map(|(_, w)| w.clone())
            .unwrap_or_else(Rational::zero)
    }

    fn same_group(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.group, &other.group) || self.group.describe() == other.group.describe()
    }

    fn from_parts(group: Arc<G>, parts: BTreeMap<PointId, (G::Elem, Rational)>) -> Self {
        SimplexElement {
            group,
            weights: parts,
        }
    }

    /// `(alpha * beta)(h) = sum_g alpha(g) beta(g⁻¹h)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if !self.same_group(other) {
            return Err(Error::GroupMismatch);
        }
        let mut out: BTreeMap<PointId, (G::Elem, Rational)> = BTreeMap::new();
        for (g, a) in self.weights.values() {
            for (k, b) in other.weights.values() {
                let h = self.group.multiply(g, k);
                let w = a * b;
                out.entry(self.group.key(&h))
                    .and_modify(|(_, acc)| *acc += &w)
                    .or_insert((h, w));
            }
        }
        Ok(Self::from_parts(self.group.clone(), out))
    }

    /// Right: `beta g`, moving mass at `h` to `hg`. Left: `g beta`.
    pub fn translate(&self, g: &G::Elem, side: Side) -> Self {
        let parts = self
            .weights
            .values()
            .map(|(h, w)| {
                let moved = match side {
                    Side::Right => self.group.multiply(h, g),
                    Side::Left => self.group.multiply(g, h),
                };
                (self.group.key(&moved), (moved, w.clone()))
            })
            .collect();
        Self::from_parts(self.group.clone(), parts)
    }

    /// The same weights as a signed measure on `space`.
    pub fn as_signed_measure(&self, space: &MetricSpace) -> Result<SignedMeasure> {
        for key in self.weights.keys() {
            if !space.contains(key) {
                return Err(Error::UnknownPoint(key.clone()));
            }
        }
        Ok(self.to_measure())
    }

    /// The weights as a measure keyed by normal form, without a space check.
    pub fn to_measure(&self) -> SignedMeasure {
        SignedMeasure::from_entries(
            self.weights
                .iter()
                .map(|(k, (_, w))| (k.clone(), w.clone())),
        )
    }

    /// Re-expresses the element in another group through an embedding.
    pub fn map_into<H: Group>(&self, target: Arc<H>, f: impl Fn(&G::Elem) -> H::Elem) -> Result<SimplexElement<H>> {
        SimplexElement::new(
            target,
            self.weights.values().map(|(g, w)| (f(g), w.clone())),
        )
    }
}
