//! Finite écarts: explicit distance matrices or memoized distance oracles.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use dashmap::DashMap;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Opaque point identifier. Group elements use their normal-form key.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointId(Arc<str>);

impl PointId {
    pub fn new(s: impl AsRef<str>) -> Self {
        PointId(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for PointId {
    fn from(s: &str) -> Self {
        PointId::new(s)
    }
}

impl From<String> for PointId {
    fn from(s: String) -> Self {
        PointId(Arc::from(s))
    }
}

impl Serialize for PointId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for PointId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer).map(PointId::from)
    }
}

/// A lazily evaluated distance function, e.g. a word metric on a group.
pub trait DistanceOracle: Send + Sync {
    fn distance(&self, a: &PointId, b: &PointId) -> Result<Rational>;

    fn contains(&self, p: &PointId) -> bool;

    fn describe(&self) -> String {
        "oracle".to_string()
    }
}

enum Backend {
    Matrix(Vec<Vec<Rational>>),
    Oracle {
        oracle: Arc<dyn DistanceOracle>,
        memo: DashMap<(PointId, PointId), Rational>,
    },
}

/// A point set with an écart on it.
///
/// In matrix mode `points` is the whole space. In oracle mode it is the
/// declared probe set used by [`validate_metric`]; any point the oracle
/// accepts may still be measured.
pub struct MetricSpace {
    points: Vec<PointId>,
    index: HashMap<PointId, usize>,
    backend: Backend,
}

impl fmt::Debug for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match &self.backend {
            Backend::Matrix(_) => "matrix".to_string(),
            Backend::Oracle { oracle, .. } => oracle.describe(),
        };
        f.debug_struct("MetricSpace")
            .field("points", &self.points.len())
            .field("mode", &mode)
            .finish()
    }
}

fn index_points(points: &[PointId]) -> Result<HashMap<PointId, usize>> {
    let mut index = HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if index.insert(p.clone(), i).is_some() {
            return Err(Error::Parse(format!("duplicate point {p}")));
        }
    }
    Ok(index)
}

impl MetricSpace {
    pub fn from_matrix(points: Vec<PointId>, matrix: Vec<Vec<Rational>>) -> Result<Self> {
        let n = points.len();
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Parse(format!("distance matrix must be {n}x{n}")));
        }
        let index = index_points(&points)?;
        Ok(MetricSpace {
            points,
            index,
            backend: Backend::Matrix(matrix),
        })
    }

    /// Tabulates `dist` over every ordered pair of `points`.
    pub fn from_fn(
        points: Vec<PointId>,
        mut dist: impl FnMut(&PointId, &PointId) -> Rational,
    ) -> Result<Self> {
        let matrix = points
            .iter()
            .map(|a| points.iter().map(|b| dist(a, b)).collect())
            .collect();
        Self::from_matrix(points, matrix)
    }

    /// Integers `lo..=hi` with `d(x, y) = |x - y|`; point ids are the decimal integers.
    pub fn euclidean_line(lo: i64, hi: i64) -> Self {
        let values: Vec<i64> = (lo..=hi).collect();
        let points = values.iter().map(|v| PointId::new(v.to_string())).collect();
        let matrix = values
            .iter()
            .map(|a| values.iter().map(|b| rational::int((a - b).abs())).collect())
            .collect();
        Self::from_matrix(points, matrix).expect("distinct integers")
    }

    pub fn with_oracle(oracle: Arc<dyn DistanceOracle>, probe: Vec<PointId>) -> Result<Self> {
        let index = index_points(&probe)?;
        Ok(MetricSpace {
            points: probe,
            index,
            backend: Backend::Oracle {
                oracle,
                memo: DashMap::new(),
            },
        })
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.backend, Backend::Matrix(_))
    }

    pub fn index_of(&self, p: &PointId) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &PointId) -> bool {
        match &self.backend {
            Backend::Matrix(_) => self.index.contains_key(p),
            Backend::Oracle { oracle, .. } => oracle.contains(p),
        }
    }

    pub fn distance(&self, a: &PointId, b: &PointId) -> Result<Rational> {
        match &self.backend {
            Backend::Matrix(m) => {
                let i = self.index_of(a).ok_or_else(|| Error::UnknownPoint(a.clone()))?;
                let j = self.index_of(b).ok_or_else(|| Error::UnknownPoint(b.clone()))?;
                Ok(m[i][j].clone())
            }
            Backend::Oracle { oracle, memo } => {
                let key = if a <= b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                };
                if let Some(d) = memo.get(&key) {
                    return Ok(d.clone());
                }
                if !oracle.contains(a) {
                    return Err(Error::UnknownPoint(a.clone()));
                }
                if !oracle.contains(b) {
                    return Err(Error::UnknownPoint(b.clone()));
                }
                let d = oracle.distance(&key.0, &key.1)?;
                memo.entry(key).or_insert_with(|| d.clone());
                Ok(d)
            }
        }
    }

    /// Raw matrix entry by index; matrix mode only.
    pub fn entry(&self, i: usize, j: usize) -> Option<&Rational> {
        match &self.backend {
            Backend::Matrix(m) => Some(&m[i][j]),
            Backend::Oracle { .. } => None,
        }
    }

    /// Tabulates the probe set into an explicit matrix space.
    pub fn to_explicit(&self) -> Result<MetricSpace> {
        let mut matrix = Vec::with_capacity(self.points.len());
        for a in &self.points {
            let row = self
                .points
                .iter()
                .map(|b| self.distance(a, b))
                .collect::<Result<Vec<_>>>()?;
            matrix.push(row);
        }
        Self::from_matrix(self.points.clone(), matrix)
    }

    /// Restricts an explicit or oracle space to `subset`, as an explicit space.
    pub fn restrict(&self, subset: &[PointId]) -> Result<MetricSpace> {
        let mut matrix = Vec::with_capacity(subset.len());
        for a in subset {
            matrix.push(
                subset
                    .iter()
                    .map(|b| self.distance(a, b))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Self::from_matrix(subset.to_vec(), matrix)
    }
}

/// One failed écart axiom, with the witnessing points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum Violation {
    Diagonal {
        x: PointId,
        value: crate::rational::Exact,
    },
    Negative {
        x: PointId,
        y: PointId,
        value: crate::rational::Exact,
    },
    Symmetry {
        x: PointId,
        y: PointId,
        forward: crate::rational::Exact,
        backward: crate::rational::Exact,
    },
    Triangle {
        x: PointId,
        y: PointId,
        z: PointId,
        direct: crate::rational::Exact,
        detour: crate::rational::Exact,
    },
    Undefined {
        x: PointId,
        y: PointId,
        reason: String,
    },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub points_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the écart axioms on every point (matrix mode) or the probe set
/// (oracle mode). Zero distance between distinct points is allowed.
pub fn validate_metric(space: &MetricSpace) -> ValidationReport {
    use crate::rational::Exact;

    let pts = space.points();
    let n = pts.len();
    let mut violations = Vec::new();
    let mut table: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            match space.distance(&pts[i], &pts[j]) {
                Ok(d) => table[i][j] = Some(d),
                Err(e) => violations.push(Violation::Undefined {
                    x: pts[i].clone(),
                    y: pts[j].clone(),
                    reason: e.to_string(),
                }),
            }
        }
    }

    for i in 0..n {
        if let Some(d) = &table[i][i] {
            if !d.is_zero() {
                violations.push(Violation::Diagonal {
                    x: pts[i].clone(),
                    value: Exact(d.clone()),
                });
            }
        }
        for j in 0..n {
            let Some(d) = &table[i][j] else { continue };
            if d.is_negative() {
                violations.push(Violation::Negative {
                    x: pts[i].clone(),
                    y: pts[j].clone(),
                    value: Exact(d.clone()),
                });
            }
            if i < j {
                if let Some(back) = &table[j][i] {
                    if back != d {
                        violations.push(Violation::Symmetry {
                            x: pts[i].clone(),
                            y: pts[j].clone(),
                            forward: Exact(d.clone()),
                            backward: Exact(back.clone()),
                        });
                    }
                }
            }
        }
    }

    for (i, j, k) in triangle_failures(&table) {
        let direct = table[i][k].clone().expect("defined");
        let detour = table[i][j].as_ref().expect("defined") + table[j][k].as_ref().expect("defined");
        violations.push(Violation::Triangle {
            x: pts[i].clone(),
            y: pts[j].clone(),
            z: pts[k].clone(),
            direct: Exact(direct),
            detour: Exact(detour),
        });
    }

    ValidationReport {
        points_checked: n,
        violations,
    }
}

/// `(i, j, k)` with `d(i, k) > d(i, j) + d(j, k)`, in loop order. Runs on
/// integers scaled by the common denominator when they fit in `i128`.
fn triangle_failures(table: &[Vec<Option<Rational>>]) -> Vec<(usize, usize, usize)> {
    fn scan<T: Clone + Ord + std::ops::Add<Output = T>>(
        t: &[Vec<Option<T>>],
    ) -> Vec<(usize, usize, usize)> {
        let n = t.len();
        let mut out = Vec::new();
        for i in 0..n {
            for k in 0..n {
                let Some(direct) = &t[i][k] else { continue };
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    if let (Some(a), Some(b)) = (&t[i][j], &t[j][k]) {
                        if *direct > a.clone() + b.clone() {
                            out.push((i, j, k));
                        }
                    }
                }
            }
        }
        out
    }

    let common = crate::rational::lcm_of_denominators(table.iter().flatten().flatten());
    let scaled: Option<Vec<Vec<Option<i128>>>> = table
        .iter()
        .map(|row| {
            row.iter()
                .map(|d| match d {
                    None => Some(None),
                    Some(q) => (q.numer() * (&common / q.denom()))
                        .to_i128()
                        .filter(|v| v.unsigned_abs() < 1 << 120)
                        .map(Some),
                })
                .collect()
        })
        .collect();
    match scaled {
        Some(t) => scan(&t),
        None => scan(table),
    }
}

fn min_distance_to(space: &MetricSpace, a: &PointId, set: &[PointId]) -> Result<Rational> {
    let mut best: Option<Rational> = None;
    for b in set {
        let d = space.distance(a, b)?;
        if best.as_ref().is_none_or(|m| d < *m) {
            best = Some(d);
        }
    }
    best.ok_or(Error::EmptySet)
}

/// `max(max_a min_b d(a,b), max_b min_a d(a,b))` over finite non-empty sets.
pub fn hausdorff_distance(a: &[PointId], b: &[PointId], space: &MetricSpace) -> Result<Rational> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut worst = Rational::zero();
    for x in a {
        worst = worst.max(min_distance_to(space, x, b)?);
    }
    for y in b {
        worst = worst.max(min_distance_to(space, y, a)?);
    }
    Ok(worst)
}

/// Largest pairwise distance; zero for sets with fewer than two points.
pub fn diameter(set: &[PointId], space: &MetricSpace) -> Result<Rational> {
    let mut diam = Rational::zero();
    for (i, x) in set.iter().enumerate() {
        for y in &set[i + 1..] {
            diam = diam.max(space.distance(x, y)?);
        }
    }
    Ok(diam)
}

/// `min_{a in A, b in B} d(a, b)`.
pub fn set_distance(a: &[PointId], b: &[PointId], space: &MetricSpace) -> Result<Rational> {
    let mut best: Option<Rational> = None;
    for x in a {
        let d = min_distance_to(space, x, b)?;
        if best.as_ref().is_none_or(|m| d < *m) {
            best = Some(d);
        }
    }
    best.ok_or(Error::EmptySet)
}
