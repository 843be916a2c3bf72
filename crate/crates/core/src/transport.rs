//! Exact optimal transport on finitely supported signed measures.
//!
//! The Arens–Eells norm of a mean-zero measure is the cost of an optimal
//! plan moving its positive part onto its negative part. Solves run on the
//! bipartite network between the two parts of the support, and the flow
//! potentials give a 1-Lipschitz Kantorovich witness whose pairing with
//! the measure equals the plan cost exactly.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow;
use crate::metric::{MetricSpace, PointId};
use crate::rational::{self, serde_exact, Rational};

/// Sparse finitely supported map point -> nonzero rational mass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignedMeasure {
    entries: BTreeMap<PointId, Rational>,
}

impl SignedMeasure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dirac(p: impl Into<PointId>) -> Self {
        let mut m = Self::new();
        m.add_mass(p.into(), Rational::one());
        m
    }

    /// Sums duplicate points and drops zero masses.
    pub fn from_entries(entries: impl IntoIterator<Item = (PointId, Rational)>) -> Self {
        let mut m = Self::new();
        for (p, q) in entries {
            m.add_mass(p, q);
        }
        m
    }

    pub fn add_mass(&mut self, p: PointId, q: Rational) {
        if q.is_zero() {
            return;
        }
        match self.entries.entry(p) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += q;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(q);
            }
        }
    }

    pub fn get(&self, p: &PointId) -> Rational {
        self.entries.get(p).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&PointId, &Rational)> {
        self.entries.iter()
    }

    pub fn support(&self) -> Vec<PointId> {
        self.entries.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> Rational {
        self.entries.values().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.values().all(|q| q.is_positive())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::new();
        }
        SignedMeasure {
            entries: self
                .entries
                .iter()
                .map(|(p, q)| (p.clone(), q * c))
                .collect(),
        }
    }

    /// Total-variation norm `sum |m(x)|`.
    pub fn l1_norm(&self) -> Rational {
        self.entries.values().map(|q| q.abs()).sum()
    }
}

impl Add for &SignedMeasure {
    type Output = SignedMeasure;

    fn add(self, rhs: &SignedMeasure) -> SignedMeasure {
        let mut out = self.clone();
        for (p, q) in &rhs.entries {
            out.add_mass(p.clone(), q.clone());
        }
        out
    }
}

impl Sub for &SignedMeasure {
    type Output = SignedMeasure;

    fn sub(self, rhs: &SignedMeasure) -> SignedMeasure {
        let mut out = self.clone();
        for (p, q) in &rhs.entries {
            out.add_mass(p.clone(), -q.clone());
        }
        out
    }
}

impl Neg for &SignedMeasure {
    type Output = SignedMeasure;

    fn neg(self) -> SignedMeasure {
        self.scale(&-Rational::one())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub source: PointId,
    pub sink: PointId,
    #[serde(with = "serde_exact")]
    pub mass: Rational,
}

/// The primal witness: a list of positive-mass moves.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub moves: Vec<Move>,
}

impl TransportPlan {
    pub fn cost(&self, space: &MetricSpace) -> Result<Rational> {
        let mut total = Rational::zero();
        for m in &self.moves {
            total += &m.mass * space.distance(&m.source, &m.sink)?;
        }
        Ok(total)
    }

    /// The measure `sum mass * (source - sink)` realized by the plan.
    pub fn realized(&self) -> SignedMeasure {
        let mut out = SignedMeasure::new();
        for m in &self.moves {
            out.add_mass(m.source.clone(), m.mass.clone());
            out.add_mass(m.sink.clone(), -m.mass.clone());
        }
        out
    }
}

/// A dual potential restricted to a finite point set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LipschitzWitness {
    pub values: BTreeMap<PointId, Rational>,
}

impl LipschitzWitness {
    pub fn from_fn(points: &[PointId], mut f: impl FnMut(&PointId) -> Rational) -> Self {
        LipschitzWitness {
            values: points.iter().map(|p| (p.clone(), f(p))).collect(),
        }
    }

    pub fn get(&self, p: &PointId) -> Option<&Rational> {
        self.values.get(p)
    }

    /// `sum xi(x) * phi(x)`; errors if the witness is undefined on `supp(xi)`.
    pub fn pair(&self, xi: &SignedMeasure) -> Result<Rational> {
        let mut total = Rational::zero();
        for (p, q) in xi.entries() {
            let v = self
                .values
                .get(p)
                .ok_or_else(|| Error::WitnessUndefined(p.clone()))?;
            total += q * v;
        }
        Ok(total)
    }

    /// First pair in `on` violating `|phi(x) - phi(y)| <= d(x, y)`.
    pub fn lipschitz_violation(
        &self,
        on: &[PointId],
        space: &MetricSpace,
    ) -> Result<Option<(PointId, PointId)>> {
        for p in on {
            if !self.values.contains_key(p) {
                return Err(Error::WitnessUndefined(p.clone()));
            }
        }
        for (i, x) in on.iter().enumerate() {
            for y in &on[i + 1..] {
                let gap = (&self.values[x] - &self.values[y]).abs();
                if gap > space.distance(x, y)? {
                    return Ok(Some((x.clone(), y.clone())));
                }
            }
        }
        Ok(None)
    }
}

#[derive(Serialize, Deserialize)]
struct WitnessEntry {
    point: PointId,
    #[serde(with = "serde_exact")]
    value: Rational,
}

#[derive(Serialize, Deserialize)]
struct WitnessFile {
    values: Vec<WitnessEntry>,
}

impl Serialize for LipschitzWitness {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        WitnessFile {
            values: self
                .values
                .iter()
                .map(|(p, v)| WitnessEntry {
                    point: p.clone(),
                    value: v.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LipschitzWitness {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = WitnessFile::deserialize(deserializer)?;
        Ok(LipschitzWitness {
            values: file.values.into_iter().map(|e| (e.point, e.value)).collect(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureEntry {
    point: PointId,
    #[serde(with = "serde_exact")]
    mass: Rational,
}

#[derive(Serialize, Deserialize)]
struct MeasureFile {
    entries: Vec<MeasureEntry>,
}

impl Serialize for SignedMeasure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MeasureFile {
            entries: self
                .entries
                .iter()
                .map(|(p, q)| MeasureEntry {
                    point: p.clone(),
                    mass: q.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SignedMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = MeasureFile::deserialize(deserializer)?;
        Ok(SignedMeasure::from_entries(
            file.entries.into_iter().map(|e| (e.point, e.mass)),
        ))
    }
}

/// A permutation of `0..n`, stored as `sigma[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub sigma: Vec<usize>,
}

impl Assignment {
    pub fn identity(n: usize) -> Self {
        Assignment {
            sigma: (0..n).collect(),
        }
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.sigma.len()];
        self.sigma.iter().all(|&j| {
            j < seen.len() && !std::mem::replace(&mut seen[j], true)
        })
    }
}

/// Primal plan, dual witness and their common value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub value: Rational,
    pub plan: TransportPlan,
    pub witness: LipschitzWitness,
}

fn require_mean_zero(xi: &SignedMeasure) -> Result<()> {
    let mass = xi.total_mass();
    if mass.is_zero() {
        Ok(())
    } else {
        Err(Error::MeanNotZero(rational::format(&mass)))
    }
}

/// Solves the transport problem of `xi` once, returning both the optimal plan
/// and the normalized Kantorovich witness.
pub fn solve(xi: &SignedMeasure, space: &MetricSpace) -> Result<Certificate> {
    require_mean_zero(xi)?;
    if xi.is_empty() {
        return Ok(Certificate {
            value: Rational::zero(),
            plan: TransportPlan::default(),
            witness: LipschitzWitness::default(),
        });
    }
    let (sources, supply): (Vec<PointId>, Vec<Rational>) = xi
        .entries()
        .filter(|(_, q)| q.is_positive())
        .map(|(p, q)| (p.clone(), q.clone()))
        .unzip();
    let (sinks, demand): (Vec<PointId>, Vec<Rational>) = xi
        .entries()
        .filter(|(_, q)| q.is_negative())
        .map(|(p, q)| (p.clone(), -q.clone()))
        .unzip();

    let mut costs = Vec::with_capacity(sources.len());
    for x in &sources {
        costs.push(
            sinks
                .iter()
                .map(|y| space.distance(x, y))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let sol = flow::solve_rational(&supply, &demand, &costs);

    let mut value = Rational::zero();
    let moves = sol
        .flows
        .iter()
        .map(|(i, j, q)| {
            value += q * &costs[*i][*j];
            Move {
                source: sources[*i].clone(),
                sink: sinks[*j].clone(),
                mass: q.clone(),
            }
        })
        .collect();

    // The flow duals only constrain source/sink pairs. Taking
    // phi(z) = min_j (psi(y_j) + d(z, y_j)) keeps the pairing value and makes
    // phi 1-Lipschitz on the whole support.
    let mut sink_sink = Vec::with_capacity(sinks.len());
    for y in &sinks {
        sink_sink.push(
            sinks
                .iter()
                .map(|y2| space.distance(y, y2))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let envelope = |row: &[Rational]| -> Rational {
        row.iter()
            .zip(&sol.sink_dual)
            .map(|(d, psi)| d + psi)
            .min()
            .expect("mean-zero nonempty measure has sinks")
    };
    let mut values = BTreeMap::new();
    for (x, row) in sources.iter().zip(&costs) {
        values.insert(x.clone(), envelope(row));
    }
    for (y, row) in sinks.iter().zip(&sink_sink) {
        values.insert(y.clone(), envelope(row));
    }
    let anchor = values.values().next().cloned().expect("nonempty");
    for v in values.values_mut() {
        *v -= &anchor;
    }

    Ok(Certificate {
        value,
        plan: TransportPlan { moves },
        witness: LipschitzWitness { values },
    })
}

/// Arens–Eells norm with an optimal plan in reduced form.
pub fn arens_eells_norm(
    xi: &SignedMeasure,
    space: &MetricSpace,
) -> Result<(Rational, TransportPlan)> {
    solve(xi, space).map(|c| (c.value, c.plan))
}

/// Kantorovich dual value with a 1-Lipschitz witness on `supp(xi)`,
/// normalized to vanish at the least point of the support.
pub fn kantorovich_dual(
    xi: &SignedMeasure,
    space: &MetricSpace,
) -> Result<(Rational, LipschitzWitness)> {
    let cert = solve(xi, space)?;
    let value = cert.witness.pair(xi)?;
    Ok((value, cert.witness))
}

/// Checks flow balance, 1-Lipschitz continuity of the witness on `supp(xi)`,
/// and exact equality of plan cost and dual pairing.
pub fn verify_certificate(
    xi: &SignedMeasure,
    plan: &TransportPlan,
    witness: &LipschitzWitness,
    space: &MetricSpace,
) -> bool {
    let support = xi.support();
    let in_support = |p: &PointId| xi.entries.contains_key(p);
    if plan
        .moves
        .iter()
        .any(|m| !m.mass.is_positive() || !in_support(&m.source) || !in_support(&m.sink))
    {
        return false;
    }
    if plan.realized() != *xi {
        return false;
    }
    match witness.lipschitz_violation(&support, space) {
        Ok(None) => {}
        _ => return false,
    }
    let (Ok(cost), Ok(dual)) = (plan.cost(space), witness.pair(xi)) else {
        return false;
    };
    cost == dual
}

fn require_probability(m: &SignedMeasure, name: &str) -> Result<()> {
    if !m.is_nonnegative() {
        return Err(Error::InvalidMeasure(format!("{name} has negative entries")));
    }
    Ok(())
}

/// Wasserstein-1 distance between probability measures with finite support.
pub fn wasserstein(mu: &SignedMeasure, nu: &SignedMeasure, space: &MetricSpace) -> Result<Rational> {
    wasserstein_coupling(mu, nu, space).map(|(v, _)| v)
}

/// Optimal coupling of `mu` and `nu`: the plan for `mu - nu` plus diagonal
/// moves `(x, x, min(mu(x), nu(x)))` for mass that stays put.
pub fn wasserstein_coupling(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    space: &MetricSpace,
) -> Result<(Rational, TransportPlan)> {
    require_probability(mu, "mu")?;
    require_probability(nu, "nu")?;
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if a != b {
        return Err(Error::InvalidMeasure(format!(
            "unequal total masses {} and {}",
            rational::format(&a),
            rational::format(&b)
        )));
    }
    if !a.is_one() {
        return Err(Error::InvalidMeasure(format!(
            "total mass {} is not 1",
            rational::format(&a)
        )));
    }
    let (value, plan) = arens_eells_norm(&(mu - nu), space)?;
    let mut moves = plan.moves;
    for (p, q) in mu.entries() {
        let stay = q.clone().min(nu.get(p));
        if stay.is_positive() {
            moves.push(Move {
                source: p.clone(),
                sink: p.clone(),
                mass: stay,
            });
        }
    }
    moves.sort_by(|x, y| (&x.source, &x.sink).cmp(&(&y.source, &y.sink)));
    Ok((value, TransportPlan { moves }))
}

/// Min-cost perfect matching of `xs` onto `ys`; the lexicographically least
/// optimal permutation is returned.
pub fn optimal_assignment(
    xs: &[PointId],
    ys: &[PointId],
    space: &MetricSpace,
) -> Result<(Assignment, Rational)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n == 0 {
        return Err(Error::EmptySet);
    }
    let mut costs = Vec::with_capacity(n);
    for x in xs {
        costs.push(
            ys.iter()
                .map(|y| space.distance(x, y))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let ones = vec![Rational::one(); n];
    let sol = flow::solve_rational(&ones, &ones, &costs);

    let mut row_to_col = vec![usize::MAX; n];
    for (i, j, q) in &sol.flows {
        debug_assert!(q.is_one(), "unit supplies give integral flows");
        row_to_col[*i] = *j;
    }
    let sigma = lexicographic_least(row_to_col, &sol.tight);
    let cost = sigma
        .iter()
        .enumerate()
        .map(|(i, &j)| costs[i][j].clone())
        .sum();
    Ok((Assignment { sigma }, cost))
}

/// Every optimal permutation uses only tight arcs, so the least one is
/// found greedily: fix each row to its smallest tight column that still
/// admits a perfect matching of the remaining rows.
fn lexicographic_least(mut row_to_col: Vec<usize>, tight: &[Vec<bool>]) -> Vec<usize> {
    let n = row_to_col.len();
    let mut col_to_row = vec![usize::MAX; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut locked = vec![false; n];

    for i in 0..n {
        for j in 0..n {
            if !tight[i][j] || locked[j] {
                continue;
            }
            if row_to_col[i] == j {
                break;
            }
            let free = row_to_col[i];
            let displaced = col_to_row[j];
            // tentatively give j to row i and look for an alternating path
            // from the displaced row to the freed column
            let snapshot = (row_to_col.clone(), col_to_row.clone());
            row_to_col[i] = j;
            col_to_row[j] = i;
            col_to_row[free] = usize::MAX;
            locked[j] = true;
            let mut visited = vec![false; n];
            visited[i] = true;
            let ok = augment(
                displaced,
                tight,
                &mut row_to_col,
                &mut col_to_row,
                &locked,
                &mut visited,
            );
            locked[j] = false;
            if ok {
                break;
            }
            (row_to_col, col_to_row) = snapshot;
        }
        locked[row_to_col[i]] = true;
    }
    row_to_col
}

fn augment(
    row: usize,
    tight: &[Vec<bool>],
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
    locked: &[bool],
    visited: &mut [bool],
) -> bool {
    visited[row] = true;
    for col in 0..tight.len() {
        if !tight[row][col] || locked[col] {
            continue;
        }
        let owner = col_to_row[col];
        if owner == usize::MAX
            || (!visited[owner] && augment(owner, tight, row_to_col, col_to_row, locked, visited))
        {
            row_to_col[row] = col;
            col_to_row[col] = row;
            return true;
        }
    }
    false
}
