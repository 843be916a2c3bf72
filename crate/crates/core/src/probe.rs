//! Translation-invariance defects of probability measures on groups.
//!
//! For `beta` in the simplex of `G` and a finite `E ⊆ G`, the defect is
//! `max_{g,f ∈ E} ‖beta g − beta f‖`, each term solved exactly with a plan
//! and a Kantorovich witness. Around it sit the explicit infinite-dihedral
//! averages, the uniform-multiset (matching) form of the defect, the Markov
//! counting bound, dual lower bounds, and a greedy convolution search.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Dihedral, Group, InfiniteDihedral, Side, SimplexElement, WordMetric};
use crate::metric::{MetricSpace, PointId};
use crate::rational::{self, serde_exact, Rational};
use crate::transport::{self, Assignment, LipschitzWitness, SignedMeasure, TransportPlan};

pub const DEFAULT_SUPPORT_CAP: usize = 100_000;
pub const DEFAULT_DENOMINATOR_CAP: usize = 10_000;

/// Which pairs of `E` enter the defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DefectMode {
    /// Every unordered pair `{g, f}`.
    #[default]
    AllPairs,
    /// Only `‖beta g − beta a‖` against the first element `a` of `E`. The
    /// all-pairs defect is at most twice the anchored one.
    Anchored,
}

pub struct ProbeTask<G: Group> {
    pub group: Arc<G>,
    pub space: Arc<MetricSpace>,
    pub elements: Vec<G::Elem>,
    pub epsilon: Rational,
    pub mode: DefectMode,
}

impl<G: Group> ProbeTask<G> {
    pub fn new(
        group: Arc<G>,
        space: Arc<MetricSpace>,
        elements: Vec<G::Elem>,
        epsilon: Rational,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidTask("E is empty".into()));
        }
        let mut keys: Vec<String> = elements.iter().map(|g| group.canonical(g)).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTask("E has repeated elements".into()));
        }
        if !epsilon.is_positive() {
            return Err(Error::InvalidTask("epsilon must be positive".into()));
        }
        Ok(ProbeTask {
            group,
            space,
            elements,
            epsilon,
            mode: DefectMode::AllPairs,
        })
    }

    pub fn with_mode(mut self, mode: DefectMode) -> Self {
        self.mode = mode;
        self
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.elements.len();
        match self.mode {
            DefectMode::AllPairs => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect(),
            DefectMode::Anchored => (1..n).map(|j| (j, 0)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub g: String,
    pub f: String,
    #[serde(with = "serde_exact")]
    pub value: Rational,
    pub verified: bool,
    pub plan: TransportPlan,
    pub witness: LipschitzWitness,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    #[serde(with = "serde_exact")]
    pub defect: Rational,
    pub mode: DefectMode,
    /// Index into `per_pair` of the largest value.
    pub worst: Option<usize>,
    pub per_pair: Vec<PairReport>,
    pub beta: SignedMeasure,
}

impl DefectReport {
    pub fn all_verified(&self) -> bool {
        self.per_pair.iter().all(|p| p.verified)
    }

    pub fn worst_pair(&self) -> Option<&PairReport> {
        self.worst.map(|i| &self.per_pair[i])
    }
}

fn pair_error(g: &str, f: &str, e: Error) -> Error {
    Error::Pair {
        g: g.to_string(),
        f: f.to_string(),
        source: Box::new(e),
    }
}

fn pair_norm<G: Group>(
    beta: &SimplexElement<G>,
    g: &G::Elem,
    f: &G::Elem,
    space: &MetricSpace,
) -> Result<transport::Certificate> {
    let group = beta.group();
    let wrap = |e| pair_error(&group.canonical(g), &group.canonical(f), e);
    let bg = beta.translate(g, Side::Right).as_signed_measure(space).map_err(wrap)?;
    let bf = beta.translate(f, Side::Right).as_signed_measure(space).map_err(wrap)?;
    transport::solve(&(&bg - &bf), space).map_err(wrap)
}

/// `‖beta g − beta f‖` for every pair of the task's `E`, solved in parallel.
pub fn defect<G: Group>(beta: &SimplexElement<G>, task: &ProbeTask<G>) -> Result<DefectReport> {
    let group = &task.group;
    let space = task.space.as_ref();
    let translates: Vec<SignedMeasure> = task
        .elements
        .iter()
        .map(|g| {
            beta.translate(g, Side::Right)
                .as_signed_measure(space)
                .map_err(|e| pair_error(&group.canonical(g), &group.canonical(g), e))
        })
        .collect::<Result<_>>()?;

    let per_pair: Vec<PairReport> = task
        .pairs()
        .into_par_iter()
        .map(|(i, j)| {
            let (g, f) = (&task.elements[i], &task.elements[j]);
            let (gk, fk) = (group.canonical(g), group.canonical(f));
            let xi = &translates[i] - &translates[j];
            let cert = transport::solve(&xi, space).map_err(|e| pair_error(&gk, &fk, e))?;
            let verified = transport::verify_certificate(&xi, &cert.plan, &cert.witness, space);
            Ok(PairReport {
                g: gk,
                f: fk,
                value: cert.value,
                verified,
                plan: cert.plan,
                witness: cert.witness,
            })
        })
        .collect::<Result<_>>()?;

    let mut worst: Option<usize> = None;
    for (k, p) in per_pair.iter().enumerate() {
        if worst.is_none_or(|w| p.value > per_pair[w].value) {
            worst = Some(k);
        }
    }
    let defect = worst
        .map(|w| per_pair[w].value.clone())
        .unwrap_or_else(Rational::zero);
    Ok(DefectReport {
        defect,
        mode: task.mode,
        worst,
        per_pair,
        beta: beta.to_measure(),
    })
}

/// `‖beta g − beta‖` for each `g`, solved in parallel, in input order.
pub fn translation_norms<G: Group>(
    beta: &SimplexElement<G>,
    elements: &[G::Elem],
    space: &MetricSpace,
) -> Result<Vec<(String, Rational)>> {
    let group = beta.group();
    let e = group.identity();
    let base = beta.as_signed_measure(space)?;
    elements
        .par_iter()
        .map(|g| {
            let wrap = |err| pair_error(&group.canonical(g), &group.canonical(&e), err);
            let bg = beta.translate(g, Side::Right).as_signed_measure(space).map_err(wrap)?;
            let value = transport::solve(&(&bg - &base), space).map_err(wrap)?.value;
            Ok((group.canonical(g), value))
        })
        .collect()
}

/// The uniform average over `{tau^n, tau^n sigma : |n| <= half_width}` together
/// with the transport bound `(2N² + 2N)/(4M + 2)` on `‖beta g − beta‖` for `g`
/// in the radius-`N` set.
#[derive(Debug, Clone)]
pub struct DihedralAverage {
    pub beta: SimplexElement<InfiniteDihedral>,
    pub radius: u32,
    pub half_width: u32,
    pub bound: Rational,
}

pub fn dihedral_folner(radius: u32, half_width: u32) -> DihedralAverage {
    let group = Arc::new(InfiniteDihedral);
    let m = i64::from(half_width);
    let support: Vec<Dihedral> = (-m..=m)
        .flat_map(|k| [Dihedral::new(k, false), Dihedral::new(k, true)])
        .collect();
    let beta = SimplexElement::uniform(group, &support).expect("nonempty support");
    let n = i64::from(radius);
    DihedralAverage {
        beta,
        radius,
        half_width,
        bound: rational::ratio(2 * n * n + 2 * n, 4 * m + 2),
    }
}

/// Least `M` with `(2N² + 2N)/(4M + 2) < 1/N`.
pub fn least_half_width(radius: u32) -> u32 {
    let n = u64::from(radius);
    // N (2N² + 2N) < 4M + 2
    let need = n * (2 * n * n + 2 * n);
    let mut m = 0u64;
    while 4 * m + 2 <= need {
        m += 1;
    }
    m as u32
}

/// `{tau^n, tau^n sigma : |n| <= radius}`.
pub fn dihedral_window(radius: u32) -> Vec<Dihedral> {
    let n = i64::from(radius);
    (-n..=n)
        .flat_map(|k| [Dihedral::new(k, false), Dihedral::new(k, true)])
        .collect()
}

/// `h_1, …, h_n` whose uniform average approximates a simplex element.
pub struct UniformMultiset<G: Group> {
    pub group: Arc<G>,
    pub elems: Vec<G::Elem>,
    /// Exact `|beta − beta'|_1` of the rounding; zero when no rounding happened.
    pub perturbation: Rational,
}

impl<G: Group> UniformMultiset<G> {
    pub fn new(group: Arc<G>, elems: Vec<G::Elem>) -> Result<Self> {
        if elems.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(UniformMultiset {
            group,
            elems,
            perturbation: Rational::zero(),
        })
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn average(&self) -> SimplexElement<G> {
        SimplexElement::uniform(self.group.clone(), &self.elems).expect("nonempty")
    }
}

/// Writes `beta` as a uniform multiset of size at most `denominator_cap`.
///
/// With a common denominator `L <= cap` the result is exact. Otherwise
/// weights are rounded to multiples of `1/cap` by largest remainder, which
/// moves each weight by less than `1/cap`.
pub fn to_uniform_multiset<G: Group>(
    beta: &SimplexElement<G>,
    denominator_cap: usize,
) -> Result<UniformMultiset<G>> {
    let support = beta.len();
    if denominator_cap < support || denominator_cap == 0 {
        return Err(Error::CapTooSmall {
            cap: denominator_cap,
            support,
        });
    }
    let weights: Vec<(&G::Elem, &Rational)> = beta.iter().collect();
    let common = weights
        .iter()
        .fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
    let cap = BigInt::from(denominator_cap);

    let (n, counts) = if common <= cap {
        let counts: Vec<BigInt> = weights
            .iter()
            .map(|(_, w)| (*w * Rational::from_integer(common.clone())).to_integer())
            .collect();
        (common, counts)
    } else {
        let scaled: Vec<Rational> = weights
            .iter()
            .map(|(_, w)| *w * Rational::from_integer(cap.clone()))
            .collect();
        let mut counts: Vec<BigInt> = scaled.iter().map(|q| q.floor().to_integer()).collect();
        let assigned: BigInt = counts.iter().sum();
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = &scaled[a] - scaled[a].floor();
            let rb = &scaled[b] - scaled[b].floor();
            rb.cmp(&ra).then(a.cmp(&b))
        });
        let extra = (&cap - assigned).to_usize().expect("fewer than support");
        for &k in order.iter().take(extra) {
            counts[k] += 1;
        }
        (cap, counts)
    };

    let n_rat = Rational::from_integer(n.clone());
    let mut elems = Vec::with_capacity(n.to_usize().expect("bounded by cap"));
    let mut perturbation = Rational::zero();
    for ((g, w), c) in weights.iter().zip(&counts) {
        for _ in 0..c.to_usize().expect("bounded by cap") {
            elems.push((*g).clone());
        }
        perturbation += (Rational::from_integer(c.clone()) / &n_rat - *w).abs();
    }
    Ok(UniformMultiset {
        group: beta.group().clone(),
        elems,
        perturbation,
    })
}

fn translated_keys<G: Group>(h: &UniformMultiset<G>, g: &G::Elem) -> Vec<PointId> {
    h.elems
        .iter()
        .map(|x| h.group.key(&h.group.multiply(x, g)))
        .collect()
}

/// `min_sigma (1/n) Σ d(h_i g, h_sigma(i) f)` with the lexicographically least
/// optimal `sigma`.
pub fn matching_defect<G: Group>(
    h: &UniformMultiset<G>,
    g: &G::Elem,
    f: &G::Elem,
    space: &MetricSpace,
) -> Result<(Rational, Assignment)> {
    let xs = translated_keys(h, g);
    let ys = translated_keys(h, f);
    let (sigma, cost) = transport::optimal_assignment(&xs, &ys, space).map_err(|e| {
        pair_error(&h.group.canonical(g), &h.group.canonical(f), e)
    })?;
    Ok((cost / rational::int(h.len() as i64), sigma))
}

/// Number of matched pairs at distance `>= threshold` under the optimal
/// matching; at most `n * value / threshold`.
pub fn concentration_count<G: Group>(
    h: &UniformMultiset<G>,
    g: &G::Elem,
    f: &G::Elem,
    threshold: &Rational,
    space: &MetricSpace,
) -> Result<usize> {
    if !threshold.is_positive() {
        return Err(Error::InvalidTask("threshold must be positive".into()));
    }
    let (_, sigma) = matching_defect(h, g, f, space)?;
    let xs = translated_keys(h, g);
    let ys = translated_keys(h, f);
    let mut count = 0;
    for (i, &j) in sigma.sigma.iter().enumerate() {
        if space.distance(&xs[i], &ys[j])? >= *threshold {
            count += 1;
        }
    }
    Ok(count)
}

/// `Σ (beta g − beta f)(x) φ(x)`, a certified lower bound on
/// `‖beta g − beta f‖` once `φ` is checked 1-Lipschitz on both supports.
pub fn dual_obstruction<G: Group>(
    beta: &SimplexElement<G>,
    g: &G::Elem,
    f: &G::Elem,
    witness: &LipschitzWitness,
    space: &MetricSpace,
) -> Result<Rational> {
    let bg = beta.translate(g, Side::Right).as_signed_measure(space)?;
    let bf = beta.translate(f, Side::Right).as_signed_measure(space)?;
    let mut on = bg.support();
    on.extend(bf.support());
    on.sort();
    on.dedup();
    if let Some((x, y)) = witness.lipschitz_violation(&on, space)? {
        return Err(Error::NotLipschitz(x, y));
    }
    witness.pair(&(&bg - &bf))
}

/// Uniform measures on word-metric balls of radius `1..=max_radius`,
/// skipping radii where the ball has stopped growing.
pub fn ball_pool<G: Group>(metric: &WordMetric<G>, max_radius: u32) -> Result<Vec<SimplexElement<G>>> {
    let mut pool: Vec<SimplexElement<G>> = Vec::new();
    let mut last = 0;
    for r in 1..=max_radius {
        let ball = metric.ball(r)?;
        if ball.len() == last {
            break;
        }
        last = ball.len();
        pool.push(SimplexElement::uniform(metric.group().clone(), &ball)?);
    }
    Ok(pool)
}

/// `dihedral_folner(_, M)` for `M = 0..=max_half_width`, embedded via `embed`.
pub fn folner_pool<G: Group>(
    group: Arc<G>,
    max_half_width: u32,
    embed: impl Fn(&Dihedral) -> G::Elem,
) -> Result<Vec<SimplexElement<G>>> {
    (0..=max_half_width)
        .map(|m| dihedral_folner(0, m).beta.map_into(group.clone(), &embed))
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Total candidate evaluations allowed.
    pub budget: usize,
    pub support_cap: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 64,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchStep {
    /// Pool index of the candidate composed in this step.
    pub candidate: usize,
    /// Worst pair targeted, and its value after the step.
    pub g: String,
    pub f: String,
    #[serde(with = "serde_exact")]
    pub pair_value: Rational,
    #[serde(with = "serde_exact")]
    pub defect: Rational,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Success,
    BudgetExhausted,
    SupportCapExceeded,
    EmptyPool,
}

/// Outcome of [`sequential_minimize`]; `report` is the best one found.
#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub evaluations: usize,
    pub steps: Vec<SearchStep>,
    pub report: DefectReport,
}

impl SearchOutcome {
    pub fn succeeded(&self) -> bool {
        matches!(self.status, SearchStatus::Success)
    }
}

/// Greedy search for a `beta` with defect below `task.epsilon`.
///
/// Starting from the identity, each step scores every pool candidate `c` by
/// the current worst pair's value for `c * beta`, composes the best one
/// (first in pool order on ties), and re-evaluates the full defect. Failure
/// is returned as an outcome carrying the best report, never as an error.
pub fn sequential_minimize<G: Group>(
    task: &ProbeTask<G>,
    pool: &[SimplexElement<G>],
    options: SearchOptions,
) -> Result<SearchOutcome> {
    let group = task.group.clone();
    let mut beta = SimplexElement::dirac(group.clone(), group.identity());
    let mut report = defect(&beta, task)?;
    let mut best = report.clone();
    let mut evaluations = 0;
    let mut steps = Vec::new();

    let finish = |status, evaluations, steps, best| {
        Ok(SearchOutcome {
            status,
            evaluations,
            steps,
            report: best,
        })
    };

    if report.defect < task.epsilon {
        return finish(SearchStatus::Success, 0, steps, report);
    }
    if pool.is_empty() {
        return finish(SearchStatus::EmptyPool, 0, steps, best);
    }

    loop {
        let worst = report.worst_pair().expect("positive defect has a pair").clone();
        let g = group
            .parse(&worst.g)
            .expect("report keys are normal forms");
        let f = group
            .parse(&worst.f)
            .expect("report keys are normal forms");

        let mut chosen: Option<(usize, SimplexElement<G>, Rational)> = None;
        for (idx, cand) in pool.iter().enumerate() {
            if evaluations == options.budget {
                return finish(SearchStatus::BudgetExhausted, evaluations, steps, best);
            }
            evaluations += 1;
            let trial = cand.convolve(&beta)?;
            if trial.len() > options.support_cap {
                return finish(SearchStatus::SupportCapExceeded, evaluations, steps, best);
            }
            let value = pair_norm(&trial, &g, &f, &task.space)?.value;
            if chosen.as_ref().is_none_or(|(_, _, v)| value < *v) {
                chosen = Some((idx, trial, value));
            }
        }

        let (idx, trial, value) = chosen.expect("nonempty pool");
        beta = trial;
        report = defect(&beta, task)?;
        steps.push(SearchStep {
            candidate: idx,
            g: worst.g.clone(),
            f: worst.f.clone(),
            pair_value: value,
            defect: report.defect.clone(),
        });
        if report.defect < best.defect {
            best = report.clone();
        }
        if report.defect < task.epsilon {
            return finish(SearchStatus::Success, evaluations, steps, report);
        }
    }
}
