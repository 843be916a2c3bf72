//! Probe configuration (TOML) and the run that drives a probe end to end.
//!
//! ```toml
//! group = { type = "dihedral_inf" }
//! generators = ["t", "s"]        # words over the default generators
//! window = 3                     # E = {t^n, t^n s : |n| <= 3}
//! epsilon = "2/3"
//! strategy = "evaluate"
//!
//! [beta]
//! kind = "dihedral_folner"
//! radius = 3
//! half_width = 18
//! ```
//!
//! `E` is given by exactly one of `elements` (words), `ball` (word-metric
//! radius) or `window` (infinite dihedral only).

use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{
    parse_word, AnyElem, AnyGroup, Group, GroupDescriptor, Side, SimplexElement, WordMetric,
};
use crate::io::word_metric_from;
use crate::metric::MetricSpace;
use crate::probe::{
    self, DefectMode, DefectReport, ProbeTask, SearchOptions, SearchStatus, SearchStep,
    DEFAULT_DENOMINATOR_CAP, DEFAULT_SUPPORT_CAP,
};
use crate::rational::{self, serde_exact, Exact, Rational};
use crate::transport::{self, LipschitzWitness, SignedMeasure};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub group: GroupDescriptor,
    #[serde(default)]
    pub generators: Option<Vec<String>>,
    #[serde(default)]
    pub elements: Option<Vec<String>>,
    #[serde(default)]
    pub ball: Option<u32>,
    #[serde(default)]
    pub window: Option<u32>,
    pub epsilon: Exact,
    #[serde(default)]
    pub mode: DefectMode,
    #[serde(default)]
    pub radius_cap: Option<u32>,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub beta: Option<BetaSpec>,
    #[serde(default)]
    pub search: SearchSpec,
    #[serde(default)]
    pub multiset: Option<MultisetSpec>,
    #[serde(default)]
    pub obstruction: Option<ObstructionSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Evaluate the defect of the fixed `beta`.
    #[default]
    Evaluate,
    /// Run the greedy convolution search.
    Search,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSpec {
    /// Uniform on `{t^n, t^n s : |n| <= half_width}`; `radius` sets the bound.
    DihedralFolner { radius: u32, half_width: u32 },
    /// Uniform over a multiset of words.
    Uniform { elements: Vec<String> },
    /// Uniform over the word-metric ball.
    Ball { radius: u32 },
    /// Explicit weights keyed by word.
    Weights { entries: Vec<WeightEntry> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightEntry {
    pub element: String,
    pub weight: Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    /// Uniform measures on balls of radius `1..=max`.
    Balls,
    /// `dihedral_folner(_, M)` for `M = 0..=max`.
    DihedralFolner,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default)]
    pub pool: Option<PoolKind>,
    #[serde(default = "default_pool_max")]
    pub max: u32,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_support_cap")]
    pub support_cap: usize,
}

fn default_pool_max() -> u32 {
    8
}

fn default_budget() -> usize {
    64
}

fn default_support_cap() -> usize {
    DEFAULT_SUPPORT_CAP
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            pool: None,
            max: default_pool_max(),
            budget: default_budget(),
            support_cap: default_support_cap(),
        }
    }
}

/// Matching form of the worst pair and Markov counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultisetSpec {
    #[serde(default = "default_denominator_cap")]
    pub denominator_cap: usize,
    #[serde(default)]
    pub thresholds: Vec<Exact>,
}

fn default_denominator_cap() -> usize {
    DEFAULT_DENOMINATOR_CAP
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstructionSpec {
    /// `phi(x) = x_index` on `Z^k`.
    Coordinate {
        #[serde(default)]
        index: usize,
        /// Pair to bound, as words; defaults to the worst pair.
        #[serde(default)]
        g: Option<String>,
        #[serde(default)]
        f: Option<String>,
    },
}

impl ProbeConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TranslationCheck {
    pub g: String,
    #[serde(with = "serde_exact")]
    pub value: Rational,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FolnerCheck {
    pub radius: u32,
    pub half_width: u32,
    pub support: usize,
    #[serde(with = "serde_exact")]
    pub bound: Rational,
    pub translations: Vec<TranslationCheck>,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkovCount {
    #[serde(with = "serde_exact")]
    pub threshold: Rational,
    pub count: usize,
    /// `n * value / threshold`.
    #[serde(with = "serde_exact")]
    pub markov_bound: Rational,
    pub sound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultisetCheck {
    pub size: usize,
    #[serde(with = "serde_exact")]
    pub perturbation: Rational,
    pub g: String,
    pub f: String,
    #[serde(with = "serde_exact")]
    pub matching_value: Rational,
    /// Flow-solver norm for the same pair and the multiset's average.
    #[serde(with = "serde_exact")]
    pub flow_value: Rational,
    pub agrees: bool,
    pub sigma: Vec<usize>,
    pub counts: Vec<MarkovCount>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionCheck {
    pub g: String,
    pub f: String,
    pub witness: String,
    /// `|Σ (beta g − beta f) phi|`; `−phi` is also 1-Lipschitz.
    #[serde(with = "serde_exact")]
    pub lower_bound: Rational,
    #[serde(with = "serde_exact")]
    pub pair_value: Rational,
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub status: SearchStatus,
    pub evaluations: usize,
    pub pool: PoolKind,
    pub pool_size: usize,
    pub steps: Vec<SearchStep>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRun {
    pub group: GroupDescriptor,
    pub generators: Vec<String>,
    pub elements: Vec<String>,
    #[serde(with = "serde_exact")]
    pub epsilon: Rational,
    pub strategy: Strategy,
    pub success: bool,
    pub report: DefectReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folner: Option<FolnerCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiset: Option<MultisetCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<ObstructionCheck>,
}

struct Context {
    metric: Arc<WordMetric<AnyGroup>>,
    group: Arc<AnyGroup>,
    space: Arc<MetricSpace>,
}

impl Context {
    fn word(&self, w: &str) -> Result<AnyElem> {
        parse_word(self.group.as_ref(), &self.group.generators(), w)
    }

    fn require_dihedral(&self, what: &str) -> Result<()> {
        if matches!(*self.group, AnyGroup::Dihedral(_)) {
            Ok(())
        } else {
            Err(Error::InvalidTask(format!("{what} needs the infinite dihedral group")))
        }
    }
}

fn folner_beta(group: &Arc<AnyGroup>, half_width: u32) -> Result<SimplexElement<AnyGroup>> {
    probe::dihedral_folner(0, half_width)
        .beta
        .map_into(group.clone(), |d| AnyElem::from(*d))
}

fn build_elements(cfg: &ProbeConfig, ctx: &Context) -> Result<Vec<AnyElem>> {
    match (&cfg.elements, cfg.ball, cfg.window) {
        (Some(words), None, None) => words.iter().map(|w| ctx.word(w)).collect(),
        (None, Some(r), None) => ctx.metric.ball(r),
        (None, None, Some(n)) => {
            ctx.require_dihedral("window")?;
            Ok(probe::dihedral_window(n).into_iter().map(AnyElem::from).collect())
        }
        _ => Err(Error::InvalidTask(
            "give exactly one of elements, ball, or window".into(),
        )),
    }
}

fn build_beta(spec: &BetaSpec, ctx: &Context) -> Result<SimplexElement<AnyGroup>> {
    match spec {
        BetaSpec::DihedralFolner { half_width, .. } => {
            ctx.require_dihedral("dihedral_folner")?;
            folner_beta(&ctx.group, *half_width)
        }
        BetaSpec::Uniform { elements } => {
            let elems = elements
                .iter()
                .map(|w| ctx.word(w))
                .collect::<Result<Vec<_>>>()?;
            SimplexElement::uniform(ctx.group.clone(), &elems)
        }
        BetaSpec::Ball { radius } => {
            SimplexElement::uniform(ctx.group.clone(), &ctx.metric.ball(*radius)?)
        }
        BetaSpec::Weights { entries } => SimplexElement::new(
            ctx.group.clone(),
            entries
                .iter()
                .map(|e| Ok((ctx.word(&e.element)?, e.weight.0.clone())))
                .collect::<Result<Vec<_>>>()?,
        ),
    }
}

fn folner_check(
    beta: &SimplexElement<AnyGroup>,
    radius: u32,
    half_width: u32,
    ctx: &Context,
) -> Result<FolnerCheck> {
    let bound = probe::dihedral_folner(radius, half_width).bound;
    let window: Vec<AnyElem> = probe::dihedral_window(radius)
        .into_iter()
        .map(AnyElem::from)
        .collect();
    let translations: Vec<TranslationCheck> =
        probe::translation_norms(beta, &window, &ctx.space)?
            .into_iter()
            .map(|(g, value)| TranslationCheck {
                within_bound: value <= bound,
                g,
                value,
            })
            .collect();
    Ok(FolnerCheck {
        radius,
        half_width,
        support: beta.len(),
        bound_holds: translations.iter().all(|t| t.within_bound),
        bound,
        translations,
    })
}

fn pick_pair(
    report: &DefectReport,
    g: Option<&String>,
    f: Option<&String>,
    ctx: &Context,
) -> Result<(AnyElem, AnyElem)> {
    match (g, f) {
        (Some(g), Some(f)) => Ok((ctx.word(g)?, ctx.word(f)?)),
        (None, None) => {
            let worst = report
                .worst_pair()
                .ok_or_else(|| Error::InvalidTask("E has a single element".into()))?;
            Ok((
                ctx.group.parse(&worst.g).expect("normal form"),
                ctx.group.parse(&worst.f).expect("normal form"),
            ))
        }
        _ => Err(Error::InvalidTask("give both g and f, or neither".into())),
    }
}

fn multiset_check(
    spec: &MultisetSpec,
    beta: &SimplexElement<AnyGroup>,
    report: &DefectReport,
    ctx: &Context,
) -> Result<MultisetCheck> {
    let h = probe::to_uniform_multiset(beta, spec.denominator_cap)?;
    let (g, f) = pick_pair(report, None, None, ctx)?;
    let (value, sigma) = probe::matching_defect(&h, &g, &f, &ctx.space)?;
    let avg = h.average();
    let bg = avg.translate(&g, Side::Right).as_signed_measure(&ctx.space)?;
    let bf = avg.translate(&f, Side::Right).as_signed_measure(&ctx.space)?;
    let flow_value = transport::arens_eells_norm(&(&bg - &bf), &ctx.space)?.0;
    let n = rational::int(h.len() as i64);
    let mut counts = Vec::new();
    for t in &spec.thresholds {
        let count = probe::concentration_count(&h, &g, &f, &t.0, &ctx.space)?;
        let markov_bound = &n * &value / &t.0;
        counts.push(MarkovCount {
            threshold: t.0.clone(),
            count,
            sound: rational::int(count as i64) <= markov_bound,
            markov_bound,
        });
    }
    Ok(MultisetCheck {
        size: h.len(),
        perturbation: h.perturbation.clone(),
        g: ctx.group.canonical(&g),
        f: ctx.group.canonical(&f),
        agrees: value == flow_value,
        matching_value: value,
        flow_value,
        sigma: sigma.sigma,
        counts,
    })
}

fn coordinate_witness(beta_measures: &[&SignedMeasure], index: usize, rank: usize) -> Result<LipschitzWitness> {
    if index >= rank {
        return Err(Error::InvalidTask(format!(
            "coordinate {index} out of range for rank {rank}"
        )));
    }
    let mut points: Vec<_> = beta_measures.iter().flat_map(|m| m.support()).collect();
    points.sort();
    points.dedup();
    let mut bad = None;
    let witness = LipschitzWitness::from_fn(&points, |p| {
        match p.as_str().split(',').nth(index).and_then(|c| c.parse::<i64>().ok()) {
            Some(c) => rational::int(c),
            None => {
                bad = Some(p.clone());
                Rational::zero()
            }
        }
    });
    match bad {
        Some(p) => Err(Error::UnknownPoint(p)),
        None => Ok(witness),
    }
}

fn obstruction_check(
    spec: &ObstructionSpec,
    beta: &SimplexElement<AnyGroup>,
    report: &DefectReport,
    ctx: &Context,
) -> Result<ObstructionCheck> {
    let ObstructionSpec::Coordinate { index, g, f } = spec;
    let AnyGroup::Lattice(lattice) = ctx.group.as_ref() else {
        return Err(Error::InvalidTask("coordinate witness needs Zk".into()));
    };
    let (g, f) = pick_pair(report, g.as_ref(), f.as_ref(), ctx)?;
    let bg = beta.translate(&g, Side::Right).to_measure();
    let bf = beta.translate(&f, Side::Right).to_measure();
    let witness = coordinate_witness(&[&bg, &bf], *index, lattice.rank)?;
    let signed = probe::dual_obstruction(beta, &g, &f, &witness, &ctx.space)?;
    let lower_bound = signed.abs();
    let pair_value = transport::arens_eells_norm(&(&bg - &bf), &ctx.space)?.0;
    Ok(ObstructionCheck {
        g: ctx.group.canonical(&g),
        f: ctx.group.canonical(&f),
        witness: format!("phi(x) = x_{}", index + 1),
        certified: lower_bound <= pair_value,
        lower_bound,
        pair_value,
    })
}

/// Runs a probe. Mathematical failure is reported through `success`;
/// errors are reserved for invalid input and unreachable distances.
pub fn run_probe(cfg: &ProbeConfig) -> Result<ProbeRun> {
    let metric = word_metric_from(cfg.group.clone(), cfg.generators.as_deref(), cfg.radius_cap)?;
    let group = metric.group().clone();
    let space = Arc::new(metric.clone().into_space(&[])?);
    let ctx = Context {
        metric,
        group,
        space,
    };
    let elements = build_elements(cfg, &ctx)?;
    let task = ProbeTask::new(
        ctx.group.clone(),
        ctx.space.clone(),
        elements,
        cfg.epsilon.0.clone(),
    )?
    .with_mode(cfg.mode);

    let (report, search) = match cfg.strategy {
        Strategy::Evaluate => {
            let spec = cfg
                .beta
                .as_ref()
                .ok_or_else(|| Error::InvalidTask("strategy \"evaluate\" needs [beta]".into()))?;
            let beta = build_beta(spec, &ctx)?;
            (probe::defect(&beta, &task)?, None)
        }
        Strategy::Search => {
            let kind = cfg.search.pool.unwrap_or(match *ctx.group {
                AnyGroup::Dihedral(_) => PoolKind::DihedralFolner,
                _ => PoolKind::Balls,
            });
            let pool = match kind {
                PoolKind::Balls => probe::ball_pool(&ctx.metric, cfg.search.max)?,
                PoolKind::DihedralFolner => {
                    ctx.require_dihedral("the dihedral_folner pool")?;
                    probe::folner_pool(ctx.group.clone(), cfg.search.max, |d| AnyElem::from(*d))?
                }
            };
            let outcome = probe::sequential_minimize(
                &task,
                &pool,
                SearchOptions {
                    budget: cfg.search.budget,
                    support_cap: cfg.search.support_cap,
                },
            )?;
            let summary = SearchSummary {
                status: outcome.status,
                evaluations: outcome.evaluations,
                pool: kind,
                pool_size: pool.len(),
                steps: outcome.steps,
            };
            (outcome.report, Some(summary))
        }
    };

    let beta = SimplexElement::from_measure(ctx.group.clone(), &report.beta)?;
    let folner = match &cfg.beta {
        Some(BetaSpec::DihedralFolner { radius, half_width })
            if cfg.strategy == Strategy::Evaluate =>
        {
            Some(folner_check(&beta, *radius, *half_width, &ctx)?)
        }
        _ => None,
    };
    let multiset = cfg
        .multiset
        .as_ref()
        .map(|spec| multiset_check(spec, &beta, &report, &ctx))
        .transpose()?;
    let obstruction = cfg
        .obstruction
        .as_ref()
        .map(|spec| obstruction_check(spec, &beta, &report, &ctx))
        .transpose()?;

    let success = report.defect < task.epsilon
        && report.all_verified()
        && folner.as_ref().is_none_or(|f| f.bound_holds)
        && multiset
            .as_ref()
            .is_none_or(|m| m.agrees && m.counts.iter().all(|c| c.sound))
        && obstruction.as_ref().is_none_or(|o| o.certified);

    Ok(ProbeRun {
        group: cfg.group.clone(),
        generators: ctx.metric.describe_generators(),
        elements: task.elements.iter().map(|g| ctx.group.canonical(g)).collect(),
        epsilon: task.epsilon.clone(),
        strategy: cfg.strategy,
        success,
        report,
        search,
        folner,
        multiset,
        obstruction,
    })
}
