//! Acceptance suite: one pass/fail line per criterion, exit status 1 if any fails.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use otgroups::group::{
    Dihedral, DirectProduct, Group, InfiniteDihedral, IntegerLattice, Side,
    SimplexElement, WordMetric,
};
use otgroups::metric::{diameter, set_distance};
use otgroups::probe::{self, ProbeTask};
use otgroups::quotient::{lift, pushforward, quotient_metric, FiniteAction};
use otgroups::rational::{format, int, ratio};
use otgroups::transport::{self, LipschitzWitness};
use otgroups::{
    arens_eells_norm, hausdorff_distance, optimal_assignment, validate_metric, verify_certificate,
    MetricSpace, PointId, Rational,
};

use common::*;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn strong_duality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut max_support = 0;
    for case in 0..500 {
        let n = rng.gen_range(2..=60);
        let space = random_metric(&mut rng, n);
        ensure!(validate_metric(&space).is_clean(), "case {case}: generated metric invalid");
        let k = rng.gen_range(1..=50.min(n));
        let xi = random_mean_zero(&mut rng, space.points(), k);
        max_support = max_support.max(xi.len());
        let cert = ok(transport::solve(&xi, &space))?;
        let primal = ok(cert.plan.cost(&space))?;
        let dual = ok(cert.witness.pair(&xi))?;
        ensure!(primal == dual, "case {case}: primal {} != dual {}", format(&primal), format(&dual));
        ensure!(primal == cert.value, "case {case}: reported value differs from plan cost");
        ensure!(
            verify_certificate(&xi, &cert.plan, &cert.witness, &space),
            "case {case}: certificate rejected"
        );
    }
    Ok(format!("500 measures, max support {max_support}"))
}

fn brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..200 {
        let n = rng.gen_range(1..=7);
        let size = rng.gen_range(2..=12);
        let space = random_metric(&mut rng, size);
        let pick = |rng: &mut ChaCha8Rng| -> Vec<PointId> {
            (0..n).map(|_| space.points().choose(rng).unwrap().clone()).collect()
        };
        let xs = pick(&mut rng);
        let ys = pick(&mut rng);
        let oracle = brute_force_assignment(&xs, &ys, &space);
        let (sigma, cost) = ok(optimal_assignment(&xs, &ys, &space))?;
        ensure!(sigma.is_bijection(), "case {case}: not a permutation");
        let xi = &uniform_on(&xs) - &uniform_on(&ys);
        let (norm, _) = ok(arens_eells_norm(&xi, &space))?;
        ensure!(cost == oracle, "case {case}: assignment {} vs oracle {}", format(&cost), format(&oracle));
        ensure!(
            norm * int(n as i64) == oracle,
            "case {case}: n * norm differs from oracle {}",
            format(&oracle)
        );
    }
    Ok("200 instances, n <= 7".into())
}

fn integer_obstruction() -> Check {
    let z = Arc::new(IntegerLattice { rank: 1 });
    let metric = Arc::new(WordMetric::standard(z.clone(), 256));
    let space = Arc::new(ok(metric.clone().into_space(&[]))?);
    let task = ok(ProbeTask::new(z.clone(), space.clone(), vec![vec![0], vec![1]], ratio(1, 2)))?;
    let identity = |beta: &SimplexElement<IntegerLattice>| {
        let pts: Vec<PointId> = beta
            .translate(&vec![1], Side::Right)
            .support()
            .into_iter()
            .chain(beta.support())
            .map(|g| z.key(&g))
            .collect();
        LipschitzWitness::from_fn(&pts, |p| int(p.as_str().parse().unwrap()))
    };
    let check = |beta: &SimplexElement<IntegerLattice>, exact: bool, label: &str| -> Check {
        let report = ok(probe::defect(beta, &task))?;
        ensure!(report.all_verified(), "{label}: certificate rejected");
        ensure!(report.defect >= Rational::one(), "{label}: defect {} < 1", format(&report.defect));
        if exact {
            ensure!(report.defect.is_one(), "{label}: defect {} != 1", format(&report.defect));
        }
        let lower = ok(probe::dual_obstruction(beta, &vec![1], &vec![0], &identity(beta), &space))?;
        ensure!(lower.is_one(), "{label}: obstruction {}", format(&lower));
        ensure!(lower <= report.defect, "{label}: lower bound exceeds defect");
        Ok(String::new())
    };
    for n in 1..=50i64 {
        let elems: Vec<Vec<i64>> = (0..n).map(|k| vec![k]).collect();
        check(&ok(SimplexElement::uniform(z.clone(), &elems))?, true, &format!("interval n={n}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..20 {
        let k = rng.gen_range(1..=12);
        let support: Vec<i64> = (-50..=50).collect::<Vec<_>>().choose_multiple(&mut rng, k).copied().collect();
        let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=20)).collect();
        let total: i64 = raw.iter().sum();
        let beta = ok(SimplexElement::new(
            z.clone(),
            support.iter().zip(&raw).map(|(&x, &w)| (vec![x], ratio(w, total))),
        ))?;
        check(&beta, false, &format!("random case {case}"))?;
    }
    Ok("50 intervals with defect exactly 1, 20 random measures with defect >= 1".into())
}

struct DihedralInstance {
    radius: u32,
    half_width: u32,
    beta: SimplexElement<InfiniteDihedral>,
    window: Vec<Dihedral>,
}

fn dihedral_instances() -> Vec<DihedralInstance> {
    (1..=3)
        .map(|n| {
            let m = probe::least_half_width(n);
            DihedralInstance {
                radius: n,
                half_width: m,
                beta: probe::dihedral_folner(n, m).beta,
                window: probe::dihedral_window(n),
            }
        })
        .collect()
}

fn dihedral_space() -> Result<Arc<MetricSpace>, String> {
    let metric = Arc::new(WordMetric::standard(Arc::new(InfiniteDihedral), 64));
    Ok(Arc::new(ok(metric.into_space(&[]))?))
}

fn dihedral_reproduction() -> Check {
    let space = dihedral_space()?;
    let mut summary = Vec::new();
    for inst in dihedral_instances() {
        let (n, m) = (inst.radius, inst.half_width);
        let expected_m = [1, 6, 18][n as usize - 1];
        ensure!(m == expected_m, "N={n}: least M is {m}, expected {expected_m}");
        ensure!(inst.beta.len() == (4 * m + 2) as usize && inst.beta.len() <= 74, "N={n}: support {}", inst.beta.len());
        let bound = probe::dihedral_folner(n, m).bound;
        let ni = i64::from(n);
        ensure!(bound < ratio(1, ni), "N={n}: bound not below 1/N");
        for (g, value) in ok(probe::translation_norms(&inst.beta, &inst.window, &space))? {
            ensure!(value <= bound, "N={n}: |beta {g} - beta| = {} > {}", format(&value), format(&bound));
        }
        let task = ok(ProbeTask::new(
            Arc::new(InfiniteDihedral),
            space.clone(),
            inst.window.clone(),
            ratio(2, ni),
        ))?;
        let report = ok(probe::defect(&inst.beta, &task))?;
        ensure!(report.all_verified(), "N={n}: certificate rejected");
        ensure!(report.defect < ratio(2, ni), "N={n}: defect {} not < 2/N", format(&report.defect));
        summary.push(format!("N={n} M={m} defect {} bound {}", format(&report.defect), format(&bound)));
    }
    Ok(summary.join("; "))
}

fn cross_algorithm() -> Check {
    let space = dihedral_space()?;
    let mut pairs = 0;
    for inst in dihedral_instances() {
        let h = ok(probe::to_uniform_multiset(&inst.beta, probe::DEFAULT_DENOMINATOR_CAP))?;
        ensure!(h.perturbation.is_zero() && h.average() == inst.beta, "expansion not exact");
        for (i, g) in inst.window.iter().enumerate() {
            for f in &inst.window[i..] {
                let (value, _) = ok(probe::matching_defect(&h, g, f, &space))?;
                let bg = ok(inst.beta.translate(g, Side::Right).as_signed_measure(&space))?;
                let bf = ok(inst.beta.translate(f, Side::Right).as_signed_measure(&space))?;
                let (norm, _) = ok(arens_eells_norm(&(&bg - &bf), &space))?;
                ensure!(value == norm, "N={}: matching {} vs flow {}", inst.radius, format(&value), format(&norm));
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} pairs agree exactly"))
}

fn separated_additivity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..200 {
        let na = rng.gen_range(2..=10);
        let nb = rng.gen_range(2..=10);
        let a = random_metric(&mut rng, na);
        let b = random_metric(&mut rng, nb);
        let diam = |s: &MetricSpace| diameter(s.points(), s).unwrap();
        let gap = diam(&a).max(diam(&b)) + ratio(rng.gen_range(0..=100), rng.gen_range(1..=10));
        // cross distance gap + la d(x, a0) + lb d(y, b0) with la, lb in [0, 1]
        let la = ratio(rng.gen_range(0..=4), 4);
        let lb = ratio(rng.gen_range(0..=4), 4);
        let n = na + nb;
        let mut d = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                d[i][j] = match (i < na, j < na) {
                    (true, true) => a.entry(i, j).unwrap().clone(),
                    (false, false) => b.entry(i - na, j - na).unwrap().clone(),
                    (true, false) => &gap + &la * a.entry(i, 0).unwrap() + &lb * b.entry(j - na, 0).unwrap(),
                    (false, true) => &gap + &la * a.entry(j, 0).unwrap() + &lb * b.entry(i - na, 0).unwrap(),
                };
            }
        }
        let space = ok(MetricSpace::from_matrix(ids(n), d))?;
        ensure!(validate_metric(&space).is_clean(), "case {case}: construction not a metric");
        let pts = space.points();
        let (ka, kb) = (rng.gen_range(1..=na), rng.gen_range(1..=nb));
        let xi = random_mean_zero(&mut rng, &pts[..na], ka);
        let zeta = random_mean_zero(&mut rng, &pts[na..], kb);
        let (sx, sz) = (xi.support(), zeta.support());
        if !sx.is_empty() && !sz.is_empty() {
            let sep = ok(set_distance(&sx, &sz, &space))?;
            let dmax = ok(diameter(&sx, &space))?.max(ok(diameter(&sz, &space))?);
            ensure!(sep >= dmax, "case {case}: supports not separated");
        }
        let (nx, _) = ok(arens_eells_norm(&xi, &space))?;
        let (nz, _) = ok(arens_eells_norm(&zeta, &space))?;
        let (sum, _) = ok(arens_eells_norm(&(&xi + &zeta), &space))?;
        ensure!(sum == &nx + &nz, "case {case}: {} != {} + {}", format(&sum), format(&nx), format(&nz));
    }
    Ok("200 separated pairs".into())
}

/// Permutations whose cycles all have length dividing `order`.
fn cyclic_permutation(rng: &mut ChaCha8Rng, n: usize, order: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let divisors: Vec<usize> = (1..=order).filter(|k| order % k == 0).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rest = &idx[..];
    while !rest.is_empty() {
        let len = *divisors.choose(rng).unwrap();
        let len = len.min(rest.len());
        let (cycle, tail) = rest.split_at(len);
        for k in 0..len {
            perm[cycle[k]] = cycle[(k + 1) % len];
        }
        rest = tail;
    }
    perm
}

fn random_action(rng: &mut ChaCha8Rng) -> Result<FiniteAction, String> {
    loop {
        let n = rng.gen_range(1..=30);
        let gens: Vec<Vec<usize>> = match rng.gen_range(0..4) {
            0 => vec![],
            1 | 2 => {
                let order = rng.gen_range(2..=12);
                vec![cyclic_permutation(rng, n, order)]
            },
            _ => {
                let (oa, ob) = (rng.gen_range(2..=4), rng.gen_range(2..=3));
                let a = cyclic_permutation(rng, n, oa);
                let b = cyclic_permutation(rng, n, ob);
                vec![a, b]
            }
        };
        // closure of the generated group, capped at 12
        let mut group: Vec<Vec<usize>> = vec![(0..n).collect()];
        let mut k = 0;
        while k < group.len() && group.len() <= 12 {
            for g in &gens {
                let next: Vec<usize> = group[k].iter().map(|&x| g[x]).collect();
                if !group.contains(&next) {
                    group.push(next);
                }
            }
            k += 1;
        }
        if group.len() > 12 {
            continue;
        }
        // invariant weights: min over the group of a random symmetric weight
        let mut w = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let den = rng.gen_range(1..=20);
                let v = ratio(rng.gen_range(1..=10 * den), den);
                w[i][j] = v.clone();
                w[j][i] = v;
            }
        }
        let mut d = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    d[i][j] = group.iter().map(|p| w[p[i]][p[j]].clone()).min().unwrap();
                }
            }
        }
        close(&mut d);
        let space = Arc::new(ok(MetricSpace::from_matrix(ids(n), d))?);
        return ok(FiniteAction::from_permutations(space, group));
    }
}

fn quotient_contraction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut max_order = 0;
    for case in 0..100 {
        let action = random_action(&mut rng)?;
        max_order = max_order.max(action.order());
        let q = quotient_metric(&action);
        ensure!(validate_metric(q.metric()).is_clean(), "case {case}: quotient metric invalid");
        let k = q.classes().len();
        for a in 0..k {
            for b in 0..k {
                let dh = ok(hausdorff_distance(&q.class_points(a), &q.class_points(b), q.base()))?;
                let dq = q.metric().entry(a, b).unwrap();
                ensure!(dh == *dq, "case {case}: quotient {} vs Hausdorff {}", format(dq), format(&dh));
            }
        }
        let base = q.base().clone();
        let size = rng.gen_range(1..=base.len());
        let xi = random_mean_zero(&mut rng, base.points(), size);
        let pushed = ok(pushforward(&xi, &q))?;
        let (nx, _) = ok(arens_eells_norm(&xi, &base))?;
        let (np, _) = ok(arens_eells_norm(&pushed, q.metric()))?;
        ensure!(np <= nx, "case {case}: ‖Aξ‖ {} > ‖ξ‖ {}", format(&np), format(&nx));

        let size = rng.gen_range(1..=k);
        let zeta = random_mean_zero(&mut rng, q.metric().points(), size);
        let (nzeta, _) = ok(arens_eells_norm(&zeta, q.metric()))?;
        let lifted = ok(lift(&zeta, &q, &Rational::zero()))?;
        ensure!(ok(pushforward(&lifted, &q))? == zeta, "case {case}: pushforward of lift differs");
        let (nl, _) = ok(arens_eells_norm(&lifted, &base))?;
        ensure!(nl == nzeta, "case {case}: lift norm {} vs {}", format(&nl), format(&nzeta));
    }
    Ok(format!("100 actions, largest group order {max_order}"))
}

fn word_metric_oracle() -> Check {
    fn compare<G: Group + 'static>(group: G, label: &str) -> Check
    where
        G::Elem: std::hash::Hash + Eq,
    {
        let group = Arc::new(group);
        let metric = WordMetric::standard(group.clone(), 64);
        let gens: Vec<G::Elem> = metric.generators().iter().map(|(_, g)| g.clone()).collect();
        let naive = naive_word_lengths(group.as_ref(), &gens, 6);
        let ball = ok(metric.ball(6))?;
        ensure!(ball.len() == naive.len(), "{label}: ball has {} elements, naive {}", ball.len(), naive.len());
        for g in &ball {
            let l = ok(metric.length(g))?;
            ensure!(naive.get(g) == Some(&l), "{label}: length of {} differs", group.canonical(g));
        }
        let mut checked = 0;
        for g in &ball {
            for f in &ball {
                let d = ok(metric.distance(g, f))?;
                let diff = group.multiply(&group.inverse(f), g);
                match naive.get(&diff) {
                    Some(&l) => ensure!(d == l, "{label}: d differs"),
                    None => ensure!(d > 6, "{label}: naive misses a short word"),
                }
                checked += 1;
            }
        }
        Ok(format!("{label}: {} elements, {checked} pairs", ball.len()))
    }
    let a = compare(InfiniteDihedral, "D∞")?;
    let b = compare(IntegerLattice { rank: 2 }, "Z^2")?;
    Ok(format!("{a}; {b}"))
}

fn markov(thresholds: &[Rational]) -> Check {
    let space = dihedral_space()?;
    let mut checks = 0;
    for inst in dihedral_instances() {
        let h = ok(probe::to_uniform_multiset(&inst.beta, probe::DEFAULT_DENOMINATOR_CAP))?;
        let n = int(h.len() as i64);
        for (i, g) in inst.window.iter().enumerate() {
            for f in &inst.window[i..] {
                let (value, _) = ok(probe::matching_defect(&h, g, f, &space))?;
                for t in thresholds {
                    let count = ok(probe::concentration_count(&h, g, f, t, &space))?;
                    ensure!(int(count as i64) <= &n * &value / t, "D∞ N={}: Markov bound fails", inst.radius);
                    checks += 1;
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    type Z2D = DirectProduct<IntegerLattice, InfiniteDihedral>;
    let product: Arc<Z2D> = Arc::new(DirectProduct {
        left: IntegerLattice { rank: 1 },
        right: InfiniteDihedral,
    });
    let metric = Arc::new(WordMetric::standard(product.clone(), 64));
    let space = ok(metric.clone().into_space(&[]))?;
    let ball3 = ok(metric.ball(3))?;
    for case in 0..100 {
        let n = rng.gen_range(1..=20);
        let elems: Vec<_> = (0..n).map(|_| ball3.choose(&mut rng).unwrap().clone()).collect();
        let h = ok(probe::UniformMultiset::new(product.clone(), elems))?;
        let g = ball3.choose(&mut rng).unwrap();
        let f = ball3.choose(&mut rng).unwrap();
        let (value, _) = ok(probe::matching_defect(&h, g, f, &space))?;
        for t in thresholds {
            let count = ok(probe::concentration_count(&h, g, f, t, &space))?;
            ensure!(
                int(count as i64) <= int(n as i64) * &value / t,
                "random case {case}: Markov bound fails"
            );
            checks += 1;
        }
    }
    Ok(format!("{checks} (instance, threshold) checks"))
}

fn main() -> ExitCode {
    let thresholds = [ratio(1, 4), ratio(1, 2), int(1)];
    let criteria: Vec<(u32, &str, Option<u64>, Box<dyn Fn() -> Check>)> = vec![
        (1, "strong duality", Some(30), Box::new(strong_duality)),
        (2, "brute-force assignment oracle", Some(60), Box::new(brute_force)),
        (3, "integer obstruction", Some(10), Box::new(integer_obstruction)),
        (4, "infinite dihedral averages", Some(20), Box::new(dihedral_reproduction)),
        (5, "matching equals flow", None, Box::new(cross_algorithm)),
        (6, "separated-support additivity", Some(10), Box::new(separated_additivity)),
        (7, "quotient contraction and exact lift", Some(30), Box::new(quotient_contraction)),
        (8, "word metric vs naive enumeration", Some(10), Box::new(word_metric_oracle)),
        (9, "Markov counting bound", Some(10), Box::new(move || markov(&thresholds))),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in &criteria {
        let limit = *limit;
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let over = limit.is_some_and(|l| elapsed > Duration::from_secs(l));
        let limit_text = limit.map_or("no limit".to_string(), |l| format!("limit {l} s"));
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over time")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {id} [{status}] {name} ({:.2} s, {limit_text}): {detail}",
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
