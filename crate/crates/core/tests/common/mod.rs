#![allow(dead_code)]

use std::collections::HashMap;
use std::hash::Hash;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use otgroups::group::Group;
use otgroups::rational::ratio;
use otgroups::{MetricSpace, PointId, Rational, SignedMeasure};

pub fn ids(n: usize) -> Vec<PointId> {
    (0..n).map(|i| PointId::new(format!("p{i:02}"))).collect()
}

pub fn random_rational<R: Rng>(rng: &mut R, max_den: i64, max_abs: i64) -> Rational {
    let den = rng.gen_range(1..=max_den);
    let num = rng.gen_range(-max_abs * den..=max_abs * den);
    ratio(num, den)
}

/// Shortest-path closure of random edge weights `k / den` with one random
/// `den <= 100` per space; a few zero edges make some instances écarts.
pub fn random_metric<R: Rng>(rng: &mut R, n: usize) -> MetricSpace {
    let den = rng.gen_range(1..=100);
    let mut d = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = if rng.gen_ratio(1, 40) { 0 } else { rng.gen_range(1..=20 * den) };
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    let matrix = d
        .into_iter()
        .map(|row| row.into_iter().map(|w| ratio(w, den)).collect())
        .collect();
    MetricSpace::from_matrix(ids(n), matrix).expect("square")
}

/// Floyd-Warshall in place.
pub fn close(d: &mut [Vec<Rational>]) {
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = &d[i][k] + &d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
}

/// Mean-zero measure on `k` distinct points with masses of denominator <= 100.
pub fn random_mean_zero<R: Rng>(rng: &mut R, points: &[PointId], k: usize) -> SignedMeasure {
    let chosen: Vec<&PointId> = points.choose_multiple(rng, k.min(points.len())).collect();
    let mut entries = Vec::new();
    let mut total = Rational::zero();
    for p in chosen.iter().skip(1) {
        let m = random_rational(rng, 100, 5);
        total += &m;
        entries.push(((*p).clone(), m));
    }
    if let Some(first) = chosen.first() {
        entries.push(((*first).clone(), -total));
    }
    SignedMeasure::from_entries(entries)
}

pub fn uniform_on(points: &[PointId]) -> SignedMeasure {
    let w = ratio(1, points.len() as i64);
    let mut m = SignedMeasure::new();
    for p in points {
        m.add_mass(p.clone(), w.clone());
    }
    m
}

/// Brute-force `min_sigma Σ d(x_i, y_sigma(i))` over all permutations.
pub fn brute_force_assignment(xs: &[PointId], ys: &[PointId], space: &MetricSpace) -> Rational {
    fn go(
        i: usize,
        used: &mut Vec<bool>,
        acc: Rational,
        c: &[Vec<Rational>],
        best: &mut Option<Rational>,
    ) {
        let n = c.len();
        if i == n {
            if best.as_ref().is_none_or(|b| acc < *b) {
                *best = Some(acc);
            }
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                go(i + 1, used, &acc + &c[i][j], c, best);
                used[j] = false;
            }
        }
    }
    let c: Vec<Vec<Rational>> = xs
        .iter()
        .map(|x| ys.iter().map(|y| space.distance(x, y).unwrap()).collect())
        .collect();
    let mut best = None;
    go(0, &mut vec![false; xs.len()], Rational::zero(), &c, &mut best);
    best.unwrap_or_else(Rational::zero)
}

/// Word lengths by enumerating every word over `S ∪ S⁻¹` of length
/// `<= radius`, independently of the BFS in the library.
pub fn naive_word_lengths<G: Group>(group: &G, gens: &[G::Elem], radius: u32) -> HashMap<G::Elem, u32>
where
    G::Elem: Hash + Eq,
{
    let mut letters: Vec<G::Elem> = Vec::new();
    for g in gens {
        letters.push(g.clone());
        letters.push(group.inverse(g));
    }
    let mut best: HashMap<G::Elem, u32> = HashMap::new();
    let mut word = Vec::new();
    fn rec<G: Group>(
        group: &G,
        letters: &[G::Elem],
        radius: u32,
        word: &mut Vec<usize>,
        best: &mut HashMap<G::Elem, u32>,
    ) where
        G::Elem: Hash + Eq,
    {
        let value = word
            .iter()
            .fold(group.identity(), |acc, &k| group.multiply(&acc, &letters[k]));
        let len = word.len() as u32;
        best.entry(value)
            .and_modify(|l| *l = (*l).min(len))
            .or_insert(len);
        if len == radius {
            return;
        }
        for k in 0..letters.len() {
            word.push(k);
            rec(group, letters, radius, word, best);
            word.pop();
        }
    }
    rec(group, &letters, radius, &mut word, &mut best);
    best
}
