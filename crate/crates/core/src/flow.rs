//! Successive shortest augmenting paths on a complete bipartite
//! source/sink network with node potentials.
//!
//! Arc costs are integers (the caller scales rational distances by a common
//! denominator); flows are exact rationals. Forward arcs are uncapacitated,
//! so the only capacities in the residual graph are on reverse arcs.

use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::rational::{self, Rational};

pub(crate) trait Cost: Clone + Ord + Add<Output = Self> + Sub<Output = Self> + Zero {}

impl Cost for i64 {}
impl Cost for BigInt {}

pub(crate) struct Solution<C> {
    /// `(source index, sink index, positive mass)`, sorted.
    pub flows: Vec<(usize, usize, Rational)>,
    /// Dual values with `source_dual[i] - sink_dual[j] <= cost[i][j]`,
    /// tight on every arc that carries flow.
    pub source_dual: Vec<C>,
    pub sink_dual: Vec<C>,
}

/// Requires `sum(supply) == sum(demand)`, all entries positive, and
/// nonnegative costs.
pub(crate) fn solve<C: Cost>(supply: &[Rational], demand: &[Rational], cost: &[Vec<C>]) -> Solution<C> {
    let n_src = supply.len();
    let n_snk = demand.len();
    let n = n_src + n_snk;

    let mut excess = supply.to_vec();
    let mut deficit = demand.to_vec();
    // flow[j] maps source index -> positive mass shipped to sink j
    let mut flow: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); n_snk];
    let mut potential = vec![C::zero(); n];

    let mut dist: Vec<Option<C>> = vec![None; n];
    let mut done = vec![false; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];

    while excess.iter().any(|e| e.is_positive()) {
        dist.fill(None);
        done.fill(false);
        parent.fill(None);
        for (i, e) in excess.iter().enumerate() {
            if e.is_positive() {
                dist[i] = Some(C::zero());
            }
        }

        let mut target = None;
        loop {
            let mut best: Option<usize> = None;
            for v in 0..n {
                if done[v] {
                    continue;
                }
                if let Some(dv) = &dist[v] {
                    if best.is_none_or(|b| dist[b].as_ref().is_some_and(|db| dv < db)) {
                        best = Some(v);
                    }
                }
            }
            let Some(u) = best else { break };
            done[u] = true;
            let du = dist[u].clone().expect("reached");

            if u >= n_src {
                let j = u - n_src;
                if deficit[j].is_positive() {
                    target = Some(u);
                    break;
                }
                for &i in flow[j].keys() {
                    if done[i] {
                        continue;
                    }
                    let nd = du.clone() - cost[i][j].clone() + potential[u].clone()
                        - potential[i].clone();
                    if dist[i].as_ref().is_none_or(|d| nd < *d) {
                        dist[i] = Some(nd);
                        parent[i] = Some(u);
                    }
                }
            } else {
                for j in 0..n_snk {
                    let v = n_src + j;
                    if done[v] {
                        continue;
                    }
                    let nd = du.clone() + cost[u][j].clone() + potential[u].clone()
                        - potential[v].clone();
                    if dist[v].as_ref().is_none_or(|d| nd < *d) {
                        dist[v] = Some(nd);
                        parent[v] = Some(u);
                    }
                }
            }
        }

        let t = target.expect("balanced supplies always reach a sink with demand");
        let dt = dist[t].clone().expect("reached");
        for v in 0..n {
            let step = if done[v] {
                dist[v].clone().expect("finalized")
            } else {
                dt.clone()
            };
            potential[v] = potential[v].clone() + step;
        }

        // walk the path back to its root source, collecting the bottleneck
        let mut path = Vec::new();
        let mut v = t;
        while let Some(u) = parent[v] {
            path.push((u, v));
            v = u;
        }
        let root = v;
        let mut delta = excess[root].clone().min(deficit[t - n_src].clone());
        for &(u, v) in &path {
            if u >= n_src {
                delta = delta.min(flow[u - n_src][&v].clone());
            }
        }

        for &(u, v) in &path {
            if u < n_src {
                *flow[v - n_src].entry(u).or_insert_with(Rational::zero) += &delta;
            } else {
                let j = u - n_src;
                let left = flow[j][&v].clone() - &delta;
                if left.is_zero() {
                    flow[j].remove(&v);
                } else {
                    flow[j].insert(v, left);
                }
            }
        }
        excess[root] -= &delta;
        deficit[t - n_src] -= &delta;
    }

    let mut flows: Vec<(usize, usize, Rational)> = flow
        .into_iter()
        .enumerate()
        .flat_map(|(j, m)| m.into_iter().map(move |(i, q)| (i, j, q)))
        .collect();
    flows.sort_by_key(|f| (f.0, f.1));

    let negate = |p: &C| C::zero() - p.clone();
    Solution {
        flows,
        source_dual: potential[..n_src].iter().map(negate).collect(),
        sink_dual: potential[n_src..].iter().map(negate).collect(),
    }
}

/// Integer cost matrix obtained by scaling rational distances by their
/// common denominator, in the narrowest representation that cannot overflow.
pub(crate) enum ScaledCosts {
    Small(Vec<Vec<i64>>),
    Big(Vec<Vec<BigInt>>),
}

pub(crate) struct Scaled {
    pub denominator: BigInt,
    pub costs: ScaledCosts,
}

pub(crate) fn scale(costs: &[Vec<Rational>]) -> Scaled {
    let denominator = rational::lcm_of_denominators(costs.iter().flatten());
    let big: Vec<Vec<BigInt>> = costs
        .iter()
        .map(|row| {
            row.iter()
                .map(|q| q.numer() * (&denominator / q.denom()))
                .collect()
        })
        .collect();
    let nodes = costs.len() + costs.first().map_or(0, Vec::len) + 1;
    let max = big.iter().flatten().map(|c| c.abs()).max().unwrap_or_default();
    // potentials stay within nodes * max in absolute value
    let bound = BigInt::from(i64::MAX / 8);
    let fits = max * BigInt::from(nodes) < bound;
    let costs = if fits {
        ScaledCosts::Small(
            big.iter()
                .map(|row| row.iter().map(|c| c.to_i64().expect("bounded")).collect())
                .collect(),
        )
    } else {
        ScaledCosts::Big(big)
    };
    Scaled { denominator, costs }
}

/// Rational result of a solve: flows plus duals divided back by the scale.
pub(crate) struct RationalSolution {
    pub flows: Vec<(usize, usize, Rational)>,
    pub sink_dual: Vec<Rational>,
    /// `(i, j)` arcs whose constraint is tight under the returned duals.
    pub tight: Vec<Vec<bool>>,
}

pub(crate) fn solve_rational(
    supply: &[Rational],
    demand: &[Rational],
    costs: &[Vec<Rational>],
) -> RationalSolution {
    fn finish<C: Cost + Into<BigInt>>(
        sol: Solution<C>,
        cost: &[Vec<C>],
        denominator: &BigInt,
    ) -> RationalSolution {
        let tight = cost
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, c)| sol.source_dual[i].clone() - sol.sink_dual[j].clone() == *c)
                    .collect()
            })
            .collect();
        let back = |p: C| Rational::new(p.into(), denominator.clone());
        RationalSolution {
            flows: sol.flows,
            sink_dual: sol.sink_dual.into_iter().map(back).collect(),
            tight,
        }
    }

    let scaled = scale(costs);
    match scaled.costs {
        ScaledCosts::Small(c) => finish(solve(supply, demand, &c), &c, &scaled.denominator),
        ScaledCosts::Big(c) => finish(solve(supply, demand, &c), &c, &scaled.denominator),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn single_arc() {
        let sol = solve(&[int(1)], &[int(1)], &[vec![3i64]]);
        assert_eq!(sol.flows, vec![(0, 0, int(1))]);
        assert_eq!(sol.source_dual[0] - sol.sink_dual[0], 3);
    }

    #[test]
    fn needs_rerouting_through_reverse_arc() {
        // greedy would send source 0 to sink 0, but the optimum crosses
        let cost = vec![vec![1i64, 2], vec![1, 100]];
        let sol = solve(&[int(1), int(1)], &[int(1), int(1)], &cost);
        let total: i64 = sol
            .flows
            .iter()
            .map(|(i, j, q)| cost[*i][*j] * q.to_integer().to_i64().unwrap())
            .sum();
        assert_eq!(total, 3);
        assert_eq!(sol.flows, vec![(0, 1, int(1)), (1, 0, int(1))]);
    }

    #[test]
    fn fractional_masses_and_big_costs_agree() {
        let supply = vec![ratio(1, 3), ratio(2, 3)];
        let demand = vec![ratio(1, 2), ratio(1, 6), ratio(1, 3)];
        let small = vec![vec![4i64, 1, 7], vec![2, 5, 3]];
        let big: Vec<Vec<BigInt>> = small
            .iter()
            .map(|r| r.iter().map(|&c| BigInt::from(c)).collect())
            .collect();
        let a = solve(&supply, &demand, &small);
        let b = solve(&supply, &demand, &big);
        assert_eq!(a.flows, b.flows);
        let cost_a: Rational = a
            .flows
            .iter()
            .map(|(i, j, q)| q * int(small[*i][*j]))
            .sum();
        let dual_a: Rational = supply
            .iter()
            .zip(&a.source_dual)
            .map(|(s, p)| s * int(*p))
            .sum::<Rational>()
            - demand
                .iter()
                .zip(&a.sink_dual)
                .map(|(d, p)| d * int(*p))
                .sum::<Rational>();
        assert_eq!(cost_a, dual_a);
    }
}
