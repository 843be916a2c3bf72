use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::metric::{DistanceOracle, MetricSpace, PointId};
use crate::rational::{self, Rational};

use super::Group;

pub const DEFAULT_RADIUS_CAP: u32 = 64;

struct Ball<E> {
    length: HashMap<E, u32>,
    /// Elements at exactly `radius`.
    frontier: Vec<E>,
    radius: u32,
}

/// Word length over `S ∪ S⁻¹`, from a breadth-first ball around the identity
/// that grows on demand up to `radius_cap`.
///
/// `d(g, f) = |f⁻¹ g|`, so the metric is left-invariant by construction.
pub struct WordMetric<G: Group> {
    group: Arc<G>,
    generators: Vec<(String, G::Elem)>,
    steps: Vec<G::Elem>,
    radius_cap: u32,
    ball: RwLock<Ball<G::Elem>>,
}

impl<G: Group> WordMetric<G> {
    pub fn new(group: Arc<G>, generators: Vec<(String, G::Elem)>, radius_cap: u32) -> Self {
        let mut steps: Vec<G::Elem> = Vec::new();
        for (_, s) in &generators {
            for t in [s.clone(), group.inverse(s)] {
                if !steps.contains(&t) {
                    steps.push(t);
                }
            }
        }
        let e = group.identity();
        let mut length = HashMap::new();
        length.insert(e.clone(), 0);
        WordMetric {
            group,
            generators,
            steps,
            radius_cap: radius_cap.max(1),
            ball: RwLock::new(Ball {
                length,
                frontier: vec![e],
                radius: 0,
            }),
        }
    }

    /// Word metric for the group's default generators.
    pub fn standard(group: Arc<G>, radius_cap: u32) -> Self {
        let gens = group.generators();
        Self::new(group, gens, radius_cap)
    }

    pub fn group(&self) -> &Arc<G> {
        &self.group
    }

    pub fn generators(&self) -> &[(String, G::Elem)] {
        &self.generators
    }

    pub fn radius_cap(&self) -> u32 {
        self.radius_cap
    }

    fn grow(&self, ball: &mut Ball<G::Elem>) {
        let mut next = Vec::new();
        for g in &ball.frontier {
            for s in &self.steps {
                let h = self.group.multiply(g, s);
                if !ball.length.contains_key(&h) {
                    ball.length.insert(h.clone(), ball.radius + 1);
                    next.push(h);
                }
            }
        }
        ball.frontier = next;
        ball.radius += 1;
    }

    /// `|g|_S`, or `RadiusExceeded` if it is larger than the cap.
    pub fn length(&self, g: &G::Elem) -> Result<u32> {
        if let Some(&l) = self.ball.read().expect("ball lock").length.get(g) {
            return Ok(l);
        }
        let mut ball = self.ball.write().expect("ball lock");
        loop {
            if let Some(&l) = ball.length.get(g) {
                return Ok(l);
            }
            // an empty frontier means the generated subgroup is exhausted
            if ball.radius >= self.radius_cap || ball.frontier.is_empty() {
                return Err(Error::RadiusExceeded {
                    element: self.group.canonical(g),
                    cap: self.radius_cap,
                });
            }
            self.grow(&mut ball);
        }
    }

    pub fn distance(&self, g: &G::Elem, f: &G::Elem) -> Result<u32> {
        self.length(&self.group.multiply(&self.group.inverse(f), g))
    }

    /// Elements of word length at most `radius`, ordered by length then key.
    pub fn ball(&self, radius: u32) -> Result<Vec<G::Elem>> {
        if radius > self.radius_cap {
            return Err(Error::RadiusExceeded {
                element: format!("ball of radius {radius}"),
                cap: self.radius_cap,
            });
        }
        let mut ball = self.ball.write().expect("ball lock");
        while ball.radius < radius && !ball.frontier.is_empty() {
            self.grow(&mut ball);
        }
        let mut out: Vec<(u32, String, G::Elem)> = ball
            .length
            .iter()
            .filter(|(_, &l)| l <= radius)
            .map(|(g, &l)| (l, self.group.canonical(g), g.clone()))
            .collect();
        out.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        Ok(out.into_iter().map(|(_, _, g)| g).collect())
    }

    pub fn describe_generators(&self) -> Vec<String> {
        self.generators
            .iter()
            .map(|(n, g)| format!("{n}={}", self.group.canonical(g)))
            .collect()
    }
}

impl<G: Group + 'static> WordMetric<G> {
    /// Oracle-mode metric space whose probe set is `probe`.
    pub fn into_space(self: Arc<Self>, probe: &[G::Elem]) -> Result<MetricSpace> {
        let keys = probe.iter().map(|g| self.group.key(g)).collect();
        MetricSpace::with_oracle(self, keys)
    }
}

impl<G: Group> DistanceOracle for WordMetric<G> {
    fn distance(&self, a: &PointId, b: &PointId) -> Result<Rational> {
        let g = self
            .group
            .parse(a.as_str())
            .ok_or_else(|| Error::UnknownPoint(a.clone()))?;
        let f = self
            .group
            .parse(b.as_str())
            .ok_or_else(|| Error::UnknownPoint(b.clone()))?;
        WordMetric::distance(self, &g, &f).map(|d| rational::int(d.into()))
    }

    fn contains(&self, p: &PointId) -> bool {
        self.group.parse(p.as_str()).is_some()
    }

    fn describe(&self) -> String {
        format!(
            "word metric on {} with S = {{{}}}",
            self.group.describe(),
            self.describe_generators().join(", ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Dihedral, InfiniteDihedral};

    #[test]
    fn dihedral_examples() {
        let wm = WordMetric::standard(Arc::new(InfiniteDihedral), DEFAULT_RADIUS_CAP);
        let e = Dihedral::new(0, false);
        let tau = Dihedral::new(1, false);
        assert_eq!(wm.distance(&e, &tau).unwrap(), 1);
        assert_eq!(wm.distance(&tau, &tau).unwrap(), 0);
        assert_eq!(wm.distance(&e, &Dihedral::new(2, true)).unwrap(), 3);
    }

    #[test]
    fn radius_cap_is_an_error() {
        let wm = WordMetric::standard(Arc::new(InfiniteDihedral), 5);
        assert!(wm.length(&Dihedral::new(5, false)).is_ok());
        assert!(matches!(
            wm.length(&Dihedral::new(6, false)),
            Err(Error::RadiusExceeded { cap: 5, .. })
        ));
    }

    #[test]
    fn ball_sizes() {
        let wm = WordMetric::standard(Arc::new(InfiniteDihedral), 10);
        // tau^n for |n| <= r, tau^n sigma for |n| <= r - 1
        for r in 1..=6u32 {
            assert_eq!(wm.ball(r).unwrap().len() as u32, 4 * r);
        }
    }

    #[test]
    fn oracle_space() {
        let wm = Arc::new(WordMetric::standard(Arc::new(InfiniteDihedral), 10));
        let probe = wm.ball(2).unwrap();
        let space = wm.clone().into_space(&probe).unwrap();
        assert!(crate::metric::validate_metric(&space).is_clean());
        assert_eq!(
            space.distance(&"t^3".into(), &"t^-1s".into()).unwrap(),
            rational::int(5)
        );
        assert!(matches!(
            space.distance(&"bogus".into(), &"e".into()),
            Err(Error::UnknownPoint(_))
        ));
    }
}
