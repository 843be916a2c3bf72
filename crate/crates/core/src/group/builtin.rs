use serde::{Deserialize, Serialize};

use super::Group;

/// `Z^k` with generators `e1..ek`; keys are comma-separated coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerLattice {
    pub rank: usize,
}

impl Group for IntegerLattice {
    type Elem = Vec<i64>;

    fn identity(&self) -> Vec<i64> {
        vec![0; self.rank]
    }

    fn multiply(&self, a: &Vec<i64>, b: &Vec<i64>) -> Vec<i64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    fn inverse(&self, a: &Vec<i64>) -> Vec<i64> {
        a.iter().map(|x| -x).collect()
    }

    fn generators(&self) -> Vec<(String, Vec<i64>)> {
        (0..self.rank)
            .map(|i| {
                let mut v = vec![0; self.rank];
                v[i] = 1;
                (format!("e{}", i + 1), v)
            })
            .collect()
    }

    fn canonical(&self, a: &Vec<i64>) -> String {
        a.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
    }

    fn parse(&self, key: &str) -> Option<Vec<i64>> {
        let v: Vec<i64> = key
            .split(',')
            .map(|s| s.trim().parse().ok())
            .collect::<Option<_>>()?;
        (v.len() == self.rank).then_some(v)
    }

    fn describe(&self) -> String {
        format!("Z^{}", self.rank)
    }
}

/// `Z/mZ` with generator `g = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicGroup {
    pub order: u64,
}

impl Group for CyclicGroup {
    type Elem = u64;

    fn identity(&self) -> u64 {
        0
    }

    fn multiply(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.order
    }

    fn inverse(&self, a: &u64) -> u64 {
        (self.order - a % self.order) % self.order
    }

    fn generators(&self) -> Vec<(String, u64)> {
        vec![("g".to_string(), 1 % self.order)]
    }

    fn canonical(&self, a: &u64) -> String {
        a.to_string()
    }

    fn parse(&self, key: &str) -> Option<u64> {
        key.trim().parse().ok().filter(|v| *v < self.order)
    }

    fn elements(&self) -> Option<Vec<u64>> {
        Some((0..self.order).collect())
    }

    fn describe(&self) -> String {
        format!("Z/{}", self.order)
    }
}

/// `tau^shift sigma^flip` in the infinite dihedral group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dihedral {
    pub shift: i64,
    pub flip: bool,
}

impl Dihedral {
    pub fn new(shift: i64, flip: bool) -> Self {
        Dihedral { shift, flip }
    }
}

/// `<tau, sigma | sigma tau = tau^-1 sigma, sigma^2 = 1>` with generators
/// `t` and `s`. Keys: `e`, `t^n`, `s`, `t^ns`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InfiniteDihedral;

impl Group for InfiniteDihedral {
    type Elem = Dihedral;

    fn identity(&self) -> Dihedral {
        Dihedral::new(0, false)
    }

    fn multiply(&self, a: &Dihedral, b: &Dihedral) -> Dihedral {
        let m = if a.flip { -b.shift } else { b.shift };
        Dihedral::new(a.shift + m, a.flip ^ b.flip)
    }

    fn inverse(&self, a: &Dihedral) -> Dihedral {
        if a.flip {
            *a
        } else {
            Dihedral::new(-a.shift, false)
        }
    }

    fn generators(&self) -> Vec<(String, Dihedral)> {
        vec![
            ("t".to_string(), Dihedral::new(1, false)),
            ("s".to_string(), Dihedral::new(0, true)),
        ]
    }

    fn canonical(&self, a: &Dihedral) -> String {
        match (a.shift, a.flip) {
            (0, false) => "e".to_string(),
            (0, true) => "s".to_string(),
            (n, false) => format!("t^{n}"),
            (n, true) => format!("t^{n}s"),
        }
    }

    fn parse(&self, key: &str) -> Option<Dihedral> {
        match key {
            "e" => return Some(self.identity()),
            "s" => return Some(Dihedral::new(0, true)),
            _ => {}
        }
        let rest = key.strip_prefix("t^")?;
        let (num, flip) = match rest.strip_suffix('s') {
            Some(n) => (n, true),
            None => (rest, false),
        };
        let shift: i64 = num.parse().ok()?;
        // the shift-0 forms have their own keys
        (shift != 0).then_some(Dihedral::new(shift, flip))
    }

    fn describe(&self) -> String {
        "D_inf".to_string()
    }
}

/// `A x B` with generators `l.<name>` and `r.<name>`; keys `<a;b>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectProduct<A, B> {
    pub left: A,
    pub right: B,
}

fn split_pair(key: &str) -> Option<(&str, &str)> {
    let inner = key.strip_prefix('<')?.strip_suffix('>')?;
    let mut depth = 0i32;
    for (i, c) in inner.char_indices() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            ';' if depth == 0 => return Some((&inner[..i], &inner[i + 1..])),
            _ => {}
        }
    }
    None
}

impl<A: Group, B: Group> Group for DirectProduct<A, B> {
    type Elem = (A::Elem, B::Elem);

    fn identity(&self) -> Self::Elem {
        (self.left.identity(), self.right.identity())
    }

    fn multiply(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        (
            self.left.multiply(&a.0, &b.0),
            self.right.multiply(&a.1, &b.1),
        )
    }

    fn inverse(&self, a: &Self::Elem) -> Self::Elem {
        (self.left.inverse(&a.0), self.right.inverse(&a.1))
    }

    fn generators(&self) -> Vec<(String, Self::Elem)> {
        let mut gens: Vec<_> = self
            .left
            .generators()
            .into_iter()
            .map(|(n, g)| (format!("l.{n}"), (g, self.right.identity())))
            .collect();
        gens.extend(
            self.right
                .generators()
                .into_iter()
                .map(|(n, g)| (format!("r.{n}"), (self.left.identity(), g))),
        );
        gens
    }

    fn canonical(&self, a: &Self::Elem) -> String {
        format!(
            "<{};{}>",
            self.left.canonical(&a.0),
            self.right.canonical(&a.1)
        )
    }

    fn parse(&self, key: &str) -> Option<Self::Elem> {
        let (l, r) = split_pair(key)?;
        Some((self.left.parse(l)?, self.right.parse(r)?))
    }

    fn elements(&self) -> Option<Vec<Self::Elem>> {
        let ls = self.left.elements()?;
        let rs = self.right.elements()?;
        Some(
            ls.iter()
                .flat_map(|l| rs.iter().map(move |r| (l.clone(), r.clone())))
                .collect(),
        )
    }

    fn describe(&self) -> String {
        format!("({} x {})", self.left.describe(), self.right.describe())
    }
}

/// JSON group descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum GroupDescriptor {
    #[serde(rename = "Zk")]
    Lattice { k: usize },
    #[serde(rename = "cyclic")]
    Cyclic { m: u64 },
    #[serde(rename = "dihedral_inf")]
    DihedralInf,
    #[serde(rename = "product")]
    Product {
        left: Box<GroupDescriptor>,
        right: Box<GroupDescriptor>,
    },
}

/// Any built-in group, chosen at runtime from a [`GroupDescriptor`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyGroup {
    Lattice(IntegerLattice),
    Cyclic(CyclicGroup),
    Dihedral(InfiniteDihedral),
    Product(Box<DirectProduct<AnyGroup, AnyGroup>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AnyElem {
    Lattice(Vec<i64>),
    Cyclic(u64),
    Dihedral(Dihedral),
    Pair(Box<(AnyElem, AnyElem)>),
}

impl AnyGroup {
    pub fn from_descriptor(d: &GroupDescriptor) -> Result<Self, crate::error::Error> {
        Ok(match d {
            GroupDescriptor::Lattice { k } => {
                if *k == 0 {
                    return Err(crate::error::Error::Parse("Zk needs k >= 1".into()));
                }
                AnyGroup::Lattice(IntegerLattice { rank: *k })
            }
            GroupDescriptor::Cyclic { m } => {
                if *m == 0 {
                    return Err(crate::error::Error::Parse("cyclic group needs m >= 1".into()));
                }
                AnyGroup::Cyclic(CyclicGroup { order: *m })
            }
            GroupDescriptor::DihedralInf => AnyGroup::Dihedral(InfiniteDihedral),
            GroupDescriptor::Product { left, right } => {
                AnyGroup::Product(Box::new(DirectProduct {
                    left: Self::from_descriptor(left)?,
                    right: Self::from_descriptor(right)?,
                }))
            }
        })
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        match self {
            AnyGroup::Lattice(g) => GroupDescriptor::Lattice { k: g.rank },
            AnyGroup::Cyclic(g) => GroupDescriptor::Cyclic { m: g.order },
            AnyGroup::Dihedral(_) => GroupDescriptor::DihedralInf,
            AnyGroup::Product(p) => GroupDescriptor::Product {
                left: Box::new(p.left.descriptor()),
                right: Box::new(p.right.descriptor()),
            },
        }
    }

    fn lift_pair((l, r): (AnyElem, AnyElem)) -> AnyElem {
        AnyElem::Pair(Box::new((l, r)))
    }
}

macro_rules! mismatch {
    () => {
        panic!("element does not belong to this group")
    };
}

impl Group for AnyGroup {
    type Elem = AnyElem;

    fn identity(&self) -> AnyElem {
        match self {
            AnyGroup::Lattice(g) => AnyElem::Lattice(g.identity()),
            AnyGroup::Cyclic(g) => AnyElem::Cyclic(g.identity()),
            AnyGroup::Dihedral(g) => AnyElem::Dihedral(g.identity()),
            AnyGroup::Product(p) => Self::lift_pair(p.identity()),
        }
    }

    fn multiply(&self, a: &AnyElem, b: &AnyElem) -> AnyElem {
        match (self, a, b) {
            (AnyGroup::Lattice(g), AnyElem::Lattice(x), AnyElem::Lattice(y)) => {
                AnyElem::Lattice(g.multiply(x, y))
            }
            (AnyGroup::Cyclic(g), AnyElem::Cyclic(x), AnyElem::Cyclic(y)) => {
                AnyElem::Cyclic(g.multiply(x, y))
            }
            (AnyGroup::Dihedral(g), AnyElem::Dihedral(x), AnyElem::Dihedral(y)) => {
                AnyElem::Dihedral(g.multiply(x, y))
            }
            (AnyGroup::Product(p), AnyElem::Pair(x), AnyElem::Pair(y)) => {
                Self::lift_pair((p.left.multiply(&x.0, &y.0), p.right.multiply(&x.1, &y.1)))
            }
            _ => mismatch!(),
        }
    }

    fn inverse(&self, a: &AnyElem) -> AnyElem {
        match (self, a) {
            (AnyGroup::Lattice(g), AnyElem::Lattice(x)) => AnyElem::Lattice(g.inverse(x)),
            (AnyGroup::Cyclic(g), AnyElem::Cyclic(x)) => AnyElem::Cyclic(g.inverse(x)),
            (AnyGroup::Dihedral(g), AnyElem::Dihedral(x)) => AnyElem::Dihedral(g.inverse(x)),
            (AnyGroup::Product(p), AnyElem::Pair(x)) => {
                Self::lift_pair((p.left.inverse(&x.0), p.right.inverse(&x.1)))
            }
            _ => mismatch!(),
        }
    }

    fn generators(&self) -> Vec<(String, AnyElem)> {
        match self {
            AnyGroup::Lattice(g) => g
                .generators()
                .into_iter()
                .map(|(n, x)| (n, AnyElem::Lattice(x)))
                .collect(),
            AnyGroup::Cyclic(g) => g
                .generators()
                .into_iter()
                .map(|(n, x)| (n, AnyElem::Cyclic(x)))
                .collect(),
            AnyGroup::Dihedral(g) => g
                .generators()
                .into_iter()
                .map(|(n, x)| (n, AnyElem::Dihedral(x)))
                .collect(),
            AnyGroup::Product(p) => p
                .generators()
                .into_iter()
                .map(|(n, x)| (n, Self::lift_pair(x)))
                .collect(),
        }
    }

    fn canonical(&self, a: &AnyElem) -> String {
        match (self, a) {
            (AnyGroup::Lattice(g), AnyElem::Lattice(x)) => g.canonical(x),
            (AnyGroup::Cyclic(g), AnyElem::Cyclic(x)) => g.canonical(x),
            (AnyGroup::Dihedral(g), AnyElem::Dihedral(x)) => g.canonical(x),
            (AnyGroup::Product(p), AnyElem::Pair(x)) => {
                format!("<{};{}>", p.left.canonical(&x.0), p.right.canonical(&x.1))
            }
            _ => mismatch!(),
        }
    }

    fn parse(&self, key: &str) -> Option<AnyElem> {
        match self {
            AnyGroup::Lattice(g) => g.parse(key).map(AnyElem::Lattice),
            AnyGroup::Cyclic(g) => g.parse(key).map(AnyElem::Cyclic),
            AnyGroup::Dihedral(g) => g.parse(key).map(AnyElem::Dihedral),
            AnyGroup::Product(p) => p.parse(key).map(Self::lift_pair),
        }
    }

    fn elements(&self) -> Option<Vec<AnyElem>> {
        match self {
            AnyGroup::Cyclic(g) => Some(g.elements()?.into_iter().map(AnyElem::Cyclic).collect()),
            AnyGroup::Product(p) => Some(p.elements()?.into_iter().map(Self::lift_pair).collect()),
            AnyGroup::Lattice(_) | AnyGroup::Dihedral(_) => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            AnyGroup::Lattice(g) => g.describe(),
            AnyGroup::Cyclic(g) => g.describe(),
            AnyGroup::Dihedral(g) => g.describe(),
            AnyGroup::Product(p) => p.describe(),
        }
    }
}

impl From<Dihedral> for AnyElem {
    fn from(d: Dihedral) -> Self {
        AnyElem::Dihedral(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::check_axioms;

    #[test]
    fn dihedral_presentation_relations() {
        let g = InfiniteDihedral;
        let tau = Dihedral::new(1, false);
        let sigma = Dihedral::new(0, true);
        assert_eq!(g.multiply(&sigma, &tau), g.multiply(&g.inverse(&tau), &sigma));
        assert_eq!(g.multiply(&sigma, &sigma), g.identity());
        for n in -20..=20 {
            for s in [false, true] {
                let a = Dihedral::new(n, s);
                // normal form tau^n sigma^s
                let built = g.multiply(&g.power(&tau, n), &g.power(&sigma, s as i64));
                assert_eq!(built, a);
                assert_eq!(g.multiply(&a, &g.inverse(&a)), g.identity());
                assert_eq!(g.parse(&g.canonical(&a)), Some(a));
            }
        }
    }

    #[test]
    fn builtin_axioms_on_samples() {
        let d: Vec<Dihedral> = (-3..=3)
            .flat_map(|n| [Dihedral::new(n, false), Dihedral::new(n, true)])
            .collect();
        assert!(check_axioms(&InfiniteDihedral, &d));

        let z2 = IntegerLattice { rank: 2 };
        let sample: Vec<Vec<i64>> = vec![vec![0, 0], vec![1, -2], vec![-3, 4], vec![5, 5]];
        assert!(check_axioms(&z2, &sample));

        let c = CyclicGroup { order: 6 };
        assert!(check_axioms(&c, &c.elements().unwrap()));

        let prod = DirectProduct {
            left: CyclicGroup { order: 3 },
            right: InfiniteDihedral,
        };
        let sample: Vec<_> = (0..3)
            .flat_map(|a| d.iter().map(move |x| (a, *x)))
            .collect();
        assert!(check_axioms(&prod, &sample));
    }

    #[test]
    fn descriptors_round_trip_through_json() {
        let json = r#"{"type":"product","left":{"type":"Zk","k":2},"right":{"type":"dihedral_inf"}}"#;
        let d: GroupDescriptor = serde_json::from_str(json).unwrap();
        let g = AnyGroup::from_descriptor(&d).unwrap();
        assert_eq!(g.descriptor(), d);
        let gens = g.generators();
        let names: Vec<&str> = gens.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["l.e1", "l.e2", "r.t", "r.s"]);
        let x = g.multiply(&gens[0].1, &gens[3].1);
        assert_eq!(g.canonical(&x), "<1,0;s>");
        assert_eq!(g.parse("<1,0;s>"), Some(x));
    }

    #[test]
    fn cyclic_keys_reject_out_of_range() {
        let c = CyclicGroup { order: 12 };
        assert_eq!(c.parse("11"), Some(11));
        assert_eq!(c.parse("12"), None);
        assert_eq!(c.inverse(&5), 7);
    }
}
