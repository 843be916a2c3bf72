//! Finitely generated groups addressed through normal-form keys.

mod builtin;
mod simplex;
mod word_metric;

use std::fmt::Debug;
use std::hash::Hash;

pub use builtin::{
    AnyElem, AnyGroup, CyclicGroup, Dihedral, DirectProduct, GroupDescriptor, InfiniteDihedral,
    IntegerLattice,
};
pub use simplex::{Side, SimplexElement};
pub use word_metric::{WordMetric, DEFAULT_RADIUS_CAP};

use crate::error::{Error, Result};
use crate::metric::PointId;

/// A group with concrete element arithmetic and an injective normal form.
///
/// Implement this to plug in groups beyond the built-ins; no word-problem
/// machinery is provided.
pub trait Group: Send + Sync {
    type Elem: Clone + Eq + Hash + Debug + Send + Sync;

    fn identity(&self) -> Self::Elem;

    fn multiply(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    fn inverse(&self, a: &Self::Elem) -> Self::Elem;

    /// Default named generating set.
    fn generators(&self) -> Vec<(String, Self::Elem)>;

    /// Normal-form key; `canonical(g) == canonical(h)` iff `g == h`.
    fn canonical(&self, a: &Self::Elem) -> String;

    fn parse(&self, key: &str) -> Option<Self::Elem>;

    /// All elements, for finite groups.
    fn elements(&self) -> Option<Vec<Self::Elem>> {
        None
    }

    fn describe(&self) -> String;

    fn key(&self, a: &Self::Elem) -> PointId {
        PointId::new(self.canonical(a))
    }

    fn power(&self, a: &Self::Elem, k: i64) -> Self::Elem {
        let base = if k < 0 { self.inverse(a) } else { a.clone() };
        let mut out = self.identity();
        for _ in 0..k.unsigned_abs() {
            out = self.multiply(&out, &base);
        }
        out
    }
}

/// Parses a word such as `"t^-2 s"` over named generators.
///
/// Tokens are `name`, `name^k`, `e` (identity) or a bracketed normal form
/// `[key]`; they multiply left to right.
pub fn parse_word<G: Group>(
    group: &G,
    generators: &[(String, G::Elem)],
    word: &str,
) -> Result<G::Elem> {
    let mut out = group.identity();
    for token in word.split_whitespace() {
        let factor = if token == "e" {
            group.identity()
        } else if let Some(key) = token.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            group
                .parse(key)
                .ok_or_else(|| Error::Parse(format!("invalid normal form {key:?}")))?
        } else {
            let (name, exp) = match token.split_once('^') {
                Some((n, k)) => (
                    n,
                    k.parse::<i64>()
                        .map_err(|_| Error::Parse(format!("invalid exponent in {token:?}")))?,
                ),
                None => (token, 1),
            };
            let g = generators
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, g)| g)
                .ok_or_else(|| Error::Parse(format!("unknown generator {name:?}")))?;
            group.power(g, exp)
        };
        out = group.multiply(&out, &factor);
    }
    Ok(out)
}

/// Checks associativity, identity and inverses on every triple of `sample`.
pub fn check_axioms<G: Group>(group: &G, sample: &[G::Elem]) -> bool {
    let e = group.identity();
    sample.iter().all(|a| {
        group.multiply(a, &e) == *a
            && group.multiply(&e, a) == *a
            && group.multiply(a, &group.inverse(a)) == e
            && group.parse(&group.canonical(a)).as_ref() == Some(a)
            && sample.iter().all(|b| {
                sample.iter().all(|c| {
                    group.multiply(&group.multiply(a, b), c)
                        == group.multiply(a, &group.multiply(b, c))
                })
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_words_in_the_dihedral_group() {
        let g = InfiniteDihedral;
        let gens = g.generators();
        assert_eq!(parse_word(&g, &gens, "t t s").unwrap(), Dihedral::new(2, true));
        assert_eq!(parse_word(&g, &gens, "t^-3").unwrap(), Dihedral::new(-3, false));
        assert_eq!(parse_word(&g, &gens, "s t").unwrap(), Dihedral::new(-1, true));
        assert_eq!(parse_word(&g, &gens, "e").unwrap(), Dihedral::new(0, false));
        assert_eq!(parse_word(&g, &gens, "").unwrap(), Dihedral::new(0, false));
        assert_eq!(parse_word(&g, &gens, "[t^5s]").unwrap(), Dihedral::new(5, true));
        assert!(parse_word(&g, &gens, "x").is_err());
        assert!(parse_word(&g, &gens, "t^a").is_err());
    }
}
