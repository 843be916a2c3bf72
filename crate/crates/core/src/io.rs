//! JSON file formats for metric spaces and finite actions.
//!
//! Every rational is a `"num/den"` string (bare integers are accepted on
//! input). Measures, plans and witnesses serialize through their own serde
//! impls in [`crate::transport`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{parse_word, AnyGroup, Group, GroupDescriptor, WordMetric, DEFAULT_RADIUS_CAP};
use crate::metric::{MetricSpace, PointId};
use crate::quotient::FiniteAction;
use crate::rational::Exact;

fn default_metric_kind() -> String {
    "word".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricFile {
    Explicit {
        points: Vec<PointId>,
        matrix: Vec<Vec<Exact>>,
    },
    Group(GroupMetricFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupMetricFile {
    pub group: GroupDescriptor,
    #[serde(default = "default_metric_kind")]
    pub metric: String,
    /// Words over the group's default generators; defaults to those generators.
    #[serde(default)]
    pub generators: Option<Vec<String>>,
    #[serde(default)]
    pub radius_cap: Option<u32>,
    /// Probe set for validation, as normal-form keys.
    #[serde(default)]
    pub points: Option<Vec<PointId>>,
    /// Probe with the word-metric ball of this radius when `points` is absent.
    #[serde(default)]
    pub probe_radius: Option<u32>,
}

/// A loaded space, plus the word metric behind it when there is one.
pub struct LoadedSpace {
    pub space: MetricSpace,
    pub word_metric: Option<Arc<WordMetric<AnyGroup>>>,
}

/// Resolves a generating set given as words; `None` keeps the defaults.
pub fn resolve_generators(
    group: &AnyGroup,
    words: Option<&[String]>,
) -> Result<Vec<(String, <AnyGroup as Group>::Elem)>> {
    let defaults = group.generators();
    match words {
        None => Ok(defaults),
        Some(words) => {
            if words.is_empty() {
                return Err(Error::Parse("empty generating set".into()));
            }
            words
                .iter()
                .map(|w| Ok((w.clone(), parse_word(group, &defaults, w)?)))
                .collect()
        }
    }
}

pub fn word_metric_from(
    group: GroupDescriptor,
    generators: Option<&[String]>,
    radius_cap: Option<u32>,
) -> Result<Arc<WordMetric<AnyGroup>>> {
    let group = Arc::new(AnyGroup::from_descriptor(&group)?);
    let gens = resolve_generators(&group, generators)?;
    Ok(Arc::new(WordMetric::new(
        group,
        gens,
        radius_cap.unwrap_or(DEFAULT_RADIUS_CAP),
    )))
}

impl MetricFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(self) -> Result<LoadedSpace> {
        match self {
            MetricFile::Explicit { points, matrix } => Ok(LoadedSpace {
                space: MetricSpace::from_matrix(
                    points,
                    matrix.into_iter().map(|r| r.into_iter().map(|q| q.0).collect()).collect(),
                )?,
                word_metric: None,
            }),
            MetricFile::Group(g) => {
                if g.metric != "word" {
                    return Err(Error::Parse(format!("unknown metric {:?}", g.metric)));
                }
                let wm = word_metric_from(g.group, g.generators.as_deref(), g.radius_cap)?;
                let probe = match g.points {
                    Some(points) => points,
                    None => wm
                        .ball(g.probe_radius.unwrap_or(3))?
                        .iter()
                        .map(|x| wm.group().key(x))
                        .collect(),
                };
                let space = MetricSpace::with_oracle(wm.clone(), probe)?;
                Ok(LoadedSpace {
                    space,
                    word_metric: Some(wm),
                })
            }
        }
    }

    /// Explicit file for a space in matrix mode.
    pub fn from_space(space: &MetricSpace) -> Result<Self> {
        let explicit = space.to_explicit()?;
        let n = explicit.len();
        Ok(MetricFile::Explicit {
            points: explicit.points().to_vec(),
            matrix: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| Exact(explicit.entry(i, j).expect("explicit").clone()))
                        .collect()
                })
                .collect(),
        })
    }
}

/// Finite action file: an explicit metric space plus the acting group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionFile {
    pub points: Vec<PointId>,
    pub matrix: Vec<Vec<Exact>>,
    /// Full list of permutations (closed under composition), as image indices.
    #[serde(default)]
    pub permutations: Option<Vec<Vec<usize>>>,
    /// Alternatively, generators whose closure is taken.
    #[serde(default)]
    pub generators: Option<Vec<Vec<usize>>>,
    /// Alternatively, a finite group with an action table: `table[k]` is
    /// the permutation of `elements[k]` (normal-form keys).
    #[serde(default)]
    pub group: Option<GroupDescriptor>,
    #[serde(default)]
    pub elements: Option<Vec<String>>,
    #[serde(default)]
    pub table: Option<Vec<Vec<usize>>>,
}

impl ActionFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(self) -> Result<FiniteAction> {
        let space = Arc::new(MetricSpace::from_matrix(
            self.points,
            self.matrix
                .into_iter()
                .map(|r| r.into_iter().map(|q| q.0).collect())
                .collect(),
        )?);
        match (self.permutations, self.generators, self.group) {
            (Some(perms), None, None) => FiniteAction::from_permutations(space, perms),
            (None, Some(gens), None) => FiniteAction::generated_by(space, gens),
            (None, None, Some(desc)) => {
                let group = AnyGroup::from_descriptor(&desc)?;
                let keys = self
                    .elements
                    .ok_or_else(|| Error::Parse("group action needs \"elements\"".into()))?;
                let table = self
                    .table
                    .ok_or_else(|| Error::Parse("group action needs \"table\"".into()))?;
                if keys.len() != table.len() {
                    return Err(Error::Parse("elements and table differ in length".into()));
                }
                let n = space.len();
                if table.iter().any(|row| row.len() != n || row.iter().any(|&y| y >= n)) {
                    return Err(Error::InvalidAction("table rows must map points to points".into()));
                }
                let elems = keys
                    .iter()
                    .map(|k| {
                        group
                            .parse(k)
                            .ok_or_else(|| Error::Parse(format!("invalid element {k:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let row_of = |g: &<AnyGroup as Group>::Elem| {
                    elems.iter().position(|h| h == g).expect("listed element")
                };
                FiniteAction::from_group(space, &group, &elems, |g, x| table[row_of(g)][x])
            }
            (None, None, None) => FiniteAction::trivial(space),
            _ => Err(Error::Parse(
                "give exactly one of permutations, generators, or group".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::validate_metric;
    use crate::rational::int;

    #[test]
    fn explicit_metric_file() {
        let text = r#"{"points":["a","b"],"matrix":[["0/1","3/2"],["3/2","0"]]}"#;
        let loaded = MetricFile::from_json(text).unwrap().load().unwrap();
        assert!(loaded.word_metric.is_none());
        assert_eq!(
            loaded.space.distance(&"a".into(), &"b".into()).unwrap(),
            crate::rational::ratio(3, 2)
        );
    }

    #[test]
    fn group_metric_file() {
        let text = r#"{"group":{"type":"dihedral_inf"},"metric":"word","probe_radius":2}"#;
        let loaded = MetricFile::from_json(text).unwrap().load().unwrap();
        assert_eq!(loaded.space.len(), 8);
        assert!(validate_metric(&loaded.space).is_clean());
        assert_eq!(
            loaded.space.distance(&"e".into(), &"t^2s".into()).unwrap(),
            int(3)
        );
    }

    #[test]
    fn custom_generators_change_the_metric() {
        let text = r#"{"group":{"type":"Zk","k":1},"generators":["e1","e1 e1 e1"],"points":["0","3","6"]}"#;
        let loaded = MetricFile::from_json(text).unwrap().load().unwrap();
        assert_eq!(loaded.space.distance(&"0".into(), &"6".into()).unwrap(), int(2));
    }

    #[test]
    fn action_file_variants() {
        let base = r#""points":["-1","0","1"],"matrix":[["0","1","2"],["1","0","1"],["2","1","0"]]"#;
        let perms = format!(r#"{{{base},"permutations":[[0,1,2],[2,1,0]]}}"#);
        assert_eq!(ActionFile::from_json(&perms).unwrap().load().unwrap().order(), 2);
        let gens = format!(r#"{{{base},"generators":[[2,1,0]]}}"#);
        assert_eq!(ActionFile::from_json(&gens).unwrap().load().unwrap().order(), 2);
        let table = format!(
            r#"{{{base},"group":{{"type":"cyclic","m":2}},"elements":["0","1"],"table":[[0,1,2],[2,1,0]]}}"#
        );
        assert_eq!(ActionFile::from_json(&table).unwrap().load().unwrap().order(), 2);
        let trivial = format!(r#"{{{base}}}"#);
        assert_eq!(ActionFile::from_json(&trivial).unwrap().load().unwrap().order(), 1);
        let both = format!(r#"{{{base},"permutations":[[0,1,2]],"generators":[[2,1,0]]}}"#);
        assert!(ActionFile::from_json(&both).unwrap().load().is_err());
    }
}
