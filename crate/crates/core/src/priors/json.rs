use serde::{Deserialize, Serialize};

use super::{
    binomial_grid_prior, two_group_binomial_prior, uniform_grid_prior, LinkSpec, Prior,
    DEFAULT_GRID_SIZE,
};
use crate::error::{Error, Result};

/// JSON description of a prior, tagged by `"family"`.
///
/// ```json
/// {"family": "beta", "a": 2.0, "b": 2.0}
/// {"family": "dirichlet", "alpha": [1.0, 1.0, 1.0]}
/// {"family": "grid", "atoms": [{"point": 0.25, "weight": 0.5}, {"point": 0.75, "weight": 0.5}]}
/// {"family": "grid", "split": 2, "atoms": [{"point": [0.5, 0.2], "weight": 1.0}]}
/// {"family": "binomial_grid", "p": 30, "alpha": 0.3}
/// {"family": "uniform_grid", "p": 30, "drop_endpoints": true}
/// {"family": "two_group_binomial", "k": 10, "p": 30, "alpha": 0.5, "link": {"kind": "one_minus_u"}}
/// {"family": "graph", "base": {"family": "beta", "a": 1, "b": 1}, "link": {"kind": "power", "b": 2}, "split": 10}
/// {"family": "mixed_graph", "base": {...}, "mean_link": {...}, "variance_link": {...}, "split": 3}
/// ```
///
/// Grid atoms with array points are simplex points unless `split` is given,
/// in which case they must be (u, v) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Beta {
        a: f64,
        b: f64,
    },
    Dirichlet {
        alpha: Vec<f64>,
    },
    Grid {
        atoms: Vec<AtomSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        split: Option<usize>,
    },
    BinomialGrid {
        p: usize,
        alpha: f64,
    },
    UniformGrid {
        p: usize,
        #[serde(default)]
        drop_endpoints: bool,
    },
    TwoGroupBinomial {
        k: usize,
        p: usize,
        alpha: f64,
        link: LinkSpec,
    },
    Graph {
        base: Box<PriorSpec>,
        link: LinkSpec,
        split: usize,
        #[serde(default = "default_grid_size")]
        grid_size: usize,
    },
    MixedGraph {
        base: Box<PriorSpec>,
        mean_link: LinkSpec,
        variance_link: LinkSpec,
        split: usize,
        #[serde(default = "default_grid_size")]
        grid_size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub point: PointSpec,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}

impl PriorSpec {
    pub fn from_json(text: &str) -> Result<PriorSpec> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<Prior> {
        match self {
            PriorSpec::Beta { a, b } => Prior::beta(*a, *b),
            PriorSpec::Dirichlet { alpha } => Prior::dirichlet(alpha.clone()),
            PriorSpec::Grid { atoms, split } => build_grid(atoms, *split),
            PriorSpec::BinomialGrid { p, alpha } => binomial_grid_prior(*p, *alpha),
            PriorSpec::UniformGrid { p, drop_endpoints } => uniform_grid_prior(*p, *drop_endpoints),
            PriorSpec::TwoGroupBinomial { k, p, alpha, link } => {
                two_group_binomial_prior(*k, *p, *alpha, link)
            }
            PriorSpec::Graph {
                base,
                link,
                split,
                grid_size,
            } => Prior::graph(base.build()?, link.clone(), *split, *grid_size),
            PriorSpec::MixedGraph {
                base,
                mean_link,
                variance_link,
                split,
                grid_size,
            } => Prior::mixed_graph(
                base.build()?,
                mean_link.clone(),
                variance_link.clone(),
                *split,
                *grid_size,
            ),
        }
    }
}

fn build_grid(atoms: &[AtomSpec], split: Option<usize>) -> Result<Prior> {
    let weights: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
    let all_scalar = atoms.iter().all(|a| matches!(a.point, PointSpec::Scalar(_)));
    let vectors = || -> Result<Vec<Vec<f64>>> {
        atoms
            .iter()
            .map(|a| match &a.point {
                PointSpec::Vector(v) => Ok(v.clone()),
                PointSpec::Scalar(_) => Err(Error::Parameter("grid mixes scalar and vector points".into())),
            })
            .collect()
    };
    match split {
        Some(k) => {
            let pairs = vectors()?
                .into_iter()
                .map(|v| match v.as_slice() {
                    [u, w] => Ok((*u, *w)),
                    _ => Err(Error::Parameter("two-group atoms must be [u, v] pairs".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            Prior::pair_grid(k, pairs, weights)
        }
        None if all_scalar => {
            let pts = atoms
                .iter()
                .map(|a| match a.point {
                    PointSpec::Scalar(u) => u,
                    PointSpec::Vector(_) => unreachable!(),
                })
                .collect();
            Prior::scalar_grid(pts, weights)
        }
        None => {
            let pts = vectors()?;
            if pts.iter().any(|p| p.len() != pts[0].len()) {
                return Err(Error::Parameter("simplex atoms must share a dimension".into()));
            }
            Prior::simplex_grid(pts, weights)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::Support;

    #[test]
    fn parses_every_family() {
        let cases = [
            r#"{"family":"beta","a":2,"b":3}"#,
            r#"{"family":"dirichlet","alpha":[1,1,1]}"#,
            r#"{"family":"grid","atoms":[{"point":0.25,"weight":0.5},{"point":0.75,"weight":0.5}]}"#,
            r#"{"family":"grid","split":1,"atoms":[{"point":[0.5,0.2],"weight":1}]}"#,
            r#"{"family":"grid","atoms":[{"point":[0.2,0.3],"weight":1}]}"#,
            r#"{"family":"binomial_grid","p":6,"alpha":0.3}"#,
            r#"{"family":"uniform_grid","p":6,"drop_endpoints":true}"#,
            r#"{"family":"two_group_binomial","k":2,"p":5,"alpha":0.5,"link":{"kind":"one_minus_u"}}"#,
            r#"{"family":"graph","base":{"family":"beta","a":1,"b":1},"link":{"kind":"power","b":2},"split":2}"#,
            r#"{"family":"mixed_graph","base":{"family":"uniform_grid","p":4},"mean_link":{"kind":"power","b":1},"variance_link":{"kind":"affine","c0":1,"c1":0},"split":2,"grid_size":16}"#,
        ];
        for c in cases {
            PriorSpec::from_json(c).and_then(|s| s.build()).unwrap_or_else(|e| panic!("{c}: {e}"));
        }
    }

    #[test]
    fn grid_kinds() {
        let p = PriorSpec::from_json(r#"{"family":"grid","atoms":[{"point":[0.2,0.3],"weight":1}]}"#)
            .unwrap()
            .build()
            .unwrap();
        let Prior::Grid(g) = p else { panic!() };
        assert!(matches!(g.support(), Support::Simplex { m: 2, .. }));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(PriorSpec::from_json(r#"{"family":"beta","a":2,"b":3,"c":1}"#).is_err());
        assert!(PriorSpec::from_json(r#"{"family":"beta","a":-2,"b":3}"#).unwrap().build().is_err());
        assert!(PriorSpec::from_json(r#"{"family":"grid","split":1,"atoms":[{"point":0.5,"weight":1}]}"#)
            .unwrap()
            .build()
            .is_err());
        assert!(PriorSpec::from_json(r#"{"family":"graph","base":{"family":"dirichlet","alpha":[1,1,1]},"link":{"kind":"one_minus_u"},"split":1}"#)
            .unwrap()
            .build()
            .is_err());
    }
}
