//! JSON model files.
//!
//! ```json
//! {
//!   "family": "mnl",
//!   "universe": ["x", "y", "z"],
//!   "choice_set": ["x", "y"],
//!   "individuals": [{ "label": "a", "utilities": { "x": 0.0, "y": 1.5, "z": "-inf" } }]
//! }
//! ```
//!
//! Per family, each individual carries:
//! * `mnl`: `utilities`
//! * `cdm`: `utilities` plus sparse `pulls` (`{"z": {"x": p}}`) and/or
//!   `low_rank` (`rank`, `targets`, `contexts` keyed by item)
//! * `cdm-alt`: sparse `q`
//! * `nl`: `tree`, nested nodes; leaves have `item` and `utility`,
//!   internal nodes `label`, `utility` (not on the root) and `children`
//! * `eba`: `aspects` (item to aspect list) and `aspect_utilities`
//!
//! Utilities may be the string `"-inf"`. `choice_set`, `gadget` and `fit`
//! are optional.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use choiceset_core::{
    CdmAltParams, CdmParams, ChoiceInstance, EbaParams, Family, Individual, ItemId, LowRank, MnlParams,
    ModelParams, NlNode, NlTree, Population, NEG_INF,
};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A utility that serializes `-inf` as the string `"-inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Util(pub f64);

impl Serialize for Util {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == NEG_INF {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Util {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Util;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or the string \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Util, E> {
                Ok(Util(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Util, E> {
                Ok(Util(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Util, E> {
                Ok(Util(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Util, E> {
                match v {
                    "-inf" => Ok(Util(NEG_INF)),
                    other => Err(E::custom(format!("expected \"-inf\", found \"{other}\""))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Mnl,
    Cdm,
    CdmAlt,
    Nl,
    Eba,
}

impl From<Family> for FamilyTag {
    fn from(f: Family) -> Self {
        match f {
            Family::Mnl => FamilyTag::Mnl,
            Family::Cdm => FamilyTag::Cdm,
            Family::CdmAlt => FamilyTag::CdmAlt,
            Family::Nl => FamilyTag::Nl,
            Family::Eba => FamilyTag::Eba,
        }
    }
}

type Matrix = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowRankFile {
    pub rank: usize,
    pub targets: BTreeMap<String, Vec<f64>>,
    pub contexts: BTreeMap<String, Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<Util>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeFile>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndividualFile {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<BTreeMap<String, Util>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulls: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_rank: Option<LowRankFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<NodeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspects: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_utilities: Option<BTreeMap<String, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateEntry {
    pub item: String,
    pub value: u64,
}

/// Provenance of a generated reduction instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GadgetFile {
    pub kind: String,
    pub set: Vec<u64>,
    pub target_sum: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub certificate: Vec<CertificateEntry>,
}

/// Summary of the fit that produced the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFile {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    pub nll: f64,
    pub grad_check: f64,
    pub l2_weight: f64,
    pub seed: u64,
    pub observations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub family: FamilyTag,
    pub universe: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice_set: Option<Vec<String>>,
    pub individuals: Vec<IndividualFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gadget: Option<GadgetFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitFile>,
}

struct Names<'a> {
    universe: &'a [String],
}

impl Names<'_> {
    fn index(&self, name: &str) -> Result<usize> {
        self.universe.iter().position(|u| u == name).ok_or_else(|| anyhow!("unknown item `{name}`"))
    }

    fn utilities(&self, map: &BTreeMap<String, Util>, what: &str) -> Result<Vec<f64>> {
        let mut out = vec![None; self.universe.len()];
        for (k, v) in map {
            out[self.index(k)?] = Some(v.0);
        }
        out.into_iter()
            .zip(self.universe)
            .map(|(v, name)| v.ok_or_else(|| anyhow!("{what} missing for item `{name}`")))
            .collect()
    }

    fn matrix(&self, map: &Matrix) -> Result<Vec<f64>> {
        let n = self.universe.len();
        let mut out = vec![0.0; n * n];
        for (row, cols) in map {
            let r = self.index(row)?;
            for (col, v) in cols {
                out[r * n + self.index(col)?] = *v;
            }
        }
        Ok(out)
    }

    fn vectors(&self, map: &BTreeMap<String, Vec<f64>>, rank: usize, what: &str) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![vec![0.0; rank]; self.universe.len()];
        for (k, v) in map {
            out[self.index(k)?] = v.clone();
        }
        if map.len() != self.universe.len() {
            bail!("low-rank {what} need one vector per item");
        }
        Ok(out)
    }

    fn node(&self, f: &NodeFile, root: bool) -> Result<NlNode> {
        let utility = match (root, f.utility) {
            (true, u) => u.map_or(0.0, |u| u.0),
            (false, Some(u)) => u.0,
            (false, None) => bail!("non-root tree nodes need a utility"),
        };
        match &f.item {
            Some(item) => {
                if !f.children.is_empty() {
                    bail!("leaf `{item}` cannot have children");
                }
                Ok(NlNode::leaf(f.label.clone().unwrap_or_else(|| item.clone()), self.index(item)?, utility))
            }
            None => {
                let children = f.children.iter().map(|c| self.node(c, false)).collect::<Result<Vec<_>>>()?;
                Ok(NlNode::nest(f.label.clone().unwrap_or_default(), utility, children))
            }
        }
    }
}

fn sparse(universe: &[String], dense: impl Fn(usize, usize) -> f64) -> Matrix {
    let n = universe.len();
    let mut out = Matrix::new();
    for r in 0..n {
        let row: BTreeMap<String, f64> =
            (0..n).filter(|&c| dense(r, c) != 0.0).map(|c| (universe[c].clone(), dense(r, c))).collect();
        if !row.is_empty() {
            out.insert(universe[r].clone(), row);
        }
    }
    out
}

fn node_file(universe: &[String], n: &NlNode, root: bool) -> NodeFile {
    match n.item {
        Some(i) => NodeFile {
            label: (n.label != universe[i]).then(|| n.label.clone()),
            item: Some(universe[i].clone()),
            utility: Some(Util(n.utility)),
            children: Vec::new(),
        },
        None => NodeFile {
            label: Some(n.label.clone()),
            item: None,
            utility: (!root).then_some(Util(n.utility)),
            children: n.children.iter().map(|c| node_file(universe, c, false)).collect(),
        },
    }
}

impl ModelFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing model file {}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn items(&self) -> Result<Vec<ItemId>> {
        Ok(self.universe.iter().map(ItemId::new).collect::<choiceset_core::Result<_>>()?)
    }

    pub fn population(&self) -> Result<Population> {
        let names = Names { universe: &self.universe };
        let n = self.universe.len();
        let mut individuals = Vec::with_capacity(self.individuals.len());
        for ind in &self.individuals {
            let ctx = || format!("individual `{}`", ind.label);
            let params = self.individual_params(&names, n, ind).with_context(ctx)?;
            individuals.push(Individual::new(ind.label.clone(), params));
        }
        Ok(Population::new(individuals)?)
    }

    fn individual_params(&self, names: &Names<'_>, n: usize, ind: &IndividualFile) -> Result<ModelParams> {
        let allowed: &[&str] = match self.family {
            FamilyTag::Mnl => &["utilities"],
            FamilyTag::Cdm => &["utilities", "pulls", "low_rank"],
            FamilyTag::CdmAlt => &["q"],
            FamilyTag::Nl => &["tree"],
            FamilyTag::Eba => &["aspects", "aspect_utilities"],
        };
        let present = [
            ("utilities", ind.utilities.is_some()),
            ("pulls", ind.pulls.is_some()),
            ("low_rank", ind.low_rank.is_some()),
            ("q", ind.q.is_some()),
            ("tree", ind.tree.is_some()),
            ("aspects", ind.aspects.is_some()),
            ("aspect_utilities", ind.aspect_utilities.is_some()),
        ];
        if let Some((field, _)) = present.iter().find(|(f, p)| *p && !allowed.contains(f)) {
            bail!("field `{field}` does not belong to this family");
        }
        let need = |field: &str| anyhow!("missing field `{field}`");
        Ok(match self.family {
            FamilyTag::Mnl => {
                ModelParams::Mnl(MnlParams::new(names.utilities(ind.utilities.as_ref().ok_or(need("utilities"))?, "utility")?)?)
            }
            FamilyTag::Cdm => {
                let u = names.utilities(ind.utilities.as_ref().ok_or(need("utilities"))?, "utility")?;
                let low_rank = ind
                    .low_rank
                    .as_ref()
                    .map(|lr| -> Result<LowRank> {
                        Ok(LowRank {
                            rank: lr.rank,
                            targets: names.vectors(&lr.targets, lr.rank, "targets")?,
                            contexts: names.vectors(&lr.contexts, lr.rank, "contexts")?,
                        })
                    })
                    .transpose()?;
                let pulls = ind.pulls.as_ref().map(|p| names.matrix(p)).transpose()?;
                ModelParams::Cdm(match (pulls, low_rank) {
                    (Some(p), Some(lr)) => CdmParams::with_checked_low_rank(u, p, lr)?,
                    (None, Some(lr)) => CdmParams::from_low_rank(u, lr)?,
                    (Some(p), None) => CdmParams::new(u, p)?,
                    (None, None) => CdmParams::new(u, vec![0.0; n * n])?,
                })
            }
            FamilyTag::CdmAlt => ModelParams::CdmAlt(CdmAltParams::new(n, names.matrix(ind.q.as_ref().ok_or(need("q"))?)?)?),
            FamilyTag::Nl => {
                let root = names.node(ind.tree.as_ref().ok_or(need("tree"))?, true)?;
                ModelParams::Nl(NlTree::new(root, n)?)
            }
            FamilyTag::Eba => {
                let utils = ind.aspect_utilities.as_ref().ok_or(need("aspect_utilities"))?;
                let aspect_names: Vec<String> = utils.keys().cloned().collect();
                let aspects = ind.aspects.as_ref().ok_or(need("aspects"))?;
                let mut item_aspects = vec![None; n];
                for (item, list) in aspects {
                    let ids = list
                        .iter()
                        .map(|a| {
                            aspect_names.iter().position(|x| x == a).ok_or_else(|| anyhow!("aspect `{a}` has no utility"))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    item_aspects[names.index(item)?] = Some(ids);
                }
                let item_aspects = item_aspects
                    .into_iter()
                    .zip(&self.universe)
                    .map(|(a, name)| a.ok_or_else(|| anyhow!("aspects missing for item `{name}`")))
                    .collect::<Result<Vec<_>>>()?;
                ModelParams::Eba(EbaParams::new(aspect_names, item_aspects, utils.values().copied().collect())?)
            }
        })
    }

    pub fn from_population(pop: &Population, universe: &[ItemId]) -> Result<Self> {
        if pop.universe_len() != universe.len() {
            bail!("population covers {} items, universe has {}", pop.universe_len(), universe.len());
        }
        let names: Vec<String> = universe.iter().map(|i| i.as_str().to_owned()).collect();
        let util_map = |u: &[f64]| -> BTreeMap<String, Util> {
            names.iter().cloned().zip(u.iter().map(|&v| Util(v))).collect()
        };
        let individuals = pop
            .individuals()
            .iter()
            .map(|ind| {
                let mut f = IndividualFile { label: ind.label.clone(), ..Default::default() };
                match &ind.params {
                    ModelParams::Mnl(p) => f.utilities = Some(util_map(p.utilities())),
                    ModelParams::Cdm(p) => {
                        f.utilities = Some(util_map(p.utilities()));
                        match p.low_rank() {
                            Some(lr) => {
                                let keyed = |v: &[Vec<f64>]| names.iter().cloned().zip(v.iter().cloned()).collect();
                                f.low_rank = Some(LowRankFile {
                                    rank: lr.rank,
                                    targets: keyed(&lr.targets),
                                    contexts: keyed(&lr.contexts),
                                });
                            }
                            None => f.pulls = Some(sparse(&names, |z, x| p.pull(z, x))),
                        }
                    }
                    ModelParams::CdmAlt(p) => f.q = Some(sparse(&names, |w, x| p.q(w, x))),
                    ModelParams::Nl(t) => f.tree = Some(node_file(&names, &t.to_nested(), true)),
                    ModelParams::Eba(p) => {
                        let an = p.aspect_names();
                        f.aspect_utilities = Some(an.iter().cloned().zip(p.aspect_utilities().iter().copied()).collect());
                        f.aspects = Some(
                            names
                                .iter()
                                .enumerate()
                                .map(|(i, name)| (name.clone(), p.aspects_of(i).iter().map(|&a| an[a].clone()).collect()))
                                .collect(),
                        );
                    }
                }
                f
            })
            .collect();
        Ok(ModelFile {
            family: pop.family().into(),
            universe: names,
            choice_set: None,
            individuals,
            gadget: None,
            fit: None,
        })
    }

    /// Instance over the model's universe. `choice_set` overrides the file's.
    pub fn instance(&self, choice_set: Option<&[String]>) -> Result<ChoiceInstance> {
        let c = choice_set
            .or(self.choice_set.as_deref())
            .ok_or_else(|| anyhow!("no choice set: pass --choice-set or add `choice_set` to the model file"))?;
        let universe: Vec<&str> = self.universe.iter().map(String::as_str).collect();
        let c: Vec<&str> = c.iter().map(String::as_str).collect();
        Ok(ChoiceInstance::from_names(&universe, &c)?)
    }

    /// The file without the `gadget`/`fit` annotations, for hashing.
    pub fn canonical(&self) -> ModelFile {
        ModelFile { gadget: None, fit: None, choice_set: None, ..self.clone() }
    }
}
