//! Domain types and exact choice probabilities for the four model families.
//!
//! Items are referred to by their position in the universe (`usize`). A
//! [`ChoiceInstance`] owns the universe's [`ItemId`]s and splits it into the
//! base choice set `C` and the alternative pool `C̄`.

mod cdm;
mod eba;
mod encode;
mod mnl;
mod nl;
mod sample;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{domain, invalid, Error, Result};

pub use cdm::{CdmAltParams, CdmParams, LowRank};
pub(crate) use cdm::PullView;
pub use eba::EbaParams;
pub use encode::{encode_mnl_as_cdm, encode_mnl_as_eba, encode_mnl_as_nl};
pub use mnl::MnlParams;
pub use nl::{NlNode, NlTree};
pub use sample::{sample_choice, Sampler};

/// Utility sentinel whose exponential is exactly zero.
pub const NEG_INF: f64 = f64::NEG_INFINITY;

/// Opaque, non-empty item token.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(invalid("item ids must be non-empty"));
        }
        Ok(ItemId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Universe of items split into the base choice set `C` and the pool `C̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceInstance {
    universe: Vec<ItemId>,
    choice_set: Vec<usize>,
    alternatives: Vec<usize>,
}

impl ChoiceInstance {
    /// Builds an instance from explicit index lists. `choice_set` and
    /// `alternatives` must partition the universe; `C` must be non-empty.
    /// The order of `alternatives` is the processing order used by the
    /// approximation table.
    pub fn new(universe: Vec<ItemId>, choice_set: Vec<usize>, alternatives: Vec<usize>) -> Result<Self> {
        let n = universe.len();
        for (i, a) in universe.iter().enumerate() {
            if universe[..i].contains(a) {
                return Err(invalid(alloc::format!("duplicate item id {a}")));
            }
        }
        if choice_set.is_empty() {
            return Err(invalid("the choice set must contain at least one item"));
        }
        let mut seen = alloc::vec![false; n];
        for &i in choice_set.iter().chain(&alternatives) {
            if i >= n {
                return Err(invalid(alloc::format!("item index {i} outside universe of {n}")));
            }
            if seen[i] {
                return Err(invalid(alloc::format!("item {} listed twice", universe[i])));
            }
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(invalid(alloc::format!(
                "item {} is in neither the choice set nor the alternatives",
                universe[i]
            )));
        }
        Ok(ChoiceInstance { universe, choice_set, alternatives })
    }

    /// Instance whose alternatives are every non-`C` item in universe order.
    pub fn with_choice_set(universe: Vec<ItemId>, choice_set: Vec<usize>) -> Result<Self> {
        let alternatives = (0..universe.len()).filter(|i| !choice_set.contains(i)).collect();
        Self::new(universe, choice_set, alternatives)
    }

    /// Convenience constructor from string tokens.
    pub fn from_names(universe: &[&str], choice_set: &[&str]) -> Result<Self> {
        let ids = universe.iter().map(|s| ItemId::new(*s)).collect::<Result<Vec<_>>>()?;
        let c = choice_set
            .iter()
            .map(|s| {
                universe
                    .iter()
                    .position(|u| u == s)
                    .ok_or_else(|| domain(alloc::format!("{s} is not in the universe")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_choice_set(ids, c)
    }

    pub fn universe(&self) -> &[ItemId] {
        &self.universe
    }

    pub fn choice_set(&self) -> &[usize] {
        &self.choice_set
    }

    pub fn alternatives(&self) -> &[usize] {
        &self.alternatives
    }

    /// `k = |C|`
    pub fn k(&self) -> usize {
        self.choice_set.len()
    }

    /// `m = |C̄|`
    pub fn m(&self) -> usize {
        self.alternatives.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.universe.iter().position(|u| u.as_str() == id)
    }

    pub fn item(&self, i: usize) -> &ItemId {
        &self.universe[i]
    }

    /// `C ∪ Z`, with the members of `C` first (in instance order).
    pub fn offered(&self, z: &[usize]) -> Vec<usize> {
        let mut set = Vec::with_capacity(self.k() + z.len());
        set.extend_from_slice(&self.choice_set);
        set.extend_from_slice(z);
        set
    }

    pub fn names(&self, items: &[usize]) -> Vec<String> {
        items.iter().map(|&i| self.universe[i].to_string()).collect()
    }
}

/// Exact choice probabilities over a subset of the universe.
pub trait ChoiceModel {
    fn universe_len(&self) -> usize;

    /// Choice distribution over `set`, aligned with the order of `set`.
    fn distribution(&self, set: &[usize]) -> Result<Vec<f64>>;

    /// `Pr(x | set)`.
    fn prob(&self, set: &[usize], x: usize) -> Result<f64> {
        let pos = set
            .iter()
            .position(|&y| y == x)
            .ok_or_else(|| domain(alloc::format!("item {x} is not in the set")))?;
        Ok(self.distribution(set)?[pos])
    }
}

pub(crate) fn check_set(set: &[usize], universe_len: usize) -> Result<()> {
    if set.is_empty() {
        return Err(domain("empty choice set"));
    }
    if let Some(&i) = set.iter().find(|&&i| i >= universe_len) {
        return Err(domain(alloc::format!("item index {i} outside universe of {universe_len}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Mnl,
    Cdm,
    CdmAlt,
    Nl,
    Eba,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Mnl => "mnl",
            Family::Cdm => "cdm",
            Family::CdmAlt => "cdm-alt",
            Family::Nl => "nl",
            Family::Eba => "eba",
        }
    }
}

/// Parameters of one individual, tagged by family.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelParams {
    Mnl(MnlParams),
    Cdm(CdmParams),
    CdmAlt(CdmAltParams),
    Nl(NlTree),
    Eba(EbaParams),
}

impl ModelParams {
    pub fn family(&self) -> Family {
        match self {
            ModelParams::Mnl(_) => Family::Mnl,
            ModelParams::Cdm(_) => Family::Cdm,
            ModelParams::CdmAlt(_) => Family::CdmAlt,
            ModelParams::Nl(_) => Family::Nl,
            ModelParams::Eba(_) => Family::Eba,
        }
    }

    fn inner(&self) -> &dyn ChoiceModel {
        match self {
            ModelParams::Mnl(p) => p,
            ModelParams::Cdm(p) => p,
            ModelParams::CdmAlt(p) => p,
            ModelParams::Nl(p) => p,
            ModelParams::Eba(p) => p,
        }
    }
}

impl ChoiceModel for ModelParams {
    fn universe_len(&self) -> usize {
        self.inner().universe_len()
    }

    fn distribution(&self, set: &[usize]) -> Result<Vec<f64>> {
        self.inner().distribution(set)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub label: String,
    pub params: ModelParams,
}

impl Individual {
    pub fn new(label: impl Into<String>, params: ModelParams) -> Self {
        Individual { label: label.into(), params }
    }
}

/// A group of individuals sharing one model family and one universe.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    individuals: Vec<Individual>,
}

macro_rules! family_view {
    ($name:ident, $variant:ident, $ty:ty, $expected:literal) => {
        pub fn $name(&self) -> Result<Vec<&$ty>> {
            self.individuals
                .iter()
                .map(|ind| match &ind.params {
                    ModelParams::$variant(p) => Ok(p),
                    other => Err(Error::Family { expected: $expected, found: other.family().name() }),
                })
                .collect()
        }
    };
}

impl Population {
    pub fn new(individuals: Vec<Individual>) -> Result<Self> {
        let first = individuals.first().ok_or_else(|| invalid("a population needs at least one individual"))?;
        let family = first.params.family();
        let len = first.params.universe_len();
        for ind in &individuals {
            if ind.params.family() != family {
                return Err(invalid("all individuals must share one model family"));
            }
            if ind.params.universe_len() != len {
                return Err(invalid("all individuals must cover the same universe"));
            }
        }
        Ok(Population { individuals })
    }

    /// Population with labels `a0, a1, ...`.
    pub fn from_params(params: Vec<ModelParams>) -> Result<Self> {
        Self::new(
            params
                .into_iter()
                .enumerate()
                .map(|(i, p)| Individual::new(alloc::format!("a{i}"), p))
                .collect(),
        )
    }

    pub fn family(&self) -> Family {
        self.individuals[0].params.family()
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn universe_len(&self) -> usize {
        self.individuals[0].params.universe_len()
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn params(&self, a: usize) -> &ModelParams {
        &self.individuals[a].params
    }

    /// Checks that the population and the instance describe the same universe.
    pub fn check_instance(&self, inst: &ChoiceInstance) -> Result<()> {
        if self.universe_len() != inst.universe().len() {
            return Err(invalid(alloc::format!(
                "model covers {} items but the instance has {}",
                self.universe_len(),
                inst.universe().len()
            )));
        }
        Ok(())
    }

    family_view!(mnl, Mnl, MnlParams, "mnl");
    family_view!(cdm, Cdm, CdmParams, "cdm");
    family_view!(cdm_alt, CdmAlt, CdmAltParams, "cdm-alt");
    family_view!(nl, Nl, NlTree, "nl");
    family_view!(eba, Eba, EbaParams, "eba");
}

/// Both CDM parameterizations behind one view.
pub(crate) fn pull_views(pop: &Population) -> Result<Vec<&dyn PullView>> {
    Ok(match pop.family() {
        Family::Cdm => pop.cdm()?.into_iter().map(|p| p as &dyn PullView).collect(),
        Family::CdmAlt => pop.cdm_alt()?.into_iter().map(|p| p as &dyn PullView).collect(),
        other => return Err(Error::Family { expected: "cdm", found: other.name() }),
    })
}
