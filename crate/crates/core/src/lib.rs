//! Discrete choice models of heterogeneous groups and choice-set optimization.
//!
//! The crate covers four model families (multinomial logit, the
//! context-dependent random utility model, a generalized nested logit and
//! elimination-by-aspects), group objectives over a candidate set of added
//! alternatives (disagreement, promotion), an ε-additive table-based
//! approximation for Agreement/Disagreement/Promotion, exact baselines,
//! reduction gadgets, and maximum-likelihood fitting.
//!
//! Everything here is `no_std` + `alloc`. File formats, the CLI and the
//! parallel harness live in the `choiceset` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod approx;
pub mod error;
pub mod exact;
pub mod fitting;
pub mod gadgets;
pub(crate) mod math;
pub mod models;
pub mod objectives;

pub use error::{Error, Result};
pub use models::{
    CdmAltParams, CdmParams, ChoiceInstance, ChoiceModel, EbaParams, Family, Individual, ItemId,
    LowRank, MnlParams, ModelParams, NlNode, NlTree, Population, NEG_INF,
};
pub use objectives::{AlternativeSet, Problem};
