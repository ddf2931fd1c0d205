//! Closed-form Promotion rules for three restricted model classes.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::models::{pull_views, ChoiceInstance, NlTree, Population};
use crate::objectives::{target_position, AlternativeSet};

fn refuse(msg: impl Into<alloc::string::String>) -> Error {
    Error::Precondition(msg.into())
}

/// Two-item CDM where, for each individual, every alternative exerts the
/// same pulls on the two items of `C`. Includes every alternative pulling
/// harder on `x_star` than on its competitor.
///
/// Refuses when the pulls differ across alternatives, or when an
/// alternative helps `x_star` for one individual and hurts it for another.
pub fn promote_cdm_2item_equal(pop: &Population, inst: &ChoiceInstance, x_star: usize) -> Result<AlternativeSet> {
    pop.check_instance(inst)?;
    let views = pull_views(pop)?;
    if inst.k() != 2 {
        return Err(refuse(format!("needs exactly two items in the choice set, found {}", inst.k())));
    }
    let t = target_position(inst, x_star)?;
    let rival = inst.choice_set()[1 - t];
    let alts = inst.alternatives();
    for (a, v) in views.iter().enumerate() {
        if let Some(&first) = alts.first() {
            let reference = (v.pull_on(first, x_star), v.pull_on(first, rival));
            if alts.iter().any(|&z| (v.pull_on(z, x_star), v.pull_on(z, rival)) != reference) {
                return Err(refuse(format!("individual {a}: alternatives exert unequal pulls on the choice set")));
            }
        }
    }
    let mut chosen = Vec::new();
    for &z in alts {
        let gains: Vec<f64> = views.iter().map(|v| v.pull_on(z, x_star) - v.pull_on(z, rival)).collect();
        let helps = gains.iter().any(|&g| g > 0.0);
        if helps && gains.iter().any(|&g| g < 0.0) {
            return Err(refuse(format!("alternative {} helps the target for some individuals and hurts it for others", inst.item(z))));
        }
        if helps {
            chosen.push(z);
        }
    }
    AlternativeSet::new(inst, chosen)
}

/// NL where every individual shares one tree shape. Includes every
/// alternative that is neither a sibling of an ancestor of `x_star` (or of
/// `x_star` itself) nor brings such a sibling into the induced subtree.
pub fn promote_nl_same_tree(pop: &Population, inst: &ChoiceInstance, x_star: usize) -> Result<AlternativeSet> {
    pop.check_instance(inst)?;
    let trees = pop.nl()?;
    target_position(inst, x_star)?;
    let shape = trees[0].clusters();
    if trees.iter().any(|t| t.clusters() != shape) {
        return Err(refuse("individuals do not share one tree shape"));
    }
    let tree: &NlTree = trees[0];
    let nodes = tree.nodes();
    let mut on_path = alloc::vec![false; nodes.len()];
    for v in tree.path(x_star) {
        on_path[v] = true;
    }
    on_path[0] = true;
    let present = tree.present(inst.choice_set());
    let chosen = inst.alternatives().iter().copied().filter(|&z| {
        let leaf = tree.leaf(z);
        // child of a path node whose subtree holds z
        let mut c = leaf;
        while let Some(p) = nodes[c].parent {
            if on_path[p] {
                break;
            }
            c = p;
        }
        c != leaf && present[c]
    });
    AlternativeSet::new(inst, chosen)
}

/// EBA where every alternative shares aspects with `x_star` or with its
/// competitors but never both. Includes alternatives that share aspects
/// with a competitor and not with `x_star`.
pub fn promote_eba_disjoint(pop: &Population, inst: &ChoiceInstance, x_star: usize) -> Result<AlternativeSet> {
    pop.check_instance(inst)?;
    let models = pop.eba()?;
    target_position(inst, x_star)?;
    let rivals: Vec<usize> = inst.choice_set().iter().copied().filter(|&y| y != x_star).collect();
    let mut chosen = Vec::new();
    for &z in inst.alternatives() {
        let mut helps = false;
        let mut hurts = false;
        for (a, e) in models.iter().enumerate() {
            let with_target = e.shares_aspect(z, x_star);
            let with_rival = rivals.iter().any(|&y| e.shares_aspect(z, y));
            if with_target && with_rival {
                return Err(refuse(format!(
                    "individual {a}: alternative {} shares aspects with the target and a competitor",
                    inst.item(z)
                )));
            }
            helps |= with_rival;
            hurts |= with_target;
        }
        if helps && hurts {
            return Err(refuse(format!("alternative {} helps some individuals and hurts others", inst.item(z))));
        }
        if helps {
            chosen.push(z);
        }
    }
    AlternativeSet::new(inst, chosen)
}
