//! Encodings of an MNL as a special case of the other three families.

use alloc::vec;
use alloc::vec::Vec;

use super::{CdmParams, EbaParams, MnlParams, NlNode, NlTree};
use crate::error::{domain, Result};
use crate::math;

fn require_finite(m: &MnlParams) -> Result<()> {
    if m.utilities().iter().any(|u| !u.is_finite()) {
        return Err(domain("MNL encodings need finite utilities"));
    }
    Ok(())
}

/// Same utilities, all pulls zero.
pub fn encode_mnl_as_cdm(m: &MnlParams) -> Result<CdmParams> {
    require_finite(m)?;
    let n = m.utilities().len();
    CdmParams::new(m.utilities().to_vec(), vec![0.0; n * n])
}

/// Every item a child of the root, carrying its MNL utility.
pub fn encode_mnl_as_nl(m: &MnlParams) -> Result<NlTree> {
    require_finite(m)?;
    let leaves = m
        .utilities()
        .iter()
        .enumerate()
        .map(|(i, &u)| NlNode::leaf(alloc::format!("leaf{i}"), i, u))
        .collect();
    NlTree::new(NlNode::nest("root", 0.0, leaves), m.utilities().len())
}

/// One private aspect per item with utility `e^{u(x)}`.
pub fn encode_mnl_as_eba(m: &MnlParams) -> Result<EbaParams> {
    require_finite(m)?;
    let n = m.utilities().len();
    let names = (0..n).map(|i| alloc::format!("chi{i}")).collect();
    let aspects: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let utilities = m.utilities().iter().map(|&u| math::exp(u)).collect();
    EbaParams::new(names, aspects, utilities)
}
