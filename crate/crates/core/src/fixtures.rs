//! Shipped fixture data.

use crate::structure::FiniteStructure;

pub const PATH3_JSON: &str = include_str!("../fixtures/path3.json");
pub const TRIPHI_JSON: &str = include_str!("../fixtures/triphi.json");
pub const C4SKEW_JSON: &str = include_str!("../fixtures/c4skew.json");
pub const Z4_WORD_JSON: &str = include_str!("../fixtures/z4_word.json");
pub const TREE_A_JSON: &str = include_str!("../fixtures/tree_a.json");
pub const PATH3_CHAIN_JSON: &str = include_str!("../fixtures/path3_chain.json");

/// `{p,q,r}` on a path with unary `A` and `d_to_p`.
pub fn path3() -> FiniteStructure {
    FiniteStructure::from_json(PATH3_JSON).expect("fixture parses")
}

/// PATH3's universe carrying the symmetric predicate `phi`.
pub fn triphi() -> FiniteStructure {
    FiniteStructure::from_json(TRIPHI_JSON).expect("fixture parses")
}

/// Root 1/2, child 1/4, grandchild leaf 1/8.
pub fn tree_a() -> crate::topometric::TreeClusterSpace {
    crate::topometric::TreeClusterSpace::from_json(TREE_A_JSON).expect("fixture parses")
}

/// `Z/4` with the skewed metric `d′(0,1) = 1/4`, all other pairs 1/2.
pub fn c4skew() -> crate::groups::FiniteMetricGroup {
    crate::groups::FiniteMetricGroup::from_json(C4SKEW_JSON).expect("fixture parses")
}

/// `Z/4` with half the cyclic word distance.
pub fn z4_word() -> crate::groups::FiniteMetricGroup {
    crate::groups::FiniteMetricGroup::from_json(Z4_WORD_JSON).expect("fixture parses")
}

/// `{p,q,r} ⊇ {p,q} ⊇ {p}` over PATH3.
pub fn path3_chain() -> crate::chains::DescendingChain {
    crate::chains::DescendingChain::from_json(PATH3_CHAIN_JSON, |_| Ok(path3())).expect("fixture parses")
}
