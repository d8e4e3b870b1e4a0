//! Communication-cost-aware learning of tree-structured binary graphical
//! models, distributed max-product inference with exact message-cost
//! accounting, large-deviation analysis of structure-recovery errors, and
//! an exact-cover reduction showing the cost-budgeted variant is hard.

pub mod experiments;
pub mod formats;
pub mod hardness;
pub mod inference;
pub mod ldp;
pub mod learn;
pub mod model;
pub mod physnet;
pub mod util;
