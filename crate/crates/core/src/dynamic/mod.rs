//! Dynamic stage: per-TTI reserved-RB split and the bandit strategies that
//! pick which members of a static reservation set get an RB.

pub mod allocation;
pub mod arms;
pub mod bandit;
pub mod harness;
pub mod regret;
pub mod utility;

pub use allocation::{allocate_reserved, largest_remainder};
pub use arms::ArmSpace;
pub use bandit::{
    arm_prior, drp_estimate_others, drp_reward, drp_select, drp_update, exp3_select,
    exp3_update, ArmTable, Feedback,
};
pub use regret::{drp_gamma_star, exp3_gamma_star, regret_bound_drp, regret_bound_exp3};
pub use utility::UtilityParams;
