//! Connection scheduling for reconfigurable two-level Clos networks.

pub mod bits;
pub mod model;
pub mod search;
pub mod state;
pub mod two_switch;
pub mod scheduler;
pub mod convert;
pub mod traffic;
pub mod oracle;
