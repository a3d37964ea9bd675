//! Boundary-pushing search for maximal negativity domains and the flux
//! criterion that says when a domain can still be enlarged.

mod luttrell;
mod push;

pub use luttrell::{luttrell_iterate, DeformConfig, DeformReport, DeformResult, StopReason};
pub use push::{pushability_check, Pushability};
