//! Consistency checking, repairs and consistent query answering for
//! relational database instances, driven by analytic tableaux.

pub mod constraints;
pub mod cqa;
pub mod error;
pub mod formula;
pub mod instance;
pub mod oracle;
pub mod par;
pub mod repair;
pub mod tableau;

pub use constraints::Constraints;
pub use error::{Error, Result};
pub use instance::{DomainPolicy, GroundAtom, Instance, Schema};
