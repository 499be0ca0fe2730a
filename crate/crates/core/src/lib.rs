//! Fault-oblivious exploration of null-dereference recovery strategies.

pub mod corpus;
pub mod explorer;
pub mod minilang;
pub mod model;
pub mod oracle;
pub mod report;
