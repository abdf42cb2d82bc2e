//! Storage siting and sizing by cutting planes over per-day dispatch.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod bench;
pub mod dispatch;
pub mod instances;
pub mod lp;
pub mod master;
pub mod model;
pub mod oracle;
pub mod planner;
pub mod scenario;
pub mod subgradient;
