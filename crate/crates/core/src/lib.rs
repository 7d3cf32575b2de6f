// Negated comparisons are how NaN gets rejected in input checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod controller;
pub mod design;
pub mod emg;
pub mod error;
pub mod pneumatic;
pub mod torque;
pub mod units;
pub mod validate;
