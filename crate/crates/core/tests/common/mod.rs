//! Generators and oracles shared by the integration tests.
#![allow(dead_code)]

pub mod duties;
pub mod graphs;
pub mod hierarchy;
pub mod policy;
