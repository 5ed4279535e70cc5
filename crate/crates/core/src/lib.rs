//! Auditing creator-platform economics through a possibly manipulated API,
//! and auditing a classifier's disparate impact through a proxy attribute.

pub mod access;
pub mod census;
pub mod engine;
pub mod estimators;
pub mod platform;
pub mod proxy;
pub mod seeds;
pub mod sources;
