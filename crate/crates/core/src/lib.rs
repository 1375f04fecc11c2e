//! Separation certificates for context-free languages against ordered
//! stamps of regular languages.

#![allow(clippy::needless_range_loop)]

pub mod cfg;
pub mod corpus;
pub mod parikh;
pub mod pump;
pub mod regular;
pub mod separation;
pub mod stamps;
pub mod words;
