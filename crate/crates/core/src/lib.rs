pub mod band;
pub mod dense;
pub mod domain;
pub mod error;
pub mod models;
pub mod resolvent;
pub mod rng;
pub mod spectrum;
pub mod noise;
pub mod harness;
pub mod cli;
