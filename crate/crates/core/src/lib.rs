//! Pricing of electricity swaps and European options on swaps under
//! stochastic volatility with delivery periods.
//!
//! The swap price is the geometric average of instantaneous-delivery futures
//! prices over the delivery period. Under the swap martingale measure the
//! log-swap and its CIR variance form an affine system whose characteristic
//! functions follow from time-dependent Riccati equations.
//!
//! Module map:
//! - [`models`]: parameters, delivery periods, weights, volatility shapes
//! - [`averaging`]: swap volatility factor `S(t)` and delivery risk factor `xi(t)`
//! - [`conditions`]: Feller and Novikov checks
//! - [`simulate`]: Monte-Carlo paths of `(log F, nu)`
//! - [`charfn`]: Riccati solver and characteristic functions
//! - [`pricer`]: Fourier, Monte-Carlo and Black-76 prices
//! - [`config`] and [`cli`]: JSON configuration and the command-line front end

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod charfn;
pub mod cli;
pub mod conditions;
pub mod config;
pub mod error;
pub mod models;
pub mod pricer;
pub mod quadrature;
pub mod simulate;

pub use error::{Error, Result};
pub use models::{
    DeliveryPeriod, HestonParams, OptionSpec, SwapModel, Tabulated, TabulatedSurface, VolStructure,
    WeightFunction,
};
