//! Scenario files, the Monte-Carlo fading oracle and CSV experiments on top of
//! [`ubopt_core`].

pub mod config;
pub mod experiments;
pub mod fading;

pub use ubopt_core;
