//! Energy-aware control of a hybrid aerial/terrestrial RAN through an
//! O-RAN style control loop.
//!
//! The crate is layered bottom-up:
//!
//! * [`propagation`]: path loss, link budget, terrain line of sight, coverage maps
//! * [`netmodel`]: cells, UEs, traffic, association, energy and the hourly step
//! * [`ric`]: KPM indications and control actions on an in-process bus, with NDJSON record/replay
//! * [`dqn`]: the Q-network, replay buffer and training primitives
//! * [`harness`]: policies, run loop, exhaustive oracle, training and evaluation
//! * [`cli`]: the `ntn-ric` command line

pub mod cli;
pub mod config;
pub mod dqn;
pub mod error;
pub mod harness;
pub mod netmodel;
pub mod propagation;
pub mod ric;
pub mod rng;

pub use config::SimConfig;
pub use error::{BusError, DqnError, HarnessError, NetError, RadioError};
pub use netmodel::{NetworkState, World};
