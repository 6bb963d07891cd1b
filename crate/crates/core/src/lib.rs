//! Simulation environments for reinforcement learning on electric drives.
//!
//! Five motor families (externally excited, shunt, series and permanently
//! excited DC motors, and the PMSM) are fed by averaged power converters and
//! driven against a mechanical load. [`env::Environment`] exposes the
//! reset/step interface; [`control`] holds classical baseline controllers
//! and [`bench`] runs and scores closed-loop episodes.
//!
//! ```
//! use drivegym::converter::Action;
//! use drivegym::env::Environment;
//!
//! let mut env = Environment::make("series-cont-v0", &toml::Table::new()).unwrap();
//! let obs = env.reset(Some(7)).unwrap();
//! assert_eq!(obs.len(), env.observation_len());
//! let step = env.step(&Action::Continuous(vec![0.3])).unwrap();
//! assert!(step.reward <= 1.0);
//! ```

pub mod bench;
pub mod control;
pub mod converter;
pub mod drive;
pub mod env;
pub mod error;
pub mod integrate;
pub mod plant;
pub mod reference;

pub use error::{Error, Result};
