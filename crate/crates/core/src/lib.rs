//! Agent-based automated testing.
//!
//! A [`agent::TestAgent`] pursues a [`agent::GoalStructure`] against an
//! [`environment::Environment`], keeping a [`wom::WorldModel`] belief of what
//! it has seen. Reachability (`EF`) and invariant (`AG`) assertions from
//! [`verdicts`] turn its runs into PASS, FAIL or UNDECIDED verdicts.
//!
//! ```
//! use xrta::harness::{run, RunConfig, Task};
//! use xrta::sim::bundled_level;
//!
//! let level = bundled_level("buttons_doors_1").unwrap();
//! let cfg = RunConfig::new(level, Task::EfReach("treasure".into())).with_budget(10_000).with_seed(7);
//! let outcome = run(&cfg).unwrap();
//! assert_eq!(outcome.verdicts.pass_count(), 1);
//! ```

pub mod agent;
pub mod environment;
pub mod harness;
pub mod navigation;
pub mod remote;
pub mod sim;
pub mod strategies;
pub mod sweep;
pub mod verdicts;
pub mod wom;

pub use agent::{Status, TestAgent};
pub use environment::{Command, CommandKind, Environment, Observation};
pub use verdicts::{Verdict, VerdictKind, VerdictLog};
pub use wom::{WorldEntity, WorldModel};
