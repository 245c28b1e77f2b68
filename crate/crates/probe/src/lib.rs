//! Black-box measurement of Happy Eyeballs clients.
//!
//! A [`TestPlan`] names a client and what to delay. [`sweep`] runs the
//! client across a coarse then a fine delay grid, reads what happened from
//! the server side (or the simulator), and condenses it into a [`Verdict`]:
//! does the client prefer IPv6, fall back after a Connection Attempt Delay,
//! honor a Resolution Delay, and spread attempts across addresses.
//!
//! [`demo`] is the reference client the measurements are checked against.

pub mod analysis;
pub mod client;
pub mod demo;
pub mod lab;
pub mod plan;
pub mod realworld;
pub mod report;

pub use analysis::{infer_cad_from_timeline, sweep, Estimate, InferError, PointResult, SweepError, SweepOutcome, Transition, Verdict};
pub use client::{run_profile, ClientProfile};
pub use lab::{Lab, RealLab, RunError, SimLab};
pub use plan::{ClientSpec, DelayGrid, PlanError, TargetKind, TestPlan};
pub use report::{render_report, Mark, Report};
