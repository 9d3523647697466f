//! Hydroponic greenhouse monitoring and control: sensor validation,
//! hysteresis control with dwell protection, a seeded environment
//! simulator, and the statistics used to evaluate the system.

pub mod clock;
pub mod closed_loop;
pub mod control;
pub mod evaluation;
pub mod exec;
pub mod fixtures;
pub mod sensors;
pub mod simulator;

pub use control::ValidationError;
pub use exec::Exec;
