//! Measurement-based, policy-driven DiffServ QoS on a deterministic
//! discrete-event network simulator.

pub mod harness;
pub mod mms;
pub mod pep;
pub mod policy;
pub mod rms;
pub mod simcore;
pub mod traffic;
