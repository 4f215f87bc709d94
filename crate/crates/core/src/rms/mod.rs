//! Resource management: the broker that turns policy rules into enforcement
//! commands, the per-router controllers that apply them, the control-plane
//! messages between the two, and `tc` rendering for the audit log.

mod broker;
mod command;
mod controller;
mod tc;

pub use broker::{
    ApplyOp, AuditEntry, BrokerError, BrokerEvent, BrokerOutput, ControlMessage, Endpoint, FlowRequest,
    MeasurementReport, Payload, ResourceBroker, Verdict,
};
pub use command::{
    compile_policy, compile_with, measurement_conditions, ClassAllocator, CompileError, ConfigCommand, Verb,
};
pub use controller::{ApplyOutcome, RcError, ResourceController};
pub use tc::{render_tc, TcRenderer, DEFAULT_RENDER_HOSTS};
