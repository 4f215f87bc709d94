//! Scenario configuration, the run loop that wires traffic, enforcement,
//! control plane and measurement together, and result export.
//!
//! A run works in two time bases. The simulator runs `k` times faster than
//! nominal time (`time_compression`); everything a run reports (series,
//! summary, audit log) is converted back to nominal seconds and bit/s.

mod config;
mod export;
mod output;
mod run;

pub use config::{
    load_config, ArrivalConfig, ControlConfig, HarnessError, InterfaceConfig, LinkConfig, LoadedScenario,
    MeasurementConfig, NetMonConfig, NodeConfig, PolicyConfig, ProbeConfig, ScenarioConfig, TaggedConfig, TapConfig,
    TapDir, TopologyConfig, TrafficConfig,
};
pub use export::{congestion_windows, in_window, ControlSummary, Series, SeriesExport, Summary};
pub use output::{manifest, write_outputs, OUTPUT_FILES};
pub use run::{build_topology, run_scenario, scenario_rules, RunOptions, RunResult, PROBE_FLOW_BASE};
