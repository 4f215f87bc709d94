//! Open-loop traffic sources (CBR, ON-OFF, VBR) and the Poisson flow
//! arrival process that drives background load.
//!
//! Everything here works in nominal time; the harness applies time
//! compression when it turns departure times into simulator events.

mod arrivals;
mod flow;
mod rng;
mod source;

pub use arrivals::{sample_arrivals, write_schedule_csv};
pub use flow::{default_pkt_size, ArrivalProcess, FlowError, FlowKind, FlowSpec, FlowTemplate};
pub use rng::{quantize_us, substream};
pub use source::{emit_cbr, emit_onoff, emit_vbr, PacketTimes};
