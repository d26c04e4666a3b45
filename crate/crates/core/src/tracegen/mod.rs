//! Synthetic load processes, testbed simulation and trace files.

mod io;
mod load;
mod profile;
mod trace;

pub use io::{read_trace, sidecar_path, trace_columns, write_trace};
pub use load::{arrival_rate, simulate_sessions, LoadPattern, LoadSchedule, LoadShape};
pub use profile::{ResponseCurve, ResponseShape, ServiceMode, TestbedProfile};
pub use trace::{
    concat_traces, synthesize_from_sessions, synthesize_trace, SegmentInfo, Trace, TraceMetadata,
    TraceRow,
};
