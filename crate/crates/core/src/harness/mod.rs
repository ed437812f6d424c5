//! Benchmark harness: seeded episode batches, replay logs and frame
//! rendering.

mod metrics;
mod render;
mod replay;

pub use metrics::{
    run_batch, run_episode, summarize, write_csv, BatchOptions, BatchReport, BatchSummary,
    EpisodeMetrics,
};
pub use render::{render_frames, render_svg};
pub use replay::{
    read_replay, record_replay, replay_verify, world_fingerprint, ReplayError, ReplayFooter,
    ReplayHeader, ReplayLog, ReplayRecord, ReplayRecorder, REPLAY_FORMAT_VERSION,
};
