//! Monte Carlo measure probes, finite-generation sets, box counting and content bounds.

mod boxcount;
mod generation;
mod mc;

pub use boxcount::{
    box_count, content_upper_bound, occupied_counts, BoxCountReport, BoxFit, ContentReport, Sampling,
};
pub use generation::{GenerationSet, Piece, Slab};
pub use mc::{
    mc_measure, sample_hit, union_bound, wilson_interval, zero_one_probe, McMeasureReport, Trend,
    ZeroOneReport,
};
