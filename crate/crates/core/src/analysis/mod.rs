//! Diagnostics over completed runs: input-layer weight norms, visitation
//! heatmaps, and return-distribution reports, written as CSV and SVG.

pub mod heatmap;
pub mod report;
pub mod stats;
pub mod svg;
pub mod weight_norms;

pub use heatmap::{visitation_heatmap, Heatmap};
pub use report::{return_report, PairingSummary, ReturnReport};
pub use stats::{kde, quantile, silverman_bandwidth, Summary};
pub use weight_norms::{
    input_weight_l1, weight_norm_series, BlockNorms, InputNorms, NetNorms, WeightNormSeries,
};
