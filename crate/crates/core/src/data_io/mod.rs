//! File formats, run configuration and synthetic data.

mod config;
mod plmap;
mod results;

pub use config::{
    parse_config, parse_quantity, read_config, DataSpec, GridSpec, InferenceSpec, OrientationSpec, OutputSpec,
    RunConfig, ScalingSpec, SimulateSpec, UnitKind,
};
pub use plmap::{
    format_pl_map, parse_pl_map, read_pl_map, read_pl_map_with, renormalize, synthesize_pl_map, write_pl_map,
    ReadOptions, PLMAP_HEADER, PLMAP_MAGIC,
};
pub use results::{
    format_map_matrix, format_marginal, format_modes, format_scaling, parameter_unit, read_results, write_marginal,
    write_results, write_timing, ResultsDocument, TimingSidecar, LIKELIHOOD_NOTE, RESULTS_FORMAT,
};
