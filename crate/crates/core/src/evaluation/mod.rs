//! Simulation harness, exact small-K integration, rejection-region grids and
//! discovery comparisons, plus the CSV forms the plotting layer reads.

mod compare;
mod exact;
mod format;
mod region;
mod simulation;

pub use compare::{compare_table, CompareTable, CrossTab, DiscoverySummary};
pub use exact::{exact_power_piecewise, ExactModel, ExactProcedure, ExactResult, PiecewiseSetup};
pub use format::{fmt_sig, CSV_DIGITS};
pub use region::{region_csv, region_grid, RegionConfig, RegionRecord, REGION_HEADER};
pub use simulation::{
    mix_families, run_simulation, simulation_csv, K1Setting, SimulationConfig, SimulationResult,
    SimulationRow, SIMULATION_HEADER,
};
