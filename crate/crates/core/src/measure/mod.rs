//! Metric side: the zero-one series, the sets `A(Psi) = {a_1 a_2 > Psi}`, Gauss-map
//! pullbacks and mixing, and Monte-Carlo experiments on random reals.

mod gauss;
mod sampling;
mod series;
mod union;

pub use gauss::{
    gauss_map, gauss_map_orbit, gauss_map_orbit_cf, mixing_probe, preimage, CylinderSet,
    MixingReport, OrbitError, PreimageOptions, PreimageResult,
};
pub use sampling::{
    growth_statistics, levy_growth_probe, monte_carlo_zero_one, LevyReport, MonteCarloConfig,
    MonteCarloReport,
};
pub use series::{analytic_class, main_series, AnalyticClass, SeriesReport};
pub use union::{
    a_n_set, asymptotic_check, gauss_interval, lambda_a_n_enclosure, AsymptoticRow, IntervalUnion,
    UnionError,
};
