//! Morse structure of scalar potentials: critical points, level sets and
//! gradient integral curves.

mod critical;
mod curves;
mod level;

pub use critical::{
    classify, find_critical_points, find_critical_points_in, newton_refine, search_region, CriticalKind,
    CriticalPoint, SearchRegion,
};
pub use curves::{integral_curve, saddle_escape_starts, CurveOptions, Direction, EndpointKind, IntegralCurve};
pub use level::{analytic_level_set, enclosure_test, extract_level_set, point_in_polyline, LevelCurve, LevelSource};
