//! Shared problem set-ups for the criterion benches.

use robinspec_core::ball::{BallGrid, BallProblem};
use robinspec_core::effective2d::{ChartData, ChartSpec, PlanarGauge};
use std::sync::Arc;

/// A critical-regime ball problem on a reduced grid, quick enough to time per mode.
pub fn light_ball(h: f64, b: f64) -> BallProblem {
    BallProblem::critical(h, b)
        .and_then(|p| {
            p.with_grid(BallGrid {
                radial_cells: 600,
                first_cell: 1e-2,
                radial_modes: Some(4),
                theta_cells: 192,
            })
        })
        .expect("valid ball problem")
}

/// A flat chart with a uniform unit field.
pub fn flat_chart(h: f64, half: f64, cells: usize) -> ChartData {
    let spec = ChartSpec {
        half_widths: [half, half],
        cells: [cells, cells],
        ..ChartSpec::default()
    };
    ChartData::flat(h, &spec, Arc::new(PlanarGauge::symmetric(1.0))).expect("valid flat chart")
}
