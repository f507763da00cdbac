//! PNG line charts of RE and SS along a ladder or a pruning history.
//!
//! Charts carry no text so that the bytes do not depend on system fonts:
//! RE is drawn red, SS blue, on a unit y axis with one x tick per step.

use std::path::Path;

use plotters::prelude::*;

const WIDTH: u32 = 480;
const HEIGHT: u32 = 320;

/// Writes the `(re, ss)` curve to `path`.
pub fn re_ss_curve(path: &Path, rows: &[(f64, f64)]) -> Result<(), String> {
    let err = |e: &dyn std::fmt::Display| format!("plotting {}: {e}", path.display());
    let root = BitMapBackend::new(path, (WIDTH, HEIGHT)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let last = rows.len().saturating_sub(1).max(1) as f64;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .build_cartesian_2d(0f64..last, 0f64..1f64)
        .map_err(|e| err(&e))?;
    let axis = BLACK.stroke_width(1);
    chart
        .draw_series([
            PathElement::new(vec![(0.0, 0.0), (last, 0.0)], axis),
            PathElement::new(vec![(0.0, 0.0), (0.0, 1.0)], axis),
        ])
        .map_err(|e| err(&e))?;
    chart
        .draw_series((0..rows.len()).map(|i| PathElement::new(vec![(i as f64, 0.0), (i as f64, 0.02)], axis)))
        .map_err(|e| err(&e))?;
    for (colour, pick) in [(RED, 0usize), (BLUE, 1)] {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i as f64, if pick == 0 { r.0 } else { r.1 }))
            .collect();
        chart
            .draw_series(LineSeries::new(points.clone(), colour.stroke_width(2)))
            .map_err(|e| err(&e))?;
        chart
            .draw_series(points.into_iter().map(|p| Circle::new(p, 3, colour.filled())))
            .map_err(|e| err(&e))?;
    }
    root.present().map_err(|e| err(&e))?;
    Ok(())
}
