//! Sensor visibility on the grid: a cell is visible when the straight line
//! from the sensor to the cell center crosses no occupied cell on the way.

use crate::grid::GridSpec;

use super::raster::TruthGrid;

/// Grid cells whose interior the open segment from `from` to `to` (grid
/// coordinates, in cells) passes through, excluding the cells containing the
/// two endpoints. Cells merely touched at a corner contribute a zero-length
/// chord and are skipped.
pub fn crossed_cells(from: (f64, f64), to: (f64, f64), width: usize, height: usize) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut cx, mut cy) = (from.0.floor() as i64, from.1.floor() as i64);
    let (end_x, end_y) = (to.0.floor() as i64, to.1.floor() as i64);
    let (dx, dy) = (to.0 - from.0, to.1 - from.1);

    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    // Crossing times are recomputed from the origin at every step instead of
    // accumulated, so they match a direct slab test bit for bit and exact
    // corner hits are detected reliably.
    let t_at_x = |line: i64| if dx != 0.0 { (line as f64 - from.0) / dx } else { f64::INFINITY };
    let t_at_y = |line: i64| if dy != 0.0 { (line as f64 - from.1) / dy } else { f64::INFINITY };
    let mut next_line_x = if dx > 0.0 { cx + 1 } else { cx };
    let mut next_line_y = if dy > 0.0 { cy + 1 } else { cy };
    let mut t_max_x = t_at_x(next_line_x);
    let mut t_max_y = t_at_y(next_line_y);

    loop {
        if (cx, cy) == (end_x, end_y) {
            break;
        }
        if t_max_x.min(t_max_y) >= 1.0 {
            // Endpoint reached without entering its cell (shared edge case).
            break;
        }
        if t_max_x < t_max_y {
            cx += step_x;
            next_line_x += step_x;
            t_max_x = t_at_x(next_line_x);
        } else if t_max_y < t_max_x {
            cy += step_y;
            next_line_y += step_y;
            t_max_y = t_at_y(next_line_y);
        } else {
            // Exact corner crossing: step diagonally so the two cells the
            // ray only touches at the corner are skipped.
            cx += step_x;
            cy += step_y;
            next_line_x += step_x;
            next_line_y += step_y;
            t_max_x = t_at_x(next_line_x);
            t_max_y = t_at_y(next_line_y);
        }
        if (cx, cy) == (end_x, end_y) {
            break;
        }
        if cx >= 0 && cy >= 0 && (cx as usize) < width && (cy as usize) < height {
            out.push((cx, cy));
        }
    }
    out
}

/// Marks every cell whose center has an unobstructed line of sight from
/// `sensor` (grid coordinates, in cells). Occupied cells block the cells
/// behind them but remain visible themselves.
pub fn compute_visibility(truth: &TruthGrid, sensor: (f64, f64), spec: &GridSpec) -> Vec<bool> {
    let mut visible = vec![false; spec.cells()];
    for y in 0..spec.height {
        for x in 0..spec.width {
            let center = (x as f64 + 0.5, y as f64 + 0.5);
            let blocked = crossed_cells(sensor, center, spec.width, spec.height)
                .iter()
                .any(|&(cx, cy)| truth.occupied[truth.index(cx as usize, cy as usize)]);
            if !blocked {
                visible[spec.index(x, y)] = true;
            }
        }
    }
    visible
}
