//! Essentially non-oscillatory cubic interpolation on uniform grids.
//!
//! States carry kinks (peakon crests) and jumps in their derivative fields
//! (plateau edges). The four-point stencil is grown one point at a time
//! towards the side with the smaller divided difference, so a cell that
//! touches a kink at one of its end nodes is interpolated from the smooth
//! side only. On smooth data the error is O(dx⁴).

use crate::grid::Grid;

/// Value and first derivative of the ENO cubic through `values` at `x`.
///
/// `x` outside the grid is extrapolated from the end cell; callers that
/// need a physical extension handle that themselves.
pub fn eno_cubic(grid: &Grid, values: &[f64], x: f64) -> (f64, f64) {
    debug_assert_eq!(values.len(), grid.len());
    let (cell, t) = grid.locate(x);
    if t == 0.0 {
        // Node hit: value is exact, derivative still comes from the stencil.
        let (_, d) = eval_stencil(grid, values, cell, 0.0);
        return (values[cell], d);
    }
    eval_stencil(grid, values, cell, t)
}

pub fn eno_value(grid: &Grid, values: &[f64], x: f64) -> f64 {
    eno_cubic(grid, values, x).0
}

fn eval_stencil(grid: &Grid, values: &[f64], cell: usize, t: f64) -> (f64, f64) {
    let n = values.len();
    let start = select_stencil(values, cell);
    let m = n.min(4);
    let h = grid.dx();
    let f = &values[start..start + m];
    // Local coordinate measured from the stencil's first node.
    let tau = t + (cell - start) as f64;
    let d1 = f[1] - f[0];
    let d2 = if m > 2 { f[2] - 2.0 * f[1] + f[0] } else { 0.0 };
    let d3 = if m > 3 { f[3] - 3.0 * f[2] + 3.0 * f[1] - f[0] } else { 0.0 };
    let value = f[0]
        + tau * d1
        + 0.5 * tau * (tau - 1.0) * d2
        + tau * (tau - 1.0) * (tau - 2.0) / 6.0 * d3;
    let deriv = (d1 + 0.5 * (2.0 * tau - 1.0) * d2 + (3.0 * tau * tau - 6.0 * tau + 2.0) / 6.0 * d3) / h;
    (value, deriv)
}

/// First node of the ENO stencil for `cell = [i, i+1]`.
pub(crate) fn select_stencil(values: &[f64], cell: usize) -> usize {
    let n = values.len();
    let m = n.min(4);
    let mut start = cell;
    let mut len = 2;
    while len < m {
        let can_left = start > 0;
        let can_right = start + len < n;
        let go_left = match (can_left, can_right) {
            (true, false) => true,
            (false, true) => false,
            (false, false) => break,
            (true, true) => {
                let left = divided(&values[start - 1..start + len]).abs();
                let right = divided(&values[start..start + len + 1]).abs();
                if left == right {
                    // Prefer the stencil centred on the cell.
                    cell - (start - 1) <= start + len - (cell + 1)
                } else {
                    left < right
                }
            }
        };
        if go_left {
            start -= 1;
        }
        len += 1;
    }
    start
}

/// Highest-order forward difference of the slice.
fn divided(f: &[f64]) -> f64 {
    match f.len() {
        3 => f[2] - 2.0 * f[1] + f[0],
        4 => f[3] - 3.0 * f[2] + 3.0 * f[1] - f[0],
        _ => unreachable!("stencils grow from 2 to 4 points"),
    }
}

/// Piecewise-linear interpolation, clamped to the end values outside.
pub fn linear(grid: &Grid, values: &[f64], x: f64) -> f64 {
    if x <= grid.xi_min() {
        return values[0];
    }
    if x >= grid.xi_max() {
        return values[values.len() - 1];
    }
    let (i, t) = grid.locate(x);
    values[i] + t * (values[i + 1] - values[i])
}
