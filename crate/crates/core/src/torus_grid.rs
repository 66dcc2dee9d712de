//! Periodic lattice geometry on the torus `[-L/2, L/2)^d`.
//!
//! Cells are indexed lexicographically with axis 0 slowest. A face `(axis, c)`
//! is the face between cell `c` and its upper neighbour `c + e_axis`, so every
//! cell owns exactly one face per axis and the face count is `d·m^d`.

use crate::error::{HomogError, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// Default cells per unit length; the unit inclusion radius spans 8 cells.
pub const DEFAULT_CELLS_PER_UNIT: usize = 8;

/// Default memory budget, counted in `f64` values (`m^d·(d+2)`).
pub const DEFAULT_VALUE_BUDGET: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    side_length: f64,
    cells_per_unit: usize,
    cells_per_side: usize,
    cell_size: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, side_length: f64, cells_per_unit: usize) -> Result<Self> {
        Self::with_budget(dim, side_length, cells_per_unit, DEFAULT_VALUE_BUDGET)
    }

    /// Builds a grid, rejecting it when `m^d·(d+2)` exceeds `value_budget`.
    pub fn with_budget(
        dim: usize,
        side_length: f64,
        cells_per_unit: usize,
        value_budget: usize,
    ) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(HomogError::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !side_length.is_finite() || side_length <= 0.0 {
            return Err(HomogError::InvalidGrid(format!(
                "side length must be positive, got {side_length}"
            )));
        }
        if cells_per_unit == 0 {
            return Err(HomogError::InvalidGrid("cells_per_unit must be positive".into()));
        }
        let product = side_length * cells_per_unit as f64;
        let m = product.round();
        if m < 1.0 || (product - m).abs() > 1e-9 * product.max(1.0) {
            return Err(HomogError::InvalidGrid(format!(
                "L·n = {side_length}·{cells_per_unit} = {product} is not an integer"
            )));
        }
        let m = m as usize;
        let cells = m
            .checked_pow(dim as u32)
            .and_then(|c| c.checked_mul(dim + 2))
            .ok_or_else(|| HomogError::InvalidGrid("cell count overflows".into()))?;
        if cells > value_budget {
            return Err(HomogError::InvalidGrid(format!(
                "grid needs {cells} values, budget is {value_budget}"
            )));
        }
        Ok(Self {
            dim,
            side_length,
            cells_per_unit,
            cells_per_side: m,
            cell_size: side_length / m as f64,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    #[inline]
    pub fn cells_per_unit(&self) -> usize {
        self.cells_per_unit
    }

    #[inline]
    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    #[inline]
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Total number of cells, `m^d`.
    #[inline]
    pub fn num_cells(&self) -> usize {
        self.cells_per_side.pow(self.dim as u32)
    }

    /// Torus volume `L^d`.
    pub fn volume(&self) -> f64 {
        self.side_length.powi(self.dim as i32)
    }

    /// Volume of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.cell_size.powi(self.dim as i32)
    }

    /// Distance between consecutive cells along `axis` in the linear layout.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.cells_per_side.pow((self.dim - 1 - axis) as u32)
    }

    /// Splits the linear layout around `axis` into `(outer, inner)` block sizes,
    /// so that `index = (outer_idx·m + j)·inner + inner_idx`.
    #[inline]
    pub fn axis_blocks(&self, axis: usize) -> (usize, usize) {
        let m = self.cells_per_side;
        (m.pow(axis as u32), self.stride(axis))
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dim);
        multi
            .iter()
            .fold(0, |acc, &i| acc * self.cells_per_side + i % self.cells_per_side)
    }

    pub fn multi_index(&self, mut linear: usize) -> [usize; MAX_DIM] {
        let m = self.cells_per_side;
        let mut out = [0; MAX_DIM];
        for axis in (0..self.dim).rev() {
            out[axis] = linear % m;
            linear /= m;
        }
        out
    }

    /// Index of the cell `c + e_axis` (periodic).
    #[inline]
    pub fn upper_neighbor(&self, cell: usize, axis: usize) -> usize {
        let stride = self.stride(axis);
        let j = (cell / stride) % self.cells_per_side;
        if j + 1 == self.cells_per_side {
            cell + stride - self.cells_per_side * stride
        } else {
            cell + stride
        }
    }

    /// Index of the cell `c - e_axis` (periodic).
    #[inline]
    pub fn lower_neighbor(&self, cell: usize, axis: usize) -> usize {
        let stride = self.stride(axis);
        let j = (cell / stride) % self.cells_per_side;
        if j == 0 {
            cell + (self.cells_per_side - 1) * stride
        } else {
            cell - stride
        }
    }

    /// Coordinate of a cell centre along one axis.
    #[inline]
    pub fn center_coordinate(&self, index: usize) -> f64 {
        -0.5 * self.side_length + (index as f64 + 0.5) * self.cell_size
    }

    pub fn cell_center(&self, linear: usize) -> [f64; MAX_DIM] {
        let multi = self.multi_index(linear);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = self.center_coordinate(multi[axis]);
        }
        x
    }

    /// Cell containing the point `x` (after wrapping into the fundamental domain).
    pub fn cell_containing(&self, x: &[f64]) -> usize {
        let m = self.cells_per_side;
        let mut linear = 0;
        for &xi in x.iter().take(self.dim) {
            let w = wrap_coordinate(xi, self.side_length) + 0.5 * self.side_length;
            let i = ((w / self.cell_size).floor() as usize).min(m - 1);
            linear = linear * m + i;
        }
        linear
    }

    /// Cell containing the torus origin.
    pub fn origin_cell(&self) -> usize {
        self.cell_containing(&[0.0; MAX_DIM][..self.dim])
    }

    fn check_same(&self, other: &TorusGrid) {
        assert!(self == other, "fields live on different grids");
    }
}

/// Wraps a coordinate into `[-L/2, L/2)`.
#[inline]
pub fn wrap_coordinate(x: f64, side_length: f64) -> f64 {
    let half = 0.5 * side_length;
    let w = (x + half).rem_euclid(side_length) - half;
    if w >= half {
        -half
    } else {
        w
    }
}

/// Periodic distance along one axis.
#[inline]
pub fn axis_distance(x: f64, y: f64, side_length: f64) -> f64 {
    let delta = (x - y).abs() % side_length;
    delta.min(side_length - delta)
}

/// Euclidean distance on the flat torus of side `L`.
pub fn torus_distance(x: &[f64], y: &[f64], side_length: f64) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let t = axis_distance(a, b, side_length);
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

/// Cells whose centres lie at torus distance `< radius` from `center`, as
/// sorted linear indices.
pub fn ball_cells(grid: &TorusGrid, center: &[f64], radius: f64) -> Result<Vec<usize>> {
    let l = grid.side_length();
    if !(radius > 0.0) || radius > 0.5 * l {
        return Err(HomogError::InvalidArgument(format!(
            "ball radius must lie in (0, L/2] = (0, {}], got {radius}",
            0.5 * l
        )));
    }
    Ok(ball_cells_unchecked(grid, center, radius))
}

/// Same as [`ball_cells`] without the radius check; radii beyond `L/2` select
/// every cell within that torus distance.
pub(crate) fn ball_cells_unchecked(grid: &TorusGrid, center: &[f64], radius: f64) -> Vec<usize> {
    let l = grid.side_length();
    let d = grid.dim();
    let m = grid.cells_per_side();
    let h = grid.cell_size();
    let reach = (radius / h).ceil() as i64 + 1;
    // candidate index ranges per axis, deduplicated when the box wraps fully
    let mut ranges: Vec<Vec<usize>> = Vec::with_capacity(d);
    let mut c = [0.0; MAX_DIM];
    for axis in 0..d {
        c[axis] = wrap_coordinate(center[axis], l);
        let base = ((c[axis] + 0.5 * l) / h).floor() as i64;
        let mut idx: Vec<usize> = (base - reach..=base + reach)
            .map(|k| k.rem_euclid(m as i64) as usize)
            .filter(|&i| axis_distance(grid.center_coordinate(i), c[axis], l) < radius)
            .collect();
        idx.sort_unstable();
        idx.dedup();
        ranges.push(idx);
    }
    let mut out = Vec::new();
    let mut multi = [0usize; MAX_DIM];
    collect_ball(grid, &ranges, 0, &mut multi, &c[..d], radius, &mut out);
    out.sort_unstable();
    out
}

fn collect_ball(
    grid: &TorusGrid,
    ranges: &[Vec<usize>],
    axis: usize,
    multi: &mut [usize; MAX_DIM],
    center: &[f64],
    radius: f64,
    out: &mut Vec<usize>,
) {
    let d = grid.dim();
    if axis == d {
        let mut dist2 = 0.0;
        for a in 0..d {
            let t = axis_distance(grid.center_coordinate(multi[a]), center[a], grid.side_length());
            dist2 += t * t;
        }
        if dist2.sqrt() < radius {
            out.push(grid.linear_index(&multi[..d]));
        }
        return;
    }
    for &i in &ranges[axis] {
        multi[axis] = i;
        collect_ball(grid, ranges, axis + 1, multi, center, radius, out);
    }
}

/// Cell-centred scalar values, `m^d` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        Self {
            values: vec![value; grid.num_cells()],
            grid,
        }
    }

    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(HomogError::InvalidArgument(format!(
                "expected {} cell values, got {}",
                grid.num_cells(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(HomogError::NonFinite(format!("cell value {i} is {}", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.num_cells());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Arithmetic mean of the cell values (sequential summation).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `h^d · Σ u v`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        self.grid.check_same(&other.grid);
        self.grid.cell_volume() * dot(&self.values, &other.values)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.grid.check_same(&other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Arithmetic mean of a field, `h^d Σ u / L^d`.
pub fn mean(field: &ScalarField) -> f64 {
    field.mean()
}

/// Returns `x ↦ f(x + z·h)` with periodic wrap.
pub fn shift_field(field: &ScalarField, shift: &[i64]) -> ScalarField {
    let grid = *field.grid();
    let values = shift_values(&grid, field.values(), shift);
    ScalarField::from_values_unchecked(grid, values)
}

pub(crate) fn shift_values(grid: &TorusGrid, values: &[f64], shift: &[i64]) -> Vec<f64> {
    let d = grid.dim();
    assert_eq!(shift.len(), d, "shift must have one entry per axis");
    let m = grid.cells_per_side() as i64;
    let offsets: Vec<usize> = shift.iter().map(|&z| z.rem_euclid(m) as usize).collect();
    let mut out = vec![0.0; values.len()];
    let mut src = [0usize; MAX_DIM];
    for (cell, slot) in out.iter_mut().enumerate() {
        let multi = grid.multi_index(cell);
        for axis in 0..d {
            src[axis] = (multi[axis] + offsets[axis]) % m as usize;
        }
        *slot = values[grid.linear_index(&src[..d])];
    }
    out
}

/// One value per face per axis, laid out as `values[axis·m^d + cell]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl FaceField {
    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        Self {
            values: vec![value; grid.dim() * grid.num_cells()],
            grid,
        }
    }

    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        let expected = grid.dim() * grid.num_cells();
        if values.len() != expected {
            return Err(HomogError::InvalidArgument(format!(
                "expected {expected} face values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(HomogError::NonFinite(format!("face value {i} is {}", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.dim() * grid.num_cells());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Face values of one axis, indexed by the owning (lower) cell.
    #[inline]
    pub fn axis(&self, axis: usize) -> &[f64] {
        let n = self.grid.num_cells();
        &self.values[axis * n..(axis + 1) * n]
    }

    #[inline]
    pub fn get(&self, axis: usize, cell: usize) -> f64 {
        self.values[axis * self.grid.num_cells() + cell]
    }

    /// Shifts every axis component like [`shift_field`].
    pub fn shifted(&self, shift: &[i64]) -> FaceField {
        let n = self.grid.num_cells();
        let mut values = Vec::with_capacity(self.values.len());
        for axis in 0..self.grid.dim() {
            values.extend(shift_values(&self.grid, &self.values[axis * n..(axis + 1) * n], shift));
        }
        FaceField::from_values_unchecked(self.grid, values)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
