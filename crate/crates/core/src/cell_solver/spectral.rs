//! Fast-transform inverse of the constant-coefficient periodic Laplacian.
//!
//! The 2d+1-point periodic Laplacian is diagonalized by the discrete Fourier
//! transform with symbol `Σ_axis (4/h²) sin²(π k_axis / m)`. Dividing by the
//! symbol (and zeroing the constant mode) applies the pseudo-inverse, which is
//! spectrally equivalent to the variable-coefficient operator with constants
//! `1/max(a)` and `1/min(a)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::torus_grid::TorusGrid;

pub struct SpectralPreconditioner {
    grid: TorusGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    inv_symbol: Vec<f64>,
    buffer: Vec<Complex64>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SpectralPreconditioner {
    pub fn new(grid: TorusGrid) -> Self {
        let m = grid.cells_per_side();
        let n = grid.num_cells();
        let h = grid.cell_size();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());

        let axis_symbol: Vec<f64> = (0..m)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / m as f64).sin();
                4.0 * s * s / (h * h)
            })
            .collect();
        // the inverse transform is unnormalized; fold 1/m^d into the symbol
        let norm = 1.0 / n as f64;
        let inv_symbol = (0..n)
            .map(|cell| {
                let multi = grid.multi_index(cell);
                let mu: f64 = (0..grid.dim()).map(|a| axis_symbol[multi[a]]).sum();
                if cell == 0 {
                    0.0
                } else {
                    norm / mu
                }
            })
            .collect();

        Self {
            grid,
            forward,
            inverse,
            inv_symbol,
            buffer: vec![Complex64::default(); n],
            line: vec![Complex64::default(); m],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    /// `out = L⁻¹ r` on the mean-zero subspace.
    pub fn apply(&mut self, r: &[f64], out: &mut [f64]) {
        for (b, &v) in self.buffer.iter_mut().zip(r) {
            *b = Complex64::new(v, 0.0);
        }
        self.transform(true);
        for (b, &s) in self.buffer.iter_mut().zip(&self.inv_symbol) {
            *b *= s;
        }
        self.transform(false);
        for (o, b) in out.iter_mut().zip(&self.buffer) {
            *o = b.re;
        }
    }

    fn transform(&mut self, forward: bool) {
        let fft = if forward { &self.forward } else { &self.inverse };
        let m = self.grid.cells_per_side();
        for axis in 0..self.grid.dim() {
            let (outer, inner) = self.grid.axis_blocks(axis);
            if inner == 1 {
                // contiguous lines: rustfft processes the buffer in chunks of m
                fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
                continue;
            }
            for o in 0..outer {
                for k in 0..inner {
                    let base = o * m * inner + k;
                    for j in 0..m {
                        self.line[j] = self.buffer[base + j * inner];
                    }
                    fft.process_with_scratch(&mut self.line, &mut self.scratch);
                    for j in 0..m {
                        self.buffer[base + j * inner] = self.line[j];
                    }
                }
            }
        }
    }
}
