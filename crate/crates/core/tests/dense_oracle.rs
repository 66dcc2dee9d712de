//! Iterative corrector against a direct solve of the same discrete system,
//! assembled here from scratch (own neighbour arithmetic and face averages).

use homog_core::cell_solver::{solve_corrector, CoefficientField};
use homog_core::ensemble::{rasterize_coefficient, sample_points};
use homog_core::{Direction, RngStream, SolverConfig, TorusGrid};

fn harmonic(x: f64, y: f64) -> f64 {
    if x == y { x } else { 2.0 * x * y / (x + y) }
}

/// Solves `[A 1; 1ᵀ 0][φ; μ] = [b; 0]` by Gaussian elimination with partial pivoting.
fn dense_corrector(cells: &[f64], d: usize, m: usize, h: f64, xi: &[f64]) -> Vec<f64> {
    let n = cells.len();
    let size = n + 1;
    let mut a = vec![0.0; size * size];
    let mut b = vec![0.0; size];
    let strides: Vec<usize> = (0..d).map(|k| m.pow((d - 1 - k) as u32)).collect();
    for c in 0..n {
        for (axis, &s) in strides.iter().enumerate() {
            let coord = (c / s) % m;
            let up = c - coord * s + ((coord + 1) % m) * s;
            let f = harmonic(cells[c], cells[up]) / (h * h);
            a[c * size + c] += f;
            a[up * size + up] += f;
            a[c * size + up] -= f;
            a[up * size + c] -= f;
            let flux = harmonic(cells[c], cells[up]) * xi[axis] / h;
            b[c] += flux;
            b[up] -= flux;
        }
        a[c * size + n] = 1.0;
        a[n * size + c] = 1.0;
    }
    for col in 0..size {
        let piv = (col..size)
            .max_by(|&i, &j| a[i * size + col].abs().total_cmp(&a[j * size + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..size {
                a.swap(col * size + k, piv * size + k);
            }
            b.swap(col, piv);
        }
        let p = a[col * size + col];
        for r in col + 1..size {
            let factor = a[r * size + col] / p;
            if factor != 0.0 {
                for k in col..size {
                    a[r * size + k] -= factor * a[col * size + k];
                }
                b[r] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; size];
    for r in (0..size).rev() {
        let s: f64 = (r + 1..size).map(|k| a[r * size + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * size + r];
    }
    x.truncate(n);
    x
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn iterative_matches_direct_on_small_random_media() {
    let cases: [(usize, f64); 4] = [(2, 2.0), (2, 1.5), (1, 16.0), (3, 0.75)];
    let cfg = SolverConfig::default();
    let mut checked = 0;
    for (k, &(d, l)) in cases.iter().cycle().take(20).enumerate() {
        let grid = TorusGrid::new(d, l, 8).unwrap();
        assert!(grid.num_cells() <= 256);
        let a = rasterize_coefficient(&sample_points(l, d, &RngStream::sampling(100 + k as u64)), &grid, 0.25);
        let mut xi = vec![0.0; d];
        xi[k % d] = 1.0;
        let sol = solve_corrector(&a, &Direction::new(&xi).unwrap(), &cfg).unwrap();
        let direct = dense_corrector(
            a.cell_values().values(),
            d,
            grid.cells_per_side(),
            grid.cell_size(),
            &xi,
        );
        let diff: Vec<f64> = sol.phi.values().iter().zip(&direct).map(|(x, y)| x - y).collect();
        let scale = max_abs(&direct).max(1.0);
        assert!(
            max_abs(&diff) <= 10.0 * cfg.tolerance * scale,
            "case {k}: d={d} L={l} diff {} scale {scale}",
            max_abs(&diff)
        );
        checked += 1;
    }
    assert_eq!(checked, 20);
}

#[test]
fn direct_oracle_reproduces_laminate_closed_form() {
    // the oracle itself on a 1D laminate: flux a_f(φ' + 1) is constant, equal to the harmonic mean
    let m = 8;
    let profile = [1.0, 1.0, 0.25, 0.25, 0.5, 1.0, 0.25, 0.5];
    let h = 1.0 / m as f64;
    let phi = dense_corrector(&profile, 1, m, h, &[1.0]);
    let faces: Vec<f64> = (0..m).map(|c| harmonic(profile[c], profile[(c + 1) % m])).collect();
    let flux: Vec<f64> = (0..m).map(|c| faces[c] * ((phi[(c + 1) % m] - phi[c]) / h + 1.0)).collect();
    let hm = m as f64 / faces.iter().map(|f| 1.0 / f).sum::<f64>();
    for f in flux {
        assert!((f - hm).abs() < 1e-12, "{f} vs {hm}");
    }
    let grid = TorusGrid::new(1, 1.0, 8).unwrap();
    let a = CoefficientField::from_cell_values(grid, profile.to_vec()).unwrap();
    let sol = solve_corrector(&a, &Direction::basis(1, 0), &SolverConfig::default()).unwrap();
    for (x, y) in sol.phi.values().iter().zip(&phi) {
        assert!((x - y).abs() < 1e-9);
    }
}
