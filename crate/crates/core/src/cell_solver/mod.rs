//! Periodic corrector problem `-∇·a(∇φ + ξ) = 0`, `mean(φ) = 0`, on the
//! cell-centred finite-volume grid.
//!
//! The discrete operator is the conservative 2d+1-point stencil with face
//! coefficients; it is symmetric positive semidefinite with the constants as
//! kernel. Solves use preconditioned conjugate gradients on the mean-zero
//! subspace.

mod spectral;

pub use spectral::SpectralPreconditioner;

use crate::error::{HomogError, Result};
use crate::torus_grid::{dot, FaceField, ScalarField, TorusGrid, MAX_DIM};

/// Scalar coefficient held at cell centres and, by harmonic averaging of the
/// two adjacent cells, at faces.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    cells: ScalarField,
    faces: FaceField,
}

#[inline]
fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a == b {
        a
    } else {
        2.0 * a * b / (a + b)
    }
}

impl CoefficientField {
    pub fn from_cell_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(HomogError::InvalidArgument(format!(
                "coefficient values must be positive and finite, got {v}"
            )));
        }
        let cells = ScalarField::from_values(grid, values)?;
        let n = grid.num_cells();
        let mut faces = Vec::with_capacity(grid.dim() * n);
        for axis in 0..grid.dim() {
            let v = cells.values();
            faces.extend((0..n).map(|c| harmonic_mean(v[c], v[grid.upper_neighbor(c, axis)])));
        }
        Ok(Self {
            faces: FaceField::from_values_unchecked(grid, faces),
            cells,
        })
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        Self::from_cell_values(grid, vec![value; grid.num_cells()])
            .expect("constant coefficient must be positive")
    }

    /// Medium varying only along `axis`; `profile[j]` is the value of cells with
    /// index `j` along that axis.
    pub fn laminate(grid: TorusGrid, axis: usize, profile: &[f64]) -> Result<Self> {
        if axis >= grid.dim() || profile.len() != grid.cells_per_side() {
            return Err(HomogError::InvalidArgument(format!(
                "laminate needs axis < {} and {} profile values",
                grid.dim(),
                grid.cells_per_side()
            )));
        }
        let values = (0..grid.num_cells())
            .map(|c| profile[grid.multi_index(c)[axis]])
            .collect();
        Self::from_cell_values(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        self.cells.grid()
    }

    #[inline]
    pub fn cell_values(&self) -> &ScalarField {
        &self.cells
    }

    #[inline]
    pub fn face_values(&self) -> &FaceField {
        &self.faces
    }

    /// Smallest and largest face coefficient.
    pub fn bounds(&self) -> (f64, f64) {
        self.faces
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Periodic shift `x ↦ a(x + z·h)`.
    pub fn shifted(&self, shift: &[i64]) -> Self {
        Self {
            cells: crate::torus_grid::shift_field(&self.cells, shift),
            faces: self.faces.shifted(shift),
        }
    }

    /// Cells whose values differ between the two fields.
    pub fn differing_cells(&self, other: &CoefficientField) -> Vec<usize> {
        assert_eq!(self.grid(), other.grid());
        self.cells
            .values()
            .iter()
            .zip(other.cells.values())
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    ConstantCoefficientInverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative ℓ² residual target.
    pub tolerance: f64,
    /// Iteration cap; `None` means `10·m`.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: None,
            preconditioner: Preconditioner::ConstantCoefficientInverse,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(HomogError::InvalidArgument(format!(
                "solver tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, grid: &TorusGrid) -> usize {
        self.max_iterations.unwrap_or(10 * grid.cells_per_side())
    }
}

/// A unit direction in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    dim: usize,
    components: [f64; MAX_DIM],
}

impl Direction {
    pub fn new(components: &[f64]) -> Result<Self> {
        let dim = components.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(HomogError::InvalidArgument(format!("direction of length {dim}")));
        }
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(HomogError::InvalidArgument(format!(
                "direction must have unit length, got |ξ| = {norm}"
            )));
        }
        let mut c = [0.0; MAX_DIM];
        c[..dim].copy_from_slice(components);
        Ok(Self { dim, components: c })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(components: &[f64]) -> Result<Self> {
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(HomogError::InvalidArgument("cannot normalize a zero vector".into()));
        }
        let scaled: Vec<f64> = components.iter().map(|x| x / norm).collect();
        let mut c = [0.0; MAX_DIM];
        c[..scaled.len()].copy_from_slice(&scaled);
        Ok(Self {
            dim: components.len(),
            components: c,
        })
    }

    pub fn basis(dim: usize, axis: usize) -> Self {
        assert!(axis < dim && dim <= MAX_DIM);
        let mut c = [0.0; MAX_DIM];
        c[axis] = 1.0;
        Self { dim, components: c }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn components(&self) -> &[f64] {
        &self.components[..self.dim]
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        dot(self.components(), other.components())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSolution {
    pub phi: ScalarField,
    /// Face values of `∇φ + ξ`.
    pub flux_gradient: FaceField,
    pub direction: Direction,
    /// Final relative ℓ² residual (absolute when the right-hand side vanishes).
    pub residual_norm: f64,
    pub iterations: usize,
}

/// `(Au)_c = Σ_axis [a_{f+}(u_c − u_{c+e}) + a_{f−}(u_c − u_{c−e})] / h²`.
pub fn apply_operator(a: &CoefficientField, u: &ScalarField) -> ScalarField {
    assert_eq!(a.grid(), u.grid(), "operator and field grids differ");
    let mut out = vec![0.0; u.values().len()];
    apply_into(a, u.values(), &mut out);
    ScalarField::from_values_unchecked(*a.grid(), out)
}

fn apply_into(a: &CoefficientField, u: &[f64], out: &mut [f64]) {
    let grid = a.grid();
    let m = grid.cells_per_side();
    let inv_h2 = 1.0 / (grid.cell_size() * grid.cell_size());
    out.iter_mut().for_each(|v| *v = 0.0);
    for axis in 0..grid.dim() {
        let faces = a.face_values().axis(axis);
        let (outer, inner) = grid.axis_blocks(axis);
        for o in 0..outer {
            let block = o * m * inner;
            for j in 0..m {
                let row = block + j * inner;
                let next = block + ((j + 1) % m) * inner;
                for k in 0..inner {
                    let (c, up) = (row + k, next + k);
                    let flux = faces[c] * (u[up] - u[c]) * inv_h2;
                    out[c] -= flux;
                    out[up] += flux;
                }
            }
        }
    }
}

/// Discrete divergence of the face field `a·ξ`.
pub fn rhs_for_direction(a: &CoefficientField, xi: &Direction) -> ScalarField {
    let grid = a.grid();
    assert_eq!(grid.dim(), xi.dim(), "direction dimension mismatch");
    let n = grid.num_cells();
    let inv_h = 1.0 / grid.cell_size();
    let mut out = vec![0.0; n];
    for (axis, &x) in xi.components().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let faces = a.face_values().axis(axis);
        for c in 0..n {
            let flux = faces[c] * x * inv_h;
            out[c] += flux;
            out[grid.upper_neighbor(c, axis)] -= flux;
        }
    }
    ScalarField::from_values_unchecked(*grid, out)
}

/// Face values of `∇φ + ξ`.
pub fn flux_gradient(phi: &ScalarField, xi: &Direction) -> FaceField {
    let grid = phi.grid();
    let n = grid.num_cells();
    let inv_h = 1.0 / grid.cell_size();
    let u = phi.values();
    let mut values = Vec::with_capacity(grid.dim() * n);
    for (axis, &x) in xi.components().iter().enumerate() {
        values.extend((0..n).map(|c| (u[grid.upper_neighbor(c, axis)] - u[c]) * inv_h + x));
    }
    FaceField::from_values_unchecked(*grid, values)
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

fn check_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(HomogError::NonFinite(format!("{what} became {v} during the solve")))
    }
}

/// Solves the corrector equation for direction `ξ`.
pub fn solve_corrector(a: &CoefficientField, xi: &Direction, cfg: &SolverConfig) -> Result<CorrectorSolution> {
    cfg.validate()?;
    let grid = *a.grid();
    if xi.dim() != grid.dim() {
        return Err(HomogError::InvalidArgument(format!(
            "direction has dimension {}, grid has {}",
            xi.dim(),
            grid.dim()
        )));
    }
    let rhs = rhs_for_direction(a, xi);
    let rhs_norm = norm2(rhs.values());
    let n = grid.num_cells();

    if rhs_norm == 0.0 {
        let phi = ScalarField::zeros(grid);
        return Ok(CorrectorSolution {
            flux_gradient: flux_gradient(&phi, xi),
            phi,
            direction: *xi,
            residual_norm: 0.0,
            iterations: 0,
        });
    }

    let mut precond = match cfg.preconditioner {
        Preconditioner::None => None,
        Preconditioner::ConstantCoefficientInverse => Some(SpectralPreconditioner::new(grid)),
    };
    let mut precondition = |r: &[f64], z: &mut [f64]| match precond.as_mut() {
        Some(p) => {
            p.apply(r, z);
            remove_mean(z);
        }
        None => {
            z.copy_from_slice(r);
            remove_mean(z);
        }
    };

    let cap = cfg.iteration_cap(&grid);
    let target = cfg.tolerance * rhs_norm;
    let mut x = vec![0.0; n];
    let mut r = rhs.values().to_vec();
    remove_mean(&mut r);
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut iterations = 0;
    let mut residual;

    'restart: loop {
        precondition(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        check_finite(rz, "r·z")?;
        loop {
            residual = norm2(&r);
            if residual <= target || iterations >= cap {
                break;
            }
            apply_into(a, &p, &mut q);
            let pq = dot(&p, &q);
            check_finite(pq, "p·Ap")?;
            if pq <= 0.0 {
                break;
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            iterations += 1;
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            check_finite(rz_new, "r·z")?;
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }

        // recompute the true residual; restart if recurrence drift hid it
        remove_mean(&mut x);
        apply_into(a, &x, &mut q);
        for i in 0..n {
            r[i] = rhs.values()[i] - q[i];
        }
        residual = norm2(&r);
        check_finite(residual, "residual")?;
        if residual <= target {
            break 'restart;
        }
        if iterations >= cap {
            return Err(HomogError::NotConverged {
                iterations,
                residual: residual / rhs_norm,
            });
        }
        remove_mean(&mut r);
    }

    let phi = ScalarField::from_values_unchecked(grid, x);
    Ok(CorrectorSolution {
        flux_gradient: flux_gradient(&phi, xi),
        phi,
        direction: *xi,
        residual_norm: residual / rhs_norm,
        iterations,
    })
}

/// Corrector of the pointwise transpose field in direction `ξ'`.
pub fn solve_adjoint_corrector(
    a: &CoefficientField,
    xi_prime: &Direction,
    cfg: &SolverConfig,
) -> Result<CorrectorSolution> {
    solve_corrector(&crate::ensemble::transpose_field(a), xi_prime, cfg)
}

/// Marks the faces adjacent to `cells`: both faces of each cell along every axis.
pub fn adjacent_faces(grid: &TorusGrid, cells: &[usize]) -> Vec<usize> {
    let n = grid.num_cells();
    let mut mark = vec![false; grid.dim() * n];
    for &c in cells {
        for axis in 0..grid.dim() {
            mark[axis * n + c] = true;
            mark[axis * n + grid.lower_neighbor(c, axis)] = true;
        }
    }
    mark.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i)
        .collect()
}

/// `h^d Σ |∇φ + ξ|²` over the faces adjacent to `cells`, each face once.
pub fn local_energy(sol: &CorrectorSolution, cells: &[usize]) -> f64 {
    let grid = sol.phi.grid();
    let g = sol.flux_gradient.values();
    grid.cell_volume() * adjacent_faces(grid, cells).iter().map(|&f| g[f] * g[f]).sum::<f64>()
}

/// `h^d Σ_faces |∇φ + ξ|²` over the whole torus.
pub fn total_energy(sol: &CorrectorSolution) -> f64 {
    sol.phi.grid().cell_volume() * sol.flux_gradient.values().iter().map(|g| g * g).sum::<f64>()
}

/// Outcome of comparing the correctors of two media that agree outside a cell set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimateReport {
    /// `h^d Σ_faces |∇(φ₁ − φ₀)|²`.
    pub difference_energy: f64,
    /// `λ⁻² · local_energy(φ₀, D)` with `D` the cells where the media differ.
    pub bound: f64,
    /// Smallest face coefficient of the perturbed medium.
    pub lambda: f64,
}

impl EnergyEstimateReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.difference_energy <= self.bound + slack
    }
}

/// Energy of the corrector change caused by a local perturbation, together
/// with its explicit bound `λ⁻² ∫_D |∇φ₀ + ξ|²`.
pub fn energy_estimate(
    a0: &CoefficientField,
    a1: &CoefficientField,
    xi: &Direction,
    cfg: &SolverConfig,
) -> Result<EnergyEstimateReport> {
    let s0 = solve_corrector(a0, xi, cfg)?;
    let s1 = solve_corrector(a1, xi, cfg)?;
    let grid = a0.grid();
    let diff: f64 = s1
        .flux_gradient
        .values()
        .iter()
        .zip(s0.flux_gradient.values())
        .map(|(g1, g0)| (g1 - g0) * (g1 - g0))
        .sum();
    let lambda = a1.bounds().0;
    let cells = a0.differing_cells(a1);
    Ok(EnergyEstimateReport {
        difference_energy: grid.cell_volume() * diff,
        bound: local_energy(&s0, &cells) / (lambda * lambda),
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{rasterize_coefficient, sample_points, RngStream};

    fn poisson_medium(d: usize, l: f64, seed: u64) -> CoefficientField {
        let g = TorusGrid::new(d, l, 8).unwrap();
        rasterize_coefficient(&sample_points(l, d, &RngStream::sampling(seed)), &g, 0.25)
    }

    fn pseudo_random_field(grid: TorusGrid, seed: u64) -> ScalarField {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let vals = (0..grid.num_cells())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        ScalarField::from_values(grid, vals).unwrap()
    }

    #[test]
    fn operator_annihilates_constants() {
        let a = poisson_medium(2, 4.0, 3);
        let out = apply_operator(&a, &ScalarField::constant(*a.grid(), 2.5));
        assert!(out.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn unit_coefficient_gives_five_point_laplacian() {
        let g = TorusGrid::new(2, 1.0, 8).unwrap();
        let a = CoefficientField::constant(g, 1.0);
        let u = pseudo_random_field(g, 5);
        let au = apply_operator(&a, &u);
        let h2 = g.cell_size() * g.cell_size();
        for c in 0..g.num_cells() {
            let v = u.values();
            let expected = (4.0 * v[c]
                - v[g.upper_neighbor(c, 0)]
                - v[g.lower_neighbor(c, 0)]
                - v[g.upper_neighbor(c, 1)]
                - v[g.lower_neighbor(c, 1)])
                / h2;
            assert!((au.values()[c] - expected).abs() < 1e-10 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn operator_is_symmetric() {
        for seed in 0..100 {
            let a = poisson_medium(2, 2.0, seed);
            let u = pseudo_random_field(*a.grid(), 2 * seed);
            let v = pseudo_random_field(*a.grid(), 2 * seed + 1);
            let auv = apply_operator(&a, &u).inner(&v);
            let uav = u.inner(&apply_operator(&a, &v));
            assert!((auv - uav).abs() <= 1e-12 * auv.abs().max(uav.abs()), "{auv} vs {uav}");
        }
    }

    #[test]
    fn rhs_edge_cases() {
        let g = TorusGrid::new(2, 2.0, 8).unwrap();
        let c = CoefficientField::constant(g, 0.4);
        assert!(rhs_for_direction(&c, &Direction::basis(2, 0)).values().iter().all(|&v| v == 0.0));

        let profile: Vec<f64> = (0..16).map(|j| if j < 8 { 0.25 } else { 1.0 }).collect();
        let lam = CoefficientField::laminate(g, 0, &profile).unwrap();
        assert!(rhs_for_direction(&lam, &Direction::basis(2, 1)).values().iter().all(|&v| v == 0.0));
        assert!(rhs_for_direction(&lam, &Direction::basis(2, 0)).values().iter().any(|&v| v != 0.0));

        for seed in 0..10 {
            let a = poisson_medium(2, 4.0, seed);
            let xi = Direction::normalized(&[0.3, -0.8]).unwrap();
            assert!(rhs_for_direction(&a, &xi).mean().abs() < 1e-12);
        }
    }

    #[test]
    fn constant_medium_has_zero_corrector() {
        let g = TorusGrid::new(3, 1.0, 8).unwrap();
        for &c in &[0.25, 1.0, 3.0] {
            let sol = solve_corrector(&CoefficientField::constant(g, c), &Direction::basis(3, 1), &SolverConfig::default()).unwrap();
            assert!(sol.phi.values().iter().all(|&v| v == 0.0));
            assert!(sol.flux_gradient.axis(1).iter().all(|&v| v == 1.0));
            assert!(sol.flux_gradient.axis(0).iter().all(|&v| v == 0.0));
            assert_eq!(sol.iterations, 0);
        }
    }

    #[test]
    fn one_dimensional_laminate_closed_form() {
        // flux a(∇φ+1) is constant, so ∇φ+1 = H/a_face with H the harmonic mean of faces
        let g = TorusGrid::new(1, 8.0, 8).unwrap();
        let profile: Vec<f64> = (0..64).map(|j| if (j / 5) % 3 == 0 { 0.25 } else { 1.0 }).collect();
        let a = CoefficientField::laminate(g, 0, &profile).unwrap();
        let cfg = SolverConfig::with_tolerance(1e-12);
        let sol = solve_corrector(&a, &Direction::basis(1, 0), &cfg).unwrap();
        let faces = a.face_values().values();
        let h = faces.len() as f64 / faces.iter().map(|f| 1.0 / f).sum::<f64>();
        for (g, f) in sol.flux_gradient.values().iter().zip(faces) {
            assert!((g - h / f).abs() < 1e-8, "{g} vs {}", h / f);
        }
        let adj = solve_adjoint_corrector(&a, &Direction::basis(1, 0), &cfg).unwrap();
        assert_eq!(adj, sol);
    }

    #[test]
    fn solution_has_zero_mean_and_small_residual() {
        let cfg = SolverConfig::default();
        for seed in 0..5 {
            let a = poisson_medium(2, 8.0, seed);
            let xi = Direction::basis(2, 0);
            let sol = solve_corrector(&a, &xi, &cfg).unwrap();
            assert!(sol.phi.mean().abs() < 1e-10);
            assert!(sol.residual_norm <= cfg.tolerance);
            let r = apply_operator(&a, &sol.phi);
            let rhs = rhs_for_direction(&a, &xi);
            let res: f64 = r.values().iter().zip(rhs.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!(res <= cfg.tolerance * norm2(rhs.values()) * (1.0 + 1e-6));
        }
    }

    #[test]
    fn unpreconditioned_matches_preconditioned() {
        let a = poisson_medium(2, 4.0, 17);
        let xi = Direction::basis(2, 0);
        let fast = solve_corrector(&a, &xi, &SolverConfig::with_tolerance(1e-11)).unwrap();
        let plain_cfg = SolverConfig {
            tolerance: 1e-11,
            max_iterations: Some(2000),
            preconditioner: Preconditioner::None,
        };
        let plain = solve_corrector(&a, &xi, &plain_cfg).unwrap();
        assert!(fast.phi.max_abs_diff(&plain.phi) < 1e-9);
        assert!(fast.iterations > 0 && fast.iterations < plain.iterations, "{} vs {}", fast.iterations, plain.iterations);
    }

    #[test]
    fn non_convergence_is_reported() {
        let a = poisson_medium(2, 8.0, 1);
        let cfg = SolverConfig {
            tolerance: 1e-12,
            max_iterations: Some(2),
            preconditioner: Preconditioner::None,
        };
        match solve_corrector(&a, &Direction::basis(2, 0), &cfg) {
            Err(HomogError::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-12);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
        assert!(solve_corrector(&a, &Direction::basis(2, 0), &SolverConfig::with_tolerance(0.0)).is_err());
    }

    #[test]
    fn direction_validation() {
        assert!(Direction::new(&[1.0, 1.0]).is_err());
        assert!(Direction::new(&[0.6, 0.8]).is_ok());
        assert!(Direction::normalized(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn local_energy_cases() {
        let g = TorusGrid::new(2, 2.0, 8).unwrap();
        let sol = solve_corrector(&CoefficientField::constant(g, 0.7), &Direction::basis(2, 0), &SolverConfig::default()).unwrap();
        assert_eq!(local_energy(&sol, &[]), 0.0);
        let all: Vec<usize> = (0..g.num_cells()).collect();
        assert!((local_energy(&sol, &all) - g.volume()).abs() < 1e-12);
        // one cell: two faces per axis, flux ξ on the axis-0 faces
        assert!((local_energy(&sol, &[5]) - 2.0 * g.cell_volume()).abs() < 1e-15);

        let a = poisson_medium(2, 4.0, 9);
        let sol = solve_corrector(&a, &Direction::basis(2, 0), &SolverConfig::default()).unwrap();
        let all: Vec<usize> = (0..a.grid().num_cells()).collect();
        let full = local_energy(&sol, &all);
        assert!((full - total_energy(&sol)).abs() < 1e-12 * full);
        assert!(local_energy(&sol, &all[..10]) >= 0.0);
    }

    #[test]
    fn shifted_medium_gives_shifted_corrector() {
        let cfg = SolverConfig::default();
        let a = poisson_medium(2, 4.0, 21);
        let xi = Direction::basis(2, 0);
        let base = solve_corrector(&a, &xi, &cfg).unwrap();
        for z in [[1i64, 0], [-3, 7], [16, 5]] {
            let s = solve_corrector(&a.shifted(&z), &xi, &cfg).unwrap();
            let expected = crate::torus_grid::shift_field(&base.phi, &z);
            assert!(s.phi.max_abs_diff(&expected) < 1e-8);
        }
    }
}
