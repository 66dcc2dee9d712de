//! Periodized effective coefficient `ξ'·a_hom^L ξ`, its analytic laminate
//! oracle, and numerical checks of the exact identities relating the effective
//! coefficients of two media that differ on a bounded set.
//!
//! All assemblies are over faces, where the fluxes `a(∇φ + ξ)` live. On the
//! discrete level the adjoint form `(∇φ' + ξ')·a(∇φ + ξ)` and the perturbation
//! identity hold exactly up to solver residuals, because the discrete
//! divergence and gradient are adjoint under summation by parts.

use rayon::prelude::*;

use crate::cell_solver::{
    adjacent_faces, local_energy, solve_adjoint_corrector, solve_corrector, CoefficientField,
    CorrectorSolution, Direction, SolverConfig,
};
use crate::ensemble::{resample_stream, PointConfiguration, PoissonMedium};
use crate::error::{HomogError, Result};
use crate::records::format_f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeDirections {
    pub xi: Direction,
    pub xi_prime: Direction,
}

impl ProbeDirections {
    pub fn new(xi: Direction, xi_prime: Direction) -> Result<Self> {
        if xi.dim() != xi_prime.dim() {
            return Err(HomogError::InvalidArgument("ξ and ξ' have different dimensions".into()));
        }
        Ok(Self { xi, xi_prime })
    }

    /// `ξ = ξ' = e₁`.
    pub fn first_axis(dim: usize) -> Self {
        let e1 = Direction::basis(dim, 0);
        Self { xi: e1, xi_prime: e1 }
    }

    fn same(&self) -> bool {
        self.xi == self.xi_prime
    }
}

/// `L^{-d} h^d Σ_faces ξ'·a(∇φ + ξ)`.
pub fn ahom_entry(a: &CoefficientField, sol: &CorrectorSolution, xi_prime: &Direction) -> f64 {
    let grid = a.grid();
    let mut total = 0.0;
    for (axis, &x) in xi_prime.components().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let faces = a.face_values().axis(axis);
        let grad = sol.flux_gradient.axis(axis);
        total += x * faces.iter().zip(grad).map(|(f, g)| f * g).sum::<f64>();
    }
    total * grid.cell_volume() / grid.volume()
}

/// `L^{-d} h^d Σ_faces (∇φ' + ξ')·a(∇φ + ξ)`.
pub fn ahom_bilinear(a: &CoefficientField, sol: &CorrectorSolution, adj: &CorrectorSolution) -> f64 {
    let grid = a.grid();
    let total: f64 = a
        .face_values()
        .values()
        .iter()
        .zip(sol.flux_gradient.values())
        .zip(adj.flux_gradient.values())
        .map(|((f, g), g_adj)| g_adj * f * g)
        .sum();
    total * grid.cell_volume() / grid.volume()
}

/// `ξ'·a_hom^L ξ` from a fresh corrector solve.
pub fn ahom_for_directions(a: &CoefficientField, dirs: &ProbeDirections, cfg: &SolverConfig) -> Result<(f64, CorrectorSolution)> {
    let sol = solve_corrector(a, &dirs.xi, cfg)?;
    Ok((ahom_entry(a, &sol, &dirs.xi_prime), sol))
}

/// The full `d×d` periodized tensor with metadata for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedTensorSample {
    pub dim: usize,
    /// Row-major; `entries[i·d + j] = e_j·a_hom^L e_i`.
    pub entries: Vec<f64>,
    pub seed: Option<u64>,
    pub side_length: f64,
    pub lambda: f64,
    pub cells_per_unit: usize,
    /// Final relative residual of the solve for each `e_i`.
    pub residuals: Vec<f64>,
}

impl HomogenizedTensorSample {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn residual_max(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `v·A v` for an arbitrary vector.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let d = self.dim;
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| v[j] * self.entry(i, j) * v[i])
            .sum()
    }

    /// `ξ'·A ξ` contracted from the stored matrix.
    pub fn contract(&self, xi: &Direction, xi_prime: &Direction) -> f64 {
        let d = self.dim;
        let (x, y) = (xi.components(), xi_prime.components());
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| x[i] * y[j] * self.entry(i, j))
            .sum()
    }

    pub const CSV_PREFIX: [&'static str; 5] = ["seed", "L", "d", "lambda", "n"];

    pub fn csv_header(dim: usize) -> Vec<String> {
        let mut h: Vec<String> = Self::CSV_PREFIX.iter().map(|s| s.to_string()).collect();
        for i in 0..dim {
            for j in 0..dim {
                h.push(format!("a{}{}", i + 1, j + 1));
            }
        }
        h.push("residual_max".into());
        h
    }

    /// One CSV row: seed, L, d, lambda, n, entries row-major, residual_max.
    pub fn csv_row(&self) -> Vec<String> {
        let mut row = vec![
            self.seed.map_or_else(String::new, |s| s.to_string()),
            format_f64(self.side_length),
            self.dim.to_string(),
            format_f64(self.lambda),
            self.cells_per_unit.to_string(),
        ];
        row.extend(self.entries.iter().map(|&v| format_f64(v)));
        row.push(format_f64(self.residual_max()));
        row
    }
}

/// Solves for every basis direction and assembles the tensor. `lambda` in the
/// result is the smallest cell coefficient of `a`.
pub fn ahom_matrix(a: &CoefficientField, cfg: &SolverConfig) -> Result<HomogenizedTensorSample> {
    let grid = a.grid();
    let d = grid.dim();
    let mut entries = vec![0.0; d * d];
    let mut residuals = Vec::with_capacity(d);
    for i in 0..d {
        let sol = solve_corrector(a, &Direction::basis(d, i), cfg).map_err(|e| HomogError::Direction {
            direction: i,
            source: Box::new(e),
        })?;
        for j in 0..d {
            entries[i * d + j] = ahom_entry(a, &sol, &Direction::basis(d, j));
        }
        residuals.push(sol.residual_norm);
    }
    let lambda = a.cell_values().values().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(HomogenizedTensorSample {
        dim: d,
        entries,
        seed: None,
        side_length: grid.side_length(),
        lambda,
        cells_per_unit: grid.cells_per_unit(),
        residuals,
    })
}

/// Harmonic mean of the profile when probing along the variation axis,
/// arithmetic mean across it.
pub fn laminate_oracle(profile: &[f64], axis: usize, direction: usize) -> f64 {
    let n = profile.len() as f64;
    if axis == direction {
        n / profile.iter().map(|v| 1.0 / v).sum::<f64>()
    } else {
        profile.iter().sum::<f64>() / n
    }
}

/// Comparison of two independent assemblies of
/// `L^d(ξ'·a_hom,1 ξ − ξ'·a_hom,0 ξ) = ∫ (∇φ₀' + ξ')·(a₁ − a₀)(∇φ₁ + ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    /// `L^d` times the difference of effective coefficients.
    pub lhs: f64,
    /// The face sum over the perturbation.
    pub rhs: f64,
    pub abs_residual: f64,
    /// `|lhs − rhs| / (|lhs| + |rhs| + 1e-300)`.
    pub rel_residual: f64,
    /// `∫_D |∇φ₀' + ξ'|²` over faces adjacent to the differing cells `D`.
    pub adjoint_energy: f64,
    /// `∫_D |∇φ₀ + ξ|²`.
    pub energy_unperturbed: f64,
    /// `∫_D |∇φ₁ + ξ|²`.
    pub energy_perturbed: f64,
    pub differing_cells: usize,
    pub max_residual: f64,
}

impl DualityReport {
    /// `sqrt(E₀'·E₀)`, the bound stated with both energies of the unperturbed medium.
    pub fn bound_unperturbed(&self) -> f64 {
        (self.adjoint_energy * self.energy_unperturbed).sqrt()
    }

    /// `sqrt(E₀'·E₁)`, the Cauchy–Schwarz bound that follows directly from the identity.
    pub fn bound_cauchy_schwarz(&self) -> f64 {
        (self.adjoint_energy * self.energy_perturbed).sqrt()
    }

    pub fn identity_holds(&self, rel_tol: f64) -> bool {
        self.rel_residual <= rel_tol
    }
}

/// Relative ceiling for identity residuals at the default solver tolerance.
pub const IDENTITY_REL_TOL: f64 = 1e-6;

pub fn verify_duality_identity(
    a0: &CoefficientField,
    a1: &CoefficientField,
    dirs: &ProbeDirections,
    cfg: &SolverConfig,
) -> Result<DualityReport> {
    assert_eq!(a0.grid(), a1.grid(), "media live on different grids");
    let grid = a0.grid();
    let phi0 = solve_corrector(a0, &dirs.xi, cfg)?;
    let phi1 = solve_corrector(a1, &dirs.xi, cfg)?;
    let adj0 = if dirs.same() {
        phi0.clone()
    } else {
        solve_adjoint_corrector(a0, &dirs.xi_prime, cfg)?
    };

    let volume = grid.volume();
    let lhs = volume * (ahom_entry(a1, &phi1, &dirs.xi_prime) - ahom_entry(a0, &phi0, &dirs.xi_prime));

    let cells = a0.differing_cells(a1);
    let f0 = a0.face_values().values();
    let f1 = a1.face_values().values();
    let g0 = adj0.flux_gradient.values();
    let g1 = phi1.flux_gradient.values();
    let rhs = grid.cell_volume()
        * adjacent_faces(grid, &cells)
            .into_iter()
            .map(|f| g0[f] * (f1[f] - f0[f]) * g1[f])
            .sum::<f64>();

    let abs_residual = (lhs - rhs).abs();
    Ok(DualityReport {
        lhs,
        rhs,
        abs_residual,
        rel_residual: abs_residual / (lhs.abs() + rhs.abs() + 1e-300),
        adjoint_energy: local_energy(&adj0, &cells),
        energy_unperturbed: local_energy(&phi0, &cells),
        energy_perturbed: local_energy(&phi1, &cells),
        differing_cells: cells.len(),
        max_residual: phi0.residual_norm.max(phi1.residual_norm).max(adj0.residual_norm),
    })
}

/// Where to probe the oscillation: ball `B_R(z)` and number of resamples `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscProbe {
    pub center: Vec<f64>,
    pub radius: f64,
    pub resamples: usize,
}

impl OscProbe {
    pub fn new(center: Vec<f64>, radius: f64, resamples: usize, side_length: f64) -> Result<Self> {
        if resamples == 0 {
            return Err(HomogError::InvalidArgument("need at least one resample".into()));
        }
        if !(radius > 0.0) || radius > 0.5 * side_length {
            return Err(HomogError::InvalidArgument(format!(
                "oscillation radius must lie in (0, L/2], got {radius}"
            )));
        }
        Ok(Self {
            center,
            radius,
            resamples,
        })
    }
}

/// Conditional resamples of one base configuration around a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    /// `ξ'·a_hom^L ξ` of every resampled medium, in resample order.
    pub values: Vec<f64>,
    /// `max − min` of `values`.
    pub oscillation: f64,
    /// Number of cells where at least two resampled media differ.
    pub support_cells: usize,
    /// Largest `L^d|ζ_l − ζ_k| / sqrt(E'_k E_l)` over ordered pairs with a nonzero bound.
    pub max_pairwise_ratio: f64,
    /// Ordered pairs violating `L^d|ζ_l − ζ_k| ≤ sqrt(E'_k E_l)` beyond the slack.
    pub pairwise_violations: usize,
    pub pairs_checked: usize,
    /// `osc / (L^{-d} sqrt(E'(a) E(a)))` with the energies of the base medium on
    /// the support; the implicit constant is unknown so this is reported only.
    pub diagnostic_ratio: f64,
}

impl OscillationReport {
    pub fn pairwise_bound_holds(&self) -> bool {
        self.pairwise_violations == 0
    }
}

/// Slack for the pairwise energy bound: relative and absolute.
pub const PAIRWISE_SLACK: f64 = 1e-6;

struct ResampledSolve {
    value: f64,
    field: CoefficientField,
    primal: CorrectorSolution,
    adjoint: Option<CorrectorSolution>,
}

/// Draws `M` resampled media around `probe`, evaluates `ξ'·a_hom^L ξ` on each and
/// checks the pairwise bound `L^d|ζ_l − ζ_k| ≤ (∫_D|∇φ'_k + ξ'|² ∫_D|∇φ_l + ξ|²)^{1/2}`,
/// with `D` the cells where the resampled media differ.
#[allow(clippy::too_many_arguments)]
pub fn oscillation_bound_check(
    medium: &PoissonMedium,
    base: &PointConfiguration,
    probe: &OscProbe,
    seed: u64,
    site: u64,
    dirs: &ProbeDirections,
    cfg: &SolverConfig,
) -> Result<OscillationReport> {
    let grid = medium.grid;
    let solves: Vec<ResampledSolve> = (0..probe.resamples as u64)
        .into_par_iter()
        .map(|k| -> Result<ResampledSolve> {
            let config = medium.resample(base, &probe.center, probe.radius, &resample_stream(seed, site, k))?;
            let field = medium.rasterize(&config);
            let primal = solve_corrector(&field, &dirs.xi, cfg)?;
            let adjoint = if dirs.same() {
                None
            } else {
                Some(solve_adjoint_corrector(&field, &dirs.xi_prime, cfg)?)
            };
            Ok(ResampledSolve {
                value: ahom_entry(&field, &primal, &dirs.xi_prime),
                field,
                primal,
                adjoint,
            })
        })
        .collect::<Result<_>>()?;

    let values: Vec<f64> = solves.iter().map(|s| s.value).collect();
    let oscillation = spread(&values);

    let mut support: Vec<usize> = Vec::new();
    for s in &solves[1..] {
        support.extend(solves[0].field.differing_cells(&s.field));
    }
    support.sort_unstable();
    support.dedup();

    let energies: Vec<(f64, f64)> = solves
        .iter()
        .map(|s| {
            let e = local_energy(&s.primal, &support);
            let e_adj = s.adjoint.as_ref().map_or(e, |adj| local_energy(adj, &support));
            (e_adj, e)
        })
        .collect();

    let volume = grid.volume();
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    let mut pairs = 0;
    for k in 0..solves.len() {
        for l in 0..solves.len() {
            if k == l {
                continue;
            }
            pairs += 1;
            let gap = volume * (values[l] - values[k]).abs();
            let bound = (energies[k].0 * energies[l].1).sqrt();
            if bound > 0.0 {
                max_ratio = max_ratio.max(gap / bound);
            }
            if gap > bound * (1.0 + PAIRWISE_SLACK) + PAIRWISE_SLACK {
                violations += 1;
            }
        }
    }

    let base_field = medium.rasterize(base);
    let base_primal = solve_corrector(&base_field, &dirs.xi, cfg)?;
    let base_e = local_energy(&base_primal, &support);
    let base_e_adj = if dirs.same() {
        base_e
    } else {
        local_energy(&solve_adjoint_corrector(&base_field, &dirs.xi_prime, cfg)?, &support)
    };
    let scale = (base_e_adj * base_e).sqrt() / volume;
    let diagnostic_ratio = if scale > 0.0 { oscillation / scale } else { 0.0 };

    Ok(OscillationReport {
        values,
        oscillation,
        support_cells: support.len(),
        max_pairwise_ratio: max_ratio,
        pairwise_violations: violations,
        pairs_checked: pairs,
        diagnostic_ratio,
    })
}

/// `max − min`; zero for fewer than two values.
pub fn spread(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{rasterize_coefficient, sample_points, RngStream};
    use crate::torus_grid::TorusGrid;

    fn medium(d: usize, l: f64) -> PoissonMedium {
        PoissonMedium::new(TorusGrid::new(d, l, 8).unwrap(), 0.25).unwrap()
    }

    fn half_laminate(grid: TorusGrid, lambda: f64) -> (Vec<f64>, CoefficientField) {
        let m = grid.cells_per_side();
        let profile: Vec<f64> = (0..m).map(|j| if j < m / 2 { lambda } else { 1.0 }).collect();
        let a = CoefficientField::laminate(grid, 0, &profile).unwrap();
        (profile, a)
    }

    #[test]
    fn constant_media_entries() {
        let g = TorusGrid::new(2, 2.0, 8).unwrap();
        let cfg = SolverConfig::default();
        for &c in &[1.0, 0.25] {
            let a = CoefficientField::constant(g, c);
            let t = ahom_matrix(&a, &cfg).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let expected = if i == j { c } else { 0.0 };
                    assert!((t.entry(i, j) - expected).abs() < 1e-14);
                }
            }
            let xi = Direction::normalized(&[1.0, 2.0]).unwrap();
            let xp = Direction::normalized(&[-0.5, 1.0]).unwrap();
            let sol = solve_corrector(&a, &xi, &cfg).unwrap();
            assert!((ahom_entry(&a, &sol, &xp) - c * xi.dot(&xp)).abs() < 1e-14);
            let adj = solve_adjoint_corrector(&a, &xp, &cfg).unwrap();
            assert!((ahom_bilinear(&a, &sol, &adj) - c * xi.dot(&xp)).abs() < 1e-14);
        }
    }

    #[test]
    fn laminate_oracle_values() {
        let p: Vec<f64> = (0..64).map(|j| if j < 32 { 0.25 } else { 1.0 }).collect();
        assert!((laminate_oracle(&p, 0, 0) - 0.4).abs() < 1e-15);
        assert!((laminate_oracle(&p, 0, 1) - 0.625).abs() < 1e-15);
        assert!((laminate_oracle(&[0.7; 10], 1, 1) - 0.7).abs() < 1e-15);
        assert!((laminate_oracle(&[0.7; 10], 1, 0) - 0.7).abs() < 1e-15);
        assert_eq!(laminate_oracle(&[0.25; 4], 0, 0), 0.25);
    }

    #[test]
    fn laminate_tensor_matches_oracle() {
        let g = TorusGrid::new(2, 8.0, 8).unwrap();
        let (profile, a) = half_laminate(g, 0.25);
        let cfg = SolverConfig::default();
        let t = ahom_matrix(&a, &cfg).unwrap();
        assert!((t.entry(0, 0) - laminate_oracle(&profile, 0, 0)).abs() < 1e-8);
        assert!((t.entry(1, 1) - laminate_oracle(&profile, 0, 1)).abs() < 1e-8);
        assert!(t.entry(0, 1).abs() < 1e-8 && t.entry(1, 0).abs() < 1e-8);

        for i in 0..2 {
            let e = Direction::basis(2, i);
            let sol = solve_corrector(&a, &e, &cfg).unwrap();
            let adj = solve_adjoint_corrector(&a, &e, &cfg).unwrap();
            assert!((ahom_bilinear(&a, &sol, &adj) - t.entry(i, i)).abs() < 1e-8);
        }
    }

    #[test]
    fn bilinear_form_matches_entry_on_poisson_media() {
        let m = medium(2, 8.0);
        let cfg = SolverConfig::default();
        let xi = Direction::basis(2, 0);
        for seed in 0..5 {
            let a = m.rasterize(&m.sample(&RngStream::sampling(seed)));
            let sol = solve_corrector(&a, &xi, &cfg).unwrap();
            let adj = solve_adjoint_corrector(&a, &xi, &cfg).unwrap();
            let entry = ahom_entry(&a, &sol, &xi);
            let bil = ahom_bilinear(&a, &sol, &adj);
            assert!((entry - bil).abs() <= 1e-7, "{entry} vs {bil}");
            assert!((entry - bil).abs() <= 100.0 * cfg.tolerance * (1.0 + entry.abs()));

            // distinct ξ' through a genuine adjoint solve
            let xp = Direction::normalized(&[0.6, 0.8]).unwrap();
            let adj = solve_adjoint_corrector(&a, &xp, &cfg).unwrap();
            let entry = ahom_entry(&a, &sol, &xp);
            assert!((entry - ahom_bilinear(&a, &sol, &adj)).abs() <= 1e-7);
        }
    }

    #[test]
    fn tensor_bounds_and_symmetry() {
        let m = medium(2, 4.0);
        let cfg = SolverConfig::default();
        for seed in 0..5 {
            let a = m.rasterize(&m.sample(&RngStream::sampling(seed)));
            let t = ahom_matrix(&a, &cfg).unwrap();
            assert!((t.entry(0, 1) - t.entry(1, 0)).abs() < 1e-8);
            for i in 0..2 {
                assert!((0.25..=1.0).contains(&t.entry(i, i)));
            }
            for k in 0..10 {
                let th = 0.37 * k as f64 + 0.1;
                let v = [th.cos(), th.sin()];
                let q = t.quadratic_form(&v);
                assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&q));
            }
        }
    }

    #[test]
    fn direction_linearity() {
        let m = medium(2, 4.0);
        let cfg = SolverConfig::with_tolerance(1e-11);
        let a = m.rasterize(&m.sample(&RngStream::sampling(12)));
        let t = ahom_matrix(&a, &cfg).unwrap();
        for k in 0..10 {
            let (alpha, beta) = (((k * 7) % 5) as f64 - 2.2, ((k * 3) % 4) as f64 - 1.4);
            let xi = Direction::normalized(&[alpha, beta]).unwrap();
            let xp = Direction::normalized(&[beta, 1.0]).unwrap();
            let sol = solve_corrector(&a, &xi, &cfg).unwrap();
            let direct = ahom_entry(&a, &sol, &xp);
            assert!((direct - t.contract(&xi, &xp)).abs() < 1e-8, "{direct} vs {}", t.contract(&xi, &xp));
        }
    }

    #[test]
    fn entry_is_shift_invariant() {
        let m = medium(2, 4.0);
        let cfg = SolverConfig::default();
        let xi = Direction::basis(2, 0);
        let a = m.rasterize(&m.sample(&RngStream::sampling(31)));
        let (base, _) = ahom_for_directions(&a, &ProbeDirections::first_axis(2), &cfg).unwrap();
        for z in [[3i64, 0], [-5, 11], [0, 32]] {
            let s = a.shifted(&z);
            let sol = solve_corrector(&s, &xi, &cfg).unwrap();
            assert!((ahom_entry(&s, &sol, &xi) - base).abs() < 1e-8);
        }
    }

    #[test]
    fn duality_identity_trivial_pair() {
        let m = medium(2, 4.0);
        let a = m.rasterize(&m.sample(&RngStream::sampling(2)));
        let r = verify_duality_identity(&a, &a, &ProbeDirections::first_axis(2), &SolverConfig::default()).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
        assert_eq!(r.differing_cells, 0);
    }

    #[test]
    fn duality_identity_resampled_pairs() {
        let m = medium(2, 8.0);
        let cfg = SolverConfig::default();
        let dirs = ProbeDirections::new(Direction::basis(2, 0), Direction::normalized(&[1.0, 1.0]).unwrap()).unwrap();
        for seed in 0..3 {
            let base = m.sample(&RngStream::sampling(seed));
            let other = m.resample(&base, &[0.5, -1.0], 1.0, &resample_stream(seed, 0, 0)).unwrap();
            let (a0, a1) = (m.rasterize(&base), m.rasterize(&other));
            let r = verify_duality_identity(&a0, &a1, &dirs, &cfg).unwrap();
            assert!(r.identity_holds(IDENTITY_REL_TOL), "{r:?}");
            assert!(r.lhs.abs() <= r.bound_cauchy_schwarz() * (1.0 + 1e-6) + 1e-6, "{r:?}");
        }
    }

    #[test]
    fn oscillation_single_resample_is_zero() {
        let m = medium(2, 4.0);
        let base = m.sample(&RngStream::sampling(3));
        let probe = OscProbe::new(vec![0.0, 0.0], 1.0, 1, 4.0).unwrap();
        let r = oscillation_bound_check(&m, &base, &probe, 3, 0, &ProbeDirections::first_axis(2), &SolverConfig::default()).unwrap();
        assert_eq!(r.oscillation, 0.0);
        assert_eq!(r.pairs_checked, 0);
    }

    #[test]
    fn oscillation_with_half_torus_ball_is_bounded() {
        let m = medium(2, 4.0);
        let base = m.sample(&RngStream::sampling(4));
        let probe = OscProbe::new(vec![0.0, 0.0], 2.0, 8, 4.0).unwrap();
        let r = oscillation_bound_check(&m, &base, &probe, 4, 0, &ProbeDirections::first_axis(2), &SolverConfig::default()).unwrap();
        assert!(r.values.iter().all(|&v| (0.25..=1.0).contains(&v)));
        assert!(r.oscillation <= 0.75);
        assert!(r.pairwise_bound_holds(), "{r:?}");
    }

    #[test]
    fn osc_probe_validation() {
        assert!(OscProbe::new(vec![0.0], 1.0, 0, 4.0).is_err());
        assert!(OscProbe::new(vec![0.0], 2.5, 3, 4.0).is_err());
    }

    #[test]
    fn csv_row_layout() {
        let g = TorusGrid::new(2, 2.0, 8).unwrap();
        let mut t = ahom_matrix(&CoefficientField::constant(g, 1.0), &SolverConfig::default()).unwrap();
        t.seed = Some(9);
        let header = HomogenizedTensorSample::csv_header(2);
        let row = t.csv_row();
        assert_eq!(header.len(), row.len());
        assert_eq!(header[5], "a11");
        assert_eq!(row[0], "9");
        assert_eq!(row[5].parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn rasterized_and_sampled_entries_in_range() {
        let g = TorusGrid::new(2, 4.0, 8).unwrap();
        for seed in 0..5 {
            let a = rasterize_coefficient(&sample_points(4.0, 2, &RngStream::sampling(seed)), &g, 0.25);
            let (v, _) = ahom_for_directions(&a, &ProbeDirections::first_axis(2), &SolverConfig::default()).unwrap();
            assert!((0.25..=1.0).contains(&v));
        }
    }
}
