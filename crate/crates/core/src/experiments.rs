//! Monte Carlo studies over independent realizations of the Poisson medium:
//! variance of `ξ'·a_hom^L ξ` as a function of `L`, moments of the corrector
//! at the origin, and a spectral-gap style comparison of the variance with
//! summed squared local oscillations.
//!
//! A realization is identified by `(L index, realization index)`; its random
//! stream is derived from the master seed alone, so results do not depend on
//! how the work is scheduled.

use std::time::Instant;

use rayon::prelude::*;

use crate::cell_solver::{solve_corrector, Direction, SolverConfig};
use crate::ensemble::{resample_stream, PointConfiguration, PoissonMedium, RngStream, DEFAULT_LAMBDA};
use crate::error::{HomogError, Result};
use crate::homogenize::{ahom_entry, oscillation_bound_check, spread, OscProbe, ProbeDirections};
use crate::records::format_f64;
use crate::stats::{fit_line, mean, mean_jackknife_se, unbiased_variance, variance_jackknife_se, LinearFit};
use crate::torus_grid::{TorusGrid, DEFAULT_CELLS_PER_UNIT};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub side_lengths: Vec<f64>,
    pub cells_per_unit: usize,
    pub lambda: f64,
    /// Density of the point process; `0` gives the deterministic medium `a ≡ 1`.
    pub intensity: f64,
    pub xi: Vec<f64>,
    pub xi_prime: Vec<f64>,
    pub samples_per_l: usize,
    pub master_seed: u64,
    pub tolerance: f64,
    pub moments: Vec<f64>,
    pub osc_radius: f64,
    pub osc_resamples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            side_lengths: vec![4.0, 8.0, 16.0],
            cells_per_unit: DEFAULT_CELLS_PER_UNIT,
            lambda: DEFAULT_LAMBDA,
            intensity: 1.0,
            xi: vec![1.0, 0.0],
            xi_prime: vec![1.0, 0.0],
            samples_per_l: 400,
            master_seed: 1,
            tolerance: 1e-9,
            moments: vec![1.0, 2.0],
            osc_radius: 1.0,
            osc_resamples: 16,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for dimension `d` with `ξ = ξ' = e₁`.
    pub fn for_dim(dim: usize) -> Self {
        let mut e1 = vec![0.0; dim];
        e1[0] = 1.0;
        Self {
            dim,
            xi: e1.clone(),
            xi_prime: e1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HomogError::InvalidArgument(msg));
        if self.samples_per_l < 2 {
            return bad(format!("samples_per_L must be at least 2, got {}", self.samples_per_l));
        }
        if self.side_lengths.is_empty() {
            return bad("need at least one side length".into());
        }
        if self.side_lengths.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("side lengths must be strictly increasing: {:?}", self.side_lengths));
        }
        if let Some(p) = self.moments.iter().find(|&&p| !(p >= 1.0)) {
            return bad(format!("moment exponents must be ≥ 1, got {p}"));
        }
        if !(self.intensity >= 0.0) {
            return bad(format!("intensity must be nonnegative, got {}", self.intensity));
        }
        if self.osc_resamples == 0 {
            return bad("osc_resamples must be positive".into());
        }
        for &l in &self.side_lengths {
            TorusGrid::new(self.dim, l, self.cells_per_unit)?;
        }
        self.directions()?;
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        PoissonMedium::new(TorusGrid::new(self.dim, self.side_lengths[0], self.cells_per_unit)?, self.lambda)?;
        Ok(())
    }

    pub fn directions(&self) -> Result<ProbeDirections> {
        if self.xi.len() != self.dim || self.xi_prime.len() != self.dim {
            return Err(HomogError::InvalidArgument(format!(
                "ξ and ξ' need {} components",
                self.dim
            )));
        }
        ProbeDirections::new(Direction::new(&self.xi)?, Direction::new(&self.xi_prime)?)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig::with_tolerance(self.tolerance)
    }

    pub fn medium(&self, side_length: f64) -> Result<PoissonMedium> {
        let grid = TorusGrid::new(self.dim, side_length, self.cells_per_unit)?;
        Ok(PoissonMedium::new(grid, self.lambda)?.with_intensity(self.intensity))
    }

    /// Every `(L index, realization index)` pair in canonical order.
    pub fn work_items(&self) -> Vec<(usize, usize)> {
        (0..self.side_lengths.len())
            .flat_map(|l| (0..self.samples_per_l).map(move |i| (l, i)))
            .collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one realization; `sample --seed <this>` reproduces its medium.
pub fn realization_seed(master_seed: u64, l_index: usize, index: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(((l_index as u64) << 32) | index as u64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub side_length: f64,
    pub l_index: usize,
    pub index: usize,
    pub seed: u64,
    pub dim: usize,
    pub lambda: f64,
    pub cells_per_unit: usize,
    /// `ξ'·a_hom^L ξ`.
    pub ahom: f64,
    /// Corrector value in the cell containing the torus origin.
    pub phi0: f64,
    pub residual: f64,
    pub wall_ms: f64,
}

impl ExperimentRecord {
    pub const CSV_HEADER: [&'static str; 9] =
        ["seed", "L", "d", "lambda", "n", "ahom_e1e1", "phi0", "residual", "wall_ms"];

    /// CSV fields; wall time is written only when `timing` is set so that
    /// default outputs are byte-reproducible.
    pub fn csv_row(&self, timing: bool) -> Vec<String> {
        vec![
            self.seed.to_string(),
            format_f64(self.side_length),
            self.dim.to_string(),
            format_f64(self.lambda),
            self.cells_per_unit.to_string(),
            format_f64(self.ahom),
            format_f64(self.phi0),
            format_f64(self.residual),
            format_f64(if timing { self.wall_ms } else { 0.0 }),
        ]
    }

    /// Inverse of [`csv_row`](Self::csv_row); the position `(l_index, index)` is
    /// not part of the row and must be supplied.
    pub fn from_csv_row<S: AsRef<str>>(l_index: usize, index: usize, row: &[S]) -> Result<Self> {
        if row.len() != Self::CSV_HEADER.len() {
            return Err(HomogError::Parse(format!("record has {} fields, expected 9", row.len())));
        }
        let f = |i: usize| -> Result<f64> {
            row[i]
                .as_ref()
                .parse::<f64>()
                .map_err(|e| HomogError::Parse(format!("{}: {e}", Self::CSV_HEADER[i])))
        };
        let u = |i: usize| -> Result<u64> {
            row[i]
                .as_ref()
                .parse::<u64>()
                .map_err(|e| HomogError::Parse(format!("{}: {e}", Self::CSV_HEADER[i])))
        };
        Ok(Self {
            side_length: f(1)?,
            l_index,
            index,
            seed: u(0)?,
            dim: u(2)? as usize,
            lambda: f(3)?,
            cells_per_unit: u(4)? as usize,
            ahom: f(5)?,
            phi0: f(6)?,
            residual: f(7)?,
            wall_ms: f(8)?,
        })
    }
}

/// Sample, rasterize, solve and assemble one realization.
pub fn run_realization(cfg: &ExperimentConfig, l_index: usize, index: usize) -> Result<ExperimentRecord> {
    let start = Instant::now();
    let side_length = cfg.side_lengths[l_index];
    let medium = cfg.medium(side_length)?;
    let dirs = cfg.directions()?;
    let seed = realization_seed(cfg.master_seed, l_index, index);
    let field = medium.rasterize(&medium.sample(&RngStream::sampling(seed)));
    let sol = solve_corrector(&field, &dirs.xi, &cfg.solver())?;
    let ahom = ahom_entry(&field, &sol, &dirs.xi_prime);
    Ok(ExperimentRecord {
        side_length,
        l_index,
        index,
        seed,
        dim: cfg.dim,
        lambda: cfg.lambda,
        cells_per_unit: cfg.cells_per_unit,
        ahom,
        phi0: sol.phi.values()[field.grid().origin_cell()],
        residual: sol.residual_norm,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// A realization that failed, kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedRealization {
    pub l_index: usize,
    pub index: usize,
    pub message: String,
}

/// Runs the given work items on the current rayon pool; results come back in
/// the order of `items`.
pub fn run_items(
    cfg: &ExperimentConfig,
    items: &[(usize, usize)],
) -> Vec<std::result::Result<ExperimentRecord, FailedRealization>> {
    items
        .par_iter()
        .map(|&(l, i)| {
            run_realization(cfg, l, i).map_err(|e| FailedRealization {
                l_index: l,
                index: i,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Fails when more than 1% of the attempted realizations failed.
pub fn check_failure_budget(failed: usize, total: usize) -> Result<()> {
    if failed * 100 > total {
        Err(HomogError::FailureBudget { failed, total })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub side_length: f64,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub variance_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub levels: Vec<LevelSummary>,
    /// `log Var ≈ intercept + slope · log L`; `None` when some variance is zero
    /// or fewer than two levels exist.
    pub fit: Option<LinearFit>,
}

impl SweepSummary {
    pub const CSV_HEADER: [&'static str; 5] = ["L", "count", "mean", "var", "var_se"];
    pub const FIT_HEADER: [&'static str; 3] = ["slope", "slope_se", "intercept"];

    pub fn level_rows(&self) -> Vec<Vec<String>> {
        self.levels
            .iter()
            .map(|l| {
                vec![
                    format_f64(l.side_length),
                    l.count.to_string(),
                    format_f64(l.mean),
                    format_f64(l.variance),
                    format_f64(l.variance_se),
                ]
            })
            .collect()
    }

    pub fn fit_row(&self) -> Vec<String> {
        match &self.fit {
            Some(f) => vec![
                format_f64(f.slope),
                format_f64(f.slope_se.unwrap_or(f64::NAN)),
                format_f64(f.intercept),
            ],
            None => vec!["NaN".into(), "NaN".into(), "NaN".into()],
        }
    }

    pub fn variance_at(&self, side_length: f64) -> Option<&LevelSummary> {
        self.levels.iter().find(|l| l.side_length == side_length)
    }
}

/// Per-level statistics and the log-log fit of variance against `L`.
pub fn summarize_sweep(side_lengths: &[f64], records: &[ExperimentRecord]) -> SweepSummary {
    let levels: Vec<LevelSummary> = side_lengths
        .iter()
        .enumerate()
        .map(|(li, &l)| {
            let values: Vec<f64> = records.iter().filter(|r| r.l_index == li).map(|r| r.ahom).collect();
            LevelSummary {
                side_length: l,
                count: values.len(),
                mean: if values.is_empty() { f64::NAN } else { mean(&values) },
                variance: unbiased_variance(&values),
                variance_se: variance_jackknife_se(&values),
            }
        })
        .collect();
    let fit = if levels.iter().all(|l| l.variance > 0.0) {
        let x: Vec<f64> = levels.iter().map(|l| l.side_length.ln()).collect();
        let y: Vec<f64> = levels.iter().map(|l| l.variance.ln()).collect();
        fit_line(&x, &y)
    } else {
        None
    };
    SweepSummary { levels, fit }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub summary: SweepSummary,
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<FailedRealization>,
}

/// Collects successes and failures, enforcing the failure budget.
pub fn collect_outcome(
    side_lengths: &[f64],
    results: Vec<std::result::Result<ExperimentRecord, FailedRealization>>,
) -> Result<SweepOutcome> {
    let total = results.len();
    let mut records = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    check_failure_budget(failures.len(), total)?;
    Ok(SweepOutcome {
        summary: summarize_sweep(side_lengths, &records),
        records,
        failures,
    })
}

/// `samples_per_L` realizations per side length, then variance and fit.
pub fn run_variance_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let results = run_items(cfg, &cfg.work_items());
    collect_outcome(&cfg.side_lengths, results)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub side_length: f64,
    pub p: f64,
    pub count: usize,
    /// Sample mean of `(φ(0)²)^p`.
    pub estimate: f64,
    pub se: f64,
}

impl MomentEstimate {
    pub const CSV_HEADER: [&'static str; 5] = ["L", "p", "count", "estimate", "se"];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            format_f64(self.side_length),
            format_f64(self.p),
            self.count.to_string(),
            format_f64(self.estimate),
            format_f64(self.se),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentStudy {
    pub estimates: Vec<MomentEstimate>,
    /// Set outside dimension three, where boundedness is not a theorem.
    pub exploratory: bool,
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<FailedRealization>,
}

impl MomentStudy {
    pub fn estimate(&self, side_length: f64, p: f64) -> Option<&MomentEstimate> {
        self.estimates.iter().find(|e| e.side_length == side_length && e.p == p)
    }
}

/// Empirical `E[(φ(0)²)^p]` with jackknife errors for every `(L, p)`.
pub fn moment_estimates(side_lengths: &[f64], moments: &[f64], records: &[ExperimentRecord]) -> Vec<MomentEstimate> {
    let mut out = Vec::new();
    for (li, &l) in side_lengths.iter().enumerate() {
        let phi: Vec<f64> = records.iter().filter(|r| r.l_index == li).map(|r| r.phi0).collect();
        for &p in moments {
            let values: Vec<f64> = phi.iter().map(|v| (v * v).powf(p)).collect();
            out.push(MomentEstimate {
                side_length: l,
                p,
                count: values.len(),
                estimate: if values.is_empty() { f64::NAN } else { mean(&values) },
                se: mean_jackknife_se(&values),
            });
        }
    }
    out
}

pub fn run_moment_study(cfg: &ExperimentConfig) -> Result<MomentStudy> {
    cfg.validate()?;
    let outcome = collect_outcome(&cfg.side_lengths, run_items(cfg, &cfg.work_items()))?;
    Ok(MomentStudy {
        estimates: moment_estimates(&cfg.side_lengths, &cfg.moments, &outcome.records),
        exploratory: cfg.dim != 3,
        records: outcome.records,
        failures: outcome.failures,
    })
}

/// Functional whose oscillation is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscTarget {
    AhomEntry,
    PhiAtOrigin,
}

/// `max − min` of the target over `M` conditional resamples of `base` in
/// `B_R(z)`; a lower bound of the true oscillation.
#[allow(clippy::too_many_arguments)]
pub fn empirical_oscillation(
    medium: &PoissonMedium,
    base: &PointConfiguration,
    center: &[f64],
    radius: f64,
    resamples: usize,
    seed: u64,
    site: u64,
    target: OscTarget,
    dirs: &ProbeDirections,
    solver: &SolverConfig,
) -> Result<f64> {
    OscProbe::new(center.to_vec(), radius, resamples, medium.grid.side_length())?;
    let values: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let config = medium.resample(base, center, radius, &resample_stream(seed, site, k))?;
            let field = medium.rasterize(&config);
            let sol = solve_corrector(&field, &dirs.xi, solver)?;
            Ok(match target {
                OscTarget::AhomEntry => ahom_entry(&field, &sol, &dirs.xi_prime),
                OscTarget::PhiAtOrigin => sol.phi.values()[field.grid().origin_cell()],
            })
        })
        .collect::<Result<_>>()?;
    Ok(spread(&values))
}

/// Lattice sites `Z^d ∩ [-L/2, L/2)^d` in lexicographic order.
pub fn lattice_sites(dim: usize, side_length: f64) -> Vec<Vec<f64>> {
    let lo = (-0.5 * side_length).ceil() as i64;
    let hi = (0.5 * side_length).ceil() as i64;
    let axis: Vec<f64> = (lo..hi).map(|k| k as f64).collect();
    let mut sites = vec![Vec::new()];
    for _ in 0..dim {
        sites = sites
            .into_iter()
            .flat_map(|s| {
                axis.iter().map(move |&x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    sites
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGapReport {
    pub side_length: f64,
    pub base_realizations: usize,
    pub sites: usize,
    pub resamples: usize,
    /// Sample variance of `ζ = ξ'·a_hom^L ξ` over the base realizations.
    pub lhs: f64,
    /// Mean over base realizations of `Σ_z osc_{B_R(z)}(ζ)²`.
    pub rhs: f64,
    /// `lhs / rhs`; `None` when `rhs` vanishes.
    pub ratio: Option<f64>,
    /// Largest pairwise energy-bound ratio seen; must stay ≤ 1.
    pub max_pairwise_ratio: f64,
    pub pairwise_violations: usize,
    pub pairs_checked: usize,
    /// Per base realization, `Σ_z osc²`.
    pub osc_sums: Vec<f64>,
}

impl SpectralGapReport {
    pub const CSV_HEADER: [&'static str; 9] = [
        "L", "bases", "sites", "resamples", "lhs", "rhs", "ratio", "max_pairwise_ratio", "pairwise_violations",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            format_f64(self.side_length),
            self.base_realizations.to_string(),
            self.sites.to_string(),
            self.resamples.to_string(),
            format_f64(self.lhs),
            format_f64(self.rhs),
            self.ratio.map_or_else(|| "NaN".into(), format_f64),
            format_f64(self.max_pairwise_ratio),
            self.pairwise_violations.to_string(),
        ]
    }
}

/// Compares `Var(ζ)` with `E[Σ_z (osc_{B_R(z)} ζ)²]` at the first configured
/// side length, using `samples_per_L` base realizations and `osc_resamples`
/// conditional resamples per lattice site.
pub fn run_spectral_gap_diagnostic(cfg: &ExperimentConfig) -> Result<SpectralGapReport> {
    cfg.validate()?;
    let side_length = cfg.side_lengths[0];
    let medium = cfg.medium(side_length)?;
    let dirs = cfg.directions()?;
    let solver = cfg.solver();
    let sites = lattice_sites(cfg.dim, side_length);

    struct BaseResult {
        zeta: f64,
        osc_sum: f64,
        max_ratio: f64,
        violations: usize,
        pairs: usize,
    }

    let bases: Vec<BaseResult> = (0..cfg.samples_per_l)
        .into_par_iter()
        .map(|b| -> Result<BaseResult> {
            let seed = realization_seed(cfg.master_seed, 0, b);
            let base = medium.sample(&RngStream::sampling(seed));
            let field = medium.rasterize(&base);
            let sol = solve_corrector(&field, &dirs.xi, &solver)?;
            let mut out = BaseResult {
                zeta: ahom_entry(&field, &sol, &dirs.xi_prime),
                osc_sum: 0.0,
                max_ratio: 0.0,
                violations: 0,
                pairs: 0,
            };
            for (site, z) in sites.iter().enumerate() {
                let probe = OscProbe::new(z.clone(), cfg.osc_radius, cfg.osc_resamples, side_length)?;
                let r = oscillation_bound_check(&medium, &base, &probe, seed, site as u64, &dirs, &solver)?;
                out.osc_sum += r.oscillation * r.oscillation;
                out.max_ratio = out.max_ratio.max(r.max_pairwise_ratio);
                out.violations += r.pairwise_violations;
                out.pairs += r.pairs_checked;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let zetas: Vec<f64> = bases.iter().map(|b| b.zeta).collect();
    let osc_sums: Vec<f64> = bases.iter().map(|b| b.osc_sum).collect();
    let lhs = unbiased_variance(&zetas);
    let rhs = mean(&osc_sums);
    Ok(SpectralGapReport {
        side_length,
        base_realizations: cfg.samples_per_l,
        sites: sites.len(),
        resamples: cfg.osc_resamples,
        lhs,
        rhs,
        ratio: (rhs > 0.0).then(|| lhs / rhs),
        max_pairwise_ratio: bases.iter().map(|b| b.max_ratio).fold(0.0, f64::max),
        pairwise_violations: bases.iter().map(|b| b.violations).sum(),
        pairs_checked: bases.iter().map(|b| b.pairs).sum(),
        osc_sums,
    })
}
