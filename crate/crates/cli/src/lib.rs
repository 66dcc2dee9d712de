//! Command-line front end: config handling, the worker pool, resumable
//! Monte Carlo runs and CSV output.

pub mod config;
pub mod manifest;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use homog_core::cell_solver::{energy_estimate, solve_corrector, CoefficientField};
use homog_core::ensemble::{resample_stream, PointConfiguration, PoissonMedium};
use homog_core::experiments::{
    check_failure_budget, empirical_oscillation, lattice_sites, moment_estimates, realization_seed, run_items,
    run_spectral_gap_diagnostic, summarize_sweep, ExperimentConfig, ExperimentRecord, MomentEstimate, OscTarget,
    SpectralGapReport, SweepSummary,
};
use homog_core::homogenize::{
    ahom_entry, ahom_matrix, oscillation_bound_check, verify_duality_identity, HomogenizedTensorSample, OscProbe,
    IDENTITY_REL_TOL, PAIRWISE_SLACK,
};
use homog_core::records::{format_f64, write_corrector};
use homog_core::{RngStream, SolverConfig, TorusGrid};

use crate::manifest::RunManifest;

/// Bundled pair of point configurations that differ only inside a unit ball.
pub const PAIR_FIXTURE_BASE: &str = include_str!("../fixtures/pair_base.txt");
pub const PAIR_FIXTURE_PERTURBED: &str = include_str!("../fixtures/pair_perturbed.txt");

#[derive(Debug, Parser)]
#[command(name = "homog-lab", version, about = "Monte Carlo laboratory for periodized homogenization")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (`sample`) or directory (everything else).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `master_seed` from the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true, env = "HOMOG_LAB_JOBS", default_value_t = 0)]
    pub jobs: usize,
    /// Relative solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Dimension.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Side length(s), comma separated.
    #[arg(long = "L", global = true)]
    pub side_lengths: Option<String>,
    /// Any other config key, as `key=value`; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a Poisson point configuration and write it in record format.
    Sample {
        /// Also apply one conditional resample inside the ball at this centre.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        resample_center: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        resample_radius: f64,
        #[arg(long, default_value_t = 0)]
        resample_index: u64,
    },
    /// Solve one realization and print the effective coefficient entry.
    Solve {
        /// Laminate fixture (`d`, `L`, `n`, `axis`, `profile` keys) instead of a sampled medium.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Variance of the effective coefficient across side lengths.
    Sweep(RunArgs),
    /// Moments of the corrector at the origin.
    Moments(RunArgs),
    /// Variance against summed squared local oscillations.
    Sgap,
    /// Duality identity and energy estimate on pairs of media.
    Verify {
        #[arg(long, requires = "perturbed")]
        base: Option<PathBuf>,
        #[arg(long, requires = "base")]
        perturbed: Option<PathBuf>,
        /// Instead of fixtures, draw this many random pairs (unit-ball resamples).
        #[arg(long, conflicts_with = "base")]
        pairs: Option<usize>,
    },
    /// Conditional resamples of one base configuration in a ball.
    Oscillation {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        center: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Target::Ahom)]
        target: Target,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Continue the run recorded in this manifest.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop after this many new realizations, leaving a resumable run.
    #[arg(long)]
    pub stop_after: Option<usize>,
    /// Write measured wall time instead of 0 (outputs stop being reproducible).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Ahom,
    Phi,
}

/// What a command concluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// Interrupted on request; resumable.
    Stopped,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Stopped => 3,
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok { Outcome::Pass } else { Outcome::Fail }
    }
}

/// Config file, then `--set`, then the dedicated flags.
pub fn resolve_config(g: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            config::from_text(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(d) = g.d {
        config::apply(&mut cfg, "d", &d.to_string())?;
    }
    for kv in &g.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        config::apply(&mut cfg, k.trim(), v.trim())?;
    }
    if let Some(l) = &g.side_lengths {
        config::apply(&mut cfg, "side_lengths", l)?;
    }
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = g.tol {
        cfg.tolerance = t;
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let cfg = resolve_config(&cli.global)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build()?;
    let g = &cli.global;
    pool.install(|| match &cli.command {
        Command::Sample {
            resample_center,
            resample_radius,
            resample_index,
        } => cmd_sample(g, &cfg, resample_center.as_deref(), *resample_radius, *resample_index),
        Command::Solve { fixture } => cmd_solve(g, &cfg, fixture.as_deref()),
        Command::Sweep(args) => cmd_sweep(g, &cfg, args),
        Command::Moments(args) => cmd_moments(g, &cfg, args),
        Command::Sgap => cmd_sgap(g, &cfg),
        Command::Verify { base, perturbed, pairs } => {
            cmd_verify(g, &cfg, base.as_deref().zip(perturbed.as_deref()), *pairs)
        }
        Command::Oscillation { center, target } => cmd_oscillation(g, &cfg, center.as_deref(), *target),
    })
}

fn out_dir(g: &GlobalArgs) -> Result<PathBuf> {
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("homog-out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn single_grid(cfg: &ExperimentConfig) -> Result<(f64, TorusGrid)> {
    let l = *cfg.side_lengths.first().context("no side length given")?;
    Ok((l, TorusGrid::new(cfg.dim, l, cfg.cells_per_unit)?))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>], footer: Option<(&[&str], Vec<String>)>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    if let Some((h, r)) = footer {
        w.write_record(h)?;
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_sample(
    g: &GlobalArgs,
    cfg: &ExperimentConfig,
    resample_center: Option<&[f64]>,
    radius: f64,
    index: u64,
) -> Result<Outcome> {
    let (_, grid) = single_grid(cfg)?;
    let medium = PoissonMedium::new(grid, cfg.lambda)?.with_intensity(cfg.intensity);
    let stream = RngStream::sampling(cfg.master_seed);
    let mut points = medium.sample(&stream);
    let mut label = stream;
    if let Some(c) = resample_center {
        if c.len() != cfg.dim {
            bail!("resample centre needs {} coordinates", cfg.dim);
        }
        label = resample_stream(cfg.master_seed, 0, index);
        points = medium.resample(&points, c, radius, &label)?;
    }
    match &g.out {
        Some(p) => points.write_records(File::create(p)?, Some(&label))?,
        None => points.write_records(io::stdout().lock(), Some(&label))?,
    }
    Ok(Outcome::Pass)
}

/// Laminate fixture: `d`, `L`, `n`, `axis`, `profile`. A profile of `k` values
/// with `k | m` is stretched to `m` cells in equal contiguous blocks.
pub fn load_laminate(path: &Path) -> Result<CoefficientField> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let kv: BTreeMap<String, String> = config::parse_pairs(&text)?.into_iter().collect();
    let get = |k: &str| kv.get(k).ok_or_else(|| anyhow!("laminate fixture lacks {k:?}"));
    let d: usize = get("d")?.parse()?;
    let l: f64 = get("L")?.parse()?;
    let n: usize = get("n")?.parse()?;
    let axis: usize = get("axis")?.parse()?;
    let profile: Vec<f64> = get("profile")?
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()?;
    let grid = TorusGrid::new(d, l, n)?;
    let m = grid.cells_per_side();
    if profile.is_empty() || m % profile.len() != 0 {
        bail!("profile length {} does not divide {m} cells", profile.len());
    }
    let block = m / profile.len();
    let full: Vec<f64> = (0..m).map(|j| profile[j / block]).collect();
    Ok(CoefficientField::laminate(grid, axis, &full)?)
}

fn cmd_solve(g: &GlobalArgs, cfg: &ExperimentConfig, fixture: Option<&Path>) -> Result<Outcome> {
    let (field, seed) = match fixture {
        Some(p) => (load_laminate(p)?, None),
        None => {
            let (_, grid) = single_grid(cfg)?;
            let medium = PoissonMedium::new(grid, cfg.lambda)?.with_intensity(cfg.intensity);
            (medium.rasterize(&medium.sample(&RngStream::sampling(cfg.master_seed))), Some(cfg.master_seed))
        }
    };
    let d = field.grid().dim();
    if cfg.xi.len() != d {
        bail!("ξ has {} components but the medium is {d}-dimensional", cfg.xi.len());
    }
    let dirs = cfg.directions()?;
    let solver = cfg.solver();
    let sol = solve_corrector(&field, &dirs.xi, &solver)?;
    let entry = ahom_entry(&field, &sol, &dirs.xi_prime);
    let mut tensor = ahom_matrix(&field, &solver)?;
    tensor.seed = seed;
    let dir = out_dir(g)?;
    write_corrector(File::create(dir.join("corrector.txt"))?, &sol)?;
    let header = HomogenizedTensorSample::csv_header(d);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&dir.join("ahom.csv"), &header, &[tensor.csv_row()], None)?;
    println!("ahom {} residual {}", format_f64(entry), format_f64(sol.residual_norm));
    Ok(Outcome::Pass)
}

const PARTIAL: &str = "records.partial";

/// Reads `records.partial`, keeping rows confirmed by the manifest. A torn final
/// line (interrupted write) is dropped; malformed rows elsewhere are corruption.
fn load_partial(path: &Path, m: &RunManifest) -> Result<BTreeMap<(usize, usize), ExperimentRecord>> {
    let mut out = BTreeMap::new();
    if !path.exists() {
        if !m.done.is_empty() {
            bail!("manifest lists finished realizations but {} is missing", path.display());
        }
        return Ok(out);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(BufReader::new(File::open(path)?));
    let rows: Vec<_> = rdr.records().collect();
    let last = rows.len().saturating_sub(1);
    for (i, row) in rows.into_iter().enumerate() {
        let parsed = row.map_err(anyhow::Error::from).and_then(|r| {
            if r.len() != 11 {
                bail!("expected 11 fields");
            }
            let l: usize = r[0].parse()?;
            let idx: usize = r[1].parse()?;
            let fields: Vec<&str> = r.iter().skip(2).collect();
            Ok(((l, idx), ExperimentRecord::from_csv_row(l, idx, &fields)?))
        });
        match parsed {
            Ok((key, rec)) => {
                if m.done.contains(&key) {
                    out.insert(key, rec);
                }
            }
            Err(_) if i == last => {}
            Err(e) => bail!("corrupt {} at row {}: {e}", path.display(), i + 1),
        }
    }
    if let Some(missing) = m.done.iter().find(|k| !out.contains_key(k)) {
        bail!("manifest marks {missing:?} done but {} has no such record", path.display());
    }
    Ok(out)
}

fn append_partial(path: &Path, records: &[ExperimentRecord], timing: bool) -> Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    for r in records {
        let mut row = vec![r.l_index.to_string(), r.index.to_string()];
        row.extend(r.csv_row(timing));
        w.write_record(&row)?;
    }
    w.flush()?;
    w.get_ref().sync_data()?;
    Ok(())
}

/// Realizations in canonical order, or `None` when stopped early.
fn run_records(
    command: &str,
    cfg: &ExperimentConfig,
    dir: &Path,
    args: &RunArgs,
    outputs: &[&str],
) -> Result<Option<Vec<ExperimentRecord>>> {
    cfg.validate()?;
    let (mut manifest, mut done) = match &args.resume {
        Some(path) => {
            let m = RunManifest::load(path).context("refusing to resume")?;
            m.check_matches(command, cfg).context("refusing to resume")?;
            let done = load_partial(&dir.join(PARTIAL), &m).context("refusing to resume")?;
            // rewrite the partial file with exactly the confirmed rows
            let partial = dir.join(PARTIAL);
            fs::write(&partial, "")?;
            let kept: Vec<ExperimentRecord> = done.values().cloned().collect();
            append_partial(&partial, &kept, args.record_timing)?;
            (m, done)
        }
        None => {
            let m = RunManifest::create(&dir.join(manifest::FILE_NAME), command, cfg, outputs)?;
            fs::write(dir.join(PARTIAL), "")?;
            (m, BTreeMap::new())
        }
    };

    let all = cfg.work_items();
    let todo: Vec<(usize, usize)> = all.iter().copied().filter(|&it| !manifest.is_finished(it)).collect();
    let budget = args.stop_after.unwrap_or(usize::MAX);
    let chunk = (rayon::current_num_threads() * 4).max(1);
    let mut processed = 0;
    for batch in todo.chunks(chunk) {
        if processed >= budget {
            break;
        }
        let batch = &batch[..batch.len().min(budget - processed)];
        let results = run_items(cfg, batch);
        let (mut ok, mut failed) = (Vec::new(), Vec::new());
        for r in results {
            match r {
                Ok(rec) => ok.push(rec),
                Err(f) => {
                    eprintln!("realization (L={}, index={}) failed: {}", cfg.side_lengths[f.l_index], f.index, f.message);
                    failed.push((f.l_index, f.index));
                }
            }
        }
        append_partial(&dir.join(PARTIAL), &ok, args.record_timing)?;
        let ok_items: Vec<(usize, usize)> = ok.iter().map(|r| (r.l_index, r.index)).collect();
        manifest.record(&ok_items, &failed)?;
        for r in ok {
            done.insert((r.l_index, r.index), r);
        }
        processed += batch.len();
    }
    if all.iter().any(|&it| !manifest.is_finished(it)) {
        eprintln!(
            "stopped with {} of {} realizations finished; continue with --resume {}",
            manifest.done.len() + manifest.failed.len(),
            all.len(),
            manifest.path.display()
        );
        return Ok(None);
    }
    check_failure_budget(manifest.failed.len(), all.len())?;
    let records: Vec<ExperimentRecord> = done.into_values().collect();
    let rows: Vec<Vec<String>> = records.iter().map(|r| r.csv_row(args.record_timing)).collect();
    write_csv(&dir.join("records.csv"), &ExperimentRecord::CSV_HEADER, &rows, None)?;
    manifest.finish()?;
    Ok(Some(records))
}

/// A resumed run writes next to its manifest.
fn run_dir(g: &GlobalArgs, args: &RunArgs) -> Result<PathBuf> {
    match &args.resume {
        Some(m) => Ok(m.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => out_dir(g),
    }
}

fn cmd_sweep(g: &GlobalArgs, cfg: &ExperimentConfig, args: &RunArgs) -> Result<Outcome> {
    let dir = run_dir(g, args)?;
    let Some(records) = run_records("sweep", cfg, &dir, args, &["records.csv", "summary.csv"])? else {
        return Ok(Outcome::Stopped);
    };
    let summary = summarize_sweep(&cfg.side_lengths, &records);
    write_csv(
        &dir.join("summary.csv"),
        &SweepSummary::CSV_HEADER,
        &summary.level_rows(),
        Some((&SweepSummary::FIT_HEADER, summary.fit_row())),
    )?;
    for l in &summary.levels {
        println!(
            "L={} count={} mean={} var={} ± {}",
            l.side_length,
            l.count,
            format_f64(l.mean),
            format_f64(l.variance),
            format_f64(l.variance_se)
        );
    }
    match &summary.fit {
        Some(f) => println!(
            "slope={} ± {} intercept={}",
            format_f64(f.slope),
            f.slope_se.map_or_else(|| "NaN".into(), format_f64),
            format_f64(f.intercept)
        ),
        None => println!("slope undefined (zero variance or fewer than two side lengths)"),
    }
    Ok(Outcome::Pass)
}

/// `E[φ²]² ≤ E[φ⁴]` up to `k` combined standard errors (delta method for the square).
pub fn jensen_holds(p1: &MomentEstimate, p2: &MomentEstimate, k: f64) -> bool {
    let se = (p2.se.powi(2) + (2.0 * p1.estimate * p1.se).powi(2)).sqrt();
    p1.estimate * p1.estimate <= p2.estimate + k * se
}

fn cmd_moments(g: &GlobalArgs, cfg: &ExperimentConfig, args: &RunArgs) -> Result<Outcome> {
    let dir = run_dir(g, args)?;
    let Some(records) = run_records("moments", cfg, &dir, args, &["records.csv", "moments.csv"])? else {
        return Ok(Outcome::Stopped);
    };
    let est = moment_estimates(&cfg.side_lengths, &cfg.moments, &records);
    let rows: Vec<Vec<String>> = est.iter().map(MomentEstimate::csv_row).collect();
    write_csv(&dir.join("moments.csv"), &MomentEstimate::CSV_HEADER, &rows, None)?;
    if cfg.dim != 3 {
        println!("note: d={} is exploratory; boundedness is only proved for d=3", cfg.dim);
    }
    let mut ok = true;
    for e in &est {
        println!("L={} p={} E[phi^2p]={} ± {}", e.side_length, e.p, format_f64(e.estimate), format_f64(e.se));
    }
    for &l in &cfg.side_lengths {
        let find = |p: f64| est.iter().find(|e| e.side_length == l && e.p == p);
        if let (Some(a), Some(b)) = (find(1.0), find(2.0)) {
            let holds = jensen_holds(a, b, 3.0);
            println!("L={l} Jensen E[phi^2]^2 <= E[phi^4] + 3 se: {}", if holds { "ok" } else { "VIOLATED" });
            ok &= holds;
        }
    }
    Ok(Outcome::from_bool(ok))
}

fn cmd_sgap(g: &GlobalArgs, cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = out_dir(g)?;
    let r: SpectralGapReport = run_spectral_gap_diagnostic(cfg)?;
    write_csv(&dir.join("sgap.csv"), &SpectralGapReport::CSV_HEADER, &[r.csv_row()], None)?;
    println!(
        "L={} bases={} sites={} M={}: Var(zeta)={} E[sum osc^2]={} ratio={}",
        r.side_length,
        r.base_realizations,
        r.sites,
        r.resamples,
        format_f64(r.lhs),
        format_f64(r.rhs),
        r.ratio.map_or_else(|| "degenerate".into(), format_f64)
    );
    println!(
        "pairwise bound: {} violations in {} pairs, max ratio {}",
        r.pairwise_violations,
        r.pairs_checked,
        format_f64(r.max_pairwise_ratio)
    );
    Ok(Outcome::from_bool(r.pairwise_violations == 0 && r.lhs.is_finite() && r.rhs.is_finite()))
}

fn read_config_text(text: &str) -> Result<PointConfiguration> {
    Ok(PointConfiguration::read_records(text.as_bytes())?.0)
}

/// Checks on one pair of media that agree outside a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_residual: f64,
    pub bound: f64,
    pub bound_unperturbed: f64,
    pub energy_difference: f64,
    pub energy_bound: f64,
    pub passed: bool,
}

impl PairCheck {
    pub const CSV_HEADER: [&'static str; 9] = [
        "pair",
        "lhs",
        "rhs",
        "rel_residual",
        "bound",
        "bound_unperturbed",
        "energy_difference",
        "energy_bound",
        "passed",
    ];
}

/// Duality identity, the Cauchy–Schwarz bound and the energy estimate.
pub fn check_pair(a0: &CoefficientField, a1: &CoefficientField, cfg: &ExperimentConfig) -> Result<PairCheck> {
    let dirs = cfg.directions()?;
    let solver: SolverConfig = cfg.solver();
    let dual = verify_duality_identity(a0, a1, &dirs, &solver)?;
    let energy = energy_estimate(a0, a1, &dirs.xi, &solver)?;
    let bound = dual.bound_cauchy_schwarz();
    let passed = dual.identity_holds(IDENTITY_REL_TOL)
        && dual.lhs.abs() <= bound * (1.0 + PAIRWISE_SLACK) + PAIRWISE_SLACK
        && energy.holds(cfg.tolerance * (1.0 + energy.bound));
    Ok(PairCheck {
        lhs: dual.lhs,
        rhs: dual.rhs,
        rel_residual: dual.rel_residual,
        bound,
        bound_unperturbed: dual.bound_unperturbed(),
        energy_difference: energy.difference_energy,
        energy_bound: energy.bound,
        passed,
    })
}

/// The `k`-th random pair: a base medium and one resample inside a unit ball
/// centred at a lattice site.
pub fn random_pair(cfg: &ExperimentConfig, k: usize) -> Result<(CoefficientField, CoefficientField)> {
    let (l, grid) = single_grid(cfg)?;
    let medium = PoissonMedium::new(grid, cfg.lambda)?.with_intensity(cfg.intensity);
    let seed = realization_seed(cfg.master_seed, 0, k);
    let base = medium.sample(&RngStream::sampling(seed));
    let sites = lattice_sites(cfg.dim, l);
    let site = k % sites.len();
    let pert = medium.resample(&base, &sites[site], 1.0, &resample_stream(seed, site as u64, 0))?;
    Ok((medium.rasterize(&base), medium.rasterize(&pert)))
}

fn cmd_verify(
    g: &GlobalArgs,
    cfg: &ExperimentConfig,
    files: Option<(&Path, &Path)>,
    pairs: Option<usize>,
) -> Result<Outcome> {
    let media: Vec<(CoefficientField, CoefficientField)> = match pairs {
        Some(n) => (0..n).map(|k| random_pair(cfg, k)).collect::<Result<_>>()?,
        None => {
            let (b, p) = match files {
                Some((b, p)) => (
                    read_config_text(&fs::read_to_string(b)?)?,
                    read_config_text(&fs::read_to_string(p)?)?,
                ),
                None => (read_config_text(PAIR_FIXTURE_BASE)?, read_config_text(PAIR_FIXTURE_PERTURBED)?),
            };
            if b.dim() != p.dim() || b.side_length() != p.side_length() {
                bail!("the two configurations live on different tori");
            }
            let grid = TorusGrid::new(b.dim(), b.side_length(), cfg.cells_per_unit)?;
            let medium = PoissonMedium::new(grid, cfg.lambda)?;
            vec![(medium.rasterize(&b), medium.rasterize(&p))]
        }
    };
    let mut local = cfg.clone();
    if let Some((a0, _)) = media.first() {
        let d = a0.grid().dim();
        if local.xi.len() != d {
            let fresh = ExperimentConfig::for_dim(d);
            local.xi = fresh.xi;
            local.xi_prime = fresh.xi_prime;
        }
    }
    let mut rows = Vec::new();
    let mut ok = true;
    for (k, (a0, a1)) in media.iter().enumerate() {
        let c = check_pair(a0, a1, &local)?;
        println!(
            "pair {k}: identity residual {} (lhs {} rhs {}), |lhs| <= {} : {}, energy {} <= {}",
            format_f64(c.rel_residual),
            format_f64(c.lhs),
            format_f64(c.rhs),
            format_f64(c.bound),
            c.lhs.abs() <= c.bound * (1.0 + PAIRWISE_SLACK) + PAIRWISE_SLACK,
            format_f64(c.energy_difference),
            format_f64(c.energy_bound)
        );
        ok &= c.passed;
        rows.push(vec![
            k.to_string(),
            format_f64(c.lhs),
            format_f64(c.rhs),
            format_f64(c.rel_residual),
            format_f64(c.bound),
            format_f64(c.bound_unperturbed),
            format_f64(c.energy_difference),
            format_f64(c.energy_bound),
            c.passed.to_string(),
        ]);
    }
    let dir = out_dir(g)?;
    write_csv(&dir.join("verify.csv"), &PairCheck::CSV_HEADER, &rows, None)?;
    println!("{}", if ok { "all checks passed" } else { "CHECK FAILED" });
    Ok(Outcome::from_bool(ok))
}

fn cmd_oscillation(g: &GlobalArgs, cfg: &ExperimentConfig, center: Option<&[f64]>, target: Target) -> Result<Outcome> {
    cfg.validate()?;
    let (l, grid) = single_grid(cfg)?;
    let center = center.map_or_else(|| vec![0.0; cfg.dim], <[f64]>::to_vec);
    if center.len() != cfg.dim {
        bail!("centre needs {} coordinates", cfg.dim);
    }
    let medium = PoissonMedium::new(grid, cfg.lambda)?.with_intensity(cfg.intensity);
    let base = medium.sample(&RngStream::sampling(cfg.master_seed));
    let dirs = cfg.directions()?;
    let solver = cfg.solver();
    let probe = OscProbe::new(center.clone(), cfg.osc_radius, cfg.osc_resamples, l)?;
    let report = oscillation_bound_check(&medium, &base, &probe, cfg.master_seed, 0, &dirs, &solver)?;
    let value = match target {
        Target::Ahom => report.oscillation,
        Target::Phi => empirical_oscillation(
            &medium,
            &base,
            &center,
            cfg.osc_radius,
            cfg.osc_resamples,
            cfg.master_seed,
            0,
            OscTarget::PhiAtOrigin,
            &dirs,
            &solver,
        )?,
    };
    let rows: Vec<Vec<String>> =
        report.values.iter().enumerate().map(|(k, v)| vec![k.to_string(), format_f64(*v)]).collect();
    let dir = out_dir(g)?;
    write_csv(&dir.join("oscillation.csv"), &["resample", "ahom"], &rows, None)?;
    println!(
        "osc={} support_cells={} pairwise: {} violations / {} pairs (max ratio {}), diagnostic ratio {}",
        format_f64(value),
        report.support_cells,
        report.pairwise_violations,
        report.pairs_checked,
        format_f64(report.max_pairwise_ratio),
        format_f64(report.diagnostic_ratio)
    );
    Ok(Outcome::from_bool(report.pairwise_bound_holds()))
}
