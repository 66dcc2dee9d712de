//! Poisson point process on the torus and the two-phase coefficient field it
//! induces: conductivity `λ` inside the union of unit balls around the points,
//! `1` elsewhere.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::cell_solver::CoefficientField;
use crate::error::{HomogError, Result};
use crate::records::format_f64;
use crate::torus_grid::{ball_cells_unchecked, torus_distance, wrap_coordinate, TorusGrid, MAX_DIM};

/// Radius of every inclusion.
pub const INCLUSION_RADIUS: f64 = 1.0;

/// Default ellipticity ratio.
pub const DEFAULT_LAMBDA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Substream {
    Sampling,
    Resampling,
}

impl Substream {
    fn code(self) -> u64 {
        match self {
            Substream::Sampling => 0x5341_4d50,
            Substream::Resampling => 0x5245_5341,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Substream::Sampling => "sampling",
            Substream::Resampling => "resampling",
        }
    }
}

impl std::str::FromStr for Substream {
    type Err = HomogError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sampling" => Ok(Substream::Sampling),
            "resampling" => Ok(Substream::Resampling),
            other => Err(HomogError::Parse(format!("unknown substream label {other:?}"))),
        }
    }
}

/// Counter-based random stream: the triple fully determines the draws,
/// independent of which thread or in which order it is consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
    pub label: Substream,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64, label: Substream) -> Self {
        Self {
            master_seed,
            stream_index,
            label,
        }
    }

    pub fn sampling(master_seed: u64) -> Self {
        Self::new(master_seed, 0, Substream::Sampling)
    }

    pub fn resampling(master_seed: u64, stream_index: u64) -> Self {
        Self::new(master_seed, stream_index, Substream::Resampling)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.label.code().to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_index);
        rng
    }
}

impl fmt::Display for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.master_seed, self.stream_index, self.label.as_str())
    }
}

/// Validated ellipticity ratio, `0 < λ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityParams {
    lambda: f64,
}

impl EllipticityParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(HomogError::InvalidArgument(format!(
                "lambda must lie in (0, 1], got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for EllipticityParams {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
        }
    }
}

/// A realization of the point process; coordinates live in `[-L/2, L/2)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    dim: usize,
    side_length: f64,
    coords: Vec<f64>,
}

impl PointConfiguration {
    pub fn empty(dim: usize, side_length: f64) -> Self {
        Self {
            dim,
            side_length,
            coords: Vec::new(),
        }
    }

    /// Builds a configuration, wrapping every coordinate into the fundamental domain.
    pub fn from_points<P: AsRef<[f64]>>(dim: usize, side_length: f64, points: &[P]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) || !(side_length > 0.0) {
            return Err(HomogError::InvalidArgument(format!(
                "bad configuration shape d={dim} L={side_length}"
            )));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(HomogError::InvalidArgument(format!(
                    "point has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            for &x in p {
                if !x.is_finite() {
                    return Err(HomogError::NonFinite(format!("point coordinate {x}")));
                }
                coords.push(wrap_coordinate(x, side_length));
            }
        }
        Ok(Self {
            dim,
            side_length,
            coords,
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
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Number of points in the region selected by `inside`.
    pub fn count_where(&self, mut inside: impl FnMut(&[f64]) -> bool) -> usize {
        self.points().filter(|p| inside(p)).count()
    }

    /// Writes the line-delimited record format: a header line
    /// `d=<d> L=<L> seed=<master>,<stream>,<label>` followed by one line per point.
    pub fn write_records<W: Write>(&self, mut out: W, stream: Option<&RngStream>) -> std::io::Result<()> {
        let seed = stream.map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(out, "d={} L={} seed={}", self.dim, self.side_length, seed)?;
        for p in self.points() {
            let line: Vec<String> = p.iter().map(|&x| format_f64(x)).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_records<R: BufRead>(input: R) -> Result<(Self, Option<RngStream>)> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| HomogError::Parse("missing header line".into()))?
            .map_err(|e| HomogError::Parse(e.to_string()))?;
        let mut dim = None;
        let mut side = None;
        let mut stream = None;
        for token in header.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| HomogError::Parse(format!("bad header token {token:?}")))?;
            match key {
                "d" => dim = Some(value.parse::<usize>().map_err(|e| HomogError::Parse(e.to_string()))?),
                "L" => side = Some(value.parse::<f64>().map_err(|e| HomogError::Parse(e.to_string()))?),
                "seed" if value == "none" => {}
                "seed" => {
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() != 3 {
                        return Err(HomogError::Parse(format!("bad seed triple {value:?}")));
                    }
                    let parse = |s: &str| s.parse::<u64>().map_err(|e| HomogError::Parse(e.to_string()));
                    stream = Some(RngStream::new(parse(parts[0])?, parse(parts[1])?, parts[2].parse()?));
                }
                _ => return Err(HomogError::Parse(format!("unknown header key {key:?}"))),
            }
        }
        let dim = dim.ok_or_else(|| HomogError::Parse("header lacks d".into()))?;
        let side = side.ok_or_else(|| HomogError::Parse("header lacks L".into()))?;
        let mut points = Vec::new();
        for line in lines {
            let line = line.map_err(|e| HomogError::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let p: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|e| HomogError::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<_>>()?;
            if p.iter().any(|&x| x < -0.5 * side || x >= 0.5 * side) {
                return Err(HomogError::Parse(format!("point {line:?} outside the fundamental domain")));
            }
            points.push(p);
        }
        Ok((Self::from_points(dim, side, &points)?, stream))
    }
}

/// Volume of the Euclidean ball of radius `r` in dimension `d`.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    let unit = match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unsupported dimension {dim}"),
    };
    unit * radius.powi(dim as i32)
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive Poisson mean").sample(rng) as usize
}

/// Density-one Poisson process on the torus of side `L`.
pub fn sample_points(side_length: f64, dim: usize, stream: &RngStream) -> PointConfiguration {
    sample_points_with_intensity(side_length, dim, 1.0, stream)
}

/// Poisson process with the given density; zero density yields the empty configuration.
pub fn sample_points_with_intensity(
    side_length: f64,
    dim: usize,
    intensity: f64,
    stream: &RngStream,
) -> PointConfiguration {
    assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
    let mut rng = stream.rng();
    let n = poisson_count(intensity * side_length.powi(dim as i32), &mut rng);
    let half = 0.5 * side_length;
    let coords = (0..n * dim)
        .map(|_| wrap_coordinate(rng.random_range(-half..half), side_length))
        .collect();
    PointConfiguration {
        dim,
        side_length,
        coords,
    }
}

/// Redraws the process inside the torus ball `B_R(z)` and keeps it outside.
pub fn resample_in_ball(
    config: &PointConfiguration,
    center: &[f64],
    radius: f64,
    stream: &RngStream,
) -> Result<PointConfiguration> {
    resample_in_ball_with_intensity(config, center, radius, 1.0, stream)
}

pub fn resample_in_ball_with_intensity(
    config: &PointConfiguration,
    center: &[f64],
    radius: f64,
    intensity: f64,
    stream: &RngStream,
) -> Result<PointConfiguration> {
    let l = config.side_length;
    let d = config.dim;
    if !(radius > 0.0) || radius > 0.5 * l {
        return Err(HomogError::InvalidArgument(format!(
            "resampling radius must lie in (0, L/2], got {radius}"
        )));
    }
    let mut coords: Vec<f64> = config
        .points()
        .filter(|p| torus_distance(p, &center[..d], l) >= radius)
        .flatten()
        .copied()
        .collect();
    let mut rng = stream.rng();
    let n = poisson_count(intensity * ball_volume(d, radius), &mut rng);
    let mut offset = [0.0; MAX_DIM];
    for _ in 0..n {
        loop {
            let mut r2 = 0.0;
            for o in offset.iter_mut().take(d) {
                *o = rng.random_range(-radius..radius);
                r2 += *o * *o;
            }
            if r2 < radius * radius {
                break;
            }
        }
        coords.extend((0..d).map(|a| wrap_coordinate(center[a] + offset[a], l)));
    }
    Ok(PointConfiguration {
        dim: d,
        side_length: l,
        coords,
    })
}

/// Cell-centre rasterization: `λ` where the centre lies within distance 1 of
/// some point, `1` otherwise; faces get the harmonic mean of their two cells.
pub fn rasterize_coefficient(config: &PointConfiguration, grid: &TorusGrid, lambda: f64) -> CoefficientField {
    assert_eq!(config.dim, grid.dim(), "configuration and grid dimensions differ");
    assert!(
        (config.side_length - grid.side_length()).abs() <= 1e-12 * grid.side_length(),
        "configuration and grid side lengths differ"
    );
    let mut cells = vec![1.0; grid.num_cells()];
    for p in config.points() {
        for c in ball_cells_unchecked(grid, p, INCLUSION_RADIUS) {
            cells[c] = lambda;
        }
    }
    CoefficientField::from_cell_values(*grid, cells).expect("rasterized values are positive")
}

/// Pointwise transpose; scalar multiples of the identity are symmetric, so
/// this is a copy.
pub fn transpose_field(a: &CoefficientField) -> CoefficientField {
    a.clone()
}

/// Stream for the `k`-th conditional resample around lattice site `site`
/// of the realization seeded with `seed`. Streams for `k < M` are shared by
/// every run with at least `M` resamples.
pub fn resample_stream(seed: u64, site: u64, k: u64) -> RngStream {
    RngStream::resampling(seed, (site << 32) | (k & 0xffff_ffff))
}

/// A Poisson medium on a fixed grid: intensity of the point process and the
/// inclusion conductivity. Zero intensity gives the deterministic medium `a ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonMedium {
    pub grid: TorusGrid,
    pub lambda: f64,
    pub intensity: f64,
}

impl PoissonMedium {
    pub fn new(grid: TorusGrid, lambda: f64) -> Result<Self> {
        EllipticityParams::new(lambda)?;
        Ok(Self {
            grid,
            lambda,
            intensity: 1.0,
        })
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.intensity = intensity;
        self
    }

    pub fn sample(&self, stream: &RngStream) -> PointConfiguration {
        sample_points_with_intensity(self.grid.side_length(), self.grid.dim(), self.intensity, stream)
    }

    pub fn rasterize(&self, config: &PointConfiguration) -> CoefficientField {
        rasterize_coefficient(config, &self.grid, self.lambda)
    }

    pub fn resample(
        &self,
        config: &PointConfiguration,
        center: &[f64],
        radius: f64,
        stream: &RngStream,
    ) -> Result<PointConfiguration> {
        resample_in_ball_with_intensity(config, center, radius, self.intensity, stream)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_grid::ball_cells;

    fn grid(d: usize, l: f64) -> TorusGrid {
        TorusGrid::new(d, l, 8).unwrap()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = sample_points(4.0, 2, &RngStream::new(7, 3, Substream::Sampling));
        let b = sample_points(4.0, 2, &RngStream::new(7, 3, Substream::Sampling));
        let c = sample_points(4.0, 2, &RngStream::new(7, 4, Substream::Sampling));
        let e = sample_points(4.0, 2, &RngStream::new(7, 3, Substream::Resampling));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, e);
    }

    #[test]
    fn sampled_points_in_domain() {
        for s in 0..50 {
            let cfg = sample_points(3.0, 3, &RngStream::sampling(s));
            for p in cfg.points() {
                assert!(p.iter().all(|&x| (-1.5..1.5).contains(&x)));
            }
        }
    }

    #[test]
    fn intensity_zero_is_empty() {
        let cfg = sample_points_with_intensity(8.0, 2, 0.0, &RngStream::sampling(1));
        assert!(cfg.is_empty());
    }

    #[test]
    fn poisson_mean_matches_volume() {
        // mean = variance = 16, so 3 standard errors over 10^4 draws is 0.12
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|i| sample_points(4.0, 2, &RngStream::new(11, i, Substream::Sampling)).len())
            .sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 16.0).abs() < 0.12, "mean {mean}");
    }

    #[test]
    fn empty_configuration_frequency() {
        let draws = 10_000;
        let p = (-2.0f64).exp();
        let empty = (0..draws)
            .filter(|&i| sample_points(2.0, 1, &RngStream::new(5, i, Substream::Sampling)).is_empty())
            .count();
        let freq = empty as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "freq {freq} vs {p}");
    }

    #[test]
    fn disjoint_half_counts_uncorrelated() {
        let draws = 10_000u64;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in 0..draws {
            let cfg = sample_points(4.0, 2, &RngStream::new(23, i, Substream::Sampling));
            xs.push(cfg.count_where(|p| p[0] < 0.0) as f64);
            ys.push(cfg.count_where(|p| p[0] >= 0.0) as f64);
        }
        let n = draws as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
        let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n;
        let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n;
        let corr = cov / (vx * vy).sqrt();
        // standard error of a null correlation is 1/sqrt(n)
        assert!(corr.abs() < 3.0 / n.sqrt(), "corr {corr}");
    }

    #[test]
    fn rasterize_empty_is_identity_medium() {
        let g = grid(2, 4.0);
        let a = rasterize_coefficient(&PointConfiguration::empty(2, 4.0), &g, 0.25);
        assert!(a.cell_values().values().iter().all(|&v| v == 1.0));
        assert!(a.face_values().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn rasterize_single_point() {
        let g = grid(1, 8.0);
        let cfg = PointConfiguration::from_points(1, 8.0, &[[0.0]]).unwrap();
        let a = rasterize_coefficient(&cfg, &g, 0.25);
        let at = |x: f64| a.cell_values().values()[g.cell_containing(&[x])];
        assert_eq!(at(0.5), 0.25);
        assert_eq!(at(-0.5), 0.25);
        assert_eq!(at(1.5), 1.0);
        assert_eq!(at(-1.5), 1.0);
    }

    #[test]
    fn rasterize_union_not_sum() {
        let g = grid(2, 8.0);
        let cfg = PointConfiguration::from_points(2, 8.0, &[[-0.5, 0.0], [0.5, 0.0]]).unwrap();
        let a = rasterize_coefficient(&cfg, &g, 0.25);
        let both: Vec<usize> = ball_cells(&g, &[-0.5, 0.0], 1.0)
            .unwrap()
            .into_iter()
            .filter(|c| ball_cells(&g, &[0.5, 0.0], 1.0).unwrap().contains(c))
            .collect();
        assert!(!both.is_empty());
        for c in both {
            assert_eq!(a.cell_values().values()[c], 0.25);
        }
        assert!(a.cell_values().values().iter().all(|&v| v == 0.25 || v == 1.0));
    }

    #[test]
    fn rasterized_values_and_faces_bounded() {
        let g = grid(2, 4.0);
        for s in 0..20 {
            let a = rasterize_coefficient(&sample_points(4.0, 2, &RngStream::sampling(s)), &g, 0.25);
            assert!(a.cell_values().values().iter().all(|&v| v == 0.25 || v == 1.0));
            assert!(a.face_values().values().iter().all(|&v| (0.25..=1.0).contains(&v)));
        }
    }

    #[test]
    fn rasterize_small_torus_wraps() {
        // L = 1.5 < 2: a single inclusion covers the whole torus
        let g = TorusGrid::new(2, 1.5, 8).unwrap();
        let cfg = PointConfiguration::from_points(2, 1.5, &[[0.0, 0.0]]).unwrap();
        let a = rasterize_coefficient(&cfg, &g, 0.5);
        assert!(a.cell_values().values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn resample_noop_and_full_replacement() {
        let base = PointConfiguration::from_points(2, 8.0, &[[3.0, 3.0], [-3.0, 2.5]]).unwrap();
        // zero intensity inside an empty ball: nothing changes
        let same = resample_in_ball_with_intensity(&base, &[0.0, 0.0], 1.0, 0.0, &RngStream::resampling(1, 0)).unwrap();
        assert_eq!(same, base);

        let inside = PointConfiguration::from_points(2, 8.0, &[[0.1, 0.2], [-0.3, 0.0], [0.5, -0.5]]).unwrap();
        for k in 0..20 {
            let out = resample_in_ball(&inside, &[0.0, 0.0], 2.0, &RngStream::resampling(3, k)).unwrap();
            for p in out.points() {
                for q in inside.points() {
                    assert_ne!(p, q);
                }
                assert!(torus_distance(p, &[0.0, 0.0], 8.0) < 2.0);
            }
        }
        assert!(resample_in_ball(&inside, &[0.0, 0.0], 4.5, &RngStream::resampling(3, 0)).is_err());
    }

    #[test]
    fn resample_preserves_outside_points() {
        let base = sample_points(8.0, 2, &RngStream::sampling(99));
        let z = [1.0, -2.0];
        let out = resample_in_ball(&base, &z, 1.5, &RngStream::resampling(99, 0)).unwrap();
        let outside = |c: &PointConfiguration| -> Vec<Vec<f64>> {
            c.points().filter(|p| torus_distance(p, &z, 8.0) >= 1.5).map(|p| p.to_vec()).collect()
        };
        assert_eq!(outside(&base), outside(&out));
    }

    #[test]
    fn resample_count_matches_ball_volume() {
        let base = sample_points(8.0, 2, &RngStream::sampling(4));
        let r = 1.5;
        let z = [2.0, 3.5];
        let draws = 10_000u64;
        let total: usize = (0..draws)
            .map(|k| {
                resample_in_ball(&base, &z, r, &RngStream::resampling(4, k))
                    .unwrap()
                    .count_where(|p| torus_distance(p, &z, 8.0) < r)
            })
            .sum();
        let vol = ball_volume(2, r);
        let mean = total as f64 / draws as f64;
        assert!((mean - vol).abs() < 3.0 * (vol / draws as f64).sqrt(), "{mean} vs {vol}");
    }

    #[test]
    fn resample_changes_field_only_near_ball() {
        let g = grid(2, 8.0);
        for s in 0..10 {
            let base = sample_points(8.0, 2, &RngStream::sampling(s));
            let z = [0.7, -1.3];
            let r = 1.0;
            let out = resample_in_ball(&base, &z, r, &RngStream::resampling(s, 0)).unwrap();
            let a0 = rasterize_coefficient(&base, &g, 0.25);
            let a1 = rasterize_coefficient(&out, &g, 0.25);
            for c in 0..g.num_cells() {
                if torus_distance(&g.cell_center(c)[..2], &z, 8.0) >= r + INCLUSION_RADIUS {
                    assert_eq!(a0.cell_values().values()[c], a1.cell_values().values()[c]);
                }
            }
        }
    }

    #[test]
    fn transpose_is_identity_and_involution() {
        let g = grid(2, 4.0);
        let a = rasterize_coefficient(&sample_points(4.0, 2, &RngStream::sampling(8)), &g, 0.25);
        assert_eq!(transpose_field(&a), a);
        assert_eq!(transpose_field(&transpose_field(&a)), a);
        let c = CoefficientField::constant(g, 0.6);
        assert_eq!(transpose_field(&c), c);
    }

    #[test]
    fn record_format_roundtrip() {
        let stream = RngStream::new(7, 2, Substream::Sampling);
        let cfg = sample_points(4.0, 2, &stream);
        let mut buf = Vec::new();
        cfg.write_records(&mut buf, Some(&stream)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("d=2 L=4 seed=7,2,sampling\n"));
        let (back, s) = PointConfiguration::read_records(&buf[..]).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(s, Some(stream));
    }
}
