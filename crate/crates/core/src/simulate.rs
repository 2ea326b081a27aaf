//! Gaussian process simulation over regular grids, covariate shift
//! parameterization and synthetic labeling.
//!
//! Two simulation routes are provided:
//!
//! * `Lu`: Cholesky factor of the full site covariance, with diagonal jitter
//!   escalating from `1e-10·sill` to `1e-6·sill`. Limited to 4096 sites.
//! * `Spectral`: circulant embedding. The covariance is laid out on a
//!   periodic grid at least twice the size of the domain along every axis,
//!   its FFT gives the embedding eigenvalues, and the real part of the FFT of
//!   amplitude-scaled complex white noise is an exact realization. Eigenvalues
//!   below `-1e-8·max` reject the embedding (the periodic grid is then grown,
//!   up to eight times the domain); smaller negatives are clamped to zero.
//!
//! Process column `j` always draws from RNG stream `j` of the simulation seed.

use std::sync::Arc;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::rng;
use crate::spatial::{grid_sites, RegularGrid, SpatialDataset, VariogramKind, VariogramModel};

pub const LU_MAX_SITES: usize = 4096;
const JITTER_START: f64 = 1e-10;
const JITTER_CEILING: f64 = 1e-6;
const EMBEDDING_TOL: f64 = 1e-8;
const MAX_PADDING: usize = 8;

/// Mean/variance shift between the source `N(0, I)` and the target
/// `N(μ_t·𝟙, σ_t²·I)` feature distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSpec {
    delta: f64,
    tau: f64,
}

impl ShiftSpec {
    pub fn new(delta: f64, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(invalid(format!("delta = {delta} outside [0, 1]")));
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(invalid(format!("tau = {tau} outside (0, 1]")));
        }
        Ok(Self { delta, tau })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Target mean and standard deviation for a unit source (μ_s = 0, σ_s = 1).
/// The mean shift is normalized so that δ = 1 puts the two 3σ circles in
/// tangential contact along the identity line.
pub fn target_params(shift: ShiftSpec) -> (f64, f64) {
    (3.0 * 2f64.sqrt() * shift.delta, shift.tau)
}

/// `x ↦ sgn(sin(w·‖x‖_p))` with `sgn(0) = +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelingFunction {
    p: u32,
    w: f64,
}

impl LabelingFunction {
    pub fn new(p: u32, w: f64) -> Result<Self> {
        if p != 1 && p != 2 {
            return Err(invalid("labeling norm order must be 1 or 2"));
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(invalid("angular frequency must be positive"));
        }
        Ok(Self { p, w })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

impl Default for LabelingFunction {
    fn default() -> Self {
        Self { p: 1, w: 4.0 }
    }
}

pub fn label(lf: &LabelingFunction, features: &[f64]) -> i64 {
    let norm = match lf.p {
        1 => features.iter().map(|v| v.abs()).sum::<f64>(),
        _ => features.iter().map(|v| v * v).sum::<f64>().sqrt(),
    };
    if (lf.w * norm).sin() >= 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Lu,
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub grid: RegularGrid,
    pub variogram: VariogramModel,
    pub mean: f64,
    pub n_processes: usize,
    /// Correlation between the two columns when `n_processes == 2`.
    pub rho: f64,
    pub method: Method,
    pub seed: u64,
}

impl SimulationSpec {
    fn validate(&self) -> Result<()> {
        if self.n_processes == 0 {
            return Err(invalid("n_processes must be >= 1"));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(invalid("rho must lie in [-1, 1]"));
        }
        if self.rho != 0.0 && self.n_processes != 2 {
            return Err(invalid("rho is only supported for two processes"));
        }
        if !self.mean.is_finite() {
            return Err(invalid("mean must be finite"));
        }
        Ok(())
    }
}

/// Unit-sill, zero-mean field generator bound to one grid and variogram.
/// Building it performs the expensive factorization once; each call to
/// [`FieldSampler::sample`] is then cheap.
#[derive(Clone)]
pub enum FieldSampler {
    Lu {
        n: usize,
        factor: Arc<Vec<f64>>,
    },
    Spectral(Arc<CirculantEmbedding>),
}

impl std::fmt::Debug for FieldSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Lu { n, .. } => write!(f, "FieldSampler::Lu({n} sites)"),
            Self::Spectral(e) => write!(f, "FieldSampler::Spectral({:?})", e.embed_dims),
        }
    }
}

fn unit_model(model: &VariogramModel) -> VariogramModel {
    VariogramModel {
        sill: 1.0,
        ..*model
    }
}

impl FieldSampler {
    pub fn new(grid: &RegularGrid, variogram: &VariogramModel, method: Method) -> Result<Self> {
        match method {
            Method::Lu => Self::lu(&grid_sites(grid), variogram),
            Method::Spectral => Ok(Self::Spectral(Arc::new(CirculantEmbedding::new(
                grid, variogram,
            )?))),
        }
    }

    /// Direct simulation at arbitrary locations.
    pub fn lu(coords: &Array2<f64>, variogram: &VariogramModel) -> Result<Self> {
        let n = coords.nrows();
        if n > LU_MAX_SITES {
            return Err(invalid(format!(
                "LU simulation limited to {LU_MAX_SITES} sites, got {n}"
            )));
        }
        let unit = unit_model(variogram);
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let h = coords
                    .row(i)
                    .iter()
                    .zip(coords.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let c = unit.covariance(h);
                cov[i * n + j] = c;
                cov[j * n + i] = c;
            }
        }
        Ok(Self::Lu {
            n,
            factor: Arc::new(factor_with_jitter(&cov, n)?),
        })
    }

    pub fn n_sites(&self) -> usize {
        match self {
            Self::Lu { n, .. } => *n,
            Self::Spectral(e) => e.n_sites(),
        }
    }

    /// One zero-mean unit-sill realization drawn from `rng`.
    pub fn sample(&self, rng: &mut rng::Rng) -> Vec<f64> {
        match self {
            Self::Lu { n, factor } => {
                let xi: Vec<f64> = (0..*n).map(|_| StandardNormal.sample(rng)).collect();
                (0..*n)
                    .map(|i| linalg::dot(&factor[i * n..i * n + i + 1], &xi[..=i]))
                    .collect()
            }
            Self::Spectral(e) => e.sample(rng),
        }
    }
}

/// Cholesky factor of a unit-sill covariance after the smallest diagonal
/// jitter in `1e-10, 1e-9, …, 1e-6` that makes it succeed.
fn factor_with_jitter(cov: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut jitter = JITTER_START;
    while jitter <= JITTER_CEILING * (1.0 + 1e-9) {
        let mut a = cov.to_vec();
        for i in 0..n {
            a[i * n + i] += jitter;
        }
        if linalg::cholesky_in_place(&mut a, n) {
            return Ok(a);
        }
        jitter *= 10.0;
    }
    Err(Error::CholeskyFailed {
        jitter_ceiling: JITTER_CEILING,
    })
}

/// Eigenvalues of the periodic covariance embedding for one grid.
pub struct CirculantEmbedding {
    dims: Vec<usize>,
    embed_dims: Vec<usize>,
    amplitudes: Vec<f64>,
    planner_ffts: Vec<Arc<dyn rustfft::Fft<f64>>>,
}

impl CirculantEmbedding {
    pub fn new(grid: &RegularGrid, variogram: &VariogramModel) -> Result<Self> {
        let unit = unit_model(variogram);
        let mut factor = 2;
        loop {
            match Self::try_factor(grid, &unit, factor) {
                Ok(e) => return Ok(e),
                Err(err @ Error::EmbeddingNotPsd { .. }) => {
                    if factor >= MAX_PADDING {
                        return Err(err);
                    }
                    factor *= 2;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn try_factor(grid: &RegularGrid, unit: &VariogramModel, factor: usize) -> Result<Self> {
        let dims = grid.dims().to_vec();
        let embed_dims: Vec<usize> = dims
            .iter()
            .map(|&d| if d == 1 { 1 } else { factor * d })
            .collect();
        let total: usize = embed_dims.iter().product();
        let mut planner = FftPlanner::new();
        let ffts: Vec<_> = embed_dims.iter().map(|&m| planner.plan_fft_forward(m)).collect();

        let mut buf: Vec<Complex64> = (0..total)
            .map(|i| {
                let mut rem = i;
                let mut h2 = 0.0;
                for (a, &m) in embed_dims.iter().enumerate() {
                    let k = rem % m;
                    rem /= m;
                    let lag = k.min(m - k) as f64 * grid.spacing()[a];
                    h2 += lag * lag;
                }
                Complex64::new(unit.covariance(h2.sqrt()), 0.0)
            })
            .collect();
        fft_nd(&mut buf, &embed_dims, &ffts);

        let max = buf.iter().map(|c| c.re).fold(f64::MIN, f64::max);
        let min = buf.iter().map(|c| c.re).fold(f64::MAX, f64::min);
        if min < -EMBEDDING_TOL * max {
            return Err(Error::EmbeddingNotPsd {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        let amplitudes = buf
            .iter()
            .map(|c| (c.re.max(0.0) / total as f64).sqrt())
            .collect();
        Ok(Self {
            dims,
            embed_dims,
            amplitudes,
            planner_ffts: ffts,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn embed_dims(&self) -> &[usize] {
        &self.embed_dims
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self
            .amplitudes
            .iter()
            .map(|&a| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(a * re, a * im)
            })
            .collect();
        fft_nd(&mut buf, &self.embed_dims, &self.planner_ffts);
        let n = self.n_sites();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut rem = i;
            let mut idx = 0;
            let mut stride = 1;
            for (&d, &m) in self.dims.iter().zip(&self.embed_dims) {
                idx += (rem % d) * stride;
                rem /= d;
                stride *= m;
            }
            out.push(buf[idx].re);
        }
        out
    }
}

/// In-place multidimensional FFT over a column-major buffer.
fn fft_nd(buf: &mut [Complex64], dims: &[usize], ffts: &[Arc<dyn rustfft::Fft<f64>>]) {
    let total: usize = dims.iter().product();
    let mut stride = 1;
    for (a, &m) in dims.iter().enumerate() {
        if m > 1 {
            let mut line = vec![Complex64::new(0.0, 0.0); m];
            let outer = total / (m * stride);
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * m * stride + s;
                    for k in 0..m {
                        line[k] = buf[base + k * stride];
                    }
                    ffts[a].process(&mut line);
                    for k in 0..m {
                        buf[base + k * stride] = line[k];
                    }
                }
            }
        }
        stride *= m;
    }
}

/// Draws `n_processes` unit fields and combines them into the requested
/// columns: `mean + √sill · field`, with column 2 mixed as
/// `ρ·F₁ + √(1−ρ²)·F₂` before scaling.
pub fn sample_columns(
    sampler: &FieldSampler,
    n_processes: usize,
    rho: f64,
    mean: f64,
    sill: f64,
    seed: u64,
) -> Array2<f64> {
    let n = sampler.n_sites();
    let sd = sill.sqrt();
    let mut unit: Vec<Vec<f64>> = (0..n_processes)
        .map(|j| sampler.sample(&mut rng::stream(seed, j as u64)))
        .collect();
    if n_processes == 2 && rho != 0.0 {
        let c = (1.0 - rho * rho).sqrt();
        let (first, second) = unit.split_at_mut(1);
        for (b, &a) in second[0].iter_mut().zip(&first[0]) {
            *b = rho * a + c * *b;
        }
    }
    Array2::from_shape_fn((n, n_processes), |(i, j)| mean + sd * unit[j][i])
}

pub fn simulate(spec: &SimulationSpec) -> Result<SpatialDataset> {
    spec.validate()?;
    let sampler = FieldSampler::new(&spec.grid, &spec.variogram, spec.method)?;
    let features = sample_columns(
        &sampler,
        spec.n_processes,
        spec.rho,
        spec.mean,
        spec.variogram.sill,
        spec.seed,
    );
    SpatialDataset::new(grid_sites(&spec.grid), features, None)
}

/// Simulation at scattered locations. Only the LU route applies; the
/// spectral route needs a grid.
pub fn simulate_points(
    coords: Array2<f64>,
    variogram: &VariogramModel,
    mean: f64,
    n_processes: usize,
    rho: f64,
    method: Method,
    seed: u64,
) -> Result<SpatialDataset> {
    if method == Method::Spectral {
        return Err(Error::NotAGrid);
    }
    let sampler = FieldSampler::lu(&coords, variogram)?;
    let features = sample_columns(&sampler, n_processes, rho, mean, variogram.sill, seed);
    SpatialDataset::new(coords, features, None)
}

/// Variogram used for a correlation length `r`; `r ≤ 0` maps to a range far
/// below the grid spacing, i.e. spatially uncorrelated sites.
pub fn problem_variogram(r: f64, grid: &RegularGrid) -> VariogramModel {
    let min_spacing = grid.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    let range = if r > 0.0 { r } else { 1e-3 * min_spacing };
    VariogramModel {
        kind: VariogramKind::Gaussian,
        range,
        sill: 1.0,
    }
}

/// Generator of labeled source/target pairs for one `(δ, τ, r)`, with the
/// spectral factorization cached across draws.
#[derive(Debug, Clone)]
pub struct ProblemGenerator {
    shift: ShiftSpec,
    grid: RegularGrid,
    labeling: LabelingFunction,
    sampler: FieldSampler,
    coords: Array2<f64>,
}

impl ProblemGenerator {
    pub fn new(shift: ShiftSpec, r: f64, grid: &RegularGrid, labeling: LabelingFunction) -> Result<Self> {
        let variogram = problem_variogram(r, grid);
        Ok(Self {
            shift,
            grid: grid.clone(),
            labeling,
            sampler: FieldSampler::new(grid, &variogram, Method::Spectral)?,
            coords: grid_sites(grid),
        })
    }

    pub fn shift(&self) -> ShiftSpec {
        self.shift
    }

    pub fn grid(&self) -> &RegularGrid {
        &self.grid
    }

    pub fn labeling(&self) -> LabelingFunction {
        self.labeling
    }

    fn labeled(&self, mean: f64, sd: f64, seed: u64) -> Result<SpatialDataset> {
        let features = sample_columns(&self.sampler, 2, 0.0, mean, sd * sd, seed);
        let labels = features
            .rows()
            .into_iter()
            .map(|row| label(&self.labeling, row.as_slice().expect("row-major features")))
            .collect();
        SpatialDataset::new(self.coords.clone(), features, Some(labels))
    }

    pub fn source(&self, seed: u64) -> Result<SpatialDataset> {
        self.labeled(0.0, 1.0, seed)
    }

    pub fn target(&self, seed: u64) -> Result<SpatialDataset> {
        let (mu, sigma) = target_params(self.shift);
        self.labeled(mu, sigma, seed)
    }

    pub fn sample(&self, seed: u64) -> Result<(SpatialDataset, SpatialDataset)> {
        Ok((
            self.source(rng::derive_seed(seed, &[0]))?,
            self.target(rng::derive_seed(seed, &[1]))?,
        ))
    }
}

/// One labeled source/target problem over `grid` with two uncorrelated
/// processes sharing the correlation length `r`.
pub fn make_problem(
    shift: ShiftSpec,
    r: f64,
    grid: &RegularGrid,
    labeling: LabelingFunction,
    seed: u64,
) -> Result<(SpatialDataset, SpatialDataset)> {
    ProblemGenerator::new(shift, r, grid, labeling)?.sample(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn target_params_examples() {
        assert_eq!(target_params(ShiftSpec::new(0.0, 1.0).unwrap()), (0.0, 1.0));
        let (mu, s) = target_params(ShiftSpec::new(1.0, 1.0).unwrap());
        assert!((mu - 4.242640687119285).abs() < 1e-12 && s == 1.0);
        let (mu, s) = target_params(ShiftSpec::new(0.5, 0.5).unwrap());
        assert!((mu - 2.1213203435596424).abs() < 1e-12 && s == 0.5);
    }

    #[test]
    fn shift_validation() {
        assert!(ShiftSpec::new(-0.1, 1.0).is_err());
        assert!(ShiftSpec::new(0.5, 0.0).is_err());
        assert!(ShiftSpec::new(0.5, 1.1).is_err());
        assert!(ShiftSpec::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn labeling_examples() {
        let lf = LabelingFunction::new(1, 4.0).unwrap();
        assert_eq!(label(&LabelingFunction::new(2, 7.0).unwrap(), &[0.0, 0.0]), 1);
        assert_eq!(label(&lf, &[0.0, 0.0]), 1);
        // 4·(π/8 + π/8) = π; sin(π) is a tiny positive float.
        assert_eq!(label(&lf, &[PI / 8.0, PI / 8.0]), 1);
        assert_eq!(label(&lf, &[0.3, 0.3]), 1);
        assert_eq!(label(&lf, &[0.5, 0.5]), -1);
        assert!(LabelingFunction::new(3, 1.0).is_err());
    }

    #[test]
    fn label_permutation_invariant() {
        let lf = LabelingFunction::new(2, 3.0).unwrap();
        for (a, b) in [(0.1, 1.7), (-2.0, 0.4), (3.3, -1.1)] {
            assert_eq!(label(&lf, &[a, b]), label(&lf, &[b, a]));
        }
    }

    fn spec(dims: &[usize], range: f64, method: Method, seed: u64) -> SimulationSpec {
        SimulationSpec {
            grid: RegularGrid::unit(dims).unwrap(),
            variogram: VariogramModel::gaussian(range, 1.0).unwrap(),
            mean: 0.0,
            n_processes: 1,
            rho: 0.0,
            method,
            seed,
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = simulate(&spec(&[16, 12], 5.0, Method::Spectral, 3)).unwrap();
        let b = simulate(&spec(&[16, 12], 5.0, Method::Spectral, 3)).unwrap();
        let c = simulate(&spec(&[16, 12], 5.0, Method::Spectral, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn affine_law_for_uncorrelated_sites() {
        for method in [Method::Spectral, Method::Lu] {
            let base = spec(&[20, 20], 0.3, method, 11);
            let unit = simulate(&base).unwrap();
            let shifted = simulate(&SimulationSpec {
                mean: 2.0,
                variogram: VariogramModel::gaussian(0.3, 9.0).unwrap(),
                ..base
            })
            .unwrap();
            for (u, s) in unit.features().iter().zip(shifted.features().iter()) {
                assert_eq!(*s, 2.0 + 3.0 * u);
            }
        }
    }

    #[test]
    fn lu_matches_covariance_empirically() {
        // Neighbouring-site covariance of a range-4 gaussian model on a short
        // transect, averaged over many seeds.
        let coords = Array2::from_shape_fn((6, 2), |(i, j)| if j == 0 { i as f64 } else { 0.0 });
        let model = VariogramModel::gaussian(4.0, 1.0).unwrap();
        let sampler = FieldSampler::lu(&coords, &model).unwrap();
        let runs = 4000;
        let mut c01 = 0.0;
        let mut c00 = 0.0;
        for s in 0..runs {
            let f = sampler.sample(&mut rng::seeded(s));
            c01 += f[0] * f[1];
            c00 += f[0] * f[0];
        }
        c01 /= runs as f64;
        c00 /= runs as f64;
        assert!((c00 - 1.0).abs() < 0.08, "{c00}");
        assert!((c01 - model.covariance(1.0)).abs() < 0.08, "{c01}");
    }

    #[test]
    fn spectral_matches_covariance_empirically() {
        let grid = RegularGrid::unit(&[8, 8]).unwrap();
        let model = VariogramModel::gaussian(5.0, 1.0).unwrap();
        let sampler = FieldSampler::new(&grid, &model, Method::Spectral).unwrap();
        let runs = 3000;
        let mut c = [0.0; 3];
        for s in 0..runs {
            let f = sampler.sample(&mut rng::seeded(s));
            c[0] += f[0] * f[0];
            c[1] += f[0] * f[2];
            c[2] += f[27] * f[27 + 8 * 3];
        }
        let c: Vec<f64> = c.iter().map(|v| v / runs as f64).collect();
        assert!((c[0] - 1.0).abs() < 0.08);
        assert!((c[1] - model.covariance(2.0)).abs() < 0.08);
        assert!((c[2] - model.covariance(3.0)).abs() < 0.08);
    }

    #[test]
    fn lu_guards() {
        let big = spec(&[65, 64], 3.0, Method::Lu, 0);
        assert!(simulate(&big).is_err());
        let coords = Array2::zeros((3, 2));
        let m = VariogramModel::gaussian(2.0, 1.0).unwrap();
        assert!(matches!(
            simulate_points(coords.clone(), &m, 0.0, 1, 0.0, Method::Spectral, 0),
            Err(Error::NotAGrid)
        ));
        // Coincident points: singular, but the jitter rescues it.
        assert!(simulate_points(coords, &m, 0.0, 1, 0.0, Method::Lu, 0).is_ok());
    }

    #[test]
    fn cholesky_failure_names_ceiling() {
        // Eigenvalues 2.2 and -0.2.
        let cov = [1.0, 1.2, 1.2, 1.0];
        match factor_with_jitter(&cov, 2) {
            Err(Error::CholeskyFailed { jitter_ceiling }) => assert_eq!(jitter_ceiling, 1e-6),
            other => panic!("expected failure, got {other:?}"),
        }
        // Singular but PSD: rescued by jitter.
        assert!(factor_with_jitter(&[1.0, 1.0, 1.0, 1.0], 2).is_ok());
    }

    #[test]
    fn cross_correlation_by_mixing() {
        let s = SimulationSpec {
            n_processes: 2,
            rho: 0.9,
            ..spec(&[100, 100], 0.3, Method::Spectral, 5)
        };
        let d = simulate(&s).unwrap();
        let f = d.features();
        let r = pearson(&f.column(0).to_vec(), &f.column(1).to_vec());
        assert!((r - 0.9).abs() < 0.03, "{r}");
        let d0 = simulate(&SimulationSpec { rho: 0.0, ..s.clone() }).unwrap();
        let f0 = d0.features();
        let r0 = pearson(&f0.column(0).to_vec(), &f0.column(1).to_vec());
        assert!(r0.abs() < 0.05, "{r0}");
        assert!(simulate(&SimulationSpec { n_processes: 3, ..s }).is_err());
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn long_range_embedding_grows() {
        let grid = RegularGrid::unit(&[100, 100]).unwrap();
        let m = VariogramModel::gaussian(80.0, 1.0).unwrap();
        let e = CirculantEmbedding::new(&grid, &m).unwrap();
        assert!(e.embed_dims()[0] >= 200);
    }

    #[test]
    fn make_problem_shapes_and_labels() {
        let grid = RegularGrid::unit(&[10, 10]).unwrap();
        let lf = LabelingFunction::default();
        let shift = ShiftSpec::new(0.5, 0.5).unwrap();
        let (s, t) = make_problem(shift, 3.0, &grid, lf, 9).unwrap();
        assert_eq!(s.len(), 100);
        assert_eq!(t.n_features(), 2);
        for (row, &y) in t.features().rows().into_iter().zip(t.labels().unwrap()) {
            assert_eq!(label(&lf, &row.to_vec()), y);
        }
        let (s2, t2) = make_problem(shift, 3.0, &grid, lf, 9).unwrap();
        assert_eq!((s, t), (s2, t2));
    }
}
