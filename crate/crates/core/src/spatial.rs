//! Spatial domains, located datasets and variograms.
//!
//! The semivariance of a feature `z` at lag `h` is estimated with the
//! Matheron estimator
//!
//! ```text
//! γ̂(h) = 1 / (2 |N(h)|) · Σ_{(u,v) ∈ N(h)} (z(u) − z(v))²
//! ```
//!
//! where `N(h)` holds every unordered pair whose distance falls in the lag bin.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{invalid, Error, Result};

/// Axis-aligned regular grid of 2 or 3 dimensions. Sites are enumerated in
/// column-major order (first axis varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct RegularGrid {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

impl RegularGrid {
    pub fn new(dims: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&dims.len()) {
            return Err(invalid("grid must have 2 or 3 axes"));
        }
        if spacing.len() != dims.len() || origin.len() != dims.len() {
            return Err(invalid("dims, spacing and origin must have equal length"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(invalid("grid dims must be >= 1"));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(invalid("grid spacing must be positive"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(invalid("grid origin must be finite"));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    /// Unit-spaced grid anchored at the origin.
    pub fn unit(dims: &[usize]) -> Result<Self> {
        Self::new(dims.to_vec(), vec![1.0; dims.len()], vec![0.0; dims.len()])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn n_sites(&self) -> usize {
        self.dims.iter().product()
    }

    /// Integer lattice index of linear site `i`.
    pub fn index_to_multi(&self, mut i: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let k = i % d;
                i /= d;
                k
            })
            .collect()
    }

    pub fn multi_to_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.dims)
            .rev()
            .fold(0, |acc, (&k, &d)| acc * d + k)
    }

    pub fn site(&self, i: usize) -> Vec<f64> {
        self.index_to_multi(i)
            .into_iter()
            .zip(self.origin.iter().zip(&self.spacing))
            .map(|(k, (o, s))| o + k as f64 * s)
            .collect()
    }
}

/// Coordinates of every grid site, one row per site in column-major order.
pub fn grid_sites(grid: &RegularGrid) -> Array2<f64> {
    let n = grid.n_sites();
    let d = grid.ndim();
    let mut out = Array2::zeros((n, d));
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        for (j, v) in grid.site(i).into_iter().enumerate() {
            row[j] = v;
        }
    }
    out
}

/// Located samples: coordinates, features and optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDataset {
    coords: Array2<f64>,
    features: Array2<f64>,
    labels: Option<Vec<i64>>,
}

impl SpatialDataset {
    pub fn new(coords: Array2<f64>, features: Array2<f64>, labels: Option<Vec<i64>>) -> Result<Self> {
        if coords.nrows() == 0 {
            return Err(invalid("dataset must have at least one row"));
        }
        if coords.nrows() != features.nrows() {
            return Err(invalid(format!(
                "coords have {} rows but features have {}",
                coords.nrows(),
                features.nrows()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != coords.nrows() {
                return Err(invalid("labels length must equal row count"));
            }
        }
        if coords.iter().chain(features.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("dataset contains non-finite values"));
        }
        Ok(Self {
            coords,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn coords(&self) -> ArrayView2<'_, f64> {
        self.coords.view()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(invalid("labels length must equal row count"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_features(self, features: Array2<f64>) -> Result<Self> {
        Self::new(self.coords, features, self.labels)
    }

    /// Row subset in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            coords: self.coords.select(Axis(0), rows),
            features: self.features.select(Axis(0), rows),
            labels: self
                .labels
                .as_ref()
                .map(|l| rows.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Stacks two datasets with the same column layout.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.coords.ncols() != other.coords.ncols() || self.n_features() != other.n_features() {
            return Err(invalid("datasets have different column layouts"));
        }
        let coords = ndarray::concatenate(Axis(0), &[self.coords.view(), other.coords.view()])
            .map_err(|e| invalid(e.to_string()))?;
        let features = ndarray::concatenate(Axis(0), &[self.features.view(), other.features.view()])
            .map_err(|e| invalid(e.to_string()))?;
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            (None, None) => None,
            _ => return Err(invalid("cannot concatenate labeled with unlabeled data")),
        };
        Self::new(coords, features, labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariogramKind {
    Gaussian,
    Spherical,
    Exponential,
}

/// Nugget-free parametric variogram. `range` is the effective range, the lag
/// at which the model reaches 95% of the sill (exactly the sill for the
/// spherical model).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramModel {
    pub kind: VariogramKind,
    pub range: f64,
    pub sill: f64,
}

impl VariogramModel {
    pub fn new(kind: VariogramKind, range: f64, sill: f64) -> Result<Self> {
        if !(range > 0.0) || !range.is_finite() {
            return Err(invalid("variogram range must be positive"));
        }
        if !(sill > 0.0) || !sill.is_finite() {
            return Err(invalid("variogram sill must be positive"));
        }
        Ok(Self { kind, range, sill })
    }

    pub fn gaussian(range: f64, sill: f64) -> Result<Self> {
        Self::new(VariogramKind::Gaussian, range, sill)
    }

    /// γ(h) / sill.
    fn shape(kind: VariogramKind, range: f64, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let x = h / range;
        match kind {
            VariogramKind::Gaussian => 1.0 - (-3.0 * x * x).exp(),
            VariogramKind::Exponential => 1.0 - (-3.0 * x).exp(),
            VariogramKind::Spherical => {
                if x >= 1.0 {
                    1.0
                } else {
                    1.5 * x - 0.5 * x * x * x
                }
            }
        }
    }

    pub fn gamma(&self, h: f64) -> f64 {
        self.sill * Self::shape(self.kind, self.range, h)
    }

    pub fn covariance(&self, h: f64) -> f64 {
        self.sill - self.gamma(h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalVariogram {
    /// Bin centers.
    pub lags: Vec<f64>,
    /// Semivariance per bin; `NaN` where the bin is empty.
    pub gammas: Vec<f64>,
    pub counts: Vec<usize>,
    pub bin_width: f64,
}

impl EmpiricalVariogram {
    pub fn occupied(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.lags
            .iter()
            .zip(&self.gammas)
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|((&l, &g), &c)| (l, g, c))
    }
}

fn distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Matheron estimator over half-open bins `[kΔ, (k+1)Δ)` with
/// `Δ = max_lag / n_lags`; pairs at distance `≥ max_lag` are discarded.
pub fn empirical_variogram(
    data: &SpatialDataset,
    feature_index: usize,
    n_lags: usize,
    max_lag: f64,
) -> Result<EmpiricalVariogram> {
    let n = data.len();
    if n < 2 {
        return Err(invalid("empirical variogram needs at least two samples"));
    }
    if n_lags == 0 {
        return Err(invalid("n_lags must be >= 1"));
    }
    if !(max_lag > 0.0) || !max_lag.is_finite() {
        return Err(invalid("max_lag must be positive"));
    }
    if feature_index >= data.n_features() {
        return Err(invalid(format!("feature index {feature_index} out of range")));
    }
    let width = max_lag / n_lags as f64;
    let coords = data.coords();
    let z = data.features().column(feature_index).to_owned();

    // Per-row partial sums are reduced in row order so the result does not
    // depend on how rows are scheduled.
    use rayon::prelude::*;
    let rows: Vec<(Vec<f64>, Vec<usize>)> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut sums = vec![0.0; n_lags];
            let mut counts = vec![0usize; n_lags];
            let ci = coords.row(i);
            for j in (i + 1)..n {
                let h = distance(ci, coords.row(j));
                if h >= max_lag {
                    continue;
                }
                let k = ((h / width) as usize).min(n_lags - 1);
                let d = z[i] - z[j];
                sums[k] += d * d;
                counts[k] += 1;
            }
            (sums, counts)
        })
        .collect();

    let mut sums = vec![0.0; n_lags];
    let mut counts = vec![0usize; n_lags];
    for (s, c) in rows {
        for k in 0..n_lags {
            sums[k] += s[k];
            counts[k] += c[k];
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::NoPairs);
    }
    let gammas = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / (2.0 * c as f64) } else { f64::NAN })
        .collect();
    let lags = (0..n_lags).map(|k| (k as f64 + 0.5) * width).collect();
    Ok(EmpiricalVariogram {
        lags,
        gammas,
        counts,
        bin_width: width,
    })
}

/// Result of fitting a parametric model to an empirical variogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramFit {
    pub model: VariogramModel,
    /// Count-weighted sum of squared residuals.
    pub wsse: f64,
    /// The fitted range collapsed below one lag bin: the data show no
    /// resolvable spatial correlation.
    pub degenerate: bool,
}

const FIT_GRID: usize = 200;
const FIT_MAX_ITER: usize = 500;

/// Count-weighted least squares over (range, sill). The sill enters
/// linearly, so it is profiled out in closed form and the range is searched
/// in log space: a coarse scan followed by golden-section refinement.
pub fn fit_range(ev: &EmpiricalVariogram, kind: VariogramKind) -> Result<VariogramFit> {
    let points: Vec<(f64, f64, f64)> = ev
        .occupied()
        .map(|(l, g, c)| (l, g, c as f64))
        .collect();
    if points.len() < 3 {
        return Err(invalid("variogram fit needs at least 3 occupied bins"));
    }

    let profile = |log_range: f64| -> (f64, f64) {
        let range = log_range.exp();
        let (mut num, mut den) = (0.0, 0.0);
        for &(h, g, w) in &points {
            let f = VariogramModel::shape(kind, range, h);
            num += w * g * f;
            den += w * f * f;
        }
        let sill = if den > 0.0 { (num / den).max(f64::MIN_POSITIVE) } else { f64::MIN_POSITIVE };
        let wsse = points
            .iter()
            .map(|&(h, g, w)| {
                let r = sill * VariogramModel::shape(kind, range, h) - g;
                w * r * r
            })
            .sum();
        (wsse, sill)
    };

    let max_lag = points.last().map(|p| p.0).unwrap_or(1.0) + ev.bin_width;
    let lo = (ev.bin_width * 1e-3).ln();
    let hi = (max_lag * 10.0).ln();
    let step = (hi - lo) / (FIT_GRID - 1) as f64;
    let (mut best_k, mut best_val) = (0usize, f64::INFINITY);
    for k in 0..FIT_GRID {
        let (v, _) = profile(lo + k as f64 * step);
        if v < best_val {
            best_val = v;
            best_k = k;
        }
    }
    if !best_val.is_finite() {
        return Err(Error::FitNotConverged {
            iterations: 0,
            best_range: f64::NAN,
            best_sill: f64::NAN,
        });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = lo + best_k.saturating_sub(1) as f64 * step;
    let mut b = lo + (best_k + 1).min(FIT_GRID - 1) as f64 * step;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (profile(c).0, profile(d).0);
    let mut converged = false;
    for _ in 0..FIT_MAX_ITER {
        if (b - a).abs() < 1e-12 {
            converged = true;
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = profile(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = profile(d).0;
        }
    }
    let mut log_range = 0.5 * (a + b);
    let (mut wsse, mut sill) = profile(log_range);
    let grid_log = lo + best_k as f64 * step;
    let (grid_wsse, grid_sill) = profile(grid_log);
    if grid_wsse < wsse {
        log_range = grid_log;
        wsse = grid_wsse;
        sill = grid_sill;
    }
    let range = log_range.exp();
    if !converged {
        return Err(Error::FitNotConverged {
            iterations: FIT_MAX_ITER,
            best_range: range,
            best_sill: sill,
        });
    }
    Ok(VariogramFit {
        model: VariogramModel::new(kind, range, sill)?,
        wsse,
        degenerate: range <= ev.bin_width,
    })
}
