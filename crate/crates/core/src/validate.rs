//! Fold construction and importance-weighted cross-validation.

use std::fmt;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dre::{fit_ratio_features, LsifConfig};
use crate::error::{invalid, Error, Result};
use crate::models::{zero_one_error, Classifier};
use crate::rng;
use crate::simulate::ProblemGenerator;
use crate::spatial::SpatialDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldStrategy {
    Random,
    Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPartition {
    pub folds: Vec<Fold>,
    pub strategy: FoldStrategy,
}

impl FoldPartition {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }
}

/// Shuffled k-fold split; eval sizes differ by at most one.
pub fn random_folds(n: usize, k: usize, seed: u64) -> Result<FoldPartition> {
    if k < 2 || k > n {
        return Err(invalid(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(seed));
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    let folds = (0..k)
        .map(|j| {
            let len = base + usize::from(j < extra);
            let mut eval = perm[start..start + len].to_vec();
            start += len;
            eval.sort_unstable();
            let mut in_eval = vec![false; n];
            eval.iter().for_each(|&i| in_eval[i] = true);
            let train = (0..n).filter(|&i| !in_eval[i]).collect();
            Fold { train, eval }
        })
        .collect();
    Ok(FoldPartition {
        folds,
        strategy: FoldStrategy::Random,
    })
}

/// Spatial blocks of the given sides anchored at the bounding-box minimum.
/// Each nonempty block is one eval set, in column-major block order. Training
/// sets drop every sample within `dead_zone_radius` of an eval sample.
pub fn block_folds(coords: ArrayView2<f64>, block_sides: &[f64], dead_zone_radius: f64) -> Result<FoldPartition> {
    let (n, d) = coords.dim();
    if block_sides.len() != d {
        return Err(invalid(format!("{} block sides for {d} coordinates", block_sides.len())));
    }
    if block_sides.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(invalid("block sides must be positive"));
    }
    if !(dead_zone_radius >= 0.0) {
        return Err(invalid("dead zone radius must be nonnegative"));
    }
    if n == 0 {
        return Err(invalid("no samples"));
    }
    let lo: Vec<f64> = (0..d)
        .map(|a| coords.column(a).iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..d)
        .map(|a| coords.column(a).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let counts: Vec<usize> = (0..d)
        .map(|a| ((hi[a] - lo[a]) / block_sides[a]).floor() as usize + 1)
        .collect();
    let block_of = |i: usize| -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..d {
            let b = (((coords[[i, a]] - lo[a]) / block_sides[a]).floor() as usize).min(counts[a] - 1);
            idx += b * stride;
            stride *= counts[a];
        }
        idx
    };
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        members.entry(block_of(i)).or_default().push(i);
    }
    if members.len() < 2 {
        return Err(Error::SingleFold);
    }
    let folds = members
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|eval| {
            let excluded = dead_zone(coords, &eval, dead_zone_radius);
            let train = (0..n).filter(|&i| !excluded[i]).collect();
            Fold { train, eval }
        })
        .collect();
    Ok(FoldPartition {
        folds,
        strategy: FoldStrategy::Block,
    })
}

/// Mask of eval samples plus every sample within `radius` of one.
fn dead_zone(coords: ArrayView2<f64>, eval: &[usize], radius: f64) -> Vec<bool> {
    let (n, d) = coords.dim();
    let mut mask = vec![false; n];
    eval.iter().for_each(|&i| mask[i] = true);
    if radius <= 0.0 {
        return mask;
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &i in eval {
        for a in 0..d {
            lo[a] = lo[a].min(coords[[i, a]] - radius);
            hi[a] = hi[a].max(coords[[i, a]] + radius);
        }
    }
    let r2 = radius * radius;
    for j in 0..n {
        if mask[j] || (0..d).any(|a| coords[[j, a]] < lo[a] || coords[[j, a]] > hi[a]) {
            continue;
        }
        mask[j] = eval.iter().any(|&i| {
            (0..d).map(|a| (coords[[i, a]] - coords[[j, a]]).powi(2)).sum::<f64>() <= r2
        });
    }
    mask
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimateStatus {
    Ok,
    Degraded(String),
}

impl fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ok => f.write_str("ok"),
            Self::Degraded(_) => f.write_str("unstable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub value: f64,
    pub per_fold: Vec<f64>,
    pub n_eval: usize,
    pub status: EstimateStatus,
}

impl ErrorEstimate {
    pub fn is_ok(&self) -> bool {
        self.status == EstimateStatus::Ok
    }

    fn degraded(reason: String) -> Self {
        Self {
            value: f64::NAN,
            per_fold: vec![],
            n_eval: 0,
            status: EstimateStatus::Degraded(reason),
        }
    }
}

/// Builds a fresh, untrained model for the given fold index.
pub type ModelFactory<'a> = dyn Fn(usize) -> Box<dyn Classifier> + Sync + 'a;

/// Mean over folds of the per-fold mean of `weight^l × 0-1 loss`.
pub fn iwcv(
    factory: &ModelFactory,
    data: &SpatialDataset,
    folds: &FoldPartition,
    weights: Option<&[f64]>,
    l: f64,
) -> Result<ErrorEstimate> {
    let labels = data.labels().ok_or_else(|| invalid("dataset has no labels"))?;
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(invalid("weights length differs from dataset"));
        }
        if w.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("weights must be nonnegative"));
        }
    }
    if folds.is_empty() {
        return Err(invalid("empty fold partition"));
    }
    for (j, fold) in folds.folds.iter().enumerate() {
        if fold.train.is_empty() {
            return Err(Error::EmptyFold { fold: j, set: "train" });
        }
        if fold.eval.is_empty() {
            return Err(Error::EmptyFold { fold: j, set: "eval" });
        }
    }
    let scale = |i: usize| match weights {
        Some(w) if l != 0.0 => w[i].powf(l),
        _ => 1.0,
    };
    let features = data.features();
    let per_fold = folds
        .folds
        .par_iter()
        .enumerate()
        .map(|(j, fold)| -> Result<f64> {
            let mut model = factory(j);
            let y_train: Vec<i64> = fold.train.iter().map(|&i| labels[i]).collect();
            model.train(features.select(ndarray::Axis(0), &fold.train).view(), &y_train)?;
            let pred = model.predict(features.select(ndarray::Axis(0), &fold.eval).view())?;
            let total: f64 = fold
                .eval
                .iter()
                .zip(&pred)
                .filter(|(&i, &p)| labels[i] != p)
                .map(|(&i, _)| scale(i))
                .sum();
            Ok(total / fold.eval.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ErrorEstimate {
        value: per_fold.iter().sum::<f64>() / per_fold.len() as f64,
        n_eval: folds.folds.iter().map(|f| f.eval.len()).sum(),
        per_fold,
        status: EstimateStatus::Ok,
    })
}

pub fn estimate_cv(factory: &ModelFactory, data: &SpatialDataset, k: usize, seed: u64) -> Result<ErrorEstimate> {
    iwcv(factory, data, &random_folds(data.len(), k, seed)?, None, 0.0)
}

pub fn estimate_bcv(
    factory: &ModelFactory,
    data: &SpatialDataset,
    block_sides: &[f64],
    dead_zone_radius: f64,
) -> Result<ErrorEstimate> {
    iwcv(factory, data, &block_folds(data.coords(), block_sides, dead_zone_radius)?, None, 0.0)
}

/// Density-ratio weighted CV. The ratio is fitted once on all source and
/// target features and reused for every fold. Solver instability yields a
/// degraded estimate with a NaN value instead of an error.
pub fn estimate_drv(
    factory: &ModelFactory,
    source: &SpatialDataset,
    target_features: ArrayView2<f64>,
    lsif: &LsifConfig,
    folds: &FoldPartition,
    l: f64,
) -> Result<ErrorEstimate> {
    if target_features.ncols() != source.n_features() {
        return Err(invalid("target feature dimension differs from source"));
    }
    let ratio = match fit_ratio_features(source.features(), target_features, lsif) {
        Ok(r) => r,
        Err(e @ Error::NumericalInstability { .. }) => return Ok(ErrorEstimate::degraded(e.to_string())),
        Err(e) => return Err(e),
    };
    let weights = ratio.eval_rows(source.features());
    iwcv(factory, source, folds, Some(&weights), l)
}

/// Mean 0-1 loss of a trained model over freshly simulated target sets.
pub fn true_error(
    model: &dyn Classifier,
    generator: &ProblemGenerator,
    n_realizations: usize,
    seed: u64,
) -> Result<f64> {
    if n_realizations == 0 {
        return Err(invalid("need at least one realization"));
    }
    let losses = (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let target = generator.target(rng::derive_seed(seed, &[i]))?;
            let pred = model.predict(target.features())?;
            Ok(zero_one_error(&pred, target.labels().expect("simulated labels")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / n_realizations as f64)
}
