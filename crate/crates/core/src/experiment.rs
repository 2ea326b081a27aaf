//! Experiment drivers: the Gaussian shift sweep, the two-domain tabular
//! ranking workflow, and rank statistics.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dre::LsifConfig;
use crate::error::{invalid, Result};
use crate::ingest::{self, ColumnSchema};
use crate::models::{zero_one_error, Classifier, ModelKind};
use crate::rng::derive_seed;
use crate::shiftfns::{self, ShiftConfig};
use crate::simulate::{LabelingFunction, ProblemGenerator, ShiftSpec};
use crate::spatial::{RegularGrid, SpatialDataset};
use crate::validate::{self, ErrorEstimate, FoldPartition};

/// Parses `a:b:n` into `n` evenly spaced values from `a` to `b` inclusive.
pub fn parse_linspace(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || invalid(format!("expected a:b:n, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    })
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| invalid(format!("bad number `{v}` in `{s}`"))))
        .collect()
}

/// Parses `100x100` (or `20x20x10`) grid dimensions.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X'])
        .map(|v| v.trim().parse().map_err(|_| invalid(format!("bad grid dimensions `{s}`"))))
        .collect()
}

pub fn parse_models(s: &str) -> Result<Vec<ModelKind>> {
    s.split(',').map(|m| m.trim().parse()).collect()
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub deltas: Vec<f64>,
    pub taus: Vec<f64>,
    pub ranges: Vec<f64>,
    pub grid_dims: Vec<usize>,
    pub labeling: LabelingFunction,
    pub models: Vec<ModelKind>,
    pub n_mc: usize,
    pub block_side: f64,
    pub lsif: LsifConfig,
    pub l: f64,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            deltas: parse_linspace("0:1:5").expect("literal"),
            taus: parse_linspace("0.2:1:5").expect("literal"),
            ranges: vec![0.0, 10.0, 20.0],
            grid_dims: vec![100, 100],
            labeling: LabelingFunction::default(),
            models: vec![ModelKind::Knn, ModelKind::DecisionTree],
            n_mc: 100,
            block_side: 20.0,
            lsif: LsifConfig::default(),
            l: 1.0,
            seed: 0,
        }
    }
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.deltas.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(invalid("deltas must lie in [0, 1]"));
        }
        if self.taus.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(invalid("taus must lie in (0, 1]"));
        }
        if self.ranges.iter().any(|r| !(*r >= 0.0)) {
            return Err(invalid("ranges must be nonnegative"));
        }
        if self.n_mc == 0 {
            return Err(invalid("need at least one Monte-Carlo realization"));
        }
        if self.models.is_empty() {
            return Err(invalid("no models"));
        }
        if !(self.block_side > 0.0) {
            return Err(invalid("block side must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub delta: f64,
    pub tau: f64,
    pub r: f64,
    pub model: ModelKind,
    pub config: ShiftConfig,
    pub novelty: f64,
    pub kl: f64,
    pub jaccard: f64,
    pub cv: f64,
    pub bcv: f64,
    pub drv: f64,
    pub drv_ok: bool,
    pub true_error: f64,
    pub n_folds: usize,
}

pub const SWEEP_HEADER: &str = "delta,tau,r,model,config,novelty,kl,jaccard,cv,bcv,drv,drv_status,true_error";

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.delta,
            self.tau,
            self.r,
            self.model,
            self.config,
            self.novelty,
            self.kl,
            self.jaccard,
            self.cv,
            self.bcv,
            self.drv,
            if self.drv_ok { "ok" } else { "unstable" },
            self.true_error
        )
    }
}

fn factory(kind: ModelKind, seed: u64) -> impl Fn(usize) -> Box<dyn Classifier> + Sync {
    move |fold| kind.build(derive_seed(seed, &[fold as u64]))
}

fn train_on(kind: ModelKind, seed: u64, data: &SpatialDataset) -> Result<Box<dyn Classifier>> {
    let mut m = kind.build(seed);
    m.train(data.features(), data.labels().ok_or_else(|| invalid("unlabeled data"))?)?;
    Ok(m)
}

struct Cell {
    gen: usize,
    model: usize,
    seed: u64,
}

/// Runs every `(δ, τ, r, model)` cell. Rows come back in nested loop order
/// (δ outermost, model innermost) regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let grid = RegularGrid::unit(&spec.grid_dims)?;
    let mut shapes = vec![];
    for (i, &d) in spec.deltas.iter().enumerate() {
        for (j, &t) in spec.taus.iter().enumerate() {
            for (k, &r) in spec.ranges.iter().enumerate() {
                shapes.push(([i, j, k], ShiftSpec::new(d, t)?, r));
            }
        }
    }
    let generators = shapes
        .par_iter()
        .map(|(_, shift, r)| ProblemGenerator::new(*shift, *r, &grid, spec.labeling))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<Cell> = shapes
        .iter()
        .enumerate()
        .flat_map(|(g, (idx, _, _))| {
            (0..spec.models.len()).map(move |m| Cell {
                gen: g,
                model: m,
                seed: derive_seed(spec.seed, &[idx[0] as u64, idx[1] as u64, idx[2] as u64, m as u64]),
            })
        })
        .collect();
    let block_sides = vec![spec.block_side; grid.ndim()];
    cells
        .par_iter()
        .map(|c| run_cell(&generators[c.gen], shapes[c.gen].2, spec.models[c.model], &block_sides, spec, c.seed))
        .collect()
}

fn run_cell(
    generator: &ProblemGenerator,
    r: f64,
    kind: ModelKind,
    block_sides: &[f64],
    spec: &SweepSpec,
    seed: u64,
) -> Result<ResultRow> {
    let shift = generator.shift();
    let (source, target) = generator.sample(derive_seed(seed, &[0]))?;
    let model_seed = derive_seed(seed, &[4]);
    let make = factory(kind, model_seed);

    let blocks = validate::block_folds(source.coords(), block_sides, 0.0)?;
    let k = blocks.len();
    let random = validate::random_folds(source.len(), k, derive_seed(seed, &[1]))?;
    let cv = validate::iwcv(&make, &source, &random, None, 0.0)?;
    let bcv = validate::iwcv(&make, &source, &blocks, None, 0.0)?;
    let lsif = LsifConfig {
        seed: derive_seed(seed, &[2]),
        ..spec.lsif
    };
    let drv = validate::estimate_drv(&make, &source, target.features(), &lsif, &random, spec.l)?;

    let trained = train_on(kind, model_seed, &source)?;
    let true_error = validate::true_error(trained.as_ref(), generator, spec.n_mc, derive_seed(seed, &[3]))?;

    Ok(ResultRow {
        delta: shift.delta(),
        tau: shift.tau(),
        r,
        model: kind,
        config: shiftfns::classify(shift),
        novelty: shiftfns::novelty(shift),
        kl: shiftfns::kl(shift),
        jaccard: shiftfns::jaccard(shift),
        cv: cv.value,
        bcv: bcv.value,
        drv: drv.value,
        drv_ok: drv.is_ok(),
        true_error,
        n_folds: k,
    })
}

pub fn sweep_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn write_sweep(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, sweep_csv(rows))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TabularMode {
    Shifted,
    Resampled,
}

impl std::str::FromStr for TabularMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shifted" => Ok(Self::Shifted),
            "resampled" => Ok(Self::Resampled),
            other => Err(invalid(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TabularSpec {
    pub schema: ColumnSchema,
    pub mode: TabularMode,
    pub classes: (String, String),
    pub block_sides: Vec<f64>,
    /// Random CV folds; `None` uses the block count of the source.
    pub k: Option<usize>,
    pub dead_zone_radius: f64,
    pub lsif: LsifConfig,
    pub l: f64,
    pub models: Vec<ModelKind>,
    pub seed: u64,
}

impl TabularSpec {
    pub fn new(schema: ColumnSchema, classes: (&str, &str)) -> Self {
        Self {
            block_sides: vec![10_000.0, 10_000.0, 500.0][..schema.coord_columns.len().min(3)].to_vec(),
            schema,
            mode: TabularMode::Shifted,
            classes: (classes.0.to_string(), classes.1.to_string()),
            k: None,
            dead_zone_radius: 0.0,
            lsif: LsifConfig::default(),
            l: 1.0,
            models: ModelKind::ALL.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEstimates {
    pub model: ModelKind,
    pub source_error: f64,
    pub target_error: f64,
    pub cv: f64,
    pub bcv: f64,
    pub drv: ErrorEstimate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    pub order: Vec<String>,
    pub excluded: Vec<String>,
}

/// Ascending-error order; ties by name. Non-finite entries are excluded.
pub fn emit_rank(estimates: &[(String, f64)]) -> Ranking {
    let mut finite: Vec<&(String, f64)> = estimates.iter().filter(|(_, v)| v.is_finite()).collect();
    finite.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut excluded: Vec<String> = estimates
        .iter()
        .filter(|(_, v)| !v.is_finite())
        .map(|(n, _)| n.clone())
        .collect();
    excluded.sort();
    Ranking {
        order: finite.into_iter().map(|(n, _)| n.clone()).collect(),
        excluded,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularReport {
    pub estimates: Vec<ModelEstimates>,
    pub n_source: usize,
    pub n_target: usize,
    pub n_folds: usize,
}

impl TabularReport {
    pub fn ranking(&self, column: &str) -> Ranking {
        let pick = |e: &ModelEstimates| match column {
            "source" => e.source_error,
            "target" => e.target_error,
            "cv" => e.cv,
            "bcv" => e.bcv,
            "drv" => e.drv.value,
            other => panic!("unknown column `{other}`"),
        };
        emit_rank(
            &self
                .estimates
                .iter()
                .map(|e| (e.model.name().to_string(), pick(e)))
                .collect::<Vec<_>>(),
        )
    }

    pub fn estimates_csv(&self) -> String {
        let mut out = String::from("model,source_error,target_error,cv,bcv,drv,drv_status\n");
        for e in &self.estimates {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.model, e.source_error, e.target_error, e.cv, e.bcv, e.drv.value, e.drv.status
            );
        }
        out
    }

    /// One row per rank position, one column per estimator, then a final
    /// row listing models excluded from each column.
    pub fn ranks_csv(&self) -> String {
        let cols = ["target", "cv", "bcv", "drv"];
        let ranks: Vec<Ranking> = cols.iter().map(|c| self.ranking(c)).collect();
        let mut out = String::from("rank,target,cv,bcv,drv\n");
        for pos in 0..self.estimates.len() {
            let cells: Vec<&str> = ranks.iter().map(|r| r.order.get(pos).map_or("", String::as_str)).collect();
            let _ = writeln!(out, "{},{}", pos + 1, cells.join(","));
        }
        let excl: Vec<String> = ranks.iter().map(|r| r.excluded.join(";")).collect();
        let _ = writeln!(out, "excluded,{}", excl.join(","));
        out
    }

    pub fn write(&self, prefix: &str) -> Result<(PathBuf, PathBuf)> {
        let est = PathBuf::from(format!("{prefix}_estimates.csv"));
        let rank = PathBuf::from(format!("{prefix}_ranks.csv"));
        std::fs::File::create(&est)?.write_all(self.estimates_csv().as_bytes())?;
        std::fs::File::create(&rank)?.write_all(self.ranks_csv().as_bytes())?;
        Ok((est, rank))
    }
}

/// Loads, splits, balances and normalizes a two-domain table, then scores
/// every model with each estimator and against the held-out target labels.
pub fn run_tabular(csv_path: impl AsRef<Path>, spec: &TabularSpec) -> Result<TabularReport> {
    let table = ingest::load_csv(csv_path, &spec.schema)?;
    run_tabular_table(&table, spec)
}

pub fn run_tabular_table(table: &ingest::RawTable, spec: &TabularSpec) -> Result<TabularReport> {
    let (mut src, mut tgt) = ingest::split_domains(table, &spec.schema, ingest::is_truthy)?;
    if spec.mode == TabularMode::Resampled {
        let frac = ingest::source_fraction(&src, &tgt);
        (src, tgt) = ingest::resample_domains(&src, &tgt, frac, derive_seed(spec.seed, &[0]))?;
    }
    let classes = (spec.classes.0.as_str(), spec.classes.1.as_str());
    let source = ingest::clean_and_balance(&src, classes, derive_seed(spec.seed, &[1]))?;
    let target = ingest::clean_and_balance(&tgt, classes, derive_seed(spec.seed, &[2]))?;
    let (source, normalized, _) =
        ingest::zscore_normalize(&source, &[&target], Some(&spec.schema.feature_columns))?;
    let target = normalized.into_iter().next().expect("one target");

    let blocks = validate::block_folds(source.coords(), &spec.block_sides, spec.dead_zone_radius)?;
    let k = spec.k.unwrap_or(blocks.len());
    let random = validate::random_folds(source.len(), k, derive_seed(spec.seed, &[3]))?;
    let lsif = LsifConfig {
        seed: derive_seed(spec.seed, &[4]),
        ..spec.lsif
    };
    let estimates = spec
        .models
        .par_iter()
        .enumerate()
        .map(|(m, &kind)| score_model(kind, derive_seed(spec.seed, &[5, m as u64]), &source, &target, &random, &blocks, &lsif, spec.l))
        .collect::<Result<Vec<_>>>()?;
    Ok(TabularReport {
        estimates,
        n_source: source.len(),
        n_target: target.len(),
        n_folds: k,
    })
}

#[allow(clippy::too_many_arguments)]
fn score_model(
    kind: ModelKind,
    seed: u64,
    source: &SpatialDataset,
    target: &SpatialDataset,
    random: &FoldPartition,
    blocks: &FoldPartition,
    lsif: &LsifConfig,
    l: f64,
) -> Result<ModelEstimates> {
    let make = factory(kind, seed);
    let trained = train_on(kind, seed, source)?;
    let err = |d: &SpatialDataset| -> Result<f64> {
        Ok(zero_one_error(&trained.predict(d.features())?, d.labels().expect("labeled")))
    };
    Ok(ModelEstimates {
        model: kind,
        source_error: err(source)?,
        target_error: err(target)?,
        cv: validate::iwcv(&make, source, random, None, 0.0)?.value,
        bcv: validate::iwcv(&make, source, blocks, None, 0.0)?.value,
        drv: validate::estimate_drv(&make, source, target.features(), lsif, random, l)?,
    })
}

/// Ranks with ties sharing their average position, starting at 1.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Kendall's tau-b.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    let (mut conc, mut disc, mut tie_a, mut tie_b) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let s = (a[i] - a[j]).signum() * (b[i] - b[j]).signum();
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => {}
                (true, false) => tie_a += 1.0,
                (false, true) => tie_b += 1.0,
                _ if s > 0.0 => conc += 1.0,
                _ => disc += 1.0,
            }
        }
    }
    (conc - disc) / ((conc + disc + tie_a) * (conc + disc + tie_b)).sqrt()
}

/// Kendall's tau between two orderings of the same names.
pub fn kendall_between(reference: &[String], other: &[String]) -> f64 {
    let pos = |list: &[String], name: &str| list.iter().position(|n| n == name).map(|p| p as f64);
    let (a, b): (Vec<f64>, Vec<f64>) = reference
        .iter()
        .filter_map(|n| Some((pos(reference, n)?, pos(other, n)?)))
        .unzip();
    kendall_tau(&a, &b)
}
