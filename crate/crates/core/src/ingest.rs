//! CSV ingestion, cleaning, class balancing and normalization for tabular
//! well-log style data.

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::{index, SliceRandom};

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::spatial::SpatialDataset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub coord_columns: Vec<String>,
    pub feature_columns: Vec<String>,
    pub label_column: String,
    pub domain_column: Option<String>,
}

impl ColumnSchema {
    pub fn new<S: AsRef<str>>(coords: &[S], features: &[S], label: &str, domain: Option<&str>) -> Result<Self> {
        let own = |v: &[S]| v.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>();
        let schema = Self {
            coord_columns: own(coords),
            feature_columns: own(features),
            label_column: label.to_string(),
            domain_column: domain.map(str::to_string),
        };
        let mut all: Vec<&String> = schema
            .coord_columns
            .iter()
            .chain(&schema.feature_columns)
            .chain(std::iter::once(&schema.label_column))
            .chain(schema.domain_column.as_ref())
            .collect();
        let total = all.len();
        all.sort();
        all.dedup();
        if all.len() != total {
            return Err(invalid("schema column sets overlap"));
        }
        if schema.feature_columns.is_empty() || schema.coord_columns.is_empty() {
            return Err(invalid("schema needs coordinate and feature columns"));
        }
        Ok(schema)
    }
}

/// Parsed rows. Missing or unparseable numeric cells are NaN; missing text
/// cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub coords: Array2<f64>,
    pub features: Array2<f64>,
    pub labels: Vec<Option<String>>,
    pub domain: Option<Vec<Option<String>>>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> RawTable {
        RawTable {
            coords: self.coords.select(Axis(0), rows),
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i].clone()).collect(),
            domain: self.domain.as_ref().map(|d| rows.iter().map(|&i| d[i].clone()).collect()),
        }
    }

    pub fn concat(&self, other: &RawTable) -> Result<RawTable> {
        let join = |a: &Array2<f64>, b: &Array2<f64>| {
            ndarray::concatenate(Axis(0), &[a.view(), b.view()]).map_err(|e| invalid(e.to_string()))
        };
        Ok(RawTable {
            coords: join(&self.coords, &other.coords)?,
            features: join(&self.features, &other.features)?,
            labels: self.labels.iter().chain(&other.labels).cloned().collect(),
            domain: match (&self.domain, &other.domain) {
                (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
                _ => None,
            },
        })
    }
}

fn parse_cell(s: &str) -> f64 {
    let t = s.trim();
    if t.is_empty() {
        return f64::NAN;
    }
    t.parse().unwrap_or(f64::NAN)
}

fn text_cell(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty() && !t.eq_ignore_ascii_case("nan")).then(|| t.to_string())
}

pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<RawTable> {
    read_csv(std::fs::File::open(path)?, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &ColumnSchema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let coord_idx = schema.coord_columns.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let feat_idx = schema.feature_columns.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let label_idx = find(&schema.label_column)?;
    let domain_idx = schema.domain_column.as_deref().map(find).transpose()?;

    let (mut coords, mut feats, mut labels, mut domain) = (vec![], vec![], vec![], vec![]);
    for rec in rdr.records() {
        let rec = rec?;
        let cell = |i: usize| rec.get(i).unwrap_or("");
        coords.extend(coord_idx.iter().map(|&i| parse_cell(cell(i))));
        feats.extend(feat_idx.iter().map(|&i| parse_cell(cell(i))));
        labels.push(text_cell(cell(label_idx)));
        if let Some(i) = domain_idx {
            domain.push(text_cell(cell(i)));
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::NoDataRows);
    }
    let shape = |cols: usize, v: Vec<f64>| Array2::from_shape_vec((n, cols), v).expect("row-major cells");
    Ok(RawTable {
        coords: shape(coord_idx.len(), coords),
        features: shape(feat_idx.len(), feats),
        labels,
        domain: domain_idx.map(|_| domain),
    })
}

/// Values read as "source" by the default domain predicate.
pub fn is_truthy(value: &str) -> bool {
    matches!(value.trim().to_ascii_lowercase().as_str(), "1" | "1.0" | "true" | "t" | "yes" | "y")
}

/// Splits rows by `source_if` on the domain column. Rows with a missing
/// domain value go to the target side.
pub fn split_domains(
    table: &RawTable,
    schema: &ColumnSchema,
    source_if: impl Fn(&str) -> bool,
) -> Result<(RawTable, RawTable)> {
    let name = schema
        .domain_column
        .as_deref()
        .ok_or_else(|| invalid("schema has no domain column"))?;
    let domain = table.domain.as_ref().ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    let (src, tgt): (Vec<usize>, Vec<usize>) =
        (0..table.len()).partition(|&i| domain[i].as_deref().is_some_and(&source_if));
    if src.is_empty() {
        return Err(Error::EmptyDomain("source"));
    }
    if tgt.is_empty() {
        return Err(Error::EmptyDomain("target"));
    }
    Ok((table.select(&src), table.select(&tgt)))
}

/// Pools both tables and draws two disjoint random subsets with the given
/// fraction of the pool going to the source side.
pub fn resample_domains(
    source: &RawTable,
    target: &RawTable,
    source_fraction: f64,
    seed: u64,
) -> Result<(RawTable, RawTable)> {
    if !(source_fraction > 0.0 && source_fraction < 1.0) {
        return Err(invalid("source fraction must lie in (0, 1)"));
    }
    let pool = source.concat(target)?;
    let n = pool.len();
    let n_src = ((n as f64 * source_fraction).round() as usize).clamp(1, n - 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(seed));
    let (mut a, mut b) = (perm[..n_src].to_vec(), perm[n_src..].to_vec());
    a.sort_unstable();
    b.sort_unstable();
    Ok((pool.select(&a), pool.select(&b)))
}

/// Fraction of rows on the source side, for `resample_domains`.
pub fn source_fraction(source: &RawTable, target: &RawTable) -> f64 {
    source.len() as f64 / (source.len() + target.len()) as f64
}

/// Drops incomplete rows, keeps the two named classes (encoded 0 and 1) and
/// downsamples the majority class to the minority count.
pub fn clean_and_balance(table: &RawTable, classes: (&str, &str), seed: u64) -> Result<SpatialDataset> {
    let complete = |i: usize| {
        table.coords.row(i).iter().chain(table.features.row(i).iter()).all(|v| v.is_finite())
    };
    let mut members: [Vec<usize>; 2] = [vec![], vec![]];
    for i in 0..table.len() {
        let Some(l) = table.labels[i].as_deref() else { continue };
        if !complete(i) {
            continue;
        }
        if l == classes.0 {
            members[0].push(i);
        } else if l == classes.1 {
            members[1].push(i);
        }
    }
    for (m, name) in members.iter().zip([classes.0, classes.1]) {
        if m.is_empty() {
            return Err(Error::ClassAbsent(name.to_string()));
        }
    }
    let keep = members[0].len().min(members[1].len());
    let mut r = rng::seeded(seed);
    let mut rows: Vec<(usize, i64)> = vec![];
    for (c, m) in members.iter().enumerate() {
        let picked: Vec<usize> = if m.len() > keep {
            index::sample(&mut r, m.len(), keep).into_iter().map(|k| m[k]).collect()
        } else {
            m.clone()
        };
        rows.extend(picked.into_iter().map(|i| (i, c as i64)));
    }
    rows.sort_unstable();
    let idx: Vec<usize> = rows.iter().map(|r| r.0).collect();
    SpatialDataset::new(
        table.coords.select(Axis(0), &idx),
        table.features.select(Axis(0), &idx),
        Some(rows.iter().map(|r| r.1).collect()),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

/// Standardizes `train` and every dataset in `apply_to` with the per-feature
/// mean and population standard deviation of `train`. `names` labels the
/// features in the zero-variance error.
pub fn zscore_normalize(
    train: &SpatialDataset,
    apply_to: &[&SpatialDataset],
    names: Option<&[String]>,
) -> Result<(SpatialDataset, Vec<SpatialDataset>, FeatureStats)> {
    if train.is_empty() {
        return Err(invalid("cannot normalize with an empty training set"));
    }
    let f = train.features();
    let mean = f.mean_axis(Axis(0)).expect("nonempty");
    let std = f.std_axis(Axis(0), 0.0);
    for (j, s) in std.iter().enumerate() {
        if !(*s > 0.0) {
            let name = names.and_then(|n| n.get(j)).cloned().unwrap_or_else(|| format!("feature {j}"));
            return Err(Error::ZeroVariance(name));
        }
    }
    let apply = |d: &SpatialDataset| {
        let z = (&d.features() - &mean) / &std;
        d.clone().with_features(z)
    };
    let others = apply_to.iter().map(|d| apply(d)).collect::<Result<Vec<_>>>()?;
    Ok((apply(train)?, others, FeatureStats { mean, std }))
}
