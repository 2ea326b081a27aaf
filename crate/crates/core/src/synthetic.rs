//! Synthetic two-domain well-log tables for exercising the tabular workflow.

use std::fmt::Write as _;

use crate::error::Result;
use crate::rng::derive_seed;
use crate::simulate::{sample_columns, FieldSampler, Method};
use crate::spatial::{grid_sites, RegularGrid, VariogramModel};

/// Layout and label mechanics of a synthetic survey. Both domains share one
/// labeling rule, `GR > SP` flipped inside a disc and on a smooth spatial
/// mask. The target domain sits elsewhere with `GR` and `SP` both offset by
/// `target_shift` along the class boundary and narrowed to `target_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct WellsSpec {
    pub source_dims: [usize; 2],
    pub target_dims: [usize; 2],
    /// Metres between neighbouring sites.
    pub spacing: f64,
    /// Correlation length of every log, in sites.
    pub range_sites: f64,
    pub target_shift: f64,
    /// Offset of the label-free `DENS` log in the target domain.
    pub nuisance_shift: f64,
    /// Standard deviation of the target `GR` and `SP` logs.
    pub target_scale: f64,
    /// Labels flip inside this radius around the origin of log space.
    pub disc_radius: f64,
    /// Fraction of sites whose label is flipped by a smooth spatial mask.
    pub noise_rate: f64,
}

impl Default for WellsSpec {
    fn default() -> Self {
        Self {
            source_dims: [60, 60],
            target_dims: [40, 40],
            spacing: 250.0,
            range_sites: 4.0,
            target_shift: 1.2,
            nuisance_shift: 0.0,
            target_scale: 0.5,
            disc_radius: 0.8,
            noise_rate: 0.1,
        }
    }
}

pub const CLASSES: (&str, &str) = ("MANGANUI", "URENUI");

struct Domain {
    coords: ndarray::Array2<f64>,
    logs: ndarray::Array2<f64>,
    labels: Vec<bool>,
}

fn domain(spec: &WellsSpec, dims: [usize; 2], origin_x: f64, shift: [f64; 2], scale: f64, seed: u64) -> Result<Domain> {
    let grid = RegularGrid::new(dims.to_vec(), vec![spec.spacing; 2], vec![origin_x, 0.0])?;
    let variogram = VariogramModel::gaussian(spec.range_sites * spec.spacing, 1.0)?;
    let sampler = FieldSampler::new(&grid, &variogram, Method::Spectral)?;
    let mut logs = sample_columns(&sampler, 3, 0.0, 0.0, 1.0, derive_seed(seed, &[0]));
    logs.slice_mut(ndarray::s![.., ..2]).mapv_inplace(|v| scale * v + shift[0]);
    logs.column_mut(2).mapv_inplace(|v| v + shift[1]);
    let mask = sample_columns(&sampler, 1, 0.0, 0.0, 1.0, derive_seed(seed, &[1]));
    let mut sorted = mask.column(0).to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut_at = ((1.0 - spec.noise_rate) * sorted.len() as f64) as usize;
    let cut = sorted.get(cut_at).copied().unwrap_or(f64::INFINITY);
    let labels = logs
        .rows()
        .into_iter()
        .zip(mask.column(0))
        .map(|(x, &m)| {
            let inside = x[0] * x[0] + x[1] * x[1] < spec.disc_radius * spec.disc_radius;
            (x[0] > x[1]) ^ inside ^ (m > cut)
        })
        .collect();
    let mut coords = grid_sites(&grid);
    let depth = sample_columns(&sampler, 1, 0.0, 0.0, 1.0, derive_seed(seed, &[2]));
    let mut with_z = ndarray::Array2::zeros((coords.nrows(), 3));
    with_z.slice_mut(ndarray::s![.., ..2]).assign(&coords);
    with_z.column_mut(2).assign(&depth.column(0).mapv(|z| 1200.0 + 100.0 * z.tanh()));
    coords = with_z;
    Ok(Domain { coords, logs, labels })
}

/// CSV text with columns `X,Y,Z,GR,SP,DENS,FORMATION,ONSHORE`; onshore rows
/// are the source domain.
pub fn wells_csv(spec: &WellsSpec, seed: u64) -> Result<String> {
    let gap = (spec.source_dims[0] as f64 + 20.0) * spec.spacing;
    let parts = [
        (domain(spec, spec.source_dims, 0.0, [0.0; 2], 1.0, derive_seed(seed, &[0]))?, 1),
        (domain(spec, spec.target_dims, gap, [spec.target_shift, spec.nuisance_shift], spec.target_scale, derive_seed(seed, &[1]))?, 0),
    ];
    let mut out = String::from("X,Y,Z,GR,SP,DENS,FORMATION,ONSHORE\n");
    for (d, onshore) in &parts {
        for i in 0..d.labels.len() {
            let c = d.coords.row(i);
            let x = d.logs.row(i);
            let name = if d.labels[i] { CLASSES.1 } else { CLASSES.0 };
            let _ = writeln!(out, "{},{},{},{},{},{},{name},{onshore}", c[0], c[1], c[2], x[0], x[1], x[2]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        let spec = WellsSpec {
            source_dims: [10, 10],
            target_dims: [5, 6],
            ..WellsSpec::default()
        };
        let csv = wells_csv(&spec, 3).unwrap();
        assert_eq!(csv.lines().count(), 1 + 100 + 30);
        assert_eq!(csv.lines().filter(|l| l.ends_with(",1")).count(), 100);
        assert_eq!(csv, wells_csv(&spec, 3).unwrap());
    }
}
