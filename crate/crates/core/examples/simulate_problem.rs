//! Build a source/target learning problem with covariate shift and a
//! correlated pair of fields, and report summary statistics.

use geoval::simulate::{make_problem, simulate, LabelingFunction, Method, ShiftSpec, SimulationSpec};
use geoval::spatial::{RegularGrid, VariogramModel};

fn column_stats(col: ndarray::ArrayView1<f64>) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.sum() / n;
    (mean, col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
}

fn main() -> geoval::Result<()> {
    let grid = RegularGrid::unit(&[50, 50])?;
    let shift = ShiftSpec::new(0.3, 0.5)?;
    let (source, target) = make_problem(shift, 10.0, &grid, LabelingFunction::default(), 7)?;
    for (name, d) in [("source", &source), ("target", &target)] {
        let ones = d.labels().unwrap_or(&[]).iter().filter(|&&y| y == 1).count();
        let (m0, v0) = column_stats(d.features().column(0));
        println!("{name}: {} sites, mean {m0:.3}, variance {v0:.3}, {ones} positive labels", d.len());
    }

    for method in [Method::Lu, Method::Spectral] {
        let pair = simulate(&SimulationSpec {
            grid: RegularGrid::unit(&[30, 30])?,
            variogram: VariogramModel::gaussian(8.0, 1.0)?,
            mean: 0.0,
            n_processes: 2,
            rho: 0.9,
            method,
            seed: 3,
        })?;
        let f = pair.features();
        let (ma, va) = column_stats(f.column(0));
        let (mb, vb) = column_stats(f.column(1));
        let cov = f.column(0).iter().zip(f.column(1)).map(|(a, b)| (a - ma) * (b - mb)).sum::<f64>() / f.nrows() as f64;
        println!("{method:?}: cross-correlation {:.3}", cov / (va * vb).sqrt());
    }
    Ok(())
}
