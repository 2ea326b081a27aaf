//! Simulate a Gaussian field, bin its empirical variogram and fit the range.

use geoval::simulate::{simulate, Method, SimulationSpec};
use geoval::spatial::{empirical_variogram, fit_range, RegularGrid, VariogramKind, VariogramModel};

fn main() -> geoval::Result<()> {
    let spec = SimulationSpec {
        grid: RegularGrid::unit(&[100, 100])?,
        variogram: VariogramModel::gaussian(20.0, 1.0)?,
        mean: 0.0,
        n_processes: 1,
        rho: 0.0,
        method: Method::Spectral,
        seed: 42,
    };
    let field = simulate(&spec)?;
    let ev = empirical_variogram(&field, 0, 25, 50.0)?;
    println!("lag,gamma,pairs");
    for (lag, gamma, pairs) in ev.occupied() {
        println!("{lag:.1},{gamma:.4},{pairs}");
    }
    let fit = fit_range(&ev, VariogramKind::Gaussian)?;
    println!("fitted range {:.2}, sill {:.3} (true 20, 1)", fit.model.range, fit.model.sill);
    Ok(())
}
