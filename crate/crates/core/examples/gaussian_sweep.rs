//! Small (delta, tau, r) sweep on a 30x30 grid, printed as CSV.

use geoval::experiment::{parse_linspace, run_sweep, sweep_csv, SweepSpec};
use geoval::models::ModelKind;

fn main() -> geoval::Result<()> {
    let spec = SweepSpec {
        deltas: parse_linspace("0:1:3")?,
        taus: parse_linspace("0.5:1:2")?,
        ranges: vec![0.0, 10.0],
        grid_dims: vec![30, 30],
        models: vec![ModelKind::Knn, ModelKind::DecisionTree],
        n_mc: 10,
        block_side: 10.0,
        ..SweepSpec::default()
    };
    print!("{}", sweep_csv(&run_sweep(&spec)?));
    Ok(())
}
