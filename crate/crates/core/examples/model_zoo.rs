//! Train every classifier on one source sample and score it on the target.

use geoval::models::{zero_one_error, ModelKind};
use geoval::simulate::{make_problem, LabelingFunction, ShiftSpec};
use geoval::spatial::RegularGrid;

fn main() -> geoval::Result<()> {
    let grid = RegularGrid::unit(&[40, 40])?;
    let (source, target) = make_problem(ShiftSpec::new(0.1, 0.6)?, 0.0, &grid, LabelingFunction::default(), 5)?;
    let (ys, yt) = (source.labels().unwrap_or(&[]), target.labels().unwrap_or(&[]));
    println!("model,source_error,target_error");
    for kind in ModelKind::ALL {
        let mut model = kind.build(0);
        model.train(source.features(), ys)?;
        let src = zero_one_error(&model.predict(source.features())?, ys);
        let tgt = zero_one_error(&model.predict(target.features())?, yt);
        println!("{kind},{src:.4},{tgt:.4}");
    }
    Ok(())
}
