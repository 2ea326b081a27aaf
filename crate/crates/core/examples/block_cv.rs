//! Compare random k-fold CV, block CV with and without a dead zone, and
//! density-ratio CV on one spatially correlated problem.

use geoval::dre::LsifConfig;
use geoval::models::ModelKind;
use geoval::simulate::{LabelingFunction, ProblemGenerator, ShiftSpec};
use geoval::spatial::RegularGrid;
use geoval::validate::{block_folds, estimate_bcv, estimate_cv, estimate_drv, random_folds, true_error};

fn main() -> geoval::Result<()> {
    let grid = RegularGrid::unit(&[50, 50])?;
    let generator = ProblemGenerator::new(ShiftSpec::new(0.2, 0.5)?, 20.0, &grid, LabelingFunction::default())?;
    let (source, target) = generator.sample(11)?;
    let factory = |fold: usize| ModelKind::Knn.build(fold as u64);
    let sides = [20.0, 20.0];
    let k = block_folds(source.coords(), &sides, 0.0)?.len();

    let cv = estimate_cv(&factory, &source, k, 1)?;
    let bcv = estimate_bcv(&factory, &source, &sides, 0.0)?;
    let bcv_dead = estimate_bcv(&factory, &source, &sides, 5.0)?;
    let folds = random_folds(source.len(), k, 1)?;
    let drv = estimate_drv(&factory, &source, target.features(), &LsifConfig::default(), &folds, 1.0)?;

    let mut model = factory(0);
    model.train(source.features(), source.labels().unwrap_or(&[]))?;
    let truth = true_error(model.as_ref(), &generator, 50, 2)?;

    println!("{k} folds");
    println!("cv {:.4}", cv.value);
    println!("bcv {:.4}", bcv.value);
    println!("bcv, dead zone 5 {:.4}", bcv_dead.value);
    println!("drv {:.4} ({})", drv.value, drv.status);
    println!("true error {truth:.4}");
    Ok(())
}
