//! Rank classifiers on a synthetic two-domain well-log table, with and
//! without covariate shift between the domains.

use geoval::experiment::{kendall_between, run_tabular, TabularMode, TabularSpec};
use geoval::ingest::ColumnSchema;
use geoval::synthetic::{wells_csv, WellsSpec, CLASSES};

fn main() -> geoval::Result<()> {
    let dir = std::env::temp_dir().join("geoval-tabular-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("wells.csv");
    std::fs::write(&path, wells_csv(&WellsSpec::default(), 2)?)?;

    let schema = ColumnSchema::new(&["X", "Y", "Z"], &["GR", "SP", "DENS"], "FORMATION", Some("ONSHORE"))?;
    for mode in [TabularMode::Shifted, TabularMode::Resampled] {
        let mut spec = TabularSpec::new(schema.clone(), CLASSES);
        spec.mode = mode;
        spec.block_sides = vec![2500.0, 2500.0, 1e4];
        spec.seed = 2;
        let report = run_tabular(&path, &spec)?;
        println!("== {mode:?}: {} source, {} target rows, {} folds", report.n_source, report.n_target, report.n_folds);
        print!("{}", report.estimates_csv());
        let target = report.ranking("target").order;
        for column in ["cv", "bcv", "drv"] {
            let order = report.ranking(column).order;
            println!("{column}: {order:?}, Kendall tau vs target {:.2}", kendall_between(&target, &order));
        }
    }
    Ok(())
}
