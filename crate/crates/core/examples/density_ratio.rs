//! Fit an LSIF density ratio between a standard normal source and a shifted
//! target, then compare against the exact ratio at a few points.

use ndarray::{array, Array2};
use rand_distr::{Distribution, StandardNormal};

use geoval::dre::{fit_ratio_features, LsifConfig};
use geoval::rng;

fn main() -> geoval::Result<()> {
    let mut r = rng::seeded(1);
    let source = Array2::from_shape_fn((2000, 1), |_| StandardNormal.sample(&mut r));
    let target = Array2::from_shape_fn((2000, 1), |_| {
        let z: f64 = StandardNormal.sample(&mut r);
        0.5 * z + 0.5
    });
    let cfg = LsifConfig {
        b: 20,
        sigma: 0.5,
        lambda: 1e-2,
        ..LsifConfig::default()
    };
    let model = fit_ratio_features(source.view(), target.view(), &cfg)?;
    let exact = |x: f64| {
        let t = (-(x - 0.5f64).powi(2) / (2.0 * 0.25)).exp() / 0.5;
        t / (-x * x / 2.0).exp()
    };
    println!("x,estimated,exact");
    for x in [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5] {
        println!("{x},{:.3},{:.3}", model.eval(array![x].view()), exact(x));
    }
    let w = model.eval_rows(source.view());
    println!("mean source weight {:.3}", w.iter().sum::<f64>() / w.len() as f64);
    Ok(())
}
