//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use geoval::dre::{fit_ratio_features, solve_lsif, LsifConfig};
use geoval::experiment::{self, SweepSpec, TabularMode, TabularSpec};
use geoval::ingest::{read_csv, ColumnSchema};
use geoval::models::{Classifier, Dummy, ModelKind};
use geoval::rng;
use geoval::shiftfns::{self, ShiftConfig};
use geoval::simulate::{self, LabelingFunction, Method, ProblemGenerator, ShiftSpec, SimulationSpec};
use geoval::spatial::{empirical_variogram, fit_range, grid_sites, RegularGrid, VariogramKind, VariogramModel};
use geoval::synthetic::{wells_csv, WellsSpec, CLASSES};
use geoval::validate::{self, block_folds, iwcv, random_folds};

fn report(id: u32, name: &str, ok: bool, detail: String, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    let verdict = if ok && elapsed <= budget { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict} {name}: {detail} [{:.1}s / {}s]", elapsed.as_secs_f64(), budget.as_secs());
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(elapsed <= budget, "criterion {id} exceeded its time budget");
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn shift(d: f64, t: f64) -> ShiftSpec {
    ShiftSpec::new(d, t).unwrap()
}

#[test]
fn c01_fold_arithmetic() {
    let t = Instant::now();
    let coords = grid_sites(&RegularGrid::unit(&[100, 100]).unwrap());
    let p = block_folds(coords.view(), &[20.0, 20.0], 0.0).unwrap();
    let sizes_ok = p.folds.iter().all(|f| f.eval.len() == 400);
    report(
        1,
        "block folds on 100x100 with side 20",
        p.len() == 25 && sizes_ok,
        format!("{} folds, all eval sizes 400: {sizes_ok}", p.len()),
        t,
        Duration::from_secs(1),
    );
}

#[test]
fn c02_zero_exponent_recovers_cv() {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut r = rng::seeded(seed);
        let n = 150;
        let coords = Array2::from_shape_fn((n, 2), |_| r.random::<f64>() * 50.0);
        let features = Array2::from_shape_fn((n, 2), |_| StandardNormal.sample(&mut r));
        let labels: Vec<i64> = (0..n).map(|_| i64::from(r.random::<bool>())).collect();
        let data = geoval::spatial::SpatialDataset::new(coords, features, Some(labels)).unwrap();
        let weights: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 10.0f64.powf(r.random_range(-3.0..3.0))).collect();
        let folds = random_folds(n, 5, seed).unwrap();
        let kind = ModelKind::ALL[seed as usize % 5];
        let factory = move |j: usize| kind.build(j as u64);
        let plain = iwcv(&factory, &data, &folds, None, 1.0).unwrap().value;
        let zero = iwcv(&factory, &data, &folds, Some(&weights), 0.0).unwrap().value;
        worst = worst.max((plain - zero).abs());
    }
    report(
        2,
        "iwcv with l = 0 equals plain CV",
        worst <= 1e-12,
        format!("max |difference| over 20 instances = {worst:e}"),
        t,
        Duration::from_secs(60),
    );
}

fn mc_areas(s: ShiftSpec, n: usize, seed: u64) -> (f64, f64) {
    let (centre, sigma) = simulate::target_params(s);
    let (big, small): (f64, f64) = (3.0, 3.0 * sigma);
    let half = big.max(centre + small) + 0.1;
    let mut r = rng::seeded(seed);
    let (mut inter, mut union) = (0usize, 0usize);
    for _ in 0..n {
        let x = r.random_range(-half..half);
        let y = r.random_range(-half..half);
        let in_a = x * x + y * y <= big * big;
        let in_b = (x - centre).powi(2) + (y - centre).powi(2) <= small * small;
        inter += usize::from(in_a && in_b);
        union += usize::from(in_a || in_b);
    }
    let cell = (2.0 * half).powi(2) / n as f64;
    (inter as f64 * cell, union as f64 * cell)
}

#[test]
fn c03_shift_function_analytics() {
    let t = Instant::now();
    let base = shift(0.0, 1.0);
    let mut ok = shiftfns::kl(base) == 0.0 && shiftfns::jaccard(base) == 0.0 && shiftfns::novelty(base) == 0.0;
    let mut outside_all_one = true;
    for i in 0..=20 {
        for j in 1..=20 {
            let s = shift(i as f64 / 20.0, j as f64 / 20.0);
            if shiftfns::classify(s) == ShiftConfig::Outside {
                outside_all_one &= shiftfns::novelty(s) == 1.0;
            }
        }
    }
    let j_half = shiftfns::jaccard(shift(0.0, 0.5));
    ok &= outside_all_one && (j_half - 0.75).abs() < 1e-12;
    let mut worst: f64 = 0.0;
    for (k, (d, tau)) in [(0.3, 0.5), (0.5, 1.0), (0.4, 0.4), (0.25, 0.8), (0.6, 0.5)].into_iter().enumerate() {
        let s = shift(d, tau);
        assert_eq!(shiftfns::classify(s), ShiftConfig::Partial);
        let o = shiftfns::overlap(s);
        let (mi, mu) = mc_areas(s, 400_000, k as u64);
        let mc_jaccard = 1.0 - mi / mu;
        let mc_novelty = 1.0 - mi / o.area_target;
        worst = worst
            .max((o.intersection - mi).abs() / o.area_target)
            .max((shiftfns::jaccard(s) - mc_jaccard).abs())
            .max((shiftfns::novelty(s) - mc_novelty).abs());
    }
    ok &= worst < 1e-2;
    report(
        3,
        "shift-function analytics",
        ok,
        format!("jaccard(0,0.5) = {j_half}, outside novelty all 1: {outside_all_one}, max gap to Monte-Carlo areas = {worst:.2e}"),
        t,
        Duration::from_secs(1),
    );
}

#[test]
fn c04_novelty_groups_configurations() {
    let t = Instant::now();
    let mut pts = vec![];
    for i in 0..=20 {
        for j in 1..=20 {
            let s = shift(i as f64 * 0.05, j as f64 * 0.05);
            pts.push((shiftfns::classify(s), shiftfns::novelty(s), shiftfns::kl(s), shiftfns::jaccard(s)));
        }
    }
    let of = |c: ShiftConfig| pts.iter().filter(move |p| p.0 == c);
    let max_in = of(ShiftConfig::Inside).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let part_ok = of(ShiftConfig::Partial).all(|p| p.1 > 0.0 && p.1 < 1.0);
    let out_ok = of(ShiftConfig::Outside).all(|p| p.1 == 1.0);
    let grouped = max_in < 0.5 && part_ok && out_ok;
    // a function groups the configurations when every inside value lies
    // below every partial value, and every partial value below every outside one
    let violates = |f: fn(&(ShiftConfig, f64, f64, f64)) -> f64| {
        let hi_in = of(ShiftConfig::Inside).map(f).fold(f64::NEG_INFINITY, f64::max);
        let lo_part = of(ShiftConfig::Partial).map(f).fold(f64::INFINITY, f64::min);
        let hi_part = of(ShiftConfig::Partial).map(f).fold(f64::NEG_INFINITY, f64::max);
        let lo_out = of(ShiftConfig::Outside).map(f).fold(f64::INFINITY, f64::min);
        hi_in >= lo_part || hi_part >= lo_out
    };
    let kl_violates = violates(|p| p.2);
    let jac_violates = violates(|p| p.3);
    report(
        4,
        "novelty groups configurations; KL and Jaccard do not",
        grouped && kl_violates && jac_violates,
        format!("max inside novelty = {max_in}, partial in (0,1): {part_ok}, outside = 1: {out_ok}, KL violates: {kl_violates}, Jaccard violates: {jac_violates}"),
        t,
        Duration::from_secs(1),
    );
}

fn lsif_objective(h: &Array2<f64>, hv: &Array1<f64>, lambda: f64, a: &[f64]) -> f64 {
    let a = Array1::from(a.to_vec());
    0.5 * a.dot(&h.dot(&a)) - hv.dot(&a) + lambda * a.sum()
}

/// Nested grid search over the nonnegative orthant, zooming around the best
/// point. The initial box holds every point with nonpositive objective.
fn grid_minimum(h: &Array2<f64>, hv: &Array1<f64>, lambda: f64) -> f64 {
    let min_eig_bound = 0.05;
    let mut lo = [0.0; 3];
    let mut hi = [2.0 * hv.dot(hv).sqrt() / min_eig_bound; 3];
    let steps = 30;
    let mut best = (vec![0.0; 3], lsif_objective(h, hv, lambda, &[0.0; 3]));
    for _ in 0..14 {
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let a = [
                        lo[0] + (hi[0] - lo[0]) * i as f64 / steps as f64,
                        lo[1] + (hi[1] - lo[1]) * j as f64 / steps as f64,
                        lo[2] + (hi[2] - lo[2]) * k as f64 / steps as f64,
                    ];
                    let v = lsif_objective(h, hv, lambda, &a);
                    if v < best.1 {
                        best = (a.to_vec(), v);
                    }
                }
            }
        }
        for d in 0..3 {
            let cell = (hi[d] - lo[d]) / steps as f64;
            lo[d] = (best.0[d] - 2.0 * cell).max(0.0);
            hi[d] = best.0[d] + 2.0 * cell;
        }
    }
    best.1
}

#[test]
fn c05_lsif_correctness() {
    let t = Instant::now();
    let mut r = rng::seeded(5);
    let mut worst_gap: f64 = 0.0;
    for _ in 0..20 {
        let m = Array2::from_shape_fn((3, 3), |_| r.random_range(-1.0..1.0));
        let h = m.t().dot(&m) + Array2::<f64>::eye(3) * 0.05;
        let hv = Array1::from_shape_fn(3, |_| r.random_range(0.0..1.0));
        let lambda = r.random_range(0.0..0.5);
        let sol = solve_lsif(&h, &hv, lambda, 1e-10, 100_000).unwrap();
        let brute = grid_minimum(&h, &hv, lambda);
        worst_gap = worst_gap.max(sol.objective - brute);
    }
    let mut means = vec![];
    for seed in 0..10u64 {
        let mut r = rng::seeded(1000 + seed);
        let src = Array2::from_shape_fn((1000, 2), |_| StandardNormal.sample(&mut r));
        let tgt = Array2::from_shape_fn((1000, 2), |_| StandardNormal.sample(&mut r));
        let model = fit_ratio_features(src.view(), tgt.view(), &LsifConfig { seed, ..LsifConfig::default() }).unwrap();
        let w = model.eval_rows(src.view());
        means.push(w.iter().sum::<f64>() / w.len() as f64);
    }
    let means_ok = means.iter().all(|m| (0.85..=1.15).contains(m));
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report(
        5,
        "LSIF matches brute force; unit weights without shift",
        worst_gap <= 1e-4 && means_ok,
        format!("max objective gap = {worst_gap:.2e}, mean weights in [{lo:.3}, {hi:.3}]"),
        t,
        Duration::from_secs(30),
    );
}

#[test]
fn c06_bernoulli_limit() {
    let t = Instant::now();
    let grid = RegularGrid::unit(&[50, 50]).unwrap();
    let lf = LabelingFunction::default();
    let g = ProblemGenerator::new(shift(0.5, 0.5), 10.0, &grid, lf).unwrap();
    let src = g.source(1).unwrap();
    let mut dummy = Dummy::new(7);
    dummy.train(src.features(), src.labels().unwrap()).unwrap();
    let dummy_err = validate::true_error(&dummy, &g, 100, 2).unwrap();

    // targets narrower than one label band are excluded: there the error
    // degenerates towards 0 or 1 instead of the coin-flip value
    let mut outside = vec![];
    for (k, (d, tau)) in [(1.0, 1.0), (1.0, 0.8), (1.0, 0.6), (0.9, 0.6), (0.9, 0.5)].into_iter().enumerate() {
        for r in [0.0, 10.0, 20.0] {
            let g = ProblemGenerator::new(shift(d, tau), r, &grid, lf).unwrap();
            let src = g.source(10 + k as u64).unwrap();
            for kind in [ModelKind::Knn, ModelKind::DecisionTree] {
                let mut m = kind.build(0);
                m.train(src.features(), src.labels().unwrap()).unwrap();
                outside.push(validate::true_error(m.as_ref(), &g, 20, 3).unwrap());
            }
        }
    }
    let lo = outside.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = outside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report(
        6,
        "Bernoulli limit",
        (dummy_err - 0.5).abs() <= 0.02 && lo >= 0.4 && hi <= 0.6,
        format!("dummy true error = {dummy_err:.4}; outside-config true errors in [{lo:.3}, {hi:.3}] over {} cells", outside.len()),
        t,
        Duration::from_secs(120),
    );
}

/// Nonincreasing (sign = 1) or nondecreasing (sign = -1) with at most one
/// inversion of magnitude at most 0.01.
fn trend_holds(medians: &[f64], sign: f64) -> bool {
    let inversions: Vec<f64> = medians
        .windows(2)
        .map(|w| sign * (w[1] - w[0]))
        .filter(|d| *d > 0.0)
        .collect();
    inversions.is_empty() || (inversions.len() == 1 && inversions[0] <= 0.01)
}

#[test]
fn c07_estimator_bias_trends() {
    let t = Instant::now();
    let grid = RegularGrid::unit(&[50, 50]).unwrap();
    let lf = LabelingFunction::default();
    let mut r = rng::seeded(77);
    let mut problems = vec![];
    while problems.len() < 20 {
        let tau = r.random_range(0.2..1.0);
        let d = r.random_range(0.0..(1.0 - tau) / 2.0);
        problems.push(shift(d, tau));
    }
    let (mut cv_med, mut bcv_med) = (vec![], vec![]);
    for (ir, range) in [0.0, 10.0, 20.0].into_iter().enumerate() {
        let (mut cvs, mut bcvs) = (vec![], vec![]);
        for (ip, s) in problems.iter().enumerate() {
            let g = ProblemGenerator::new(*s, range, &grid, lf).unwrap();
            let src = g.source(rng::derive_seed(7, &[ir as u64, ip as u64])).unwrap();
            for kind in [ModelKind::Knn, ModelKind::DecisionTree] {
                let factory = move |j: usize| kind.build(j as u64);
                let blocks = block_folds(src.coords(), &[20.0, 20.0], 0.0).unwrap();
                let folds = random_folds(src.len(), blocks.len(), ip as u64).unwrap();
                cvs.push(iwcv(&factory, &src, &folds, None, 0.0).unwrap().value);
                bcvs.push(iwcv(&factory, &src, &blocks, None, 0.0).unwrap().value);
            }
        }
        cv_med.push(median(&mut cvs));
        bcv_med.push(median(&mut bcvs));
    }
    report(
        7,
        "CV more optimistic and BCV less optimistic as r grows",
        trend_holds(&cv_med, 1.0) && trend_holds(&bcv_med, -1.0),
        format!("median CV by r = {cv_med:.4?}, median BCV by r = {bcv_med:.4?}"),
        t,
        Duration::from_secs(600),
    );
}

fn desk_sweep(seed: u64) -> SweepSpec {
    SweepSpec {
        deltas: experiment::parse_linspace("0:1:5").unwrap(),
        taus: experiment::parse_linspace("0.2:1:5").unwrap(),
        ranges: vec![0.0, 10.0, 20.0],
        grid_dims: vec![50, 50],
        models: vec![ModelKind::Knn, ModelKind::DecisionTree],
        n_mc: 50,
        seed,
        ..SweepSpec::default()
    }
}

#[test]
fn c08_error_tracks_novelty() {
    let t = Instant::now();
    let rows = experiment::run_sweep(&desk_sweep(8)).unwrap();
    let novelty: Vec<f64> = rows.iter().map(|r| r.novelty).collect();
    let err: Vec<f64> = rows.iter().map(|r| r.true_error).collect();
    let rho = experiment::spearman(&novelty, &err);
    report(
        8,
        "true error rises with novelty",
        rows.len() == 150 && rho >= 0.6,
        format!("{} cells, Spearman(novelty, true error) = {rho:.3}", rows.len()),
        t,
        Duration::from_secs(900),
    );
}

#[test]
fn c09_rank_inversion_under_shift() {
    let t = Instant::now();
    let schema = ColumnSchema::new(&["X", "Y", "Z"], &["GR", "SP", "DENS"], "FORMATION", Some("ONSHORE")).unwrap();
    let csv = wells_csv(&WellsSpec::default(), 2).unwrap();
    let table = read_csv(csv.as_bytes(), &schema).unwrap();
    let run = |mode| {
        let mut spec = TabularSpec::new(schema.clone(), CLASSES);
        spec.mode = mode;
        spec.block_sides = vec![2500.0, 2500.0, 1e4];
        spec.seed = 2;
        experiment::run_tabular_table(&table, &spec).unwrap()
    };
    let shifted = run(TabularMode::Shifted);
    let cv = shifted.ranking("cv").order;
    let target = shifted.ranking("target").order;
    let has = |s: &[String], m: &str| s.iter().any(|x| x == m);
    let inverted = has(&cv[..2], "tree") && has(&cv[..2], "knn") && has(&target[2..], "tree") && has(&target[2..], "knn");

    let resampled = run(TabularMode::Resampled);
    let reference = resampled.ranking("target").order;
    let taus: Vec<f64> = ["cv", "bcv", "drv"]
        .iter()
        .map(|c| experiment::kendall_between(&reference, &resampled.ranking(c).order))
        .collect();
    report(
        9,
        "rank inversion under shift, agreement without",
        inverted && taus.iter().all(|t| *t >= 0.7),
        format!("shifted CV rank {cv:?} vs target rank {target:?}; resampled Kendall tau (cv, bcv, drv) = {taus:.2?}"),
        t,
        Duration::from_secs(300),
    );
}

#[test]
fn c10_simulation_fidelity() {
    let t = Instant::now();
    let grid = RegularGrid::unit(&[100, 100]).unwrap();
    let mut ranges = vec![];
    for seed in 0..10u64 {
        let spec = SimulationSpec {
            grid: grid.clone(),
            variogram: VariogramModel::gaussian(20.0, 1.0).unwrap(),
            mean: 0.0,
            n_processes: 1,
            rho: 0.0,
            method: Method::Spectral,
            seed,
        };
        let field = simulate::simulate(&spec).unwrap();
        let ev = empirical_variogram(&field, 0, 25, 50.0).unwrap();
        ranges.push(fit_range(&ev, VariogramKind::Gaussian).unwrap().model.range);
    }
    let ranges_ok = ranges.iter().all(|r| (r - 20.0).abs() <= 5.0);
    let pair = simulate::simulate(&SimulationSpec {
        grid: grid.clone(),
        variogram: simulate::problem_variogram(0.0, &grid),
        mean: 0.0,
        n_processes: 2,
        rho: 0.9,
        method: Method::Spectral,
        seed: 99,
    })
    .unwrap();
    let f = pair.features();
    let corr = pearson(&f.column(0).to_vec(), &f.column(1).to_vec());
    report(
        10,
        "simulated fields reproduce range and cross-correlation",
        ranges_ok && (corr - 0.9).abs() <= 0.03,
        format!("fitted ranges {ranges:.1?}, Pearson = {corr:.4}"),
        t,
        Duration::from_secs(120),
    );
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = b.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn c11_deterministic_sweep_output() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec {
        deltas: experiment::parse_linspace("0:1:3").unwrap(),
        taus: experiment::parse_linspace("0.2:1:3").unwrap(),
        n_mc: 10,
        ..desk_sweep(11)
    };
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        experiment::write_sweep(&experiment::run_sweep(&spec).unwrap(), p).unwrap();
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    report(
        11,
        "byte-identical sweep CSV for equal seeds",
        a == b && !a.is_empty(),
        format!("{} bytes, identical: {}", a.len(), a == b),
        t,
        Duration::from_secs(900),
    );
}
