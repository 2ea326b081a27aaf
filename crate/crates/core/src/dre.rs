//! Least-squares importance fitting (LSIF).
//!
//! The density ratio `w(x) = p_target(x) / p_source(x)` is modelled as
//! `αᵀφ(x)` over Gaussian kernels `φᵢ(x) = exp(−‖x − cᵢ‖² / 2σ²)` centred at
//! `b` target samples. The coefficients solve the nonnegative QP
//!
//! ```text
//! minimize ½ αᵀHα − hᵀα + λ 𝟙ᵀα   subject to α ⪰ 0
//! ```
//!
//! with `H` the source second moment of `φ` and `h` the target mean of `φ`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::index;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::rng;
use crate::spatial::SpatialDataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsifConfig {
    pub b: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub seed: u64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl Default for LsifConfig {
    fn default() -> Self {
        Self {
            b: 10,
            sigma: 2.0,
            lambda: 1e-3,
            seed: 0,
            solver_tol: 1e-8,
            solver_max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioModel {
    centers: Array2<f64>,
    sigma: f64,
    alpha: Vec<f64>,
}

fn kernel(x: ArrayView1<f64>, c: ArrayView1<f64>, sigma: f64) -> f64 {
    let d2: f64 = x.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

impl RatioModel {
    pub fn new(centers: Array2<f64>, sigma: f64, alpha: Vec<f64>) -> Result<Self> {
        if centers.nrows() != alpha.len() {
            return Err(invalid("one coefficient per center required"));
        }
        if alpha.iter().any(|a| !(*a >= 0.0)) {
            return Err(invalid("ratio coefficients must be nonnegative"));
        }
        Ok(Self {
            centers,
            sigma,
            alpha,
        })
    }

    pub fn centers(&self) -> ArrayView2<'_, f64> {
        self.centers.view()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn eval(&self, x: ArrayView1<f64>) -> f64 {
        self.centers
            .rows()
            .into_iter()
            .zip(&self.alpha)
            .map(|(c, a)| a * kernel(x, c, self.sigma))
            .sum()
    }

    pub fn eval_rows(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.eval(r)).collect()
    }
}

/// Sample moments `Ĥ = mean_source φφᵀ` and `ĥ = mean_target φ`.
pub fn estimate_hh(
    source: ArrayView2<f64>,
    target: ArrayView2<f64>,
    centers: ArrayView2<f64>,
    sigma: f64,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if source.nrows() == 0 || target.nrows() == 0 {
        return Err(invalid("source and target must be nonempty"));
    }
    if source.ncols() != centers.ncols() || target.ncols() != centers.ncols() {
        return Err(invalid("feature dimensions differ"));
    }
    if !(sigma > 0.0) {
        return Err(invalid("kernel width must be positive"));
    }
    let b = centers.nrows();
    let mut hm = Array2::<f64>::zeros((b, b));
    let mut phi = vec![0.0; b];
    for x in source.rows() {
        for (p, c) in phi.iter_mut().zip(centers.rows()) {
            *p = kernel(x, c, sigma);
        }
        for i in 0..b {
            for j in 0..=i {
                hm[[i, j]] += phi[i] * phi[j];
            }
        }
    }
    let ns = source.nrows() as f64;
    for i in 0..b {
        for j in 0..=i {
            let v = hm[[i, j]] / ns;
            hm[[i, j]] = v;
            hm[[j, i]] = v;
        }
    }
    let mut hv = Array1::<f64>::zeros(b);
    for x in target.rows() {
        for (acc, c) in hv.iter_mut().zip(centers.rows()) {
            *acc += kernel(x, c, sigma);
        }
    }
    hv /= target.nrows() as f64;
    Ok((hm, hv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsifSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting from `α = 0`.
    pub objective_trace: Vec<f64>,
}

/// Implied weights above this scale mean the kernel basis has numerically
/// vanished on the source samples.
const MAX_WEIGHT_SCALE: f64 = 1e8;
/// Consecutive iterations without progress before giving up.
const STALL_LIMIT: usize = 50;

struct Qp<'a> {
    h: &'a [f64],
    lin: Vec<f64>,
    n: usize,
}

impl Qp<'_> {
    fn objective(&self, a: &[f64]) -> f64 {
        let ha = linalg::mat_vec(self.h, self.n, a);
        0.5 * linalg::dot(a, &ha) + linalg::dot(&self.lin, a)
    }

    fn gradient(&self, a: &[f64]) -> Vec<f64> {
        linalg::mat_vec(self.h, self.n, a)
            .into_iter()
            .zip(&self.lin)
            .map(|(p, q)| p + q)
            .collect()
    }

    fn kkt_residual(&self, a: &[f64], g: &[f64]) -> f64 {
        a.iter()
            .zip(g)
            .map(|(&ai, &gi)| if ai > 0.0 { gi.abs() } else { (-gi).max(0.0) })
            .fold(0.0, f64::max)
    }

    /// Minimizer of the quadratic restricted to `free` (others fixed at 0).
    fn subspace_minimizer(&self, free: &[usize]) -> Option<Vec<f64>> {
        let m = free.len();
        let mut a = vec![0.0; m * m];
        for (p, &i) in free.iter().enumerate() {
            for (q, &j) in free.iter().enumerate() {
                a[p * m + q] = self.h[i * self.n + j];
            }
        }
        let rhs: Vec<f64> = free.iter().map(|&i| -self.lin[i]).collect();
        let mut l = a.clone();
        if !linalg::cholesky_in_place(&mut l, m) {
            let trace: f64 = (0..m).map(|p| a[p * m + p]).sum();
            l = a.clone();
            for p in 0..m {
                l[p * m + p] += 1e-12 * trace.max(f64::MIN_POSITIVE);
            }
            if !linalg::cholesky_in_place(&mut l, m) {
                return None;
            }
        }
        let mut x = linalg::cholesky_solve(&l, m, &rhs);
        // one round of iterative refinement
        let ax = linalg::mat_vec(&a, m, &x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let dx = linalg::cholesky_solve(&l, m, &r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
        let mut full = vec![0.0; self.n];
        for (&i, v) in free.iter().zip(x) {
            full[i] = v;
        }
        full.iter().all(|v| v.is_finite()).then_some(full)
    }
}

fn project_along(from: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(dir).map(|(a, d)| (a + t * d).max(0.0)).collect()
}

/// Projected gradient descent with Armijo backtracking, interleaved with
/// projected steps towards the minimizer on the current free set. Every
/// accepted step decreases the objective.
pub fn solve_lsif(
    h_mat: &Array2<f64>,
    h_vec: &Array1<f64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LsifSolution> {
    let n = h_vec.len();
    if h_mat.nrows() != n || h_mat.ncols() != n {
        return Err(invalid("H must be square and match h"));
    }
    if !(lambda >= 0.0) {
        return Err(invalid("lambda must be nonnegative"));
    }
    if h_mat.iter().chain(h_vec.iter()).any(|v| !v.is_finite()) {
        return Err(invalid("H and h must be finite"));
    }
    let hflat: Vec<f64> = h_mat.iter().copied().collect();
    let qp = Qp {
        h: &hflat,
        lin: h_vec.iter().map(|v| lambda - v).collect(),
        n,
    };

    let mut alpha = vec![0.0; n];
    let mut obj = 0.0;
    let mut trace = vec![obj];
    let max_diag = (0..n).map(|i| hflat[i * n + i]).fold(0.0, f64::max);
    let max_h = h_vec.iter().cloned().fold(0.0, f64::max);
    if max_h > lambda && max_diag * MAX_WEIGHT_SCALE < max_h {
        return Err(Error::NumericalInstability {
            alpha,
            residual: f64::INFINITY,
            iterations: 0,
        });
    }

    let mut step = if max_diag > 0.0 { 1.0 / (n as f64 * max_diag) } else { 1.0 };
    let mut residual = f64::INFINITY;
    let mut stalled = 0;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let g = qp.gradient(&alpha);
        residual = qp.kkt_residual(&alpha, &g);
        if residual <= tol {
            return Ok(LsifSolution {
                alpha,
                objective: obj,
                kkt_residual: residual,
                iterations: it,
                objective_trace: trace,
            });
        }

        // projected gradient step
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut t = step * 2.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = project_along(&alpha, &neg, t);
            let decrease: f64 = cand.iter().zip(&alpha).zip(&g).map(|((c, a), gi)| gi * (c - a)).sum();
            let co = qp.objective(&cand);
            if co <= obj + 1e-4 * decrease && co <= obj {
                alpha = cand;
                obj = co;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if accepted {
            step = t;
            trace.push(obj);
        }

        // subspace step on the free set of the current iterate
        let mut improved = accepted;
        let g = qp.gradient(&alpha);
        let free: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0 || g[i] < 0.0).collect();
        if !free.is_empty() {
            if let Some(target) = qp.subspace_minimizer(&free) {
                let dir: Vec<f64> = target.iter().zip(&alpha).map(|(a, b)| a - b).collect();
                let mut t = 1.0;
                for _ in 0..60 {
                    let cand = project_along(&alpha, &dir, t);
                    let co = qp.objective(&cand);
                    if co <= obj {
                        if co < obj || cand != alpha {
                            alpha = cand;
                            obj = co;
                            trace.push(obj);
                            improved = true;
                        }
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        stalled = if improved { 0 } else { stalled + 1 };
        if stalled >= STALL_LIMIT {
            break;
        }
    }
    Err(Error::NumericalInstability {
        alpha,
        residual,
        iterations,
    })
}

/// Fits the ratio between target and source feature distributions. Kernel
/// centres are drawn without replacement from the target rows.
pub fn fit_ratio_features(
    source: ArrayView2<f64>,
    target: ArrayView2<f64>,
    cfg: &LsifConfig,
) -> Result<RatioModel> {
    if source.nrows() == 0 || target.nrows() == 0 {
        return Err(invalid("source and target must be nonempty"));
    }
    if source.ncols() != target.ncols() {
        return Err(invalid("source and target feature dimensions differ"));
    }
    if cfg.b == 0 || cfg.b > target.nrows() {
        return Err(invalid(format!(
            "b = {} kernel centers but {} target samples",
            cfg.b,
            target.nrows()
        )));
    }
    let mut r = rng::seeded(cfg.seed);
    let picks = index::sample(&mut r, target.nrows(), cfg.b).into_vec();
    let centers = target.select(ndarray::Axis(0), &picks);
    let (hm, hv) = estimate_hh(source, target, centers.view(), cfg.sigma)?;
    let sol = solve_lsif(&hm, &hv, cfg.lambda, cfg.solver_tol, cfg.solver_max_iter)?;
    RatioModel::new(centers, cfg.sigma, sol.alpha)
}

pub fn fit_ratio(source: &SpatialDataset, target: &SpatialDataset, cfg: &LsifConfig) -> Result<RatioModel> {
    fit_ratio_features(source.features(), target.features(), cfg)
}
