//! Downhill-simplex (Nelder-Mead) minimizer.
//!
//! Used for the transition-spectrum fit and the readout-model calibration.
//! Convergence is declared when every simplex vertex is within `x_tol` of
//! the best vertex, coordinate-wise. Optional restarts rebuild the simplex
//! around the best point with shrunken steps to polish the solution.

/// Options controlling one minimization run.
#[derive(Debug, Clone)]
pub struct NmOptions {
    /// Per-coordinate convergence threshold on the simplex spread.
    pub x_tol: Vec<f64>,
    /// Iteration cap per run (counting reflect/expand/contract steps).
    pub max_iters: usize,
    /// Number of shrink-and-restart polish passes after convergence.
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

/// Minimize `f` starting from `x0` with an initial simplex of the given
/// per-coordinate step sizes.
pub fn minimize<F>(f: F, x0: &[f64], steps: &[f64], opts: &NmOptions) -> NmResult
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len());
    assert_eq!(x0.len(), opts.x_tol.len());
    let mut best_x = x0.to_vec();
    let mut total_iters = 0;
    let mut converged = false;
    let mut scale = 1.0;
    for _ in 0..=opts.restarts {
        let shrunk: Vec<f64> = steps.iter().map(|s| s * scale).collect();
        let res = run_once(&f, &best_x, &shrunk, opts);
        total_iters += res.iterations;
        best_x = res.x;
        converged = res.converged;
        scale *= 0.01;
    }
    let value = f(&best_x);
    NmResult {
        x: best_x,
        value,
        iterations: total_iters,
        converged,
    }
}

fn run_once<F>(f: &F, x0: &[f64], steps: &[f64], opts: &NmOptions) -> NmResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        sort_simplex(&mut simplex, &mut values);
        if spread_below(&simplex, &opts.x_tol) {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for v in simplex.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }

        let worst = values[n];
        let second_worst = values[n - 1];
        let reflected = affine(&centroid, &simplex[n], 1.0 + ALPHA, -ALPHA);
        let f_r = f(&reflected);

        if f_r < values[0] {
            let expanded = affine(&centroid, &simplex[n], 1.0 + ALPHA * GAMMA, -ALPHA * GAMMA);
            let f_e = f(&expanded);
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
        } else if f_r < second_worst {
            simplex[n] = reflected;
            values[n] = f_r;
        } else {
            let contracted = if f_r < worst {
                affine(&centroid, &reflected, 1.0 - RHO, RHO)
            } else {
                affine(&centroid, &simplex[n], 1.0 - RHO, RHO)
            };
            let f_c = f(&contracted);
            if f_c < worst.min(f_r) {
                simplex[n] = contracted;
                values[n] = f_c;
            } else {
                // shrink toward the best vertex
                let best = simplex[0].clone();
                for (v, val) in simplex.iter_mut().zip(values.iter_mut()).skip(1) {
                    for (x, b) in v.iter_mut().zip(&best) {
                        *x = b + SIGMA * (*x - b);
                    }
                    *val = f(v);
                }
            }
        }
    }
    sort_simplex(&mut simplex, &mut values);
    NmResult {
        x: simplex[0].clone(),
        value: values[0],
        iterations,
        converged,
    }
}

fn sort_simplex(simplex: &mut [Vec<f64>], values: &mut [f64]) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_s: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
    let sorted_v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    simplex.clone_from_slice(&sorted_s);
    values.copy_from_slice(&sorted_v);
}

fn spread_below(simplex: &[Vec<f64>], x_tol: &[f64]) -> bool {
    let best = &simplex[0];
    simplex[1..].iter().all(|v| {
        v.iter()
            .zip(best)
            .zip(x_tol)
            .all(|((x, b), tol)| (x - b).abs() < *tol)
    })
}

fn affine(a: &[f64], b: &[f64], wa: f64, wb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}
