//! Dual solver for the binary C-SVM.
//!
//! Solves
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a    s.t.  y^T a = 0,  0 <= a_t <= C
//! ```
//!
//! with `Q_ij = y_i y_j K(x_i, x_j)` by sequential minimal optimisation,
//! using second-order working-set selection. Iteration stops once the
//! maximal KKT violation `m(a) - M(a)` drops below the tolerance.

use serde::{Deserialize, Serialize};

const TAU: f64 = 1e-12;

/// Dense symmetric kernel matrix, row-major.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    values: Vec<f64>,
}

impl KernelMatrix {
    pub fn from_fn(n: usize, k: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = k(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub c: f64,
    /// KKT tolerance on `m(a) - M(a)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverParams {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    /// Offset: the decision value is `sum_i y_i a_i K(x_i, x) - rho`.
    pub rho: f64,
    pub objective: f64,
    /// `m(a) - M(a)` at termination.
    pub kkt_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[inline]
fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

#[inline]
fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// `max_{I_up} -y_t g_t - min_{I_low} -y_t g_t` for a given gradient.
fn violation(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    for t in 0..y.len() {
        let v = -y[t] * grad[t];
        if in_up(y[t], alpha[t], c) {
            gmax = gmax.max(v);
        }
        if in_low(y[t], alpha[t], c) {
            gmin = gmin.min(v);
        }
    }
    if gmax.is_finite() && gmin.is_finite() {
        (gmax - gmin).max(0.0)
    } else {
        0.0
    }
}

fn gradient(k: &KernelMatrix, y: &[f64], alpha: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut g = vec![-1.0; n];
    for j in 0..n {
        if alpha[j] != 0.0 {
            let row = k.row(j);
            let s = alpha[j] * y[j];
            for t in 0..n {
                g[t] += y[t] * s * row[t];
            }
        }
    }
    g
}

/// Maximal KKT violation of `alpha`, recomputing the gradient from scratch.
pub fn kkt_gap(k: &KernelMatrix, y: &[f64], alpha: &[f64], c: f64) -> f64 {
    violation(y, alpha, &gradient(k, y, alpha), c)
}

/// `1/2 a^T Q a - sum(a)`.
pub fn dual_objective(k: &KernelMatrix, y: &[f64], alpha: &[f64]) -> f64 {
    let g = gradient(k, y, alpha);
    alpha.iter().zip(&g).map(|(a, g)| a * (g - 1.0)).sum::<f64>() / 2.0
}

/// Solves the binary dual. Labels must be `+1.0` / `-1.0`.
pub fn solve(k: &KernelMatrix, y: &[f64], params: &SolverParams) -> BinarySolution {
    let n = y.len();
    debug_assert_eq!(k.len(), n);
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let q = |i: usize, j: usize| y[i] * y[j] * k.get(i, j);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        // First index: maximal violating -y g over I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(y[t], alpha[t], c) {
                let v = -y[t] * grad[t];
                if v >= gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        // Second index: largest second-order decrease over I_low.
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_obj = f64::INFINITY;
        if i_sel != usize::MAX {
            let kii = k.get(i_sel, i_sel);
            let ki = k.row(i_sel);
            for t in 0..n {
                if in_low(y[t], alpha[t], c) {
                    let v = -y[t] * grad[t];
                    gmin = gmin.min(v);
                    let b = gmax - v;
                    if b > 0.0 {
                        let mut a = kii + k.get(t, t) - 2.0 * ki[t];
                        if a <= 0.0 {
                            a = TAU;
                        }
                        let obj = -(b * b) / a;
                        if obj <= best_obj {
                            best_obj = obj;
                            j_sel = t;
                        }
                    }
                }
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || gmax - gmin < params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        let (ki, kj) = (k.row(i), k.row(j));
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
        }
    }

    let rho = compute_rho(y, &alpha, &grad, c);
    let objective = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() / 2.0;
    BinarySolution {
        kkt_gap: kkt_gap(k, y, &alpha, c),
        alpha,
        rho,
        objective,
        iterations,
        converged,
    }
}

/// Offset from free variables, or the midpoint of the feasible interval
/// when every variable sits at a bound.
fn compute_rho(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    if n_free > 0 {
        free_sum / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}
