//! Soft-margin linear SVM dual solved by sequential minimal optimization.
//!
//! Solves
//!
//! ```text
//! min_α  ½ αᵀQα − eᵀα    s.t.  0 ≤ α_i ≤ C_i,  yᵀα = 0,   Q_ij = y_i y_j x_i·x_j
//! ```
//!
//! using maximal-violating-pair selection with second-order information for
//! the second index. The loop stops once the violation gap
//! `max_{I_up} −y_t G_t − min_{I_low} −y_t G_t` drops below the tolerance.

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// Dual solution together with the recovered primal hyperplane.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final violation gap; below the solver tolerance on success.
    pub gap: f64,
}

impl DualSolution {
    /// `f(x) = w·x + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    /// Dual objective in maximization form, `Σα − ½αᵀQα`.
    pub fn dual_objective(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        dual_objective(&self.alpha, x, y)
    }

    /// Per-sample KKT residuals of the margin conditions for upper bounds
    /// `c[i]`, using the primal `(w, b)`:
    ///
    /// * `α = 0`: `max(0, 1 − m)`
    /// * `0 < α < C`: `|1 − m|`
    /// * `α = C`: `max(0, m − 1)`
    ///
    /// where `m = y·f(x)`.
    pub fn kkt_residuals(&self, x: &[Vec<f64>], y: &[f64], c: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(y)
            .zip(&self.alpha)
            .zip(c)
            .map(|(((xi, &yi), &a), &ci)| {
                let m = yi * self.decision(xi);
                if a <= 0.0 {
                    (1.0 - m).max(0.0)
                } else if a >= ci {
                    (m - 1.0).max(0.0)
                } else {
                    (1.0 - m).abs()
                }
            })
            .collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// `Σα − ½αᵀQα` for an arbitrary feasible `alpha`.
pub fn dual_objective(alpha: &[f64], x: &[Vec<f64>], y: &[f64]) -> f64 {
    let d = x.first().map_or(0, Vec::len);
    let mut w = vec![0.0; d];
    for ((xi, &yi), &a) in x.iter().zip(y).zip(alpha) {
        for (wk, xk) in w.iter_mut().zip(xi) {
            *wk += a * yi * xk;
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * dot(&w, &w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams { tolerance: 1e-6, max_iter: 10_000_000 }
    }
}

/// Solves the dual for samples `x` with labels `y ∈ {−1, +1}` and per-sample
/// box bounds `c`.
pub fn solve(x: &[Vec<f64>], y: &[f64], c: &[f64], params: SmoParams) -> Result<DualSolution> {
    let n = x.len();
    if n == 0 || y.len() != n || c.len() != n {
        return Err(Error::Training(format!(
            "inconsistent problem sizes: {n} samples, {} labels, {} bounds",
            y.len(),
            c.len()
        )));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Training("labels must be -1 or +1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Training("both classes must be present".into()));
    }
    if c.iter().any(|&ci| !(ci > 0.0 && ci.is_finite())) {
        return Err(Error::Training("C must be positive and finite".into()));
    }
    let d = x[0].len();
    if x.iter().any(|xi| xi.len() != d || xi.iter().any(|v| !v.is_finite())) {
        return Err(Error::Training("feature rows must be finite and of equal length".into()));
    }

    // Q is dense; these problems are at most a few thousand samples.
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * dot(&x[i], &x[j])).collect())
        .collect();
    let qd: Vec<f64> = (0..n).map(|i| q[i][i]).collect();

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64, ci: f64| if yi > 0.0 { a < ci } else { a > 0.0 };
    let in_low = |a: f64, yi: f64, ci: f64| if yi > 0.0 { a > 0.0 } else { a < ci };

    let mut iterations = 0;
    let gap = loop {
        // first index: maximal violation over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t], c[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        // second index: largest objective decrease over I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t], c[t]) {
                continue;
            }
            let ygt = y[t] * grad[t];
            gmax2 = gmax2.max(ygt);
            if i_sel == usize::MAX {
                continue;
            }
            let b = gmax + ygt;
            if b > 0.0 {
                let quad = qd[i_sel] + qd[t] - 2.0 * y[i_sel] * y[t] * q[i_sel][t];
                let a = if quad > 0.0 { quad } else { TAU };
                let decrease = -(b * b) / a;
                if decrease < best {
                    best = decrease;
                    j_sel = t;
                }
            }
        }
        let gap = gmax + gmax2;
        if gap < params.tolerance || j_sel == usize::MAX {
            break gap.max(0.0);
        }
        if iterations >= params.max_iter {
            return Err(Error::NotConverged { iterations, gap, tolerance: params.tolerance });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (ci, cj) = (c[i], c[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * q[i][j]).max(TAU);
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
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * q[i][j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q[t][i] * di + q[t][j] * dj;
        }
    };

    let bias = -rho(&alpha, &grad, y, c);
    let mut weights = vec![0.0; d];
    for ((xi, &yi), &a) in x.iter().zip(y).zip(&alpha) {
        if a != 0.0 {
            for (wk, xk) in weights.iter_mut().zip(xi) {
                *wk += a * yi * xk;
            }
        }
    }
    Ok(DualSolution { alpha, weights, bias, iterations, gap })
}

/// Offset `ρ` with `f(x) = w·x − ρ`: the mean of `y_t G_t` over free
/// multipliers, or the midpoint of the feasible interval when none are free.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c[t] {
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
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big_c(n: usize) -> Vec<f64> {
        vec![1e6; n]
    }

    #[test]
    fn symmetric_one_dimensional_hard_margin() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![-1.0, 1.0];
        let sol = solve(&x, &y, &big_c(2), SmoParams::default()).unwrap();
        assert!((sol.weights[0] - 1.0).abs() < 1e-9);
        assert!(sol.bias.abs() < 1e-9);
        assert!((sol.decision(&[1.0]) - 1.0).abs() < 1e-9);
        assert!((sol.decision(&[-1.0]) + 1.0).abs() < 1e-9);
        assert_eq!(sol.alpha, vec![0.5, 0.5]);
    }

    #[test]
    fn separable_points_respect_margin() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![3.0, 3.0], vec![4.0, 2.5], vec![-1.0, 1.0]];
        let y = vec![-1.0, -1.0, 1.0, 1.0, -1.0];
        let sol = solve(&x, &y, &big_c(5), SmoParams::default()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!(yi * sol.decision(xi) >= 1.0 - 1e-6);
        }
        let res = sol.kkt_residuals(&x, &y, &big_c(5));
        assert!(res.iter().all(|r| *r < 1e-6), "{res:?}");
    }

    #[test]
    fn rejects_bad_input() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(solve(&x, &[1.0, 1.0], &[1.0, 1.0], SmoParams::default()).is_err());
        assert!(solve(&x, &[1.0, 0.0], &[1.0, 1.0], SmoParams::default()).is_err());
        assert!(solve(&x, &[1.0, -1.0], &[0.0, 1.0], SmoParams::default()).is_err());
        assert!(solve(&x, &[1.0], &[1.0], SmoParams::default()).is_err());
        assert!(solve(&[vec![f64::NAN], vec![1.0]], &[1.0, -1.0], &[1.0, 1.0], SmoParams::default()).is_err());
    }

    #[test]
    fn iteration_cap_reports_diagnostics() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let err = solve(&x, &y, &[1.0; 10], SmoParams { tolerance: 1e-12, max_iter: 1 }).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 1, .. }), "{err}");
    }

    #[test]
    fn duplicated_points_keep_hard_margin_solution() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 2.0], vec![2.0, -1.0], vec![3.0, 0.0]];
        let y = vec![-1.0, -1.0, 1.0, 1.0];
        let once = solve(&x, &y, &big_c(4), SmoParams::default()).unwrap();
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
        let twice = solve(&x2, &y2, &big_c(8), SmoParams::default()).unwrap();
        for (a, b) in once.weights.iter().zip(&twice.weights) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((once.bias - twice.bias).abs() < 1e-6);
    }
}
