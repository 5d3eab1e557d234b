//! Platt scaling: `P(positive | s) = 1 / (1 + exp(a·s + b))`.
//!
//! Fitted by Newton's method with backtracking line search on the
//! cross-entropy against smoothed targets `(N₊+1)/(N₊+2)` and `1/(N₋+2)`.
//! Scores are centered before fitting, which keeps the slope at exactly
//! zero when every score is equal.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;
const GRAD_TOL: f64 = 1e-8;
const MIN_STEP: f64 = 1e-12;
const HESSIAN_RIDGE: f64 = 1e-12;

/// Sigmoid evaluated without overflow, clamped into the open unit interval.
pub fn sigmoid_probability(a: f64, b: f64, score: f64) -> f64 {
    let t = a * score + b;
    let p = if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Cross-entropy of the sigmoid against `targets`, in the overflow-safe form.
fn loss(a: f64, b: f64, scores: &[f64], targets: &[f64]) -> f64 {
    scores
        .iter()
        .zip(targets)
        .map(|(&s, &t)| {
            let f = a * s + b;
            if f >= 0.0 {
                t * f + (1.0 + (-f).exp()).ln()
            } else {
                (t - 1.0) * f + (1.0 + f.exp()).ln()
            }
        })
        .sum()
}

/// Fitted sigmoid parameters and fit diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattFit {
    pub a: f64,
    pub b: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Fits `(a, b)` for binary `labels` (true = positive class).
pub fn calibrate(scores: &[f64], labels: &[bool]) -> Result<PlattFit> {
    if scores.len() != labels.len() {
        return Err(Error::Calibration(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Calibration("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Calibration("both classes must be present".into()));
    }

    let hi = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let lo = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();

    let center = if scores.iter().all(|&s| s == scores[0]) {
        scores[0]
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    };
    let centered: Vec<f64> = scores.iter().map(|s| s - center).collect();

    let mut a = 0.0;
    let mut b = ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln();
    let mut fval = loss(a, b, &centered, &targets);
    let mut iterations = 0;
    let mut gradient_norm = f64::INFINITY;

    while iterations < MAX_ITER {
        // gradient and Hessian of the loss in (a, b)
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (HESSIAN_RIDGE, HESSIAN_RIDGE, 0.0, 0.0, 0.0);
        for (&s, &t) in centered.iter().zip(&targets) {
            let p = sigmoid_probability(a, b, s);
            let q = 1.0 - p;
            let d2 = p * q;
            h11 += s * s * d2;
            h22 += d2;
            h21 += s * d2;
            let d1 = t - p;
            g1 += s * d1;
            g2 += d1;
        }
        gradient_norm = g1.abs().max(g2.abs());
        if gradient_norm < GRAD_TOL {
            break;
        }
        iterations += 1;

        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        let mut accepted = false;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = loss(na, nb, &centered, &targets);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            // no further decrease representable; take what we have
            break;
        }
    }
    if !gradient_norm.is_finite() {
        return Err(Error::Calibration("Newton iteration diverged".into()));
    }
    if gradient_norm >= GRAD_TOL {
        log::debug!("platt: stopped after {iterations} iterations with gradient {gradient_norm:e}");
    }
    Ok(PlattFit { a, b: b - a * center, iterations, gradient_norm })
}
