//! Soft-margin SVM with a polynomial kernel, solved by sequential minimal
//! optimization (SMO) on standardized features.
//!
//! The solver sweeps all points each pass, fixing the worst KKT violators in
//! pairs. Pair partner selection is the usual |E_i − E_j| heuristic with a
//! deterministic sequential fallback, so fits are reproducible without any
//! RNG. A pass with zero KKT violations (at tolerance) terminates; hitting
//! the pass cap yields a usable model flagged `converged = false`.

use serde::{Deserialize, Serialize};

use crate::models::{ModelError, ModelState, Standardizer, SvmPolyParams, TrainingSummary};
use crate::preprocess::ClassLabel;
use crate::Float;

/// (gamma·⟨x,y⟩ + coef0)^degree.
pub fn kernel_poly<F: Float>(
    x: &[F],
    y: &[F],
    gamma: F,
    coef0: F,
    degree: u32,
) -> Result<F, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let mut dot = F::zero();
    for (&a, &b) in x.iter().zip(y) {
        dot = dot + a * b;
    }
    Ok((gamma * dot + coef0).powi(degree as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct SvmState<F: Float> {
    /// Standardized support vectors.
    pub support_vectors: Vec<Vec<F>>,
    /// α_i·y_i per support vector.
    pub coefficients: Vec<F>,
    pub bias: F,
    pub gamma: F,
    pub coef0: F,
    pub degree: u32,
    pub standardizer: Standardizer<F>,
}

impl<F: Float> SvmState<F> {
    pub fn n_features(&self) -> usize {
        self.standardizer.means.len()
    }

    /// Signed decision value; positive = intrusion side of the boundary.
    pub fn score_one(&self, x: &[F]) -> F {
        let z = self.standardizer.transform_one(x);
        let mut f = self.bias;
        for (sv, &c) in self.support_vectors.iter().zip(&self.coefficients) {
            let k = kernel_poly(sv, &z, self.gamma, self.coef0, self.degree)
                .expect("support vectors share the query dimension");
            f = f + c * k;
        }
        f
    }
}

pub(crate) struct SmoSolution<F> {
    pub alphas: Vec<F>,
    pub bias: F,
    pub passes: usize,
    pub converged: bool,
    pub dual_objective: f64,
}

/// Kernel access for the solver: evaluates lazily, caches only the diagonal.
struct Kern<'a, F: Float> {
    xs: &'a [Vec<F>],
    gamma: F,
    coef0: F,
    degree: u32,
    diag: Vec<F>,
}

impl<'a, F: Float> Kern<'a, F> {
    fn new(xs: &'a [Vec<F>], gamma: F, coef0: F, degree: u32) -> Self {
        let diag = xs
            .iter()
            .map(|x| kernel_poly(x, x, gamma, coef0, degree).expect("same vector"))
            .collect();
        Self {
            xs,
            gamma,
            coef0,
            degree,
            diag,
        }
    }

    fn at(&self, i: usize, j: usize) -> F {
        if i == j {
            return self.diag[i];
        }
        kernel_poly(
            &self.xs[i],
            &self.xs[j],
            self.gamma,
            self.coef0,
            self.degree,
        )
        .expect("training vectors share a dimension")
    }
}

/// Dual objective W(α) = Σα − ½·Σ α_i α_j y_i y_j K_ij, computed from the
/// error cache in O(n): Σ_j α_j y_j K_ij = f(x_i) − b = E_i + y_i − b.
fn dual_from_errors<F: Float>(alphas: &[F], ys: &[F], errors: &[F], bias: F) -> f64 {
    let mut w = 0.0;
    let half = 0.5;
    for ((&a, &y), &e) in alphas.iter().zip(ys).zip(errors) {
        w += a.to_f64_lossy();
        w -= half * (a * y * (e + y - bias)).to_f64_lossy();
    }
    w
}

/// Core SMO loop over pre-transformed features and ±1 labels.
#[allow(clippy::too_many_arguments)]
pub(crate) fn smo_solve<F: Float>(
    xs: &[Vec<F>],
    ys_pm: &[F],
    c: F,
    gamma: F,
    coef0: F,
    degree: u32,
    tol: F,
    max_passes: usize,
    mut observer: Option<&mut dyn FnMut(f64)>,
) -> SmoSolution<F> {
    let n = xs.len();
    let kern = Kern::new(xs, gamma, coef0, degree);
    let mut alphas = vec![F::zero(); n];
    let mut bias = F::zero();
    // E_i = f(x_i) − y_i; with all α = 0, f ≡ 0.
    let mut errors: Vec<F> = ys_pm.iter().map(|&y| -y).collect();
    let eps = F::from_f64_lossy(1e-3);
    let zero = F::zero();

    let take_step =
        |i: usize, j: usize, alphas: &mut Vec<F>, bias: &mut F, errors: &mut Vec<F>| -> bool {
            if i == j {
                return false;
            }
            let (yi, yj) = (ys_pm[i], ys_pm[j]);
            let (ai_old, aj_old) = (alphas[i], alphas[j]);
            let (lo, hi) = if yi != yj {
                let d = aj_old - ai_old;
                (
                    if d > zero { d } else { zero },
                    if c + d < c { c + d } else { c },
                )
            } else {
                let s = ai_old + aj_old;
                (
                    if s - c > zero { s - c } else { zero },
                    if s < c { s } else { c },
                )
            };
            if lo >= hi {
                return false;
            }
            let kii = kern.at(i, i);
            let kjj = kern.at(j, j);
            let kij = kern.at(i, j);
            let eta = F::from_f64_lossy(2.0) * kij - kii - kjj;
            if eta >= zero {
                // Flat or non-concave direction; skip (the pair heuristic will
                // surface a usable partner elsewhere).
                return false;
            }
            let mut aj_new = aj_old - yj * (errors[i] - errors[j]) / eta;
            if aj_new > hi {
                aj_new = hi;
            } else if aj_new < lo {
                aj_new = lo;
            }
            if (aj_new - aj_old).abs() < eps * (aj_new + aj_old + eps) {
                return false;
            }
            let ai_new = ai_old + yi * yj * (aj_old - aj_new);
            let d_i = ai_new - ai_old;
            let d_j = aj_new - aj_old;

            let b1 = *bias - errors[i] - yi * d_i * kii - yj * d_j * kij;
            let b2 = *bias - errors[j] - yi * d_i * kij - yj * d_j * kjj;
            let b_new = if ai_new > zero && ai_new < c {
                b1
            } else if aj_new > zero && aj_new < c {
                b2
            } else {
                (b1 + b2) / F::from_f64_lossy(2.0)
            };
            let d_b = b_new - *bias;

            for (k, e) in errors.iter_mut().enumerate() {
                let kik = kern.at(i, k);
                let kjk = kern.at(j, k);
                *e = *e + yi * d_i * kik + yj * d_j * kjk + d_b;
            }
            alphas[i] = ai_new;
            alphas[j] = aj_new;
            *bias = b_new;
            true
        };

    let mut passes = 0;
    let mut converged = false;
    while passes < max_passes {
        passes += 1;
        let mut violations = 0usize;
        for i in 0..n {
            let r = errors[i] * ys_pm[i];
            let violates = (r < -tol && alphas[i] < c) || (r > tol && alphas[i] > zero);
            if !violates {
                continue;
            }
            violations += 1;
            // Second-choice heuristic: maximize |E_i − E_j|.
            let mut j_best = usize::MAX;
            let mut gap_best = F::zero();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let gap = (errors[i] - errors[j]).abs();
                if gap > gap_best {
                    gap_best = gap;
                    j_best = j;
                }
            }
            let mut stepped =
                j_best != usize::MAX && take_step(i, j_best, &mut alphas, &mut bias, &mut errors);
            if !stepped {
                // Deterministic fallback: scan the remaining partners in order.
                for off in 1..n {
                    let j = (i + off) % n;
                    if j == j_best {
                        continue;
                    }
                    if take_step(i, j, &mut alphas, &mut bias, &mut errors) {
                        stepped = true;
                        break;
                    }
                }
            }
            if stepped {
                if let Some(obs) = observer.as_deref_mut() {
                    obs(dual_from_errors(&alphas, ys_pm, &errors, bias));
                }
            }
        }
        if violations == 0 {
            converged = true;
            break;
        }
    }

    let dual_objective = dual_from_errors(&alphas, ys_pm, &errors, bias);
    SmoSolution {
        alphas,
        bias,
        passes,
        converged,
        dual_objective,
    }
}

pub(crate) fn fit<F: Float>(
    params: &SvmPolyParams,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
) -> Result<(ModelState<F>, TrainingSummary), ModelError> {
    let standardizer = Standardizer::fit(xs);
    let zs = standardizer.transform(xs);
    let d = xs[0].len();

    // gamma = 1 / (n_features × pooled variance of the (standardized)
    // training matrix).
    let n_vals = F::from_usize_lossy(zs.len() * d);
    let mut sum = F::zero();
    let mut sum_sq = F::zero();
    for z in &zs {
        for &v in z {
            sum = sum + v;
            sum_sq = sum_sq + v * v;
        }
    }
    let mean = sum / n_vals;
    let var = sum_sq / n_vals - mean * mean;
    if var <= F::zero() {
        return Err(ModelError::Degenerate(
            "zero variance in training features; kernel scale is undefined".into(),
        ));
    }
    let gamma = F::one() / (F::from_usize_lossy(d) * var);

    let ys_pm: Vec<F> = ys
        .iter()
        .map(|y| match y {
            ClassLabel::Normal => -F::one(),
            ClassLabel::Intrusion => F::one(),
        })
        .collect();

    let solution = smo_solve(
        &zs,
        &ys_pm,
        F::from_f64_lossy(params.c),
        gamma,
        F::from_f64_lossy(params.coef0),
        params.degree,
        F::from_f64_lossy(params.tol),
        params.max_passes,
        None,
    );

    let support_floor = F::from_f64_lossy(1e-12);
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for ((alpha, z), &y) in solution.alphas.iter().zip(zs).zip(&ys_pm) {
        if *alpha > support_floor {
            support_vectors.push(z);
            coefficients.push(*alpha * y);
        }
    }

    let summary = TrainingSummary {
        iterations: solution.passes,
        converged: solution.converged,
        objective: solution.dual_objective,
    };
    Ok((
        ModelState::SvmPoly(SvmState {
            support_vectors,
            coefficients,
            bias: solution.bias,
            gamma,
            coef0: F::from_f64_lossy(params.coef0),
            degree: params.degree,
            standardizer,
        }),
        summary,
    ))
}
