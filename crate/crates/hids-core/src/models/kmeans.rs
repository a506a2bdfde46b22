//! K-means clustering (k-means++ init, Lloyd iterations, multiple restarts)
//! used as a classifier: clusters are colored by their majority training
//! label, and the score contrasts distances to the nearest normal vs nearest
//! intrusion centroid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::models::{KMeansParams, ModelError, ModelState, TrainingSummary};
use crate::preprocess::ClassLabel;
use crate::{derive_seed, Float};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Float")]
pub struct KMeansState<F: Float> {
    pub centroids: Vec<Vec<F>>,
    /// Majority training label of each centroid's cluster (ties → normal).
    pub labels: Vec<ClassLabel>,
    /// Mean pairwise centroid distance, the score's scale factor.
    pub scale: F,
    /// Total within-cluster squared distance after each assignment step of
    /// the winning restart; non-increasing by construction.
    pub objective_history: Vec<f64>,
}

impl<F: Float> KMeansState<F> {
    pub fn n_features(&self) -> usize {
        self.centroids[0].len()
    }

    /// (distance to nearest normal centroid − distance to nearest intrusion
    /// centroid) / scale. Positive = closer to intrusion territory. If one
    /// side has no centroid the score is a constant ±1.
    pub fn score_one(&self, x: &[F]) -> F {
        let min_dist = |want: ClassLabel| -> Option<F> {
            self.centroids
                .iter()
                .zip(&self.labels)
                .filter(|(_, &l)| l == want)
                .map(|(c, _)| dist_sq(x, c).sqrt())
                .min_by(|a, b| a.partial_cmp(b).expect("distances are finite"))
        };
        match (
            min_dist(ClassLabel::Normal),
            min_dist(ClassLabel::Intrusion),
        ) {
            (Some(d0), Some(d1)) => (d0 - d1) / self.scale,
            (Some(_), None) => -F::one(),
            (None, Some(_)) => F::one(),
            (None, None) => unreachable!("at least one centroid exists"),
        }
    }
}

fn dist_sq<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(F::zero(), |acc, v| acc + v)
}

struct LloydRun<F> {
    centroids: Vec<Vec<F>>,
    assignment: Vec<usize>,
    objective: f64,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn kmeans_plus_plus<F: Float>(xs: &[Vec<F>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<F>> {
    let mut centroids: Vec<Vec<F>> = Vec::with_capacity(k);
    centroids.push(xs[rng.gen_range(0..xs.len())].clone());
    while centroids.len() < k {
        let d2: Vec<f64> = xs
            .iter()
            .map(|x| {
                centroids
                    .iter()
                    .map(|c| dist_sq(x, c).to_f64_lossy())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = xs.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // All points coincide with existing centroids.
            rng.gen_range(0..xs.len())
        };
        centroids.push(xs[pick].clone());
    }
    centroids
}

fn lloyd<F: Float>(xs: &[Vec<F>], params: &KMeansParams, rng: &mut ChaCha8Rng) -> LloydRun<F> {
    let k = params.k;
    let d = xs[0].len();
    let mut centroids = kmeans_plus_plus(xs, k, rng);
    let mut assignment = vec![0usize; xs.len()];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..params.max_iter {
        iterations += 1;
        // Assign (ties to the lower cluster index).
        let mut objective = 0.0;
        for (a, x) in assignment.iter_mut().zip(xs) {
            let mut best = 0usize;
            let mut best_d = dist_sq(x, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let dd = dist_sq(x, centroid);
                if dd < best_d {
                    best_d = dd;
                    best = c;
                }
            }
            *a = best;
            objective += best_d.to_f64_lossy();
        }
        history.push(objective);

        // Update.
        let mut sums = vec![vec![F::zero(); d]; k];
        let mut counts = vec![0usize; k];
        for (&a, x) in assignment.iter().zip(xs) {
            counts[a] += 1;
            for (s, &v) in sums[a].iter_mut().zip(x) {
                *s = *s + v;
            }
        }
        let mut movement = F::zero();
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seat an empty cluster at the point farthest from its
                // current centroid (deterministic: max distance, lowest index).
                let far = xs
                    .iter()
                    .enumerate()
                    .max_by(|(ia, a), (ib, b)| {
                        dist_sq(a, &centroids[assignment[*ia]])
                            .partial_cmp(&dist_sq(b, &centroids[assignment[*ib]]))
                            .expect("finite distances")
                            .then(ib.cmp(ia))
                    })
                    .map(|(i, _)| i)
                    .expect("non-empty training set");
                let moved = dist_sq(&centroids[c], &xs[far]).sqrt();
                if moved > movement {
                    movement = moved;
                }
                centroids[c] = xs[far].clone();
                continue;
            }
            let n = F::from_usize_lossy(counts[c]);
            let new_c: Vec<F> = sums[c].iter().map(|&s| s / n).collect();
            let moved = dist_sq(&centroids[c], &new_c).sqrt();
            if moved > movement {
                movement = moved;
            }
            centroids[c] = new_c;
        }
        if movement.to_f64_lossy() < params.tol {
            converged = true;
            break;
        }
    }

    // Final objective/assignment against the settled centroids.
    let mut objective = 0.0;
    for (a, x) in assignment.iter_mut().zip(xs) {
        let mut best = 0usize;
        let mut best_d = dist_sq(x, &centroids[0]);
        for (c, centroid) in centroids.iter().enumerate().skip(1) {
            let dd = dist_sq(x, centroid);
            if dd < best_d {
                best_d = dd;
                best = c;
            }
        }
        *a = best;
        objective += best_d.to_f64_lossy();
    }
    history.push(objective);

    LloydRun {
        centroids,
        assignment,
        objective,
        history,
        iterations,
        converged,
    }
}

pub(crate) fn fit<F: Float>(
    params: &KMeansParams,
    seed: u64,
    xs: &[Vec<F>],
    ys: &[ClassLabel],
) -> Result<(ModelState<F>, TrainingSummary), ModelError> {
    if xs.iter().all(|x| x == &xs[0]) {
        return Err(ModelError::Degenerate(
            "all training vectors are identical; clusters are undefined".into(),
        ));
    }
    if params.k > xs.len() {
        return Err(ModelError::InvalidParams(format!(
            "k={} exceeds {} training points",
            params.k,
            xs.len()
        )));
    }

    let mut best: Option<LloydRun<F>> = None;
    for restart in 0..params.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            seed,
            &format!("model/kmeans/restart/{restart}"),
        ));
        let run = lloyd(xs, params, &mut rng);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");

    // Color clusters by majority training label; ties and empty clusters
    // fall to normal.
    let mut labels = Vec::with_capacity(params.k);
    for c in 0..params.k {
        let mut pos = 0usize;
        let mut neg = 0usize;
        for (&a, &y) in best.assignment.iter().zip(ys) {
            if a == c {
                match y {
                    ClassLabel::Intrusion => pos += 1,
                    ClassLabel::Normal => neg += 1,
                }
            }
        }
        labels.push(if pos > neg {
            ClassLabel::Intrusion
        } else {
            ClassLabel::Normal
        });
    }

    let mut pair_sum = F::zero();
    let mut pairs = 0usize;
    for i in 0..best.centroids.len() {
        for j in (i + 1)..best.centroids.len() {
            pair_sum = pair_sum + dist_sq(&best.centroids[i], &best.centroids[j]).sqrt();
            pairs += 1;
        }
    }
    let mut scale = if pairs == 0 {
        F::one()
    } else {
        pair_sum / F::from_usize_lossy(pairs)
    };
    if scale <= F::zero() {
        scale = F::one();
    }

    let summary = TrainingSummary {
        iterations: best.iterations,
        converged: best.converged,
        objective: best.objective,
    };
    Ok((
        ModelState::KMeans(KMeansState {
            centroids: best.centroids,
            labels,
            scale,
            objective_history: best.history,
        }),
        summary,
    ))
}
