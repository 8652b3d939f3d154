//! Merging of per-segment field estimates into environment letters,
//! construction of the augmented Kalman filter bank, and rasterization of
//! the attractor intensity map.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{eval_field, FarFieldParams, NearFieldParams, SwitchingField};
use crate::filter::{innovate, update, FilterConfig, FilterState, Innovation};
use crate::fmath;
use crate::linalg::Mat;
use crate::traj::{Point, Trajectory};

/// One per-segment estimate of a full switching field, before merging.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEstimate {
    pub near: NearFieldParams,
    pub far: FarFieldParams,
    pub r_switch: f64,
}

/// A merged attractive field: one letter of the environment vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorLetter {
    pub m: usize,
    pub params: NearFieldParams,
    pub far: FarFieldParams,
    pub r_switch: f64,
    /// Number of contributing segment estimates.
    pub support: usize,
}

impl AttractorLetter {
    pub fn field(&self) -> SwitchingField {
        SwitchingField { near: self.params.clone(), far: self.far, r_switch: self.r_switch }
    }
}

/// The learned environment vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Atlas {
    pub letters: Vec<AttractorLetter>,
    pub dim: usize,
}

/// Augmented Kalman model for one letter: random-walk dynamics plus the
/// letter's field as a control law.
#[derive(Debug, Clone, PartialEq)]
pub struct BankModel {
    pub letter_ref: usize,
    pub field: SwitchingField,
    pub cfg: FilterConfig,
}

// ---------------------------------------------------------------------------
// k-means with silhouette model selection

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    let dim = points[0].len();
    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].clone());
    while centers.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| centers.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            centers.push(points[rng.gen_range(0..n)].clone());
            continue;
        }
        let mut pick = rng.gen_range(0.0..total);
        let mut idx = 0;
        for (i, w) in d2.iter().enumerate() {
            pick -= w;
            if pick <= 0.0 {
                idx = i;
                break;
            }
        }
        centers.push(points[idx].clone());
    }

    let mut assign = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| {
                    sq_dist(p, &centers[a]).partial_cmp(&sq_dist(p, &centers[b])).expect("finite")
                })
                .expect("k >= 1");
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster on the farthest point.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[assign[a]])
                            .partial_cmp(&sq_dist(&points[b], &centers[assign[b]]))
                            .expect("finite")
                    })
                    .expect("non-empty");
                centers[c] = points[far].clone();
                changed = true;
            } else {
                for (cc, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *cc = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points.iter().zip(&assign).map(|(p, &a)| sq_dist(p, &centers[a])).sum();
    (assign, inertia)
}

/// Mean silhouette coefficient; singleton clusters score zero.
fn silhouette(points: &[Vec<f64>], assign: &[usize], k: usize) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let own = assign[i];
        let own_size = assign.iter().filter(|&&a| a == own).count();
        if own_size <= 1 {
            continue;
        }
        let mut intra = 0.0;
        let mut inter = vec![(0.0f64, 0usize); k];
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = fmath::sqrt(sq_dist(&points[i], &points[j]));
            if assign[j] == own {
                intra += d;
            } else {
                inter[assign[j]].0 += d;
                inter[assign[j]].1 += 1;
            }
        }
        let a = intra / (own_size - 1) as f64;
        let b = inter
            .iter()
            .filter(|(_, c)| *c > 0)
            .map(|(s, c)| s / *c as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}

const KMEANS_RESTARTS: usize = 20;
const SILHOUETTE_FLOOR: f64 = 0.25;

fn best_assignment(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9e3779b9));
        let (assign, inertia) = lloyd(points, k, &mut rng);
        if best.as_ref().map_or(true, |(_, bi)| inertia < *bi) {
            best = Some((assign, inertia));
        }
    }
    best.expect("at least one restart").0
}

/// Clusters per-segment estimates on their center coordinates, choosing k
/// by the best silhouette score (k = 1 when every candidate scores below
/// the floor), and averages the members of each cluster into a letter.
pub fn cluster_attractors(estimates: &[FieldEstimate], k_max: usize, seed: u64) -> Result<Atlas> {
    if estimates.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let dim = estimates[0].near.x0.dim();
    let points: Vec<Vec<f64>> = estimates.iter().map(|e| e.near.x0.coords.clone()).collect();

    let mut chosen: Vec<usize> = vec![0; points.len()];
    let mut chosen_k = 1;
    let mut best_score = f64::NEG_INFINITY;
    for k in 2..=k_max.min(points.len().saturating_sub(1)) {
        let assign = best_assignment(&points, k, seed);
        let score = silhouette(&points, &assign, k);
        if score > best_score {
            best_score = score;
            if score >= SILHOUETTE_FLOOR {
                chosen = assign;
                chosen_k = k;
            }
        }
    }

    let mut letters = Vec::with_capacity(chosen_k);
    for m in 0..chosen_k {
        let members: Vec<&FieldEstimate> = estimates
            .iter()
            .zip(&chosen)
            .filter(|(_, &a)| a == m)
            .map(|(e, _)| e)
            .collect();
        if members.is_empty() {
            continue;
        }
        let p = members.len() as f64;
        let mean = |f: &dyn Fn(&FieldEstimate) -> f64| members.iter().map(|e| f(e)).sum::<f64>() / p;
        let mut x0 = vec![0.0; dim];
        for e in &members {
            for (c, v) in x0.iter_mut().zip(&e.near.x0.coords) {
                *c += v / p;
            }
        }
        letters.push(AttractorLetter {
            m: letters.len(),
            params: NearFieldParams {
                beta: mean(&|e| e.near.beta),
                alpha: mean(&|e| e.near.alpha),
                x0: Point::new(x0),
                sigma: mean(&|e| e.near.sigma),
            },
            far: FarFieldParams {
                mu_log: mean(&|e| e.far.mu_log),
                sigma_far: mean(&|e| e.far.sigma_far),
            },
            r_switch: mean(&|e| e.r_switch),
            support: members.len(),
        });
    }
    Ok(Atlas { letters, dim })
}

// ---------------------------------------------------------------------------
// Filter bank

/// One augmented model per letter.
pub fn build_filter_bank(atlas: &Atlas, cfg: &FilterConfig) -> Vec<BankModel> {
    atlas
        .letters
        .iter()
        .map(|l| BankModel { letter_ref: l.m, field: l.field(), cfg: cfg.clone() })
        .collect()
}

/// Prediction step of the augmented model: the field evaluated at the
/// current position estimate acts as the control velocity.
fn predict_augmented(state: &FilterState, model: &BankModel) -> FilterState {
    let cfg = &model.cfg;
    let n = cfg.n;
    let g = eval_field(&model.field, &Point::from(&state.mean[..n]));
    let mut mean = vec![0.0; 2 * n];
    for i in 0..n {
        mean[i] = state.mean[i] + cfg.dk * g[i];
        mean[n + i] = g[i];
    }
    let mut cov = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] = state.cov[(i, j)];
        }
        cov[(i, i)] += cfg.q_pos;
        cov[(n + i, n + i)] = cfg.q_vel;
    }
    FilterState { mean, cov }
}

/// Runs the letter's augmented filter over a trajectory and returns the
/// innovation sequence; it tends to zero when the letter explains the
/// motion.
pub fn augmented_innovation(model: &BankModel, t: &Trajectory) -> Result<Vec<Innovation>> {
    if t.dim() != model.cfg.n {
        return Err(Error::DimensionMismatch { expected: model.cfg.n, got: t.dim() });
    }
    let mut state = FilterState::init(&t.observations[0].z, &model.cfg);
    let mut out = Vec::with_capacity(t.len() - 1);
    for obs in &t.observations[1..] {
        let pred = predict_augmented(&state, model);
        let inn = innovate(&pred, &obs.z, obs.k, &model.cfg)?;
        state = update(&pred, &inn, &model.cfg)?;
        out.push(inn);
    }
    Ok(out)
}

/// Mean innovation norm of a model over a trajectory; the bank's score
/// for "does this letter explain the motion".
pub fn mean_innovation_norm(model: &BankModel, t: &Trajectory) -> Result<f64> {
    let inns = augmented_innovation(model, t)?;
    let total: f64 = inns.iter().map(|i| fmath::hypot_slice(&i.y)).sum();
    Ok(total / inns.len() as f64)
}

// ---------------------------------------------------------------------------
// Raster map

/// Row-major intensity grid over an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub min: [f64; 2],
    pub max: [f64; 2],
    /// Cells per axis.
    pub resolution: usize,
    /// Row-major values; row index follows the y axis.
    pub values: Vec<f64>,
}

impl RasterGrid {
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let dx = (self.max[0] - self.min[0]) / self.resolution as f64;
        let dy = (self.max[1] - self.min[1]) / self.resolution as f64;
        (self.min[0] + (col as f64 + 0.5) * dx, self.min[1] + (row as f64 + 0.5) * dy)
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.resolution + col]
    }
}

/// Sum of the deceleration-term magnitudes of every letter, sampled at
/// cell centers: centers of force render as maxima.
pub fn rasterize_field_map(
    atlas: &Atlas,
    min: [f64; 2],
    max: [f64; 2],
    resolution: usize,
) -> Result<RasterGrid> {
    if resolution < 2 {
        return Err(Error::Contract("raster resolution must be at least 2"));
    }
    if !(max[0] > min[0] && max[1] > min[1]) {
        return Err(Error::Contract("degenerate raster bounds"));
    }
    let mut grid = RasterGrid { min, max, resolution, values: vec![0.0; resolution * resolution] };
    for row in 0..resolution {
        for col in 0..resolution {
            let (x, y) = grid.cell_center(row, col);
            let mut v = 0.0;
            for l in &atlas.letters {
                let dx = x - l.params.x0.coords[0];
                let dy = y - l.params.x0.coords[1];
                let r2 = dx * dx + dy * dy;
                v += l.params.alpha * fmath::exp(-r2 / (l.params.sigma * l.params.sigma));
            }
            grid.values[row * resolution + col] = v;
        }
    }
    Ok(grid)
}
