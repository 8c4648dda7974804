use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Ray, Vec3};
use crate::error::{Error, Result};

/// Up to this many points every pair is tried instead of sampling.
pub const EXHAUSTIVE_MAX_POINTS: usize = 5;

const DISTINCT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    /// Point-to-line distance below which a point is an inlier, meters.
    pub inlier_threshold: f64,
    /// Sampled hypotheses when there are more than [`EXHAUSTIVE_MAX_POINTS`].
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            inlier_threshold: 0.01,
            iterations: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    /// Origin at the inlier centroid, direction along the principal axis.
    pub ray: Ray,
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
    /// Sum of inlier distances to the refined line.
    pub residual: f64,
}

/// Fits a 3D line with RANSAC followed by a principal-axis refinement.
///
/// Hypotheses are lines through two points. With at most
/// [`EXHAUSTIVE_MAX_POINTS`] points all pairs are enumerated in index order,
/// otherwise `iterations` pairs are drawn from a seeded ChaCha8 stream. The
/// hypothesis with the most inliers wins; equal counts go to the lower sum of
/// inlier distances, then to the earlier hypothesis.
///
/// The input is assumed ordered along the line (for a finger: proximal to
/// distal); the returned direction points from the first inlier towards the
/// last one.
pub fn fit_line_ransac(points: &[Vec3], params: &RansacParams) -> Result<LineFit> {
    if !(params.inlier_threshold > 0.0) || !params.inlier_threshold.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "inlier threshold must be positive, got {}",
            params.inlier_threshold
        )));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("line-fit input"));
    }
    let n = points.len();
    let has_distinct_pair = points
        .iter()
        .enumerate()
        .any(|(i, p)| points[i + 1..].iter().any(|q| p.distance(*q) > DISTINCT_EPS));
    if !has_distinct_pair {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 distinct points, got {n} point(s)"
        )));
    }

    let mut best: Option<Consensus> = None;
    let mut consider = |i: usize, j: usize| {
        if let Some(c) = Consensus::evaluate(points, i, j, params.inlier_threshold) {
            if best.as_ref().map_or(true, |b| c.beats(b)) {
                best = Some(c);
            }
        }
    };
    if n <= EXHAUSTIVE_MAX_POINTS {
        for i in 0..n {
            for j in i + 1..n {
                consider(i, j);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        for _ in 0..params.iterations.max(1) {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            consider(i.min(j), i.max(j));
        }
    }
    // sampling can miss every distinct pair only on pathological inputs
    let best = match best {
        Some(b) => b,
        None => {
            let (i, j) = first_distinct_pair(points);
            Consensus::evaluate(points, i, j, params.inlier_threshold)
                .expect("distinct pair yields a hypothesis")
        }
    };

    let inlier_pts: Vec<Vec3> = points
        .iter()
        .zip(&best.inliers)
        .filter_map(|(p, &keep)| keep.then_some(*p))
        .collect();
    let centroid = Vec3::centroid(inlier_pts.iter().copied()).expect("non-empty inliers");
    let mut direction = principal_axis(&inlier_pts, centroid).unwrap_or(best.direction);
    let span = *inlier_pts.last().unwrap() - inlier_pts[0];
    if direction.dot(span) < 0.0 {
        direction = -direction;
    }
    let ray = Ray::new(centroid, direction)?;
    let residual = inlier_pts.iter().map(|p| ray.distance_to_line(*p)).sum();
    Ok(LineFit {
        ray,
        inlier_count: inlier_pts.len(),
        inliers: best.inliers,
        residual,
    })
}

struct Consensus {
    direction: Vec3,
    inliers: Vec<bool>,
    count: usize,
    residual: f64,
}

impl Consensus {
    fn evaluate(points: &[Vec3], i: usize, j: usize, threshold: f64) -> Option<Consensus> {
        let a = points[i];
        let direction = (points[j] - a).normalized()?;
        let line = Ray {
            origin: a,
            direction,
        };
        let mut count = 0;
        let mut residual = 0.0;
        let inliers = points
            .iter()
            .map(|p| {
                let d = line.distance_to_line(*p);
                let inside = d < threshold;
                if inside {
                    count += 1;
                    residual += d;
                }
                inside
            })
            .collect();
        Some(Consensus {
            direction,
            inliers,
            count,
            residual,
        })
    }

    fn beats(&self, other: &Consensus) -> bool {
        self.count > other.count || (self.count == other.count && self.residual < other.residual)
    }
}

fn first_distinct_pair(points: &[Vec3]) -> (usize, usize) {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].distance(points[j]) > DISTINCT_EPS {
                return (i, j);
            }
        }
    }
    unreachable!("caller checked for a distinct pair")
}

/// Dominant eigenvector of the scatter matrix about `centroid`.
fn principal_axis(points: &[Vec3], centroid: Vec3) -> Option<Vec3> {
    let mut scatter = Matrix3::<f64>::zeros();
    for p in points {
        let d = *p - centroid;
        let v = nalgebra::Vector3::new(d.x, d.y, d.z);
        scatter += v * v.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let col = eig.eigenvectors.column(idx);
    Vec3::new(col[0], col[1], col[2]).normalized()
}
