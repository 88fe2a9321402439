//! Seeded k-means with k-means++ initialisation used for prefix bucketing.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Within-cluster sum of squares for an assignment.
pub fn wcss(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

/// Result of a k-means fit, including the per-iteration objective for
/// verification.
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub wcss_history: Vec<f64>,
}

/// Lloyd iterations from a k-means++ seeding; stops when assignments are
/// stable or after `max_iter` rounds. Deterministic for a given seed.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> KMeansFit {
    assert!(k >= 1 && points.len() >= k, "need at least k points");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    while centroids.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // All points coincide with a centroid; fill duplicates.
            centroids.push(points[rng.gen_range(0..points.len())].clone());
            continue;
        }
        let dist = WeightedIndex::new(&d2).expect("nonnegative weights");
        centroids.push(points[dist.sample(&mut rng)].clone());
    }

    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut history = vec![wcss(points, &centroids, &assignment)];

    for _ in 0..max_iter {
        // Recompute centroids; empty clusters keep their previous position.
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (i, c) in centroids.iter_mut().enumerate() {
            if counts[i] > 0 {
                for (slot, s) in c.iter_mut().zip(&sums[i]) {
                    *slot = s / counts[i] as f64;
                }
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        history.push(wcss(points, &centroids, &next));
        if next == assignment {
            break;
        }
        assignment = next;
    }

    KMeansFit {
        centroids,
        assignment,
        wcss_history: history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blobs() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for i in 0..20 {
            pts.push(vec![0.0 + (i % 5) as f64 * 0.1, 1.0]);
            pts.push(vec![100.0 + (i % 5) as f64 * 0.1, -1.0]);
        }
        pts
    }

    #[test]
    fn separates_two_blobs() {
        let pts = two_blobs();
        let fit = kmeans(&pts, 2, 42, 100);
        // Points at even indices share a cluster, odd indices the other.
        let c0 = fit.assignment[0];
        for (i, &a) in fit.assignment.iter().enumerate() {
            if i % 2 == 0 {
                assert_eq!(a, c0);
            } else {
                assert_ne!(a, c0);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let pts = two_blobs();
        let a = kmeans(&pts, 3, 7, 100);
        let b = kmeans(&pts, 3, 7, 100);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.assignment, b.assignment);
    }

    #[test]
    fn wcss_never_increases() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|_| rng.gen_range(-10.0..10.0)).collect())
            .collect();
        let fit = kmeans(&pts, 5, 11, 100);
        for w in fit.wcss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "wcss went up: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn k_equals_n_is_fine() {
        let pts = vec![vec![0.0], vec![5.0], vec![9.0]];
        let fit = kmeans(&pts, 3, 1, 100);
        let mut sorted = fit.assignment.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);
    }

    #[test]
    fn identical_points_do_not_crash() {
        let pts = vec![vec![1.0, 2.0]; 10];
        let fit = kmeans(&pts, 3, 5, 100);
        assert_eq!(fit.assignment.len(), 10);
    }
}
