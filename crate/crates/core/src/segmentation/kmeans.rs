use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const MAX_ITERATIONS: usize = 100;
pub const TOLERANCE: f64 = 1e-8;

pub(crate) fn nearest(centroids: &[Vector3<f64>], p: &Vector3<f64>) -> usize {
    centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, (c - p).norm_squared()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .expect("at least one centroid")
}

/// Lloyd's algorithm with k-means++ seeding. An emptied cluster is re-seeded
/// at the point furthest from its assigned centroid.
pub fn kmeans(data: &[Vector3<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    assert!(k >= 1 && k <= data.len(), "k must be in 1..=len");

    let mut centroids = vec![data[rng.random_range(0..data.len())]];
    let mut d2: Vec<f64> = data.iter().map(|p| (p - centroids[0]).norm_squared()).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            // Remaining points coincide with centroids; take any unused one.
            d2.iter().position(|&d| d > 0.0).unwrap_or(0)
        } else {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = data.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    chosen = i;
                    break;
                }
                u -= d;
            }
            chosen
        };
        let c = data[pick];
        centroids.push(c);
        for (di, p) in d2.iter_mut().zip(data) {
            *di = di.min((p - c).norm_squared());
        }
    }

    let mut assignment = vec![0usize; data.len()];
    for _ in 0..MAX_ITERATIONS {
        for (a, p) in assignment.iter_mut().zip(data) {
            *a = nearest(&centroids, p);
        }
        let mut sums = vec![Vector3::zeros(); k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignment.iter().zip(data) {
            sums[a] += p;
            counts[a] += 1;
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            let next = if counts[j] > 0 {
                sums[j] / counts[j] as f64
            } else {
                let far = (0..data.len())
                    .max_by(|&a, &b| {
                        let da = (data[a] - centroids[assignment[a]]).norm_squared();
                        let db = (data[b] - centroids[assignment[b]]).norm_squared();
                        da.total_cmp(&db)
                    })
                    .expect("non-empty data");
                data[far]
            };
            shift = shift.max((next - centroids[j]).norm());
            centroids[j] = next;
        }
        if shift < TOLERANCE {
            break;
        }
    }
    centroids
}
