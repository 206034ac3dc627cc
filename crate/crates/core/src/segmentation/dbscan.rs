use std::collections::HashMap;

use nalgebra::Vector3;

/// Cluster label for each point; `None` marks noise.
pub type Labels = Vec<Option<usize>>;

struct Grid {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl Grid {
    fn new(points: &[Vector3<f64>], cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(p: &Vector3<f64>, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    fn region(&self, points: &[Vector3<f64>], i: usize, eps: f64, out: &mut Vec<usize>) {
        out.clear();
        let p = points[i];
        let k = Self::key(&p, self.cell);
        let eps2 = eps * eps;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        out.extend(
                            bucket
                                .iter()
                                .copied()
                                .filter(|&j| (points[j] - p).norm_squared() <= eps2),
                        );
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

/// Density-based clustering over Euclidean positions. A point is core when
/// its `eps`-neighbourhood, itself included, holds at least `min_points`.
pub fn dbscan(points: &[Vector3<f64>], eps: f64, min_points: usize) -> (Labels, usize) {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Unvisited,
        Noise,
        Cluster(usize),
    }
    let grid = Grid::new(points, eps);
    let mut state = vec![State::Unvisited; points.len()];
    let mut clusters = 0;
    let mut region = Vec::new();
    let mut frontier = Vec::new();
    for i in 0..points.len() {
        if state[i] != State::Unvisited {
            continue;
        }
        grid.region(points, i, eps, &mut region);
        if region.len() < min_points {
            state[i] = State::Noise;
            continue;
        }
        let c = clusters;
        clusters += 1;
        state[i] = State::Cluster(c);
        frontier.clear();
        frontier.extend(region.iter().copied().filter(|&j| j != i));
        while let Some(j) = frontier.pop() {
            match state[j] {
                State::Noise => {
                    state[j] = State::Cluster(c);
                    continue;
                }
                State::Cluster(_) => continue,
                State::Unvisited => {}
            }
            state[j] = State::Cluster(c);
            grid.region(points, j, eps, &mut region);
            if region.len() >= min_points {
                frontier.extend(region.iter().copied().filter(|&m| state[m] != State::Cluster(c)));
            }
        }
    }
    let labels = state
        .into_iter()
        .map(|s| match s {
            State::Cluster(c) => Some(c),
            _ => None,
        })
        .collect();
    (labels, clusters)
}
