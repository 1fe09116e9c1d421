//! Isolation Forest over fixed-dimension feature vectors (each time step is
//! one feature). Anomaly score `s(x) = 2^(-E[h(x)] / c(psi))` with the
//! standard average-path-length normalizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EULER_MASCHERONI: f64 = 0.5772156649;

/// Average path length of an unsuccessful search in a binary search tree
/// with `n` points: `c(n) = 2 H(n-1) - 2 (n-1)/n`, `H(i) = ln(i) + gamma`.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let nf = n as f64;
    2.0 * ((nf - 1.0).ln() + EULER_MASCHERONI) - 2.0 * (nf - 1.0) / nf
}

/// `2^(-mean_path / c(psi))`; exposed so the score formula is checkable in
/// isolation.
pub fn anomaly_score_from_path(mean_path: f64, psi: usize) -> f64 {
    2f64.powf(-mean_path / average_path_length(psi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IForestConfig {
    pub n_trees: usize,
    /// Subsample size per tree, capped at the dataset size.
    pub subsample: usize,
    pub seed: u64,
}

impl Default for IForestConfig {
    fn default() -> Self {
        IForestConfig {
            n_trees: 100,
            subsample: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn build(
        data: &[Vec<f64>],
        indices: Vec<usize>,
        max_depth: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut tree = Tree { nodes: Vec::new() };
        tree.grow(data, indices, 0, max_depth, rng);
        tree
    }

    fn grow(
        &mut self,
        data: &[Vec<f64>],
        indices: Vec<usize>,
        depth: usize,
        max_depth: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        if depth >= max_depth || indices.len() <= 1 {
            self.nodes.push(Node::Leaf {
                size: indices.len(),
            });
            return self.nodes.len() - 1;
        }
        let dim = data[0].len();
        // features that still vary within this node
        let splittable: Vec<(usize, f64, f64)> = (0..dim)
            .filter_map(|f| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &i in &indices {
                    lo = lo.min(data[i][f]);
                    hi = hi.max(data[i][f]);
                }
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if splittable.is_empty() {
            self.nodes.push(Node::Leaf {
                size: indices.len(),
            });
            return self.nodes.len() - 1;
        }
        let (feature, lo, hi) = splittable[rng.gen_range(0..splittable.len())];
        let threshold = rng.gen_range(lo..hi);
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| data[i][feature] < threshold);

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { size: 0 }); // placeholder
        let left = self.grow(data, left_idx, depth + 1, max_depth, rng);
        let right = self.grow(data, right_idx, depth + 1, max_depth, rng);
        self.nodes[slot] = Node::Internal {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }

    /// Path length with the `c(leaf size)` adjustment for unexpanded
    /// leaves.
    fn path_length(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        let mut depth = 0.0;
        loop {
            match &self.nodes[node] {
                Node::Leaf { size } => return depth + average_path_length(*size),
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *threshold { *left } else { *right };
                    depth += 1.0;
                }
            }
        }
    }
}

/// A fitted isolation forest. Scoring is deterministic after fit; scores
/// lie in (0, 1).
#[derive(Debug, Clone)]
pub struct IsolationForest {
    trees: Vec<Tree>,
    psi: usize,
    dim: usize,
}

impl IsolationForest {
    /// Fits `cfg.n_trees` trees, each on a seeded subsample of
    /// `min(cfg.subsample, data.len())` points, grown to depth
    /// `ceil(log2 psi)`.
    pub fn fit(data: &[Vec<f64>], cfg: &IForestConfig) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::invalid_input(
                "isolation forest needs at least 2 training points",
            ));
        }
        let dim = data[0].len();
        if dim == 0 || data.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid_input(
                "training vectors must share a positive dimension",
            ));
        }
        if cfg.n_trees == 0 {
            return Err(Error::invalid_input("n_trees must be positive"));
        }
        let psi = cfg.subsample.min(data.len()).max(2);
        let max_depth = (psi as f64).log2().ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let trees = (0..cfg.n_trees)
            .map(|_| {
                // subsample without replacement via partial shuffle
                let mut indices: Vec<usize> = (0..data.len()).collect();
                for i in 0..psi {
                    let j = rng.gen_range(i..data.len());
                    indices.swap(i, j);
                }
                indices.truncate(psi);
                Tree::build(data, indices, max_depth, &mut rng)
            })
            .collect();
        Ok(IsolationForest { trees, psi, dim })
    }

    pub fn psi(&self) -> usize {
        self.psi
    }

    /// Anomaly score in (0, 1); higher means more isolated.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.dim,
            });
        }
        let mean_path: f64 = self
            .trees
            .iter()
            .map(|t| t.path_length(x))
            .sum::<f64>()
            / self.trees.len() as f64;
        Ok(anomaly_score_from_path(mean_path, self.psi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_checkable_constants() {
        // c(2) = 2 (ln 1 + gamma) - 1
        assert!((average_path_length(2) - 0.15443132980000002).abs() < 1e-10);
        assert_eq!(average_path_length(1), 0.0);
        assert_eq!(average_path_length(0), 0.0);
        // E[h] = c(psi) gives score exactly 0.5
        assert!((anomaly_score_from_path(average_path_length(256), 256) - 0.5).abs() < 1e-12);
        assert!((anomaly_score_from_path(average_path_length(64), 64) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn far_point_scores_above_every_cluster_member() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // tight 2-d cluster around the origin plus one far point
        let mut data: Vec<Vec<f64>> = (0..120)
            .map(|_| vec![rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
            .collect();
        data.push(vec![8.0, 8.0]);
        let forest = IsolationForest::fit(&data, &IForestConfig { seed: 4, ..Default::default() }).unwrap();
        let far = forest.score(&[8.0, 8.0]).unwrap();
        for point in &data[..120] {
            let s = forest.score(point).unwrap();
            assert!(
                far > s,
                "far point {far} not above cluster member {s}"
            );
            assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn scoring_is_deterministic_after_fit() {
        let data: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let cfg = IForestConfig { seed: 3, ..Default::default() };
        let a = IsolationForest::fit(&data, &cfg).unwrap();
        let b = IsolationForest::fit(&data, &cfg).unwrap();
        for point in &data {
            assert_eq!(a.score(point).unwrap(), b.score(point).unwrap());
        }
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(IsolationForest::fit(&[vec![1.0]], &IForestConfig::default()).is_err());
        assert!(IsolationForest::fit(
            &[vec![1.0], vec![1.0, 2.0]],
            &IForestConfig::default()
        )
        .is_err());
    }

    #[test]
    fn score_rejects_wrong_dimension() {
        let data = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]];
        let forest = IsolationForest::fit(&data, &IForestConfig::default()).unwrap();
        assert!(forest.score(&[0.1]).is_err());
    }
}
