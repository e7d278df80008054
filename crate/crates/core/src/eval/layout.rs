use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{SocialGraph, UserId};
use crate::exec::Executor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Lay out a seeded random subset of at most this many users, with the
    /// follow edges among them.
    pub max_nodes: Option<usize>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            seed: 42,
            max_nodes: Some(2_000),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub user_id: UserId,
    pub x: f64,
    pub y: f64,
}

/// Fruchterman-Reingold layout on a square of area `n`, so the ideal edge
/// length `k` is 1. Repulsion `k²/d` between all pairs, attraction `d²/k`
/// along each followed pair once, displacement capped by a
/// temperature that cools linearly from `√n / 10` to 0.
pub fn fr_layout(social: &SocialGraph, cfg: &LayoutConfig, exec: Executor) -> Vec<Position> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = social.num_users();
    let mut nodes: Vec<usize> = match cfg.max_nodes {
        Some(m) if m < total => sample(&mut rng, total, m).into_vec(),
        _ => (0..total).collect(),
    };
    nodes.sort_unstable();
    let n = nodes.len();
    let local: std::collections::HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut edges = Vec::new();
    for (i, &u) in nodes.iter().enumerate() {
        for &v in social.following_of(u) {
            if let Some(&j) = local.get(&(v as usize)) {
                edges.push((i.min(j), i.max(j)));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let side = (n as f64).sqrt();
    let k = 1.0;
    let mut pos: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(0.0..side.max(1.0)), rng.random_range(0.0..side.max(1.0))])
        .collect();
    let t0 = side.max(1.0) / 10.0;

    for it in 0..cfg.iterations {
        let temperature = t0 * (1.0 - it as f64 / cfg.iterations as f64);
        let current = &pos;
        let mut disp: Vec<[f64; 2]> = exec.map((0..n).collect(), |i| {
            let mut d = [0.0, 0.0];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dx = current[i][0] - current[j][0];
                let dy = current[i][1] - current[j][1];
                let dist = (dx * dx + dy * dy).sqrt().max(1e-9);
                let f = k * k / dist;
                d[0] += dx / dist * f;
                d[1] += dy / dist * f;
            }
            d
        });
        for &(i, j) in &edges {
            let dx = pos[i][0] - pos[j][0];
            let dy = pos[i][1] - pos[j][1];
            let dist = (dx * dx + dy * dy).sqrt().max(1e-9);
            let f = dist * dist / k;
            disp[i][0] -= dx / dist * f;
            disp[i][1] -= dy / dist * f;
            disp[j][0] += dx / dist * f;
            disp[j][1] += dy / dist * f;
        }
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if len > 0.0 {
                let step = len.min(temperature);
                p[0] += d[0] / len * step;
                p[1] += d[1] / len * step;
            }
        }
    }

    nodes
        .iter()
        .zip(pos)
        .map(|(&u, [x, y])| Position {
            user_id: social.user_at(u).user_id,
            x,
            y,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::user;

    fn graph(n: u64, follows: &[(u64, u64)]) -> SocialGraph {
        SocialGraph::new(
            (0..n).map(|i| user(i, 0)).collect(),
            follows.iter().map(|&(a, b)| (UserId(a), UserId(b))),
        )
        .unwrap()
    }

    #[test]
    fn pair_settles_at_ideal_length() {
        let g = graph(2, &[(0, 1)]);
        let cfg = LayoutConfig {
            iterations: 500,
            ..LayoutConfig::default()
        };
        let p = fr_layout(&g, &cfg, Executor::Sequential);
        let d = ((p[0].x - p[1].x).powi(2) + (p[0].y - p[1].y).powi(2)).sqrt();
        assert!((d - 1.0).abs() < 0.01, "{d}");
    }

    #[test]
    fn single_node_stays_put() {
        let g = graph(1, &[]);
        let cfg = LayoutConfig::default();
        let moved = fr_layout(&g, &cfg, Executor::Sequential);
        let still = fr_layout(&g, &LayoutConfig { iterations: 0, ..cfg }, Executor::Sequential);
        assert_eq!(moved, still);
    }

    #[test]
    fn seed_deterministic_and_executor_independent() {
        let g = graph(30, &[(1, 0), (2, 0), (3, 1), (4, 2), (5, 4), (6, 5)]);
        let cfg = LayoutConfig {
            iterations: 40,
            max_nodes: Some(20),
            ..LayoutConfig::default()
        };
        let a = fr_layout(&g, &cfg, Executor::Sequential);
        assert_eq!(a.len(), 20);
        assert_eq!(a, fr_layout(&g, &cfg, Executor::Parallel));
        assert_ne!(a, fr_layout(&g, &LayoutConfig { seed: 1, ..cfg }, Executor::Sequential));
    }
}
