//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use cascades::{Network, Tree};

pub fn bfs_average_path_length(tree: &Tree) -> f64 {
    let n = tree.len();
    let mut adj = vec![Vec::new(); n];
    for v in 1..n {
        let p = tree.parent(v).unwrap();
        adj[v].push(p);
        adj[p].push(v);
    }
    let mut total = 0u64;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        total += dist.iter().map(|&d| d as u64).sum::<u64>();
    }
    total as f64 / (n * (n - 1)) as f64
}

/// Exact `Pr[node k attaches to j]` for `k < n`, by enumerating every
/// growth history.
pub fn exact_attachment(n: usize, theta: f64) -> Vec<Vec<f64>> {
    fn grow(deg: &mut Vec<usize>, p: f64, n: usize, theta: f64, out: &mut Vec<Vec<f64>>) {
        let k = deg.len();
        if k == n {
            return;
        }
        let w: Vec<f64> = deg.iter().map(|&d| (d as f64).powf(theta)).collect();
        let total: f64 = w.iter().sum();
        for j in 0..k {
            let q = p * w[j] / total;
            out[k][j] += q;
            deg[j] += 1;
            deg.push(1);
            grow(deg, q, n, theta, out);
            deg.pop();
            deg[j] -= 1;
        }
    }
    let mut out: Vec<Vec<f64>> = (0..n).map(|k| vec![0.0; k]).collect();
    out[1][0] = 1.0;
    let mut deg = vec![1, 1];
    grow(&mut deg, 1.0, n, theta, &mut out);
    out
}

/// Exact cascade-size distribution of the single-trial process with uniform
/// view probability, by enumerating every outcome of every trial.
pub fn exact_sizes(net: &Network, seed: usize, beta: f64, gamma: f64) -> Vec<f64> {
    struct Walk<'a> {
        net: &'a Network,
        beta: f64,
        gamma: f64,
        trialed: Vec<bool>,
        out: Vec<f64>,
    }
    impl Walk<'_> {
        fn step(&mut self, frontier: &[usize], p: f64, size: usize) {
            let mut cand: Vec<usize> = frontier
                .iter()
                .flat_map(|&u| self.net.neighbors(u).iter().map(|&v| v as usize))
                .filter(|&v| !self.trialed[v])
                .collect();
            cand.sort_unstable();
            cand.dedup();
            if cand.is_empty() {
                self.out[size] += p;
                return;
            }
            for &v in &cand {
                self.trialed[v] = true;
            }
            // per candidate: 0 no view, 1 view only, 2 view and forward
            for code in 0..3usize.pow(cand.len() as u32) {
                let (mut c, mut q, mut viewed, mut next) = (code, p, 0, Vec::new());
                for &v in &cand {
                    match c % 3 {
                        0 => q *= 1.0 - self.beta,
                        1 => {
                            q *= self.beta * (1.0 - self.gamma);
                            viewed += 1;
                        }
                        _ => {
                            q *= self.beta * self.gamma;
                            viewed += 1;
                            next.push(v);
                        }
                    }
                    c /= 3;
                }
                if q > 0.0 {
                    self.step(&next, q, size + viewed);
                }
            }
            for &v in &cand {
                self.trialed[v] = false;
            }
        }
    }
    let mut w = Walk {
        net,
        beta,
        gamma,
        trialed: vec![false; net.len()],
        out: vec![0.0; net.len() + 1],
    };
    w.trialed[seed] = true;
    w.step(&[seed], 1.0, 1);
    w.out
}
