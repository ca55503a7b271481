//! Random-walk transition structure on a frozen graph.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::AnalysisError;
use crate::designs::DesignConfig;
use crate::graph::{NodeId, TemporalGraph};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Dense row-stochastic matrix over a frozen graph's nodes, in ascending id
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    nodes: Vec<NodeId>,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Walk that stays with `lazy`, otherwise jumps uniformly with
    /// `steady_jump`, otherwise follows a uniform out-link; a node with no
    /// out-links either jumps uniformly (`jump_when_stuck`) or holds.
    pub fn from_graph(graph: &TemporalGraph, lazy: f64, steady_jump: f64, jump_when_stuck: bool) -> Self {
        let nodes: Vec<NodeId> = graph.nodes().to_vec();
        let n = nodes.len();
        let mut data = vec![0.0; n * n];
        let uniform = if n > 0 { 1.0 / n as f64 } else { 0.0 };
        for (a, &i) in nodes.iter().enumerate() {
            let row = &mut data[a * n..(a + 1) * n];
            row[a] += lazy;
            let moving = 1.0 - lazy;
            for x in row.iter_mut() {
                *x += moving * steady_jump * uniform;
            }
            let follow = moving * (1.0 - steady_jump);
            let out = graph.out_links(i).expect("live");
            if out.is_empty() {
                if jump_when_stuck {
                    for x in row.iter_mut() {
                        *x += follow * uniform;
                    }
                } else {
                    row[a] += follow;
                }
            } else {
                let share = follow / out.len() as f64;
                for j in out {
                    let b = nodes.binary_search(j).expect("live");
                    row[b] += share;
                }
            }
        }
        Self { nodes, data }
    }

    /// Transition structure of a random-walk design's parameters.
    pub fn from_design(graph: &TemporalGraph, cfg: &DesignConfig) -> Self {
        Self::from_graph(graph, cfg.lazy_prob, cfg.steady_jump_prob, cfg.jump_when_stuck)
    }

    /// Row-major `n x n` matrix; rows must be stochastic to 1e-12.
    pub fn from_rows(nodes: Vec<NodeId>, data: Vec<f64>) -> Result<Self, AnalysisError> {
        let n = nodes.len();
        assert_eq!(data.len(), n * n, "matrix shape");
        for r in 0..n {
            let row = &data[r * n..(r + 1) * n];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 || row.iter().any(|&x| x < 0.0) {
                return Err(AnalysisError::NotStochastic { row: r, sum });
            }
        }
        Ok(Self { nodes, data })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.len();
        &self.data[row * n..(row + 1) * n]
    }

    /// `y = x P` for a row vector `x`.
    pub fn left_mul(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        y.iter_mut().for_each(|v| *v = 0.0);
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            for (yb, &p) in y.iter_mut().zip(&self.data[a * n..(a + 1) * n]) {
                *yb += xa * p;
            }
        }
    }

    /// `max_j |(x P)_j - x_j|`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.len()];
        self.left_mul(x, &mut y);
        y.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn reaches_all(&self, transpose: bool) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(a) = queue.pop_front() {
            for (b, s) in seen.iter_mut().enumerate() {
                let p = if transpose { self.get(b, a) } else { self.get(a, b) };
                if p > 0.0 && !*s {
                    *s = true;
                    queue.push_back(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn is_irreducible(&self) -> bool {
        !self.is_empty() && self.reaches_all(false) && self.reaches_all(true)
    }
}

pub fn stationary_distribution(tm: &TransitionMatrix, tol: f64) -> Result<Vec<f64>, AnalysisError> {
    stationary_distribution_with(tm, tol, DEFAULT_MAX_ITERATIONS)
}

/// Power iteration from the uniform vector. The iteration runs on
/// `(I + P) / 2`, which shares `P`'s stationary vector and is aperiodic, so
/// periodic irreducible chains converge too. The returned `pi` satisfies
/// `max |pi P - pi| < tol`.
pub fn stationary_distribution_with(
    tm: &TransitionMatrix,
    tol: f64,
    max_iterations: usize,
) -> Result<Vec<f64>, AnalysisError> {
    if tm.is_empty() {
        return Err(AnalysisError::EmptyGraph);
    }
    if !tm.is_irreducible() {
        return Err(AnalysisError::Reducible);
    }
    let n = tm.len();
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        tm.left_mul(&x, &mut y);
        residual = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual < tol {
            return Ok(x);
        }
        let mut total = 0.0;
        for (xa, ya) in x.iter_mut().zip(&y) {
            *xa = 0.5 * (*xa + ya);
            total += *xa;
        }
        x.iter_mut().for_each(|v| *v /= total);
    }
    Err(AnalysisError::NonConvergence {
        iterations: max_iterations,
        residual,
    })
}

/// Second-largest eigenvalue modulus of a transition matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingEstimate {
    pub slem: f64,
    pub iterations: usize,
}

impl MixingEstimate {
    /// A walk with `|lambda_2| = 1` (periodic) never mixes.
    pub fn is_mixing(&self) -> bool {
        self.slem < 1.0 - 1e-9
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Removes the component along `pi` so the vector sums to zero; the
/// sum-zero subspace is exactly the span of the non-unit eigenvectors.
fn deflate(x: &mut [f64], pi: &[f64]) {
    let s: f64 = x.iter().sum();
    for (v, p) in x.iter_mut().zip(pi) {
        *v -= s * p;
    }
}

/// Largest eigenvalue modulus of a real 2x2 matrix `[[a, b], [c, d]]`.
fn modulus_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let half_tr = 0.5 * (a + d);
    let det = a * d - b * c;
    let half_gap = 0.5 * (a - d);
    // avoids the cancellation in half_tr^2 - det near repeated eigenvalues
    let disc = half_gap * half_gap + b * c;
    if disc >= 0.0 {
        let r = libm::sqrt(disc);
        libm::fabs(half_tr + r).max(libm::fabs(half_tr - r))
    } else {
        libm::sqrt(det.max(0.0))
    }
}

/// Orthonormalises `(u, v)` in place; returns how many directions remain.
fn orthonormalise(u: &mut [f64], v: &mut [f64]) -> usize {
    let nu = norm(u);
    if nu < 1e-300 {
        return 0;
    }
    u.iter_mut().for_each(|x| *x /= nu);
    let c = dot(u, v);
    for (vx, ux) in v.iter_mut().zip(u.iter()) {
        *vx -= c * ux;
    }
    let nv = norm(v);
    if nv < 1e-12 * nu.max(1.0) {
        return 1;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    2
}

/// `|lambda_2|` by two-vector subspace iteration on the chain with the
/// stationary direction deflated away, reading the modulus off the 2x2
/// Rayleigh-Ritz matrix. Two vectors resolve a complex-conjugate pair.
pub fn mixing_estimate(tm: &TransitionMatrix) -> Result<MixingEstimate, AnalysisError> {
    mixing_estimate_with(tm, 1e-12, 100_000)
}

pub fn mixing_estimate_with(
    tm: &TransitionMatrix,
    tol: f64,
    max_iterations: usize,
) -> Result<MixingEstimate, AnalysisError> {
    let n = tm.len();
    if n == 0 {
        return Err(AnalysisError::EmptyGraph);
    }
    if n == 1 {
        return Ok(MixingEstimate { slem: 0.0, iterations: 0 });
    }
    let pi = stationary_distribution(tm, DEFAULT_TOL)?;
    let mut u: Vec<f64> = (0..n).map(|i| libm::sin(1.0 + 0.7 * i as f64)).collect();
    let mut v: Vec<f64> = (0..n).map(|i| libm::cos(0.3 + 1.3 * i as f64)).collect();
    deflate(&mut u, &pi);
    deflate(&mut v, &pi);
    let mut pu = vec![0.0; n];
    let mut pv = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut stable = 0;
    for it in 1..=max_iterations {
        let dims = orthonormalise(&mut u, &mut v);
        if dims == 0 {
            return Ok(MixingEstimate { slem: 0.0, iterations: it });
        }
        tm.left_mul(&u, &mut pu);
        deflate(&mut pu, &pi);
        let est = if dims == 1 {
            libm::fabs(dot(&pu, &u))
        } else {
            tm.left_mul(&v, &mut pv);
            deflate(&mut pv, &pi);
            // Ritz matrix H = Q^T (Q P)^T in the row-vector convention
            modulus_2x2(dot(&pu, &u), dot(&pv, &u), dot(&pu, &v), dot(&pv, &v))
        };
        if libm::fabs(est - prev) < tol {
            stable += 1;
            if stable >= 3 {
                return Ok(MixingEstimate { slem: est.min(1.0), iterations: it });
            }
        } else {
            stable = 0;
        }
        prev = est;
        if dims == 1 {
            // keep v degenerate so the next round stays one-dimensional
            v.iter_mut().for_each(|x| *x = 0.0);
        } else {
            v.copy_from_slice(&pv);
        }
        u.copy_from_slice(&pu);
    }
    Err(AnalysisError::NonConvergence {
        iterations: max_iterations,
        residual: prev,
    })
}
