//! The `(1-ε)`-lazy λ-biased walk and its expected total variation.
//!
//! At an open vertex the counter stays with probability `1-ε`, moves to the
//! parent with probability `ελ/(1+λ)`, and moves to a nearest-non-reward
//! child chosen by the policy θ with probability `ε/(1+λ)`. The expected
//! total variation `E Σ Δ(λ, X_i)` is the stake formula's denominator.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::harmonic::{delta, dh_dlambda};
use crate::linalg::lu_solve;
use crate::num::Real;
use crate::tree::RootRewardTree;

/// A stationary move policy for the minimizing direction: one choice from
/// `min_children(v)` per open vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPolicy {
    /// `choice[v]` is meaningful for open `v` only.
    pub choice: Vec<usize>,
}

impl WalkPolicy {
    /// The default policy: lexicographically least minimizing child.
    pub fn lexicographic(t: &RootRewardTree) -> Self {
        let choice = (0..t.vertex_count())
            .map(|v| {
                if t.is_open(v) {
                    t.min_children(v).unwrap()[0]
                } else {
                    usize::MAX
                }
            })
            .collect();
        WalkPolicy { choice }
    }

    pub fn down(&self, v: usize) -> usize {
        self.choice[v]
    }
}

/// Every stationary policy, when the product of the `min_children` set
/// sizes does not exceed `cap`. Returns `None` above the cap.
pub fn enumerate_policies(t: &RootRewardTree, cap: usize) -> Option<Vec<WalkPolicy>> {
    let open: Vec<usize> = t.open_vertices().collect();
    let mut total = 1usize;
    for &v in &open {
        total = total.checked_mul(t.min_children(v).unwrap().len())?;
        if total > cap {
            return None;
        }
    }
    let mut policies = Vec::with_capacity(total);
    let mut counters = vec![0usize; open.len()];
    loop {
        let mut choice = vec![usize::MAX; t.vertex_count()];
        for (k, &v) in open.iter().enumerate() {
            choice[v] = t.min_children(v).unwrap()[counters[k]];
        }
        policies.push(WalkPolicy { choice });
        let mut k = 0;
        loop {
            if k == open.len() {
                return Some(policies);
            }
            counters[k] += 1;
            if counters[k] < t.min_children(open[k]).unwrap().len() {
                break;
            }
            counters[k] = 0;
            k += 1;
        }
    }
}

/// Outcome of a finished or truncated walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finish {
    /// Absorbed at a boundary vertex at the given time.
    At {
        time: usize,
        vertex: usize,
    },
    Unfinished,
}

/// A sampled trajectory.
#[derive(Debug, Clone)]
pub struct WalkTrace {
    pub path: Vec<usize>,
    pub finish: Finish,
    /// Σ Δ(λ, X_i) over the open-play prefix.
    pub totvar: f64,
}

/// Default step cap: `50 |V|² / ε`, rounded up.
pub fn default_max_steps(t: &RootRewardTree, epsilon: f64) -> usize {
    let v2 = t.vertex_count() * t.vertex_count();
    (50.0 * v2 as f64 / epsilon).ceil() as usize
}

/// Samples one lazy biased walk from `v` with its own RNG stream.
pub fn simulate_walk(
    t: &RootRewardTree,
    epsilon: f64,
    lambda: f64,
    theta: &WalkPolicy,
    v: usize,
    seed: u64,
    max_steps: usize,
) -> WalkTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_walk_with(t, epsilon, lambda, theta, v, &mut rng, max_steps)
}

/// As [`simulate_walk`], but the minimizing move may depend on the step
/// index: `rule(vertex, step)` must return an element of
/// `min_children(vertex)`. Only simulation supports turn-dependent rules;
/// the exact solvers take stationary policies.
#[allow(clippy::too_many_arguments)]
pub fn simulate_walk_with_rule(
    t: &RootRewardTree,
    epsilon: f64,
    lambda: f64,
    mut rule: impl FnMut(usize, usize) -> usize,
    v: usize,
    seed: u64,
    max_steps: usize,
) -> WalkTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_walk(t, epsilon, lambda, &mut rule, v, &mut rng, max_steps)
}

fn simulate_walk_with(
    t: &RootRewardTree,
    epsilon: f64,
    lambda: f64,
    theta: &WalkPolicy,
    v: usize,
    rng: &mut ChaCha8Rng,
    max_steps: usize,
) -> WalkTrace {
    sample_walk(t, epsilon, lambda, &mut |u, _| theta.down(u), v, rng, max_steps)
}

fn sample_walk(
    t: &RootRewardTree,
    epsilon: f64,
    lambda: f64,
    rule: &mut dyn FnMut(usize, usize) -> usize,
    v: usize,
    rng: &mut ChaCha8Rng,
    max_steps: usize,
) -> WalkTrace {
    debug_assert!(t.is_open(v) && max_steps >= 1);
    let gaps: Vec<f64> = (0..t.vertex_count())
        .map(|u| {
            if t.is_open(u) {
                delta(t, lambda, u).unwrap()
            } else {
                0.0
            }
        })
        .collect();
    let p_up = epsilon * lambda / (1.0 + lambda);
    let mut path = vec![v];
    let mut totvar = 0.0;
    let mut cur = v;
    for step in 0..max_steps {
        totvar += gaps[cur];
        let u: f64 = rng.gen();
        cur = if u < 1.0 - epsilon {
            cur
        } else if u < 1.0 - epsilon + p_up {
            t.parent(cur).expect("open vertex has a parent")
        } else {
            let down = rule(cur, step);
            debug_assert!(t.min_children(cur).unwrap().contains(&down));
            down
        };
        path.push(cur);
        if t.is_leaf(cur) {
            let time = path.len() - 1;
            return WalkTrace {
                path,
                finish: Finish::At { time, vertex: cur },
                totvar,
            };
        }
    }
    WalkTrace {
        path,
        finish: Finish::Unfinished,
        totvar,
    }
}

/// Exact `E TotVar(ε, λ, θ, v)`: solves
/// `w(u) = Δ(λ,u) + (1-ε) w(u) + ελ/(1+λ) w(u_+) + ε/(1+λ) w(θ(u))`
/// with `w = 0` on the boundary, by dense LU on the ε-independent system
/// `(I - P̃) x = Δ`, `w = x / ε`.
pub fn expected_totvar_exact<F: Real>(
    t: &RootRewardTree,
    epsilon: F,
    lambda: F,
    theta: &WalkPolicy,
    v: usize,
) -> Result<F, SingularSystem> {
    let w = expected_totvar_exact_all(t, epsilon, lambda, theta)?;
    Ok(w[v])
}

/// As [`expected_totvar_exact`] but for every vertex at once.
pub fn expected_totvar_exact_all<F: Real>(
    t: &RootRewardTree,
    epsilon: F,
    lambda: F,
    theta: &WalkPolicy,
) -> Result<Vec<F>, SingularSystem> {
    let open: Vec<usize> = t.open_vertices().collect();
    let slot: Vec<Option<usize>> = {
        let mut s = vec![None; t.vertex_count()];
        for (k, &u) in open.iter().enumerate() {
            s[u] = Some(k);
        }
        s
    };
    let one = F::one();
    let q_up = lambda / (one + lambda);
    let q_down = one / (one + lambda);
    let mut a = vec![vec![F::zero(); open.len()]; open.len()];
    let mut b = vec![F::zero(); open.len()];
    for (k, &u) in open.iter().enumerate() {
        a[k][k] += one;
        let parent = t.parent(u).expect("open vertex has a parent");
        if let Some(kp) = slot[parent] {
            a[k][kp] -= q_up;
        }
        if let Some(kd) = slot[theta.down(u)] {
            a[k][kd] -= q_down;
        }
        b[k] = delta(t, lambda, u).expect("open vertex");
    }
    let x = lu_solve(a, b).ok_or(SingularSystem)?;
    let mut w = vec![F::zero(); t.vertex_count()];
    for (k, &u) in open.iter().enumerate() {
        w[u] = x[k] / epsilon;
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularSystem;

impl fmt::Display for SingularSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "total-variation system is singular")
    }
}

impl std::error::Error for SingularSystem {}

/// Monte Carlo estimate of `E TotVar` with one RNG stream per trajectory.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn mc_expected_totvar(
    t: &RootRewardTree,
    epsilon: f64,
    lambda: f64,
    theta: &WalkPolicy,
    v: usize,
    trials: u64,
    seed: u64,
    max_steps: usize,
) -> McEstimate {
    // Collected in trajectory order and summed sequentially so the result
    // is identical across runs regardless of thread scheduling.
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            simulate_walk_with(t, epsilon, lambda, theta, v, &mut rng, max_steps).totvar
        })
        .collect();
    let sum: f64 = samples.iter().sum();
    let sum_sq: f64 = samples.iter().map(|x| x * x).sum();
    let mean = sum / trials as f64;
    let var = (sum_sq / trials as f64 - mean * mean).max(0.0);
    McEstimate {
        mean,
        stderr: (var / trials as f64).sqrt(),
        trials,
    }
}

/// Report of the one-step kernel comparison between a tree and its essence.
#[derive(Debug, Clone)]
pub struct KernelCheck {
    pub ok: bool,
    pub failures: Vec<String>,
}

/// Verifies that the image under the essence map of the one-step walk
/// kernel equals the essence tree's kernel, for every open vertex and
/// every minimizing-child choice. The move probabilities coincide by
/// construction, so the check is the exact comparison of supports.
pub fn essence_kernel_check(t: &RootRewardTree, _epsilon: f64, _lambda: f64) -> KernelCheck {
    let em = t.essence();
    let mut failures = Vec::new();
    for v in t.open_vertices() {
        let image = em.phi[v];
        let parent = t.parent(v).expect("open vertex has a parent");
        if em.essence.parent(image) != Some(em.phi[parent]) {
            failures.push(format!("parent image mismatch at {}", t.id(v)));
        }
        let image_down = em.essence.min_children(image).map(|m| m.to_vec());
        match image_down {
            Ok(m) if m.len() == 1 => {
                for &c in t.min_children(v).unwrap() {
                    if em.phi[c] != m[0] {
                        failures.push(format!(
                            "down-move image mismatch at {} via child {}",
                            t.id(v),
                            t.id(c)
                        ));
                    }
                }
            }
            _ => failures.push(format!(
                "essence vertex of {} lacks a unique child",
                t.id(v)
            )),
        }
    }
    KernelCheck {
        ok: failures.is_empty(),
        failures,
    }
}

/// Exact `n`-step transient data for the walk from `v`:
/// the truncated expected total variation, the remainder
/// `Σ_w ∂h/∂λ(w) μ_n(v,w)`, and the sub-probability `μ_n` itself.
pub struct HorizonData<F> {
    pub totvar_n: F,
    pub remainder: F,
    /// Open-vertex occupation probabilities at time `n`.
    pub mu_n: Vec<(usize, F)>,
}

pub fn finite_horizon_remainder<F: Real>(
    t: &RootRewardTree,
    epsilon: F,
    lambda: F,
    theta: &WalkPolicy,
    v: usize,
    n: usize,
) -> HorizonData<F> {
    debug_assert!(n >= 1 && t.is_open(v));
    let count = t.vertex_count();
    let one = F::one();
    let stay = one - epsilon;
    let up = epsilon * lambda / (one + lambda);
    let down = epsilon / (one + lambda);
    let gaps: Vec<F> = (0..count)
        .map(|u| {
            if t.is_open(u) {
                delta(t, lambda, u).unwrap()
            } else {
                F::zero()
            }
        })
        .collect();
    let mut mu = vec![F::zero(); count];
    mu[v] = one;
    let mut totvar_n = F::zero();
    for _ in 0..n {
        for u in 0..count {
            totvar_n += mu[u] * gaps[u];
        }
        let mut next = vec![F::zero(); count];
        for u in 0..count {
            if mu[u] == F::zero() {
                continue;
            }
            if t.is_leaf(u) {
                next[u] += mu[u];
            } else {
                next[u] += mu[u] * stay;
                next[t.parent(u).unwrap()] += mu[u] * up;
                next[theta.down(u)] += mu[u] * down;
            }
        }
        mu = next;
    }
    let mut remainder = F::zero();
    let mut mu_n = Vec::new();
    for u in t.open_vertices() {
        if mu[u] > F::zero() {
            remainder += dh_dlambda(t, lambda, u) * mu[u];
            mu_n.push((u, mu[u]));
        }
    }
    HorizonData {
        totvar_n,
        remainder,
        mu_n,
    }
}

/// The horizon-`n` stake expression
/// `Δ(λ,v) / (E TotVar_n + ε^{-1}(λ+1)² Σ ∂h/∂λ μ_n)`, constant in `n`.
pub fn stake_n<F: Real>(
    t: &RootRewardTree,
    epsilon: F,
    lambda: F,
    theta: &WalkPolicy,
    v: usize,
    n: usize,
) -> F {
    let data = finite_horizon_remainder(t, epsilon, lambda, theta, v, n);
    let one = F::one();
    let denom = data.totvar_n + (lambda + one) * (lambda + one) / epsilon * data.remainder;
    delta(t, lambda, v).expect("open vertex") / denom
}
