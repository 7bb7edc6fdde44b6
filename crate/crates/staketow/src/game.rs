//! First-turn-constrained game values, saddle analysis, and gameplay.
//!
//! The constrained value of the game in which the players must stake
//! `(aε, bε)` at the first turn is `h(λ,v) + ε Ψ(ε,a,b)`; its saddle in
//! `(a,b)` sits at `(λS, S)` with `S` the unit-ε stake. The Poisson drift
//! `Φ` is the formal ε→0 counterpart. The simulator plays the full game
//! under pluggable strategies.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::harmonic::{dh_dlambda, h_closed_form, solve_field};
use crate::num::Real;
use crate::stake::{asymptotes, stake_closed_form};
use crate::tree::{BoundaryPaymentGraph, RootRewardTree, VertexNotOpen};
use crate::walk::{McEstimate, WalkPolicy};

#[derive(Debug, Clone, PartialEq)]
pub enum GameError {
    StakeOutOfRange { a: f64, b: f64 },
    VertexNotOpen(String),
    IllegalStake { turn: u32, stake: f64, budget: f64 },
    IllegalMove { turn: u32, from: String, to: String },
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::StakeOutOfRange { a, b } => {
                write!(f, "stake pair ({a}, {b}) outside the admissible box")
            }
            GameError::VertexNotOpen(id) => write!(f, "vertex {id} is not in open play"),
            GameError::IllegalStake {
                turn,
                stake,
                budget,
            } => {
                write!(f, "turn {turn}: stake {stake} exceeds budget {budget}")
            }
            GameError::IllegalMove { turn, from, to } => {
                write!(
                    f,
                    "turn {turn}: nominated move {from} -> {to} is not an edge"
                )
            }
        }
    }
}

impl std::error::Error for GameError {}

impl From<VertexNotOpen> for GameError {
    fn from(e: VertexNotOpen) -> Self {
        GameError::VertexNotOpen(e.id)
    }
}

/// Validates the stake box and returns the post-stake fortune `λ(ε)`.
///
/// The box `[0, λ/ε] × [0, 1/ε]` is closed: on the far face Mina is
/// bankrupt and `λ(ε) = ∞`, except at the joint-bankruptcy diagonal point
/// where the status-quo reset rule keeps `λ(ε) = λ`. Rounding overshoot
/// up to one part in 10⁹ is clamped back onto the box.
fn lambda_after_stakes<F: Real>(epsilon: F, lambda: F, a: F, b: F) -> Result<F, GameError> {
    let one = F::one();
    let slack = F::cast(1.0 + 1e-9);
    let inside =
        a >= F::zero() && b >= F::zero() && a * epsilon <= lambda * slack && b * epsilon <= slack;
    if !inside {
        return Err(GameError::StakeOutOfRange {
            a: a.as_f64(),
            b: b.as_f64(),
        });
    }
    let spent_a = (a * epsilon).min(lambda);
    let spent_b = (b * epsilon).min(one);
    let (rem_max, rem_min) = (lambda - spent_a, one - spent_b);
    if rem_min == F::zero() {
        if rem_max == F::zero() {
            Ok(lambda)
        } else {
            Ok(F::infinity())
        }
    } else {
        Ok(rem_max / rem_min)
    }
}

/// Maxine's win share `a/(a+b)`, with the status-quo zero-bid rule at
/// `(0,0)`: she wins with probability `λ/(1+λ)`.
fn win_share<F: Real>(lambda: F, a: F, b: F) -> F {
    if a == F::zero() && b == F::zero() {
        if lambda.is_infinite() {
            F::one()
        } else {
            lambda / (F::one() + lambda)
        }
    } else {
        a / (a + b)
    }
}

/// The normalized first-turn advantage for stake rates `(a, b)`:
/// `Ψ = ε^{-1}(h(λ(ε),v) - h(λ,v)) - h(λ(ε),v) + ω max_u h(λ(ε),u)
///      + (1-ω) min_u h(λ(ε),u)` with `λ(ε) = (λ-aε)/(1-bε)`.
///
/// Computed from journey-data closed forms on a root-reward tree.
pub fn psi<F: Real>(
    t: &RootRewardTree,
    epsilon: F,
    lambda: F,
    v: usize,
    a: F,
    b: F,
) -> Result<F, GameError> {
    if !t.is_open(v) {
        return Err(GameError::VertexNotOpen(t.id(v).to_string()));
    }
    let one = F::one();
    let lam_eps = lambda_after_stakes(epsilon, lambda, a, b)?;
    let omega = win_share(lambda, a, b);
    let h_now = h_closed_form(t, lambda, v);
    let h_eps = h_closed_form(t, lam_eps, v);
    let h_up = h_closed_form(t, lam_eps, t.parent(v).expect("open vertex"));
    let h_down = h_closed_form(t, lam_eps, t.min_child(v)?);
    Ok((h_eps - h_now) / epsilon - h_eps + omega * h_up + (one - omega) * h_down)
}

/// Value of the game constrained to first-turn stakes `(aε, bε)` on a
/// general boundary-payment graph: `h(λ,v) + ε Ψ`. At ε = 1 this reduces
/// to `ω max_u h(λ₁,u) + (1-ω) min_u h(λ₁,u)`.
pub fn val_constrained<F: Real>(
    g: &BoundaryPaymentGraph<F>,
    epsilon: F,
    lambda: F,
    v: usize,
    a: F,
    b: F,
) -> Result<F, GameError> {
    if g.is_boundary(v) {
        return Err(GameError::VertexNotOpen(g.id(v).to_string()));
    }
    let one = F::one();
    let lam_eps = lambda_after_stakes(epsilon, lambda, a, b)?;
    let omega = win_share(lambda, a, b);
    let now = solve_field(g, lambda).expect("solvable field");
    let eps_field = solve_field(g, lam_eps).expect("solvable field");
    let (mut hi, mut lo) = (F::neg_infinity(), F::infinity());
    for &u in g.neighbors(v) {
        hi = hi.max(eps_field.values[u]);
        lo = lo.min(eps_field.values[u]);
    }
    let psi_val = (eps_field.values[v] - now.values[v]) / epsilon - eps_field.values[v]
        + omega * hi
        + (one - omega) * lo;
    Ok(now.values[v] + epsilon * psi_val)
}

/// Formal Poisson-game drift at stake rates `(a, b)`:
/// `Φ = -h - (a - bλ) h' + ω h(v_+) + (1-ω) h(v_-)`.
pub fn poisson_phi<F: Real>(
    t: &RootRewardTree,
    lambda: F,
    v: usize,
    a: F,
    b: F,
) -> Result<F, VertexNotOpen> {
    if !t.is_open(v) {
        return Err(VertexNotOpen {
            id: t.id(v).to_string(),
        });
    }
    let one = F::one();
    let omega = a / (a + b);
    let h_v = h_closed_form(t, lambda, v);
    let h_up = h_closed_form(t, lambda, t.parent(v).expect("open vertex"));
    let h_down = h_closed_form(t, lambda, t.min_child(v)?);
    Ok(omega * h_up + (one - omega) * h_down - h_v - (a - b * lambda) * dh_dlambda(t, lambda, v))
}

/// Stationary point of `Φ`: `b₀ = Δ/((λ+1)² h') = Stake(1,λ,v)`, `a₀ = λb₀`.
pub fn poisson_saddle<F: Real>(
    t: &RootRewardTree,
    lambda: F,
    v: usize,
) -> Result<(F, F), VertexNotOpen> {
    let b0 = crate::stake::stake(t, F::one(), lambda, v)?.value;
    Ok((lambda * b0, b0))
}

/// Classification of a saddle candidate against a scanned grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaddleClass {
    GlobalSaddle,
    LocalOnly,
    NoSaddle,
}

impl fmt::Display for SaddleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SaddleClass::GlobalSaddle => "GlobalSaddle",
            SaddleClass::LocalOnly => "LocalOnly",
            SaddleClass::NoSaddle => "NoSaddle",
        };
        f.write_str(name)
    }
}

/// A scanned constrained-value surface with best-response curves.
#[derive(Debug, Clone)]
pub struct SaddleReport {
    pub a_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    /// `values[i][j] = F(a_grid[i], b_grid[j])`.
    pub values: Vec<Vec<f64>>,
    /// Per b-index: the set of a-indices maximizing the column.
    pub red_curve: Vec<Vec<usize>>,
    /// Per a-index: the set of b-indices minimizing the row.
    pub blue_curve: Vec<Vec<usize>>,
    pub candidate: (f64, f64),
    pub candidate_value: f64,
    pub classification: SaddleClass,
    /// Grid corners where skewed one-sided probe limits disagree.
    pub discontinuities: Vec<(f64, f64)>,
}

impl SaddleReport {
    /// Location of the discrete minimax: the row maximizing the column
    /// minimum, then that row's minimizing column.
    pub fn grid_minimax(&self) -> (f64, f64) {
        let row_min = |i: usize| self.values[i].iter().cloned().fold(f64::INFINITY, f64::min);
        let mut best_i = 0;
        for i in 1..self.a_grid.len() {
            if row_min(i) > row_min(best_i) {
                best_i = i;
            }
        }
        let mut best_j = 0;
        for j in 1..self.b_grid.len() {
            if self.values[best_i][j] < self.values[best_i][best_j] {
                best_j = j;
            }
        }
        (self.a_grid[best_i], self.b_grid[best_j])
    }

    pub fn cell_size(&self) -> (f64, f64) {
        let da =
            (self.a_grid[self.a_grid.len() - 1] - self.a_grid[0]) / (self.a_grid.len() - 1) as f64;
        let db =
            (self.b_grid[self.b_grid.len() - 1] - self.b_grid[0]) / (self.b_grid.len() - 1) as f64;
        (da, db)
    }
}

/// Tolerance for saddle inequalities and curve ties.
pub const SADDLE_TOL: f64 = 1e-9;

/// Scans a surface over an `(a, b)` grid, extracts best-response curves
/// and classifies the candidate: a maximizer deviates in `a`, a minimizer
/// in `b`. `GlobalSaddle` requires the inequalities against every grid
/// point; `LocalOnly` against the 5×5 neighbourhood of the candidate.
pub fn saddle_scan<S: Fn(f64, f64) -> f64 + Sync>(
    surface: &S,
    a_range: (f64, f64),
    b_range: (f64, f64),
    resolution: usize,
    candidate: (f64, f64),
) -> SaddleReport {
    assert!(resolution >= 11, "resolution must be at least 11");
    let lerp = |range: (f64, f64), k: usize| {
        range.0 + (range.1 - range.0) * k as f64 / (resolution - 1) as f64
    };
    let a_grid: Vec<f64> = (0..resolution).map(|k| lerp(a_range, k)).collect();
    let b_grid: Vec<f64> = (0..resolution).map(|k| lerp(b_range, k)).collect();
    let values: Vec<Vec<f64>> = a_grid
        .par_iter()
        .map(|&a| b_grid.iter().map(|&b| surface(a, b)).collect())
        .collect();

    let red_curve: Vec<Vec<usize>> = (0..resolution)
        .map(|j| {
            let best = (0..resolution)
                .map(|i| values[i][j])
                .fold(f64::NEG_INFINITY, f64::max);
            (0..resolution)
                .filter(|&i| values[i][j] >= best - SADDLE_TOL)
                .collect()
        })
        .collect();
    let blue_curve: Vec<Vec<usize>> = (0..resolution)
        .map(|i| {
            let best = values[i].iter().cloned().fold(f64::INFINITY, f64::min);
            (0..resolution)
                .filter(|&j| values[i][j] <= best + SADDLE_TOL)
                .collect()
        })
        .collect();

    // Candidate row and column at the exact candidate coordinates.
    let (ca, cb) = candidate;
    let candidate_value = surface(ca, cb);
    let row: Vec<f64> = a_grid.par_iter().map(|&a| surface(a, cb)).collect();
    let col: Vec<f64> = b_grid.par_iter().map(|&b| surface(ca, b)).collect();
    let nearest = |grid: &[f64], x: f64| {
        grid.iter()
            .enumerate()
            .min_by(|(_, p), (_, q)| (*p - x).abs().partial_cmp(&(*q - x).abs()).unwrap())
            .map(|(k, _)| k)
            .unwrap()
    };
    let (ia, ib) = (nearest(&a_grid, ca), nearest(&b_grid, cb));
    let holds = |range_a: std::ops::Range<usize>, range_b: std::ops::Range<usize>| {
        range_a
            .clone()
            .all(|i| row[i] <= candidate_value + SADDLE_TOL)
            && range_b
                .clone()
                .all(|j| col[j] >= candidate_value - SADDLE_TOL)
    };
    let classification = if holds(0..resolution, 0..resolution) {
        SaddleClass::GlobalSaddle
    } else {
        let lo_a = ia.saturating_sub(2);
        let hi_a = (ia + 3).min(resolution);
        let lo_b = ib.saturating_sub(2);
        let hi_b = (ib + 3).min(resolution);
        if holds(lo_a..hi_a, lo_b..hi_b) {
            SaddleClass::LocalOnly
        } else {
            SaddleClass::NoSaddle
        }
    };

    // Corner discontinuity probes: approach each corner along two skewed
    // inward directions; a genuine jump shows up as a finite gap.
    let mut discontinuities = Vec::new();
    let da = (a_range.1 - a_range.0) * 1e-9;
    let db = (b_range.1 - b_range.0) * 1e-9;
    const SKEW: f64 = 1e-4;
    const DISC_TOL: f64 = 1e-6;
    for &(ca, ia) in &[(a_range.0, 1.0), (a_range.1, -1.0)] {
        for &(cb, ib) in &[(b_range.0, 1.0), (b_range.1, -1.0)] {
            let p1 = surface(ca + ia * da * SKEW, cb + ib * db);
            let p2 = surface(ca + ia * da, cb + ib * db * SKEW);
            if (p1 - p2).abs() > DISC_TOL {
                discontinuities.push((ca, cb));
            }
        }
    }

    SaddleReport {
        a_grid,
        b_grid,
        values,
        red_curve,
        blue_curve,
        candidate,
        candidate_value,
        classification,
        discontinuities,
    }
}

/// The fortune ratio, counter position and turn index visible to players.
#[derive(Debug, Clone, Copy)]
pub struct StateOfPlay {
    /// Maxine's fortune with Mina's normalized to one; may be infinite.
    pub fortune: f64,
    pub counter: usize,
    pub turn: u32,
}

/// A stake rule and a move rule. The stake is decided at the start of the
/// turn; the move is nominated after stakes are deducted, so `nominate`
/// sees the post-stake fortune.
pub trait Strategy: Send + Sync {
    fn stake(&self, state: &StateOfPlay, rng: &mut ChaCha8Rng) -> f64;
    fn nominate(&self, state: &StateOfPlay, rng: &mut ChaCha8Rng) -> usize;
}

/// Maxine's strongly conforming strategy: stake `μ·Stake(ε,μ,w)`, move to
/// the parent. At infinite fortune she stakes one unit.
pub struct MaxineConforming<'t> {
    pub tree: &'t RootRewardTree,
    pub epsilon: f64,
}

impl Strategy for MaxineConforming<'_> {
    fn stake(&self, state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> f64 {
        let mu = state.fortune;
        if mu.is_infinite() {
            return 1.0;
        }
        if mu == 0.0 {
            return 0.0;
        }
        let s1 = stake_closed_form(self.tree, mu, state.counter).expect("open counter");
        (mu * self.epsilon * s1).min(mu)
    }

    fn nominate(&self, state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> usize {
        self.tree.parent(state.counter).expect("open counter")
    }
}

/// Mina's strongly conforming strategy with move index θ: stake
/// `Stake(ε,μ,w)`, move to `θ(w)`. At fortune zero she stakes one half;
/// at infinite fortune the high-λ stake limit.
pub struct MinaConforming<'t> {
    pub tree: &'t RootRewardTree,
    pub epsilon: f64,
    pub theta: WalkPolicy,
}

impl<'t> MinaConforming<'t> {
    pub fn lexicographic(tree: &'t RootRewardTree, epsilon: f64) -> Self {
        MinaConforming {
            tree,
            epsilon,
            theta: WalkPolicy::lexicographic(tree),
        }
    }
}

impl Strategy for MinaConforming<'_> {
    fn stake(&self, state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> f64 {
        let mu = state.fortune;
        if mu == 0.0 {
            return 0.5;
        }
        if mu.is_infinite() {
            let rep = asymptotes::<f64>(self.tree, state.counter).expect("open counter");
            return if rep.high_exponent > 0 {
                0.0
            } else {
                self.epsilon * rep.high_coefficient
            };
        }
        let s1 = stake_closed_form(self.tree, mu, state.counter).expect("open counter");
        (self.epsilon * s1).min(1.0)
    }

    fn nominate(&self, state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> usize {
        self.theta.down(state.counter)
    }
}

/// Never stakes; nominates the parent. One-sided-control opponent.
pub struct ZeroStakeMaxine<'t> {
    pub tree: &'t RootRewardTree,
}

impl Strategy for ZeroStakeMaxine<'_> {
    fn stake(&self, _state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> f64 {
        0.0
    }

    fn nominate(&self, state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> usize {
        self.tree.parent(state.counter).expect("open counter")
    }
}

/// Scales the inner strategy's stake by `factor` on one turn, clamped to
/// the player's budget.
pub struct ScaleStakeOnTurn<'s> {
    pub inner: &'s dyn Strategy,
    pub turn: u32,
    pub factor: f64,
    pub is_maxine: bool,
}

impl Strategy for ScaleStakeOnTurn<'_> {
    fn stake(&self, state: &StateOfPlay, rng: &mut ChaCha8Rng) -> f64 {
        let base = self.inner.stake(state, rng);
        if state.turn == self.turn {
            let budget = if self.is_maxine { state.fortune } else { 1.0 };
            (base * self.factor).min(budget)
        } else {
            base
        }
    }

    fn nominate(&self, state: &StateOfPlay, rng: &mut ChaCha8Rng) -> usize {
        self.inner.nominate(state, rng)
    }
}

/// Stakes the whole budget on one turn.
pub struct GoForBrokeOnTurn<'s> {
    pub inner: &'s dyn Strategy,
    pub turn: u32,
    pub is_maxine: bool,
}

impl Strategy for GoForBrokeOnTurn<'_> {
    fn stake(&self, state: &StateOfPlay, rng: &mut ChaCha8Rng) -> f64 {
        if state.turn == self.turn {
            if self.is_maxine {
                if state.fortune.is_infinite() {
                    1.0
                } else {
                    state.fortune
                }
            } else {
                1.0
            }
        } else {
            self.inner.stake(state, rng)
        }
    }

    fn nominate(&self, state: &StateOfPlay, rng: &mut ChaCha8Rng) -> usize {
        self.inner.nominate(state, rng)
    }
}

/// One turn of a finished game record.
#[derive(Debug, Clone)]
pub struct TurnRecord {
    pub turn: u32,
    pub fortune_before: f64,
    pub stake_maxine: f64,
    pub stake_mina: f64,
    pub moved: bool,
    pub maxine_won: Option<bool>,
    pub counter_after: usize,
    pub fortune_after: f64,
}

#[derive(Debug, Clone)]
pub struct GameTrace {
    pub turns: Vec<TurnRecord>,
    pub pay: f64,
    pub finished: bool,
}

/// Plays one full game; stake, move-coin, winner-coin, move, fortune
/// update, with the status-quo zero-bid and reset rules. An unfinished
/// game (turn cap reached) pays one.
#[allow(clippy::too_many_arguments)]
pub fn simulate_game(
    g: &BoundaryPaymentGraph<f64>,
    epsilon: f64,
    lambda: f64,
    v: usize,
    mina: &dyn Strategy,
    maxine: &dyn Strategy,
    seed: u64,
    max_turns: usize,
) -> Result<(f64, GameTrace), GameError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_game_with(
        g, epsilon, lambda, v, mina, maxine, &mut rng, max_turns, true,
    )
}

#[allow(clippy::too_many_arguments)]
fn simulate_game_with(
    g: &BoundaryPaymentGraph<f64>,
    epsilon: f64,
    lambda: f64,
    v: usize,
    mina: &dyn Strategy,
    maxine: &dyn Strategy,
    rng: &mut ChaCha8Rng,
    max_turns: usize,
    record: bool,
) -> Result<(f64, GameTrace), GameError> {
    debug_assert!(!g.is_boundary(v));
    let mut fortune = lambda;
    let mut counter = v;
    let mut turns = Vec::new();
    for turn in 1..=max_turns as u32 {
        let pre = StateOfPlay {
            fortune,
            counter,
            turn,
        };
        let a = maxine.stake(&pre, rng);
        let b = mina.stake(&pre, rng);
        if a.is_nan() || a < 0.0 || (a > fortune * (1.0 + 1e-9) + 1e-12 && !fortune.is_infinite()) {
            return Err(GameError::IllegalStake {
                turn,
                stake: a,
                budget: fortune,
            });
        }
        if b.is_nan() || b < 0.0 || b > 1.0 + 1e-9 {
            return Err(GameError::IllegalStake {
                turn,
                stake: b,
                budget: 1.0,
            });
        }
        let a = if fortune.is_infinite() {
            a
        } else {
            a.min(fortune)
        };
        let b = b.min(1.0);
        // Reserves within rounding of zero are exhausted; this keeps the
        // reset rule reachable when proportions like Stake = 1 round off.
        let mut rem_maxine = if fortune.is_infinite() {
            f64::INFINITY
        } else {
            fortune - a
        };
        if rem_maxine <= fortune * 1e-12 {
            rem_maxine = 0.0;
        }
        let mut rem_mina = 1.0 - b;
        if rem_mina <= 1e-12 {
            rem_mina = 0.0;
        }
        // Status-quo reset: both bankrupt -> the next turn opens with the
        // fortune this turn opened with.
        let next_fortune = if rem_maxine == 0.0 && rem_mina == 0.0 {
            fortune
        } else if rem_mina == 0.0 {
            f64::INFINITY
        } else {
            rem_maxine / rem_mina
        };
        let moved = rng.gen::<f64>() < epsilon;
        let mut maxine_won = None;
        if moved {
            let p_maxine = if a == 0.0 && b == 0.0 {
                if fortune.is_infinite() {
                    1.0
                } else {
                    fortune / (1.0 + fortune)
                }
            } else {
                a / (a + b)
            };
            let won = rng.gen::<f64>() < p_maxine;
            maxine_won = Some(won);
            let post = StateOfPlay {
                fortune: next_fortune,
                counter,
                turn,
            };
            let target = if won {
                maxine.nominate(&post, rng)
            } else {
                mina.nominate(&post, rng)
            };
            if !g.neighbors(counter).contains(&target) {
                return Err(GameError::IllegalMove {
                    turn,
                    from: g.id(counter).to_string(),
                    to: g.id(target).to_string(),
                });
            }
            counter = target;
        }
        if record {
            turns.push(TurnRecord {
                turn,
                fortune_before: fortune,
                stake_maxine: a,
                stake_mina: b,
                moved,
                maxine_won,
                counter_after: counter,
                fortune_after: next_fortune,
            });
        }
        fortune = next_fortune;
        if g.is_boundary(counter) {
            let pay = g.payment(counter).expect("boundary payment");
            return Ok((
                pay,
                GameTrace {
                    turns,
                    pay,
                    finished: true,
                },
            ));
        }
    }
    // Unfinished games pay one.
    Ok((
        1.0,
        GameTrace {
            turns,
            pay: 1.0,
            finished: false,
        },
    ))
}

/// Mean payoff over seeded trajectories, one RNG stream per trajectory.
#[allow(clippy::too_many_arguments)]
pub fn mc_mean_payoff(
    g: &BoundaryPaymentGraph<f64>,
    epsilon: f64,
    lambda: f64,
    v: usize,
    mina: &dyn Strategy,
    maxine: &dyn Strategy,
    trials: u64,
    seed: u64,
    max_turns: usize,
) -> Result<McEstimate, GameError> {
    let results: Result<Vec<(f64, f64)>, GameError> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let (pay, _) = simulate_game_with(
                g, epsilon, lambda, v, mina, maxine, &mut rng, max_turns, false,
            )?;
            Ok((pay, pay * pay))
        })
        .collect();
    let pairs = results?;
    let trials_f = trials as f64;
    let sum: f64 = pairs.iter().map(|p| p.0).sum();
    let sum_sq: f64 = pairs.iter().map(|p| p.1).sum();
    let mean = sum / trials_f;
    let var = (sum_sq / trials_f - mean * mean).max(0.0);
    Ok(McEstimate {
        mean,
        stderr: (var / trials_f).sqrt(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::stake::stake;

    #[test]
    fn l2_constrained_value_is_win_share() {
        let g = fixtures::line_tree(2).to_graph::<f64>();
        let v = g.index("1").unwrap();
        for &(a, b) in &[(0.3, 0.4), (1.2, 0.01), (0.0, 0.5)] {
            let val = val_constrained(&g, 1.0, 1.5, v, a, b).unwrap();
            assert!((val - win_share(1.5, a, b)).abs() < 1e-12);
        }
    }

    #[test]
    fn t_graph_short_game_value() {
        // λ₁ above the golden ratio: Mina ends the game at leaf 1, so the
        // value is ω·2 + (1-ω)·1 = ω + 1.
        let g = fixtures::t_graph();
        let v = g.index("N").unwrap();
        let lambda = 4.0;
        for &(a, b) in &[(0.5, 0.3), (1.0, 0.6)] {
            let lam1 = (lambda - a) / (1.0 - b);
            assert!(lam1 > 1.62);
            let val = val_constrained(&g, 1.0, lambda, v, a, b).unwrap();
            let omega = a / (a + b);
            assert!((val - (omega + 1.0)).abs() < 1e-10, "a {a} b {b}");
        }
    }

    #[test]
    fn t_graph_long_game_value() {
        let g = fixtures::t_graph();
        let v = g.index("N").unwrap();
        let lambda = 1.0;
        let (a, b) = (0.4, 0.4);
        let lam1: f64 = (lambda - a) / (1.0 - b);
        assert!(lam1 < 1.61);
        let val = val_constrained(&g, 1.0, lambda, v, a, b).unwrap();
        let omega = a / (a + b);
        let w = 1.0 + lam1 + lam1 * lam1;
        let expect = 2.0 * omega + (1.0 - omega) * 2.0 * lam1 * lam1 / w;
        assert!((val - expect).abs() < 1e-10);
    }

    #[test]
    fn diagonal_states_keep_value_at_h() {
        for seed in 0..6 {
            let t = crate::tree::random_root_reward_tree(seed, 4, 20);
            let g = t.to_graph::<f64>();
            for &lambda in &[0.5, 1.0, 2.0] {
                for &eps in &[1.0, 0.1, 0.001] {
                    for v in t.open_vertices() {
                        let s = stake(&t, 1.0, lambda, v).unwrap().value;
                        let val = val_constrained(&g, eps, lambda, v, lambda * s, s).unwrap();
                        let h = h_closed_form(&t, lambda, v);
                        assert!((val - h).abs() < 1e-10, "seed {seed} λ {lambda} ε {eps}");
                        let p = psi(&t, eps, lambda, v, lambda * s, s).unwrap();
                        assert!(p.abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn stake_bounds_are_enforced() {
        let t = fixtures::line_tree(3);
        let v = t.index("1").unwrap();
        assert!(matches!(
            psi(&t, 1.0, 2.0, v, 2.1, 0.5),
            Err(GameError::StakeOutOfRange { .. })
        ));
        assert!(matches!(
            psi(&t, 0.5, 2.0, v, 0.1, 2.1),
            Err(GameError::StakeOutOfRange { .. })
        ));
        assert!(matches!(
            psi(&t, 1.0, 2.0, v, -0.1, 0.5),
            Err(GameError::StakeOutOfRange { .. })
        ));
        assert!(psi(&t, 0.5, 2.0, v, 3.9, 1.9).is_ok());
        // The closed far faces carry the bankruptcy conventions.
        assert!(psi(&t, 1.0, 2.0, v, 2.0, 0.5).is_ok());
        assert!(psi(&t, 0.5, 2.0, v, 0.1, 2.0).is_ok());
    }

    #[test]
    fn dont_bet_the_house() {
        // For b >= β >= a(1/η - 1): Ψ(ε,a,β) - Ψ(ε,a,b) <= 2η.
        let t = fixtures::line_tree(4);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..500 {
            let v = t.index(&(1 + rng.gen_range(0..3)).to_string()).unwrap();
            let lambda = 0.3 + rng.gen::<f64>() * 3.0;
            let eps = 0.01 + rng.gen::<f64>() * 0.4;
            let eta = 0.05 + rng.gen::<f64>() * 0.9;
            let a = rng.gen::<f64>() * 0.5 * lambda / 1.0;
            let beta = a * (1.0 / eta - 1.0);
            if beta * eps >= 1.0 {
                continue;
            }
            let b = beta + rng.gen::<f64>() * (1.0 / eps - beta) * 0.99;
            let lhs =
                psi(&t, eps, lambda, v, a, beta).unwrap() - psi(&t, eps, lambda, v, a, b).unwrap();
            assert!(lhs <= 2.0 * eta + 1e-9, "η {eta} a {a} β {beta} b {b}");
        }
    }

    #[test]
    fn psi_second_derivative_signs_near_diagonal() {
        let t = fixtures::line_tree(3);
        let v = t.index("2").unwrap();
        let (eps, lambda) = (0.01, 1.3);
        let s = stake(&t, 1.0, lambda, v).unwrap().value;
        let f = |a: f64, b: f64| psi(&t, eps, lambda, v, a, b).unwrap();
        let h = 1e-4;
        for &(a, b) in &[
            (lambda * s, s),
            (lambda * s * 1.1, s * 0.9),
            (lambda * s * 0.8, s),
        ] {
            let daa = (f(a + h, b) - 2.0 * f(a, b) + f(a - h, b)) / (h * h);
            let dbb = (f(a, b + h) - 2.0 * f(a, b) + f(a, b - h)) / (h * h);
            assert!(daa < 0.0, "concave in a at ({a}, {b})");
            assert!(dbb > 0.0, "convex in b at ({a}, {b})");
        }
    }

    #[test]
    fn poisson_phi_l2_formula() {
        // Φ(λ,1,a,b) = a/(a+b) - λ/(1+λ) - (a-bλ)/(1+λ)² on the L2 tree.
        let t = fixtures::line_tree(2);
        let v = t.index("1").unwrap();
        for &lambda in &[0.5f64, 1.0, 2.0] {
            for &(a, b) in &[(0.2, 0.9), (1.5, 0.1)] {
                let phi = poisson_phi(&t, lambda, v, a, b).unwrap();
                let expect = a / (a + b)
                    - lambda / (1.0 + lambda)
                    - (a - b * lambda) / ((1.0 + lambda) * (1.0 + lambda));
                assert!((phi - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn poisson_phi_l3_formula() {
        // On the line 0-1-2-3 rewarded at 0, vertex 2 carries the
        // prefactor λ(λ+1)/w and the stationary rate 1/b₀ = 2 + λ(1-λ)/w.
        let t = fixtures::line_tree_rooted_at_zero(3);
        let v = t.index("2").unwrap();
        for &lambda in &[0.6f64, 1.0, 2.3] {
            let w = 1.0 + lambda + lambda * lambda;
            for &(a, b) in &[(0.3, 0.8), (1.1, 0.2)] {
                let phi = poisson_phi(&t, lambda, v, a, b).unwrap();
                let pref = lambda * (lambda + 1.0) / w;
                let inv_b0 = 2.0 + lambda * (1.0 - lambda) / w;
                let expect = pref
                    * (a / (a + b)
                        - lambda / (1.0 + lambda)
                        - (a - b * lambda) / ((1.0 + lambda) * (1.0 + lambda)) * inv_b0);
                assert!((phi - expect).abs() < 1e-12, "λ {lambda} a {a} b {b}");
            }
        }
    }

    #[test]
    fn poisson_saddle_examples() {
        let l2 = fixtures::line_tree(2);
        let v = l2.index("1").unwrap();
        for &lambda in &[0.5f64, 1.0, 3.0] {
            let (a0, b0) = poisson_saddle(&l2, lambda, v).unwrap();
            assert!((b0 - 1.0).abs() < 1e-12);
            assert!((a0 - lambda).abs() < 1e-12);
        }

        let l3 = fixtures::line_tree_rooted_at_zero(3);
        let v2 = l3.index("2").unwrap();
        for &lambda in &[0.5f64, 1.0, 2.0] {
            let w = 1.0 + lambda + lambda * lambda;
            let (_, b0) = poisson_saddle(&l3, lambda, v2).unwrap();
            assert!((1.0 / b0 - (2.0 + lambda * (1.0 - lambda) / w)).abs() < 1e-12);
            if lambda == 1.0 {
                assert!((b0 - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn poisson_phi_vanishes_at_saddle() {
        for seed in 10..16 {
            let t = crate::tree::random_root_reward_tree(seed, 4, 25);
            for &lambda in &[0.5f64, 1.0, 2.0] {
                for v in t.open_vertices() {
                    let (a0, b0) = poisson_saddle(&t, lambda, v).unwrap();
                    let phi = poisson_phi(&t, lambda, v, a0, b0).unwrap();
                    assert!(phi.abs() < 1e-10, "seed {seed} λ {lambda} v {v}");
                }
            }
        }
    }

    #[test]
    fn constant_surface_is_global_saddle_everywhere() {
        let report = saddle_scan(&|_a, _b| 0.25, (0.0, 1.0), (0.0, 1.0), 21, (0.5, 0.5));
        assert_eq!(report.classification, SaddleClass::GlobalSaddle);
        assert!(report.discontinuities.is_empty());
        // Every grid point ties on both curves.
        assert!(report.red_curve.iter().all(|set| set.len() == 21));
    }

    #[test]
    fn regular_game_saddle_check_on_l3() {
        // ε = 1, v = 2 on the reward-at-3 line: the saddle at (λS, S) is
        // global iff λ >= 1. Below one, go-for-broke beats it.
        let t = fixtures::line_tree(3);
        let g = t.to_graph::<f64>();
        let v = t.index("2").unwrap();
        for &(lambda, expect_global) in &[(0.5, false), (1.0, true), (3.0, true)] {
            let s = stake(&t, 1.0, lambda, v).unwrap().value;
            let surface = |a: f64, b: f64| val_constrained(&g, 1.0, lambda, v, a, b).unwrap();
            let shave = 1.0 - 1e-9;
            let report = saddle_scan(
                &surface,
                (0.0, lambda * shave),
                (0.0, shave),
                101,
                (lambda * s, s),
            );
            if expect_global {
                assert_eq!(
                    report.classification,
                    SaddleClass::GlobalSaddle,
                    "λ = {lambda}"
                );
            } else {
                // Below one the candidate is beaten: at λ = 1/2 the value
                // is in fact convex in a at the stationary point (its
                // a-curvature is (1-ω) h''(λ,1)/(1-S)², positive below the
                // root of λ³+3λ²-1), so no saddle survives at all.
                assert_eq!(report.classification, SaddleClass::NoSaddle, "λ = {lambda}");
                // Maxine's best response to b = S is the go-for-broke edge.
                let jb = report
                    .b_grid
                    .iter()
                    .enumerate()
                    .min_by(|(_, p), (_, q)| (*p - s).abs().partial_cmp(&(*q - s).abs()).unwrap())
                    .map(|(j, _)| j)
                    .unwrap();
                let red = &report.red_curve[jb];
                assert!(red.contains(&(report.a_grid.len() - 1)));
            }
            // The northeast corner carries the value discontinuity.
            assert!(report
                .discontinuities
                .iter()
                .any(|&(ca, cb)| ca > lambda * 0.9 && cb > 0.9));
        }
    }

    #[test]
    fn psi_saddle_is_global_at_small_epsilon() {
        let t = fixtures::line_tree(3);
        let v = t.index("2").unwrap();
        let (eps, lambda) = (0.01, 2.0);
        let s = stake(&t, 1.0, lambda, v).unwrap().value;
        let surface = |a: f64, b: f64| psi(&t, eps, lambda, v, a, b).unwrap();
        let report = saddle_scan(
            &surface,
            (lambda * s * 0.5, lambda * s * 1.5),
            (s * 0.5, s * 1.5),
            101,
            (lambda * s, s),
        );
        assert_eq!(report.classification, SaddleClass::GlobalSaddle);
        let (ga, gb) = report.grid_minimax();
        let (da, db) = report.cell_size();
        assert!((ga - lambda * s).abs() <= da * 1.0001);
        assert!((gb - s).abs() <= db * 1.0001);
    }

    #[test]
    fn zero_stake_maxine_loses() {
        let t = fixtures::line_tree(3);
        let g = t.to_graph::<f64>();
        let v = t.index("1").unwrap();
        let mina = MinaConforming::lexicographic(&t, 0.5);
        let maxine = ZeroStakeMaxine { tree: &t };
        let est = mc_mean_payoff(&g, 0.5, 2.0, v, &mina, &maxine, 2000, 7, 10_000).unwrap();
        assert_eq!(est.mean, 0.0);
    }

    #[test]
    fn reset_rule_restores_fortune() {
        // On L2 both conforming players stake everything each turn; while
        // no move takes place the reset rule must restore the fortune.
        let t = fixtures::line_tree(2);
        let g = t.to_graph::<f64>();
        let v = t.index("1").unwrap();
        let lambda = 1.7;
        let mina = MinaConforming::lexicographic(&t, 1.0);
        let maxine = MaxineConforming {
            tree: &t,
            epsilon: 1.0,
        };
        // Seed chosen so that the first few ε-coins come up tails.
        let (_, trace) = simulate_game(&g, 0.05, lambda, v, &mina, &maxine, 11, 10_000).unwrap();
        let lazy_turns: Vec<&TurnRecord> = trace.turns.iter().filter(|r| !r.moved).collect();
        assert!(!lazy_turns.is_empty());
        for r in &trace.turns {
            assert!(
                (r.fortune_before - lambda).abs() < 1e-9,
                "fortune restored each turn"
            );
            assert!(r.stake_maxine >= lambda * (1.0 - 1e-9));
            assert!(r.stake_mina >= 1.0 - 1e-9);
            assert!(
                (r.fortune_after - lambda).abs() < 1e-9,
                "reset keeps the ratio"
            );
        }
    }

    #[test]
    fn conforming_play_recovers_h_at_desk_scale() {
        let t = fixtures::line_tree(3);
        let g = t.to_graph::<f64>();
        let v = t.index("1").unwrap();
        let (eps, lambda) = (0.1, 2.0);
        let mina = MinaConforming::lexicographic(&t, eps);
        let maxine = MaxineConforming {
            tree: &t,
            epsilon: eps,
        };
        let est = mc_mean_payoff(
            &g,
            eps,
            lambda,
            v,
            &mina,
            &maxine,
            20_000,
            123,
            crate::walk::default_max_steps(&t, eps),
        )
        .unwrap();
        let h = h_closed_form(&t, lambda, v);
        assert!(
            (est.mean - h).abs() < 3.0 * est.stderr,
            "{} vs {h}",
            est.mean
        );
    }

    #[test]
    fn illegal_strategies_are_rejected() {
        struct Overstake;
        impl Strategy for Overstake {
            fn stake(&self, state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> f64 {
                state.fortune * 2.0 + 1.0
            }
            fn nominate(&self, state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> usize {
                state.counter
            }
        }
        let t = fixtures::line_tree(3);
        let g = t.to_graph::<f64>();
        let v = t.index("1").unwrap();
        let mina = MinaConforming::lexicographic(&t, 1.0);
        let err = simulate_game(&g, 1.0, 2.0, v, &mina, &Overstake, 3, 100).unwrap_err();
        assert!(matches!(err, GameError::IllegalStake { .. }));

        struct BadMove;
        impl Strategy for BadMove {
            fn stake(&self, _state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> f64 {
                0.1
            }
            fn nominate(&self, state: &StateOfPlay, _rng: &mut ChaCha8Rng) -> usize {
                state.counter // staying put is not an edge
            }
        }
        let err = simulate_game(&g, 1.0, 2.0, v, &mina, &BadMove, 3, 100).unwrap_err();
        assert!(matches!(err, GameError::IllegalMove { .. }));
    }

    #[test]
    fn conforming_transitions_follow_the_walk_kernel() {
        let t = fixtures::half_ladder(2);
        let g = t.to_graph::<f64>();
        let start = t.index("2").unwrap();
        let (eps, lambda) = (0.3, 1.5);
        let mina = MinaConforming::lexicographic(&t, eps);
        let maxine = MaxineConforming {
            tree: &t,
            epsilon: eps,
        };
        let mut counts: std::collections::BTreeMap<(usize, u8), u64> = Default::default();
        let mut visits: std::collections::BTreeMap<usize, u64> = Default::default();
        for i in 0..40_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(999);
            rng.set_stream(i);
            let (_, trace) =
                simulate_game_with(&g, eps, lambda, start, &mina, &maxine, &mut rng, 4000, true)
                    .unwrap();
            let mut cur = start;
            for r in &trace.turns {
                *visits.entry(cur).or_default() += 1;
                let kind = if !r.moved {
                    0u8
                } else if r.counter_after == t.parent(cur).unwrap() {
                    1
                } else {
                    2
                };
                *counts.entry((cur, kind)).or_default() += 1;
                cur = r.counter_after;
            }
        }
        for (&v, &n) in &visits {
            let n = n as f64;
            let probs = [
                1.0 - eps,
                eps * lambda / (1.0 + lambda),
                eps / (1.0 + lambda),
            ];
            for (kind, &p) in probs.iter().enumerate() {
                let observed = *counts.get(&(v, kind as u8)).unwrap_or(&0) as f64;
                let sigma = (n * p * (1.0 - p)).sqrt();
                assert!(
                    (observed - n * p).abs() <= 4.0 * sigma + 1.0,
                    "vertex {} branch {kind}: {observed} vs {}",
                    t.id(v),
                    n * p
                );
            }
        }
    }
}
