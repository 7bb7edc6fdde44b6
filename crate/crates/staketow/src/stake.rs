//! The optimal stake proportion and its asymptotics.
//!
//! At fortune ratio λ and counter position v, each player stakes the same
//! proportion of her reserves: `Stake(ε,λ,v) = ε Δ(λ,v) / ((λ+1)² ∂h/∂λ)`.
//! The journey-data closed form, the explicit line-graph formula, and the
//! expected-total-variation identity all compute the same number.

use std::fmt;

use crate::harmonic::{delta, dh_dlambda, psi_geometric};
use crate::num::Real;
use crate::tree::{RootRewardTree, VertexNotOpen};
use crate::walk::{self, WalkPolicy};

/// Which route produced a stake value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StakeMethod {
    DerivativeFormula,
    ClosedForm,
    TotVarExact,
    TotVarMc,
}

impl fmt::Display for StakeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StakeMethod::DerivativeFormula => "derivative_formula",
            StakeMethod::ClosedForm => "closed_form",
            StakeMethod::TotVarExact => "totvar_exact",
            StakeMethod::TotVarMc => "totvar_mc",
        };
        f.write_str(name)
    }
}

/// A computed stake proportion.
#[derive(Debug, Clone)]
pub struct StakeResult<F> {
    pub epsilon: F,
    pub lambda: F,
    pub vertex: String,
    pub value: F,
    pub method: StakeMethod,
}

/// The three asymptotic regimes of `Stake(1, ·, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoteReport<F> {
    /// `lim_{λ -> 0} Stake = 1 / d_+(v)`.
    pub low_limit: F,
    /// `Stake(1, 1, v) = 1 / (d_-(v) d_+(v))`.
    pub lambda_one: F,
    /// Decay exponent at high λ: `d_-(v) - min_i (s_i - d_i)`.
    pub high_exponent: u32,
    /// `lim λ^exponent · Stake = 1 / (|J| · min_i (s_i - d_i))`.
    pub high_coefficient: F,
}

/// Stake via the derivative formula `ε Δ / ((λ+1)² h')`.
pub fn stake<F: Real>(
    t: &RootRewardTree,
    epsilon: F,
    lambda: F,
    v: usize,
) -> Result<StakeResult<F>, VertexNotOpen> {
    let gap = delta(t, lambda, v)?;
    let deriv = dh_dlambda(t, lambda, v);
    let denom = (lambda + F::one()) * (lambda + F::one()) * deriv;
    // ε scales the unit-ε proportion as the last step, so that
    // Stake(ε, λ, v) = ε · Stake(1, λ, v) holds bit-for-bit.
    Ok(StakeResult {
        epsilon,
        lambda,
        vertex: t.id(v).to_string(),
        value: epsilon * (gap / denom),
        method: StakeMethod::DerivativeFormula,
    })
}

/// Stake at ε = 1 from journey data alone.
///
/// For λ ≠ 1 this is `(λ-1)Ψ(λ, s_k - d_k)` over
/// `(λ+1) Σ_i ((s_i-d_i)Ψ(λ, s_i-d_i) - s_i Ψ(λ, s_i))`; at λ = 1 it is
/// `1 / ((s_k - d_k) Σ_i d_i)`.
pub fn stake_closed_form<F: Real>(
    t: &RootRewardTree,
    lambda: F,
    v: usize,
) -> Result<F, VertexNotOpen> {
    if !t.is_open(v) {
        return Err(VertexNotOpen {
            id: t.id(v).to_string(),
        });
    }
    let jd = t.journey_data(v);
    let one = F::one();
    let x = lambda - one;
    let l_last = jd.d_minus();
    if x.abs() < F::cast(1e-6) {
        // Series around λ = 1, second order, avoiding the Ψ pole.
        let lf = F::cast(l_last as f64);
        let numer =
            (one - (lf - one) * x / F::cast(2.0) + (lf * lf - one) * x * x / F::cast(12.0)) / lf;
        let mut denom_sum = F::zero();
        for &(s, d) in &jd.pairs {
            let (sf, df) = (F::cast(s as f64), F::cast(d as f64));
            denom_sum += df / F::cast(2.0) - df * (F::cast(2.0) * sf - df) * x / F::cast(12.0);
        }
        return Ok(numer / ((lambda + one) * denom_sum));
    }
    let numer = x * psi_geometric(lambda, l_last);
    let mut denom_sum = F::zero();
    for &(s, d) in &jd.pairs {
        if d == 0 {
            continue;
        }
        let m = s - d;
        denom_sum += F::cast(m as f64) * psi_geometric(lambda, m)
            - F::cast(s as f64) * psi_geometric(lambda, s);
    }
    Ok(numer / ((lambda + one) * denom_sum))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexOutOfRange {
    pub n: usize,
    pub i: usize,
}

impl fmt::Display for IndexOutOfRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "vertex index {} is not interior to a line of length {}",
            self.i, self.n
        )
    }
}

impl std::error::Error for IndexOutOfRange {}

/// Explicit line-graph stake: vertex `i` on the line `0..n` rooted at `n`.
///
/// `ε ((λ+1)/(λ-1) · i · (1 - n(λ^i - 1)/(i(λ^n - 1))))^{-1}` for λ ≠ 1,
/// and `ε / (i(n-i))` at λ = 1.
pub fn stake_line<F: Real>(
    epsilon: F,
    lambda: F,
    n: usize,
    i: usize,
) -> Result<F, IndexOutOfRange> {
    if n < 2 || i == 0 || i >= n {
        return Err(IndexOutOfRange { n, i });
    }
    let one = F::one();
    let (nf, fi) = (F::cast(n as f64), F::cast(i as f64));
    if (lambda - one).abs() < F::cast(1e-6) {
        return Ok(epsilon / (fi * (nf - fi)));
    }
    let ratio = crate::harmonic::pow_m1(lambda, i as i32) / crate::harmonic::pow_m1(lambda, n as i32);
    let bracket = (lambda + one) / (lambda - one) * fi * (one - nf * ratio / fi);
    Ok(epsilon / bracket)
}

/// Low-λ, λ = 1 and high-λ behaviour of the stake at `v`.
pub fn asymptotes<F: Real>(
    t: &RootRewardTree,
    v: usize,
) -> Result<AsymptoteReport<F>, VertexNotOpen> {
    if !t.is_open(v) {
        return Err(VertexNotOpen {
            id: t.id(v).to_string(),
        });
    }
    let jd = t.journey_data(v);
    let d_plus = jd.d_plus();
    let d_minus = jd.d_minus();
    let gaps: Vec<u32> = jd.pairs.iter().map(|&(s, d)| s - d).collect();
    let min_gap = *gaps.iter().min().expect("journey data nonempty");
    let j_count = gaps.iter().filter(|&&g| g == min_gap).count();
    Ok(AsymptoteReport {
        low_limit: F::one() / F::cast(d_plus as f64),
        lambda_one: F::one() / F::cast((d_minus * d_plus) as f64),
        high_exponent: d_minus - min_gap,
        high_coefficient: F::one() / F::cast((j_count as u32 * min_gap) as f64),
    })
}

/// How the expected total variation in the denominator is obtained.
#[derive(Debug, Clone, Copy)]
pub enum TotVarMode {
    Exact,
    MonteCarlo {
        trials: u64,
        seed: u64,
        max_steps: usize,
    },
}

/// Stake via `Δ(λ,v) / E TotVar(ε,λ,v)` with the walk module supplying the
/// denominator exactly or by simulation.
pub fn stake_via_totvar<F: Real>(
    t: &RootRewardTree,
    epsilon: F,
    lambda: F,
    v: usize,
    mode: TotVarMode,
) -> Result<StakeResult<F>, VertexNotOpen> {
    let gap = delta(t, lambda, v)?;
    let theta = WalkPolicy::lexicographic(t);
    let (etotvar, method) = match mode {
        TotVarMode::Exact => {
            let w = walk::expected_totvar_exact(t, epsilon, lambda, &theta, v)
                .expect("totvar system is nonsingular for ε > 0");
            (w, StakeMethod::TotVarExact)
        }
        TotVarMode::MonteCarlo {
            trials,
            seed,
            max_steps,
        } => {
            let est = walk::mc_expected_totvar(
                t,
                epsilon.as_f64(),
                lambda.as_f64(),
                &theta,
                v,
                trials,
                seed,
                max_steps,
            );
            (F::cast(est.mean), StakeMethod::TotVarMc)
        }
    };
    Ok(StakeResult {
        epsilon,
        lambda,
        vertex: t.id(v).to_string(),
        value: gap / etotvar,
        method,
    })
}
