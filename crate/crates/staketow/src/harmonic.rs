//! λ-biased infinity-harmonic extensions by three independent routes.
//!
//! `h` solves `h(v) = (λ max_{u~v} h(u) + min_{u~v} h(u)) / (λ+1)` on open
//! vertices with the payment as boundary data. The fixed-point sweep is the
//! brute-force oracle; the path decomposition and the journey-data closed
//! form are the fast routes, and the three must agree.

use std::collections::BTreeMap;
use std::fmt;

use crate::num::Real;
use crate::tree::{BoundaryPaymentGraph, RootRewardTree, VertexNotOpen};

/// Which route produced a harmonic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FixedPoint,
    Decomposition,
    ClosedForm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::FixedPoint => "fixed_point",
            Method::Decomposition => "decomposition",
            Method::ClosedForm => "closed_form",
        };
        f.write_str(name)
    }
}

/// A solved field `vertex -> h(λ, vertex)`.
#[derive(Debug, Clone)]
pub struct HarmonicField<F> {
    pub lambda: F,
    pub values: Vec<F>,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// The sweep cap was hit before the residual dropped below tolerance.
    NonConvergence { sweeps: usize, residual: f64 },
    /// Path decomposition requested on a graph with a cycle.
    NotATree,
    /// A non-boundary leaf can never be a path endpoint, so no
    /// decomposition covers its pendant edge.
    OpenLeaf(String),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NonConvergence { sweeps, residual } => {
                write!(
                    f,
                    "no convergence after {sweeps} sweeps (residual {residual:.3e})"
                )
            }
            SolveError::NotATree => write!(f, "decomposition requires a tree"),
            SolveError::OpenLeaf(id) => {
                write!(f, "decomposition requires every leaf on the boundary, but {id} is open")
            }
        }
    }
}

impl std::error::Error for SolveError {}

const SWEEP_CAP: usize = 1_000_000;

/// Window around λ = 1 in which series branches replace formulas that
/// difference two Ψ-sized terms.
const NEAR_ONE: f64 = 1e-6;

/// `λ^t - 1` with full relative accuracy near λ = 1 (via `ln_1p`/`exp_m1`)
/// and graceful saturation at the λ = 0 and λ = ∞ endpoints.
pub fn pow_m1<F: Real>(lambda: F, t: i32) -> F {
    (F::cast(t as f64) * (lambda - F::one()).ln_1p()).exp_m1()
}

/// `H(λ, k, ℓ) = (1 - λ^{-(k-ℓ)}) / (1 - λ^{-k})`, the harmonic value at
/// distance ℓ from the reward end of a length-k line. Continuous in λ with
/// `H(1, k, ℓ) = (k - ℓ)/k`.
pub fn h_factor<F: Real>(lambda: F, k: u32, l: u32) -> F {
    debug_assert!(l <= k && k > 0);
    let one = F::one();
    if l == 0 {
        return one;
    }
    if l == k {
        return F::zero();
    }
    if lambda == one {
        return F::cast((k - l) as f64) / F::cast(k as f64);
    }
    let num = pow_m1(lambda, -((k - l) as i32));
    let den = pow_m1(lambda, -(k as i32));
    if den.is_infinite() {
        // λ^{-k} overflows (tiny λ, deep line): H = λ^ℓ to full precision.
        return (F::cast(l as f64) * (lambda - one).ln_1p()).exp();
    }
    num / den
}

/// `Ψ(λ, ℓ) = λ^{-ℓ} / (1 - λ^{-ℓ}) = 1 / (λ^ℓ - 1)`, for λ ≠ 1, ℓ ≥ 1.
pub fn psi_geometric<F: Real>(lambda: F, l: u32) -> F {
    debug_assert!(l >= 1);
    F::one() / pow_m1(lambda, l as i32)
}

/// d/dλ log H(λ, s, d), with the λ = 1 limit `d/2` and a series branch
/// close to one where the two Ψ terms cancel.
fn dlog_h_factor<F: Real>(lambda: F, s: u32, d: u32) -> F {
    debug_assert!(d < s);
    if d == 0 {
        return F::zero();
    }
    let one = F::one();
    let x = lambda - one;
    let (sf, df) = (F::cast(s as f64), F::cast(d as f64));
    if x.abs() < F::cast(NEAR_ONE) {
        let lead = df / F::cast(2.0);
        let corr = df * (F::cast(2.0) * sf - df) * x / F::cast(12.0);
        return (lead - corr) / lambda;
    }
    let m = s - d;
    let mf = F::cast(m as f64);
    (mf * psi_geometric(lambda, m) - sf * psi_geometric(lambda, s)) / lambda
}

/// Closed-form h on a root-reward tree: the product of `H` over the
/// journey data of `v`.
pub fn h_closed_form<F: Real>(t: &RootRewardTree, lambda: F, v: usize) -> F {
    t.journey_data(v)
        .pairs
        .iter()
        .fold(F::one(), |acc, &(s, d)| acc * h_factor(lambda, s, d))
}

/// Closed-form field over all vertices.
pub fn h_closed_form_field<F: Real>(t: &RootRewardTree, lambda: F) -> HarmonicField<F> {
    let values = (0..t.vertex_count())
        .map(|v| h_closed_form(t, lambda, v))
        .collect();
    HarmonicField {
        lambda,
        values,
        method: Method::ClosedForm,
    }
}

/// Analytic λ-derivative of `h(λ, v)` on a root-reward tree, via the
/// log-derivative of the journey-data product.
pub fn dh_dlambda<F: Real>(t: &RootRewardTree, lambda: F, v: usize) -> F {
    if t.is_leaf(v) {
        return F::zero();
    }
    let jd = t.journey_data(v);
    let logsum = jd
        .pairs
        .iter()
        .fold(F::zero(), |acc, &(s, d)| acc + dlog_h_factor(lambda, s, d));
    h_closed_form(t, lambda, v) * logsum
}

/// `Δ(λ, v) = h(λ, v_+) - h(λ, v_-)`: the gap across `v`'s neighbours.
pub fn delta<F: Real>(t: &RootRewardTree, lambda: F, v: usize) -> Result<F, VertexNotOpen> {
    let child = t.min_child(v)?;
    let parent = t.parent(v).expect("open vertex has a parent");
    Ok(h_closed_form(t, lambda, parent) - h_closed_form(t, lambda, child))
}

/// Gauss–Seidel fixed-point oracle. Sweeps vertices in lexicographic
/// order from zero interior data until the sup-norm residual of the
/// system drops below `tol`.
pub fn h_fixed_point<F: Real>(
    g: &BoundaryPaymentGraph<F>,
    lambda: F,
    tol: F,
) -> Result<HarmonicField<F>, SolveError> {
    let n = g.vertex_count();
    let mut values: Vec<F> = (0..n)
        .map(|v| g.payment(v).unwrap_or_else(F::zero))
        .collect();
    let denom = lambda + F::one();
    for _ in 0..SWEEP_CAP {
        let mut change = F::zero();
        for v in g.open_vertices() {
            let (mut hi, mut lo) = (F::neg_infinity(), F::infinity());
            for &u in g.neighbors(v) {
                hi = hi.max(values[u]);
                lo = lo.min(values[u]);
            }
            let next = (lambda * hi + lo) / denom;
            change = change.max((next - values[v]).abs());
            values[v] = next;
        }
        if change < tol {
            let field = HarmonicField {
                lambda,
                values,
                method: Method::FixedPoint,
            };
            let residual = bellman_residual(g, &field);
            if residual < tol {
                return Ok(field);
            }
            values = field.values;
        }
    }
    let field = HarmonicField {
        lambda,
        values,
        method: Method::FixedPoint,
    };
    let residual = bellman_residual(g, &field).as_f64();
    Err(SolveError::NonConvergence {
        sweeps: SWEEP_CAP,
        residual,
    })
}

/// Sup-norm residual of the defining system over all vertices.
pub fn bellman_residual<F: Real>(g: &BoundaryPaymentGraph<F>, field: &HarmonicField<F>) -> F {
    let denom = field.lambda + F::one();
    let mut worst = F::zero();
    for v in 0..g.vertex_count() {
        let r = if let Some(p) = g.payment(v) {
            (field.values[v] - p).abs()
        } else {
            let (mut hi, mut lo) = (F::neg_infinity(), F::infinity());
            for &u in g.neighbors(v) {
                hi = hi.max(field.values[u]);
                lo = lo.min(field.values[u]);
            }
            (field.values[v] - (field.lambda * hi + lo) / denom).abs()
        };
        worst = worst.max(r);
    }
    worst
}

/// One path of a decomposition, oriented from `from` to `to`.
#[derive(Debug, Clone)]
pub struct DecompPath<F> {
    pub from: usize,
    pub to: usize,
    pub internal: Vec<usize>,
    pub rho_slope: F,
}

/// An ordered, edge-disjoint path cover with non-increasing ρ-slopes.
#[derive(Debug, Clone)]
pub struct Decomposition<F> {
    pub rho: F,
    pub paths: Vec<DecompPath<F>>,
}

/// Interpolation along a path: the fraction of the way from the `from`
/// value after `i` of `n` steps, `(1 - ρ^i) / (1 - ρ^n)`.
fn path_fraction<F: Real>(rho: F, i: u32, n: u32) -> F {
    let one = F::one();
    if i == 0 {
        return F::zero();
    }
    if i == n {
        return one;
    }
    if rho == one {
        return F::cast(i as f64) / F::cast(n as f64);
    }
    let num = pow_m1(rho, i as i32);
    let den = pow_m1(rho, n as i32);
    if den.is_infinite() {
        // ρ^n overflows: the fraction collapses to ρ^{i-n}.
        return (F::cast(i as f64 - n as f64) * (rho - one).ln_1p()).exp();
    }
    num / den
}

/// ρ-slope of candidate path from `x` (value `gx`) to `y` (value `gy`)
/// across `len` edges: `(gy - ρ^len gx) / (1 + ρ + ... + ρ^{len-1})`.
fn rho_slope<F: Real>(rho: F, gx: F, gy: F, len: u32) -> F {
    let mut geom = F::zero();
    let mut pow = F::one();
    for _ in 0..len {
        geom += pow;
        pow *= rho;
    }
    (gy - pow * gx) / geom
}

/// Greedy maximal-ρ-slope path decomposition of a boundary-payment tree.
/// Slope ties break on the lexicographically least endpoint id pair.
pub fn ps_decompose<F: Real>(
    g: &BoundaryPaymentGraph<F>,
    rho: F,
) -> Result<Decomposition<F>, SolveError> {
    if !g.is_tree() {
        return Err(SolveError::NotATree);
    }
    let n = g.vertex_count();
    for v in 0..n {
        if g.neighbors(v).len() == 1 && !g.is_boundary(v) {
            return Err(SolveError::OpenLeaf(g.id(v).to_string()));
        }
    }
    // Tree paths via parent pointers from vertex 0.
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0u32; n];
    let mut order = vec![0usize];
    parent[0] = 0;
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        i += 1;
        for &u in g.neighbors(v) {
            if parent[u] == usize::MAX && u != 0 {
                parent[u] = v;
                depth[u] = depth[v] + 1;
                order.push(u);
            }
        }
    }
    let tree_path = |mut a: usize, mut b: usize| -> Vec<usize> {
        let (mut left, mut right) = (vec![a], vec![b]);
        while depth[a] > depth[b] {
            a = parent[a];
            left.push(a);
        }
        while depth[b] > depth[a] {
            b = parent[b];
            right.push(b);
        }
        while a != b {
            a = parent[a];
            left.push(a);
            b = parent[b];
            right.push(b);
        }
        right.pop();
        right.reverse();
        left.extend(right);
        left
    };

    let mut assigned: Vec<Option<F>> = (0..n).map(|v| g.payment(v)).collect();
    let mut edge_used: BTreeMap<(usize, usize), bool> = g.edges().map(|e| (e, false)).collect();
    let mut paths: Vec<DecompPath<F>> = Vec::new();
    while edge_used.values().any(|&u| !u) {
        let mut best: Option<(F, usize, usize, Vec<usize>)> = None;
        for x in 0..n {
            if assigned[x].is_none() {
                continue;
            }
            for y in 0..n {
                if y == x || assigned[y].is_none() {
                    continue;
                }
                let path = tree_path(x, y);
                let fresh = path.iter().enumerate().all(|(i, &v)| {
                    if i == 0 || i + 1 == path.len() {
                        true
                    } else {
                        assigned[v].is_none()
                    }
                });
                if !fresh {
                    continue;
                }
                let unused = path
                    .windows(2)
                    .all(|w| !edge_used[&(w[0].min(w[1]), w[0].max(w[1]))]);
                if !unused {
                    continue;
                }
                let len = (path.len() - 1) as u32;
                let slope = rho_slope(rho, assigned[x].unwrap(), assigned[y].unwrap(), len);
                let better = match &best {
                    None => true,
                    Some((s, bx, by, _)) => {
                        slope > *s || (slope == *s && (g.id(x), g.id(y)) < (g.id(*bx), g.id(*by)))
                    }
                };
                if better {
                    best = Some((slope, x, y, path));
                }
            }
        }
        let (slope, x, y, path) = best.expect("connected tree always offers a next path");
        let len = (path.len() - 1) as u32;
        let (gx, gy) = (assigned[x].unwrap(), assigned[y].unwrap());
        for (i, &v) in path.iter().enumerate() {
            if i > 0 && i + 1 < path.len() {
                let f = path_fraction(rho, i as u32, len);
                assigned[v] = Some(gx + (gy - gx) * f);
            }
        }
        for w in path.windows(2) {
            *edge_used
                .get_mut(&(w[0].min(w[1]), w[0].max(w[1])))
                .unwrap() = true;
        }
        paths.push(DecompPath {
            from: x,
            to: y,
            internal: path[1..path.len() - 1].to_vec(),
            rho_slope: slope,
        });
    }
    Ok(Decomposition { rho, paths })
}

/// Evaluates the ρ-extension of the payments along a decomposition.
pub fn h_from_decomposition<F: Real>(
    g: &BoundaryPaymentGraph<F>,
    d: &Decomposition<F>,
) -> HarmonicField<F> {
    let n = g.vertex_count();
    let mut values: Vec<Option<F>> = (0..n).map(|v| g.payment(v)).collect();
    for path in &d.paths {
        let a = values[path.from].expect("path endpoints are assigned in list order");
        let b = values[path.to].expect("path endpoints are assigned in list order");
        let len = (path.internal.len() + 1) as u32;
        for (i, &v) in path.internal.iter().enumerate() {
            let f = path_fraction(d.rho, (i + 1) as u32, len);
            values[v] = Some(a + (b - a) * f);
        }
    }
    let one = F::one();
    let lambda = if d.rho.is_infinite() {
        F::zero()
    } else {
        one / d.rho
    };
    HarmonicField {
        lambda,
        values: values
            .into_iter()
            .map(|v| v.expect("decomposition covers every vertex"))
            .collect(),
        method: Method::Decomposition,
    }
}

/// h for a tree via its decomposition, or the fixed-point oracle otherwise.
pub fn solve_field<F: Real>(
    g: &BoundaryPaymentGraph<F>,
    lambda: F,
) -> Result<HarmonicField<F>, SolveError> {
    if g.is_tree() {
        // λ = 0 and ∞ endpoints take ρ by the reciprocal convention.
        let rho = if lambda == F::zero() {
            F::infinity()
        } else if lambda.is_finite() {
            F::one() / lambda
        } else {
            F::zero()
        };
        match ps_decompose(g, rho) {
            Ok(d) => return Ok(h_from_decomposition(g, &d)),
            // Trees with open leaves have no decomposition; fall through.
            Err(SolveError::OpenLeaf(_)) => {}
            Err(e) => return Err(e),
        }
    }
    h_fixed_point(g, lambda, F::cast(1e-12))
}

/// One lazy Bellman update pass (simultaneous): keeps boundary data, maps
/// open `v` to `(ελ max + ε min)/(λ+1) + (1-ε) previous`.
pub fn lazy_bellman_step<F: Real>(
    g: &BoundaryPaymentGraph<F>,
    epsilon: F,
    lambda: F,
    values: &[F],
) -> Vec<F> {
    let denom = lambda + F::one();
    (0..g.vertex_count())
        .map(|v| {
            if let Some(p) = g.payment(v) {
                p
            } else {
                let (mut hi, mut lo) = (F::neg_infinity(), F::infinity());
                for &u in g.neighbors(v) {
                    hi = hi.max(values[u]);
                    lo = lo.min(values[u]);
                }
                epsilon * (lambda * hi + lo) / denom + (F::one() - epsilon) * values[v]
            }
        })
        .collect()
}

/// `h_n`: n lazy Bellman updates seeded at the exact solution. Constant in
/// `n` up to rounding.
pub fn h_finite_horizon<F: Real>(
    g: &BoundaryPaymentGraph<F>,
    epsilon: F,
    lambda: F,
    n: usize,
) -> Result<HarmonicField<F>, SolveError> {
    let seed = solve_field(g, lambda)?;
    let mut values = seed.values;
    for _ in 0..n {
        values = lazy_bellman_step(g, epsilon, lambda, &values);
    }
    Ok(HarmonicField {
        lambda,
        values,
        method: seed.method,
    })
}
