//! Cross-module invariants: decomposition λ-independence and validity,
//! multi-route stake agreement, minimax location stability, and field
//! hygiene (bounds, residuals).

use staketow::fixtures;
use staketow::game;
use staketow::harmonic;
use staketow::stake::{self, stake, stake_closed_form, TotVarMode};
use staketow::tree::random_root_reward_tree;
use staketow::walk;

const LAMBDA_GRID: [f64; 5] = [0.3, 1.0, 1.618_033_988_7, 3.0, 10.0];

/// Canonical form of a decomposition: the path set with data, sorted.
fn canonical_paths(
    g: &staketow::Graph,
    d: &staketow::Decomposition,
) -> Vec<(String, String, Vec<String>)> {
    let mut out: Vec<(String, String, Vec<String>)> = d
        .paths
        .iter()
        .map(|p| {
            (
                g.id(p.from).to_string(),
                g.id(p.to).to_string(),
                p.internal.iter().map(|&u| g.id(u).to_string()).collect(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn decomposition_is_lambda_independent_on_root_reward_trees() {
    for seed in 3000..3030 {
        let t = random_root_reward_tree(seed, 4, 40);
        let g = t.to_graph::<f64>();
        let reference = canonical_paths(&g, &harmonic::ps_decompose(&g, 1.0 / 0.3).unwrap());
        for &lambda in &LAMBDA_GRID[1..] {
            let d = harmonic::ps_decompose(&g, 1.0 / lambda).unwrap();
            assert_eq!(canonical_paths(&g, &d), reference, "seed {seed} λ {lambda}");
        }
    }
}

#[test]
fn decomposition_slopes_are_non_increasing() {
    let t_graph = fixtures::t_graph();
    for &lambda in &[0.4, 1.0, 1.618, 2.5, 8.0] {
        let d = harmonic::ps_decompose(&t_graph, 1.0 / lambda).unwrap();
        for w in d.paths.windows(2) {
            assert!(
                w[0].rho_slope >= w[1].rho_slope - 1e-12,
                "T graph λ {lambda}"
            );
        }
    }
    for seed in 3100..3130 {
        let t = random_root_reward_tree(seed, 4, 40);
        let g = t.to_graph::<f64>();
        for &lambda in &LAMBDA_GRID {
            let d = harmonic::ps_decompose(&g, 1.0 / lambda).unwrap();
            for w in d.paths.windows(2) {
                assert!(
                    w[0].rho_slope >= w[1].rho_slope - 1e-12,
                    "seed {seed} λ {lambda}: slopes {} then {}",
                    w[0].rho_slope,
                    w[1].rho_slope
                );
            }
        }
    }
}

#[test]
fn stake_routes_agree_four_ways() {
    for seed in 3200..3212 {
        let t = random_root_reward_tree(seed, 4, 25);
        for &lambda in &LAMBDA_GRID {
            for v in t.open_vertices() {
                let derivative = stake(&t, 1.0, lambda, v).unwrap().value;
                let closed: f64 = stake_closed_form(&t, lambda, v).unwrap();
                let totvar = stake::stake_via_totvar(&t, 1.0, lambda, v, TotVarMode::Exact)
                    .unwrap()
                    .value;
                assert!((derivative - closed).abs() < 1e-8, "seed {seed}");
                assert!((derivative - totvar).abs() < 1e-8, "seed {seed}");
            }
        }
    }
    // Lines additionally match the explicit formula.
    for n in 2..=8usize {
        let t = fixtures::line_tree(n);
        for &lambda in &LAMBDA_GRID {
            for i in 1..n {
                let v = t.index(&i.to_string()).unwrap();
                let derivative = stake(&t, 0.3, lambda, v).unwrap().value;
                let line = stake::stake_line(0.3, lambda, n, i).unwrap();
                assert!((derivative - line).abs() < 1e-8, "n {n} i {i} λ {lambda}");
            }
        }
    }
}

#[test]
fn mc_totvar_stake_within_three_stderrs() {
    let t = fixtures::half_ladder(3);
    let v = t.index("2").unwrap();
    let (eps, lambda) = (0.5, 2.0);
    let theta = walk::WalkPolicy::lexicographic(&t);
    let reference = stake(&t, eps, lambda, v).unwrap().value;
    let est = walk::mc_expected_totvar(
        &t,
        eps,
        lambda,
        &theta,
        v,
        100_000,
        97,
        walk::default_max_steps(&t, eps),
    );
    let gap: f64 = harmonic::delta(&t, lambda, v).unwrap();
    let mc_stake = gap / est.mean;
    // Delta-method standard error for the ratio.
    let se = gap * est.stderr / (est.mean * est.mean);
    assert!(
        (mc_stake - reference).abs() < 3.0 * se,
        "{mc_stake} vs {reference} (se {se:.2e})"
    );
    let via = stake::stake_via_totvar(
        &t,
        eps,
        lambda,
        v,
        TotVarMode::MonteCarlo {
            trials: 100_000,
            seed: 97,
            max_steps: walk::default_max_steps(&t, eps),
        },
    )
    .unwrap();
    assert_eq!(via.value, mc_stake);
}

#[test]
fn psi_minimax_location_is_epsilon_independent() {
    let t = fixtures::line_tree(3);
    let v = t.index("2").unwrap();
    for &lambda in &[0.5, 1.0, 2.0] {
        let s = stake(&t, 1.0, lambda, v).unwrap().value;
        let mut locations = Vec::new();
        for &eps in &[0.001, 0.005, 0.01] {
            let surface = |a: f64, b: f64| game::psi(&t, eps, lambda, v, a, b).unwrap();
            let report = game::saddle_scan(
                &surface,
                (lambda * s * 0.5, lambda * s * 1.5),
                (s * 0.5, s * 1.5),
                101,
                (lambda * s, s),
            );
            let (ga, gb) = report.grid_minimax();
            let (da, db) = report.cell_size();
            assert!((ga - lambda * s).abs() <= da * 1.0001, "ε {eps} λ {lambda}");
            assert!((gb - s).abs() <= db * 1.0001, "ε {eps} λ {lambda}");
            locations.push((ga, gb));
        }
        assert!(
            locations.windows(2).all(|w| w[0] == w[1]),
            "location moved with ε"
        );
    }
}

#[test]
fn psi_minimax_on_t_variants() {
    for reward in ["0", "1", "2"] {
        let t = fixtures::t_tree(reward);
        let eps = 0.01;
        for &lambda in &[0.5, 1.0, 1.618_033_988_7, 2.0] {
            for v in t.open_vertices() {
                let s = stake(&t, 1.0, lambda, v).unwrap().value;
                let surface = |a: f64, b: f64| game::psi(&t, eps, lambda, v, a, b).unwrap();
                let report = game::saddle_scan(
                    &surface,
                    (lambda * s * 0.5, lambda * s * 1.5),
                    (s * 0.5, s * 1.5),
                    101,
                    (lambda * s, s),
                );
                let (ga, gb) = report.grid_minimax();
                let (da, db) = report.cell_size();
                assert!(
                    (ga - lambda * s).abs() <= da * 1.0001 && (gb - s).abs() <= db * 1.0001,
                    "reward {reward} λ {lambda} vertex {}",
                    t.id(v)
                );
            }
        }
    }
}

#[test]
fn global_saddle_epsilon_threshold_search() {
    // The proofs assert only that some ε₀ > 0 works; report the largest
    // grid ε at which the leisurely surface is globally saddled.
    let t = fixtures::line_tree(3);
    let v = t.index("2").unwrap();
    for &lambda in &[0.5, 1.0, 2.0] {
        let s = stake(&t, 1.0, lambda, v).unwrap().value;
        let mut found = None;
        for &eps in &[0.1, 0.05, 0.01, 0.005] {
            let surface = |a: f64, b: f64| game::psi(&t, eps, lambda, v, a, b).unwrap();
            let report = game::saddle_scan(
                &surface,
                (lambda * s * 0.25, lambda * s * 2.0),
                (s * 0.25, s * 2.0),
                101,
                (lambda * s, s),
            );
            if report.classification == game::SaddleClass::GlobalSaddle {
                found = Some(eps);
                break;
            }
        }
        let eps0 = found.expect("a global saddle must appear by ε = 0.005");
        println!("largest grid ε with a global saddle at λ = {lambda}: {eps0}");
    }
}

#[test]
fn produced_fields_are_clean() {
    // Boundary agreement, [0,1] bounds on root-reward trees, and Bellman
    // residual below 1e-9 for every production route.
    for seed in 3300..3315 {
        let t = random_root_reward_tree(seed, 4, 30);
        let g = t.to_graph::<f64>();
        for &lambda in &LAMBDA_GRID {
            let fields = [
                harmonic::h_fixed_point(&g, lambda, 1e-12).unwrap(),
                harmonic::h_from_decomposition(
                    &g,
                    &harmonic::ps_decompose(&g, 1.0 / lambda).unwrap(),
                ),
                harmonic::h_closed_form_field(&t, lambda),
                harmonic::h_finite_horizon(&g, 0.25, lambda, 40).unwrap(),
            ];
            for field in &fields {
                for v in 0..g.vertex_count() {
                    assert!((0.0..=1.0 + 1e-12).contains(&field.values[v]));
                    if let Some(p) = g.payment(v) {
                        assert_eq!(field.values[v], p, "boundary data untouched");
                    }
                }
                let residual = harmonic::bellman_residual(&g, field);
                assert!(
                    residual < 1e-9,
                    "seed {seed} λ {lambda}: residual {residual:.2e}"
                );
            }
        }
    }
}

#[test]
fn essence_kernel_matches_on_corpus() {
    for seed in 3400..3420 {
        let t = random_root_reward_tree(seed, 4, 40);
        for &lambda in &LAMBDA_GRID {
            let check = walk::essence_kernel_check(&t, 0.2, lambda);
            assert!(check.ok, "seed {seed}: {:?}", check.failures);
        }
    }
}

#[test]
fn half_ladder_one_shot_deposit_check() {
    // On the regular game over the half-ladder, strategies reduce to
    // deposit vectors: Maxine wins only by winning every rung, with mean
    // payoff M(x, y) = Π y_i/(x_i + y_i). Against the uniform opposing
    // vector, the uniform allocation of one's own budget is optimal within
    // a parametric family of tilted and randomly perturbed vectors.
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let n = 5usize;
    let payoff = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).map(|(&xi, &yi)| yi / (xi + yi)).product()
    };
    let scaled = |weights: &[f64], total: f64| -> Vec<f64> {
        let sum: f64 = weights.iter().sum();
        weights.iter().map(|w| w * total / sum).collect()
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1212);
    for &lambda in &[0.5, 1.0, 2.0] {
        let uniform_mina = vec![1.0 / n as f64; n];
        let uniform_maxine = vec![lambda / n as f64; n];
        let best = payoff(&uniform_mina, &uniform_maxine);
        assert!((best - (lambda / (1.0 + lambda)).powi(n as i32)).abs() < 1e-12);
        // Geometric tilts and random perturbations of Maxine's deposits
        // never beat uniform; dually for Mina (she minimizes).
        for _ in 0..200 {
            let tilt: f64 = 0.25 + rng.gen::<f64>() * 3.0;
            let tilted: Vec<f64> = (0..n).map(|i| tilt.powi(i as i32)).collect();
            let perturbed: Vec<f64> = (0..n).map(|_| 0.05 + rng.gen::<f64>()).collect();
            for weights in [&tilted, &perturbed] {
                let y = scaled(weights, lambda);
                assert!(payoff(&uniform_mina, &y) <= best + 1e-12);
                let x = scaled(weights, 1.0);
                assert!(payoff(&x, &uniform_maxine) >= best - 1e-12);
            }
        }
    }
}

#[test]
fn unfinished_games_pay_one() {
    // With both players never staking, no move ever resolves toward the
    // boundary faster than the cap; the payment rule then pays one.
    use rand_chacha::rand_core::SeedableRng;
    struct Idle;
    impl game::Strategy for Idle {
        fn stake(&self, _s: &game::StateOfPlay, _r: &mut rand_chacha::ChaCha8Rng) -> f64 {
            0.0
        }
        fn nominate(&self, s: &game::StateOfPlay, _r: &mut rand_chacha::ChaCha8Rng) -> usize {
            s.counter
        }
    }
    let _ = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let t = fixtures::line_tree(3);
    let g = t.to_graph::<f64>();
    let v = t.index("1").unwrap();
    // ε = 0: no move ever happens, so the illegal `nominate` is never
    // consulted and the game runs to the cap.
    let (pay, trace) = game::simulate_game(&g, 0.0, 1.0, v, &Idle, &Idle, 5, 64).unwrap();
    assert_eq!(pay, 1.0);
    assert!(!trace.finished);
    assert_eq!(trace.turns.len(), 64);
}
