mod common;

use common::{max_deviation, random_pencil, rk4_reference, rng};
use quadpencil::evolution::{
    check_initial_identities, evolution_operators, solve_ivp, uniform_grid, Forcing, IvpOptions,
    SampledForcing,
};
use quadpencil::experiments::Family;
use quadpencil::pencil::QuadraticPencil;
use quadpencil::scoring::{catalog_pairs, SearchOptions};
use quadpencil::solvent::{SolventOptions, SolventPair};
use quadpencil::C64;
use rand::Rng;
use std::sync::Arc;

/// Best pair of a random complex pencil, skipping seeds whose best pair is
/// worse conditioned than `cap`.
fn best_pair(n: usize, mut seed: u64, cap: f64) -> (QuadraticPencil, SolventPair, f64) {
    loop {
        let p = random_pencil(Family::ComplexUniform, n, seed);
        let cat = catalog_pairs(&p, &SearchOptions::default()).unwrap();
        if let Ok((best, _)) = cat.best_worst() {
            if best.score.kappa_max <= cap {
                let pair = cat.pair(&p, best, &SolventOptions::default()).unwrap();
                return (p, pair, best.score.kappa_max);
            }
        }
        seed += 1000;
    }
}

fn random_vec(seed: u64, n: usize) -> Vec<C64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| C64::new(r.random_range(-1.0..=1.0), r.random_range(-1.0..=1.0)))
        .collect()
}

#[test]
fn zero_data_gives_zero_trajectory() {
    let (p, pair, _) = best_pair(3, 1, 1e6);
    let z = vec![C64::new(0.0, 0.0); 3];
    let r = solve_ivp(
        &p,
        &pair,
        &z,
        &z,
        &Forcing::Zero,
        &uniform_grid(1.0, 10).unwrap(),
        IvpOptions::default(),
    )
    .unwrap();
    assert!(r
        .x_values
        .iter()
        .chain(&r.dx_values)
        .flatten()
        .all(|v| *v == C64::new(0.0, 0.0)));
    assert_eq!(r.residual_max, 0.0);
}

#[test]
fn semigroup_restart_matches_direct_solve() {
    let (p, pair, _) = best_pair(3, 2, 1e4);
    let (u0, u1) = (random_vec(10, 3), random_vec(11, 3));
    let direct = solve_ivp(
        &p,
        &pair,
        &u0,
        &u1,
        &Forcing::Zero,
        &[0.0, 0.4, 1.0],
        IvpOptions::default(),
    )
    .unwrap();
    let restart = solve_ivp(
        &p,
        &pair,
        &direct.x_values[1],
        &direct.dx_values[1],
        &Forcing::Zero,
        &[0.0, 0.6],
        IvpOptions::default(),
    )
    .unwrap();
    let scale = direct
        .x_values
        .iter()
        .flatten()
        .map(|v| v.norm())
        .fold(1.0, f64::max);
    let dev = max_deviation(
        &[restart.x_values[1].clone()],
        &[direct.x_values[2].clone()],
    );
    assert!(dev <= 1e-8 * scale, "{dev:e}");
}

#[test]
fn finite_difference_defect_is_second_order() {
    let (p, pair, _) = best_pair(3, 3, 1e4);
    let (u0, u1) = (random_vec(20, 3), random_vec(21, 3));
    let coarse = solve_ivp(
        &p,
        &pair,
        &u0,
        &u1,
        &Forcing::Zero,
        &uniform_grid(1.0, 20).unwrap(),
        IvpOptions::default(),
    )
    .unwrap();
    let fine = solve_ivp(
        &p,
        &pair,
        &u0,
        &u1,
        &Forcing::Zero,
        &uniform_grid(1.0, 40).unwrap(),
        IvpOptions::default(),
    )
    .unwrap();
    let ratio = coarse.residual_max / fine.residual_max;
    assert!(ratio >= 3.5, "defect ratio {ratio}");
}

#[test]
fn derivative_of_u_matches_central_difference() {
    let (_, pair, _) = best_pair(3, 4, 1e4);
    let h = 1e-4;
    for t in [0.0, 0.3, 1.0] {
        let (up, _) = evolution_operators(&pair, t + h).unwrap();
        let (um, _) = evolution_operators(&pair, t - h).unwrap();
        let (_, du) = evolution_operators(&pair, t).unwrap();
        let fd = (&up - &um).scale_real(0.5 / h);
        assert!((&fd - &du).spectral_norm() <= 1e-6 * du.spectral_norm().max(1.0));
    }
}

#[test]
fn homogeneous_solution_matches_reference_integrator() {
    let grid = uniform_grid(1.0, 10).unwrap();
    for (k, n) in [2usize, 3, 4, 2, 3, 4].into_iter().enumerate() {
        let (p, pair, _) = best_pair(n, 100 + k as u64, 1e4);
        let (u0, u1) = (random_vec(200 + k as u64, n), random_vec(300 + k as u64, n));
        let sol = solve_ivp(
            &p,
            &pair,
            &u0,
            &u1,
            &Forcing::Zero,
            &grid,
            IvpOptions::default(),
        )
        .unwrap();
        let zero = move |_t: f64| vec![C64::new(0.0, 0.0); n];
        let (rx, rdx) = rk4_reference(&p, &u0, &u1, &zero, &grid, 1e-12);
        assert!(max_deviation(&sol.x_values, &rx) <= 1e-6);
        assert!(max_deviation(&sol.dx_values, &rdx) <= 1e-6);
    }
}

#[test]
fn time_dependent_forcing_matches_reference() {
    let (p, pair, _) = best_pair(2, 5, 1e4);
    let f = |t: f64| vec![C64::new(t.sin(), 0.0), C64::new(0.0, (2.0 * t).cos())];
    let (u0, u1) = (random_vec(30, 2), random_vec(31, 2));
    for grid in [
        uniform_grid(1.0, 10).unwrap(),
        vec![0.0, 0.1, 0.25, 0.6, 0.65, 1.0],
    ] {
        let sol = solve_ivp(
            &p,
            &pair,
            &u0,
            &u1,
            &Forcing::Custom(Arc::new(f)),
            &grid,
            IvpOptions::default(),
        )
        .unwrap();
        let (rx, rdx) = rk4_reference(&p, &u0, &u1, &f, &grid, 1e-12);
        assert!(max_deviation(&sol.x_values, &rx) <= 1e-6);
        assert!(max_deviation(&sol.dx_values, &rdx) <= 1e-6);
    }
}

#[test]
fn sampled_linear_forcing_equals_closure() {
    let (p, pair, _) = best_pair(2, 6, 1e4);
    let line = |t: f64| vec![C64::new(1.0 + 2.0 * t, 0.0), C64::new(-t, t)];
    let table = SampledForcing::new(vec![0.0, 2.0], vec![line(0.0), line(2.0)]).unwrap();
    let z = vec![C64::new(0.0, 0.0); 2];
    let grid = uniform_grid(1.0, 5).unwrap();
    let a = solve_ivp(
        &p,
        &pair,
        &z,
        &z,
        &Forcing::Sampled(table),
        &grid,
        IvpOptions::default(),
    )
    .unwrap();
    let b = solve_ivp(
        &p,
        &pair,
        &z,
        &z,
        &Forcing::Custom(Arc::new(line)),
        &grid,
        IvpOptions::default(),
    )
    .unwrap();
    assert!(max_deviation(&a.x_values, &b.x_values) <= 1e-13);
}

#[test]
fn initial_identities_best_and_worst() {
    let (_, pair, _) = best_pair(4, 7, 1e6);
    let (u0, du0) = check_initial_identities(&pair).unwrap();
    assert!(u0 <= 1e-12 && du0 <= 1e-12);

    // Worst pair of an n = 5 instance, with the conditioning-aware bound.
    let p = random_pencil(Family::ComplexUniform, 5, 8);
    let cat = catalog_pairs(&p, &SearchOptions::default()).unwrap();
    let (_, worst) = cat.best_worst().unwrap();
    let pair = cat.pair(&p, worst, &SolventOptions::default()).unwrap();
    let (u0, du0) = check_initial_identities(&pair).unwrap();
    assert!(u0 <= 1e-12 * worst.score.kappa_max && du0 <= 1e-12 * worst.score.kappa_max);
}
