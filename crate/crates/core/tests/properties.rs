mod common;

use common::random_pencil;
use proptest::prelude::*;
use quadpencil::experiments::{
    run_experiment, spectrum_csv, spectrum_points, spectrum_svg, ExperimentSpec, Family, Which,
};
use quadpencil::highprec::{promote, relative_error};
use quadpencil::matcore::eigenpairs;
use quadpencil::pencil::Structure;
use quadpencil::scoring::{catalog_pairs, score_pair, select_best_worst, PairScore, SearchOptions};
use quadpencil::solvent::{make_pair, SolventOptions};
use quadpencil::splitting::{count_splittings, eigen_pairs, DEFAULT_CLUSTER_TOL, DEFAULT_CONJ_TOL};
use quadpencil::{ComplexMatrix, C64};

fn score(kmax: f64, idx: usize) -> PairScore {
    PairScore {
        kappa_x1: 1.0,
        kappa_z1: 1.0,
        kappa_x: kmax,
        kappa_z: 1.0,
        kappa_diff: 1.0,
        kappa_max: kmax,
        norm_x: 1.0,
        norm_z: 1.0,
        splitting_index: idx,
    }
}

proptest! {
    #[test]
    fn selection_bounds_every_score(ks in prop::collection::vec(1.0f64..1e6, 1..40)) {
        let scores: Vec<PairScore> = ks.iter().enumerate().map(|(i, &k)| score(k, i)).collect();
        let (b, w) = select_best_worst(&scores).unwrap();
        for s in &scores {
            prop_assert!(b.kappa_max <= s.kappa_max && w.kappa_max >= s.kappa_max);
        }
    }

    #[test]
    fn swapping_sides_permutes_kappas(seed in 0u64..200) {
        let p = random_pencil(Family::ComplexUniform, 3, seed);
        let cat = catalog_pairs(&p, &SearchOptions::default()).unwrap();
        let opts = SolventOptions::default();
        for s in cat.scored.iter().take(4) {
            let a = score_pair(&make_pair(&p, &cat.eigenpairs, &s.splitting, &opts).unwrap(), 0).unwrap();
            let b = score_pair(&make_pair(&p, &cat.eigenpairs, &s.splitting.swapped(), &opts).unwrap(), 0).unwrap();
            let (mut ka, mut kb) = (a.kappas(), b.kappas());
            ka.sort_by(f64::total_cmp);
            kb.sort_by(f64::total_cmp);
            for (x, y) in ka.iter().zip(&kb) {
                prop_assert!((x - y).abs() <= 1e-8 * x);
            }
            prop_assert!(a.kappas().iter().all(|&k| k >= 1.0 - 1e-12 && k <= a.kappa_max));
        }
    }

    #[test]
    fn relative_error_is_scale_invariant(
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        k in -20i32..20,
        rotate in any::<bool>(),
    ) {
        let u = ComplexMatrix::new(2, 2, entries.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap();
        prop_assume!(u.spectral_norm() > 1e-3);
        let perturbed = u.map(|z| z * (1.0 + 1e-9));
        let base = relative_error(&u, &promote(&perturbed, 40).unwrap()).unwrap();
        // Exact scalings only, so the double input is scaled without rounding.
        let c = if rotate { C64::new(0.0, 2f64.powi(k)) } else { C64::new(-(2f64.powi(k)), 0.0) };
        let scaled = relative_error(&u.scale(c), &promote(&perturbed.scale(c), 40).unwrap()).unwrap();
        prop_assert!((scaled - base).abs() <= 1e-15 * base.max(1e-300));
    }
}

#[test]
fn well_conditioned_pairs_have_tiny_oracle_error() {
    let mut checked = 0;
    for seed in 0..12u64 {
        let n = 2 + (seed % 3) as usize;
        let mut spec = ExperimentSpec::new(Family::ComplexUniform, n, 500 + seed);
        spec.oracle_digits = Some(50);
        let r = run_experiment(&spec).unwrap();
        if r.best.kappa.max <= 1e3 {
            assert!(
                r.eps_best.unwrap() <= 1e-12,
                "seed {seed}: {:?}",
                r.eps_best
            );
            checked += 1;
        }
        if r.worst.kappa.max <= 1e3 {
            assert!(r.eps_worst.unwrap() <= 1e-12);
        }
    }
    assert!(checked >= 6);
}

#[test]
fn hermitian_count_matches_orbit_structure() {
    for seed in 0..10u64 {
        let p = random_pencil(Family::HermitianReal, 4, seed);
        let values = eigenpairs(&p.companion_matrix()).unwrap().values;
        // Unit sizes: 1 for each real eigenvalue, 2 for each conjugate pair.
        let real = values
            .iter()
            .filter(|v| v.im.abs() <= 1e-8 * v.norm().max(1.0))
            .count();
        let mut sizes = vec![1usize; real];
        sizes.extend(std::iter::repeat_n(2, (values.len() - real) / 2));
        let subsets = (0u32..1 << sizes.len())
            .filter(|m| {
                (0..sizes.len())
                    .filter(|i| m >> i & 1 == 1)
                    .map(|i| sizes[i])
                    .sum::<usize>()
                    == 4
            })
            .count() as u128;
        let pairs = eigen_pairs(
            &eigenpairs(&p.companion_matrix()).unwrap(),
            DEFAULT_CLUSTER_TOL,
        );
        let count = count_splittings(&pairs, Structure::Hermitian, DEFAULT_CONJ_TOL).unwrap();
        assert_eq!(count, subsets / 2, "seed {seed}");
    }
}

#[test]
fn gyroscopic_plot_is_symmetric() {
    let mut reports = 0;
    for seed in 0..5u64 {
        let mut spec = ExperimentSpec::new(Family::GyroscopicReal, 4, seed);
        spec.oracle_digits = None;
        let Ok(r) = run_experiment(&spec) else {
            continue;
        };
        reports += 1;
        for which in [Which::Best, Which::Worst] {
            let csv = spectrum_csv(&spectrum_points(&r, which));
            let rows: Vec<(f64, f64, String)> = csv
                .lines()
                .skip(1)
                .map(|l| {
                    let f: Vec<&str> = l.split(',').collect();
                    (
                        f[0].parse().unwrap(),
                        f[1].parse().unwrap(),
                        f[2].to_string(),
                    )
                })
                .collect();
            assert_eq!(rows.len(), 8);
            for (re, im, side) in &rows {
                for (sr, si) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                    let (tr, ti) = (sr * re, si * im);
                    let partner = rows
                        .iter()
                        .min_by(|a, b| {
                            let d = |r: &(f64, f64, String)| (r.0 - tr).hypot(r.1 - ti);
                            d(a).total_cmp(&d(b))
                        })
                        .unwrap();
                    assert!((partner.0 - tr).hypot(partner.1 - ti) < 1e-6);
                    assert_eq!(&partner.2, side);
                }
            }
        }
    }
    assert!(reports >= 3);
}

#[test]
fn scalar_svg_has_one_circle_and_one_star() {
    let points = [(C64::new(-1.0, 0.0), 'x'), (C64::new(1.0, 0.0), 'z')];
    let svg = spectrum_svg(&points, "scalar");
    assert_eq!(svg.matches("<circle").count(), 1);
    assert_eq!(svg.matches("<polygon").count(), 1);
    assert!(svg.contains(r#"class="x" "#) && svg.contains(r#"data-re="-1" data-im="0""#));
    assert!(svg.contains(r#"data-re="1" data-im="0""#));
    assert!(svg.contains(">Re<") && svg.contains(">Im<"));
}
