use proptest::prelude::*;

use sislab_core::bounds::{self, Forcing};
use sislab_core::master::{self, moment_identity_residuals, MasterOptions};
use sislab_core::mean_field::{self, mf_closed_form};
use sislab_core::model::{self, moments, ModelParams, StateDistribution, TimeGrid};
use sislab_core::ode::{self, FnField};

fn distribution(n: usize) -> impl Strategy<Value = StateDistribution> {
    prop::collection::vec(0.0f64..1.0, n + 1).prop_filter_map("all zero", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-6).then(|| StateDistribution::new(w.iter().map(|v| v / s).collect()).unwrap())
    })
}

fn sized_distribution() -> impl Strategy<Value = StateDistribution> {
    (1usize..80).prop_flat_map(distribution)
}

proptest! {
    #[test]
    fn jensen_chain(d in sized_distribution()) {
        let m = moments(&d);
        prop_assert!(m.m1 * m.m1 <= m.m2 + 1e-12);
        prop_assert!(m.m2 <= m.m1 + 1e-12);
        prop_assert!(m.m2 * m.m2.sqrt() <= m.m3 + 1e-12);
        prop_assert!(m.m3 <= m.m2 + 1e-12);
    }

    #[test]
    fn moments_are_linear(
        (a, b) in (1usize..40).prop_flat_map(|n| (distribution(n), distribution(n))),
        alpha in 0.0f64..1.0,
    ) {
        let mix: Vec<f64> = a.probs().iter().zip(b.probs()).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect();
        let m = moments(&StateDistribution::new(mix).unwrap());
        let (ma, mb) = (moments(&a), moments(&b));
        prop_assert!((m.m1 - (alpha * ma.m1 + (1.0 - alpha) * mb.m1)).abs() < 1e-12);
        prop_assert!((m.m2 - (alpha * ma.m2 + (1.0 - alpha) * mb.m2)).abs() < 1e-12);
        prop_assert!((m.m3 - (alpha * ma.m3 + (1.0 - alpha) * mb.m3)).abs() < 1e-12);
    }

    #[test]
    fn forward_rhs_conserves_mass(d in sized_distribution(), tau in 0.0f64..5.0, gamma in 0.0f64..5.0) {
        let p = ModelParams::new(tau, gamma, d.n(), 0.1).unwrap();
        let dx = master::forward_rhs(&d, &p).unwrap();
        prop_assert!(dx.iter().sum::<f64>().abs() <= 1e-14 * (d.n() as f64) * (1.0 + tau + gamma) * 4.0);
    }

    #[test]
    fn moment_identities(d in distribution(10), tau in 0.0f64..5.0, gamma in 0.0f64..5.0) {
        let p = ModelParams::new(tau, gamma, 10, 0.1).unwrap();
        let (r1, r2) = moment_identity_residuals(&d, &p).unwrap();
        prop_assert!(r1.abs() <= 1e-12 && r2.abs() <= 1e-12, "{r1} {r2}");
    }

    #[test]
    fn first_bound_component_is_exact(d in sized_distribution(), tau in 0.0f64..5.0, gamma in 0.0f64..5.0) {
        let p = ModelParams::new(tau, gamma, d.n(), 0.1).unwrap();
        let m = moments(&d);
        let (g1, _) = bounds::coupled_rhs(m.m1, m.m2, &p);
        let dm1: f64 = master::forward_rhs(&d, &p).unwrap().iter().enumerate()
            .map(|(k, v)| v * k as f64 / d.n() as f64).sum();
        prop_assert!((g1 - dm1).abs() <= 1e-12);
    }

    #[test]
    fn mean_field_stays_in_unit_interval_and_is_monotone(
        tau in 0.0f64..4.0, gamma in 0.0f64..4.0, u in 0.0f64..=1.0,
    ) {
        let p = ModelParams::new(tau, gamma, 10, u).unwrap();
        let g = TimeGrid::uniform(10.0, 101).unwrap();
        let y = mean_field::mf_solve(&p, &g).unwrap().y;
        prop_assert!(y.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        let target = if tau > gamma && u > 0.0 { 1.0 - gamma / tau } else { 0.0 };
        let toward = |a: f64, b: f64| (b - target).abs() <= (a - target).abs() + 1e-12;
        prop_assert!(y.windows(2).all(|w| toward(w[0], w[1])));
    }

    #[test]
    fn closed_form_matches_numerical(tau in 0.0f64..4.0, gamma in 0.0f64..4.0, u in 0.0f64..=1.0) {
        let p = ModelParams::new(tau, gamma, 10, u).unwrap();
        let g = TimeGrid::uniform(10.0, 51).unwrap();
        let y = mean_field::mf_solve(&p, &g).unwrap().y;
        for (t, v) in g.times().iter().zip(&y) {
            prop_assert!((mf_closed_form(*t, &p) - v).abs() <= 1e-8);
        }
    }

    #[test]
    fn master_distributions_valid(tau in 0.0f64..4.0, gamma in 0.0f64..4.0, n in 1usize..40, u in 0.0f64..=1.0) {
        let p = ModelParams::new(tau, gamma, n, u).unwrap();
        let g = TimeGrid::uniform(5.0, 26).unwrap();
        let mt = master::solve_master(&p, &g).unwrap();
        prop_assert!(mt.max_mass_error <= 1e-9);
        prop_assert!(mt.min_prob >= -1e-9);
        prop_assert!(mt.extinction.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        prop_assert_eq!(mt.moments[0].m1, p.realized_u());
        for m in &mt.moments {
            let (a, b) = m.jensen_slack();
            prop_assert!(a >= -1e-12 && b >= -1e-12);
        }
    }
}

#[test]
fn master_agrees_with_oracle_battery() {
    let g = TimeGrid::uniform(10.0, 21).unwrap();
    for &(tau, gamma) in &[(2.0, 1.0), (3.0, 1.0), (1.0, 2.0), (0.5, 0.0), (4.0, 4.0)] {
        for &u in &[0.1, 0.5, 1.0] {
            for n in 1..=8 {
                let p = ModelParams::new(tau, gamma, n, u).unwrap();
                let mt = master::solve_master_with(
                    &p,
                    &g,
                    MasterOptions {
                        retain_distributions: true,
                    },
                )
                .unwrap();
                let dists = mt.distributions.unwrap();
                for &t in &[0.5, 1.0, 5.0, 10.0] {
                    let i = g.index_of(t).unwrap();
                    let err = dists[i].max_abs_diff(&master::matexp_oracle(&p, t).unwrap());
                    assert!(err <= 1e-7, "tau={tau} gamma={gamma} u={u} n={n} t={t}: {err}");
                }
            }
        }
    }
}

#[test]
fn integration_is_bit_deterministic() {
    let p = ModelParams::new(3.0, 1.0, 25, 0.2).unwrap();
    let g = TimeGrid::uniform(10.0, 101).unwrap();
    assert_eq!(
        master::solve_master(&p, &g).unwrap(),
        master::solve_master(&p, &g).unwrap()
    );
    assert_eq!(
        bounds::solve_coupled(&p, &g).unwrap(),
        bounds::solve_coupled(&p, &g).unwrap()
    );
}

#[test]
fn logistic_field_against_closed_form() {
    let p = ModelParams::new(2.0, 1.0, 10, 0.1).unwrap();
    let g = TimeGrid::uniform(10.0, 101).unwrap();
    let f = FnField::new(1, |_, y: &[f64], dy: &mut [f64]| dy[0] = mean_field::mf_rhs(y[0], &p));
    // h = 1e-3
    let tr = ode::integrate(&f, &[0.1], &g, 100).unwrap();
    for (t, y) in g.times().iter().zip(tr.component(0)) {
        assert!((y - mf_closed_form(*t, &p)).abs() <= 1e-8);
    }
}

#[test]
fn appendix_forcings_are_ordered() {
    // the sharp forcing is smaller, so its bound sits below the verbatim one
    let p = ModelParams::new(2.0, 1.0, 20, 0.1).unwrap();
    let g = TimeGrid::uniform(10.0, 101).unwrap();
    let v = bounds::solve_appendix_z2_with(&p, &g, Forcing::Verbatim).unwrap();
    let s = bounds::solve_appendix_z2_with(&p, &g, Forcing::Sharp).unwrap();
    assert!(v.values.iter().zip(&s.values).all(|(a, b)| a >= b));
    let mt = master::solve_master(&p, &g).unwrap();
    assert!(mt.moments.iter().zip(&s.values).all(|(m, z)| m.m2 <= z + 1e-6));
}

#[test]
fn initial_state_is_point_mass() {
    let p = ModelParams::new(2.0, 1.0, 7, 0.1).unwrap();
    let d = model::initial_distribution(&p);
    assert_eq!(d.probs()[1], 1.0);
    assert_eq!(d.mass(), 1.0);
}
