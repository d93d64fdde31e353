//! Statistical properties of the simulators and forward estimators at
//! moderate sample sizes.

use reflect_core::conductivity::{ConductivityField, RadialProfile};
use reflect_core::estimators::{estimate_hitting_law, feynman_kac_dirichlet, feynman_kac_neumann, revuz_check};
use reflect_core::geometry::DomainSpec;
use reflect_core::reference::fd::{solve_dirichlet_fd, FdGrid, SolverOptions};
use reflect_core::simulate::{Recording, SimParams, Stepper};
use reflect_core::stats::{ks_pvalue, ks_statistic, Welford};
use reflect_core::{seed_rng, Domain, Field, Vector};

fn disk() -> Domain {
    DomainSpec::unit_disk()
}

#[test]
fn terminal_radius_is_area_uniform() {
    let f = Field::constant(0.5).unwrap();
    let d = disk();
    let st = Stepper::new(&f, &d, SimParams::new(1e-4)).unwrap();
    let mut radii: Vec<f64> = (0..4000)
        .map(|i| {
            let mut rng = seed_rng(21, i);
            let p = st.sample_path(Vector::new(0.5, 0.0), 2.0, Recording::Contacts, &mut rng).unwrap();
            p.points.last().unwrap().norm()
        })
        .collect();
    let ks = ks_statistic(&mut radii, |r| (r * r).min(1.0));
    assert!(ks_pvalue(ks, radii.len()) > 0.01, "KS {ks} p {}", ks_pvalue(ks, radii.len()));
}

#[test]
fn local_time_grows_and_boundary_time_vanishes() {
    let f = Field::constant(0.5).unwrap();
    let d = disk();
    let mut fractions = Vec::new();
    for dt in [1e-3, 1e-4] {
        let st = Stepper::new(&f, &d, SimParams::new(dt)).unwrap();
        let mut l = Welford::new();
        let mut on_boundary = 0usize;
        let n = st.steps_for(1.0);
        for i in 0..200 {
            let mut rng = seed_rng(5, i);
            let (_, total) =
                st.run(Vector::new(0.0, 0.0), n, &mut rng, |_, _, s, _| on_boundary += s.contact as usize).unwrap();
            l.push(total);
        }
        assert!(l.mean() > 0.0);
        fractions.push(on_boundary as f64 / (200 * n) as f64);
    }
    assert!(fractions[1] < 0.5 * fractions[0], "{fractions:?}");
}

#[test]
fn mean_exit_time_from_center() {
    let f = Field::constant(0.5).unwrap();
    let h = estimate_hitting_law(Vector::new(0.0, 0.0), &f, &disk(), SimParams::new(1e-4), 20_000, 4, 3).unwrap();
    let e = h.exit_time;
    assert!((e.value - 0.5).abs() < 0.005 + 3.0 * e.stderr, "{e:?}");
}

#[test]
fn radial_hitting_law_is_mirror_symmetric() {
    let d = disk();
    let f = ConductivityField::radial(RadialProfile::new(vec![1.0, 1.0]), &d).unwrap();
    let h = estimate_hitting_law(Vector::new(0.5, 0.0), &f, &d, SimParams::new(1e-3), 20_000, 8, 4).unwrap();
    // Bins [kπ/4, (k+1)π/4) and their mirror images about the x-axis.
    for k in 0..4 {
        let (a, b) = (&h.bins[k], &h.bins[7 - k]);
        let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        assert!((a.frequency - b.frequency).abs() < 4.0 * se, "bin {k}");
    }
}

#[test]
fn dirichlet_second_mode() {
    let f = Field::constant(1.0).unwrap();
    let e = feynman_kac_dirichlet(
        Vector::new(0.5, 0.0),
        |b| (2.0 * b.theta).cos(),
        &f,
        &disk(),
        SimParams::new(1e-4),
        20_000,
        8,
    )
    .unwrap();
    assert!((e.value - 0.25).abs() < 0.01 + 3.0 * e.stderr, "{e:?}");
}

#[test]
fn dirichlet_agrees_with_finite_volumes_for_bump() {
    let d = disk();
    let f = ConductivityField::bump(Vector::new(0.2, 0.1), 0.5, 2.0, &d).unwrap();
    let phi = |p: Vector| p.x + 0.5 * (p.x * p.x - p.y * p.y);
    let fd = solve_dirichlet_fd(&d, FdGrid::Polar { nr: 64, nt: 128 }, &f, phi, &SolverOptions::default()).unwrap();
    let x0 = Vector::new(0.1, 0.2);
    let mc = feynman_kac_dirichlet(x0, |b| phi(b.cartesian), &f, &d, SimParams::new(1e-4), 20_000, 9).unwrap();
    let reference = fd.value_at(x0);
    assert!((mc.value - reference).abs() < 0.01 + 3.0 * mc.stderr, "{} vs {reference}", mc.value);
}

#[test]
fn dirichlet_on_square_agrees_with_finite_differences() {
    let d = DomainSpec::<f64>::unit_square();
    let f = Field::constant(1.0).unwrap();
    let phi = |p: Vector| p.x * p.x - p.y * p.y;
    let fd = solve_dirichlet_fd(&d, FdGrid::Square { n: 64 }, &f, phi, &SolverOptions::default()).unwrap();
    let x0 = Vector::new(0.3, 0.6);
    let mc = feynman_kac_dirichlet(x0, |b| phi(b.cartesian), &f, &d, SimParams::new(1e-4), 20_000, 10).unwrap();
    assert!((fd.value_at(x0) - (0.09 - 0.36)).abs() < 1e-3);
    assert!((mc.value - fd.value_at(x0)).abs() < 0.01 + 3.0 * mc.stderr, "{mc:?}");
}

#[test]
fn neumann_solution_scales_inversely_with_conductivity() {
    let f = Field::constant(0.5).unwrap();
    let e = feynman_kac_neumann(
        Vector::new(0.3, 0.0),
        |b| b.theta.cos(),
        &f,
        &disk(),
        SimParams::new(2.5e-4),
        40.0,
        1500,
        12,
    )
    .unwrap();
    assert!((e.at_horizon.value - 0.6).abs() < 0.04 + 2.0 * e.at_horizon.stderr, "{:?}", e.at_horizon);
}

#[test]
fn revuz_pairing_of_odd_function_vanishes() {
    let f = Field::constant(0.5).unwrap();
    let r = revuz_check(|b| b.theta.cos(), &f, &disk(), SimParams::new(1e-4), 0.2, 4000, 13).unwrap();
    assert!(r.rhs.abs() < 1e-12);
    assert!(r.lhs.value.abs() < 3.0 * r.lhs.stderr, "{:?}", r.lhs);
}

#[test]
fn excursion_survival_decays_like_inverse_square_root() {
    // Brownian excursions started at depth δ survive beyond t with probability ≈ δ·√(2/(πt)).
    let f = Field::constant(0.5).unwrap();
    let d = disk();
    let st = Stepper::new(&f, &d, SimParams::new(1e-6)).unwrap();
    let times: Vec<f64> = (0..4000)
        .map(|i| {
            let mut rng = seed_rng(14, i);
            match st.sample_absorbed(Vector::new(0.99, 0.0), 0.02, false, &mut rng) {
                Ok(r) => r.exit_time,
                Err(_) => f64::INFINITY,
            }
        })
        .collect();
    let surv = |t: f64| times.iter().filter(|&&x| x > t).count() as f64 / times.len() as f64;
    let (t1, t2) = (1e-3, 1e-2);
    let slope = (surv(t2) / surv(t1)).ln() / (t2 / t1).ln();
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
}
