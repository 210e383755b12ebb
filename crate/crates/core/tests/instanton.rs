use approx::assert_relative_eq;

use ppath::grid::UniformGrid;
use ppath::instanton::{
    comparison_statistic, euclidean_action_field, optimize_sigma, shoot_bounce_reduced,
    solve_bounce_field, solve_bounce_model, solve_bounce_reduced, zero_energy_action, ReducedEom,
};
use ppath::model::{sphere_area, Ansatz, AnsatzVariant, FieldPotential, ScalarPotential};
use ppath::reduction::{reduce_ansatz, AnsatzModel, BarrierData, DomainRule, ReducedSystem};
use ppath::Error;

/// Fixed-step RK4 overshoot/undershoot shooting, independent of the library's
/// adaptive integrator: returns the Euclidean action of the bounce.
fn rk4_bounce_action(p: &ScalarPotential, d: u32, h: f64) -> f64 {
    let df = f64::from(d);
    let rhs = |rho: f64, y: [f64; 3]| {
        let friction = if rho > 0.0 { df / rho * y[1] } else { 0.0 };
        let density = (0.5 * y[1] * y[1] + p.value(y[0])) * rho.powi(d as i32);
        [y[1], p.deriv(y[0]) - friction, density]
    };
    // Integrates from φ(0) = φ₀ until the trajectory over- or undershoots;
    // returns (overshoot, action accumulated up to that point).
    let shoot = |phi0: f64| -> (bool, f64) {
        let mut rho = h;
        let mut y = [phi0 + p.deriv(phi0) * h * h / (2.0 * (df + 1.0)), p.deriv(phi0) * h / (df + 1.0), 0.0];
        loop {
            let k1 = rhs(rho, y);
            let at = |k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
            let k2 = rhs(rho + 0.5 * h, at(k1, 0.5 * h));
            let k3 = rhs(rho + 0.5 * h, at(k2, 0.5 * h));
            let k4 = rhs(rho + h, at(k3, h));
            for i in 0..3 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            rho += h;
            if y[0] < p.phi_false {
                return (true, y[2]);
            }
            if y[1] > 0.0 {
                return (false, y[2]);
            }
            if rho > 200.0 {
                return (false, y[2]);
            }
        }
    };
    // φ₀ between the barrier top (the zero of V beyond φ_F) and the true vacuum.
    let mut lo = {
        let (mut a, mut b) = (0.0, p.phi_true);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if p.value(m) > 0.0 {
                a = m
            } else {
                b = m
            }
        }
        b
    };
    let mut hi = p.phi_true;
    let mut action = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (over, s) = shoot(mid);
        if over {
            hi = mid;
        } else {
            lo = mid;
        }
        action = s;
    }
    sphere_area(d) * action
}

#[test]
fn field_bounce_matches_rk4_oracle() {
    for &(lambda, eta, d) in &[(1.0, 16.0, 2), (2.3, 16.0, 2), (1.4, 10.0, 2), (1.5, 16.0, 3), (1.8, 7.0, 1)] {
        let p = ScalarPotential::new(eta, lambda).unwrap();
        let b = solve_bounce_field(&p, d, 1e-10).unwrap();
        let oracle = rk4_bounce_action(&p, d, 2e-4);
        assert_relative_eq!(b.s_e, oracle, max_relative = 2e-4);
    }
}

#[test]
fn reference_field_actions() {
    let p = ScalarPotential::new(16.0, 1.0).unwrap();
    assert_relative_eq!(solve_bounce_field(&p, 2, 1e-10).unwrap().s_e, 8.734510786, max_relative = 1e-6);
    let p = ScalarPotential::new(7.0, 1.0).unwrap();
    assert_relative_eq!(solve_bounce_field(&p, 2, 1e-10).unwrap().s_e, 13.2053391, max_relative = 1e-6);
}

#[test]
fn bounce_satisfies_virial_identity_and_its_equation() {
    let p = ScalarPotential::new(16.0, 1.4).unwrap();
    for d in 1..=3 {
        let b = solve_bounce_field(&p, d, 1e-10).unwrap();
        assert_relative_eq!(b.s_e, b.s_e_virial, max_relative = 1e-6);
        assert_relative_eq!(euclidean_action_field(&b, &p, d), b.s_e, max_relative = 1e-6);
        assert!(b.phi0 > p.phi_false && b.phi0 < p.phi_true);
        // fourth-order finite-difference residual of φ″ + (d/ρ)φ′ = V′(φ)
        let h = b.rho_grid[1] - b.rho_grid[0];
        let n = b.rho_grid.len();
        let mut worst: f64 = 0.0;
        for i in n / 50..n - 3 {
            let f = &b.phi;
            let second = (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) / (12.0 * h * h);
            let residual = second + f64::from(d) / b.rho_grid[i] * b.dphi[i] - p.deriv(f[i]);
            worst = worst.max(residual.abs());
        }
        assert!(worst < 1e-6 * p.eta, "d={d}: residual {worst}");
    }
}

#[test]
fn bounce_converges_under_refinement() {
    let p = ScalarPotential::new(13.0, 1.8).unwrap();
    let coarse = solve_bounce_field(&p, 2, 1e-8).unwrap().s_e;
    let fine = solve_bounce_field(&p, 2, 1e-11).unwrap().s_e;
    assert!((coarse - fine).abs() < 1e-3 * fine);
}

#[test]
fn near_degenerate_vacua_fail_to_bracket() {
    let p = ScalarPotential::new(16.0, 1e-7).unwrap();
    assert!(matches!(solve_bounce_field(&p, 2, 1e-10), Err(Error::BracketingFailure(_))));
}

fn harmonic_well_with_barrier(scale: f64) -> ReducedSystem {
    // U = R² − R⁴/4 with K = 1 + R²/10: barrier at √2, turning point at 2.
    let grid = UniformGrid::symmetric(4.0, 1e-3).unwrap();
    let pts = grid.points();
    let u: Vec<f64> = pts.iter().map(|r| scale * (r * r - r.powi(4) / 4.0)).collect();
    let k: Vec<f64> = pts.iter().map(|r| 1.0 + r * r / 10.0).collect();
    let barrier = BarrierData { r_umax: 2f64.sqrt(), u_max: scale, turning_point: 2.0 };
    ReducedSystem::from_tables(grid, k, u, 1.0, 2.0 * scale, barrier, 1, true).unwrap()
}

#[test]
fn reduced_action_of_a_known_potential() {
    // 2∫₀² √(2(1 + R²/10)(R² − R⁴/4)) dR by an independent midpoint sum.
    let n = 2_000_000;
    let h = 2.0 / n as f64;
    let oracle: f64 = 2.0
        * (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                (2.0 * (1.0 + r * r / 10.0) * (r * r - r.powi(4) / 4.0)).max(0.0).sqrt() * h
            })
            .sum::<f64>();
    let exact_k = zero_energy_action(|r| Ok(1.0 + r * r / 10.0), |r| Ok(r * r - r.powi(4) / 4.0), 2.0, 1e-12).unwrap();
    assert_relative_eq!(exact_k, oracle, max_relative = 1e-8);
    let rs = harmonic_well_with_barrier(1.0);
    let b = solve_bounce_reduced(&rs, 1e-10).unwrap();
    assert_relative_eq!(b.turning_point, 2.0, max_relative = 1e-8);
    assert_relative_eq!(b.s_e_reduced, oracle, max_relative = 1e-6);
}

#[test]
fn action_scales_with_square_root_of_potential() {
    let base = solve_bounce_reduced(&harmonic_well_with_barrier(1.0), 1e-10).unwrap().s_e_reduced;
    for c in [0.25, 4.0, 9.0] {
        let scaled = solve_bounce_reduced(&harmonic_well_with_barrier(c), 1e-10).unwrap().s_e_reduced;
        assert_relative_eq!(scaled, base * c.sqrt(), max_relative = 1e-8);
    }
}

#[test]
fn shooting_agrees_with_quadrature() {
    let rs = harmonic_well_with_barrier(1.0);
    let quad = solve_bounce_reduced(&rs, 1e-10).unwrap().s_e_reduced;
    let shot = shoot_bounce_reduced(&rs, ReducedEom::Variational, 1e-10).unwrap();
    assert_relative_eq!(shot.s_e, quad, max_relative = 1e-4);
    assert_relative_eq!(shot.release_point, 2.0, max_relative = 1e-4);
    assert!(shot.max_energy_drift < 1e-6);
    // the literal equation does not conserve ½KR′² − U and gives a different action
    let literal = shoot_bounce_reduced(&rs, ReducedEom::Literal, 1e-10).unwrap();
    assert!(literal.max_energy_drift > 1e-3);

    let a = Ansatz::new(AnsatzVariant::Symmetric, 0.6, 2, ScalarPotential::new(16.0, 1.0).unwrap()).unwrap();
    let rs = reduce_ansatz(a, &DomainRule { spacing: 0.02, ..Default::default() }, 1e-8).unwrap();
    let quad = solve_bounce_reduced(&rs, 1e-10).unwrap().s_e_reduced;
    let shot = shoot_bounce_reduced(&rs, ReducedEom::Variational, 1e-10).unwrap().s_e;
    assert_relative_eq!(shot, quad, max_relative = 1e-3);
    let direct = solve_bounce_model(&AnsatzModel::new(a), 1e-10).unwrap().s_e_reduced;
    assert_relative_eq!(direct, quad, max_relative = 1e-4);
}

#[test]
fn sigma_optimization_is_interior_and_near_the_field_action() {
    let p = ScalarPotential::new(16.0, 1.0).unwrap();
    let template = Ansatz::new(AnsatzVariant::Symmetric, 0.5, 2, p).unwrap();
    let (sigma, s) = optimize_sigma(&template, (0.1, 1.5), 1e-8).unwrap();
    assert!(sigma > 0.2 && sigma < 1.2);
    let field = solve_bounce_field(&p, 2, 1e-10).unwrap().s_e;
    assert!(s > field * 0.9 && s < field * 1.1, "reduced {s} vs field {field}");
    for other in [0.8 * sigma, 1.2 * sigma] {
        let model = AnsatzModel::new(template.with_sigma(other).unwrap());
        assert!(solve_bounce_model(&model, 1e-8).unwrap().s_e_reduced > s);
    }
    assert!(matches!(
        optimize_sigma(&template, (0.1, 0.15), 1e-8),
        Err(Error::NoInteriorMinimum { .. })
    ));
}

#[test]
fn statistic_definition() {
    let (gamma, u_max, s): (f64, f64, f64) = (0.013, 2.5, 8.7);
    let expected = -(gamma / u_max).ln() - (s - 0.5 * (s / (2.0 * std::f64::consts::PI)).ln());
    assert_relative_eq!(comparison_statistic(gamma, u_max, s).unwrap(), expected, max_relative = 1e-15);
    assert!(comparison_statistic(-1.0, u_max, s).is_err());
    assert!(comparison_statistic(gamma, 0.0, s).is_err());
}

#[test]
fn field_potential_trait_is_consistent() {
    let p = ScalarPotential::new(9.0, 2.0).unwrap();
    assert_eq!(FieldPotential::false_vacuum(&p), p.phi_false);
    assert_eq!(FieldPotential::true_vacuum(&p), p.phi_true);
    assert_eq!(FieldPotential::value(&p, 0.3), p.value(0.3));
}
