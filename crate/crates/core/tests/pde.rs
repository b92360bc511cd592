use yosida_core::homotopy::{Bound, MultistartConfig};
use yosida_core::pde::{build_elliptic, solve_elliptic_annulus, EllipticSpec, Reaction, WEAK_TOL};
use yosida_core::space::lp_norm;

fn branch_norm(n: usize) -> f64 {
    let spec = EllipticSpec { n, delta2: 0.03, ..EllipticSpec::single_node_demo() };
    let e = build_elliptic(&spec).unwrap();
    let sol = solve_elliptic_annulus(&e, None, &MultistartConfig::default()).unwrap();
    assert!(!sol.solutions.is_empty(), "no branch at N={n}");
    assert!(sol.weak_residuals.iter().all(|r| *r <= WEAK_TOL));
    let h = 1.0 / n as f64;
    // mesh-weighted L^p norm; the problem is odd, so both signs share it
    h.powf(1.0 / 3.0) * lp_norm(&sol.solutions[0], 3.0)
}

#[test]
fn mesh_refinement_trend() {
    let norms: Vec<f64> = [4, 8, 16].iter().map(|&n| branch_norm(n)).collect();
    for w in norms.windows(2) {
        let change = (w[1] / w[0] - 1.0).abs();
        assert!(change <= 0.25, "norms {norms:?}");
    }
}

#[test]
fn interval_reaction_shifts_the_branch() {
    let spec = EllipticSpec {
        reaction: Some(Reaction {
            lower: Bound { cabs: -0.01, ..Bound::default() },
            upper: Bound { c1: 0.02, cabs: 0.01, ..Bound::default() },
        }),
        ..EllipticSpec::single_node_demo()
    };
    let e = build_elliptic(&spec).unwrap();
    let sol = solve_elliptic_annulus(&e, None, &MultistartConfig::default()).unwrap();
    let pos = sol.solutions.iter().map(|u| u[0]).fold(f64::NEG_INFINITY, f64::max);
    // midpoint selection 0.01 u on u > 0: 16 u^2 = 0.99 u
    assert!((pos - 0.99 / 16.0).abs() <= 1e-6, "{pos}");
    assert!(sol.weak_residuals.iter().all(|r| *r <= WEAK_TOL));
}
