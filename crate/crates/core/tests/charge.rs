use num_complex::Complex64;
use pointnls::charge::{forcing_density, inversion_identity_residual, solve_charge, SolverConfig};
use pointnls::field::{InitialDatum, ModelParams};
use pointnls::ops::TimeGrid;
use pointnls::specfun::{volterra_n, EvalPolicy};

/// For a datum off the domain, q - q0 ≈ N(t) (B(0) - h(q0)) as t → 0.
#[test]
fn small_time_layer_has_predicted_slope() {
    let p = EvalPolicy::default();
    let params = ModelParams::new(1.0, 1.0);
    let q0 = Complex64::new(0.3, 0.0);
    let datum = InitialDatum::gaussian(q0, Complex64::new(1.0, 0.0), 1.0).unwrap();
    let grid = TimeGrid::graded_with_floor(1e-6, 400, 0.3, 1e-150).unwrap();
    let traj = solve_charge(&datum, &params, &SolverConfig::default(), &grid, &p).unwrap();
    let c = forcing_density(&datum, 0.0, &p).unwrap() - params.h(q0);
    let err_at = |t: f64| {
        let n = grid.nearest(t);
        let tn = grid.nodes()[n];
        let slope = (traj.q.values()[n] - q0) / volterra_n(tn, &p).unwrap();
        (slope - c).norm() / c.norm()
    };
    let (coarse, fine) = (err_at(1e-40), err_at(1e-140));
    assert!(fine < 0.15, "slope error {fine:e} at 1e-140");
    assert!(fine < coarse, "slope error does not shrink: {coarse:e} → {fine:e}");
}

/// J[q] + ∫h(q) = 4π∫(U0ψ0)(0) holds up to a discretization error that shrinks with the step.
#[test]
fn inversion_identity_residual_decreases() {
    let p = EvalPolicy::default();
    let params = ModelParams::new(1.0, 1.0);
    let datum = InitialDatum::gaussian(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), 1.0).unwrap();
    let res: Vec<f64> = (0..2)
        .map(|l| {
            let cfg = SolverConfig::default().refined(1 << l);
            let traj = solve_charge(&datum, &params, &cfg, &cfg.grid(0.5).unwrap(), &p).unwrap();
            inversion_identity_residual(&datum, &params, &traj, &p).unwrap()
        })
        .collect();
    assert!(res[1] < res[0], "{res:?}");
    assert!(res[1] < 1e-4, "{res:?}");
}
