mod common;

use common::*;
use pr_core::metric_recovery::{
    linear_grid, recover_metric, recover_metric_scalar, sample_metric_curve, save_curves_csv,
};
use pr_core::oracle::minimize_scalar;
use pr_core::unfolded::{sublayer_F, LayerParams, UnfoldedModel};

/// `argmin_p f_r(p) + ½(p − y)²` by derivative-free search.
fn prox_of_metric(p: &LayerParams, r: f64, y: f64) -> f64 {
    let obj = |q: f64| recover_metric_scalar(p, r, q).unwrap() + 0.5 * (q - y) * (q - y);
    minimize_scalar(obj, -300.0, 300.0, 1e-10).unwrap()
}

#[test]
fn prox_of_recovered_metric_is_the_sublayer() {
    let mut rng = rng(29);
    let grid = linear_grid(-1.0, 5.0, 50).unwrap();
    for _ in 0..10 {
        let layer = random_invertible_layer(&mut rng, 3);
        for r in [0.1, 1.0, 10.0] {
            let expected = sublayer_F(&layer, &grid, &vec![r; grid.len()]).unwrap();
            for (&y, &e) in grid.iter().zip(&expected) {
                let got = prox_of_metric(&layer, r, y);
                assert!((got - e).abs() <= 1e-4, "r {r} y {y}: {got} vs {e}");
            }
        }
    }
}

#[test]
fn quadratic_init_recovers_scaled_squared_distance() {
    let grid = linear_grid(0.0, 4.0, 81).unwrap();
    for rho in [1e-3, 0.1, 1.0, 5.0] {
        let model = UnfoldedModel::quadratic(3, 3, false, rho).unwrap();
        for r in [0.1, 1.0, 2.5] {
            let curves = sample_metric_curve(&model, r, &grid).unwrap();
            assert_eq!(curves.len(), 3);
            let target: Vec<f64> = grid.iter().map(|y| 0.5 * (y - r) * (y - r) / rho).collect();
            for c in &curves {
                let f: Vec<f64> = c.f_values.iter().map(|v| v.unwrap()).collect();
                let scale = target.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for i in 1..f.len() {
                    let d = (f[i] - f[0]) - (target[i] - target[0]);
                    assert!(d.abs() <= 1e-8 * scale, "rho {rho} r {r}: {d}");
                }
            }
        }
    }
}

#[test]
fn recovered_values_match_scalar_path() {
    let mut rng = rng(30);
    let layer = random_invertible_layer(&mut rng, 2);
    let grid = linear_grid(-1.0, 3.0, 9).unwrap();
    let v = recover_metric(&layer, 0.7, &grid).unwrap();
    for (y, f) in grid.iter().zip(&v) {
        assert_eq!(*f, recover_metric_scalar(&layer, 0.7, *y).unwrap());
    }
}

#[test]
fn curves_csv_file() {
    let model = UnfoldedModel::quadratic(2, 3, false, 1.0).unwrap();
    let grid = linear_grid(0.0, 2.0, 5).unwrap();
    let curves = sample_metric_curve(&model, 1.0, &grid).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    save_curves_csv(&curves, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "layer,r,y,f");
    assert_eq!(lines.len(), 1 + 2 * 5);
    assert_eq!(lines[1], "0,1,0,0.5");
    assert!(save_curves_csv(&curves, &dir.path().join("missing/x.csv")).is_err());
}
