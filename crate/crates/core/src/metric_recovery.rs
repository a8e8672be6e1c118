//! Recovery of the scalar metric `f_r` whose proximity operator a trained
//! sublayer computes, i.e. `F(·, r) = prox_{f_r}` with the unit convention
//! `prox_f(y) = argmin_p f(p) + ½(p − y)²`.
//!
//! With `z = APL⁻¹(y)` and `Ã` the antiderivative of the APL unit,
//!
//! ```text
//! f_r(y) = (1/γ1)(z − γ2 r^(β−1)/(β−1)) y − y²/2 − (1/γ1) Ã(z)
//! ```

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unfolded::{AplParams, LayerParams, UnfoldedModel};

/// Smallest local slope accepted by the inverse. Matches `|w̃_c| ≥ 1e−6`.
pub const SLOPE_TOL: f64 = 1e-12;

/// Inverse of the APL unit at one point. Breakpoint intervals are half-open
/// on the right, so a value hit exactly at a kink maps to the piece on its
/// right.
pub fn apl_inverse_scalar(p: &AplParams, y: f64) -> Result<f64> {
    let mut num = y;
    let mut den = if y >= p.eval(0.0) { 1.0 } else { 0.0 };
    for c in 0..p.segments() {
        let b = p.b[c];
        if y < p.eval(b) {
            let w = p.weight(c);
            num -= w * b;
            den -= w;
        }
    }
    if den < SLOPE_TOL || !y.is_finite() {
        return Err(Error::NotInvertible(y));
    }
    Ok(num / den)
}

pub fn apl_inverse(p: &AplParams, y: &[f64]) -> Result<Vec<f64>> {
    y.iter().map(|&v| apl_inverse_scalar(p, v)).collect()
}

/// Continuous antiderivative of the APL unit, zero at the origin when all
/// breakpoints are nonnegative:
/// `z²/2 [z ≥ 0] − Σ_c (w_c/2)(z − b_c)² [z < b_c]`.
pub fn apl_antiderivative_scalar(p: &AplParams, z: f64) -> f64 {
    let mut out = if z >= 0.0 { 0.5 * z * z } else { 0.0 };
    for c in 0..p.segments() {
        let d = z - p.b[c];
        if d < 0.0 {
            out -= 0.5 * p.weight(c) * d * d;
        }
    }
    out
}

/// Sum of [`apl_antiderivative_scalar`] over coordinates.
pub fn apl_antiderivative(p: &AplParams, z: &[f64]) -> f64 {
    z.iter().map(|&v| apl_antiderivative_scalar(p, v)).sum()
}

/// `σ(y) = ⟨APL⁻¹(y), y⟩ − ½‖y‖² − Ã(APL⁻¹(y))`, the function whose unit
/// prox is the APL unit itself.
pub fn sigma_eval(p: &AplParams, y: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &v in y {
        let z = apl_inverse_scalar(p, v)?;
        total += z * v - 0.5 * v * v - apl_antiderivative_scalar(p, z);
    }
    Ok(total)
}

/// `f_r` at one point.
pub fn recover_metric_scalar(p: &LayerParams, r: f64, y: f64) -> Result<f64> {
    if !(p.gamma1 > 0.0) {
        return Err(Error::NonPositiveGamma(p.gamma1));
    }
    p.check_beta()?;
    let z = apl_inverse_scalar(&p.apl, y)?;
    let g = p.r_term(r);
    Ok((z - p.gamma2 * g) * y / p.gamma1
        - 0.5 * y * y
        - apl_antiderivative_scalar(&p.apl, z) / p.gamma1)
}

/// `f_r` evaluated pointwise on `y`.
pub fn recover_metric(p: &LayerParams, r: f64, y: &[f64]) -> Result<Vec<f64>> {
    y.iter().map(|&v| recover_metric_scalar(p, r, v)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveLayer {
    Index(usize),
    Tied,
}

impl fmt::Display for CurveLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveLayer::Index(t) => write!(f, "{t}"),
            CurveLayer::Tied => f.write_str("tied"),
        }
    }
}

/// `f_r` sampled on a grid, shifted so its minimum over the grid is zero.
/// Points where the APL unit cannot be inverted are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCurve {
    pub layer: CurveLayer,
    pub r_value: f64,
    pub y_grid: Vec<f64>,
    pub f_values: Vec<Option<f64>>,
}

impl MetricCurve {
    pub fn missing(&self) -> usize {
        self.f_values.iter().filter(|v| v.is_none()).count()
    }
}

fn has_nonnegative_bias(p: &AplParams) -> bool {
    p.b.iter().any(|b| *b >= 0.0)
}

fn curve_for(layer: CurveLayer, p: &LayerParams, r: f64, y_grid: &[f64]) -> Result<MetricCurve> {
    if !has_nonnegative_bias(&p.apl) {
        log::warn!("layer {layer}: no nonnegative APL bias, recovered metric may be meaningless");
    }
    let mut values = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        match recover_metric_scalar(p, r, y) {
            Ok(v) if v.is_finite() => values.push(Some(v)),
            Ok(_) | Err(Error::NotInvertible(_)) => values.push(None),
            Err(e) => return Err(e),
        }
    }
    let min = values
        .iter()
        .flatten()
        .fold(f64::INFINITY, |m, v| m.min(*v));
    if min.is_finite() {
        for v in values.iter_mut().flatten() {
            *v -= min;
        }
    }
    Ok(MetricCurve {
        layer,
        r_value: r,
        y_grid: y_grid.to_vec(),
        f_values: values,
    })
}

/// One curve per layer of an untied model, a single one for a tied model.
pub fn sample_metric_curve(
    model: &UnfoldedModel,
    r: f64,
    y_grid: &[f64],
) -> Result<Vec<MetricCurve>> {
    model.validate()?;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "r must be finite and >= 0, got {r}"
        )));
    }
    if y_grid.is_empty()
        || y_grid.iter().any(|v| !v.is_finite())
        || y_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidArgument(
            "y grid must be nonempty, finite and strictly increasing".into(),
        ));
    }
    if model.tied {
        Ok(vec![curve_for(
            CurveLayer::Tied,
            &model.layers[0],
            r,
            y_grid,
        )?])
    } else {
        model
            .layers
            .iter()
            .enumerate()
            .map(|(t, p)| curve_for(CurveLayer::Index(t), p, r, y_grid))
            .collect()
    }
}

/// Evenly spaced grid of `points` values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need points >= 2 and finite ymin < ymax, got {points} points on [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect())
}

/// CSV with header `layer,r,y,f`; missing values are empty fields.
pub fn write_curves_csv<W: Write>(curves: &[MetricCurve], mut out: W) -> std::io::Result<()> {
    writeln!(out, "layer,r,y,f")?;
    for c in curves {
        for (y, f) in c.y_grid.iter().zip(&c.f_values) {
            match f {
                Some(v) => writeln!(out, "{},{},{},{}", c.layer, c.r_value, y, v)?,
                None => writeln!(out, "{},{},{},", c.layer, c.r_value, y)?,
            }
        }
    }
    Ok(())
}

pub fn save_curves_csv(curves: &[MetricCurve], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_curves_csv(curves, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::minimize_scalar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_increasing(rng: &mut ChaCha8Rng, segments: usize) -> AplParams {
        let w: Vec<f64> = (0..segments)
            .map(|_| rng.random_range(0.2..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let mut b: Vec<f64> = (0..segments).map(|_| rng.random_range(-1.5..2.0)).collect();
        b[0] = b[0].abs();
        AplParams::new(w, b).unwrap()
    }

    #[test]
    fn identity_inverse() {
        let p = AplParams::identity();
        for y in [-3.0, -0.5, 0.0, 0.25, 7.0] {
            assert_eq!(apl_inverse_scalar(&p, y).unwrap(), y);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let segments = rng.random_range(1..=4);
            let p = random_increasing(&mut rng, segments);
            assert!(p.is_strictly_increasing(1e-6));
            for _ in 0..40 {
                let z = rng.random_range(-6.0..6.0);
                let back = apl_inverse_scalar(&p, p.eval(z)).unwrap();
                assert!(
                    (back - z).abs() <= 1e-10 * z.abs().max(1.0),
                    "{z} -> {back}"
                );
            }
            for &b in &p.b {
                let back = apl_inverse_scalar(&p, p.eval(b)).unwrap();
                assert!((back - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn relu_not_invertible_below_zero() {
        let p = AplParams::relu(3);
        assert!(matches!(
            apl_inverse_scalar(&p, -1.0),
            Err(Error::NotInvertible(_))
        ));
        assert_eq!(apl_inverse_scalar(&p, 2.0).unwrap(), 2.0);
    }

    #[test]
    fn antiderivative_examples() {
        let id = AplParams::identity();
        for z in [-2.0, -0.1, 0.0, 1.5] {
            assert!((apl_antiderivative_scalar(&id, z) - 0.5 * z * z).abs() < 1e-15);
        }
        assert_eq!(apl_antiderivative_scalar(&AplParams::relu(2), -3.0), 0.0);
        assert_eq!(apl_antiderivative(&id, &[1.0, 2.0]), 2.5);
    }

    #[test]
    fn antiderivative_slope_is_apl() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-6;
        for _ in 0..30 {
            let p = random_increasing(&mut rng, 3);
            for _ in 0..30 {
                let z: f64 = rng.random_range(-4.0..4.0);
                if p.b.iter().chain([0.0].iter()).any(|b| (z - b).abs() < 1e-3) {
                    continue;
                }
                let fd = (apl_antiderivative_scalar(&p, z + h)
                    - apl_antiderivative_scalar(&p, z - h))
                    / (2.0 * h);
                assert!((fd - p.eval(z)).abs() < 1e-6, "{fd} vs {}", p.eval(z));
            }
        }
    }

    #[test]
    fn antiderivative_is_continuous_at_breakpoints() {
        let p = AplParams::new(vec![0.7, 1.1], vec![1.3, -0.4]).unwrap();
        for &b in p.b.iter().chain([0.0].iter()) {
            let left = apl_antiderivative_scalar(&p, b - 1e-12);
            let right = apl_antiderivative_scalar(&p, b);
            assert!((left - right).abs() < 1e-10);
        }
    }

    #[test]
    fn sigma_of_identity_is_zero() {
        let y = [-2.0, 0.0, 0.3, 4.0];
        assert_eq!(sigma_eval(&AplParams::identity(), &y).unwrap(), 0.0);
    }

    #[test]
    fn sigma_prox_reproduces_apl() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let p = random_increasing(&mut rng, 3);
            for _ in 0..10 {
                let z = rng.random_range(-3.0..3.0);
                let obj = |q: f64| sigma_eval(&p, &[q]).unwrap() + 0.5 * (q - z) * (q - z);
                let q = minimize_scalar(obj, -60.0, 60.0, 1e-10).unwrap();
                assert!((q - p.eval(z)).abs() < 1e-5, "{q} vs {}", p.eval(z));
            }
        }
    }

    fn second_differences(p: &AplParams, quad: f64) -> Vec<f64> {
        let grid = linear_grid(-4.0, 4.0, 401).unwrap();
        let s: Vec<f64> = grid
            .iter()
            .map(|&y| sigma_eval(p, &[y]).unwrap() + 0.5 * quad * y * y)
            .collect();
        s.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect()
    }

    #[test]
    fn sigma_is_convex_for_nonexpansive_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            // slopes stay in (0, 1]: breakpoints at or below zero, Σ w̃² ≤ 1
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..0.55)).collect();
            let b = vec![
                0.0,
                rng.random_range(-2.0..0.0),
                rng.random_range(-2.0..0.0),
            ];
            let p = AplParams::new(w, b).unwrap();
            assert!(second_differences(&p, 0.0).iter().all(|d| *d >= -1e-8));
        }
    }

    #[test]
    fn sigma_plus_half_square_is_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let p = random_increasing(&mut rng, 3);
            assert!(second_differences(&p, 1.0).iter().all(|d| *d >= -1e-8));
        }
    }

    #[test]
    fn quadratic_init_reduces_to_squared_distance() {
        let p = LayerParams::quadratic(1.0, 3);
        let f = recover_metric(&p, 1.0, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!((f[2] - f[0]).abs() < 1e-12);
        assert!((f[3] - f[1] - 2.0).abs() < 1e-12);
        assert!((f[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_layer_gives_constant_metric() {
        let p = LayerParams {
            apl: AplParams::identity(),
            gamma1: 1.0,
            gamma2: 0.0,
            beta: 2.0,
        };
        let f = recover_metric(&p, 0.7, &[-2.0, 0.0, 1.0, 5.0]).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn nonpositive_gamma_rejected() {
        let mut p = LayerParams::quadratic(1.0, 3);
        p.gamma1 = 0.0;
        assert!(matches!(
            recover_metric(&p, 1.0, &[1.0]),
            Err(Error::NonPositiveGamma(_))
        ));
    }

    #[test]
    fn tied_model_gives_one_curve() {
        let m = UnfoldedModel::quadratic(15, 3, true, 1e-3).unwrap();
        let grid = linear_grid(0.0, 3.0, 31).unwrap();
        let curves = sample_metric_curve(&m, 1.0, &grid).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].layer, CurveLayer::Tied);
        let untied = UnfoldedModel::quadratic(4, 3, false, 1e-3).unwrap();
        assert_eq!(sample_metric_curve(&untied, 1.0, &grid).unwrap().len(), 4);
    }

    #[test]
    fn non_invertible_points_are_missing() {
        let mut m = UnfoldedModel::quadratic(1, 2, true, 1.0).unwrap();
        m.layers[0].apl = AplParams::relu(2);
        let grid = [-1.0, -0.5, 0.5, 1.0];
        let c = &sample_metric_curve(&m, 1.0, &grid).unwrap()[0];
        assert_eq!(c.f_values[0], None);
        assert_eq!(c.f_values[1], None);
        assert!(c.f_values[2].is_some() && c.f_values[3].is_some());
        assert_eq!(c.missing(), 2);
        let min = c
            .f_values
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, v| m.min(*v));
        assert_eq!(min, 0.0);
    }

    #[test]
    fn grid_must_increase() {
        let m = UnfoldedModel::quadratic(1, 1, true, 1.0).unwrap();
        assert!(sample_metric_curve(&m, 1.0, &[0.0, 0.0]).is_err());
        assert!(sample_metric_curve(&m, 1.0, &[]).is_err());
        assert!(linear_grid(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn csv_layout() {
        let c = MetricCurve {
            layer: CurveLayer::Index(2),
            r_value: 1.0,
            y_grid: vec![0.5, 1.25],
            f_values: vec![Some(0.1), None],
        };
        let mut buf = Vec::new();
        write_curves_csv(&[c], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "layer,r,y,f\n2,1,0.5,0.1\n2,1,1.25,\n"
        );
    }
}
