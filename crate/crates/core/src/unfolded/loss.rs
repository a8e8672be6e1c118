//! Negative scale-invariant SDR, the differentiable training loss.

use crate::error::{Error, Result};

/// Lower cap on the loss, in dB.
pub const LOSS_FLOOR_DB: f64 = -60.0;

/// Scale-invariant SDR in dB (higher is better), uncapped.
pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    let (loss, _) = neg_si_sdr(estimate, reference, false)?;
    Ok(-loss)
}

/// `−10 log10(‖αx‖² / ‖x̂ − αx‖²)` with `α = ⟨x̂, x⟩/‖x‖²`, capped below at
/// [`LOSS_FLOOR_DB`], and its gradient with respect to `x̂`. The gradient is
/// zero where the cap is active.
pub fn training_loss(estimate: &[f64], reference: &[f64]) -> Result<(f64, Vec<f64>)> {
    neg_si_sdr(estimate, reference, true)
}

fn neg_si_sdr(estimate: &[f64], reference: &[f64], want_grad: bool) -> Result<(f64, Vec<f64>)> {
    if estimate.len() != reference.len() {
        return Err(Error::ShapeMismatch {
            expected: reference.len(),
            actual: estimate.len(),
            context: "training loss",
        });
    }
    let ref_energy: f64 = reference.iter().map(|v| v * v).sum();
    if ref_energy == 0.0 {
        return Err(Error::ZeroReference);
    }
    let dot: f64 = estimate.iter().zip(reference).map(|(a, b)| a * b).sum();
    let alpha = dot / ref_energy;
    let target_energy = alpha * alpha * ref_energy;
    let mut noise_energy = 0.0;
    for (e, r) in estimate.iter().zip(reference) {
        let d = e - alpha * r;
        noise_energy += d * d;
    }
    let loss = -10.0 * (target_energy / noise_energy).log10();
    if !want_grad {
        return Ok((loss, Vec::new()));
    }
    if !(loss > LOSS_FLOOR_DB) {
        return Ok((LOSS_FLOOR_DB, vec![0.0; estimate.len()]));
    }
    // ∂‖p‖²/∂x̂ = 2p and ∂‖e‖²/∂x̂ = 2e, with p = αx and e = x̂ − p.
    let k = 10.0 / std::f64::consts::LN_10;
    let grad = estimate
        .iter()
        .zip(reference)
        .map(|(e, r)| {
            let p = alpha * r;
            let n = e - p;
            -k * (2.0 * p / target_energy - 2.0 * n / noise_energy)
        })
        .collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_match_hits_floor() {
        let x = [0.3, -1.0, 2.0, 0.5];
        let (l, g) = training_loss(&x, &x).unwrap();
        assert_eq!(l, LOSS_FLOOR_DB);
        assert!(g.iter().all(|v| *v == 0.0));
        let half: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
        assert_eq!(training_loss(&half, &x).unwrap().0, LOSS_FLOOR_DB);
    }

    #[test]
    fn scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e: Vec<f64> = x
            .iter()
            .map(|v| v + 0.2 * rng.random_range(-1.0..1.0))
            .collect();
        let e3: Vec<f64> = e.iter().map(|v| 3.0 * v).collect();
        let a = training_loss(&e, &x).unwrap().0;
        let b = training_loss(&e3, &x).unwrap().0;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn zero_reference_rejected() {
        assert!(matches!(
            training_loss(&[1.0], &[0.0]),
            Err(Error::ZeroReference)
        ));
        assert!(training_loss(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let est: Vec<f64> = x
            .iter()
            .map(|v| 0.8 * v + 0.3 * rng.random_range(-1.0..1.0))
            .collect();
        let (_, g) = training_loss(&est, &x).unwrap();
        let h = 1e-6;
        for i in 0..est.len() {
            let mut p = est.clone();
            p[i] += h;
            let mut m = est.clone();
            m[i] -= h;
            let fd =
                (training_loss(&p, &x).unwrap().0 - training_loss(&m, &x).unwrap().0) / (2.0 * h);
            let rel = (fd - g[i]).abs() / g[i].abs().max(fd.abs());
            assert!(rel <= 1e-6, "coord {i}: {fd} vs {}", g[i]);
        }
    }
}
