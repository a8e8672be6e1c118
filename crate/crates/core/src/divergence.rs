//! Beta-divergence generators, the Bregman divergence they induce, the
//! closed-form quadratic proximity operator, and a brute-force prox for the
//! generators without one.
//!
//! Throughout, `prox` with parameter `rho` means
//! `argmin_z D(z | r) + (rho / 2) (z - y)^2`, coordinate-wise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::minimize_scalar;

/// Floor applied to the prox search domain and to `r` inside `ψ'` where the
/// generator is singular at zero.
pub const DOMAIN_FLOOR: f64 = 1e-8;

/// Absolute argument tolerance of the brute-force prox.
pub const BRUTEFORCE_TOL: f64 = 1e-8;

/// A beta-divergence generator `ψ`, with `ψ'(z) = z^(β-1) / (β-1)`.
///
/// `β = 1` (Kullback-Leibler, `ψ' = ln z`) and `β = 0` (Itakura-Saito,
/// `ψ' = -1/z`) use their exact limit forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub beta: f64,
}

impl Generator {
    pub fn beta(beta: f64) -> Self {
        Generator { beta }
    }

    pub fn quadratic() -> Self {
        Generator { beta: 2.0 }
    }

    pub fn kullback_leibler() -> Self {
        Generator { beta: 1.0 }
    }

    pub fn itakura_saito() -> Self {
        Generator { beta: 0.0 }
    }

    /// True when `ψ` is finite only on the positive reals.
    fn needs_positive(&self) -> bool {
        self.beta <= 1.0
    }

    fn in_domain(&self, z: f64) -> bool {
        if !z.is_finite() {
            false
        } else if self.beta == 2.0 {
            true
        } else if self.needs_positive() {
            z > 0.0 || (self.beta == 1.0 && z == 0.0)
        } else {
            z >= 0.0
        }
    }

    pub fn psi(&self, z: f64) -> f64 {
        let b = self.beta;
        if b == 0.0 {
            -z.ln()
        } else if b == 1.0 {
            if z == 0.0 {
                0.0
            } else {
                z * z.ln() - z
            }
        } else if b == 2.0 {
            0.5 * z * z
        } else {
            z.powf(b) / (b * (b - 1.0))
        }
    }

    pub fn psi_prime(&self, z: f64) -> f64 {
        let b = self.beta;
        if b == 0.0 {
            -1.0 / z
        } else if b == 1.0 {
            z.ln()
        } else if b == 2.0 {
            z
        } else {
            z.powf(b - 1.0) / (b - 1.0)
        }
    }

    /// `ψ'` with its argument floored at [`DOMAIN_FLOOR`] for singular generators.
    pub fn psi_prime_floored(&self, z: f64) -> f64 {
        if self.needs_positive() {
            self.psi_prime(z.max(DOMAIN_FLOOR))
        } else {
            self.psi_prime(z)
        }
    }

    /// Scalar divergence `ψ(p) - ψ(q) - ψ'(q)(p - q)`.
    pub fn divergence(&self, p: f64, q: f64) -> f64 {
        match self.beta {
            0.0 => {
                let t = p / q;
                t - t.ln() - 1.0
            }
            1.0 => {
                if p == 0.0 {
                    q
                } else {
                    p * (p / q).ln() - p + q
                }
            }
            2.0 => 0.5 * (p - q) * (p - q),
            _ => self.psi(p) - self.psi(q) - self.psi_prime(q) * (p - q),
        }
    }
}

/// `D_ψ(p | q) = Σ_k [ψ(p_k) - ψ(q_k) - ψ'(q_k)(p_k - q_k)]`.
pub fn bregman_eval(gen: &Generator, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            expected: p.len(),
            actual: q.len(),
            context: "bregman_eval",
        });
    }
    let mut total = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        if !gen.in_domain(pk) {
            return Err(Error::Domain {
                beta: gen.beta,
                value: pk,
            });
        }
        let q_ok = gen.in_domain(qk) && !(gen.needs_positive() && qk == 0.0);
        if !q_ok {
            return Err(Error::Domain {
                beta: gen.beta,
                value: qk,
            });
        }
        total += gen.divergence(pk, qk);
    }
    Ok(total)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRho(rho))
    }
}

/// Closed-form prox of `½‖· - r‖²`: `(y + r/ρ) / (1 + 1/ρ)`, evaluated as
/// the convex combination `γ1 y + γ2 r` with `γ1 = 1/(1 + 1/ρ)`,
/// `γ2 = (1/ρ)/(1 + 1/ρ)`.
pub fn prox_quadratic(y: &[f64], r: &[f64], rho: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; y.len()];
    prox_quadratic_into(y, r, rho, &mut out)?;
    Ok(out)
}

pub fn prox_quadratic_into(y: &[f64], r: &[f64], rho: f64, out: &mut [f64]) -> Result<()> {
    check_rho(rho)?;
    if y.len() != r.len() || out.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: y.len(),
            actual: r.len().min(out.len()),
            context: "prox_quadratic",
        });
    }
    let (g1, g2) = quadratic_weights(rho);
    for ((o, &yk), &rk) in out.iter_mut().zip(y).zip(r) {
        *o = g1 * yk + g2 * rk;
    }
    Ok(())
}

/// `(γ1, γ2)` of the quadratic prox.
pub fn quadratic_weights(rho: f64) -> (f64, f64) {
    let inv = 1.0 / rho;
    (1.0 / (1.0 + inv), inv / (1.0 + inv))
}

fn search_ceiling(y: f64, r: f64) -> f64 {
    y.max(r).max(1.0) * 10.0
}

/// Coordinate-wise argmin of `D_ψ(z | r_k) + (ρ/2)(z - y_k)²` over
/// `z ∈ [DOMAIN_FLOOR, 10·max(y_k, r_k, 1)]`.
pub fn prox_bruteforce(gen: &Generator, r: &[f64], rho: f64, y: &[f64]) -> Result<Vec<f64>> {
    check_rho(rho)?;
    if y.len() != r.len() {
        return Err(Error::ShapeMismatch {
            expected: r.len(),
            actual: y.len(),
            context: "prox_bruteforce",
        });
    }
    y.iter()
        .zip(r)
        .map(|(&yk, &rk)| {
            let rk = if gen.needs_positive() {
                rk.max(DOMAIN_FLOOR)
            } else {
                rk
            };
            let objective = |z: f64| gen.divergence(z, rk) + 0.5 * rho * (z - yk) * (z - yk);
            minimize_scalar(
                objective,
                DOMAIN_FLOOR,
                search_ceiling(yk, rk),
                BRUTEFORCE_TOL,
            )
        })
        .collect()
}

/// Both sides of the prox shift identity
/// `prox[D_ψ(·|r)](y) = prox[ψ](y + ψ'(r)/ρ)`, each by its own brute-force
/// minimization.
pub fn prox_shift_check(
    gen: &Generator,
    r: &[f64],
    rho: f64,
    y: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let lhs = prox_bruteforce(gen, r, rho, y)?;
    let rhs = y
        .iter()
        .zip(r)
        .map(|(&yk, &rk)| {
            let shifted = yk + gen.psi_prime_floored(rk) / rho;
            let objective = |z: f64| gen.psi(z) + 0.5 * rho * (z - shifted) * (z - shifted);
            minimize_scalar(
                objective,
                DOMAIN_FLOOR,
                search_ceiling(shifted, rk),
                BRUTEFORCE_TOL,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_divergence_value() {
        let d = bregman_eval(&Generator::quadratic(), &[2.0], &[0.0]).unwrap();
        assert_eq!(d, 2.0);
    }

    #[test]
    fn itakura_saito_value() {
        let d = bregman_eval(&Generator::itakura_saito(), &[1.0], &[2.0]).unwrap();
        assert!((d - (0.5 - 0.5f64.ln() - 1.0)).abs() < 1e-15);
        assert!((d - 0.193147).abs() < 1e-6);
    }

    #[test]
    fn identical_arguments_give_zero() {
        for beta in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let g = Generator::beta(beta);
            let p = [0.3, 1.0, 4.5];
            assert!(bregman_eval(&g, &p, &p).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn domain_violations() {
        assert!(matches!(
            bregman_eval(&Generator::itakura_saito(), &[1.0], &[0.0]),
            Err(Error::Domain { .. })
        ));
        assert!(bregman_eval(&Generator::kullback_leibler(), &[1.0], &[0.0]).is_err());
        assert!(bregman_eval(&Generator::beta(1.5), &[-1.0], &[1.0]).is_err());
        assert!(bregman_eval(&Generator::quadratic(), &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn quadratic_prox_values() {
        assert_eq!(prox_quadratic(&[2.0], &[1.0], 1.0).unwrap(), vec![1.5]);
        let r = [0.0, 0.7, 3.0];
        let out = prox_quadratic(&r, &r, 0.01).unwrap();
        for (o, v) in out.iter().zip(&r) {
            assert!((o - v).abs() < 1e-15);
        }
        assert!(matches!(
            prox_quadratic(&[1.0], &[1.0], 0.0),
            Err(Error::InvalidRho(_))
        ));
        assert!(prox_quadratic(&[1.0], &[1.0], -2.0).is_err());
    }

    #[test]
    fn bruteforce_matches_closed_form() {
        let y = [0.1, 1.0, 2.5, 7.0];
        let r = [0.0, 2.0, 1.0, 3.0];
        for rho in [0.1, 1.0, 10.0] {
            let bf = prox_bruteforce(&Generator::quadratic(), &r, rho, &y).unwrap();
            let cf = prox_quadratic(&y, &r, rho).unwrap();
            for (a, b) in bf.iter().zip(&cf) {
                assert!((a - b).abs() < 1e-6, "rho {rho}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kl_prox_fixed_point() {
        let z = prox_bruteforce(&Generator::kullback_leibler(), &[1.0], 1.0, &[1.0]).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn large_rho_approaches_identity() {
        for beta in [0.0, 1.0, 1.5, 2.0] {
            let g = Generator::beta(beta);
            let y = [0.5, 2.0];
            let z = prox_bruteforce(&g, &[1.0, 1.0], 1e6, &y).unwrap();
            for (a, b) in z.iter().zip(&y) {
                assert!((a - b).abs() <= 1e-4, "beta {beta}");
            }
        }
    }

    #[test]
    fn shift_identity_named_cases() {
        let cases = [
            (Generator::quadratic(), 1.3, 0.8, 2.0),
            (Generator::kullback_leibler(), 1.0, 1.0, 1.0),
            (Generator::itakura_saito(), 2.0, 1.0, 10.0),
        ];
        for (g, r, y, rho) in cases {
            let (lhs, rhs) = prox_shift_check(&g, &[r], rho, &[y]).unwrap();
            assert!(
                (lhs[0] - rhs[0]).abs() < 2e-6,
                "beta {}: {lhs:?} {rhs:?}",
                g.beta
            );
        }
    }

    proptest! {
        #[test]
        fn divergence_nonnegative(
            beta in prop::sample::select(vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5]),
            p in 0.01f64..10.0,
            q in 0.01f64..10.0,
        ) {
            let d = bregman_eval(&Generator::beta(beta), &[p], &[q]).unwrap();
            prop_assert!(d >= -1e-12);
            if (p - q).abs() > 1e-3 {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn bruteforce_is_stationary(
            beta in prop::sample::select(vec![0.0, 1.0, 1.5, 2.0, 2.5]),
            r in 0.3f64..3.0,
            y in 0.3f64..3.0,
            rho in 0.5f64..5.0,
        ) {
            let g = Generator::beta(beta);
            let z = prox_bruteforce(&g, &[r], rho, &[y]).unwrap()[0];
            let grad = g.psi_prime(z) - g.psi_prime(r) + rho * (z - y);
            prop_assert!(grad.abs() <= 1e-5, "grad {grad} at z {z}");
        }

        #[test]
        fn prox_nonexpansive(
            beta in prop::sample::select(vec![0.0, 1.0, 1.5, 2.0, 2.5]),
            r in 0.3f64..3.0,
            y1 in 0.3f64..3.0,
            y2 in 0.3f64..3.0,
            rho in 0.5f64..5.0,
        ) {
            let g = Generator::beta(beta);
            let z = prox_bruteforce(&g, &[r, r], rho, &[y1, y2]).unwrap();
            prop_assert!((z[0] - z[1]).abs() <= (y1 - y2).abs() + 2e-8);
        }
    }
}
