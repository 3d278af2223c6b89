//! Exact evolution matrices for the inverse-linear, power-law and exponential
//! frequency families.

use num_complex::Complex64;

use crate::bessel::bessel_jy;
use crate::error::{domain, invalid, Error, Result};
use crate::profile::FrequencyProfile;
use crate::symplectic::{EvolutionMatrix, StationaryState, DET_TOL_PROPAGATOR};

/// Roots of `β(β − 1) + Ω² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPair {
    pub beta1: Complex64,
    pub beta2: Complex64,
    pub delta: Complex64,
}

impl ExponentPair {
    pub fn new(omega0: f64, v: f64) -> Result<Self> {
        check_rate(omega0, v)?;
        let big_omega = omega0 / v;
        let delta = Complex64::new(0.25 - big_omega * big_omega, 0.0).sqrt();
        Ok(Self { beta1: 0.5 + delta, beta2: 0.5 - delta, delta })
    }
}

fn check_rate(omega0: f64, v: f64) -> Result<()> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(invalid(format!("omega0 must be positive and finite, got {omega0}")));
    }
    if v == 0.0 || !v.is_finite() {
        return Err(invalid(format!("rate v must be finite and nonzero, got {v}")));
    }
    Ok(())
}

/// Scale `λ` (or `z`) is reachable from 1 with `t ≥ 0` at rate `v`.
fn check_reachable(v: f64, scale: f64, what: &str) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(domain(format!("{what} must be positive and finite, got {scale}")));
    }
    if (v > 0.0 && scale < 1.0) || (v < 0.0 && scale > 1.0) {
        return Err(domain(format!("{what} = {scale} is not reachable with v = {v}")));
    }
    Ok(())
}

fn checked(s: EvolutionMatrix) -> Result<EvolutionMatrix> {
    let err = s.det_error();
    if err < DET_TOL_PROPAGATOR {
        Ok(s)
    } else if err.is_finite() {
        Err(Error::NotSymplectic { det: s.det() })
    } else {
        Err(domain("propagator entries overflowed"))
    }
}

/// `(C, S)` with `C = cosh(δL)`, `S = sinh(δL)/δ`, continued to imaginary
/// `δ` and to `δ = 0`, given `δ²`.
fn even_odd_pair(delta_sq: f64, l: f64) -> (f64, f64) {
    if delta_sq > 0.0 {
        let delta = delta_sq.sqrt();
        let x = delta * l;
        (x.cosh(), if x.abs() < 1e-8 { l * (1.0 + x * x / 6.0) } else { x.sinh() / delta })
    } else if delta_sq < 0.0 {
        let kappa = (-delta_sq).sqrt();
        let x = kappa * l;
        (x.cos(), if x.abs() < 1e-8 { l * (1.0 - x * x / 6.0) } else { x.sin() / kappa })
    } else {
        (1.0, l)
    }
}

/// Inverse-linear profile `ω = ω₀/(1 + v t)` run until `1 + v t = λ`.
pub fn propagate_inverse_linear(omega0: f64, v: f64, lambda: f64) -> Result<EvolutionMatrix> {
    check_rate(omega0, v)?;
    check_reachable(v, lambda, "lambda")?;
    let big_omega = omega0 / v;
    let (c, s) = even_odd_pair(0.25 - big_omega * big_omega, lambda.ln());
    let root = lambda.sqrt();
    checked(EvolutionMatrix::new(
        root * (c - 0.5 * s),
        root * s / v,
        -(omega0 * omega0 / v) * s / root,
        (c + 0.5 * s) / root,
    ))
}

/// Mean energy at `λ` for a stationary state of the initial Hamiltonian.
///
/// `state.omega0` must equal `omega0`.
pub fn energy_inverse_linear(omega0: f64, v: f64, lambda: f64, state: &StationaryState) -> Result<f64> {
    check_rate(omega0, v)?;
    check_reachable(v, lambda, "lambda")?;
    if (state.omega0 - omega0).abs() > 1e-12 * omega0 {
        return Err(invalid(format!("state frequency {} differs from profile frequency {omega0}", state.omega0)));
    }
    let big_omega = omega0 / v;
    let (_, s) = even_odd_pair(0.25 - big_omega * big_omega, lambda.ln());
    Ok(0.5 * state.energy() * (2.0 + s * s) / lambda)
}

/// `z` at which the power-law frequency has fallen to `ω₀/λ`.
pub fn power_law_scale_to_z(k: f64, lambda: f64) -> Result<f64> {
    if k == 2.0 {
        return Err(domain("k = 2 gives a constant frequency; no scale can be reached"));
    }
    if !(lambda > 0.0) {
        return Err(domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(lambda.powf(-2.0 / (k - 2.0)))
}

/// Power-law profile `ω = z^{(k−2)/2}`, `z = 1 + v t`, run until `z = z_final`.
pub fn propagate_power_law(k: f64, v: f64, z_final: f64) -> Result<EvolutionMatrix> {
    propagate_power_law_with(k, v, 1.0, z_final)
}

/// As [`propagate_power_law`] with reference frequency `omega0`.
pub fn propagate_power_law_with(k: f64, v: f64, omega0: f64, z_final: f64) -> Result<EvolutionMatrix> {
    check_rate(omega0, v)?;
    if k == 0.0 || !k.is_finite() {
        return Err(invalid(format!("power-law exponent must be finite and nonzero, got {k}")));
    }
    check_reachable(v, z_final, "z_final")?;
    if z_final == 1.0 {
        return Ok(EvolutionMatrix::IDENTITY);
    }
    // q = √z Z_ν(x), x = β z^{k/2}; Z_{−ν} lies in the span of J_ν, Y_ν.
    // √z dq/dz = ½Z + (k/2) x Z'_ν, rewritten with the neighbouring order so
    // that the leading small-x terms do not cancel.
    let nu = 1.0 / k.abs();
    let beta = 2.0 * omega0 / (k.abs() * v.abs());
    let phi = |z: f64| -> Result<[f64; 4]> {
        let x = beta * z.powf(0.5 * k);
        let f = bessel_jy(nu, x)?;
        let (jn, yn) = if k > 0.0 { neighbour_below(nu, x)? } else { neighbour_above(nu, x)? };
        let root = z.sqrt();
        let scale = v * 0.5 * k.abs() * x / root;
        Ok([root * f.j, root * f.y, scale * jn, scale * yn])
    };
    let [q1, q2, p1, p2] = phi(1.0)?;
    let [r1, r2, s1, s2] = phi(z_final)?;
    // Wronskian of the pair in z is k/π.
    let w = v * k / std::f64::consts::PI;
    checked(solution_matrix([r1, r2, s1, s2], [q1, q2, p1, p2], w))
}

/// `(J_{ν+1}, Y_{ν+1})`.
fn neighbour_above(nu: f64, x: f64) -> Result<(f64, f64)> {
    let f = bessel_jy(nu + 1.0, x)?;
    Ok((f.j, f.y))
}

/// `(J_{ν−1}, Y_{ν−1})`, reflecting negative orders onto `μ = 1 − ν`.
fn neighbour_below(nu: f64, x: f64) -> Result<(f64, f64)> {
    if nu >= 1.0 {
        let f = bessel_jy(nu - 1.0, x)?;
        return Ok((f.j, f.y));
    }
    let mu = 1.0 - nu;
    let f = bessel_jy(mu, x)?;
    let (s, c) = (mu * std::f64::consts::PI).sin_cos();
    Ok((c * f.j - s * f.y, s * f.j + c * f.y))
}

/// `Φ(z)·Φ(1)⁻¹` with `det Φ = w`.
fn solution_matrix(end: [f64; 4], start: [f64; 4], w: f64) -> EvolutionMatrix {
    let [r1, r2, s1, s2] = end;
    let [q1, q2, p1, p2] = start;
    EvolutionMatrix::new(
        (r1 * p2 - r2 * p1) / w,
        (r2 * q1 - r1 * q2) / w,
        (s1 * p2 - s2 * p1) / w,
        (s2 * q1 - s1 * q2) / w,
    )
}

/// Exponential profile `ω = e^{v t}` run until `z = e^{v t} = z_final`.
pub fn propagate_exponential(v: f64, z_final: f64) -> Result<EvolutionMatrix> {
    propagate_exponential_with(v, 1.0, z_final)
}

/// As [`propagate_exponential`] with reference frequency `omega0`.
pub fn propagate_exponential_with(v: f64, omega0: f64, z_final: f64) -> Result<EvolutionMatrix> {
    check_rate(omega0, v)?;
    check_reachable(v, z_final, "z_final")?;
    if z_final == 1.0 {
        return Ok(EvolutionMatrix::IDENTITY);
    }
    let c = omega0 / v.abs();
    let phi = |z: f64| -> Result<[f64; 4]> {
        let x = c * z;
        let f = bessel_jy(0.0, x)?;
        Ok([f.j, f.y, v * x * f.jp, v * x * f.yp])
    };
    let start = phi(1.0)?;
    let end = phi(z_final)?;
    checked(solution_matrix(end, start, 2.0 * v / std::f64::consts::PI))
}

/// Sudden-limit ground-state energy `(ω/4)(1 + 1/λ²)` after the frequency jumps from `ω` to `ω/λ`.
pub fn asymptotic_energy(lambda: f64, omega: f64) -> f64 {
    0.25 * omega * (1.0 + 1.0 / (lambda * lambda))
}

/// Large-`v` ground-state energy of the exponential profile in the commonly quoted form
/// `¼(1 + z²) − (z² − 1)²/(16 v²)`.
pub fn exponential_asymptotic_energy(v: f64, z: f64) -> f64 {
    let s = z * z - 1.0;
    0.25 * (1.0 + z * z) - s * s / (16.0 * v * v)
}

/// Large-`v` ground-state energy of the exponential profile through order `1/v²`:
/// `¼(1 + z²) + [z² ln²z − (z² − 1)²/4]/(4 v²)`.
pub fn exponential_asymptotic_energy_full(v: f64, z: f64) -> f64 {
    let s = z * z - 1.0;
    let l = z.ln();
    0.25 * (1.0 + z * z) + (z * z * l * l - 0.25 * s * s) / (4.0 * v * v)
}

/// Closed-form propagator over `[0, t_final]` for the profile families that have one.
///
/// Returns `None` for log-sine, piecewise and tabulated profiles.
pub fn closed_form(profile: &FrequencyProfile, t_final: f64) -> Option<Result<EvolutionMatrix>> {
    if let Err(e) = profile.validate(t_final) {
        return Some(Err(e));
    }
    Some(match *profile {
        FrequencyProfile::Constant { omega } => {
            let (s, c) = (omega * t_final).sin_cos();
            Ok(EvolutionMatrix::new(c, s / omega, -omega * s, c))
        }
        FrequencyProfile::InverseLinear { omega0, v } => propagate_inverse_linear(omega0, v, 1.0 + v * t_final),
        FrequencyProfile::PowerLaw { k, v, omega0 } => propagate_power_law_with(k, v, omega0, 1.0 + v * t_final),
        FrequencyProfile::Exponential { v, omega0 } => propagate_exponential_with(v, omega0, (v * t_final).exp()),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::final_energy;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exponent_pair_satisfies_vieta() {
        for &(w, v) in &[(1.0, 1.0), (1.0, 3.0), (0.3, -0.2), (2.0, 4.0)] {
            let e = ExponentPair::new(w, v).unwrap();
            let om = w / v;
            assert!((e.beta1 + e.beta2 - 1.0).norm() < 1e-14);
            assert!((e.beta1 * e.beta2 - om * om).norm() < 1e-14);
        }
    }

    /// Complex-power form evaluated straight from the root pair.
    fn complex_oracle(omega0: f64, v: f64, lambda: f64) -> [f64; 4] {
        let e = ExponentPair::new(omega0, v).unwrap();
        let (b1, b2) = (e.beta1, e.beta2);
        let l = Complex64::new(lambda, 0.0);
        let (l1, l2) = (l.powc(b1), l.powc(b2));
        // q(z) = A z^{β₁} + B z^{β₂}, p = v q'(z)
        let col = |q0: f64, p0: f64| {
            let qz0 = p0 / v;
            let a = (qz0 - b2 * q0) / (b1 - b2);
            let b = (b1 * q0 - qz0) / (b1 - b2);
            let q = a * l1 + b * l2;
            let p = v * (a * b1 * l1 + b * b2 * l2) / lambda;
            (q.re, p.re)
        };
        let (a, c) = col(1.0, 0.0);
        let (b, dd) = col(0.0, 1.0);
        [a, b, c, dd]
    }

    #[test]
    fn inverse_linear_matches_complex_power_form() {
        for &(w, v, lam) in &[(1.0, 1.0, 2.0), (1.0, 5.0, 10.0), (2.0, 0.3, 4.0), (1.0, -0.5, 0.2), (1.0, -3.0, 0.5)] {
            let s = propagate_inverse_linear(w, v, lam).unwrap();
            let o = complex_oracle(w, v, lam);
            for (x, y) in s.entries().iter().zip(o) {
                assert!(close(*x, y, 1e-11 * (1.0 + y.abs())), "{w} {v} {lam}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn inverse_linear_identity_and_det() {
        assert_eq!(propagate_inverse_linear(1.0, 2.0, 1.0).unwrap().max_abs_diff(&EvolutionMatrix::IDENTITY), 0.0);
        for &v in &[1e-3, 0.1, 1.9, 2.0, 2.1, 50.0, 1e3] {
            for &lam in &[1.5, 10.0, 100.0] {
                let s = propagate_inverse_linear(1.0, v, lam).unwrap();
                assert!(s.det_error() < 1e-12, "v {v} lam {lam}");
            }
        }
    }

    #[test]
    fn inverse_linear_rejects_unreachable_scale() {
        assert!(matches!(propagate_inverse_linear(1.0, 1.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(propagate_inverse_linear(1.0, -1.0, 2.0), Err(Error::Domain(_))));
        assert!(propagate_inverse_linear(1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn inverse_linear_small_rate_is_free_rotation() {
        let t = 1.3;
        let v = 1e-7;
        let s = propagate_inverse_linear(1.0, v, 1.0 + v * t).unwrap();
        let r = EvolutionMatrix::rotation(t);
        assert!(s.max_abs_diff(&r) < 1e-6);
    }

    #[test]
    fn inverse_linear_regimes_join_continuously() {
        for &lam in &[2.0, 10.0] {
            let conf = propagate_inverse_linear(1.0, 2.0, lam).unwrap();
            for v in [2.0 * (1.0 + 2e-6), 2.0 * (1.0 - 2e-6)] {
                let s = propagate_inverse_linear(1.0, v, lam).unwrap();
                assert!(s.max_abs_diff(&conf) < 1e-4);
            }
        }
    }

    #[test]
    fn energy_formula_matches_matrix_energy() {
        for &(w, v, lam) in &[(1.0, 1.0, 2.0), (1.0, 1.0, 10.0), (1.5, 0.2, 3.0), (1.0, -0.7, 0.1), (1.0, 2.0, 5.0)] {
            for n in [0, 3] {
                let st = StationaryState::new(n, w).unwrap();
                let s = propagate_inverse_linear(w, v, lam).unwrap();
                let e1 = energy_inverse_linear(w, v, lam, &st).unwrap();
                let e2 = final_energy(&s, &st, w / lam);
                assert!(close(e1, e2, 1e-9 * e2), "{e1} vs {e2}");
            }
        }
        let st = StationaryState::ground();
        assert!(close(energy_inverse_linear(1.0, 3.0, 1.0, &st).unwrap(), 0.5, 1e-15));
        // adiabatic invariant E/ω
        let e = energy_inverse_linear(1.0, 1e-3, 2.0, &st).unwrap();
        assert!(close(e, 0.25, 1e-3));
        assert!(energy_inverse_linear(1.0, 1.0, 2.0, &StationaryState::new(0, 2.0).unwrap()).is_err());
    }

    #[test]
    fn power_law_half_order_case_is_elementary() {
        // k = −2: ω = z^{−2}, q'' + z^{−4} q / v² = 0 has q = z (A cos(1/(vz)) + B sin(1/(vz))).
        for &(v, zf) in &[(1.0, 3.0), (7.0, 1.5), (-0.4, 0.3), (1e3, 10f64.sqrt())] {
            let s = propagate_power_law(-2.0, v, zf).unwrap();
            let th = |z: f64| 1.0 / (v * z);
            let col = |z: f64| {
                let (sn, cs) = th(z).sin_cos();
                // (q, p) for the cos and sin solutions
                let q1 = z * cs;
                let q2 = z * sn;
                let p1 = v * (cs + sn / (v * z));
                let p2 = v * (sn - cs / (v * z));
                [q1, q2, p1, p2]
            };
            let w = {
                let [q1, q2, p1, p2] = col(1.0);
                q1 * p2 - q2 * p1
            };
            let o = solution_matrix(col(zf), col(1.0), w);
            assert!(s.max_abs_diff(&o) < 1e-10 * (1.0 + o.entries().iter().fold(0.0f64, |m, x| m.max(x.abs()))));
        }
    }

    #[test]
    fn power_law_identity_det_and_domain() {
        assert_eq!(propagate_power_law(-3.0, 2.0, 1.0).unwrap(), EvolutionMatrix::IDENTITY);
        for &k in &[-4.0, -3.0, -0.5, 0.7, 1.0, 3.0] {
            for &v in &[0.1, 2.0, 100.0] {
                let s = propagate_power_law(k, v, 2.5).unwrap();
                assert!(s.det_error() < 1e-9, "k {k} v {v}: {}", s.det_error());
            }
        }
        assert!(propagate_power_law(0.0, 1.0, 2.0).is_err());
        assert!(propagate_power_law(-3.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn power_law_survives_tiny_scale() {
        // q tends to a constant as z → 0 for k > 0; the momentum must not cancel away
        for &(k, zf) in &[(1.9, 1e-24), (1.0, 1e-12), (0.5, 1e-6)] {
            let s = propagate_power_law_with(k, -0.3, 3.0, zf).unwrap();
            assert!(s.det_error() < 1e-9, "k {k}: {}", s.det_error());
        }
    }

    #[test]
    fn power_law_k_zero_limit_approaches_inverse_linear() {
        // ω = z^{(k−2)/2} → 1/z as k → 0.
        let il = propagate_inverse_linear(1.0, 1.0, 3.0).unwrap();
        let pl = propagate_power_law(1e-4, 1.0, 3.0);
        // order 1/k = 10⁴ is outside the Bessel range; use moderate k and check the trend
        assert!(pl.is_err() || pl.unwrap().max_abs_diff(&il) < 1e-2);
        let d1 = propagate_power_law(0.2, 1.0, 3.0).unwrap().max_abs_diff(&il);
        let d2 = propagate_power_law(0.1, 1.0, 3.0).unwrap().max_abs_diff(&il);
        assert!(d2 < d1);
    }

    #[test]
    fn sudden_power_law_reaches_asymptote() {
        for &k in &[-2.0, -3.0, -4.0] {
            let z = power_law_scale_to_z(k, 0.1).unwrap();
            assert!(z < 1.0);
            let s = propagate_power_law(k, -1e3, z).unwrap();
            let e = final_energy(&s, &StationaryState::ground(), 10.0);
            assert!(close(e, 25.25, 0.02 * 25.25), "k {k}: {e}");
        }
    }

    #[test]
    fn exponential_energy_at_start_and_asymptote() {
        assert_eq!(propagate_exponential(2.0, 1.0).unwrap(), EvolutionMatrix::IDENTITY);
        let s = propagate_exponential(50.0, 2.0).unwrap();
        assert!(s.det_error() < 1e-9);
        let e = final_energy(&s, &StationaryState::ground(), 2.0);
        assert!(close(e, exponential_asymptotic_energy(50.0, 2.0), 0.01 * e));
        assert!(close(e, exponential_asymptotic_energy_full(50.0, 2.0), 1e-6));
        assert!(propagate_exponential(-1.0, 2.0).is_err());
        assert!(propagate_exponential(-1.0, 0.5).unwrap().det_error() < 1e-9);
    }

    #[test]
    fn asymptotic_energy_values() {
        assert!(close(asymptotic_energy(1.0, 1.0), 0.5, 1e-15));
        assert!(close(asymptotic_energy(0.1, 1.0), 25.25, 1e-12));
        assert!(close(asymptotic_energy(10.0, 1.0), 0.2525, 1e-15));
        assert!(close(exponential_asymptotic_energy(50.0, 2.0), 1.249775, 1e-12));
    }

    #[test]
    fn closed_form_dispatch() {
        let p = FrequencyProfile::Constant { omega: 1.0 };
        let s = closed_form(&p, std::f64::consts::FRAC_PI_2).unwrap().unwrap();
        assert!(s.max_abs_diff(&EvolutionMatrix::new(0.0, 1.0, -1.0, 0.0)) < 1e-15);
        let p = FrequencyProfile::InverseLinear { omega0: 1.0, v: 1.0 };
        let s = closed_form(&p, 1.0).unwrap().unwrap();
        assert_eq!(s, propagate_inverse_linear(1.0, 1.0, 2.0).unwrap());
        let p = FrequencyProfile::LogSineSeries { duration: 1.0, coeffs: vec![0.1] };
        assert!(closed_form(&p, 1.0).is_none());
    }
}
