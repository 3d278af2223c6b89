//! First-order perturbation theory for drives `ΔV(t, x) = ½ δω(t) x^N` in
//! the `ω = 1` oscillator basis, with `ℏ = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::drive::Drive;
use crate::error::{invalid, Error, Result};
use crate::ode::{integrate_linear, IntegratorConfig};
use crate::symplectic::EvolutionMatrix;

/// Extra basis states kept above the highest level of interest.
pub const CUTOFF_MARGIN: usize = 32;

const QUAD_RTOL: f64 = 1e-10;
const QUAD_FLOOR: f64 = 1e-14;
const MIN_LEVEL: u32 = 6;
const MAX_LEVEL: u32 = 22;

/// Smallest cutoff accepted for queries starting from level `n` with power `power`.
pub fn required_cutoff(n: usize, power: usize) -> usize {
    (n + power + CUTOFF_MARGIN).max(n + 2 * power + 1)
}

/// `⟨m|x^N|n⟩` on a truncated basis. Rows and columns within `N` of the
/// cutoff are corrupted by the truncation and refused by [`get`](Self::get).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    power: usize,
    cutoff: usize,
    m: DMatrix<f64>,
}

/// Builds `x^N` as the `N`-th power of the tridiagonal position matrix.
pub fn x_power_matrix(power: usize, cutoff: usize) -> Result<OperatorMatrix> {
    if power == 0 {
        return Err(invalid("operator power must be positive"));
    }
    if cutoff <= power {
        return Err(Error::Cutoff { cutoff, required: power + 1 });
    }
    let mut x = DMatrix::zeros(cutoff, cutoff);
    for n in 0..cutoff - 1 {
        let e = ((n + 1) as f64 / 2.0).sqrt();
        x[(n + 1, n)] = e;
        x[(n, n + 1)] = e;
    }
    let mut m = x.clone();
    for _ in 1..power {
        m = &m * &x;
    }
    Ok(OperatorMatrix { power, cutoff, m })
}

impl OperatorMatrix {
    pub fn power(&self) -> usize {
        self.power
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Indices below this bound are exact.
    pub fn usable(&self) -> usize {
        self.cutoff - self.power
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, m: usize, n: usize) -> Result<f64> {
        let hi = m.max(n);
        if hi >= self.usable() {
            return Err(Error::Cutoff { cutoff: self.cutoff, required: hi + self.power + 1 });
        }
        Ok(self.m[(m, n)])
    }
}

/// `true` when `⟨m|x^N|n⟩` may be nonzero.
pub fn selection_allowed(m: usize, n: usize, power: usize) -> bool {
    let d = m.abs_diff(n);
    d <= power && (d + power).is_multiple_of(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub power: usize,
    pub n_max: usize,
    pub cutoff: usize,
    pub checked: usize,
    /// Offending `(N, n, m)` triples.
    pub violations: Vec<(usize, usize, usize)>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `|(x^N)_{n+m,n}| ≥ |(x^N)_{n−m,n}|` for all `n ≤ n_max` and
/// `0 < m ≤ min(n, N)` of matching parity. A cutoff below the policy
/// minimum is raised to it.
pub fn check_inequality(power: usize, n_max: usize, cutoff: usize) -> InequalityReport {
    let cutoff = cutoff.max(required_cutoff(n_max, power.max(1)));
    let mut report = InequalityReport { power, n_max, cutoff, checked: 0, violations: Vec::new() };
    let Ok(op) = x_power_matrix(power, cutoff) else {
        return report;
    };
    for n in 0..=n_max {
        for m in (1..=n.min(power)).filter(|m| (m + power).is_multiple_of(2)) {
            let up = op.m[(n + m, n)].abs();
            let down = op.m[(n - m, n)].abs();
            report.checked += 1;
            if down > up * (1.0 + 1e-12) {
                report.violations.push((power, n, m));
            }
        }
    }
    report
}

/// One allowed first-order channel `n → to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub to: usize,
    pub probability: f64,
}

/// `∫ f(t) e^{iωt} dt` over the drive's support for every `ω` in `omegas`.
///
/// Composite Simpson with a Richardson comparison against the half grid.
/// Tabulated drives must have `4m + 1` samples; analytic drives are refined
/// until the estimate meets `1e-10 |I| + 1e-14 ∫|f|` or `2^22` intervals.
pub fn fourier_integrals(drive: &Drive, omegas: &[f64]) -> Result<Vec<Complex64>> {
    match drive {
        Drive::Zero => Ok(vec![Complex64::new(0.0, 0.0); omegas.len()]),
        Drive::Tabulated { dt, values } => {
            let n = values.len();
            if n < 5 || (n - 1) % 4 != 0 {
                return Err(invalid(format!("tabulated drive needs 4m + 1 samples for the quadrature check, got {n}")));
            }
            let fine = simpson(values, 1, *dt, omegas);
            let coarse = simpson(values, 2, *dt, omegas);
            accept(values, 1, *dt, &fine, &coarse)
        }
        Drive::Analytic { duration, f } => {
            let mut intervals = 1usize << MIN_LEVEL;
            let mut values: Vec<f64> = (0..=intervals).map(|i| f(*duration * i as f64 / intervals as f64)).collect();
            let mut coarse = simpson(&values, 2, duration / intervals as f64, omegas);
            loop {
                let dt = duration / intervals as f64;
                let fine = simpson(&values, 1, dt, omegas);
                let res = accept(&values, 1, dt, &fine, &coarse);
                if res.is_ok() || intervals >= 1 << MAX_LEVEL {
                    return res;
                }
                intervals *= 2;
                let dt = duration / intervals as f64;
                let mut next = Vec::with_capacity(intervals + 1);
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        next.push(f((2 * i - 1) as f64 * dt));
                    }
                    next.push(*v);
                }
                values = next;
                coarse = fine;
            }
        }
    }
}

fn simpson(values: &[f64], stride: usize, dt: f64, omegas: &[f64]) -> Vec<Complex64> {
    let pts: Vec<(usize, f64)> = values.iter().copied().enumerate().step_by(stride).collect();
    let last = pts.len() - 1;
    let h = dt * stride as f64;
    omegas
        .iter()
        .map(|w| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &(i, v)) in pts.iter().enumerate() {
                let wt = if j == 0 || j == last {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let (s, c) = (w * i as f64 * dt).sin_cos();
                acc += Complex64::new(c, s) * (wt * v);
            }
            acc * (h / 3.0)
        })
        .collect()
}

fn accept(values: &[f64], stride: usize, dt: f64, fine: &[Complex64], coarse: &[Complex64]) -> Result<Vec<Complex64>> {
    let mass: f64 = values.iter().step_by(stride).map(|v| v.abs()).sum::<f64>() * dt * stride as f64;
    let mut worst: f64 = 0.0;
    let out = fine
        .iter()
        .zip(coarse)
        .map(|(f, c)| {
            let err = (f - c).norm() / 15.0;
            let value = f + (f - c) / 15.0;
            let scale = QUAD_RTOL * value.norm() + QUAD_FLOOR * mass;
            if scale > 0.0 {
                worst = worst.max(err / scale * QUAD_RTOL);
            } else if err > 0.0 {
                worst = f64::INFINITY;
            }
            value
        })
        .collect();
    if worst > QUAD_RTOL {
        Err(Error::Quadrature { estimate: worst })
    } else {
        Ok(out)
    }
}

fn check_cutoff(n: usize, power: usize, cutoff: usize) -> Result<()> {
    if power == 0 {
        return Err(invalid("operator power must be positive"));
    }
    let required = required_cutoff(n, power);
    if cutoff < required {
        return Err(Error::Cutoff { cutoff, required });
    }
    Ok(())
}

/// `|∫ (δω/2) e^{iω_fi t} dt (x^N)_fi|²` with `ω_fi = n_to − n_from`.
pub fn transition_probability(drive: &Drive, n_from: usize, n_to: usize, power: usize, cutoff: usize) -> Result<f64> {
    check_cutoff(n_from, power, cutoff)?;
    drive.validate_endpoints()?;
    if drive.is_zero() || !selection_allowed(n_to, n_from, power) {
        return Ok(0.0);
    }
    let op = x_power_matrix(power, cutoff)?;
    let w = n_to as f64 - n_from as f64;
    let amp = fourier_integrals(drive, &[w])?[0] * 0.5 * op.get(n_to, n_from)?;
    Ok(amp.norm_sqr())
}

/// All parity-allowed first-order channels out of level `n`, ordered by final level.
pub fn first_order_channels(drive: &Drive, n: usize, power: usize, cutoff: usize) -> Result<Vec<Channel>> {
    check_cutoff(n, power, cutoff)?;
    drive.validate_endpoints()?;
    let targets: Vec<usize> =
        (n.saturating_sub(power)..=n + power).filter(|&f| f != n && selection_allowed(f, n, power)).collect();
    if drive.is_zero() {
        return Ok(targets.into_iter().map(|to| Channel { to, probability: 0.0 }).collect());
    }
    let op = x_power_matrix(power, cutoff)?;
    let omegas: Vec<f64> = targets.iter().map(|&f| f as f64 - n as f64).collect();
    let amps = fourier_integrals(drive, &omegas)?;
    targets
        .iter()
        .zip(amps)
        .map(|(&to, a)| Ok(Channel { to, probability: (a * 0.5 * op.get(to, n)?).norm_sqr() }))
        .collect()
}

/// `Σ_f (E_f − E_n) P_fn` over the first-order channels.
pub fn first_order_energy_shift(drive: &Drive, n: usize, power: usize, cutoff: usize) -> Result<f64> {
    Ok(first_order_channels(drive, n, power, cutoff)?.iter().map(|c| (c.to as f64 - n as f64) * c.probability).sum())
}

/// Evolution matrix of `ω(t)² = 1 + δω(t)` over the drive's support.
pub fn quadratic_drive_matrix(drive: &Drive, cfg: &IntegratorConfig) -> Result<EvolutionMatrix> {
    cfg.validate()?;
    drive.validate_endpoints()?;
    let Some(t_final) = drive.duration() else {
        return Ok(EvolutionMatrix::IDENTITY);
    };
    let mut y = DMatrix::identity(2, 2);
    let mut budget = cfg.max_steps;
    let a = |t: f64, m: &mut DMatrix<f64>| {
        m.fill(0.0);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = -(1.0 + drive.eval(t));
    };
    integrate_linear(a, 0.0, t_final, &mut y, cfg, t_final, &mut budget)?;
    Ok(EvolutionMatrix::new(y[(0, 0)], y[(0, 1)], y[(1, 0)], y[(1, 1)]))
}

/// Exact energy change of level `n` under `ω(t)² = 1 + δω(t)`.
///
/// Uses `R − 1 = ½[(a − d)² + (b + c)²]` for a unit-determinant matrix, which
/// keeps small shifts free of cancellation.
pub fn exact_quadratic_shift(drive: &Drive, n: usize, cfg: &IntegratorConfig) -> Result<f64> {
    let [a, b, c, d] = quadratic_drive_matrix(drive, cfg)?.entries();
    Ok((n as f64 + 0.5) * 0.5 * ((a - d).powi(2) + (b + c).powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump(duration: f64) -> Drive {
        Drive::analytic(duration, move |t| (PI * t / duration).sin().powi(2))
    }

    #[test]
    fn ladder_elements() {
        let x = x_power_matrix(1, 16).unwrap();
        assert!((x.get(1, 0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let x2 = x_power_matrix(2, 64).unwrap();
        for n in 0..20 {
            assert!((x2.get(n, n).unwrap() - (n as f64 + 0.5)).abs() < 1e-12);
            let up = (((n + 1) * (n + 2)) as f64).sqrt() / 2.0;
            assert!((x2.get(n + 2, n).unwrap() - up).abs() < 1e-12);
        }
        assert!((x2.get(5, 3).unwrap() - 20f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((x2.get(1, 3).unwrap() - 6f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetry_and_selection_rule() {
        for power in 1..=8 {
            let op = x_power_matrix(power, 128).unwrap();
            let u = op.usable();
            for m in 0..u {
                for n in 0..u {
                    let e = op.get(m, n).unwrap();
                    assert!((e - op.get(n, m).unwrap()).abs() <= 1e-12 * e.abs().max(1.0));
                    if !selection_allowed(m, n, power) {
                        assert_eq!(e, 0.0, "N={power} ({m},{n})");
                    }
                }
            }
        }
    }

    #[test]
    fn truncated_rows_are_refused() {
        let op = x_power_matrix(3, 40).unwrap();
        assert!(op.get(36, 36).is_ok());
        assert!(matches!(op.get(37, 36), Err(Error::Cutoff { .. })));
        assert!(x_power_matrix(0, 10).is_err());
    }

    #[test]
    fn inequality_holds_in_range() {
        for power in 1..=8 {
            let r = check_inequality(power, 30, 0);
            assert!(r.passed(), "{:?}", r.violations);
            assert!(r.checked > 0);
        }
    }

    #[test]
    fn selection_and_null_drive() {
        let d = bump(3.0);
        assert_eq!(transition_probability(&d, 0, 1, 2, 64).unwrap(), 0.0);
        assert_eq!(transition_probability(&Drive::Zero, 3, 5, 2, 64).unwrap(), 0.0);
        assert_eq!(first_order_energy_shift(&Drive::Zero, 3, 2, 64).unwrap(), 0.0);
        assert!(matches!(transition_probability(&d, 3, 5, 2, 10), Err(Error::Cutoff { .. })));
        assert!(transition_probability(&Drive::analytic(1.0, |t| t), 0, 2, 2, 64).is_err());
    }

    #[test]
    fn fourier_integral_of_bump() {
        // ∫₀^T sin²(πt/T) e^{iωt} dt in closed form
        let t = 3.0;
        let w: f64 = 2.0;
        let a = PI / t;
        let g = |w: f64| {
            if w == 0.0 {
                Complex64::new(t, 0.0)
            } else {
                (Complex64::new(0.0, w * t).exp() - 1.0) / Complex64::new(0.0, w)
            }
        };
        let exact = (g(w) * 2.0 - g(w + 2.0 * a) - g(w - 2.0 * a)) / 4.0;
        let got = fourier_integrals(&bump(t), &[w]).unwrap()[0];
        assert!((got - exact).norm() < 1e-12 * exact.norm(), "{got} vs {exact}");
        let tab = Drive::sample(t, 4 * 1000 + 1, |s| (PI * s / t).sin().powi(2)).unwrap();
        let got = fourier_integrals(&tab, &[w]).unwrap()[0];
        assert!((got - exact).norm() < 1e-10 * exact.norm());
        let bad = Drive::sample(t, 100, |s| (PI * s / t).sin().powi(2)).unwrap();
        assert!(fourier_integrals(&bad, &[w]).is_err());
        let coarse = Drive::sample(t, 9, |s| (PI * s / t).sin().powi(2)).unwrap();
        assert!(matches!(fourier_integrals(&coarse, &[w]), Err(Error::Quadrature { .. })));
    }

    #[test]
    fn upward_channel_dominates() {
        let d = bump(2.5).scaled(0.3);
        for n in 2..15 {
            let up = transition_probability(&d, n, n + 2, 2, 128).unwrap();
            let down = transition_probability(&d, n, n - 2, 2, 128).unwrap();
            assert!(up >= down);
        }
        assert!(first_order_energy_shift(&d, 0, 2, 64).unwrap() > 0.0);
        for power in 1..=6 {
            assert!(first_order_energy_shift(&d, 5, power, 128).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn quadratic_shift_matches_exact() {
        let cfg = IntegratorConfig::with_tolerances(1e-13, 1e-15);
        let base = bump(3.0);
        let mut rel = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let d = base.scaled(eps);
            let pert = first_order_energy_shift(&d, 5, 2, 64).unwrap();
            let exact = exact_quadratic_shift(&d, 5, &cfg).unwrap();
            rel.push(((exact - pert) / pert).abs());
        }
        assert!(rel[0] < 0.05, "{rel:?}");
        assert!(rel[1] < 0.2 * rel[0] && rel[2] < 0.2 * rel[1], "{rel:?}");
    }
}
