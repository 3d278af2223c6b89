//! Adaptive Gauss–Legendre integration of the Heisenberg equations
//! `q̇ = p`, `ṗ = −ω(t)² q (+ κ(t))`.

use nalgebra::DMatrix;

use crate::drive::Drive;
use crate::error::{domain, invalid, Error, Result};
use crate::profile::FrequencyProfile;
use crate::symplectic::{final_energy, EvolutionMatrix, StationaryState, DET_TOL_PROPAGATOR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// First trial step; chosen from the local frequency when `None`.
    pub initial_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 10_000_000, initial_step: None }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) || !self.rtol.is_finite() || !self.atol.is_finite() {
            return Err(invalid("integrator tolerances must be positive and finite"));
        }
        if self.max_steps < 1 {
            return Err(invalid("max_steps must be at least 1"));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid("initial step must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Step counts of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl StepStats {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected
    }

    fn add(&mut self, other: StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
    }
}

const MIN_STEP_SHARE: f64 = 1e-5;

const SQRT15: f64 = 3.872_983_346_207_417;
const GAUSS_C: [f64; 3] = [0.5 - SQRT15 / 10.0, 0.5, 0.5 + SQRT15 / 10.0];
const GAUSS_A: [[f64; 3]; 3] = [
    [5.0 / 36.0, 2.0 / 9.0 - SQRT15 / 15.0, 5.0 / 36.0 - SQRT15 / 30.0],
    [5.0 / 36.0 + SQRT15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - SQRT15 / 24.0],
    [5.0 / 36.0 + SQRT15 / 30.0, 2.0 / 9.0 + SQRT15 / 15.0, 5.0 / 36.0],
];
const GAUSS_B: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];

struct Workspace {
    n: usize,
    stage: [DMatrix<f64>; 3],
    big: DMatrix<f64>,
    rhs: DMatrix<f64>,
}

impl Workspace {
    fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            stage: [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)],
            big: DMatrix::zeros(3 * n, 3 * n),
            rhs: DMatrix::zeros(3 * n, m),
        }
    }

    /// One three-stage Gauss–Legendre step of `Y' = A(t) Y`.
    fn step<F: FnMut(f64, &mut DMatrix<f64>)>(
        &mut self,
        a: &mut F,
        t: f64,
        h: f64,
        y: &DMatrix<f64>,
    ) -> Option<DMatrix<f64>> {
        let n = self.n;
        for (i, c) in GAUSS_C.iter().enumerate() {
            a(t + c * h, &mut self.stage[i]);
        }
        self.big.fill_with_identity();
        for i in 0..3 {
            for j in 0..3 {
                let mut block = self.big.view_mut((i * n, j * n), (n, n));
                block -= &self.stage[i] * (h * GAUSS_A[i][j]);
            }
            self.rhs.view_mut((i * n, 0), (n, y.ncols())).copy_from(&(&self.stage[i] * y));
        }
        let k = self.big.clone().lu().solve(&self.rhs)?;
        let mut out = y.clone();
        for (i, b) in GAUSS_B.iter().enumerate() {
            out += k.view((i * n, 0), (n, y.ncols())) * (h * b);
        }
        Some(out)
    }
}

/// Integrates the linear system `Y' = A(t) Y` from `t0` to `t1` in place.
///
/// `a` fills `A(t)`; `Y` holds one solution per column. Steps are order-six
/// Gauss–Legendre collocation, which preserves every quadratic invariant of
/// the flow, so the symplectic form of a Hamiltonian system is kept to
/// rounding. The step size is chosen by step doubling, with the local error
/// held below `|h| / horizon` of the tolerance (but never below `1e-5` of it) so that the accumulated error
/// over a span of length `horizon` stays near the tolerance. `budget` is
/// decremented per attempted step and may be shared across calls.
#[allow(clippy::too_many_arguments)]
pub fn integrate_linear<F>(
    mut a: F,
    t0: f64,
    t1: f64,
    y: &mut DMatrix<f64>,
    cfg: &IntegratorConfig,
    horizon: f64,
    budget: &mut usize,
) -> Result<StepStats>
where
    F: FnMut(f64, &mut DMatrix<f64>),
{
    let n = y.nrows();
    let mut stats = StepStats::default();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(stats);
    }
    let horizon = horizon.abs().max(span.abs());
    let dir = span.signum();
    let mut ws = Workspace::new(n, y.ncols());
    let mut h = match cfg.initial_step {
        Some(h) => h,
        None => {
            let mut a0 = DMatrix::zeros(n, n);
            a(t0, &mut a0);
            0.5 / a0.abs().row_sum().max().max(1e-300)
        }
    }
    .min(span.abs())
        * dir;
    let mut t = t0;
    while (t1 - t) * dir > 0.0 {
        let remaining = t1 - t;
        let last = h * dir >= remaining.abs() * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if *budget == 0 {
            return Err(Error::StepLimit { max_steps: cfg.max_steps, t });
        }
        *budget -= 1;

        let full = ws.step(&mut a, t, h, y);
        let half = ws.step(&mut a, t, 0.5 * h, y).and_then(|mid| ws.step(&mut a, t + 0.5 * h, 0.5 * h, &mid));
        let ratio = match (full, &half) {
            (Some(full), Some(half)) => {
                let mut sum = 0.0;
                for ((f, g), y0) in full.iter().zip(half.iter()).zip(y.iter()) {
                    let sc = cfg.atol + cfg.rtol * y0.abs().max(g.abs());
                    sum += ((g - f) / (63.0 * sc)).powi(2);
                }
                // the share of the tolerance granted to this step, floored above rounding noise
                let share = (h.abs() / horizon).max(MIN_STEP_SHARE);
                (sum / full.len() as f64).sqrt() / share
            }
            _ => f64::NAN,
        };

        if ratio <= 1.0 {
            stats.accepted += 1;
            *y = half.expect("accepted step has a solution");
            if y.iter().any(|v| !v.is_finite()) {
                return Err(domain(format!("solution became non-finite at t = {t}")));
            }
            t = if last { t1 } else { t + h };
            let fac = if ratio == 0.0 { 4.0 } else { (0.9 * ratio.powf(-1.0 / 6.0)).clamp(0.2, 4.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= if ratio.is_finite() { (0.9 * ratio.powf(-1.0 / 6.0)).clamp(0.1, 0.9) } else { 0.25 };
        }
        if h.abs() <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
    }
    Ok(stats)
}

/// A smooth stretch `[start, end]` of a profile in absolute time.
struct Piece<'a> {
    leaf: &'a FrequencyProfile,
    /// Absolute time at which the leaf's local clock reads zero.
    origin: f64,
    start: f64,
    end: f64,
}

fn pieces<'a>(profile: &'a FrequencyProfile, origin: f64, t0: f64, t1: f64, out: &mut Vec<Piece<'a>>) {
    match profile {
        FrequencyProfile::Piecewise(segments) => {
            let mut start = origin;
            for (seg, len) in segments {
                let end = start + len;
                if end > t0 && start < t1 {
                    pieces(seg, start, t0.max(start), t1.min(end), out);
                }
                start = end;
            }
        }
        FrequencyProfile::Tabulated(table) => {
            for w in table.knots().windows(2) {
                let (s, e) = (origin + w[0], origin + w[1]);
                if e > t0 && s < t1 {
                    out.push(Piece { leaf: profile, origin, start: t0.max(s), end: t1.min(e) });
                }
            }
        }
        _ => out.push(Piece { leaf: profile, origin, start: t0, end: t1 }),
    }
}

/// Integrates `Y' = A(t) Y` piece by piece, with `fill(ω², t, A)` building the matrix.
fn run_profile<F>(
    profile: &FrequencyProfile,
    t0: f64,
    t1: f64,
    y: &mut DMatrix<f64>,
    cfg: &IntegratorConfig,
    mut fill: F,
) -> Result<StepStats>
where
    F: FnMut(f64, f64, &mut DMatrix<f64>),
{
    cfg.validate()?;
    if !(t0 >= 0.0 && t1 >= t0) {
        return Err(invalid(format!("need 0 ≤ t0 ≤ t1, got [{t0}, {t1}]")));
    }
    profile.validate(t1)?;
    let mut list = Vec::new();
    pieces(profile, 0.0, t0, t1, &mut list);
    let mut budget = cfg.max_steps;
    let mut stats = StepStats::default();
    for piece in list.iter().filter(|p| p.end > p.start) {
        let (leaf, origin) = (piece.leaf, piece.origin);
        let a = |t: f64, m: &mut DMatrix<f64>| {
            let w = leaf.omega(t - origin).map_or(f64::NAN, |w| w * w);
            fill(w, t, m);
        };
        stats.add(integrate_linear(a, piece.start, piece.end, y, cfg, t1 - t0, &mut budget)?);
    }
    Ok(stats)
}

/// Fundamental system `(q, p)` per column, plus the unit column carrying the force when present.
fn heisenberg_matrix(w2: f64, kappa: Option<f64>, m: &mut DMatrix<f64>) {
    m.fill(0.0);
    m[(0, 1)] = 1.0;
    m[(1, 0)] = -w2;
    if let Some(k) = kappa {
        m[(1, 2)] = k;
    }
}

fn to_matrix(y: &DMatrix<f64>) -> Result<EvolutionMatrix> {
    let s = EvolutionMatrix::new(y[(0, 0)], y[(0, 1)], y[(1, 0)], y[(1, 1)]);
    if s.det_error() < DET_TOL_PROPAGATOR {
        Ok(s)
    } else {
        Err(Error::NotSymplectic { det: s.det() })
    }
}

/// Evolution matrix of `profile` over `[0, t_final]`.
pub fn propagate_ode(profile: &FrequencyProfile, t_final: f64, cfg: &IntegratorConfig) -> Result<EvolutionMatrix> {
    propagate_ode_interval(profile, 0.0, t_final, cfg)
}

/// Evolution matrix of `profile` over `[t0, t1]`.
pub fn propagate_ode_interval(
    profile: &FrequencyProfile,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<EvolutionMatrix> {
    propagate_ode_with_stats(profile, t0, t1, cfg).map(|(s, _)| s)
}

/// As [`propagate_ode_interval`], also returning step counts.
pub fn propagate_ode_with_stats(
    profile: &FrequencyProfile,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<(EvolutionMatrix, StepStats)> {
    let mut y = DMatrix::identity(2, 2);
    let stats = run_profile(profile, t0, t1, &mut y, cfg, |w2, _, m| heisenberg_matrix(w2, None, m))?;
    Ok((to_matrix(&y)?, stats))
}

/// Homogeneous propagator plus the particular solution with `Q(0) = Q̇(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcedOutcome {
    pub s: EvolutionMatrix,
    pub qc: f64,
    pub qc_dot: f64,
}

impl ForcedOutcome {
    /// Energy carried by the classical displacement, `½(Q̇² + ω_f² Q²)`.
    pub fn classical_energy(&self, omega_final: f64) -> f64 {
        0.5 * (self.qc_dot * self.qc_dot + omega_final * omega_final * self.qc * self.qc)
    }

    /// Final mean energy for a stationary initial state.
    pub fn energy(&self, state: &StationaryState, omega_final: f64) -> f64 {
        final_energy(&self.s, state, omega_final) + self.classical_energy(omega_final)
    }
}

/// Forced oscillator `q̈ = −ω² q + κ(t)` over `[0, t_final]`.
pub fn propagate_forced(
    profile: &FrequencyProfile,
    kappa: &Drive,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<ForcedOutcome> {
    kappa.validate_endpoints()?;
    if kappa.is_zero() {
        let s = propagate_ode(profile, t_final, cfg)?;
        return Ok(ForcedOutcome { s, qc: 0.0, qc_dot: 0.0 });
    }
    let mut y = DMatrix::identity(3, 3);
    run_profile(profile, 0.0, t_final, &mut y, cfg, |w2, t, m| heisenberg_matrix(w2, Some(kappa.eval(t)), m))?;
    Ok(ForcedOutcome { s: to_matrix(&y)?, qc: y[(0, 2)], qc_dot: y[(1, 2)] })
}

/// Mean energy of a stationary state evolved directly through the first and
/// second moment equations of the forced oscillator.
pub fn forced_energy_from_moments(
    profile: &FrequencyProfile,
    kappa: &Drive,
    state: &StationaryState,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    kappa.validate_endpoints()?;
    let m = state.moments();
    // (⟨q⟩, ⟨p⟩, Cqq, Cpp, Cqp, 1)
    let mut y = DMatrix::from_column_slice(6, 1, &[0.0, 0.0, m.qq, m.pp, m.d, 1.0]);
    run_profile(profile, 0.0, t_final, &mut y, cfg, |w2, t, a| {
        a.fill(0.0);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = -w2;
        a[(1, 5)] = kappa.eval(t);
        a[(2, 4)] = 2.0;
        a[(3, 4)] = -2.0 * w2;
        a[(4, 3)] = 1.0;
        a[(4, 2)] = -w2;
    })?;
    let y: Vec<f64> = y.iter().copied().collect();
    let wf = profile.omega(t_final).ok_or_else(|| domain("profile undefined at final time"))?;
    Ok(0.5 * (y[3] + y[1] * y[1] + wf * wf * (y[2] + y[0] * y[0])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{propagate_inverse_linear, propagate_power_law};
    use crate::symplectic::compose;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn constant() -> FrequencyProfile {
        FrequencyProfile::Constant { omega: 1.0 }
    }

    #[test]
    fn scalar_linear_growth() {
        let cfg = IntegratorConfig::with_tolerances(1e-12, 1e-14);
        let mut y = DMatrix::from_element(1, 1, 1.0);
        let mut budget = cfg.max_steps;
        integrate_linear(|t, a| a[(0, 0)] = t, 0.0, 2.0, &mut y, &cfg, 2.0, &mut budget).unwrap();
        assert!((y[(0, 0)] - 2f64.exp()).abs() < 1e-11 * 2f64.exp());
    }

    #[test]
    fn collocation_is_exact_for_quintic_forcing() {
        // q' = (p+1) t^p · 1 in a single step
        let loose = IntegratorConfig { rtol: 1e6, atol: 1e6, initial_step: Some(2.0), ..IntegratorConfig::default() };
        let run = |p: i32| {
            let mut y = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
            let mut b = usize::MAX;
            let f = |t: f64, a: &mut DMatrix<f64>| {
                a.fill(0.0);
                a[(0, 1)] = (p + 1) as f64 * t.powi(p);
            };
            let st = integrate_linear(f, 0.0, 2.0, &mut y, &loose, 2.0, &mut b).unwrap();
            assert_eq!(st.accepted, 1);
            y[(0, 0)] - 2f64.powi(p + 1)
        };
        assert!(run(5).abs() < 1e-12);
        assert!(run(6).abs() > 1e-4);
    }

    #[test]
    fn long_runs_keep_det() {
        let cfg = IntegratorConfig::default();
        let (s, stats) = propagate_ode_with_stats(&constant(), 0.0, 2e3, &cfg).unwrap();
        assert!(stats.total() > 1000);
        assert!(s.det_error() < 1e-12, "{}", s.det_error());
        assert!(s.max_abs_diff(&EvolutionMatrix::rotation(2e3)) < 1e-8);
    }

    #[test]
    fn free_oscillation() {
        let cfg = IntegratorConfig::default();
        let s = propagate_ode(&constant(), 2.0 * PI, &cfg).unwrap();
        assert!(s.max_abs_diff(&EvolutionMatrix::IDENTITY) < 1e-9);
        let s = propagate_ode(&constant(), FRAC_PI_2, &cfg).unwrap();
        assert!(s.max_abs_diff(&EvolutionMatrix::new(0.0, 1.0, -1.0, 0.0)) < 1e-9);
    }

    #[test]
    fn matches_inverse_linear_closed_form() {
        let p = FrequencyProfile::InverseLinear { omega0: 1.0, v: 1.0 };
        let s = propagate_ode(&p, 1.0, &IntegratorConfig::default()).unwrap();
        let c = propagate_inverse_linear(1.0, 1.0, 2.0).unwrap();
        assert!(s.max_abs_diff(&c) < 1e-8);
    }

    #[test]
    fn matches_power_law_closed_form() {
        let p = FrequencyProfile::PowerLaw { k: -3.0, v: 2.0, omega0: 1.0 };
        let s = propagate_ode(&p, 1.5, &IntegratorConfig::default()).unwrap();
        let c = propagate_power_law(-3.0, 2.0, 4.0).unwrap();
        assert!(s.max_abs_diff(&c) < 1e-7);
    }

    #[test]
    fn time_slicing_composes() {
        let p = FrequencyProfile::LogSineSeries { duration: 4.0, coeffs: vec![0.5, -0.3, 0.2] };
        let cfg = IntegratorConfig::default();
        let whole = propagate_ode(&p, 4.0, &cfg).unwrap();
        let first = propagate_ode_interval(&p, 0.0, 1.7, &cfg).unwrap();
        let second = propagate_ode_interval(&p, 1.7, 4.0, &cfg).unwrap();
        assert!(whole.max_abs_diff(&compose(&second, &first)) < 1e-8);
    }

    #[test]
    fn piecewise_and_tabulated_profiles() {
        let cfg = IntegratorConfig::default();
        let p = FrequencyProfile::Piecewise(vec![(constant(), PI), (FrequencyProfile::Constant { omega: 2.0 }, PI)]);
        let s = propagate_ode(&p, 2.0 * PI, &cfg).unwrap();
        // rot(π) then a full turn at ω = 2
        assert!(s.max_abs_diff(&EvolutionMatrix::new(-1.0, 0.0, 0.0, -1.0)) < 1e-9);
        let t = crate::profile::MonotoneCubic::new(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        let s = propagate_ode(&FrequencyProfile::Tabulated(t), 2.0, &cfg).unwrap();
        assert!(s.max_abs_diff(&EvolutionMatrix::rotation(2.0)) < 1e-9);
    }

    #[test]
    fn self_convergence() {
        let p = FrequencyProfile::LogSineSeries { duration: 6.0, coeffs: vec![0.8, 0.4] };
        let fine = IntegratorConfig::with_tolerances(5e-11, 5e-13);
        let a = propagate_ode(&p, 6.0, &IntegratorConfig::default()).unwrap();
        let b = propagate_ode(&p, 6.0, &fine).unwrap();
        let scale = b.entries().iter().fold(1.0f64, |m, x| m.max(x.abs()));
        assert!(a.max_abs_diff(&b) < 10.0 * 1e-10 * scale);
    }

    #[test]
    fn domain_and_budget_errors() {
        let p = FrequencyProfile::InverseLinear { omega0: 1.0, v: -1.0 };
        assert!(matches!(propagate_ode(&p, 1.5, &IntegratorConfig::default()), Err(Error::Domain(_))));
        let cfg = IntegratorConfig { max_steps: 5, ..IntegratorConfig::default() };
        assert!(matches!(propagate_ode(&constant(), 100.0, &cfg), Err(Error::StepLimit { .. })));
        let bad = IntegratorConfig { rtol: 0.0, ..IntegratorConfig::default() };
        assert!(propagate_ode(&constant(), 1.0, &bad).is_err());
    }

    #[test]
    fn forced_resonant_envelope_has_known_end_state() {
        // q̈ + q = sin²(t/2) over one period: Q(2π) = 0, Q̇(2π) = −π/2.
        let k = Drive::analytic(2.0 * PI, |t| (0.5 * t).sin().powi(2));
        let out = propagate_forced(&constant(), &k, 2.0 * PI, &IntegratorConfig::default()).unwrap();
        assert!(out.qc.abs() < 1e-9);
        assert!((out.qc_dot + FRAC_PI_2).abs() < 1e-9);
        assert!(out.s.max_abs_diff(&EvolutionMatrix::IDENTITY) < 1e-9);
    }

    #[test]
    fn forced_zero_drive_and_endpoint_check() {
        let cfg = IntegratorConfig::default();
        let out = propagate_forced(&constant(), &Drive::Zero, 1.0, &cfg).unwrap();
        assert_eq!((out.qc, out.qc_dot), (0.0, 0.0));
        assert!(propagate_forced(&constant(), &Drive::analytic(1.0, |t| t), 1.0, &cfg).is_err());
    }

    #[test]
    fn forced_energy_decomposes() {
        let p = FrequencyProfile::LogSineSeries { duration: 5.0, coeffs: vec![0.6, 0.2, -0.1] };
        let k = Drive::analytic(5.0, |t| 0.7 * (PI * t / 5.0).sin().powi(3));
        let cfg = IntegratorConfig::default();
        let out = propagate_forced(&p, &k, 5.0, &cfg).unwrap();
        for n in [0, 4] {
            let st = StationaryState::level(n);
            let direct = forced_energy_from_moments(&p, &k, &st, 5.0, &cfg).unwrap();
            assert!((out.energy(&st, 1.0) - direct).abs() < 1e-8);
            assert!(direct >= final_energy(&out.s, &st, 1.0));
            assert!(direct >= st.energy());
        }
    }
}
