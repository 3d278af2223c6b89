//! Closed frequency cycles, their gain factors, and parameter scans.
//!
//! A cycle takes the frequency from `ω₀` to `ω₀/λ` and back. Everything is
//! computed in units where `ω₀ = 1`; a physical `ω₀` only rescales the rate
//! `v → v/ω₀`. The speed `v` is a magnitude; its sign follows from the
//! direction in which the outbound leg must move.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::closed_form::{
    power_law_scale_to_z, propagate_exponential_with, propagate_inverse_linear, propagate_power_law_with,
};
use crate::error::{domain, invalid, Error, Result};
use crate::ode::{propagate_ode, IntegratorConfig};
use crate::profile::FrequencyProfile;
use crate::symplectic::{compose, EvolutionMatrix, DET_TOL_COMPOSED};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    InverseLinear,
    PowerLaw {
        k: f64,
    },
    Exponential,
    /// A profile with `ω(T) = ω(0) = 1` over its stated duration; integrated numerically.
    Custom {
        profile: FrequencyProfile,
        duration: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InverseLinear => "inverse-linear",
            Self::PowerLaw { .. } => "power-law",
            Self::Exponential => "exponential",
            Self::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleSpec {
    pub family: Family,
    pub omega0: f64,
    /// Outbound speed magnitude, in the same units as `omega0`.
    pub v: f64,
    /// Turning-point scale: the frequency at the turn is `ω₀/λ`.
    pub lambda: f64,
    pub n_cycles: u32,
}

impl CycleSpec {
    pub fn new(family: Family, omega0: f64, v: f64, lambda: f64, n_cycles: u32) -> Self {
        Self { family, omega0, v, lambda, n_cycles }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cycles < 1 {
            return Err(invalid("a cycle spec needs at least one cycle"));
        }
        if let Family::Custom { profile, duration } = &self.family {
            profile.validate(*duration)?;
            let (w0, w1) = (profile.omega(0.0), profile.omega(*duration));
            return match (w0, w1) {
                (Some(a), Some(b)) if (a - b).abs() <= 1e-12 * a => Ok(()),
                _ => Err(domain(format!("custom profile is not closed: ω(0) = {w0:?}, ω(T) = {w1:?}"))),
            };
        }
        for (name, x) in [("omega0", self.omega0), ("v", self.v), ("lambda", self.lambda)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {x}")));
            }
        }
        if let Family::PowerLaw { k } = self.family {
            if k == 0.0 || k == 2.0 || !k.is_finite() {
                return Err(invalid(format!("power-law exponent must be finite and not 0 or 2, got {k}")));
            }
        }
        Ok(())
    }

    /// Signed outbound rate in units of `ω₀` and the outbound end point of the family's scale variable.
    fn outbound(&self) -> Result<(f64, f64)> {
        let rate = self.v / self.omega0;
        let end = match self.family {
            Family::InverseLinear => self.lambda,
            Family::PowerLaw { k } => power_law_scale_to_z(k, self.lambda)?,
            Family::Exponential => 1.0 / self.lambda,
            Family::Custom { .. } => return Err(invalid("custom cycles have no outbound leg")),
        };
        Ok((if end >= 1.0 { rate } else { -rate }, end))
    }

    /// Outbound and return legs of one cycle, each as `(profile, duration)`, in units of `ω₀`.
    pub fn legs(&self) -> Result<[(FrequencyProfile, f64); 2]> {
        self.validate()?;
        let (v, end) = self.outbound()?;
        let lam = self.lambda;
        Ok(match self.family {
            Family::InverseLinear => [
                (FrequencyProfile::InverseLinear { omega0: 1.0, v }, (end - 1.0) / v),
                (FrequencyProfile::InverseLinear { omega0: 1.0 / lam, v: -v }, (1.0 / lam - 1.0) / -v),
            ],
            Family::PowerLaw { k } => {
                let t = (end - 1.0) / v;
                [
                    (FrequencyProfile::PowerLaw { k, v, omega0: 1.0 }, t),
                    (FrequencyProfile::PowerLaw { k, v: -v / end, omega0: 1.0 / lam }, t),
                ]
            }
            Family::Exponential => {
                let t = end.ln() / v;
                [
                    (FrequencyProfile::Exponential { v, omega0: 1.0 }, t),
                    (FrequencyProfile::Exponential { v: -v, omega0: 1.0 / lam }, t),
                ]
            }
            Family::Custom { .. } => return Err(invalid("custom cycles have no legs")),
        })
    }

    /// One full cycle as a single piecewise profile with its duration.
    pub fn cycle_profile(&self) -> Result<(FrequencyProfile, f64)> {
        if let Family::Custom { profile, duration } = &self.family {
            self.validate()?;
            return Ok((profile.clone(), *duration));
        }
        let legs = self.legs()?;
        let total = legs[0].1 + legs[1].1;
        Ok((FrequencyProfile::Piecewise(legs.to_vec()), total))
    }
}

/// Exact single-cycle matrix for the closed-form families.
fn one_cycle(spec: &CycleSpec, cfg: &IntegratorConfig) -> Result<EvolutionMatrix> {
    if spec.lambda == 1.0 && !matches!(spec.family, Family::Custom { .. }) {
        return Ok(EvolutionMatrix::IDENTITY);
    }
    let (v, end) = match spec.family {
        Family::Custom { ref profile, duration } => return propagate_ode(profile, duration, cfg),
        _ => spec.outbound()?,
    };
    let lam = spec.lambda;
    let (out, back) = match spec.family {
        Family::InverseLinear => {
            (propagate_inverse_linear(1.0, v, lam)?, propagate_inverse_linear(1.0 / lam, -v, 1.0 / lam)?)
        }
        Family::PowerLaw { k } => {
            (propagate_power_law_with(k, v, 1.0, end)?, propagate_power_law_with(k, -v / end, 1.0 / lam, 1.0 / end)?)
        }
        Family::Exponential => {
            (propagate_exponential_with(v, 1.0, end)?, propagate_exponential_with(-v, 1.0 / lam, 1.0 / end)?)
        }
        Family::Custom { .. } => unreachable!(),
    };
    Ok(compose(&back, &out))
}

fn check_composed(s: EvolutionMatrix) -> Result<EvolutionMatrix> {
    if s.det_error() < DET_TOL_COMPOSED {
        Ok(s)
    } else {
        Err(Error::NotSymplectic { det: s.det() })
    }
}

/// One outbound leg from `omega0` to `omega0 / lambda` at speed `speed`,
/// with its duration.
pub fn leg(family: &Family, omega0: f64, speed: f64, lambda: f64) -> Result<(FrequencyProfile, f64)> {
    if !(speed > 0.0 && lambda > 0.0 && omega0 > 0.0) || lambda == 1.0 {
        return Err(invalid("a leg needs positive speed and frequency, and λ ≠ 1"));
    }
    Ok(match family {
        Family::InverseLinear => {
            let v = speed * (lambda - 1.0).signum();
            (FrequencyProfile::InverseLinear { omega0, v }, (lambda - 1.0) / v)
        }
        Family::PowerLaw { k } => {
            let z = lambda.powf(-2.0 / (k - 2.0));
            let v = speed * (z - 1.0).signum();
            (FrequencyProfile::PowerLaw { k: *k, v, omega0 }, (z - 1.0) / v)
        }
        Family::Exponential => {
            let v = -speed * lambda.ln().signum();
            (FrequencyProfile::Exponential { v, omega0 }, -lambda.ln() / v)
        }
        Family::Custom { .. } => return Err(invalid("custom profiles have no closed-form leg")),
    })
}

/// Evolution matrix of `n_cycles` repetitions of the cycle.
///
/// Closed-form families use their exact propagators; custom profiles use the
/// numeric propagator with default settings.
pub fn build_cycle(spec: &CycleSpec) -> Result<EvolutionMatrix> {
    build_cycle_with(spec, &IntegratorConfig::default())
}

pub fn build_cycle_with(spec: &CycleSpec, cfg: &IntegratorConfig) -> Result<EvolutionMatrix> {
    spec.validate()?;
    check_composed(one_cycle(spec, cfg)?.pow(spec.n_cycles))
}

/// The same cycle integrated numerically end to end.
pub fn build_cycle_ode(spec: &CycleSpec, cfg: &IntegratorConfig) -> Result<EvolutionMatrix> {
    let (profile, duration) = spec.cycle_profile()?;
    check_composed(propagate_ode(&profile, duration, cfg)?.pow(spec.n_cycles))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// `count` points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridAxis {
    pub fn single(x: f64) -> Self {
        Self { start: x, stop: x, count: 1, spacing: Spacing::Linear }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(invalid("grid axis must have at least one point"));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(invalid("grid bounds must be finite"));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(invalid("log grid bounds must be positive"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let m = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let s = i as f64 / m;
                match self.spacing {
                    Spacing::Linear => self.start + s * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + s * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

impl FromStr for GridAxis {
    type Err = Error;

    /// `start:stop:count[:lin|log]`, or a single number.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| invalid(format!("bad number {t:?} in grid {s:?}")));
        let axis = match parts.as_slice() {
            [x] => Self::single(num(x)?),
            [a, b, n] | [a, b, n, _] => {
                let count = n.trim().parse().map_err(|_| invalid(format!("bad count {n:?} in grid {s:?}")))?;
                let spacing = match parts.get(3).map(|t| t.trim()) {
                    None | Some("lin") | Some("linear") => Spacing::Linear,
                    Some("log") => Spacing::Log,
                    Some(other) => return Err(invalid(format!("unknown spacing {other:?}"))),
                };
                Self { start: num(a)?, stop: num(b)?, count, spacing }
            }
            _ => return Err(invalid(format!("grid {s:?} is not start:stop:count[:lin|log]"))),
        };
        axis.validate()?;
        Ok(axis)
    }
}

impl fmt::Display for GridAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sp = match self.spacing {
            Spacing::Linear => "lin",
            Spacing::Log => "log",
        };
        write!(f, "{}:{}:{}:{}", self.start, self.stop, self.count, sp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub v: f64,
    pub lambda: f64,
    pub omega0: f64,
    pub n_cycles: u32,
    /// Gain factor `½ Tr[S Sᵀ]`; NaN when the point failed.
    pub r: f64,
    pub det_err: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub family: Family,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn max_gain(&self) -> Option<&ScanRow> {
        self.rows.iter().filter(|r| r.error.is_none()).max_by(|a, b| a.r.total_cmp(&b.r))
    }
}

fn evaluate(spec: &CycleSpec) -> ScanRow {
    let mut row = ScanRow {
        v: spec.v,
        lambda: spec.lambda,
        omega0: spec.omega0,
        n_cycles: spec.n_cycles,
        r: f64::NAN,
        det_err: f64::NAN,
        error: None,
    };
    match build_cycle(spec) {
        Ok(s) => {
            row.r = s.half_trace_sst();
            row.det_err = s.det_error();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs `f` on a pool of `workers` threads, or on the global pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(invalid("worker count must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Gain factor over the grid `omega0 × lambda × v`, `v` varying fastest.
///
/// Failing points are kept as rows with an error message. Row order is the
/// grid order whatever the number of workers.
pub fn scan_gain(
    family: &Family,
    v: &GridAxis,
    lambda: &GridAxis,
    omega0: &GridAxis,
    n_cycles: u32,
    workers: Option<usize>,
) -> Result<ScanResult> {
    for axis in [v, lambda, omega0] {
        axis.validate()?;
    }
    if matches!(family, Family::Custom { .. }) {
        return Err(invalid("scans need a closed-form family"));
    }
    if n_cycles < 1 {
        return Err(invalid("a scan needs at least one cycle"));
    }
    let mut specs = Vec::with_capacity(v.count * lambda.count * omega0.count);
    for &w in &omega0.values() {
        for &l in &lambda.values() {
            for &x in &v.values() {
                specs.push(CycleSpec::new(family.clone(), w, x, l, n_cycles));
            }
        }
    }
    let rows = with_workers(workers, || specs.par_iter().map(evaluate).collect::<Vec<_>>())?;
    Ok(ScanResult { family: family.clone(), rows })
}

/// Minimises a unimodal `f` on `[a, b]` until the bracket is narrower than `tol`.
pub fn golden_section_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnityPoint {
    pub v: f64,
    pub lambda: f64,
    pub omega0: f64,
    pub r: f64,
    /// Gain at the grid point that bracketed the minimum.
    pub coarse_r: f64,
}

/// Local minima of `R(v)` with `R − 1 < tol`, refined by golden-section search.
///
/// Rows must be grouped by `(omega0, lambda)` and sorted by `v` within each group,
/// as [`scan_gain`] produces them.
pub fn find_unity_points(sweep: &ScanResult, tol: f64) -> Vec<UnityPoint> {
    let mut out = Vec::new();
    let rows = &sweep.rows;
    let mut start = 0;
    while start < rows.len() {
        let key = (rows[start].omega0, rows[start].lambda);
        let end = start + rows[start..].iter().take_while(|r| (r.omega0, r.lambda) == key).count();
        let group = &rows[start..end];
        for i in 1..group.len().saturating_sub(1) {
            let (l, m, r) = (&group[i - 1], &group[i], &group[i + 1]);
            if [l, m, r].iter().any(|x| x.error.is_some()) || !(m.r <= l.r && m.r <= r.r) {
                continue;
            }
            let gain = |v: f64| {
                let spec = CycleSpec::new(sweep.family.clone(), m.omega0, v, m.lambda, m.n_cycles);
                build_cycle(&spec).map_or(f64::INFINITY, |s| s.half_trace_sst())
            };
            let (v, rv) = golden_section_min(gain, l.v, r.v, 1e-6 * m.v);
            let (v, rv) = if rv <= m.r { (v, rv) } else { (m.v, m.r) };
            if rv - 1.0 < tol {
                out.push(UnityPoint { v, lambda: m.lambda, omega0: m.omega0, r: rv, coarse_r: m.r });
            }
        }
        start = end;
    }
    out
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Random smooth closed profile in units of `ω(0) = 1`, with its duration.
///
/// Either an exponentiated sine series pinned at both ends, or a random
/// closed-form leg, a plateau, and the leg run backwards.
pub fn random_closed_profile<R: Rng + ?Sized>(rng: &mut R) -> (FrequencyProfile, f64) {
    if rng.gen_bool(0.5) {
        let duration = log_uniform(rng, 0.5, 20.0);
        let terms = rng.gen_range(1..=6);
        let coeffs = (0..terms).map(|_| rng.gen_range(-1.0..1.0)).collect();
        return (FrequencyProfile::LogSineSeries { duration, coeffs }, duration);
    }
    loop {
        let lam = log_uniform(rng, 0.2, 5.0);
        let spec = CycleSpec::new(random_family(rng), 1.0, log_uniform(rng, 0.05, 5.0), lam, 1);
        let Ok([(leg, t), _]) = spec.legs() else { continue };
        if t > 200.0 {
            continue;
        }
        let Ok(back) = leg.time_reversed(t) else { continue };
        let plateau = rng.gen_range(0.0..3.0);
        let segments = vec![(leg, t), (FrequencyProfile::Constant { omega: 1.0 / lam }, plateau), (back, t)];
        return (FrequencyProfile::Piecewise(segments), 2.0 * t + plateau);
    }
}

fn random_family<R: Rng + ?Sized>(rng: &mut R) -> Family {
    match rng.gen_range(0..3) {
        0 => Family::InverseLinear,
        1 => {
            let k: f64 = rng.gen_range(0.5..4.0);
            Family::PowerLaw { k: if rng.gen_bool(0.5) { -k } else { k.min(1.5) } }
        }
        _ => Family::Exponential,
    }
}

/// Random cycle: a closed-form family with `ω₀ ∈ [0.1, 10]`, `v ∈ [10⁻², 10²]`,
/// `λ ∈ [10⁻², 10²]` (all log-uniform), or a random custom profile.
pub fn random_cycle<R: Rng + ?Sized>(rng: &mut R) -> CycleSpec {
    if rng.gen_range(0..4) == 3 {
        let (profile, duration) = random_closed_profile(rng);
        return CycleSpec::new(Family::Custom { profile, duration }, 1.0, 1.0, 1.0, 1);
    }
    CycleSpec::new(
        random_family(rng),
        log_uniform(rng, 0.1, 10.0),
        log_uniform(rng, 1e-2, 1e2),
        log_uniform(rng, 1e-2, 1e2),
        1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::gain_factor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn il(v: f64, lambda: f64, n: u32) -> CycleSpec {
        CycleSpec::new(Family::InverseLinear, 1.0, v, lambda, n)
    }

    #[test]
    fn adiabatic_and_sudden_limits() {
        let r = gain_factor(&build_cycle(&il(1e-3, 2.0, 1)).unwrap()).unwrap();
        assert!((r - 1.0).abs() < 1e-2);
        let r = gain_factor(&build_cycle(&il(1e3, 2.0, 1)).unwrap()).unwrap();
        assert!((r - 1.0).abs() < 5e-2);
    }

    #[test]
    fn closed_forms_agree_with_integrated_cycle() {
        let cfg = IntegratorConfig::default();
        for spec in [
            il(1.0, 10.0, 1),
            il(0.3, 0.2, 2),
            CycleSpec::new(Family::PowerLaw { k: -3.0 }, 2.0, 1.5, 4.0, 1),
            CycleSpec::new(Family::PowerLaw { k: 1.0 }, 1.0, 0.7, 0.3, 1),
            CycleSpec::new(Family::Exponential, 0.5, 0.8, 3.0, 1),
            CycleSpec::new(Family::Exponential, 1.0, 2.0, 0.25, 1),
        ] {
            let a = build_cycle(&spec).unwrap();
            let b = build_cycle_ode(&spec, &cfg).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-7, "{spec:?}: {}", a.max_abs_diff(&b));
        }
    }

    #[test]
    fn legs_close_the_cycle() {
        for spec in [
            il(0.7, 3.0, 1),
            il(0.7, 0.3, 1),
            CycleSpec::new(Family::PowerLaw { k: -2.5 }, 1.0, 2.0, 0.1, 1),
            CycleSpec::new(Family::Exponential, 1.0, 2.0, 7.0, 1),
        ] {
            let [(out, t1), (back, t2)] = spec.legs().unwrap();
            assert!((out.omega(0.0).unwrap() - 1.0).abs() < 1e-14);
            assert!((out.omega(t1).unwrap() - 1.0 / spec.lambda).abs() < 1e-12);
            assert!((back.omega(0.0).unwrap() - 1.0 / spec.lambda).abs() < 1e-14);
            assert!((back.omega(t2).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn n_cycles_is_power_of_one_cycle() {
        let one = build_cycle(&il(1.2, 10.0, 1)).unwrap();
        let three = build_cycle(&il(1.2, 10.0, 3)).unwrap();
        let manual = compose(&one, &compose(&one, &one));
        assert!(three.max_abs_diff(&manual) < 1e-9 * manual.half_trace_sst());
    }

    #[test]
    fn omega0_enters_only_through_rescaled_rate() {
        let a = build_cycle(&CycleSpec::new(Family::InverseLinear, 2.0, 3.0, 5.0, 1)).unwrap();
        let b = build_cycle(&il(1.5, 5.0, 1)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn unit_scale_is_identity() {
        assert_eq!(build_cycle(&il(1.0, 1.0, 4)).unwrap(), EvolutionMatrix::IDENTITY);
    }

    #[test]
    fn invalid_specs() {
        assert!(build_cycle(&il(1.0, -2.0, 1)).is_err());
        assert!(build_cycle(&il(1.0, 2.0, 0)).is_err());
        assert!(build_cycle(&CycleSpec::new(Family::PowerLaw { k: 2.0 }, 1.0, 1.0, 2.0, 1)).is_err());
        let open = Family::Custom { profile: FrequencyProfile::InverseLinear { omega0: 1.0, v: 1.0 }, duration: 1.0 };
        assert!(build_cycle(&CycleSpec::new(open, 1.0, 1.0, 1.0, 1)).is_err());
    }

    #[test]
    fn grid_axis_parsing() {
        let g: GridAxis = "0.01:10:200:log".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 200);
        assert!((v[0] - 0.01).abs() < 1e-15 && (v[199] - 10.0).abs() < 1e-12);
        let g: GridAxis = "1:2:3".parse().unwrap();
        assert_eq!(g.values(), vec![1.0, 1.5, 2.0]);
        assert_eq!("2.5".parse::<GridAxis>().unwrap().values(), vec![2.5]);
        assert!("1:2:0".parse::<GridAxis>().is_err());
        assert!("0:2:3:log".parse::<GridAxis>().is_err());
        assert!("a:b".parse::<GridAxis>().is_err());
    }

    #[test]
    fn scan_order_and_worker_independence() {
        let v: GridAxis = "0.1:5:7:log".parse().unwrap();
        let l: GridAxis = "2:10:3".parse().unwrap();
        let w = GridAxis::single(1.0);
        let a = scan_gain(&Family::InverseLinear, &v, &l, &w, 1, Some(1)).unwrap();
        let b = scan_gain(&Family::InverseLinear, &v, &l, &w, 1, Some(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 21);
        assert_eq!(a.rows[1].v, v.values()[1]);
        assert_eq!(a.rows[7].lambda, 6.0);
        assert!(a.rows.iter().all(|r| r.r >= 1.0 - 1e-9 && r.det_err < 1e-6));
    }

    #[test]
    fn scan_keeps_failed_points() {
        let v: GridAxis = "1:2:2".parse().unwrap();
        let l = GridAxis::single(2.0);
        let res = scan_gain(&Family::PowerLaw { k: 2.0 }, &v, &l, &GridAxis::single(1.0), 1, None).unwrap();
        assert_eq!(res.rows.len(), 2);
        assert_eq!(res.failures(), 2);
        assert!(res.rows[0].r.is_nan());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8 && fx < 1e-16);
    }

    #[test]
    fn unity_points_refine_downwards() {
        let v: GridAxis = "0.01:1:300:log".parse().unwrap();
        let res =
            scan_gain(&Family::InverseLinear, &v, &GridAxis::single(10.0), &GridAxis::single(1.0), 1, None).unwrap();
        let pts = find_unity_points(&res, 1e-2);
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| p.r <= p.coarse_r && p.r >= 1.0 - 1e-12));
        // monotone sweep has none
        let v: GridAxis = "100:1000:20:log".parse().unwrap();
        let res =
            scan_gain(&Family::InverseLinear, &v, &GridAxis::single(2.0), &GridAxis::single(1.0), 1, None).unwrap();
        assert!(find_unity_points(&res, 1e-2).is_empty());
    }

    #[test]
    fn random_cycles_never_lose_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let spec = random_cycle(&mut rng);
            let s = build_cycle(&spec).unwrap_or_else(|e| panic!("{spec:?}: {e}"));
            assert!(s.half_trace_sst() >= 1.0 - 1e-9, "{spec:?}");
        }
    }

    #[test]
    fn random_closed_profiles_are_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let (p, t) = random_closed_profile(&mut rng);
            p.validate(t).unwrap();
            assert!((p.omega(t).unwrap() - 1.0).abs() < 1e-12, "{p:?}");
        }
    }
}
