//! Randomized invariant suite behind `cyclosc verify`.
//!
//! Every case draws its own generator from a per-case seed taken from the
//! master seed, so reports do not depend on the number of workers.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closed_form::closed_form;
use crate::cycles::{build_cycle, leg, random_closed_profile, random_cycle, with_workers, Family};
use crate::drive::Drive;
use crate::ensemble::{phonon_number_final, RandomCoupling};
use crate::error::Result;
use crate::ode::{forced_energy_from_moments, propagate_forced, propagate_ode, IntegratorConfig};
use crate::perturbation::{check_inequality, exact_quadratic_shift, first_order_energy_shift};
use crate::symplectic::{final_energy, gain_factor, to_bogoliubov, EvolutionMatrix, StationaryState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub cycles: usize,
    pub oracle: usize,
    pub symplectic: usize,
    pub multimode: usize,
    pub forced: usize,
    pub workers: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, cycles: 1000, oracle: 100, symplectic: 1000, multimode: 100, forced: 100, workers: None }
    }
}

/// Outcome of one property over its cases.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Largest measured defect (or smallest margin, per check).
    pub worst: f64,
    pub tolerance: f64,
    pub first_failure: Option<String>,
}

impl CheckResult {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(CheckResult::ok)
    }
}

/// One case: `Ok(defect)` compared against the tolerance, or an error message.
type Case = std::result::Result<f64, String>;

fn collect(name: &'static str, tolerance: f64, cases: Vec<Case>) -> CheckResult {
    let mut res = CheckResult { name, passed: 0, total: cases.len(), worst: 0.0, tolerance, first_failure: None };
    for (i, c) in cases.into_iter().enumerate() {
        match c {
            Ok(d) if d <= tolerance => {
                res.passed += 1;
                res.worst = res.worst.max(d);
            }
            Ok(d) => {
                res.worst = res.worst.max(d);
                res.first_failure.get_or_insert_with(|| format!("case {i}: defect {d:.3e}"));
            }
            Err(e) => {
                res.worst = f64::INFINITY;
                res.first_failure.get_or_insert_with(|| format!("case {i}: {e}"));
            }
        }
    }
    res
}

fn seeds(master: u64, salt: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (0..n).map(|_| rng.gen()).collect()
}

fn run_cases(master: u64, salt: u64, n: usize, f: impl Fn(&mut ChaCha8Rng) -> Case + Sync) -> Vec<Case> {
    seeds(master, salt, n).into_par_iter().map(|s| f(&mut ChaCha8Rng::seed_from_u64(s))).collect()
}

/// `rotation · squeeze · rotation` with `ln s ∈ [−2, 2]`.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R) -> EvolutionMatrix {
    let t1 = rng.gen_range(0.0..2.0 * PI);
    let t2 = rng.gen_range(0.0..2.0 * PI);
    let s = rng.gen_range(-2.0f64..2.0).exp();
    EvolutionMatrix::rotation(t1) * EvolutionMatrix::squeeze(s) * EvolutionMatrix::rotation(t2)
}

/// Random smooth drive vanishing at `0` and `duration`.
pub fn random_drive<R: Rng + ?Sized>(rng: &mut R, duration: f64) -> Drive {
    let amp = rng.gen_range(-1.0..1.0);
    let w = rng.gen_range(0.0..3.0);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let second = rng.gen_range(-0.5..0.5);
    Drive::analytic(duration, move |t| {
        let env = (PI * t / duration).sin();
        env * env * (amp * (w * t + phase).cos() + second * (2.0 * PI * t / duration).sin())
    })
}

fn theorem_case(rng: &mut ChaCha8Rng) -> Case {
    let spec = random_cycle(rng);
    let r = build_cycle(&spec).and_then(|s| gain_factor(&s)).map_err(|e| format!("{}: {e}", spec.family.name()))?;
    Ok((1.0 - r).max(0.0))
}

fn oracle_case(rng: &mut ChaCha8Rng) -> Case {
    let family = match rng.gen_range(0..3) {
        0 => Family::InverseLinear,
        1 => {
            let k: f64 = rng.gen_range(0.5..4.0);
            Family::PowerLaw { k: if rng.gen_bool(0.5) { -k } else { k.min(1.5) } }
        }
        _ => Family::Exponential,
    };
    let omega0 = (rng.gen_range(0.5f64.ln()..2f64.ln())).exp();
    let speed = (rng.gen_range(0.05f64.ln()..5f64.ln())).exp();
    let mut lambda = (rng.gen_range(0.2f64.ln()..5f64.ln())).exp();
    if lambda == 1.0 {
        lambda = 2.0;
    }
    let (profile, t) = leg(&family, omega0, speed, lambda).map_err(|e| e.to_string())?;
    let exact = closed_form(&profile, t).expect("closed-form family").map_err(|e| e.to_string())?;
    let num = propagate_ode(&profile, t, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
    Ok(exact.max_abs_diff(&num).max(exact.det_error()))
}

fn bogoliubov_case(rng: &mut ChaCha8Rng) -> Case {
    let s = random_symplectic(rng);
    let bp = to_bogoliubov(&s).map_err(|e| e.to_string())?;
    let comm = (bp.commutator() - 1.0).abs();
    if comm > 1e-9 {
        return Err(format!("|alpha|^2 - |beta|^2 off by {comm:.3e}"));
    }
    Ok((s.half_trace_sst() - 1.0 - 2.0 * bp.beta.norm_sqr()).abs())
}

fn multimode_case(rng: &mut ChaCha8Rng) -> Case {
    let n = rng.gen_range(1..=4);
    let sys = RandomCoupling::sample(rng, n);
    let bg = sys.propagate(&IntegratorConfig::default()).map_err(|e| e.to_string())?;
    let (d1, d2) = bg.relation_defects();
    let occ: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=10) as f64).collect();
    let nf = phonon_number_final(&bg, &occ).map_err(|e| e.to_string())?;
    if nf < occ.iter().sum::<f64>() {
        return Err(format!("phonon number fell from {} to {nf}", occ.iter().sum::<f64>()));
    }
    Ok(d1.max(d2))
}

fn forced_case(rng: &mut ChaCha8Rng) -> Case {
    let (profile, t) = random_closed_profile(rng);
    let kappa = random_drive(rng, t);
    let state = StationaryState::level(rng.gen_range(0..5));
    let cfg = IntegratorConfig::with_tolerances(1e-12, 1e-14);
    let wf = profile.omega(t).ok_or("profile undefined at its end")?;
    let measured = forced_energy_from_moments(&profile, &kappa, &state, t, &cfg).map_err(|e| e.to_string())?;
    let free = propagate_ode(&profile, t, &cfg).map_err(|e| e.to_string())?;
    let forced = propagate_forced(&profile, &kappa, t, &cfg).map_err(|e| e.to_string())?;
    let predicted = final_energy(&free, &state, wf) + 0.5 * (forced.qc * forced.qc + forced.qc_dot * forced.qc_dot);
    if measured < state.energy() * (1.0 - 1e-9) {
        return Err(format!("energy fell from {} to {measured}", state.energy()));
    }
    Ok((measured - predicted).abs() / measured)
}

/// Relative disagreement of the first-order and exact shifts for `N = 2` at drive amplitude `eps`.
pub fn quadratic_shift_error(eps: f64, n: usize) -> Result<f64> {
    let drive = Drive::analytic(3.0, move |t| eps * (PI * t / 3.0).sin().powi(2));
    let pert = first_order_energy_shift(&drive, n, 2, 64)?;
    let exact = exact_quadratic_shift(&drive, n, &IntegratorConfig::with_tolerances(1e-13, 1e-15))?;
    Ok(((exact - pert) / exact).abs())
}

/// Runs the whole suite.
pub fn run_verification(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let seed = cfg.seed;
    with_workers(cfg.workers, || {
        let mut checks = vec![
            collect(
                "theorem: R >= 1 - 1e-9 over random closed cycles",
                1e-9,
                run_cases(seed, 1, cfg.cycles, theorem_case),
            ),
            collect(
                "oracle: closed form vs integrated, entrywise and det",
                1e-6,
                run_cases(seed, 2, cfg.oracle, oracle_case),
            ),
            collect(
                "bogoliubov: R = 1 + 2|beta|^2 and |alpha|^2 - |beta|^2 = 1",
                1e-12,
                run_cases(seed, 3, cfg.symplectic, bogoliubov_case),
            ),
            collect(
                "multimode: canonical relations and phonon monotonicity",
                1e-8,
                run_cases(seed, 4, cfg.multimode, multimode_case),
            ),
            collect("forced: E_f = E_f(free) + (Q^2 + Qdot^2)/2", 1e-8, run_cases(seed, 5, cfg.forced, forced_case)),
        ];
        let ineq: Vec<Case> = (1..=8)
            .map(|p| {
                let r = check_inequality(p, 30, 0);
                if r.passed() {
                    Ok(0.0)
                } else {
                    Err(format!("violations {:?}", r.violations))
                }
            })
            .collect();
        checks.push(collect("perturbation: |x^N| inequality for N <= 8, n <= 30", 0.0, ineq));
        let shift = vec![quadratic_shift_error(1e-3, 5).map_err(|e| e.to_string())];
        checks.push(collect("perturbation: N = 2 shift vs exact at eps = 1e-3", 1e-2, shift));
        VerifyReport { seed, checks }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_reproducible() {
        let cfg =
            VerifyConfig { seed: 3, cycles: 40, oracle: 10, symplectic: 50, multimode: 8, forced: 6, workers: Some(2) };
        let a = run_verification(&cfg).unwrap();
        assert!(a.ok(), "{:#?}", a.checks);
        let b = run_verification(&VerifyConfig { workers: Some(1), ..cfg }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn legs_reach_the_target_frequency() {
        for family in
            [Family::InverseLinear, Family::PowerLaw { k: -2.5 }, Family::PowerLaw { k: 1.2 }, Family::Exponential]
        {
            for lambda in [0.3, 4.0] {
                let (p, t) = leg(&family, 1.5, 0.7, lambda).unwrap();
                assert!(t > 0.0);
                assert!((p.omega(t).unwrap() - 1.5 / lambda).abs() < 1e-12);
            }
        }
    }
}
