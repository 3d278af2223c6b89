use std::f64::consts::PI;

use cyclosc::cavity::{shift_planck_spectrum, sonoluminescence_estimate, CavitySpec};
use cyclosc::closed_form::closed_form;
use cyclosc::cycles::{
    build_cycle_ode, build_cycle_with, find_unity_points, leg, scan_gain, CycleSpec, Family, GridAxis,
};
use cyclosc::drive::Drive;
use cyclosc::ode::{forced_energy_from_moments, propagate_forced, propagate_ode, IntegratorConfig};
use cyclosc::perturbation::{
    check_inequality, exact_quadratic_shift, first_order_channels, required_cutoff, x_power_matrix,
};
use cyclosc::profile::FrequencyProfile;
use cyclosc::symplectic::{final_energy, gain_factor, EvolutionMatrix, StationaryState};
use cyclosc::verify::{run_verification, VerifyConfig};

use crate::fail::CliError;
use crate::params::{FamilyArg, Method, Params};
use crate::table::{Cell, Table};

/// A written table plus an error to report after writing it.
pub struct Outcome {
    pub table: Table,
    pub deferred: Option<CliError>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Self { table, deferred: None }
    }
}

type Res<T> = Result<T, CliError>;

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn family(p: &Params) -> Res<Family> {
    match p.family.ok_or_else(|| config("--family is required"))? {
        FamilyArg::InverseLinear => Ok(Family::InverseLinear),
        FamilyArg::Power => {
            Ok(Family::PowerLaw { k: p.k.ok_or_else(|| config("--k is required for the power family"))? })
        }
        FamilyArg::Exponential => Ok(Family::Exponential),
        FamilyArg::LogSine => Err(config("the log-sine profile is only available for `forced`")),
    }
}

fn axis(raw: &Option<String>, name: &str, default: Option<f64>) -> Res<GridAxis> {
    match (raw, default) {
        (Some(s), _) => Ok(s.parse::<GridAxis>()?),
        (None, Some(x)) => Ok(GridAxis::single(x)),
        (None, None) => Err(config(format!("--{name} is required"))),
    }
}

fn single(raw: &Option<String>, name: &str, default: Option<f64>) -> Res<f64> {
    let a = axis(raw, name, default)?;
    if a.count != 1 {
        return Err(config(format!("--{name} must be a single value here, got the grid {a}")));
    }
    Ok(a.start)
}

fn integrator(p: &Params) -> Res<IntegratorConfig> {
    let d = IntegratorConfig::default();
    let cfg = IntegratorConfig::with_tolerances(p.rtol.unwrap_or(d.rtol), p.atol.unwrap_or(d.atol));
    cfg.validate()?;
    Ok(cfg)
}

fn k_cell(f: &Family) -> Cell {
    match f {
        Family::PowerLaw { k } => Cell::Real(*k),
        _ => Cell::Empty,
    }
}

fn matrix_cells(s: &EvolutionMatrix) -> Vec<Cell> {
    let mut v: Vec<Cell> = s.entries().into_iter().map(Cell::Real).collect();
    v.push(s.det_error().into());
    v
}

pub fn propagate(p: &Params) -> Res<Outcome> {
    let fam = family(p)?;
    let omega0 = single(&p.omega0, "omega0", Some(1.0))?;
    let v = single(&p.v, "v", None)?;
    let lambda = single(&p.lambda, "lambda", None)?;
    let level = p.level.unwrap_or(0);
    let (profile, t) = leg(&fam, omega0, v, lambda)?;
    let s = match p.method.unwrap_or(Method::Closed) {
        Method::Closed => closed_form(&profile, t).expect("closed-form family")?,
        Method::Ode => propagate_ode(&profile, t, &integrator(p)?)?,
    };
    let state = StationaryState::new(level, omega0)?;
    let e_final = final_energy(&s, &state, omega0 / lambda);
    let mut table = Table::new(
        "propagate",
        &[
            "family",
            "k",
            "omega0",
            "v",
            "lambda",
            "t_final",
            "s11",
            "s12",
            "s21",
            "s22",
            "det_err",
            "level",
            "e_initial",
            "e_final",
            "ratio",
        ],
    );
    let mut row = vec![fam.name().into(), k_cell(&fam), omega0.into(), v.into(), lambda.into(), t.into()];
    row.extend(matrix_cells(&s));
    row.extend([level.into(), state.energy().into(), e_final.into(), (e_final / state.energy()).into()]);
    table.push(row);
    Ok(table.into())
}

pub fn cycle(p: &Params) -> Res<Outcome> {
    let fam = family(p)?;
    let omega0 = single(&p.omega0, "omega0", Some(1.0))?;
    let v = single(&p.v, "v", None)?;
    let lambda = single(&p.lambda, "lambda", None)?;
    let n = p.cycles.unwrap_or(1);
    let level = p.level.unwrap_or(0);
    let spec = CycleSpec::new(fam.clone(), omega0, v, lambda, n);
    let cfg = integrator(p)?;
    let s = match p.method.unwrap_or(Method::Closed) {
        Method::Closed => build_cycle_with(&spec, &cfg)?,
        Method::Ode => build_cycle_ode(&spec, &cfg)?,
    };
    let r = gain_factor(&s)?;
    let e_in = StationaryState::new(level, omega0)?.energy();
    let mut table = Table::new(
        "cycle",
        &[
            "family",
            "k",
            "omega0",
            "v",
            "lambda",
            "n_cycles",
            "s11",
            "s12",
            "s21",
            "s22",
            "det_err",
            "r",
            "level",
            "e_initial",
            "e_final",
        ],
    );
    let mut row = vec![fam.name().into(), k_cell(&fam), omega0.into(), v.into(), lambda.into(), n.into()];
    row.extend(matrix_cells(&s));
    row.extend([r.into(), level.into(), e_in.into(), (r * e_in).into()]);
    table.push(row);
    Ok(table.into())
}

pub fn scan(p: &Params) -> Res<Outcome> {
    let fam = family(p)?;
    let v = axis(&p.v, "v", None)?;
    let lambda = axis(&p.lambda, "lambda", None)?;
    let omega0 = axis(&p.omega0, "omega0", Some(1.0))?;
    let n = p.cycles.unwrap_or(1);
    let sweep = scan_gain(&fam, &v, &lambda, &omega0, n, p.workers)?;
    let failures = sweep.failures();
    let deferred =
        (failures > 0).then(|| CliError::Numeric(format!("{failures} of {} grid points failed", sweep.rows.len())));
    if let Some(tol) = p.unity_tol {
        let mut table = Table::new("scan", &["v", "lambda", "omega0", "r", "coarse_r"]);
        for u in find_unity_points(&sweep, tol) {
            table.push(vec![u.v.into(), u.lambda.into(), u.omega0.into(), u.r.into(), u.coarse_r.into()]);
        }
        table.note("family", fam.name());
        table.note("unity_tol", tol);
        return Ok(Outcome { table, deferred });
    }
    let mut table = Table::new("scan", &["v", "lambda", "omega0", "n_cycles", "r", "det_err", "error"]);
    for row in &sweep.rows {
        table.push(vec![
            row.v.into(),
            row.lambda.into(),
            row.omega0.into(),
            row.n_cycles.into(),
            row.r.into(),
            row.det_err.into(),
            row.error.clone().into(),
        ]);
    }
    table.note("family", fam.name());
    if let Family::PowerLaw { k } = fam {
        table.note("k", k);
    }
    if let Some(best) = sweep.max_gain() {
        table.note("max_r", best.r);
        table.note("max_r_v", best.v);
    }
    table.note("failures", failures);
    Ok(Outcome { table, deferred })
}

fn forced_profile(p: &Params) -> Res<(FrequencyProfile, f64)> {
    if p.family == Some(FamilyArg::LogSine) {
        let coeffs = p.coeffs.clone().ok_or_else(|| config("--coeffs is required for the log-sine profile"))?;
        let duration = p.duration.ok_or_else(|| config("--duration is required for the log-sine profile"))?;
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(config("--duration must be positive"));
        }
        return Ok((FrequencyProfile::LogSineSeries { duration, coeffs }, duration));
    }
    let fam = family(p)?;
    let spec = CycleSpec::new(
        fam,
        single(&p.omega0, "omega0", Some(1.0))?,
        single(&p.v, "v", None)?,
        single(&p.lambda, "lambda", None)?,
        1,
    );
    Ok(spec.cycle_profile()?)
}

pub fn forced(p: &Params) -> Res<Outcome> {
    let (profile, t) = forced_profile(p)?;
    let amp = p.kappa_amplitude.unwrap_or(1.0);
    let w = p.kappa_omega.unwrap_or(1.0);
    let phase = p.kappa_phase.unwrap_or(0.0);
    let kappa = Drive::analytic(t, move |s| amp * (PI * s / t).sin().powi(2) * (w * s + phase).cos());
    let level = p.level.unwrap_or(0);
    let state = StationaryState::level(level);
    let cfg = integrator(p)?;
    let wf = profile.omega(t).ok_or_else(|| CliError::Numeric("profile undefined at its end".into()))?;
    let out = propagate_forced(&profile, &kappa, t, &cfg)?;
    let e_free = final_energy(&out.s, &state, wf);
    let classical = out.classical_energy(wf);
    let measured = forced_energy_from_moments(&profile, &kappa, &state, t, &cfg)?;
    let predicted = e_free + classical;
    let mut table = Table::new(
        "forced",
        &[
            "t_final",
            "omega_final",
            "level",
            "e_initial",
            "e_free",
            "e_classical",
            "e_final",
            "e_predicted",
            "rel_mismatch",
            "qc",
            "qc_dot",
        ],
    );
    table.push(vec![
        t.into(),
        wf.into(),
        level.into(),
        state.energy().into(),
        e_free.into(),
        classical.into(),
        measured.into(),
        predicted.into(),
        ((measured - predicted) / measured).abs().into(),
        out.qc.into(),
        out.qc_dot.into(),
    ]);
    Ok(table.into())
}

pub fn perturb(p: &Params) -> Res<Outcome> {
    if p.inequality.unwrap_or(false) {
        return inequality(p);
    }
    let power = p.power.unwrap_or(2);
    let level = p.level.unwrap_or(0) as usize;
    let cutoff = p.cutoff.unwrap_or_else(|| required_cutoff(level, power.max(1)));
    let eps = p.amplitude.unwrap_or(1e-2);
    let duration = p.duration.unwrap_or(3.0);
    let wd = p.drive_omega.unwrap_or(0.0);
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(config("--duration must be positive"));
    }
    let drive = Drive::analytic(duration, move |t| eps * (PI * t / duration).sin().powi(2) * (wd * t).cos());
    let channels = first_order_channels(&drive, level, power, cutoff)?;
    let op = x_power_matrix(power, cutoff)?;
    let mut table =
        Table::new("perturb", &["n_from", "n_to", "omega_fi", "matrix_element", "probability", "energy_change"]);
    let mut shift = 0.0;
    for c in &channels {
        let dw = c.to as f64 - level as f64;
        shift += dw * c.probability;
        table.push(vec![
            level.into(),
            c.to.into(),
            dw.into(),
            op.get(c.to, level)?.into(),
            c.probability.into(),
            (dw * c.probability).into(),
        ]);
    }
    table.note("power", power);
    table.note("cutoff", cutoff);
    table.note("amplitude", eps);
    table.note("first_order_shift", shift);
    if power == 2 {
        let exact = exact_quadratic_shift(&drive, level, &integrator(p)?)?;
        table.note("exact_shift", exact);
        table.note("relative_difference", ((exact - shift) / exact).abs());
    }
    Ok(table.into())
}

fn inequality(p: &Params) -> Res<Outcome> {
    let n_max = p.n_max.unwrap_or(30);
    let powers: Vec<usize> = match p.power {
        Some(n) => vec![n],
        None => (1..=8).collect(),
    };
    let mut table = Table::new("perturb", &["power", "n", "m", "upper", "lower", "holds"]);
    let (mut checked, mut violations) = (0, 0);
    for power in powers {
        let report = check_inequality(power, n_max, p.cutoff.unwrap_or(0));
        checked += report.checked;
        violations += report.violations.len();
        let op = x_power_matrix(power, report.cutoff)?;
        for n in 0..=n_max {
            for m in (1..=n.min(power)).filter(|m| (m + power).is_multiple_of(2)) {
                let up = op.get(n + m, n)?;
                let down = op.get(n - m, n)?;
                let holds = !report.violations.contains(&(power, n, m));
                table.push(vec![power.into(), n.into(), m.into(), up.into(), down.into(), holds.into()]);
            }
        }
    }
    table.note("checked", checked);
    table.note("violations", violations);
    Ok(table.into())
}

pub fn spectrum(p: &Params) -> Res<Outcome> {
    let lambda = single(&p.lambda, "lambda", None)?;
    let rate = p.rate.unwrap_or(1.0).abs();
    let mut spec = CavitySpec::new(p.length.unwrap_or(1.0), p.temperature.unwrap_or(300.0), 0.0, lambda);
    spec.v = if lambda < 1.0 { -rate } else { rate };
    if let Some(n) = p.samples {
        spec.samples = n;
    }
    if let Some(n) = p.modes {
        spec.n_max = n;
    }
    let s = shift_planck_spectrum(&spec)?;
    let target = spec.temperature / lambda;
    let mut table = Table::new("spectrum", &["nu_before", "u_before", "nu_after", "u_after", "u_planck_target"]);
    for (b, a) in s.before.iter().zip(&s.after) {
        table.push(vec![
            b.nu.into(),
            b.u.into(),
            a.nu.into(),
            a.u.into(),
            cyclosc::cavity::planck(a.nu, target).into(),
        ]);
    }
    table.note("temperature", spec.temperature);
    table.note("target_temperature", target);
    table.note("fitted_temperature", s.fitted_temperature);
    table.note("energy_before", s.energy_before);
    table.note("energy_after", s.energy_after);
    table.note("energy_ratio", s.energy_ratio());
    if lambda < 1.0 {
        let e = sonoluminescence_estimate(lambda, spec.temperature, spec.l0)?;
        table.note("excess_energy", e.excess_energy);
        table.note("effective_temperature", e.effective_temperature);
        table.note("photons_low", e.photon_count_range.0);
        table.note("photons_high", e.photon_count_range.1);
        table.note("photons_at_effective_temperature", e.photon_count_at_effective);
    }
    Ok(table.into())
}

pub fn verify(p: &Params) -> Res<Outcome> {
    let cfg = VerifyConfig {
        seed: p.seed.unwrap_or(0),
        cycles: p.cases.unwrap_or(VerifyConfig::default().cycles),
        workers: p.workers,
        ..VerifyConfig::default()
    };
    let report = run_verification(&cfg)?;
    let mut table = Table::new("verify", &["check", "passed", "total", "worst", "tolerance", "ok", "first_failure"]);
    for c in &report.checks {
        table.push(vec![
            c.name.into(),
            c.passed.into(),
            c.total.into(),
            c.worst.into(),
            c.tolerance.into(),
            c.ok().into(),
            c.first_failure.clone().into(),
        ]);
    }
    table.note("seed", Cell::Int(cfg.seed as i64));
    table.note("all_passed", report.ok());
    let deferred = (!report.ok()).then(|| {
        let bad: Vec<&str> = report.checks.iter().filter(|c| !c.ok()).map(|c| c.name).collect();
        CliError::Verify(format!("failed checks: {}", bad.join("; ")))
    });
    Ok(Outcome { table, deferred })
}
