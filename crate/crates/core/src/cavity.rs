//! Black-body radiation in a slowly contracting or expanding cavity, in CGS units.

use crate::cycles::golden_section_min;
use crate::error::{invalid, Error, Result};

/// Planck constant, erg·s.
pub const H: f64 = 6.626e-27;
/// Boltzmann constant, erg/K.
pub const K_B: f64 = 1.381e-16;
/// Speed of light, cm/s.
pub const C: f64 = 2.998e10;
/// Radiation constant quoted for Stefan's law, erg·cm⁻³·K⁻⁴.
pub const SIGMA: f64 = 7.64e-15;
/// Largest wall speed, as a fraction of `c`.
pub const MAX_WALL_SPEED: f64 = 1e-3;
/// Smallest `Ω = ω/v` accepted for a mode.
pub const MIN_ADIABATICITY: f64 = 1e3;
/// `x` solving `x = 3(1 − e^{−x})`, the peak of `x³/(eˣ − 1)`.
pub const WIEN_X: f64 = 2.821_439_372_122_079;
/// Effective temperatures of visible light, K.
pub const VISIBLE_BAND: (f64, f64) = (1e4, 1e5);

/// `8π⁵k⁴/(15h³c³)` from the constants above.
pub fn radiation_constant() -> f64 {
    8.0 * std::f64::consts::PI.powi(5) * K_B.powi(4) / (15.0 * H.powi(3) * C.powi(3))
}

/// Mean thermal energy of a mode at `nu`, without zero point.
pub fn mode_energy(nu: f64, temperature: f64) -> f64 {
    H * nu / (H * nu / (K_B * temperature)).exp_m1()
}

/// Spectral energy density `(8π/c³) hν³/(e^{hν/kT} − 1)`, erg·cm⁻³·Hz⁻¹.
pub fn planck(nu: f64, temperature: f64) -> f64 {
    if nu <= 0.0 {
        return 0.0;
    }
    8.0 * std::f64::consts::PI * nu * nu / C.powi(3) * mode_energy(nu, temperature)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub nu: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec {
    /// Initial edge length, cm.
    pub l0: f64,
    /// Initial temperature, K.
    pub temperature: f64,
    /// Fractional rate `L(t) = L₀(1 + v t)`, 1/s.
    pub v: f64,
    pub lambda: f64,
    pub n_max: usize,
    /// Spectrum samples, log-spaced over `[0.01, 20] kT/h`.
    pub samples: usize,
}

impl CavitySpec {
    pub fn new(l0: f64, temperature: f64, v: f64, lambda: f64) -> Self {
        Self { l0, temperature, v, lambda, n_max: 1000, samples: 400 }
    }

    pub fn wall_speed(&self) -> f64 {
        self.l0 * self.v.abs()
    }

    /// `Ω_n = π|n|c/|V|`.
    pub fn adiabaticity(&self, n: usize) -> f64 {
        std::f64::consts::PI * n as f64 * C / self.wall_speed()
    }

    /// Checks every mode up to `n_max`, then the wall-speed bound.
    pub fn validate(&self) -> Result<()> {
        for x in [self.l0, self.temperature, self.lambda] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(invalid("cavity length, temperature and scale factor must be positive"));
            }
        }
        if !self.v.is_finite() || self.n_max == 0 || self.samples < 16 {
            return Err(invalid("cavity needs a finite rate, n_max ≥ 1 and at least 16 samples"));
        }
        if self.v != 0.0 {
            for n in 1..=self.n_max {
                let omega = self.adiabaticity(n);
                if omega <= MIN_ADIABATICITY {
                    return Err(Error::NotAdiabatic { mode: n, omega });
                }
                if omega > 10.0 * MIN_ADIABATICITY {
                    break;
                }
            }
        }
        if self.wall_speed() / C >= MAX_WALL_SPEED {
            return Err(invalid(format!("wall speed {} cm/s is not small against c", self.wall_speed())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanckShift {
    pub before: Vec<SpectrumSample>,
    pub after: Vec<SpectrumSample>,
    pub fitted_temperature: f64,
    /// Total radiation energy in the cavity before and after, erg.
    pub energy_before: f64,
    pub energy_after: f64,
}

impl PlanckShift {
    pub fn energy_ratio(&self) -> f64 {
        self.energy_after / self.energy_before
    }
}

/// Maps every mode `ν → ν/λ`, `E → E/λ` with mode counts conserved and the
/// volume scaled by `λ³`, then fits a temperature to the result.
pub fn shift_planck_spectrum(spec: &CavitySpec) -> Result<PlanckShift> {
    spec.validate()?;
    let (t, lam) = (spec.temperature, spec.lambda);
    let lo = 0.01 * K_B * t / H;
    let hi = 20.0 * K_B * t / H;
    let m = spec.samples;
    let nus: Vec<f64> = (0..m).map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64)).collect();
    let before: Vec<SpectrumSample> = nus.iter().map(|&nu| SpectrumSample { nu, u: planck(nu, t) }).collect();
    let after: Vec<SpectrumSample> = nus
        .iter()
        .map(|&nu| {
            let shifted = nu / lam;
            // same mode density per unit volume at the new frequency, energy raised by 1/λ
            let density = 8.0 * std::f64::consts::PI * shifted * shifted / C.powi(3);
            SpectrumSample { nu: shifted, u: density * mode_energy(nu, t) / lam }
        })
        .collect();
    let volume = spec.l0.powi(3);
    let energy_before = volume * integrate_log_grid(&before);
    let energy_after = volume * lam.powi(3) * integrate_log_grid(&after);
    Ok(PlanckShift { fitted_temperature: fit_temperature(&after)?, before, after, energy_before, energy_after })
}

/// Trapezoid in `ln ν` of `ν u(ν)`.
fn integrate_log_grid(samples: &[SpectrumSample]) -> f64 {
    samples.windows(2).map(|w| 0.5 * (w[0].nu * w[0].u + w[1].nu * w[1].u) * (w[1].nu / w[0].nu).ln()).sum()
}

/// Wien-peak estimate refined by least squares over `ln u`.
pub fn fit_temperature(samples: &[SpectrumSample]) -> Result<f64> {
    let peak = samples
        .iter()
        .filter(|s| s.u > 0.0)
        .max_by(|a, b| a.u.total_cmp(&b.u))
        .ok_or_else(|| invalid("spectrum has no positive samples"))?;
    let wien = H * peak.nu / (WIEN_X * K_B);
    let cost = |log_t: f64| {
        let t = log_t.exp();
        samples.iter().filter(|s| s.u > 0.0).map(|s| (s.u.ln() - planck(s.nu, t).ln()).powi(2)).sum::<f64>()
    };
    let (log_t, _) = golden_section_min(cost, (0.5 * wien).ln(), (2.0 * wien).ln(), 1e-12);
    Ok(log_t.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SonoluminescenceEstimate {
    /// `σT⁴L₀³`, erg.
    pub initial_energy: f64,
    pub excess_energy: f64,
    pub effective_temperature: f64,
    /// Photon counts for single-photon energies across the visible band, low to high.
    pub photon_count_range: (f64, f64),
    /// Photon count at `hν = kT_eff`.
    pub photon_count_at_effective: f64,
}

/// Order-of-magnitude yield of a cavity of size `l0` at `temperature`
/// contracted by `lambda < 1`.
pub fn sonoluminescence_estimate(lambda: f64, temperature: f64, l0: f64) -> Result<SonoluminescenceEstimate> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid(format!("contraction needs 0 < λ ≤ 1, got {lambda}")));
    }
    if !(temperature > 0.0 && l0 > 0.0) {
        return Err(invalid("temperature and size must be positive"));
    }
    let initial_energy = SIGMA * temperature.powi(4) * l0.powi(3);
    let excess_energy = initial_energy * (1.0 / lambda - 1.0);
    let effective_temperature = temperature / lambda;
    let (cold, hot) = VISIBLE_BAND;
    Ok(SonoluminescenceEstimate {
        initial_energy,
        excess_energy,
        effective_temperature,
        photon_count_range: (excess_energy / (K_B * hot), excess_energy / (K_B * cold)),
        photon_count_at_effective: excess_energy / (K_B * effective_temperature),
    })
}
