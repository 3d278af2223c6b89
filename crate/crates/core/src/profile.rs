//! Frequency profiles `ω(t)`.
//!
//! All rates are in units of the reference frequency; profile-local time
//! starts at zero. Piecewise profiles run their segments back to back, each
//! segment in its own local time.

use crate::error::{domain, invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyProfile {
    /// `ω(t) = ω`
    Constant { omega: f64 },
    /// `ω(t) = ω₀ / (1 + v t)`
    InverseLinear { omega0: f64, v: f64 },
    /// `ω(t) = ω₀ z^{(k-2)/2}` with `z = 1 + v t`
    PowerLaw { k: f64, v: f64, omega0: f64 },
    /// `ω(t) = ω₀ e^{v t}`
    Exponential { v: f64, omega0: f64 },
    /// `ω(t) = exp(Σ_j c_j sin(jπt/T))`; equal to one at both ends of `[0, T]`.
    LogSineSeries { duration: f64, coeffs: Vec<f64> },
    /// Segments `(profile, duration)` traversed in order.
    Piecewise(Vec<(FrequencyProfile, f64)>),
    /// Samples interpolated by a monotone cubic.
    Tabulated(MonotoneCubic),
}

impl FrequencyProfile {
    pub fn exponential(v: f64) -> Self {
        Self::Exponential { v, omega0: 1.0 }
    }

    /// `ω(t)` at profile-local time `t`; `None` outside the domain of the profile.
    pub fn omega(&self, t: f64) -> Option<f64> {
        let w = match self {
            Self::Constant { omega } => *omega,
            Self::InverseLinear { omega0, v } => {
                let z = 1.0 + v * t;
                if z <= 0.0 {
                    return None;
                }
                omega0 / z
            }
            Self::PowerLaw { k, v, omega0 } => {
                let z = 1.0 + v * t;
                if z <= 0.0 {
                    return None;
                }
                omega0 * z.powf(0.5 * (k - 2.0))
            }
            Self::Exponential { v, omega0 } => omega0 * (v * t).exp(),
            Self::LogSineSeries { duration, coeffs } => {
                let phase = std::f64::consts::PI * t / duration;
                let sum: f64 = coeffs.iter().enumerate().map(|(j, c)| c * ((j + 1) as f64 * phase).sin()).sum();
                sum.exp()
            }
            Self::Piecewise(segments) => {
                let mut start = 0.0;
                let last = segments.len().checked_sub(1)?;
                for (i, (seg, len)) in segments.iter().enumerate() {
                    if t <= start + len || i == last {
                        return seg.omega(t - start);
                    }
                    start += len;
                }
                return None;
            }
            Self::Tabulated(table) => table.eval(t)?,
        };
        (w > 0.0 && w.is_finite()).then_some(w)
    }

    /// Natural duration of the profile, where one exists.
    pub fn duration(&self) -> Option<f64> {
        match self {
            Self::LogSineSeries { duration, .. } => Some(*duration),
            Self::Piecewise(segments) => Some(segments.iter().map(|(_, len)| len).sum()),
            Self::Tabulated(table) => Some(table.end()),
            _ => None,
        }
    }

    /// Checks that `ω` is defined and positive on `[0, t_final]`.
    pub fn validate(&self, t_final: f64) -> Result<()> {
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(invalid(format!("final time must be finite and non-negative, got {t_final}")));
        }
        match self {
            Self::Constant { omega } => positive("omega", *omega),
            Self::InverseLinear { omega0, v } => {
                positive("omega0", *omega0)?;
                finite("v", *v)?;
                linear_scale_positive(*v, t_final)
            }
            Self::PowerLaw { k, v, omega0 } => {
                positive("omega0", *omega0)?;
                finite("v", *v)?;
                if *k == 0.0 || !k.is_finite() {
                    return Err(invalid("power-law exponent k must be finite and nonzero"));
                }
                linear_scale_positive(*v, t_final)
            }
            Self::Exponential { v, omega0 } => {
                positive("omega0", *omega0)?;
                finite("v", *v)
            }
            Self::LogSineSeries { duration, coeffs } => {
                positive("duration", *duration)?;
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("log-sine coefficients must be finite"));
                }
                if t_final > *duration * (1.0 + 1e-12) {
                    return Err(domain(format!("log-sine profile ends at {duration}, requested {t_final}")));
                }
                Ok(())
            }
            Self::Piecewise(segments) => {
                if segments.is_empty() {
                    return Err(invalid("piecewise profile has no segments"));
                }
                let total: f64 = segments.iter().map(|(_, len)| len).sum();
                if t_final > total * (1.0 + 1e-12) {
                    return Err(domain(format!("piecewise profile ends at {total}, requested {t_final}")));
                }
                for (seg, len) in segments {
                    if !(*len >= 0.0 && len.is_finite()) {
                        return Err(invalid(format!("segment duration must be non-negative, got {len}")));
                    }
                    seg.validate(*len)?;
                }
                Ok(())
            }
            Self::Tabulated(table) => {
                if t_final > table.end() * (1.0 + 1e-12) {
                    return Err(domain(format!("table ends at {}, requested {t_final}", table.end())));
                }
                Ok(())
            }
        }
    }

    /// The profile run backwards over `[0, duration]`: `ω_rev(t) = ω(duration − t)`.
    ///
    /// Closed-form families map onto themselves with a rescaled reference
    /// frequency; piecewise and tabulated profiles are reversed structurally.
    pub fn time_reversed(&self, duration: f64) -> Result<Self> {
        self.validate(duration)?;
        let end = |t| self.omega(t).ok_or_else(|| domain("profile undefined at reversal point"));
        Ok(match self {
            Self::Constant { .. } => self.clone(),
            Self::InverseLinear { v, .. } => {
                let lam = 1.0 + v * duration;
                Self::InverseLinear { omega0: end(duration)?, v: -v / lam }
            }
            Self::PowerLaw { k, v, .. } => {
                let z = 1.0 + v * duration;
                Self::PowerLaw { k: *k, v: -v / z, omega0: end(duration)? }
            }
            Self::Exponential { v, .. } => Self::Exponential { v: -v, omega0: end(duration)? },
            Self::LogSineSeries { duration: len, coeffs } if (len - duration).abs() <= 1e-12 * len => {
                // sin(jπ(1 − s)) = (−1)^{j+1} sin(jπs)
                let coeffs = coeffs.iter().enumerate().map(|(j, c)| if j % 2 == 0 { *c } else { -c }).collect();
                Self::LogSineSeries { duration: *len, coeffs }
            }
            Self::LogSineSeries { .. } => {
                return Err(invalid("log-sine profiles reverse only over their full duration"));
            }
            Self::Piecewise(segments) => {
                let mut remaining = duration;
                let mut kept = Vec::new();
                for (seg, len) in segments {
                    if remaining <= 0.0 {
                        break;
                    }
                    let used = len.min(remaining);
                    kept.push((seg.time_reversed(used)?, used));
                    remaining -= used;
                }
                kept.reverse();
                Self::Piecewise(kept)
            }
            Self::Tabulated(table) => {
                let (ts, ws): (Vec<f64>, Vec<f64>) = table
                    .knots()
                    .iter()
                    .zip(table.values())
                    .filter(|(t, _)| **t <= duration)
                    .map(|(t, w)| (duration - t, *w))
                    .rev()
                    .unzip();
                Self::Tabulated(MonotoneCubic::new(ts, ws)?)
            }
        })
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {x}")))
    }
}

fn linear_scale_positive(v: f64, t_final: f64) -> Result<()> {
    let z = 1.0 + v * t_final;
    if z > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("scale 1 + v t = {z} is not positive at t = {t_final}")))
    }
}

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Carlson slopes).
///
/// Knots must start at `t = 0` and increase strictly.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    ts: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(ts: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if ts.len() != ys.len() {
            return Err(invalid("knot and value arrays differ in length"));
        }
        if ts.len() < 2 {
            return Err(invalid("tabulated profile needs at least two samples"));
        }
        if ts[0].abs() > 1e-12 {
            return Err(invalid(format!("tabulated profile must start at t = 0, got {}", ts[0])));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) || ts.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(invalid("knots must be finite and strictly increasing"));
        }
        if ys.iter().any(|&y| y <= 0.0) {
            return Err(invalid("tabulated frequencies must be positive"));
        }
        let slopes = fritsch_carlson(&ts, &ys);
        Ok(Self { ts, ys, slopes })
    }

    pub fn knots(&self) -> &[f64] {
        &self.ts
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn end(&self) -> f64 {
        self.ts[self.ts.len() - 1]
    }

    pub fn eval(&self, t: f64) -> Option<f64> {
        let tol = 1e-12 * self.end().max(1.0);
        if t < -tol || t > self.end() + tol {
            return None;
        }
        let i = match self.ts.partition_point(|&k| k <= t) {
            0 => 0,
            n => (n - 1).min(self.ts.len() - 2),
        };
        let h = self.ts[i + 1] - self.ts[i];
        let s = (t - self.ts[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1])
    }
}

fn fritsch_carlson(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let secants: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (ts[i + 1] - ts[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for i in 1..n - 1 {
        m[i] = if secants[i - 1] * secants[i] <= 0.0 { 0.0 } else { 0.5 * (secants[i - 1] + secants[i]) };
    }
    for i in 0..n - 1 {
        let d = secants[i];
        if d == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / d;
        let b = m[i + 1] / d;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[i] = tau * a * d;
            m[i + 1] = tau * b * d;
        }
    }
    m
}
