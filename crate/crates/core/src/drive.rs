//! Scalar time-dependent drives: the force `κ(t)` of the forced oscillator
//! and the perturbation amplitude `δω(t)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

/// Endpoint tolerance for drives that must vanish at both ends.
pub const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Clone)]
pub enum Drive {
    Zero,
    /// Closure over `[0, duration]`.
    Analytic {
        duration: f64,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// Uniform samples `values[i] = κ(i·dt)`, cubic Hermite interpolation in between.
    Tabulated {
        dt: f64,
        values: Vec<f64>,
    },
}

impl fmt::Debug for Drive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Analytic { duration, .. } => write!(f, "Analytic {{ duration: {duration} }}"),
            Self::Tabulated { dt, values } => write!(f, "Tabulated {{ dt: {dt}, len: {} }}", values.len()),
        }
    }
}

impl Drive {
    pub fn analytic(duration: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Analytic { duration, f: Arc::new(f) }
    }

    /// Samples `f` on `samples` equally spaced points spanning `[0, duration]`.
    pub fn sample(duration: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if samples < 2 || !(duration > 0.0) {
            return Err(invalid("sampled drive needs at least two points and positive duration"));
        }
        let dt = duration / (samples - 1) as f64;
        Ok(Self::Tabulated { dt, values: (0..samples).map(|i| f(i as f64 * dt)).collect() })
    }

    /// `a·f(t)`.
    pub fn scaled(&self, a: f64) -> Self {
        match self {
            Self::Zero => Self::Zero,
            Self::Analytic { duration, f } => {
                let f = Arc::clone(f);
                Self::analytic(*duration, move |t| a * f(t))
            }
            Self::Tabulated { dt, values } => {
                Self::Tabulated { dt: *dt, values: values.iter().map(|v| a * v).collect() }
            }
        }
    }

    pub fn duration(&self) -> Option<f64> {
        match self {
            Self::Zero => None,
            Self::Analytic { duration, .. } => Some(*duration),
            Self::Tabulated { dt, values } => Some(dt * (values.len() - 1) as f64),
        }
    }

    /// Value at `t`; zero outside the drive's support.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Analytic { duration, f } => {
                if (0.0..=*duration).contains(&t) {
                    f(t)
                } else {
                    0.0
                }
            }
            Self::Tabulated { dt, values } => {
                let n = values.len();
                let x = t / dt;
                if !(x >= 0.0 && x <= (n - 1) as f64) {
                    return 0.0;
                }
                let i = (x.floor() as usize).min(n - 2);
                let s = x - i as f64;
                let slope = |j: usize| {
                    let lo = j.saturating_sub(1);
                    let hi = (j + 1).min(n - 1);
                    (values[hi] - values[lo]) / (hi - lo) as f64
                };
                let (y0, y1, m0, m1) = (values[i], values[i + 1], slope(i), slope(i + 1));
                let (s2, s3) = (s * s, s * s * s);
                (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                    + (s3 - 2.0 * s2 + s) * m0
                    + (-2.0 * s3 + 3.0 * s2) * y1
                    + (s3 - s2) * m1
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
            Self::Analytic { .. } => false,
        }
    }

    /// Checks finiteness and that the drive vanishes at `0` and at the end of its support.
    pub fn validate_endpoints(&self) -> Result<()> {
        let (first, last) = match self {
            Self::Zero => return Ok(()),
            Self::Analytic { duration, f } => {
                if !(*duration > 0.0 && duration.is_finite()) {
                    return Err(invalid(format!("drive duration must be positive, got {duration}")));
                }
                (f(0.0), f(*duration))
            }
            Self::Tabulated { dt, values } => {
                if values.len() < 2 || !(*dt > 0.0 && dt.is_finite()) {
                    return Err(invalid("tabulated drive needs two or more samples and a positive step"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("tabulated drive has non-finite samples"));
                }
                (values[0], values[values.len() - 1])
            }
        };
        if first.abs() > ENDPOINT_TOL || last.abs() > ENDPOINT_TOL {
            return Err(invalid(format!("drive must vanish at both endpoints, got {first} and {last}")));
        }
        Ok(())
    }
}
