//! Bessel functions `J_ν`, `Y_ν` of real non-negative order and positive argument.
//!
//! Three regimes:
//!
//! * `x < 2`: Temme's series for `Y_μ`, `Y_{μ+1}` with `|μ| ≤ ½`;
//! * `2 ≤ x` below the asymptotic threshold: Steed's method (the continued
//!   fraction for `J'_ν/J_ν` combined with the complex continued fraction for
//!   `(J'_μ + iY'_μ)/(J_μ + iY_μ)`), closed by the Wronskian;
//! * large `x`: Hankel's asymptotic expansion.
//!
//! `J` is normalised through the Wronskian `J_ν Y'_ν − J'_ν Y_ν = 2/(πx)`, and `Y`
//! is carried upward from `μ` by forward recurrence, which is stable for `Y`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
const FPMIN: f64 = f64::MIN_POSITIVE / f64::EPSILON;
const MAX_ITER: usize = 1_000_000;
const TEMME_MAX_X: f64 = 2.0;

/// Taylor coefficients of `1/Γ(z)` about `z = 0`.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Values and first derivatives of `J_ν` and `Y_ν` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselJY {
    pub j: f64,
    pub y: f64,
    pub jp: f64,
    pub yp: f64,
}

impl BesselJY {
    /// `J_ν Y'_ν − J'_ν Y_ν`; equals `2/(πx)` exactly.
    pub fn wronskian(&self) -> f64 {
        self.j * self.yp - self.jp * self.y
    }
}

/// Evaluates `J_ν(x)`, `Y_ν(x)` and their derivatives for `ν ≥ 0`, `x > 0`.
pub fn bessel_jy(nu: f64, x: f64) -> Result<BesselJY> {
    let fail = |reason| Error::Bessel { order: nu, arg: x, reason };
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(fail("order must be finite and non-negative"));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(fail("argument must be finite and positive"));
    }
    let out = if x >= asymptotic_threshold(nu) {
        hankel(nu, x)
    } else {
        steed_temme(nu, x).ok_or_else(|| fail("continued fraction did not converge"))?
    };
    if [out.j, out.y, out.jp, out.yp].iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(fail("result not representable in double precision"))
    }
}

pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    bessel_jy(nu, x).map(|b| b.j)
}

pub fn bessel_y(nu: f64, x: f64) -> Result<f64> {
    bessel_jy(nu, x).map(|b| b.y)
}

fn asymptotic_threshold(nu: f64) -> f64 {
    // the smallest term of the Hankel series is ~exp(-2x); it has to fall
    // below machine precision before the terms start growing (k ~ ν)
    (25.0f64).max(2.0 * nu * nu)
}

/// `(Γ₁, Γ₂, 1/Γ(1+μ), 1/Γ(1−μ))` for Temme's series, where
/// `Γ₁ = (1/Γ(1−μ) − 1/Γ(1+μ))/(2μ)` and `Γ₂ = (1/Γ(1−μ) + 1/Γ(1+μ))/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // 1/Γ(1+μ) = Σ c_k μ^{k-1}; split into even and odd powers of μ
    let mu2 = mu * mu;
    let mut even = 0.0; // Σ c_{2j+1} μ^{2j}
    let mut odd = 0.0; //  Σ c_{2j+2} μ^{2j}
    for j in (0..RECIP_GAMMA.len() / 2).rev() {
        even = even * mu2 + RECIP_GAMMA[2 * j];
        odd = odd * mu2 + RECIP_GAMMA[2 * j + 1];
    }
    let gampl = even + mu * odd;
    let gammi = even - mu * odd;
    (-odd, even, gampl, gammi)
}

fn steed_temme(nu: f64, x: f64) -> Option<BesselJY> {
    let nl = if x < TEMME_MAX_X { (nu + 0.5).floor() as usize } else { (nu - x + 1.5).floor().max(0.0) as usize };
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1 by modified Lentz: f = J'_ν / J_ν, with the sign of J_ν tracked via isign
    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() <= EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }

    // downward recurrence from ν to μ on unnormalised values
    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let rjl_nu = rjl;
    let rjp_nu = rjpl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    let (rjmu, mut rymu, mut ry1);
    if x < TEMME_MAX_X {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = 2.0 / PI * fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let e = e.exp();
        let mut p = e / (gampl * PI);
        let mut q = 1.0 / (e * PI * gammi);
        let pimu2 = 0.5 * pimu;
        let fact3 = if pimu2.abs() < EPS { 1.0 } else { pimu2.sin() / pimu2 };
        let r = PI * pimu2 * fact3 * fact3;
        let mut c = 1.0;
        let d = -x2 * x2;
        let mut sum = ff + r * q;
        let mut sum1 = p;
        let mut converged = false;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * (ff + r * q);
            sum += del;
            let del1 = c * p - fi * del;
            sum1 += del1;
            if del.abs() < (1.0 + sum.abs()) * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return None;
        }
        rymu = -sum;
        ry1 = -sum1 * xi2;
        // J_μ from its own series: the Wronskian route cancels badly for μ < 0 and small x
        let q = -x2 * x2;
        let mut term = (xmu * x2.ln()).exp() * gampl;
        let mut sum = term;
        for m in 1..MAX_ITER {
            let fm = m as f64;
            term *= q / (fm * (fm + xmu));
            sum += term;
            if term.abs() <= EPS * sum.abs() {
                break;
            }
        }
        rjmu = sum;
    } else {
        // CF2: p + iq = (J'_μ + iY'_μ)/(J_μ + iY_μ)
        let mut a = 0.25 - xmu2;
        let mut p = -0.5 * xi;
        let mut q = 1.0;
        let br = 2.0 * x;
        let mut bi = 2.0;
        let mut fact = a * xi / (p * p + q * q);
        let mut cr = br + q * fact;
        let mut ci = bi + p * fact;
        let mut den = br * br + bi * bi;
        let mut dr = br / den;
        let mut di = -bi / den;
        let mut dlr = cr * dr - ci * di;
        let mut dli = cr * di + ci * dr;
        let mut temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        let mut converged = false;
        for i in 1..MAX_ITER {
            a += 2.0 * i as f64;
            bi += 2.0;
            dr = a * dr + br;
            di = a * di + bi;
            if dr.abs() + di.abs() < FPMIN {
                dr = FPMIN;
            }
            fact = a / (cr * cr + ci * ci);
            cr = br + cr * fact;
            ci = bi - ci * fact;
            if cr.abs() + ci.abs() < FPMIN {
                cr = FPMIN;
            }
            den = dr * dr + di * di;
            dr /= den;
            di /= -den;
            dlr = cr * dr - ci * di;
            dli = cr * di + ci * dr;
            temp = p * dlr - q * dli;
            q = p * dli + q * dlr;
            p = temp;
            if (dlr - 1.0).abs() + dli.abs() < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return None;
        }
        let gam = (p - f) / q;
        let mag = (w / ((p - f) * gam + q)).sqrt();
        rjmu = mag.copysign(rjl);
        rymu = rjmu * gam;
        let rymup = rymu * (p + q / gam);
        ry1 = xmu * xi * rymu - rymup;
    }

    let scale = rjmu / rjl;
    let j = rjl_nu * scale;
    let jp = rjp_nu * scale;
    for i in 1..=nl {
        let rytemp = (xmu + i as f64) * xi2 * ry1 - rymu;
        rymu = ry1;
        ry1 = rytemp;
    }
    let y = rymu;
    let yp = nu * xi * rymu - ry1;
    Some(BesselJY { j, y, jp, yp })
}

/// Hankel's expansion `P(ν, x)`, `Q(ν, x)`.
fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let inv8x = 1.0 / (8.0 * x);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) * inv8x / k as f64;
        if term.abs() > prev || term == 0.0 {
            break;
        }
        prev = term.abs();
        // signs over (Q₁, P₂, Q₃, P₄, Q₅, ...) run +, -, -, +, +, ...
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if term.abs() < EPS * 1e-3 {
            break;
        }
    }
    (p, q)
}

fn hankel_jy(nu: f64, x: f64) -> (f64, f64) {
    let (p, q) = hankel_pq(nu, x);
    // χ = x − (ν/2 + ¼)π, expanded so that large x keeps full phase accuracy
    let (sx, cx) = x.sin_cos();
    let (so, co) = ((0.5 * nu + 0.25) * PI).sin_cos();
    let s = sx * co - cx * so;
    let c = cx * co + sx * so;
    let amp = (2.0 / (PI * x)).sqrt();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

fn hankel(nu: f64, x: f64) -> BesselJY {
    let (j, y) = hankel_jy(nu, x);
    let (j1, y1) = hankel_jy(nu + 1.0, x);
    BesselJY { j, y, jp: nu / x * j - j1, yp: nu / x * y - y1 }
}
