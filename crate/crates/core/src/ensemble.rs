//! Coupled oscillators `H = ½ Σ p_i² + ½ qᵀ W(t) q` and thermal ensembles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{domain, invalid, Error, Result};
use crate::ode::{integrate_linear, IntegratorConfig};

/// Off-diagonal endpoint couplings below this (relative to the diagonal) count as zero.
pub const ENDPOINT_DIAGONAL_TOL: f64 = 1e-12;

/// `a_i† → Σ_k A_ik a_k† + B_ik a_k`, mapping the initial normal modes to the
/// final ones. For one mode `A = α*`, `B = β*` of
/// [`to_bogoliubov`](crate::symplectic::to_bogoliubov).
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodeBogoliubov {
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
    pub omega_initial: Vec<f64>,
    pub omega_final: Vec<f64>,
}

impl MultimodeBogoliubov {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Largest entrywise defects of `A A† − B B† = I` and `A Bᵀ − B Aᵀ = 0`.
    pub fn relation_defects(&self) -> (f64, f64) {
        let n = self.dim();
        let first = &self.a * self.a.adjoint() - &self.b * self.b.adjoint() - DMatrix::<Complex64>::identity(n, n);
        let second = &self.a * self.b.transpose() - &self.b * self.a.transpose();
        let max = |m: DMatrix<Complex64>| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        (max(first), max(second))
    }

    /// Mean occupation of every final mode for initial occupations `n_k`.
    pub fn final_occupations(&self, occupations: &[f64]) -> Result<Vec<f64>> {
        self.check_len(occupations.len())?;
        Ok((0..self.dim())
            .map(|i| {
                occupations
                    .iter()
                    .enumerate()
                    .map(|(k, n)| self.a[(i, k)].norm_sqr() * n + self.b[(i, k)].norm_sqr() * (n + 1.0))
                    .sum()
            })
            .collect())
    }

    /// `(E_i, E_f)` with `E = Σ ω (n + ½)` before and after.
    pub fn energies(&self, occupations: &[f64]) -> Result<(f64, f64)> {
        let after = self.final_occupations(occupations)?;
        let e0 = self.omega_initial.iter().zip(occupations).map(|(w, n)| w * (n + 0.5)).sum();
        let e1 = self.omega_final.iter().zip(&after).map(|(w, n)| w * (n + 0.5)).sum();
        Ok((e0, e1))
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }
}

/// `N_f = Σ_k n_k + Σ_{i,k} |B_ik|² (2 n_k + 1)`.
pub fn phonon_number_final(bg: &MultimodeBogoliubov, occupations: &[f64]) -> Result<f64> {
    bg.check_len(occupations.len())?;
    if occupations.iter().any(|n| !(*n >= 0.0)) {
        return Err(invalid("occupations must be nonnegative"));
    }
    let mut total: f64 = occupations.iter().sum();
    for i in 0..bg.dim() {
        for (k, n) in occupations.iter().enumerate() {
            total += bg.b[(i, k)].norm_sqr() * (2.0 * n + 1.0);
        }
    }
    Ok(total)
}

fn endpoint_frequencies(w: &DMatrix<f64>, at: &str) -> Result<Vec<f64>> {
    let n = w.nrows();
    if w.ncols() != n || n == 0 {
        return Err(invalid(format!("coupling at {at} must be a nonempty square matrix")));
    }
    let diag: Vec<f64> = (0..n).map(|i| w[(i, i)]).collect();
    if diag.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(domain(format!("coupling at {at} needs positive diagonal")));
    }
    let scale = diag.iter().cloned().fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..n {
            if i != j && w[(i, j)].abs() > ENDPOINT_DIAGONAL_TOL * scale {
                return Err(invalid(format!("coupling at {at} is not diagonal: W[{i},{j}] = {}", w[(i, j)])));
            }
        }
    }
    Ok(diag.into_iter().map(f64::sqrt).collect())
}

/// Integrates the `2N` Heisenberg equations for the frequency-squared matrix
/// `coupling(t)` over `[0, t_final]` and returns the transformation between
/// the initial and final normal modes.
///
/// `W` must be diagonal at both ends and symmetric positive-definite at every
/// evaluated time.
pub fn multimode_from_hamiltonian<F>(coupling: F, t_final: f64, cfg: &IntegratorConfig) -> Result<MultimodeBogoliubov>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    cfg.validate()?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(invalid(format!("final time must be finite and nonnegative, got {t_final}")));
    }
    let w0 = endpoint_frequencies(&coupling(0.0), "t = 0")?;
    let w1 = endpoint_frequencies(&coupling(t_final), "t_final")?;
    let n = w0.len();
    if w1.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w1.len() });
    }
    let mut bad: Option<String> = None;
    let a = |t: f64, m: &mut DMatrix<f64>| {
        let w = coupling(t);
        if bad.is_none() {
            let asym = (&w - w.transpose()).amax();
            if w.shape() != (n, n) || asym > 1e-12 * w.amax() || w.clone().cholesky().is_none() {
                bad = Some(format!("coupling is not symmetric positive-definite at t = {t}"));
            }
        }
        m.fill(0.0);
        for i in 0..n {
            m[(i, n + i)] = 1.0;
            for j in 0..n {
                m[(n + i, j)] = -w.get((i, j)).copied().unwrap_or(f64::NAN);
            }
        }
    };
    let mut y = DMatrix::identity(2 * n, 2 * n);
    let mut budget = cfg.max_steps;
    integrate_linear(a, 0.0, t_final, &mut y, cfg, t_final, &mut budget)?;
    if let Some(msg) = bad {
        return Err(domain(msg));
    }
    Ok(from_fundamental(&y, &w0, &w1))
}

/// Converts `[q(T); p(T)] = M [q(0); p(0)]` into mode coefficients.
fn from_fundamental(m: &DMatrix<f64>, w0: &[f64], w1: &[f64]) -> MultimodeBogoliubov {
    let n = w0.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        let wi = w1[i];
        for k in 0..n {
            let wk = w0[k];
            let (qq, qp, pq, pp) = (m[(i, k)], m[(i, n + k)], m[(n + i, k)], m[(n + i, n + k)]);
            let re_a = (wi / wk).sqrt() * qq + (wk / wi).sqrt() * pp;
            let re_b = (wi / wk).sqrt() * qq - (wk / wi).sqrt() * pp;
            let cross = (wi * wk).sqrt() * qp;
            let cross2 = pq / (wi * wk).sqrt();
            a[(i, k)] = Complex64::new(0.5 * re_a, 0.5 * (cross - cross2));
            b[(i, k)] = Complex64::new(0.5 * re_b, -0.5 * (cross + cross2));
        }
    }
    MultimodeBogoliubov { a, b, omega_initial: w0.to_vec(), omega_final: w1.to_vec() }
}

/// Random cyclic coupled system: mode frequencies
/// `ω_i exp(a_i sin(πt/T) + b_i sin(2πt/T))` plus a transient coupling
/// `sin²(πt/T) K`, with `K` small enough (Gershgorin) to keep `W` positive-definite.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomCoupling {
    pub omegas: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub k: DMatrix<f64>,
    pub duration: f64,
}

impl RandomCoupling {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        let omegas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let floor = omegas
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(w, (x, y))| (w * (-(x.abs() + y.abs())).exp()).powi(2))
            .fold(f64::INFINITY, f64::min);
        let bound = if n > 1 { 0.8 * floor / (n - 1) as f64 } else { 0.0 };
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let x = rng.gen_range(-bound..=bound);
                k[(i, j)] = x;
                k[(j, i)] = x;
            }
        }
        let duration = rng.gen_range(1.0..15.0);
        Self { omegas, a, b, k, duration }
    }

    pub fn dim(&self) -> usize {
        self.omegas.len()
    }

    pub fn omega(&self, i: usize, t: f64) -> f64 {
        let ph = std::f64::consts::PI * t / self.duration;
        self.omegas[i] * (self.a[i] * ph.sin() + self.b[i] * (2.0 * ph).sin()).exp()
    }

    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        let n = self.dim();
        let g = (std::f64::consts::PI * t / self.duration).sin().powi(2);
        let mut w = &self.k * g;
        for i in 0..n {
            w[(i, i)] = self.omega(i, t).powi(2);
        }
        // exact zeros at the ends
        if t <= 0.0 || t >= self.duration {
            w.fill_lower_triangle(0.0, 1);
            w.fill_upper_triangle(0.0, 1);
        }
        w
    }

    pub fn propagate(&self, cfg: &IntegratorConfig) -> Result<MultimodeBogoliubov> {
        multimode_from_hamiltonian(|t| self.matrix(t), self.duration, cfg)
    }
}

/// `(E_initial, E_final)` of independent thermal modes (`ℏ = k = 1`), each
/// mode's mean energy scaled by its gain factor.
pub fn thermal_gain(omegas: &[f64], temperature: f64, gains: &[f64]) -> Result<(f64, f64)> {
    if omegas.len() != gains.len() {
        return Err(Error::DimensionMismatch { expected: omegas.len(), got: gains.len() });
    }
    if !(temperature > 0.0) || omegas.iter().any(|w| !(*w > 0.0)) {
        return Err(invalid("frequencies and temperature must be positive"));
    }
    if gains.iter().any(|r| !(*r >= 1.0)) {
        return Err(invalid("gain factors of closed cycles are at least one"));
    }
    let mean =
        DVector::from_iterator(omegas.len(), omegas.iter().map(|w| w * (1.0 / (w / temperature).exp_m1() + 0.5)));
    let e0 = mean.sum();
    let e1 = mean.iter().zip(gains).map(|(e, r)| e * r).sum();
    Ok((e0, e1))
}
