//! Evolution matrices of the Heisenberg picture and the quantities derived
//! from them: gain factor, final energies, and the single-mode Bogoliubov map.
//!
//! Units are natural (ℏ = m = 1). An [`EvolutionMatrix`] maps the initial
//! canonical pair to the evolved one,
//!
//! ```text
//! q(t) = a q + b p
//! p(t) = c q + d p
//! ```
//!
//! and is symplectic exactly when `ad - bc = 1`.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `|det - 1|` for a single propagator output.
pub const DET_TOL_PROPAGATOR: f64 = 1e-9;

/// Tolerance on `|det - 1|` for long compositions (N-cycle products) and
/// for accepting a matrix as input to the gain factor.
pub const DET_TOL_COMPOSED: f64 = 1e-6;

/// Real 2×2 matrix acting on `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionMatrix {
    /// `q → q`
    pub a: f64,
    /// `p → q`
    pub b: f64,
    /// `q → p`
    pub c: f64,
    /// `p → p`
    pub d: f64,
}

impl EvolutionMatrix {
    pub const IDENTITY: Self = Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Builds a matrix from its two columns, i.e. the images of `(q, p) = (1, 0)`
    /// and `(0, 1)`.
    pub const fn from_columns(col_q: [f64; 2], col_p: [f64; 2]) -> Self {
        Self { a: col_q[0], b: col_p[0], c: col_q[1], d: col_p[1] }
    }

    /// Free evolution at unit frequency for a time `theta`: `[[cos, sin], [-sin, cos]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { a: c, b: s, c: -s, d: c }
    }

    /// `diag(s, 1/s)`, a pure squeeze.
    pub fn squeeze(s: f64) -> Self {
        Self { a: s, b: 0.0, c: 0.0, d: 1.0 / s }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `|det - 1|`
    pub fn det_error(&self) -> f64 {
        (self.det() - 1.0).abs()
    }

    pub fn transpose(&self) -> Self {
        Self { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    /// Inverse of a symplectic matrix (the adjugate divided by the determinant).
    pub fn inverse(&self) -> Self {
        let det = self.det();
        Self { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det }
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn apply(&self, q: f64, p: f64) -> (f64, f64) {
        (self.a * q + self.b * p, self.c * q + self.d * p)
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::IDENTITY;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries().iter().zip(other.entries()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Half the squared Frobenius norm, `½ Tr[S Sᵀ]`, without any symplecticity check.
    pub fn half_trace_sst(&self) -> f64 {
        0.5 * (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d)
    }

    /// `‖S Sᵀ − I‖` (max entry), zero for orthogonal matrices.
    pub fn orthogonality_defect(&self) -> f64 {
        let sst = *self * self.transpose();
        sst.max_abs_diff(&Self::IDENTITY)
    }

    fn check_symplectic(&self, tol: f64) -> Result<()> {
        let det = self.det();
        if (det - 1.0).abs() > tol || !det.is_finite() {
            return Err(Error::NotSymplectic { det });
        }
        Ok(())
    }
}

impl Default for EvolutionMatrix {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for EvolutionMatrix {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }
}

/// Evolution `s1` followed by `s2`, i.e. the product `s2 · s1`.
pub fn compose(s2: &EvolutionMatrix, s1: &EvolutionMatrix) -> EvolutionMatrix {
    *s2 * *s1
}

/// Energy eigenstate `|n⟩` of an oscillator with frequency `omega0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryState {
    pub n: u32,
    pub omega0: f64,
}

impl StationaryState {
    pub fn new(n: u32, omega0: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidInput(format!("omega0 must be positive, got {omega0}")));
        }
        Ok(Self { n, omega0 })
    }

    pub fn ground() -> Self {
        Self { n: 0, omega0: 1.0 }
    }

    /// Normalized state with `omega0 = 1`.
    pub fn level(n: u32) -> Self {
        Self { n, omega0: 1.0 }
    }

    pub fn energy(&self) -> f64 {
        self.omega0 * (f64::from(self.n) + 0.5)
    }

    /// Second moments from the Virial theorem: `ω₀²⟨q²⟩ = ⟨p²⟩ = E`, `⟨D⟩ = 0`.
    pub fn moments(&self) -> MomentTriple {
        let level = f64::from(self.n) + 0.5;
        MomentTriple { qq: level / self.omega0, pp: level * self.omega0, d: 0.0 }
    }
}

/// Second moments `⟨q²⟩`, `⟨p²⟩` and `⟨D⟩ = ½⟨qp + pq⟩` of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTriple {
    pub qq: f64,
    pub pp: f64,
    pub d: f64,
}

impl MomentTriple {
    pub fn new(qq: f64, pp: f64, d: f64) -> Result<Self> {
        let m = Self { qq, pp, d };
        if qq < 0.0 || pp < 0.0 || m.uncertainty_product() < 0.25 - 1e-9 {
            return Err(Error::InvalidInput(format!(
                "moments violate the uncertainty relation: qq = {qq}, pp = {pp}, d = {d}"
            )));
        }
        Ok(m)
    }

    /// `⟨q²⟩⟨p²⟩ − ⟨D⟩²`, at least ¼ for physical states.
    pub fn uncertainty_product(&self) -> f64 {
        self.qq * self.pp - self.d * self.d
    }

    /// Moments after the linear evolution `s`.
    pub fn propagate(&self, s: &EvolutionMatrix) -> Self {
        let EvolutionMatrix { a, b, c, d } = *s;
        Self {
            qq: a * a * self.qq + b * b * self.pp + 2.0 * a * b * self.d,
            pp: c * c * self.qq + d * d * self.pp + 2.0 * c * d * self.d,
            d: a * c * self.qq + b * d * self.pp + (a * d + b * c) * self.d,
        }
    }

    /// `½(⟨p²⟩ + ω²⟨q²⟩)`
    pub fn energy(&self, omega: f64) -> f64 {
        0.5 * (self.pp + omega * omega * self.qq)
    }
}

/// Complex coefficients of `a' = α a + β a†` for a single mode at unit frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovPair {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl BogoliubovPair {
    /// `[a', a'†] = |α|² − |β|²`, equal to one for a canonical transformation.
    pub fn commutator(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }
}

/// Gain factor `R = ½(a² + b² + c² + d²)` of a cycle-closing evolution.
///
/// Rejects matrices whose determinant is off by more than [`DET_TOL_COMPOSED`]:
/// the lower bound `R ≥ 1` relies on `det = 1`.
pub fn gain_factor(s: &EvolutionMatrix) -> Result<f64> {
    s.check_symplectic(DET_TOL_COMPOSED)?;
    Ok(s.half_trace_sst())
}

/// Mean energy `½⟨p_H² + ω_f² q_H²⟩` after evolving a stationary state by `s`
/// and measuring with the Hamiltonian of frequency `omega_final`.
///
/// For `state.omega0 = 1` this is `½E_in[ω_f²(a² + b²) + c² + d²]`; other
/// reference frequencies use the corresponding Virial moments.
pub fn final_energy(s: &EvolutionMatrix, state: &StationaryState, omega_final: f64) -> f64 {
    final_energy_general(s, &state.moments(), omega_final)
}

/// Final energy for arbitrary initial second moments.
pub fn final_energy_general(s: &EvolutionMatrix, m: &MomentTriple, omega_final: f64) -> f64 {
    let EvolutionMatrix { a, b, c, d } = *s;
    let qq = a * a * m.qq + b * b * m.pp + 2.0 * a * b * m.d;
    let pp = c * c * m.qq + d * d * m.pp + 2.0 * c * d * m.d;
    0.5 * (omega_final * omega_final * qq + pp)
}

/// Single-mode Bogoliubov coefficients of a symplectic matrix, in the unit-frequency
/// mode basis `a = (q + i p)/√2`.
pub fn to_bogoliubov(s: &EvolutionMatrix) -> Result<BogoliubovPair> {
    s.check_symplectic(DET_TOL_COMPOSED)?;
    let EvolutionMatrix { a, b, c, d } = *s;
    Ok(BogoliubovPair {
        alpha: Complex64::new(0.5 * (a + d), 0.5 * (c - b)),
        beta: Complex64::new(0.5 * (a - d), 0.5 * (c + b)),
    })
}

/// `E_f = ω[½ + |α|² n + |β|² (n + 1)]`, the mean energy of `|n⟩` after the mode map.
pub fn bogoliubov_energy(bp: &BogoliubovPair, state: &StationaryState) -> f64 {
    let n = f64::from(state.n);
    state.omega0 * (0.5 + bp.alpha.norm_sqr() * n + bp.beta.norm_sqr() * (n + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    /// Random symplectic matrix as rotation · squeeze · rotation.
    fn symplectic(t1: f64, r: f64, t2: f64) -> EvolutionMatrix {
        EvolutionMatrix::rotation(t1) * EvolutionMatrix::squeeze(r.exp()) * EvolutionMatrix::rotation(t2)
    }

    #[test]
    fn compose_examples() {
        let i = EvolutionMatrix::IDENTITY;
        assert_eq!(compose(&i, &i), i);

        let r = compose(&EvolutionMatrix::rotation(0.3), &EvolutionMatrix::rotation(1.1));
        assert!(r.max_abs_diff(&EvolutionMatrix::rotation(1.4)) < 1e-15);

        let sq = compose(&EvolutionMatrix::squeeze(2.0), &EvolutionMatrix::squeeze(0.5));
        assert_eq!(sq, i);
    }

    #[test]
    fn compose_order_is_second_after_first() {
        let s1 = EvolutionMatrix::new(1.0, 1.0, 0.0, 1.0);
        let s2 = EvolutionMatrix::new(1.0, 0.0, 1.0, 1.0);
        // s2·s1 = [[1,1],[1,2]]
        assert_eq!(compose(&s2, &s1), EvolutionMatrix::new(1.0, 1.0, 1.0, 2.0));
    }

    #[test]
    fn gain_factor_examples() {
        assert_eq!(gain_factor(&EvolutionMatrix::IDENTITY).unwrap(), 1.0);
        for theta in [0.1, 1.0, 2.5, -4.0] {
            assert!(close(gain_factor(&EvolutionMatrix::rotation(theta)).unwrap(), 1.0, 1e-15));
        }
        assert_eq!(gain_factor(&EvolutionMatrix::squeeze(2.0)).unwrap(), 2.125);
    }

    #[test]
    fn gain_factor_rejects_non_symplectic() {
        let err = gain_factor(&EvolutionMatrix::new(2.0, 0.0, 0.0, 2.0)).unwrap_err();
        assert!(matches!(err, Error::NotSymplectic { det } if det == 4.0));
        assert!(to_bogoliubov(&EvolutionMatrix::new(1.0, 0.0, 0.0, 1.1)).is_err());
        // within the composed tolerance
        assert!(gain_factor(&EvolutionMatrix::new(1.0, 0.0, 0.0, 1.0 + 5e-7)).is_ok());
    }

    #[test]
    fn final_energy_examples() {
        assert_eq!(final_energy(&EvolutionMatrix::IDENTITY, &StationaryState::ground(), 1.0), 0.5);
        let s = EvolutionMatrix::squeeze(2.0);
        for n in [0, 3, 11] {
            let st = StationaryState::level(n);
            assert!(close(final_energy(&s, &st, 1.0), st.energy() * 2.125, 1e-12));
        }
    }

    #[test]
    fn final_energy_general_examples() {
        let m = MomentTriple::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(final_energy_general(&EvolutionMatrix::IDENTITY, &m, 1.0), 1.0);
        let m = MomentTriple::new(2.0, 0.5, 0.0).unwrap();
        let e = final_energy_general(&EvolutionMatrix::rotation(FRAC_PI_2), &m, 1.0);
        assert!(close(e, 1.25, 1e-15));
    }

    #[test]
    fn time_reversed_cycle_lowers_energy_of_squeezed_state() {
        // Start from the moments a gain-R evolution produces out of the ground
        // state; undoing that evolution returns to E_in < R·E_in.
        let s = symplectic(0.4, 1.2, -0.7);
        let ground = StationaryState::ground();
        let squeezed = ground.moments().propagate(&s);
        let before = squeezed.energy(1.0);
        let after = final_energy_general(&s.inverse(), &squeezed, 1.0);
        assert!(close(after, ground.energy(), 1e-12));
        assert!(after < before);
        assert!(after < ground.energy() * gain_factor(&s).unwrap());
    }

    #[test]
    fn moment_triple_rejects_unphysical() {
        assert!(MomentTriple::new(0.1, 0.1, 0.0).is_err());
        assert!(MomentTriple::new(0.5, 0.5, 0.0).is_ok());
        assert!(MomentTriple::new(1.0, 1.0, 0.9).is_err());
    }

    #[test]
    fn bogoliubov_examples() {
        let bp = to_bogoliubov(&EvolutionMatrix::IDENTITY).unwrap();
        assert_eq!(bp.alpha, Complex64::new(1.0, 0.0));
        assert_eq!(bp.beta, Complex64::new(0.0, 0.0));

        let theta = 0.83;
        let bp = to_bogoliubov(&EvolutionMatrix::rotation(theta)).unwrap();
        assert!((bp.alpha - Complex64::from_polar(1.0, -theta)).norm() < 1e-15);
        assert!(bp.beta.norm() < 1e-15);

        let bp = to_bogoliubov(&EvolutionMatrix::squeeze(2.0)).unwrap();
        assert_eq!(bp.alpha, Complex64::new(1.25, 0.0));
        assert_eq!(bp.beta, Complex64::new(0.75, 0.0));
        assert_eq!(bp.commutator(), 1.0);
        assert_eq!(1.0 + 2.0 * bp.beta.norm_sqr(), 2.125);
    }

    #[test]
    fn bogoliubov_energy_examples() {
        let trivial = BogoliubovPair { alpha: Complex64::new(1.0, 0.0), beta: Complex64::new(0.0, 0.0) };
        assert_eq!(bogoliubov_energy(&trivial, &StationaryState::level(5)), 5.5);

        let bp = BogoliubovPair { alpha: Complex64::new(1.25, 0.0), beta: Complex64::new(0.75, 0.0) };
        let e = bogoliubov_energy(&bp, &StationaryState::ground());
        assert_eq!(e, 1.0625);
        assert_eq!(e, final_energy(&EvolutionMatrix::squeeze(2.0), &StationaryState::ground(), 1.0));

        let bp = BogoliubovPair { alpha: Complex64::new(2f64.sqrt(), 0.0), beta: Complex64::new(0.0, 1.0) };
        assert!(close(bogoliubov_energy(&bp, &StationaryState::level(1)), 4.5, 1e-15));
    }

    #[test]
    fn pow_matches_repeated_product() {
        let s = symplectic(0.2, 0.5, 1.3);
        let mut acc = EvolutionMatrix::IDENTITY;
        for n in 0..9 {
            assert!(s.pow(n).max_abs_diff(&acc) < 1e-12 * (1.0 + acc.half_trace_sst()));
            acc = s * acc;
        }
    }

    #[test]
    fn universality_over_levels() {
        let s = symplectic(1.0, 0.9, 0.1);
        let ratios: Vec<f64> = [0, 1, 5, 20]
            .iter()
            .map(|&n| {
                let st = StationaryState::level(n);
                final_energy(&s, &st, 1.0) / st.energy()
            })
            .collect();
        for r in &ratios {
            assert!(close(*r, ratios[0], 1e-14));
        }
        assert!(close(ratios[0], gain_factor(&s).unwrap(), 1e-14));
    }

    #[test]
    fn quarter_turn_inverse_is_reverse_rotation() {
        let s = EvolutionMatrix::rotation(PI / 3.0);
        assert!(s.inverse().max_abs_diff(&EvolutionMatrix::rotation(-PI / 3.0)) < 1e-15);
    }

    proptest! {
        #[test]
        fn gain_at_least_one_and_orthogonal_at_equality(
            t1 in -PI..PI, r in -4.0f64..4.0, t2 in -PI..PI
        ) {
            let s = symplectic(t1, r, t2);
            prop_assert!(s.det_error() < DET_TOL_PROPAGATOR);
            let g = gain_factor(&s).unwrap();
            prop_assert!(g >= 1.0 - 1e-12);
            if (g - 1.0).abs() < 1e-12 {
                prop_assert!(s.orthogonality_defect() < 1e-9);
            }
            let bp = to_bogoliubov(&s).unwrap();
            prop_assert!((g - (1.0 + 2.0 * bp.beta.norm_sqr())).abs() <= 1e-12 * g);
            prop_assert!((bp.commutator() - s.det()).abs() <= 1e-9 * g);
        }

        #[test]
        fn bogoliubov_energy_matches_matrix_energy(
            t1 in -PI..PI, r in -3.0f64..3.0, t2 in -PI..PI, n in 0u32..30
        ) {
            let s = symplectic(t1, r, t2);
            let st = StationaryState::level(n);
            let via_bp = bogoliubov_energy(&to_bogoliubov(&s).unwrap(), &st);
            let via_s = final_energy(&s, &st, 1.0);
            prop_assert!((via_bp - via_s).abs() <= 1e-9 * via_s);
            prop_assert!(via_s >= st.energy() * (1.0 - 1e-12));
        }

        #[test]
        fn general_energy_reduces_to_virial(
            t1 in -PI..PI, r in -3.0f64..3.0, t2 in -PI..PI, n in 0u32..30, wf in 0.1f64..10.0
        ) {
            let s = symplectic(t1, r, t2);
            let st = StationaryState::level(n);
            prop_assert_eq!(final_energy(&s, &st, wf), final_energy_general(&s, &st.moments(), wf));
        }

        #[test]
        fn composition_stays_symplectic(
            a in (-PI..PI, -1.5f64..1.5, -PI..PI), b in (-PI..PI, -1.5f64..1.5, -PI..PI)
        ) {
            let s = compose(&symplectic(a.0, a.1, a.2), &symplectic(b.0, b.1, b.2));
            prop_assert!(s.det_error() < 1e-9);
        }
    }
}
