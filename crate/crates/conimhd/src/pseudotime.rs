//! Pseudo-time characteristic speeds.
//!
//! Reinserting time derivatives makes the steady system marchable; in the
//! primitive variables its direction-w characteristic matrix is
//! W = w₁C¹ + w₂C² (the conserved-variable time Jacobian cancels against the
//! transformation that produced C¹, C² — see the two invariance theorems).
//! The closed-form spectrum is
//!
//!   λ = v·w (×2), (v ± b/√(μρ))·w, v·w ± c_f, v·w ± c_s
//!
//! with the fast/slow magneto-acoustic speeds c_f ≥ c_s ≥ 0. Every speed is
//! real and at least two coincide: the pseudo-unsteady system is everywhere
//! non-strictly hyperbolic.

use crate::characteristics;
use crate::geometry::MetricData;
use crate::state::{self, GasLaw, SurfaceState, ThermoError};
use crate::verify::{self, EigenError};
use num_complex::Complex64;
use thiserror::Error;

/// The direction has zero length in the inverse metric.
#[derive(Debug, Clone, Error)]
#[error("direction ({0}, {1}) has vanishing norm g^{{αβ}} w_α w_β")]
pub struct ZeroDirectionError(pub f64, pub f64);

/// Covariant surface direction (w₁, w₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub w: [f64; 2],
}

impl Direction {
    pub fn new(w1: f64, w2: f64) -> Self {
        Direction { w: [w1, w2] }
    }

    /// Rescales so that g^{αβ} w_α w_β = 1.
    pub fn normalized(&self, metric: &MetricData) -> Result<Direction, ZeroDirectionError> {
        let gi = &metric.g_inv;
        let n_sq = gi[0][0] * self.w[0] * self.w[0]
            + 2.0 * gi[0][1] * self.w[0] * self.w[1]
            + gi[1][1] * self.w[1] * self.w[1];
        if !(n_sq > 1e-24) {
            return Err(ZeroDirectionError(self.w[0], self.w[1]));
        }
        let n = n_sq.sqrt();
        Ok(Direction {
            w: [self.w[0] / n, self.w[1] / n],
        })
    }
}

/// Closed-form pseudo-time spectrum at one point.
#[derive(Debug, Clone, Copy)]
pub struct PseudoSpeeds {
    /// The eight speeds, sorted ascending.
    pub speeds: [f64; 8],
    pub c_fast: f64,
    pub c_slow: f64,
}

/// Evaluates the closed-form fast/slow expressions. The direction is normalized
/// internally; dot products are surface contractions (V³ and B³ enter only
/// through |B|²).
pub fn pseudo_speeds_formula(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
    w: &Direction,
) -> Result<PseudoSpeeds, ThermoError> {
    let w = w
        .normalized(metric)
        .map_err(|_| ThermoError { radicand: f64::NAN })?;
    let d = state::derived(state, metric, gas)?;
    let c_sq = d.sound_speed * d.sound_speed;
    let mu_rho = state.mu * state.rho;
    let vw = state.v[0] * w.w[0] + state.v[1] * w.w[1];
    let bw = state.b[0] * w.w[0] + state.b[1] * w.w[1];
    let a_sq = d.b_sq / mu_rho;
    let radicand = ((a_sq + c_sq) * (a_sq + c_sq) - 4.0 * c_sq * bw * bw / mu_rho).max(0.0);
    let root = radicand.sqrt();
    let c_fast = (0.5 * (c_sq + a_sq + root)).sqrt();
    let c_slow = (0.5 * (c_sq + a_sq - root)).max(0.0).sqrt();
    let alf = bw / mu_rho.sqrt();
    let mut speeds = [
        vw,
        vw,
        vw + alf,
        vw - alf,
        vw + c_fast,
        vw - c_fast,
        vw + c_slow,
        vw - c_slow,
    ];
    speeds.sort_by(f64::total_cmp);
    Ok(PseudoSpeeds {
        speeds,
        c_fast,
        c_slow,
    })
}

/// Dense eigensolve of W = w₁C¹ + w₂C² (the numeric cross-check).
pub fn pseudo_speeds_numeric(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
    w: &Direction,
) -> Result<Vec<Complex64>, EigenError> {
    let w = w
        .normalized(metric)
        .map_err(|e| EigenError::BadState(e.to_string()))?;
    let pair = characteristics::build_quasilinear(state, metric, gas)
        .map_err(|e| EigenError::BadState(e.to_string()))?;
    let m = pair.c1.scaled(w.w[0]).add(&pair.c2.scaled(w.w[1]));
    Ok(verify::dense_eigen(&m)?.finite_values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricData;

    const IDEAL: GasLaw = GasLaw::Ideal { gamma: 1.4 };

    fn unit_sound_state(b: [f64; 2]) -> SurfaceState {
        SurfaceState::new(1.0, 1.0, 0.0, 0.0, 1.0 / 1.4, b[0], b[1], 0.0, 1.0).unwrap()
    }

    fn assert_sorted_eq(got: &[f64; 8], want: &[f64; 8], tol: f64) {
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn aligned_field_collapses_fast_and_slow() {
        // b ∥ w: radicand (c² + a²)² − 4c²(b·w)²/(μρ) = 0, c_f = c_s = 1.
        let m = MetricData::orthonormal();
        let s = unit_sound_state([1.0, 0.0]);
        let w = Direction::new(1.0, 0.0);
        let ps = pseudo_speeds_formula(&s, &m, &IDEAL, &w).unwrap();
        assert!((ps.c_fast - 1.0).abs() < 1e-12);
        assert!((ps.c_slow - 1.0).abs() < 1e-12);
        assert_sorted_eq(&ps.speeds, &[0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 2.0], 1e-12);
    }

    #[test]
    fn orthogonal_field_zeroes_slow_speed() {
        // b ⊥ w: b·w = 0, c_s = 0, c_f = √2, Alfvén pair degenerates to v·w.
        let m = MetricData::orthonormal();
        let s = unit_sound_state([0.0, 1.0]);
        let w = Direction::new(1.0, 0.0);
        let ps = pseudo_speeds_formula(&s, &m, &IDEAL, &w).unwrap();
        assert!((ps.c_fast - 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(ps.c_slow, 0.0);
        let r2 = 2.0f64.sqrt();
        assert_sorted_eq(
            &ps.speeds,
            &[1.0 - r2, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0 + r2],
            1e-12,
        );
    }

    #[test]
    fn zero_field_reduces_to_sound() {
        let m = MetricData::orthonormal();
        let s = unit_sound_state([0.0, 0.0]);
        let w = Direction::new(0.6, -0.8);
        let ps = pseudo_speeds_formula(&s, &m, &IDEAL, &w).unwrap();
        assert_eq!(ps.c_slow, 0.0);
        assert!((ps.c_fast - 1.0).abs() < 1e-12);
        let vw = ps.speeds[3]; // the six-fold v·w cluster
        let mut want = [vw; 8];
        want[0] = vw - 1.0;
        want[7] = vw + 1.0;
        want.sort_by(f64::total_cmp);
        assert_sorted_eq(&ps.speeds, &want, 1e-12);
    }

    #[test]
    fn formula_matches_numeric_on_examples() {
        let m = MetricData::orthonormal();
        for b in [[1.0, 0.0], [0.0, 1.0], [0.4, -0.7]] {
            let s = unit_sound_state(b);
            let w = Direction::new(1.0, 0.0);
            let ps = pseudo_speeds_formula(&s, &m, &IDEAL, &w).unwrap();
            let num = pseudo_speeds_numeric(&s, &m, &IDEAL, &w).unwrap();
            let mut reals: Vec<f64> = num.iter().map(|z| z.re).collect();
            reals.sort_by(f64::total_cmp);
            for (z, f) in num.iter().zip(reals.iter().zip(&ps.speeds)) {
                assert!(z.im.abs() < 1e-10);
                let (r, f) = f;
                assert!((r - f).abs() < 1e-8, "{r} vs {f}");
            }
        }
    }

    #[test]
    fn ordering_and_sum_product_identities() {
        let m = MetricData::orthonormal();
        let gas = IDEAL;
        let mut sampler = crate::verify::StateSampler::new(5);
        for _ in 0..200 {
            let s = sampler.sample_unfiltered();
            let metric = sampler.sample_metric();
            let w = sampler.sample_direction(&metric);
            let ps = pseudo_speeds_formula(&s, &metric, &gas, &w).unwrap();
            assert!(ps.c_fast >= ps.c_slow && ps.c_slow >= 0.0);
            // sum and product identities of the fast/slow expressions
            let d = state::derived(&s, &metric, &gas).unwrap();
            let c_sq = d.sound_speed * d.sound_speed;
            let mu_rho = s.mu * s.rho;
            let wn = w.normalized(&metric).unwrap();
            let bw = s.b[0] * wn.w[0] + s.b[1] * wn.w[1];
            let sum = ps.c_fast * ps.c_fast + ps.c_slow * ps.c_slow;
            assert!((sum - (c_sq + d.b_sq / mu_rho)).abs() < 1e-10 * sum.max(1.0));
            let prod = ps.c_fast * ps.c_fast * ps.c_slow * ps.c_slow;
            let want = c_sq * bw * bw / mu_rho;
            assert!((prod - want).abs() < 1e-10 * prod.max(1.0));
            let _ = metric; // fast/slow bracket the Alfvén and sound speeds
        }
        let _ = m;
    }

    #[test]
    fn unnormalized_directions_allowed() {
        let m = MetricData::from_g([[1.3, 0.2], [0.2, 0.8]]);
        let s = unit_sound_state([0.4, -0.7]);
        let a = pseudo_speeds_formula(&s, &m, &IDEAL, &Direction::new(0.3, -0.9)).unwrap();
        let b = pseudo_speeds_formula(&s, &m, &IDEAL, &Direction::new(3.0, -9.0)).unwrap();
        assert_sorted_eq(&a.speeds, &b.speeds, 1e-13);
    }

    #[test]
    fn zero_direction_rejected() {
        let m = MetricData::orthonormal();
        assert!(Direction::new(0.0, 0.0).normalized(&m).is_err());
    }
}
