//! Dependent variables and the gas law.
//!
//! The primitive state at a point is Φ = [ρ, v¹, v², V³, P, b¹, b², B³]:
//! density, contravariant surface velocity, radial velocity, pressure,
//! contravariant surface magnetic field, radial magnetic field. Pressure
//! (not internal energy) is the stored thermodynamic variable; e is derived
//! through the gas law on demand.

use crate::geometry::MetricData;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Density/pressure floor enforced at construction.
pub const ADMISSIBILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("density must be at least {ADMISSIBILITY_FLOOR}, got {0}")]
    Density(f64),
    #[error("pressure must be at least {ADMISSIBILITY_FLOOR}, got {0}")]
    Pressure(f64),
    #[error("permeability must be positive, got {0}")]
    Permeability(f64),
    #[error("state contains a non-finite component")]
    NonFinite,
}

/// Non-physical thermodynamic input (negative sound-speed radicand).
#[derive(Debug, Error)]
#[error("sound-speed radicand P·P_e + ρ²·P_ρ = {radicand} is negative")]
pub struct ThermoError {
    pub radicand: f64,
}

/// Equation of state closing the system.
///
/// Ideal: P = (γ−1)ρe. Barotropic: P = kρ, for which the thermal energy is
/// irrelevant to the characteristic analysis and `energy` returns zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GasLaw {
    Ideal { gamma: f64 },
    Barotropic { k: f64 },
}

impl GasLaw {
    pub fn pressure(&self, rho: f64, e: f64) -> f64 {
        match *self {
            GasLaw::Ideal { gamma } => (gamma - 1.0) * rho * e,
            GasLaw::Barotropic { k } => k * rho,
        }
    }

    /// P_ρ at fixed e.
    pub fn dp_drho(&self, _rho: f64, e: f64) -> f64 {
        match *self {
            GasLaw::Ideal { gamma } => (gamma - 1.0) * e,
            GasLaw::Barotropic { k } => k,
        }
    }

    /// P_e at fixed ρ.
    pub fn dp_de(&self, rho: f64, _e: f64) -> f64 {
        match *self {
            GasLaw::Ideal { gamma } => (gamma - 1.0) * rho,
            GasLaw::Barotropic { .. } => 0.0,
        }
    }

    /// Inverse map e(ρ, P).
    pub fn energy(&self, rho: f64, p: f64) -> f64 {
        match *self {
            GasLaw::Ideal { gamma } => p / ((gamma - 1.0) * rho),
            GasLaw::Barotropic { .. } => 0.0,
        }
    }
}

/// c = √(P·P_e + ρ²·P_ρ)/ρ evaluated at (ρ, e).
///
/// For an ideal gas this equals √(γP/ρ); for a barotropic law, √(∂P/∂ρ).
pub fn sound_speed(gas: &GasLaw, rho: f64, e: f64) -> Result<f64, ThermoError> {
    let p = gas.pressure(rho, e);
    let radicand = p * gas.dp_de(rho, e) + rho * rho * gas.dp_drho(rho, e);
    if radicand < 0.0 {
        return Err(ThermoError { radicand });
    }
    Ok(radicand.sqrt() / rho)
}

/// Same as [`sound_speed`] but entered from the stored variables (ρ, P).
pub fn sound_speed_from_pressure(gas: &GasLaw, rho: f64, p: f64) -> Result<f64, ThermoError> {
    sound_speed(gas, rho, gas.energy(rho, p))
}

/// The eight dependent variables plus the permeability constant at one point.
///
/// Surface components are contravariant. μ is carried per state so mixed-μ
/// cases stay expressible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceState {
    pub rho: f64,
    /// (v¹, v²), contravariant.
    pub v: [f64; 2],
    /// Radial velocity V³.
    pub v3: f64,
    pub p: f64,
    /// (b¹, b²), contravariant.
    pub b: [f64; 2],
    /// Radial magnetic component B³.
    pub b3: f64,
    /// Permeability constant μ > 0.
    pub mu: f64,
}

impl SurfaceState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rho: f64,
        v1: f64,
        v2: f64,
        v3: f64,
        p: f64,
        b1: f64,
        b2: f64,
        b3: f64,
        mu: f64,
    ) -> Result<Self, StateError> {
        let s = SurfaceState {
            rho,
            v: [v1, v2],
            v3,
            p,
            b: [b1, b2],
            b3,
            mu,
        };
        if !(s.rho.is_finite()
            && s.v.iter().all(|x| x.is_finite())
            && s.v3.is_finite()
            && s.p.is_finite()
            && s.b.iter().all(|x| x.is_finite())
            && s.b3.is_finite()
            && s.mu.is_finite())
        {
            return Err(StateError::NonFinite);
        }
        if rho < ADMISSIBILITY_FLOOR {
            return Err(StateError::Density(rho));
        }
        if p < ADMISSIBILITY_FLOOR {
            return Err(StateError::Pressure(p));
        }
        if mu <= 0.0 {
            return Err(StateError::Permeability(mu));
        }
        Ok(s)
    }

    /// Zero-velocity, zero-field state with the given ρ, P.
    pub fn rest(rho: f64, p: f64, mu: f64) -> Result<Self, StateError> {
        SurfaceState::new(rho, 0.0, 0.0, 0.0, p, 0.0, 0.0, 0.0, mu)
    }
}

/// Scalars derived from a state and the metric at its point.
#[derive(Debug, Clone, Copy)]
pub struct Derived {
    /// v_c = √(g_{αβ} v^α v^β).
    pub v_c: f64,
    /// b_c = √(g_{αβ} b^α b^β).
    pub b_c: f64,
    /// |B|² = b_c² + (B³)².
    pub b_sq: f64,
    /// |V|² = v_c² + (V³)².
    pub v_sq: f64,
    /// V·B = g_{αβ} v^α b^β + V³B³.
    pub v_dot_b: f64,
    /// Specific thermal energy e(ρ, P).
    pub e: f64,
    /// Total specific energy E = e + ½|V|².
    pub total_energy: f64,
    /// Covariant magnetic components b_α = g_{αμ} b^μ.
    pub b_cov: [f64; 2],
    /// Covariant velocity components v_α = g_{αμ} v^μ.
    pub v_cov: [f64; 2],
    /// Sound speed c.
    pub sound_speed: f64,
}

/// Evaluates every derived scalar of the state at one point.
pub fn derived(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
) -> Result<Derived, ThermoError> {
    let g = &metric.g;
    let dot = |a: &[f64; 2], b: &[f64; 2]| {
        g[0][0] * a[0] * b[0] + g[0][1] * (a[0] * b[1] + a[1] * b[0]) + g[1][1] * a[1] * b[1]
    };
    let vc2 = dot(&state.v, &state.v).max(0.0);
    let bc2 = dot(&state.b, &state.b).max(0.0);
    let v_sq = vc2 + state.v3 * state.v3;
    let b_sq = bc2 + state.b3 * state.b3;
    let e = gas.energy(state.rho, state.p);
    let c = sound_speed(gas, state.rho, e)?;
    Ok(Derived {
        v_c: vc2.sqrt(),
        b_c: bc2.sqrt(),
        b_sq,
        v_sq,
        v_dot_b: dot(&state.v, &state.b) + state.v3 * state.b3,
        e,
        total_energy: e + 0.5 * v_sq,
        b_cov: [
            g[0][0] * state.b[0] + g[0][1] * state.b[1],
            g[1][0] * state.b[0] + g[1][1] * state.b[1],
        ],
        v_cov: [
            g[0][0] * state.v[0] + g[0][1] * state.v[1],
            g[1][0] * state.v[0] + g[1][1] * state.v[1],
        ],
        sound_speed: c,
    })
}

/// Flat JSON record for one state, matching the CLI `--state` interface.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StateRecord {
    pub rho: f64,
    pub v1: f64,
    pub v2: f64,
    #[serde(rename = "V3")]
    pub v3: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub b1: f64,
    pub b2: f64,
    #[serde(rename = "B3")]
    pub b3: f64,
    pub mu: f64,
    pub gamma: f64,
}

impl StateRecord {
    pub fn into_parts(self) -> Result<(SurfaceState, GasLaw), StateError> {
        let state = SurfaceState::new(
            self.rho, self.v1, self.v2, self.v3, self.p, self.b1, self.b2, self.b3, self.mu,
        )?;
        Ok((state, GasLaw::Ideal { gamma: self.gamma }))
    }

    pub fn from_parts(state: &SurfaceState, gas: &GasLaw) -> Self {
        let gamma = match *gas {
            GasLaw::Ideal { gamma } => gamma,
            GasLaw::Barotropic { .. } => f64::NAN,
        };
        StateRecord {
            rho: state.rho,
            v1: state.v[0],
            v2: state.v[1],
            v3: state.v3,
            p: state.p,
            b1: state.b[0],
            b2: state.b[1],
            b3: state.b3,
            mu: state.mu,
            gamma,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricData;

    const IDEAL: GasLaw = GasLaw::Ideal { gamma: 1.4 };

    #[test]
    fn ideal_gas_roundtrip() {
        let (rho, e) = (1.3, 2.1);
        let p = IDEAL.pressure(rho, e);
        assert!((IDEAL.energy(rho, p) - e).abs() < 1e-12);
        assert!((IDEAL.dp_de(rho, e) - 0.4 * rho).abs() < 1e-15);
        assert!((IDEAL.dp_drho(rho, e) - 0.4 * e).abs() < 1e-15);
    }

    #[test]
    fn sound_speed_ideal_value() {
        // γ = 1.4, ρ = 1, e = 2.5 gives P = 1 and c = √1.4.
        let c = sound_speed(&IDEAL, 1.0, 2.5).unwrap();
        assert!((c - 1.4f64.sqrt()).abs() < 1e-12, "c = {c}");
        assert!((c - 1.183_215_956_6).abs() < 1e-9);
    }

    #[test]
    fn sound_speed_matches_gamma_p_over_rho() {
        for &(rho, p) in &[(0.5, 0.7), (1.0, 1.0), (2.0, 0.25), (1.7, 3.0)] {
            let c = sound_speed_from_pressure(&IDEAL, rho, p).unwrap();
            let want = (1.4 * p / rho).sqrt();
            assert!((c - want).abs() < 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn sound_speed_barotropic() {
        let gas = GasLaw::Barotropic { k: 2.25 };
        let c = sound_speed(&gas, 1.7, 0.0).unwrap();
        assert!((c - 1.5).abs() < 1e-12);
    }

    #[test]
    fn thermo_error_on_negative_radicand() {
        // A barotropic law with negative k has an imaginary sound speed.
        let gas = GasLaw::Barotropic { k: -1.0 };
        assert!(sound_speed(&gas, 1.0, 0.0).is_err());
    }

    #[test]
    fn admissibility_floor_enforced() {
        assert!(SurfaceState::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(SurfaceState::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(SurfaceState::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(SurfaceState::new(1.0, f64::NAN, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn derived_euclidean_norm() {
        let m = MetricData::orthonormal();
        let s = SurfaceState::new(1.0, 3.0, 4.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let d = derived(&s, &m, &IDEAL).unwrap();
        assert!((d.v_c - 5.0).abs() < 1e-14);
    }

    #[test]
    fn derived_metric_contraction() {
        // g = diag(1, 0.25), b = (0, 2), B³ = 1: b_c = 1, |B|² = 2, b_1 = 0.
        let m = MetricData::from_g([[1.0, 0.0], [0.0, 0.25]]);
        let s = SurfaceState::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 2.0, 1.0, 1.0).unwrap();
        let d = derived(&s, &m, &IDEAL).unwrap();
        assert!((d.b_c - 1.0).abs() < 1e-14);
        assert!((d.b_sq - 2.0).abs() < 1e-14);
        assert!(d.b_cov[0].abs() < 1e-14);
        assert!((d.b_cov[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn derived_rest_state() {
        let m = MetricData::orthonormal();
        let s = SurfaceState::rest(1.0, 1.0, 1.0).unwrap();
        let d = derived(&s, &m, &IDEAL).unwrap();
        assert_eq!(d.v_dot_b, 0.0);
        assert!((d.total_energy - d.e).abs() < 1e-15);
    }

    #[test]
    fn state_record_json_keys() {
        let s = SurfaceState::new(1.0, 0.1, 0.2, 0.3, 2.0, -0.1, -0.2, -0.3, 1.5).unwrap();
        let rec = StateRecord::from_parts(&s, &IDEAL);
        let json = serde_json::to_string(&rec).unwrap();
        for key in [
            "rho", "v1", "v2", "V3", "P", "b1", "b2", "B3", "mu", "gamma",
        ] {
            assert!(
                json.contains(&format!("\"{key}\"")),
                "missing {key} in {json}"
            );
        }
        let back: StateRecord = serde_json::from_str(&json).unwrap();
        let (s2, _) = back.into_parts().unwrap();
        assert_eq!(s, s2);
    }
}
