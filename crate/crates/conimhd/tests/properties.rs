//! Property tests over randomized states, gas laws, and chart points.

use conimhd::characteristics;
use conimhd::geometry::{Chart, MetricData};
use conimhd::pseudotime::{self, Direction};
use conimhd::state::{self, GasLaw, SurfaceState};
use proptest::prelude::*;
use std::f64::consts::PI;

fn admissible_state() -> impl Strategy<Value = SurfaceState> {
    (
        0.5..2.0f64,
        prop::array::uniform2(-2.0..2.0f64),
        -2.0..2.0f64,
        0.5..2.0f64,
        prop::array::uniform2(-2.0..2.0f64),
        -2.0..2.0f64,
        0.5..2.0f64,
    )
        .prop_map(|(rho, v, v3, p, b, b3, mu)| {
            SurfaceState::new(rho, v[0], v[1], v3, p, b[0], b[1], b3, mu).unwrap()
        })
}

fn spd_metric() -> impl Strategy<Value = MetricData> {
    (0.5..1.5f64, -0.8..0.8f64, 0.5..1.5f64).prop_map(|(l11, l21, l22)| {
        MetricData::from_g([[l11 * l11, l11 * l21], [l11 * l21, l21 * l21 + l22 * l22]])
    })
}

proptest! {
    #[test]
    fn gas_law_round_trip(rho in 0.1..5.0f64, e in 0.1..5.0f64, gamma in 1.1..2.0f64) {
        let gas = GasLaw::Ideal { gamma };
        let p = gas.pressure(rho, e);
        prop_assert!((gas.energy(rho, p) - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn sound_speed_general_formula_equals_ideal_form(
        rho in 0.1..5.0f64, p in 0.1..5.0f64, gamma in 1.1..2.0f64,
    ) {
        let gas = GasLaw::Ideal { gamma };
        let c = state::sound_speed_from_pressure(&gas, rho, p).unwrap();
        let want = (gamma * p / rho).sqrt();
        prop_assert!((c - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn projection_orthogonal_decomposition(
        t in 0.1..(PI - 0.1), p in 0.0..(2.0 * PI),
        w in prop::array::uniform3(-3.0..3.0f64),
    ) {
        let chart = Chart::spherical([0.05, PI - 0.05], [0.0, 2.0 * PI], true).unwrap();
        let m = chart.metric_at([t, p]).unwrap();
        let (surf, w3) = m.project(w);
        let back = m.lift(surf, w3);
        for i in 0..3 {
            prop_assert!((back[i] - w[i]).abs() <= 1e-10);
        }
        let mut gs = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                gs += m.g[a][b] * surf[a] * surf[b];
            }
        }
        let total: f64 = w.iter().map(|x| x * x).sum();
        prop_assert!((gs + w3 * w3 - total).abs() <= 1e-10 * total.max(1.0));
    }

    #[test]
    fn spectrum_complex_values_come_in_conjugate_pairs(
        state in admissible_state(), metric in spd_metric(),
    ) {
        let gas = GasLaw::Ideal { gamma: 1.4 };
        let Ok(sp) = characteristics::full_spectrum(&state, &metric, &gas) else {
            return Ok(());
        };
        let mut values = sp.finite_values();
        // pair each z with a partner conjugate within 1e-10
        while let Some(z) = values.pop() {
            if z.im.abs() <= 1e-10 {
                continue;
            }
            let partner = values
                .iter()
                .position(|y| (y.re - z.re).abs() <= 1e-8 && (y.im + z.im).abs() <= 1e-10);
            prop_assert!(partner.is_some(), "unpaired complex eigenvalue {z}");
            values.remove(partner.unwrap());
        }
    }

    #[test]
    fn zero_field_explicit_speeds_collapse(state in admissible_state()) {
        let metric = MetricData::orthonormal();
        let mut s = state;
        s.b = [0.0, 0.0];
        s.b3 = 0.0;
        if s.v[0].abs() < 1e-3 {
            return Ok(());
        }
        let speeds = characteristics::explicit_speeds(&s, &metric).unwrap();
        let stream = s.v[1] / s.v[0];
        for x in speeds {
            prop_assert!((x - stream).abs() <= 1e-10 * stream.abs().max(1.0));
        }
    }

    #[test]
    fn pseudo_speeds_fast_slow_ordering(
        state in admissible_state(), metric in spd_metric(),
        w in prop::array::uniform2(-1.0..1.0f64),
    ) {
        let gas = GasLaw::Ideal { gamma: 1.4 };
        let direction = Direction::new(w[0], w[1]);
        if direction.normalized(&metric).is_err() {
            return Ok(());
        }
        let ps = pseudotime::pseudo_speeds_formula(&state, &metric, &gas, &direction).unwrap();
        prop_assert!(ps.c_fast >= ps.c_slow);
        prop_assert!(ps.c_slow >= 0.0);
        let wn = direction.normalized(&metric).unwrap();
        let vw = state.v[0] * wn.w[0] + state.v[1] * wn.w[1];
        // v·w − c_f ≤ v·w − c_s ≤ v·w ≤ v·w + c_s ≤ v·w + c_f
        prop_assert!(vw - ps.c_fast <= vw - ps.c_slow + 1e-14);
        prop_assert!(vw + ps.c_slow <= vw + ps.c_fast + 1e-14);
        // the sorted multiset is bracketed by the fast pair
        prop_assert!((ps.speeds[0] - (vw - ps.c_fast)).abs() <= 1e-12);
        prop_assert!((ps.speeds[7] - (vw + ps.c_fast)).abs() <= 1e-12);
    }
}
