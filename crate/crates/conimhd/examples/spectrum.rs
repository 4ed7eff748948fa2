//! Classifies one flow state and prints its characteristic structure.
//!
//! Run with `cargo run --example spectrum`.

use conimhd::characteristics::{deflate, explicit_speeds, full_spectrum, quartic_residual_complex};
use conimhd::geometry::MetricData;
use conimhd::pseudotime::{pseudo_speeds_formula, Direction};
use conimhd::state::{GasLaw, SurfaceState};

fn main() {
    // supersonic crossflow with an oblique magnetic field, orthonormal frame
    let state = SurfaceState::new(1.0, 3.0, 0.2, 0.1, 1.0, 0.8, -0.4, 0.5, 1.0).unwrap();
    let gas = GasLaw::Ideal { gamma: 5.0 / 3.0 };
    let metric = MetricData::orthonormal();

    let spectrum = full_spectrum(&state, &metric, &gas).unwrap();
    println!(
        "type: {:?} (max |Im λ| = {:.2e})",
        spectrum.flow_type, spectrum.max_imag
    );
    for (k, z) in spectrum.finite_values().iter().enumerate() {
        println!("  λ{} = {:+.9} {:+.2e}i", k + 1, z.re, z.im);
    }

    let closed = explicit_speeds(&state, &metric).unwrap();
    let (matched, deflated) = deflate(&spectrum, &closed);
    println!("streamline/Alfvén closed forms vs matched eigenvalues:");
    for (cf, num) in closed.iter().zip(&matched) {
        println!(
            "  {cf:+.9} ↔ {:+.9} (Δ = {:.1e})",
            num.re,
            (num.re - cf).abs()
        );
    }
    println!("quartic residuals at the four remaining roots:");
    for z in &deflated {
        let r = quartic_residual_complex(&state, &metric, &gas, *z).unwrap();
        println!("  λ = {:+.9}: residual {:.1e}", z.re, r);
    }

    let w = Direction::new(1.0, 0.0);
    let ps = pseudo_speeds_formula(&state, &metric, &gas, &w).unwrap();
    println!(
        "pseudo-time speeds along w = (1, 0): {:?}  (c_f = {:.6}, c_s = {:.6})",
        ps.speeds.map(|x| (x * 1e6).round() / 1e6),
        ps.c_fast,
        ps.c_slow
    );
}
