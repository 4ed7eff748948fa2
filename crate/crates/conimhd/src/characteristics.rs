//! Steady characteristic analysis of the eight-equation system.
//!
//! In the primitive variables Φ = [ρ, v¹, v², V³, P, b¹, b², B³] the system
//! is Σ_α C^α ∂Φ/∂ξ^α + S* = 0 with two 8×8 coefficient matrices. Treating
//! ξ¹ as time-like, the characteristic speeds are the eigenvalues of the
//! pencil det(C² − λC¹) = 0; four have closed forms
//!
//!   λ = v²/v¹ (twice),  λ = (b² ± √(μρ) v²)/(b¹ ± √(μρ) v¹)
//!
//! and the remaining four satisfy a quartic relation. Any complex eigenvalue
//! makes the system elliptic at that point; all real and finite makes it
//! hyperbolic. The pencil is solved numerically rather than by inverting C¹
//! so that v¹ → 0 degrades into flagged infinite eigenvalues.

use crate::geometry::MetricData;
use crate::linalg::Matrix;
use crate::state::{self, GasLaw, SurfaceState};
use crate::verify::{self, EigenError, PencilValue};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Relative floor under which a closed-form denominator counts as zero.
pub const DENOMINATOR_FLOOR: f64 = 1e-10;

/// A closed-form denominator is numerically zero: the speed is infinite in
/// this chart direction.
#[derive(Debug, Clone, Error)]
#[error("explicit-speed denominator '{which}' = {value} is within {floor} of zero")]
pub struct DegenerateError {
    pub which: &'static str,
    pub value: f64,
    pub floor: f64,
}

/// The quartic relation cannot be evaluated at this state or λ.
#[derive(Debug, Clone, Error)]
pub enum BranchError {
    #[error("quartic denominator b_c² − (b²)² = {0} is numerically zero")]
    Denominator(f64),
    #[error("inner radicand {0} is negative on both branches")]
    NegativeRadicand(f64),
    #[error(
        "quadratic form g²² − 2g¹²λ + g¹¹λ² is numerically zero at this root \
         (|quad|/scale = {0:.3e}); the ± branch form is undefined there"
    )]
    NearBranchPoint(f64),
}

/// The two 8×8 quasilinear coefficient matrices in primitive variables.
#[derive(Debug, Clone)]
pub struct QuasilinearPair {
    pub c1: Matrix,
    pub c2: Matrix,
}

/// Hyperbolic/elliptic classification at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowType {
    Hyperbolic,
    Elliptic,
    /// Real spectrum but with an infinite eigenvalue (singular pencil
    /// direction), which a binary hyperbolic/elliptic split cannot label.
    Degenerate,
}

impl FlowType {
    pub fn letter(&self) -> char {
        match self {
            FlowType::Hyperbolic => 'H',
            FlowType::Elliptic => 'E',
            FlowType::Degenerate => 'D',
        }
    }
}

/// The eight steady characteristic speeds at a point.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Sorted by (Re, Im); infinite values last.
    pub eigenvalues: Vec<PencilValue>,
    pub max_imag: f64,
    pub n_infinite: usize,
    pub flow_type: FlowType,
}

impl Spectrum {
    pub fn finite_values(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .filter_map(PencilValue::finite)
            .collect()
    }
}

/// Builds C¹ and C² entrywise from the state, metric, and sound speed.
pub fn build_quasilinear(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
) -> Result<QuasilinearPair, state::ThermoError> {
    let d = state::derived(state, metric, gas)?;
    let c_sq = d.sound_speed * d.sound_speed;
    let rho = state.rho;
    let [v1, v2] = state.v;
    let [b1, b2] = state.b;
    let b3 = state.b3;
    let mr = state.mu * rho;
    let gi = &metric.g_inv;
    let (g11, g12, g22) = (gi[0][0], gi[0][1], gi[1][1]);
    // covariant components b_α = g_{αμ} b^μ
    let (b_cov1, b_cov2) = (d.b_cov[0], d.b_cov[1]);

    let c_one = Matrix::from_rows(&[
        vec![v1, rho, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![
            0.0,
            v1,
            0.0,
            0.0,
            g11 / rho,
            -g12 * b_cov2 / mr,
            g11 * b_cov2 / mr,
            g11 * b3 / mr,
        ],
        vec![
            0.0,
            0.0,
            v1,
            0.0,
            g12 / rho,
            g12 * b_cov1 / mr,
            -g11 * b_cov1 / mr,
            g12 * b3 / mr,
        ],
        vec![0.0, 0.0, 0.0, v1, 0.0, 0.0, 0.0, -b1 / mr],
        vec![0.0, c_sq * rho, 0.0, 0.0, v1, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, v1, 0.0, 0.0],
        vec![0.0, b2, -b1, 0.0, 0.0, 0.0, v1, 0.0],
        vec![0.0, b3, 0.0, -b1, 0.0, 0.0, 0.0, v1],
    ]);
    let c_two = Matrix::from_rows(&[
        vec![v2, 0.0, rho, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![
            0.0,
            v2,
            0.0,
            0.0,
            g12 / rho,
            -g22 * b_cov2 / mr,
            g12 * b_cov2 / mr,
            g12 * b3 / mr,
        ],
        vec![
            0.0,
            0.0,
            v2,
            0.0,
            g22 / rho,
            g22 * b_cov1 / mr,
            -g12 * b_cov1 / mr,
            g22 * b3 / mr,
        ],
        vec![0.0, 0.0, 0.0, v2, 0.0, 0.0, 0.0, -b2 / mr],
        vec![0.0, 0.0, c_sq * rho, 0.0, v2, 0.0, 0.0, 0.0],
        vec![0.0, -b2, b1, 0.0, 0.0, v2, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, v2, 0.0],
        vec![0.0, 0.0, b3, -b2, 0.0, 0.0, 0.0, v2],
    ]);
    Ok(QuasilinearPair {
        c1: c_one,
        c2: c_two,
    })
}

/// The change-of-variables Jacobian DΦ from U = [ρ, …, e, …] to
/// Φ = [ρ, …, P, …]: identity except the pressure row, which carries P_ρ
/// and P_e.
pub fn dphi_jacobian(state: &SurfaceState, gas: &GasLaw) -> Matrix {
    let e = gas.energy(state.rho, state.p);
    let mut m = Matrix::identity(8);
    m[(4, 0)] = gas.dp_drho(state.rho, e);
    m[(4, 4)] = gas.dp_de(state.rho, e);
    m
}

/// The Jacobian M of the conserved vector
/// [√gρ, √gρv¹, √gρv², √gρV³, √g(ρE + |B|²/2μ), b¹, b², B³]
/// with respect to U = [ρ, v¹, v², V³, e, b¹, b², B³].
pub fn conservative_jacobian(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
) -> Result<Matrix, state::ThermoError> {
    let d = state::derived(state, metric, gas)?;
    let sg = metric.sqrt_det;
    let rho = state.rho;
    let mut m = Matrix::zeros(8);
    m[(0, 0)] = sg;
    for (row, comp) in [(1, state.v[0]), (2, state.v[1]), (3, state.v3)] {
        m[(row, 0)] = sg * comp;
        m[(row, row)] = sg * rho;
    }
    m[(4, 0)] = sg * d.total_energy;
    m[(4, 1)] = sg * rho * d.v_cov[0];
    m[(4, 2)] = sg * rho * d.v_cov[1];
    m[(4, 3)] = sg * rho * state.v3;
    m[(4, 4)] = sg * rho;
    m[(4, 5)] = sg * d.b_cov[0] / state.mu;
    m[(4, 6)] = sg * d.b_cov[1] / state.mu;
    m[(4, 7)] = sg * state.b3 / state.mu;
    for k in 5..8 {
        m[(k, k)] = 1.0;
    }
    Ok(m)
}

/// Characteristic scale of the state used to make the denominator floor
/// dimensionally sensible.
fn state_scale(state: &SurfaceState, metric: &MetricData) -> f64 {
    let g = &metric.g;
    let norm = |a: &[f64; 2]| {
        (g[0][0] * a[0] * a[0] + 2.0 * g[0][1] * a[0] * a[1] + g[1][1] * a[1] * a[1])
            .max(0.0)
            .sqrt()
    };
    let sq = (state.mu * state.rho).sqrt();
    norm(&state.v).max(norm(&state.b) / sq).max(1.0)
}

/// The four closed-form speeds: v²/v¹ twice and the Alfvén pair
/// (b² ± √(μρ)v²)/(b¹ ± √(μρ)v¹).
pub fn explicit_speeds(
    state: &SurfaceState,
    metric: &MetricData,
) -> Result<[f64; 4], DegenerateError> {
    let floor = DENOMINATOR_FLOOR * state_scale(state, metric);
    let sq = (state.mu * state.rho).sqrt();
    let checks: [(&'static str, f64); 3] = [
        ("v1", state.v[0]),
        ("b1 + sqrt(mu rho) v1", state.b[0] + sq * state.v[0]),
        ("b1 - sqrt(mu rho) v1", state.b[0] - sq * state.v[0]),
    ];
    for (which, value) in checks {
        if value.abs() <= floor {
            return Err(DegenerateError {
                which,
                value,
                floor,
            });
        }
    }
    let stream = state.v[1] / state.v[0];
    Ok([
        stream,
        stream,
        (state.b[1] + sq * state.v[1]) / (state.b[0] + sq * state.v[0]),
        (state.b[1] - sq * state.v[1]) / (state.b[0] - sq * state.v[0]),
    ])
}

/// Threshold on |Im λ| separating hyperbolic from elliptic, given the
/// largest finite eigenvalue magnitude.
pub fn default_tau_imag(max_abs_finite: f64) -> f64 {
    (1e-7 * max_abs_finite).max(1e-9)
}

/// All eight steady speeds from the generalized pencil det(C² − λC¹) = 0.
pub fn full_spectrum(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
) -> Result<Spectrum, EigenError> {
    full_spectrum_with_tau(state, metric, gas, None)
}

/// As [`full_spectrum`], with an explicit imaginary-part threshold.
pub fn full_spectrum_with_tau(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
    tau_imag: Option<f64>,
) -> Result<Spectrum, EigenError> {
    let pair =
        build_quasilinear(state, metric, gas).map_err(|e| EigenError::BadState(e.to_string()))?;
    let result = verify::generalized_eigen(&pair.c2, &pair.c1)?;
    let finite = result.finite_values();
    let max_imag = finite.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let max_abs = finite.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tau = tau_imag.unwrap_or_else(|| default_tau_imag(max_abs));
    let n_infinite = result.n_infinite();
    let flow_type = if max_imag > tau {
        FlowType::Elliptic
    } else if n_infinite > 0 {
        FlowType::Degenerate
    } else {
        FlowType::Hyperbolic
    };
    Ok(Spectrum {
        eigenvalues: result.values,
        max_imag,
        n_infinite,
        flow_type,
    })
}

/// Greedy pairing of the numeric spectrum against the four closed forms by
/// minimum relative distance. Returns the matched eigenvalues in the order of
/// `explicit` and the four unmatched ("quartic") roots. Infinite eigenvalues
/// never match a closed form.
pub fn deflate(spectrum: &Spectrum, explicit: &[f64; 4]) -> (Vec<Complex64>, Vec<Complex64>) {
    let finite = spectrum.finite_values();
    let mut used = vec![false; finite.len()];
    let mut matched = vec![Complex64::new(f64::NAN, 0.0); 4];
    // all (closed-form, eigenvalue) pairs, nearest first
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ci, cf) in explicit.iter().enumerate() {
        for (ni, num) in finite.iter().enumerate() {
            let d = (num - Complex64::new(*cf, 0.0)).norm() / cf.abs().max(1e-9);
            pairs.push((d, ci, ni));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cf_done = [false; 4];
    for (_, ci, ni) in pairs {
        if cf_done[ci] || used[ni] {
            continue;
        }
        cf_done[ci] = true;
        used[ni] = true;
        matched[ci] = finite[ni];
    }
    let rest = finite
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(z, _)| *z)
        .collect();
    (matched, rest)
}

/// Checks the denominator precondition of the quartic relation.
pub fn quartic_preconditions(state: &SurfaceState, metric: &MetricData) -> Result<(), BranchError> {
    let g = &metric.g;
    let b = &state.b;
    let bc_sq = g[0][0] * b[0] * b[0] + 2.0 * g[0][1] * b[0] * b[1] + g[1][1] * b[1] * b[1];
    let denom = bc_sq - b[1] * b[1];
    let scale = bc_sq.abs().max(b[1] * b[1]).max(1.0);
    if denom.abs() <= DENOMINATOR_FLOOR * scale {
        return Err(BranchError::Denominator(denom));
    }
    Ok(())
}

/// Residual of the quartic relation at a real λ, minimized over the ± branch
/// and normalized by the magnitude of its terms. Zero (≤ 1e−6) identifies λ
/// as one of the four non-explicit speeds.
pub fn quartic_residual(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
    lambda: f64,
) -> Result<f64, BranchError> {
    quartic_preconditions(state, metric)?;
    let parts = quartic_parts(state, metric, gas, Complex64::new(lambda, 0.0));
    parts.check_branch_point()?;
    if parts.inner.im == 0.0 && parts.inner.re < 0.0 {
        return Err(BranchError::NegativeRadicand(parts.inner.re));
    }
    Ok(parts.min_branch_residual())
}

/// As [`quartic_residual`] for complex λ (deflated roots of elliptic states);
/// the square root takes its principal branch.
pub fn quartic_residual_complex(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
    lambda: Complex64,
) -> Result<f64, BranchError> {
    quartic_preconditions(state, metric)?;
    let parts = quartic_parts(state, metric, gas, lambda);
    parts.check_branch_point()?;
    Ok(parts.min_branch_residual())
}

struct QuarticParts {
    lhs: Complex64,
    first: Complex64,
    sqrt_term: Complex64,
    inner: Complex64,
    /// |g²² − 2g¹²λ + g¹¹λ²| relative to the magnitudes of its terms.
    quad_ratio: f64,
}

impl QuarticParts {
    /// The ± form has a square-root branch point where the quadratic form
    /// vanishes; roots parked within roundoff of it (near-static states put
    /// the complex pair there) amplify an O(ε)-accurate eigenvalue beyond
    /// any useful residual tolerance. 1e−6 keeps the amplification below
    /// the certification tolerance for eigenvalues accurate to ~1e−12.
    fn check_branch_point(&self) -> Result<(), BranchError> {
        if self.quad_ratio < 1e-6 {
            return Err(BranchError::NearBranchPoint(self.quad_ratio));
        }
        Ok(())
    }

    fn min_branch_residual(&self) -> f64 {
        let scale = self
            .lhs
            .norm()
            .max(self.first.norm())
            .max(self.sqrt_term.norm())
            .max(f64::MIN_POSITIVE);
        let plus = (self.lhs - (self.first + self.sqrt_term)).norm();
        let minus = (self.lhs - (self.first - self.sqrt_term)).norm();
        plus.min(minus) / scale
    }
}

/// Evaluates the relation with its literal index placement: b₁ is the
/// covariant component g_{1μ}b^μ while b² stays contravariant. (In
/// non-orthonormal coordinates that placement is not equivalent to the
/// pencil spectrum; callers compare and report rather than reinterpret.)
fn quartic_parts(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
    lambda: Complex64,
) -> QuarticParts {
    let g = &metric.g;
    let gi = &metric.g_inv;
    let det = metric.det;
    let b = &state.b;
    let v = &state.v;
    let mu_rho = state.mu * state.rho;
    let c_sq = state::sound_speed_from_pressure(gas, state.rho, state.p)
        .map(|c| c * c)
        .unwrap_or(f64::NAN);
    let b_cov1 = g[0][0] * b[0] + g[0][1] * b[1];
    let bc_sq = g[0][0] * b[0] * b[0] + 2.0 * g[0][1] * b[0] * b[1] + g[1][1] * b[1] * b[1];
    let b_sq = bc_sq + state.b3 * state.b3;
    let factor = b_cov1 * b_cov1 * (b_sq + c_sq * mu_rho) / (bc_sq - b[1] * b[1]);
    let quad = Complex64::new(gi[1][1], 0.0) - 2.0 * gi[0][1] * lambda + gi[0][0] * lambda * lambda;
    let quad_scale =
        gi[1][1].abs() + 2.0 * (gi[0][1] * lambda).norm() + (gi[0][0] * lambda * lambda).norm();
    let bn = Complex64::new(b[1], 0.0) - b[0] * lambda;
    let inner = quad
        * (-4.0 * c_sq * bn * bn * mu_rho / (det * det)
            + quad * Complex64::new(factor * factor, 0.0));
    let sqrt_term = det / (2.0 * mu_rho) * inner.sqrt();
    let first = det / (2.0 * mu_rho) * quad * factor;
    let vn = Complex64::new(v[1], 0.0) - v[0] * lambda;
    QuarticParts {
        lhs: vn * vn,
        first,
        sqrt_term,
        inner,
        quad_ratio: quad.norm() / quad_scale.max(f64::MIN_POSITIVE),
    }
}

/// Labels the point from its full spectrum.
pub fn classify(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
    tau_imag: Option<f64>,
) -> Result<FlowType, EigenError> {
    Ok(full_spectrum_with_tau(state, metric, gas, tau_imag)?.flow_type)
}

/// Per-node classification over a whole field; node failures are recorded,
/// not fatal.
pub fn type_map(
    field: &crate::residual::FieldGrid,
    tau_imag: Option<f64>,
) -> Result<Vec<Result<Spectrum, EigenError>>, crate::geometry::GeometryError> {
    let n1 = field.grid.n1;
    let n2 = field.grid.n2;
    let mut out = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let metric = field.chart.metric_at(field.grid.xi(i, j))?;
            out.push(full_spectrum_with_tau(
                field.state(i, j),
                &metric,
                &field.gas,
                tau_imag,
            ));
        }
    }
    Ok(out)
}

/// Writes the type-map CSV `xi1,xi2,type,max_imag,l1_re,l1_im,…,l8_re,l8_im`
/// with `type ∈ {H, E, D}` (`X` marks a node whose eigensolve failed; its
/// eigenvalue columns are empty). Infinite eigenvalues print as `inf`.
pub fn write_type_map_csv<W: std::io::Write>(
    spec: &crate::geometry::GridSpec,
    entries: &[Result<Spectrum, EigenError>],
    out: W,
) -> Result<(), csv::Error> {
    use crate::residual::fmt_f64;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "xi1".to_string(),
        "xi2".to_string(),
        "type".into(),
        "max_imag".into(),
    ];
    for k in 1..=8 {
        header.push(format!("l{k}_re"));
        header.push(format!("l{k}_im"));
    }
    w.write_record(&header)?;
    for i in 0..spec.n1 {
        for j in 0..spec.n2 {
            let xi = spec.xi(i, j);
            let mut record = vec![fmt_f64(xi[0]), fmt_f64(xi[1])];
            match &entries[spec.index(i, j)] {
                Ok(sp) => {
                    record.push(sp.flow_type.letter().to_string());
                    record.push(fmt_f64(sp.max_imag));
                    for v in &sp.eigenvalues {
                        match v {
                            PencilValue::Finite(z) => {
                                record.push(fmt_f64(z.re));
                                record.push(fmt_f64(z.im));
                            }
                            PencilValue::Infinite => {
                                record.push("inf".to_string());
                                record.push("0".to_string());
                            }
                        }
                    }
                }
                Err(_) => {
                    record.push("X".to_string());
                    record.push(String::new());
                    record.extend(std::iter::repeat_n(String::new(), 16));
                }
            }
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricData;
    use crate::state::GasLaw;

    const IDEAL: GasLaw = GasLaw::Ideal { gamma: 1.4 };

    fn unit_sound_state(v: [f64; 2], b: [f64; 2], b3: f64) -> (SurfaceState, GasLaw) {
        // ρ = 1 with P = 1/γ gives c = 1 for the ideal gas
        let s = SurfaceState::new(1.0, v[0], v[1], 0.3, 1.0 / 1.4, b[0], b[1], b3, 1.0).unwrap();
        (s, IDEAL)
    }

    #[test]
    fn quasilinear_matrix_entries() {
        let m = MetricData::orthonormal();
        let s = SurfaceState::new(1.3, 0.7, -0.4, 0.2, 0.9, 1.0, 0.5, 0.6, 1.7).unwrap();
        let pair = build_quasilinear(&s, &m, &IDEAL).unwrap();
        let mr = s.mu * s.rho;
        // comments give 1-based (row, col) positions in the matrix layout
        assert_eq!(pair.c1[(0, 0)], 0.7); // C¹[1][1] = v¹
        assert_eq!(pair.c1[(0, 1)], 1.3); // C¹[1][2] = ρ
        assert_eq!(pair.c1[(3, 7)], -1.0 / mr); // C¹[4][8] = −b¹/(μρ)
        assert_eq!(pair.c2[(3, 7)], -0.5 / mr); // C²[4][8] = −b²/(μρ)
        let c_sq = 1.4 * s.p / s.rho;
        assert!((pair.c1[(4, 1)] - c_sq * s.rho).abs() < 1e-14); // C¹[5][2] = c²ρ
                                                                 // C¹[2][7] = g¹¹ (g_{2α}b^α)/(μρ) with g = I and b = (1, 0.5)
        assert!((pair.c1[(1, 6)] - 0.5 / mr).abs() < 1e-14);
        // C¹[2][5] = g¹¹/ρ
        assert!((pair.c1[(1, 4)] - 1.0 / s.rho).abs() < 1e-14);
    }

    #[test]
    fn rest_state_matrix_structure() {
        let m = MetricData::orthonormal();
        let s = SurfaceState::rest(2.0, 1.0, 1.0).unwrap();
        let pair = build_quasilinear(&s, &m, &IDEAL).unwrap();
        for i in 0..8 {
            assert_eq!(pair.c1[(i, i)], 0.0);
        }
        assert_eq!(pair.c1[(0, 1)], 2.0); // ρ
        assert!((pair.c1[(1, 4)] - 0.5).abs() < 1e-15); // 1/ρ
    }

    #[test]
    fn explicit_speed_examples() {
        let m = MetricData::orthonormal();
        // μρ = 1, v = (2, 1), b = (1, 0.5): all four collapse to 0.5
        let s = SurfaceState::new(1.0, 2.0, 1.0, 0.0, 1.0, 1.0, 0.5, 0.0, 1.0).unwrap();
        let sp = explicit_speeds(&s, &m).unwrap();
        for x in sp {
            assert!((x - 0.5).abs() < 1e-14);
        }
        // μρ = 1, v = (1, 0), b = (0, 1): {0, 0, 1, −1}
        let s = SurfaceState::new(1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        let sp = explicit_speeds(&s, &m).unwrap();
        assert_eq!(sp[0], 0.0);
        assert_eq!(sp[1], 0.0);
        assert!((sp[2] - 1.0).abs() < 1e-14);
        assert!((sp[3] + 1.0).abs() < 1e-14);
        // b = 0: both Alfvén values reduce to v²/v¹
        let s = SurfaceState::new(1.7, 2.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.9).unwrap();
        let sp = explicit_speeds(&s, &m).unwrap();
        for x in sp {
            assert!((x - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn explicit_speeds_degenerate_denominator() {
        let m = MetricData::orthonormal();
        let s = SurfaceState::new(1.0, 0.0, 1.0, 0.0, 1.0, 0.3, 0.1, 0.0, 1.0).unwrap();
        assert!(explicit_speeds(&s, &m).is_err());
        // b¹ = −√(μρ)v¹ kills one Alfvén branch
        let s = SurfaceState::new(1.0, 1.0, 0.5, 0.0, 1.0, -1.0, 0.2, 0.0, 1.0).unwrap();
        assert!(explicit_speeds(&s, &m).is_err());
    }

    #[test]
    fn supersonic_euler_limit_spectrum() {
        // B = 0, c = 1, v = (2, 0): six zeros and ±1/√3.
        let m = MetricData::orthonormal();
        let (s, gas) = unit_sound_state([2.0, 0.0], [0.0, 0.0], 0.0);
        let sp = full_spectrum(&s, &m, &gas).unwrap();
        assert_eq!(sp.flow_type, FlowType::Hyperbolic);
        assert_eq!(sp.n_infinite, 0);
        let vals = sp.finite_values();
        let root = 3.0f64.sqrt().recip();
        assert!((vals[0].re + root).abs() < 1e-8, "min {:?}", vals[0]);
        assert!((vals[7].re - root).abs() < 1e-8, "max {:?}", vals[7]);
        for z in &vals[1..7] {
            assert!(z.norm() < 1e-8, "expected zero cluster, got {z}");
        }
    }

    #[test]
    fn subsonic_euler_limit_is_elliptic() {
        // v = (0.1, 0): the acoustic pair turns complex, λ² = −1/0.99.
        let m = MetricData::orthonormal();
        let (s, gas) = unit_sound_state([0.1, 0.0], [0.0, 0.0], 0.0);
        let sp = full_spectrum(&s, &m, &gas).unwrap();
        assert_eq!(sp.flow_type, FlowType::Elliptic);
        let want = (1.0f64 / 0.99).sqrt();
        assert!(
            (sp.max_imag - want).abs() < 1e-8,
            "max_imag {}",
            sp.max_imag
        );
        // conjugate pairing
        let vals = sp.finite_values();
        let pair: Vec<_> = vals.iter().filter(|z| z.im.abs() > 1e-9).collect();
        assert_eq!(pair.len(), 2);
        assert!((pair[0].im + pair[1].im).abs() < 1e-10);
    }

    #[test]
    fn degenerate_state_flags_infinite() {
        // v¹ = b¹ = 0: C¹ acquires zero rows and the pencil direction is
        // singular; infinite eigenvalues must be flagged. With supersonic
        // crossflow the finite pair is real, so the label is Degenerate.
        let m = MetricData::orthonormal();
        let s = SurfaceState::new(1.0, 0.0, 2.5, 0.1, 1.0, 0.0, 0.3, 0.2, 1.0).unwrap();
        let sp = full_spectrum(&s, &m, &IDEAL).unwrap();
        assert!(sp.n_infinite >= 1, "spectrum {:?}", sp);
        assert_eq!(sp.flow_type, FlowType::Degenerate);
        // subsonic crossflow turns the finite pair complex: Elliptic takes
        // precedence per the type definition ("any complex eigenvalue").
        let s = SurfaceState::new(1.0, 0.0, 0.8, 0.1, 1.0, 0.0, 0.4, 0.2, 1.0).unwrap();
        let sp = full_spectrum(&s, &m, &IDEAL).unwrap();
        assert!(sp.n_infinite >= 1);
        assert_eq!(sp.flow_type, FlowType::Elliptic);
    }

    #[test]
    fn magnetized_state_deflation_and_quartic() {
        // frozen oracle values for the magnetized example:
        // γ = 5/3, ρ = P = 1, v = (3, 0.2), b = (0.8, −0.4), B³ = 0.5, V³ = 0.1
        let m = MetricData::orthonormal();
        let gas = GasLaw::Ideal { gamma: 5.0 / 3.0 };
        let s = SurfaceState::new(1.0, 3.0, 0.2, 0.1, 1.0, 0.8, -0.4, 0.5, 1.0).unwrap();
        let explicit = explicit_speeds(&s, &m).unwrap();
        assert!((explicit[0] - 1.0 / 15.0).abs() < 1e-14);
        assert!((explicit[2] + 1.0 / 19.0).abs() < 1e-14);
        assert!((explicit[3] - 3.0 / 11.0).abs() < 1e-14);
        let sp = full_spectrum(&s, &m, &gas).unwrap();
        let (matched, deflated) = deflate(&sp, &explicit);
        for (cf, num) in explicit.iter().zip(&matched) {
            assert!(
                (num - Complex64::new(*cf, 0.0)).norm() / cf.abs() < 1e-8,
                "{num} vs {cf}"
            );
        }
        assert_eq!(deflated.len(), 4);
        // deflated roots computed independently (pencil eigensolve oracle)
        let mut want = [-0.56394657, -0.03259213, 0.22423187, 0.67210434];
        want.sort_by(f64::total_cmp);
        let mut got: Vec<f64> = deflated.iter().map(|z| z.re).collect();
        got.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-7, "{g} vs {w}");
        }
        // each deflated root satisfies the quartic relation
        for z in &deflated {
            assert!(z.im.abs() < 1e-9);
            let r = quartic_residual(&s, &m, &gas, z.re).unwrap();
            assert!(r < 1e-6, "quartic residual {r} at λ = {z}");
        }
        // negative control: the streamline speed does not satisfy it
        let r = quartic_residual(&s, &m, &gas, explicit[0]).unwrap();
        assert!(
            r > 1e-3,
            "explicit root should not satisfy the quartic, r = {r}"
        );
    }

    #[test]
    fn quartic_denominator_precondition() {
        let m = MetricData::orthonormal();
        // b¹ = 0 makes b_c² − (b²)² vanish on the identity metric
        let s = SurfaceState::new(1.0, 1.0, 0.3, 0.0, 1.0, 0.0, 0.7, 0.0, 1.0).unwrap();
        assert!(matches!(
            quartic_residual(&s, &m, &IDEAL, 0.5),
            Err(BranchError::Denominator(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let m = MetricData::orthonormal();
        let (hyp, gas) = unit_sound_state([2.0, 0.0], [0.0, 0.0], 0.0);
        assert_eq!(
            classify(&hyp, &m, &gas, None).unwrap(),
            FlowType::Hyperbolic
        );
        let (ell, gas) = unit_sound_state([0.1, 0.0], [0.0, 0.0], 0.0);
        assert_eq!(classify(&ell, &m, &gas, None).unwrap(), FlowType::Elliptic);
        let s = SurfaceState::new(1.0, 0.0, 2.5, 0.1, 1.0, 0.0, 0.3, 0.2, 1.0).unwrap();
        assert_eq!(
            classify(&s, &m, &IDEAL, None).unwrap(),
            FlowType::Degenerate
        );
    }

    #[test]
    fn b_to_zero_continuity() {
        // as b, B³ → 0 the spectrum approaches the conical-Euler set
        let m = MetricData::orthonormal();
        let (s0, gas) = unit_sound_state([2.0, 0.4], [0.0, 0.0], 0.0);
        let eps = 1e-6;
        let s = SurfaceState::new(
            s0.rho,
            s0.v[0],
            s0.v[1],
            s0.v3,
            s0.p,
            0.6 * eps,
            -0.3 * eps,
            0.5 * eps,
            s0.mu,
        )
        .unwrap();
        let sp = full_spectrum(&s, &m, &gas).unwrap();
        // Euler set: v²/v¹ six-fold plus the acoustic pair of
        // (v² − λv¹)² = c²(g¹¹λ² − 2g¹²λ + g²²)
        let stream = s0.v[1] / s0.v[0];
        let (a, b, c) = (
            s0.v[0] * s0.v[0] - 1.0,
            -2.0 * (s0.v[0] * s0.v[1]),
            s0.v[1] * s0.v[1] - 1.0,
        );
        let disc = (b * b - 4.0 * a * c).sqrt();
        let acoustic = [(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)];
        let mut want: Vec<f64> = std::iter::repeat_n(stream, 6).chain(acoustic).collect();
        want.sort_by(f64::total_cmp);
        let mut got: Vec<f64> = sp.finite_values().iter().map(|z| z.re).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got.len(), 8);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-4, "{g} vs {w}");
        }
    }

    #[test]
    fn type_map_single_transition_band() {
        // v¹ ramps 0.1 → 2.0 along ξ¹ with c = 1: elliptic below the sonic
        // crossing at v¹ = 1, hyperbolic above, one transition band.
        use crate::geometry::Chart;
        use crate::residual::FieldGrid;
        let chart = Chart::spherical([0.4, 2.7], [0.0, 2.0 * std::f64::consts::PI], true).unwrap();
        let gas = GasLaw::Ideal { gamma: 1.4 };
        let n = 24;
        let field = FieldGrid::from_fn(chart, n, n, gas, |chart, xi| {
            let frac = (xi[0] - chart.domain[0][0]) / (chart.domain[0][1] - chart.domain[0][0]);
            let v1 = 0.1 + 1.9 * frac;
            Ok(SurfaceState::new(
                1.0,
                v1,
                0.0,
                0.0,
                1.0 / 1.4,
                0.0,
                0.0,
                0.0,
                1.0,
            )?)
        })
        .unwrap();
        let entries = type_map(&field, None).unwrap();
        assert_eq!(entries.len(), n * n);
        let mut letters = Vec::new();
        for i in 0..n {
            // constant along ξ² (the metric never enters the v² = 0, B = 0
            // acoustic condition): every row is uniform
            let row: Vec<char> = (0..n)
                .map(|j| {
                    entries[field.grid.index(i, j)]
                        .as_ref()
                        .unwrap()
                        .flow_type
                        .letter()
                })
                .collect();
            assert!(
                row.iter().all(|&c| c == row[0]),
                "row {i} not uniform: {row:?}"
            );
            letters.push(row[0]);
        }
        assert_eq!(letters[0], 'E');
        assert_eq!(letters[n - 1], 'H');
        // one contiguous band: E…(D?)…H with a single switch region
        let transitions = letters.windows(2).filter(|p| p[0] != p[1]).count();
        assert!(
            transitions <= 2,
            "expected a single transition band, got {letters:?}"
        );
        let h_count = letters.iter().filter(|&&c| c == 'H').count();
        let e_count = letters.iter().filter(|&&c| c == 'E').count();
        assert!(h_count > 0 && e_count > 0);
    }

    #[test]
    fn uniform_fields_classify_uniformly() {
        use crate::geometry::Chart;
        use crate::residual::FieldGrid;
        let chart = Chart::spherical([0.9, 2.2], [0.0, 2.0 * std::f64::consts::PI], true).unwrap();
        let gas = GasLaw::Ideal { gamma: 1.4 };
        for (v1, want) in [(2.0, FlowType::Hyperbolic), (0.1, FlowType::Elliptic)] {
            let field = FieldGrid::from_fn(chart.clone(), 8, 8, gas, |_, _| {
                Ok(SurfaceState::new(
                    1.0,
                    v1,
                    0.0,
                    0.0,
                    1.0 / 1.4,
                    0.0,
                    0.0,
                    0.0,
                    1.0,
                )?)
            })
            .unwrap();
            let entries = type_map(&field, None).unwrap();
            assert!(entries
                .iter()
                .all(|e| e.as_ref().unwrap().flow_type == want));
        }
    }

    #[test]
    fn classification_is_data_parallel_over_nodes() {
        // pointwise evaluation shares only immutable data; splitting a grid
        // across threads must reproduce the sequential type map exactly
        use crate::geometry::Chart;
        use crate::residual::FieldGrid;
        let chart = Chart::spherical([0.4, 2.7], [0.0, 2.0 * std::f64::consts::PI], true).unwrap();
        let gas = GasLaw::Ideal { gamma: 1.4 };
        let n = 12;
        let field = FieldGrid::from_fn(chart, n, n, gas, |chart, xi| {
            let frac = (xi[0] - chart.domain[0][0]) / (chart.domain[0][1] - chart.domain[0][0]);
            Ok(SurfaceState::new(
                1.0,
                0.1 + 1.9 * frac,
                0.2,
                0.0,
                1.0 / 1.4,
                0.3,
                -0.2,
                0.1,
                1.0,
            )?)
        })
        .unwrap();
        let sequential: Vec<char> = type_map(&field, None)
            .unwrap()
            .iter()
            .map(|e| e.as_ref().unwrap().flow_type.letter())
            .collect();
        let mut parallel = vec!['?'; n * n];
        std::thread::scope(|scope| {
            for (i, row) in parallel.chunks_mut(n).enumerate() {
                let field = &field;
                scope.spawn(move || {
                    for (j, slot) in row.iter_mut().enumerate() {
                        let metric = field.chart.metric_at(field.grid.xi(i, j)).unwrap();
                        *slot = classify(field.state(i, j), &metric, &field.gas, None)
                            .unwrap()
                            .letter();
                    }
                });
            }
        });
        assert_eq!(sequential, parallel);
    }

    #[test]
    fn explicit_match_on_random_spd_metrics() {
        // the closed forms hold for arbitrary metrics, unlike the quartic
        let gas = IDEAL;
        let mut sampler = crate::verify::StateSampler::new(31);
        for _ in 0..100 {
            let state = sampler.sample();
            let metric = sampler.sample_metric();
            let dev = crate::verify::explicit_match_deviation(&state, &metric, &gas).unwrap();
            assert!(dev < 1e-8, "deviation {dev}");
        }
    }
}
