//! Independent numerical oracles and the verification suites.
//!
//! The eigensolvers here are deliberately in-repo: matrices in this crate are
//! at most 8×8, and keeping the oracle small and auditable beats pulling in a
//! LAPACK binding. `dense_eigen` is Householder Hessenberg reduction followed
//! by Francis double-shift QR (the classic EISPACK `hqr` scheme, eigenvalues
//! only). `generalized_eigen` solves the pencil det(A − λB) = 0, falling back
//! to a shifted formulation when B is ill-conditioned so that v¹ → 0 states
//! degrade into flagged infinite eigenvalues instead of garbage.

use crate::characteristics::{self, QuasilinearPair};
use crate::geometry::Chart;
use crate::linalg::Matrix;
use crate::pseudotime::{self, Direction};
use crate::residual::{self, FieldGrid, MetricGrid};
use crate::state::{GasLaw, SurfaceState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Condition-number gate below which the pencil reduces to B⁻¹A directly.
pub const PENCIL_COND_GATE: f64 = 1e8;
/// |1 − sμ| threshold (relative) flagging an infinite pencil eigenvalue.
const INF_EIGEN_TOL: f64 = 1e-6;
/// QR iterations allowed per deflated eigenvalue.
const MAX_QR_SWEEPS_PER_EIGENVALUE: usize = 40;

#[derive(Debug, Clone, Error)]
pub enum EigenError {
    #[error("QR iteration failed to converge after {iterations} sweeps")]
    Convergence { iterations: usize },
    #[error("pencil is singular: det(A − λB) vanishes identically to working precision")]
    SingularPencil,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("state is thermodynamically inadmissible: {0}")]
    BadState(String),
}

/// Norms already below the roundoff floor; a convergence order is meaningless.
#[derive(Debug, Error)]
#[error("residual norm {norm} is below the 1e-13 noise floor")]
pub struct NoiseFloorError {
    pub norm: f64,
}

/// One pencil eigenvalue: finite, or flagged infinite (B-null direction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PencilValue {
    Finite(Complex64),
    Infinite,
}

impl PencilValue {
    pub fn finite(&self) -> Option<Complex64> {
        match self {
            PencilValue::Finite(z) => Some(*z),
            PencilValue::Infinite => None,
        }
    }
}

/// Eigenvalues with convergence metadata.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Sorted by (Re, Im); infinite values last.
    pub values: Vec<PencilValue>,
    pub converged: bool,
    pub iterations: usize,
}

impl EigenResult {
    pub fn finite_values(&self) -> Vec<Complex64> {
        self.values.iter().filter_map(PencilValue::finite).collect()
    }

    pub fn n_infinite(&self) -> usize {
        self.values
            .iter()
            .filter(|v| matches!(v, PencilValue::Infinite))
            .count()
    }
}

/// `max` that treats NaN as +∞ so a corrupted deviation can never be
/// silently swallowed by a passing suite.
fn max_or_inf(acc: f64, x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        acc.max(x)
    }
}

pub fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// All eigenvalues of a real square matrix of order ≤ 16.
pub fn dense_eigen(a: &Matrix) -> Result<EigenResult, EigenError> {
    if !a.is_finite() {
        return Err(EigenError::NonFinite);
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    let (mut values, iterations) = hqr(&mut h)?;
    sort_complex(&mut values);
    Ok(EigenResult {
        values: values.into_iter().map(PencilValue::Finite).collect(),
        converged: true,
        iterations,
    })
}

/// Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(a: &mut Matrix) {
    let n = a.order();
    for k in 0..n.saturating_sub(2) {
        let mut scale = 0.0f64;
        for i in k + 1..n {
            scale += a[(i, k)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut v = vec![0.0; n];
        let mut sigma = 0.0;
        for i in k + 1..n {
            v[i] = a[(i, k)] / scale;
            sigma += v[i] * v[i];
        }
        let mut alpha = sigma.sqrt();
        if v[k + 1] > 0.0 {
            alpha = -alpha;
        }
        let beta = sigma - v[k + 1] * alpha;
        if beta == 0.0 {
            continue;
        }
        v[k + 1] -= alpha;
        // A ← P A P with P = I − v vᵀ / β
        for j in 0..n {
            let mut s = 0.0;
            for i in k + 1..n {
                s += v[i] * a[(i, j)];
            }
            s /= beta;
            for i in k + 1..n {
                a[(i, j)] -= s * v[i];
            }
        }
        for i in 0..n {
            let mut s = 0.0;
            for j in k + 1..n {
                s += v[j] * a[(i, j)];
            }
            s /= beta;
            for j in k + 1..n {
                a[(i, j)] -= s * v[j];
            }
        }
        a[(k + 1, k)] = alpha * scale;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
fn hqr(h: &mut Matrix) -> Result<(Vec<Complex64>, usize), EigenError> {
    let n = h.order();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok((values, 0));
    }
    let eps = f64::EPSILON;
    let mut anorm = 0.0f64;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += h[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok((values, 0));
    }
    let mut total_its = 0usize;
    let mut t = 0.0f64;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            // find small subdiagonal element
            let mut l = nn;
            while l > 0 {
                let s =
                    h[(l as usize - 1, l as usize - 1)].abs() + h[(l as usize, l as usize)].abs();
                let s = if s == 0.0 { anorm } else { s };
                if h[(l as usize, l as usize - 1)].abs() <= eps * s {
                    h[(l as usize, l as usize - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = h[(nn as usize, nn as usize)];
            if l == nn {
                values[nn as usize] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let y = h[(nn as usize - 1, nn as usize - 1)];
            let w = h[(nn as usize, nn as usize - 1)] * h[(nn as usize - 1, nn as usize)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x = x + t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    let r1 = x + z;
                    let r2 = if z != 0.0 { x - w / z } else { r1 };
                    values[nn as usize - 1] = Complex64::new(r1, 0.0);
                    values[nn as usize] = Complex64::new(r2, 0.0);
                } else {
                    values[nn as usize - 1] = Complex64::new(x + p, z);
                    values[nn as usize] = Complex64::new(x + p, -z);
                }
                nn -= 2;
                break;
            }
            if its == MAX_QR_SWEEPS_PER_EIGENVALUE {
                return Err(EigenError::Convergence {
                    iterations: total_its,
                });
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 0..=nn as usize {
                    h[(i, i)] -= x;
                }
                let s = h[(nn as usize, nn as usize - 1)].abs()
                    + h[(nn as usize - 1, nn as usize - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_its += 1;
            // find two consecutive small subdiagonals
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let mu = m as usize;
                let z = h[(mu, mu)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[(mu + 1, mu)] + h[(mu, mu + 1)];
                q = h[(mu + 1, mu + 1)] - z - rr - ss;
                r = h[(mu + 2, mu + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h[(mu, mu - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (h[(mu - 1, mu - 1)].abs() + z.abs() + h[(mu + 1, mu + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                h[(i as usize, i as usize - 2)] = 0.0;
                if i > m + 2 {
                    h[(i as usize, i as usize - 3)] = 0.0;
                }
            }
            // double QR sweep on rows l..nn
            for k in m..nn {
                let ku = k as usize;
                if k != m {
                    p = h[(ku, ku - 1)];
                    q = h[(ku + 1, ku - 1)];
                    r = if k != nn - 1 {
                        h[(ku + 2, ku - 1)]
                    } else {
                        0.0
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        h[(ku, ku - 1)] = -h[(ku, ku - 1)];
                    }
                } else {
                    h[(ku, ku - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in ku..=nn as usize {
                    let mut pp = h[(ku, j)] + q * h[(ku + 1, j)];
                    if k != nn - 1 {
                        pp += r * h[(ku + 2, j)];
                        h[(ku + 2, j)] -= pp * z;
                    }
                    h[(ku + 1, j)] -= pp * y;
                    h[(ku, j)] -= pp * x;
                }
                let mmin = if nn < k + 3 { nn as usize } else { ku + 3 };
                for i in l as usize..=mmin {
                    let mut pp = x * h[(i, ku)] + y * h[(i, ku + 1)];
                    if k != nn - 1 {
                        pp += z * h[(i, ku + 2)];
                        h[(i, ku + 2)] -= pp * r;
                    }
                    h[(i, ku + 1)] -= pp * q;
                    h[(i, ku)] -= pp;
                }
            }
        }
    }
    Ok((values, total_its))
}

/// Eigenvalues of the pencil det(A − λB) = 0.
///
/// With B well-conditioned this is `dense_eigen(B⁻¹A)`. Otherwise the pencil
/// is shifted: for a regular pencil, B + sA is invertible for almost every s,
/// eigenvalues μ of (B + sA)⁻¹A map back through λ = μ/(1 − sμ), and μ ≈ 1/s
/// flags λ = ∞.
pub fn generalized_eigen(a: &Matrix, b: &Matrix) -> Result<EigenResult, EigenError> {
    assert_eq!(a.order(), b.order());
    if !a.is_finite() || !b.is_finite() {
        return Err(EigenError::NonFinite);
    }
    if let Some(lu) = b.lu() {
        if b.cond_one() < PENCIL_COND_GATE {
            let m = lu.solve_matrix(a);
            return dense_eigen(&m);
        }
    }
    // shifted formulation
    let na = a.norm_one();
    let nb = b.norm_one();
    if na == 0.0 && nb == 0.0 {
        return Err(EigenError::SingularPencil);
    }
    let s0 = (nb + na) / (2.0 * na.max(f64::MIN_POSITIVE));
    let mut best: Option<(f64, f64)> = None; // (cond, shift)
    for factor in [1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 0.25, -0.25] {
        let s = s0 * factor;
        let shifted = b.add(&a.scaled(s));
        let cond = shifted.cond_one();
        if best.is_none_or(|(c, _)| cond < c) {
            best = Some((cond, s));
        }
        if cond < 1e6 {
            break;
        }
    }
    let (cond, s) = best.ok_or(EigenError::SingularPencil)?;
    if !cond.is_finite() || cond > 1e12 {
        return Err(EigenError::SingularPencil);
    }
    let shifted = b.add(&a.scaled(s));
    let m = shifted
        .lu()
        .ok_or(EigenError::SingularPencil)?
        .solve_matrix(a);
    let inner = dense_eigen(&m)?;
    let mut finite: Vec<Complex64> = Vec::new();
    let mut n_inf = 0usize;
    for v in inner.values {
        let mu = v.finite().expect("dense_eigen returns finite values");
        let denom = Complex64::new(1.0, 0.0) - mu * s;
        if denom.norm() <= INF_EIGEN_TOL * (mu * s).norm().max(1.0) {
            n_inf += 1;
        } else {
            finite.push(mu / denom);
        }
    }
    sort_complex(&mut finite);
    let mut values: Vec<PencilValue> = finite.into_iter().map(PencilValue::Finite).collect();
    values.extend(std::iter::repeat_n(PencilValue::Infinite, n_inf));
    Ok(EigenResult {
        values,
        converged: true,
        iterations: inner.iterations,
    })
}

/// Projects constant Cartesian (ρ∞, V∞, P∞, B∞) onto every node of a chart
/// grid. Constant Cartesian fields satisfy the steady 3D equations and the
/// conical assumption exactly, so they are the canonical exact solution for
/// residual convergence tests.
#[allow(clippy::too_many_arguments)]
pub fn freestream_field(
    chart: &Chart,
    n1: usize,
    n2: usize,
    rho: f64,
    v_inf: [f64; 3],
    p: f64,
    b_inf: [f64; 3],
    mu: f64,
    gamma: f64,
) -> Result<FieldGrid, residual::ResidualError> {
    let gas = GasLaw::Ideal { gamma };
    FieldGrid::from_fn(chart.clone(), n1, n2, gas, |chart, xi| {
        let (v, v3) = chart.project_vector(xi, v_inf)?;
        let (b, b3) = chart.project_vector(xi, b_inf)?;
        Ok(SurfaceState::new(
            rho, v[0], v[1], v3, p, b[0], b[1], b3, mu,
        )?)
    })
}

/// Observed order from norms at spacings h, h/2, h/4:
/// the two dyadic log₂ ratios averaged.
pub fn convergence_order(norms: &[f64; 3]) -> Result<f64, NoiseFloorError> {
    for &n in norms {
        if n < 1e-13 {
            return Err(NoiseFloorError { norm: n });
        }
    }
    Ok(0.5 * ((norms[0] / norms[1]).log2() + (norms[1] / norms[2]).log2()))
}

// ---------------------------------------------------------------------------
// Random-state sampling
// ---------------------------------------------------------------------------

/// Seeded sampler of admissible states, filtering near the closed-form
/// denominator zeros so the explicit streamline/Alfvén speeds stay
/// well-defined. Tracks the filter rate for reporting.
pub struct StateSampler {
    rng: ChaCha8Rng,
    pub attempts: usize,
    pub accepted: usize,
    /// Reject when a closed-form denominator is within this of zero.
    pub denominator_floor: f64,
}

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        StateSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            attempts: 0,
            accepted: 0,
            denominator_floor: 1e-3,
        }
    }

    pub fn filter_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            1.0 - self.accepted as f64 / self.attempts as f64
        }
    }

    fn raw_state(&mut self) -> SurfaceState {
        let mut u = |lo: f64, hi: f64| self.rng.gen_range(lo..hi);
        SurfaceState::new(
            u(0.5, 2.0),
            u(-2.0, 2.0),
            u(-2.0, 2.0),
            u(-2.0, 2.0),
            u(0.5, 2.0),
            u(-2.0, 2.0),
            u(-2.0, 2.0),
            u(-2.0, 2.0),
            1.0,
        )
        .expect("sampled ranges are admissible")
    }

    /// Admissible state away from every explicit-speed denominator zero.
    pub fn sample(&mut self) -> SurfaceState {
        loop {
            self.attempts += 1;
            let s = self.raw_state();
            let sq = (s.mu * s.rho).sqrt();
            let floor = self.denominator_floor;
            if s.v[0].abs() > floor
                && (s.b[0] + sq * s.v[0]).abs() > floor
                && (s.b[0] - sq * s.v[0]).abs() > floor
            {
                self.accepted += 1;
                return s;
            }
        }
    }

    /// Unfiltered admissible state (for suites with no denominator needs).
    pub fn sample_unfiltered(&mut self) -> SurfaceState {
        self.attempts += 1;
        self.accepted += 1;
        self.raw_state()
    }

    /// Random symmetric positive-definite metric via a Cholesky factor.
    pub fn sample_metric(&mut self) -> crate::geometry::MetricData {
        let l11 = self.rng.gen_range(0.5..1.5);
        let l21 = self.rng.gen_range(-0.8..0.8);
        let l22 = self.rng.gen_range(0.5..1.5);
        crate::geometry::MetricData::from_g([
            [l11 * l11, l11 * l21],
            [l11 * l21, l21 * l21 + l22 * l22],
        ])
    }

    /// Covariant direction, normalized to g^{αβ} w_α w_β = 1.
    pub fn sample_direction(&mut self, metric: &crate::geometry::MetricData) -> Direction {
        loop {
            let w = Direction::new(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0));
            if let Ok(d) = w.normalized(metric) {
                return d;
            }
        }
    }

    /// Random invertible matrix, entries U[−1, 1], regenerated until
    /// |det| exceeds 1e−3.
    pub fn sample_invertible(&mut self, n: usize) -> Matrix {
        loop {
            let mut m = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = self.rng.gen_range(-1.0..1.0);
                }
            }
            if m.det().abs() > 1e-3 {
                return m;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

/// Outcome of one verification suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub case_deviations: Vec<f64>,
}

impl SuiteReport {
    fn new(name: &str, cases: usize, max_deviation: f64, tolerance: f64) -> Self {
        SuiteReport {
            name: name.to_string(),
            cases,
            max_deviation,
            tolerance,
            pass: max_deviation <= tolerance,
            filter_rate: None,
            detail: None,
            case_deviations: Vec::new(),
        }
    }
}

/// Full verification report emitted by `conimhd verify`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

const IDEAL_GAMMA: f64 = 1.4;

fn ideal_gas() -> GasLaw {
    GasLaw::Ideal { gamma: IDEAL_GAMMA }
}

/// Geometry identity suite: metric inverse, Christoffel symmetry, the
/// contracted-Christoffel identity, and projection round trips at random
/// chart points.
///
/// The identity family is gated at 1e−10. The contracted-Christoffel check
/// has its own tolerance per chart kind: 1e−8 where the connection is
/// closed-form, 1e−6 where it comes from nested finite differences of the
/// embedding (the h_geom = 1e−5 roundoff floor).
pub fn geometry_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6765_6f6d);
    let charts = [
        (
            Chart::spherical(
                [0.2, std::f64::consts::PI - 0.2],
                [0.0, 2.0 * std::f64::consts::PI],
                true,
            )
            .unwrap(),
            1e-8,
        ),
        (
            Chart::embedding(
                "sheared-spherical",
                [
                    [0.3, std::f64::consts::PI - 0.3],
                    [0.0, 2.0 * std::f64::consts::PI],
                ],
                [false, true],
            )
            .unwrap(),
            1e-6,
        ),
    ];
    let mut worst = 0.0f64;
    let mut worst_christoffel_ratio = 0.0f64;
    for k in 0..cases {
        let (chart, chris_tol) = &charts[k % charts.len()];
        let t = rng.gen_range(chart.domain[0][0]..chart.domain[0][1]);
        let p = rng.gen_range(chart.domain[1][0]..chart.domain[1][1]);
        let m = match chart.metric_at([t, p]) {
            Ok(m) => m,
            Err(_) => {
                worst = f64::INFINITY;
                continue;
            }
        };
        // positive definiteness
        if m.g[0][0] <= 0.0 || m.det <= 0.0 {
            worst = f64::INFINITY;
        }
        // inverse identity
        for a in 0..2 {
            for b in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += m.g_inv[a][l] * m.g[l][b];
                }
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - want).abs());
            }
        }
        // Christoffel symmetry is structural; verify storage honors it
        for a in 0..2 {
            worst = worst.max((m.christoffel[0][a][1] - m.christoffel[1][a][0]).abs());
        }
        // contracted identity vs an independent FD of √g
        let h = 1e-5;
        for gmm in 0..2 {
            let mut plus = [t, p];
            let mut minus = [t, p];
            plus[gmm] += h;
            minus[gmm] -= h;
            if let (Ok(mp), Ok(mm)) = (chart.metric_at(plus), chart.metric_at(minus)) {
                let fd = (mp.sqrt_det - mm.sqrt_det) / (2.0 * h) / m.sqrt_det;
                let dev = (m.contracted_christoffel(gmm) - fd).abs();
                worst_christoffel_ratio = worst_christoffel_ratio.max(dev / chris_tol);
            }
        }
        // projection round trip and orthogonal decomposition
        let w = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        let (surf, w3) = m.project(w);
        let back = m.lift(surf, w3);
        for i in 0..3 {
            worst = worst.max((back[i] - w[i]).abs());
        }
        let mut gs = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                gs += m.g[a][b] * surf[a] * surf[b];
            }
        }
        let total = w.iter().map(|x| x * x).sum::<f64>();
        worst = worst.max((gs + w3 * w3 - total).abs());
    }
    let mut report = SuiteReport::new("geometry_identities", cases, worst, 1e-10);
    report.pass = report.pass && worst_christoffel_ratio <= 1.0;
    report.detail = Some(format!(
        "contracted-Christoffel identity at {:.2}x its tolerance (1e-8 closed-form, 1e-6 FD charts)",
        worst_christoffel_ratio
    ));
    report
}

/// Closed-form eigenvalue suite: each explicit streamline/Alfvén speed
/// must match a generalized-pencil eigenvalue of (C², C¹).
pub fn eigenvalue_match_suite(seed: u64, cases: usize) -> SuiteReport {
    let gas = ideal_gas();
    let mut sampler = StateSampler::new(seed ^ 0x6569_6731);
    let metric = crate::geometry::MetricData::orthonormal();
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let state = sampler.sample();
        let dev = explicit_match_deviation(&state, &metric, &gas).unwrap_or(f64::INFINITY);
        worst = max_or_inf(worst, dev);
    }
    let mut report = SuiteReport::new("eigenvalue_match", cases, worst, 1e-8);
    report.filter_rate = Some(sampler.filter_rate());
    report
}

/// Worst relative deviation between the four explicit speeds and their
/// greedily matched pencil eigenvalues.
pub fn explicit_match_deviation(
    state: &SurfaceState,
    metric: &crate::geometry::MetricData,
    gas: &GasLaw,
) -> Result<f64, EigenError> {
    let spectrum = characteristics::full_spectrum(state, metric, gas)?;
    let explicit =
        characteristics::explicit_speeds(state, metric).map_err(|_| EigenError::SingularPencil)?;
    let (matched, _) = characteristics::deflate(&spectrum, &explicit);
    let mut worst = 0.0f64;
    for (cf, num) in explicit.iter().zip(&matched) {
        let denom = cf.abs().max(1e-9);
        worst = max_or_inf(worst, (num - Complex64::new(*cf, 0.0)).norm() / denom);
    }
    Ok(worst)
}

/// Quartic-relation suite: the four deflated eigenvalues must satisfy
/// the fast/slow quartic relation where its preconditions hold.
pub fn quartic_suite(seed: u64, cases: usize) -> SuiteReport {
    let gas = ideal_gas();
    let mut sampler = StateSampler::new(seed ^ 0x7175_6172);
    let metric = crate::geometry::MetricData::orthonormal();
    let mut worst = 0.0f64;
    let mut precondition_failures = 0usize;
    for _ in 0..cases {
        let state = sampler.sample();
        let Ok(spectrum) = characteristics::full_spectrum(&state, &metric, &gas) else {
            worst = f64::INFINITY;
            continue;
        };
        let Ok(explicit) = characteristics::explicit_speeds(&state, &metric) else {
            worst = f64::INFINITY;
            continue;
        };
        let (_, deflated) = characteristics::deflate(&spectrum, &explicit);
        match characteristics::quartic_preconditions(&state, &metric) {
            Ok(()) => {
                for lambda in deflated {
                    match characteristics::quartic_residual_complex(&state, &metric, &gas, lambda) {
                        Ok(r) => worst = max_or_inf(worst, r),
                        Err(_) => precondition_failures += 1,
                    }
                }
            }
            Err(_) => precondition_failures += 1,
        }
    }
    let mut report = SuiteReport::new("quartic_residual", cases, worst, 1e-6);
    report.filter_rate = Some(sampler.filter_rate());
    report.detail = Some(format!(
        "precondition failures: {precondition_failures}/{cases} ({:.2}%)",
        100.0 * precondition_failures as f64 / cases as f64
    ));
    report.pass = report.pass && (precondition_failures as f64) < 0.05 * cases as f64;
    report
}

/// Invariance suite: the pencil spectrum is unchanged under left
/// multiplication by a random invertible M and under conjugation by the
/// change-of-variables Jacobian DΦ (pressure ↔ internal energy).
pub fn invariance_suite(seed: u64, cases: usize) -> SuiteReport {
    let gas = ideal_gas();
    let mut sampler = StateSampler::new(seed ^ 0x696e_7661);
    let mut worst = 0.0f64;
    let mut case_deviations = Vec::with_capacity(cases);
    for _ in 0..cases {
        let state = sampler.sample();
        let metric = sampler.sample_metric();
        let dev =
            invariance_case_deviation(&state, &metric, &gas, &mut sampler).unwrap_or(f64::INFINITY);
        case_deviations.push(dev);
        worst = max_or_inf(worst, dev);
    }
    let mut report = SuiteReport::new("invariance_theorems", cases, worst, 1e-8);
    report.case_deviations = case_deviations;
    report
}

fn invariance_case_deviation(
    state: &SurfaceState,
    metric: &crate::geometry::MetricData,
    gas: &GasLaw,
    sampler: &mut StateSampler,
) -> Result<f64, EigenError> {
    let QuasilinearPair { c1, c2 } = characteristics::build_quasilinear(state, metric, gas)
        .map_err(|e| EigenError::BadState(e.to_string()))?;
    let base = generalized_eigen(&c2, &c1)?;

    // matrix-multiplication invariance: same invertible M on both sides
    let m = sampler.sample_invertible(8);
    let left = generalized_eigen(&m.mul(&c2), &m.mul(&c1))?;
    let mut worst = spectrum_deviation(&base, &left);

    // dependent-variable invariance: conjugate by DΦ (P back to e)
    let dphi = characteristics::dphi_jacobian(state, gas);
    let dphi_inv = dphi.inverse().ok_or(EigenError::SingularPencil)?;
    let a2 = dphi_inv.mul(&c2).mul(&dphi);
    let a1 = dphi_inv.mul(&c1).mul(&dphi);
    let conj = generalized_eigen(&a2, &a1)?;
    worst = worst.max(spectrum_deviation(&base, &conj));
    Ok(worst)
}

/// Deviation between two sorted pencil spectra, scale-normalized; infinite
/// eigenvalue count mismatches count as infinite deviation.
pub fn spectrum_deviation(a: &EigenResult, b: &EigenResult) -> f64 {
    if a.n_infinite() != b.n_infinite() {
        return f64::INFINITY;
    }
    let fa = a.finite_values();
    let fb = b.finite_values();
    if fa.len() != fb.len() {
        return f64::INFINITY;
    }
    let scale = fa
        .iter()
        .chain(&fb)
        .map(|z| z.norm())
        .fold(1.0f64, f64::max);
    fa.iter()
        .zip(&fb)
        .map(|(x, y)| (x - y).norm() / scale)
        .fold(0.0, max_or_inf)
}

/// Free-stream convergence suite: projected constant-Cartesian fields must
/// lose residual at observed order 2 ± 0.2 over 32², 64², 128², the Powell
/// bracket alongside, and the purely radial field returns exactly 2.
pub fn freestream_suite() -> SuiteReport {
    let chart = Chart::spherical([0.4, 2.7], [0.0, 2.0 * std::f64::consts::PI], true).unwrap();
    let v_inf = [1.0, 0.0, 0.2];
    let cases = [[0.0, 0.0, 0.0], [0.3, 0.1, 0.0]];
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for b_inf in cases {
        let mut norms = [0.0f64; 3];
        let mut powell_norms = [0.0f64; 3];
        for (k, n) in [32usize, 64, 128].into_iter().enumerate() {
            let Ok(field) =
                freestream_field(&chart, n, n, 1.0, v_inf, 1.0, b_inf, 1.0, IDEAL_GAMMA)
            else {
                return SuiteReport::new("freestream_convergence", 2, f64::INFINITY, 0.2);
            };
            let Ok(metrics) = MetricGrid::compute(&field.chart, &field.grid) else {
                return SuiteReport::new("freestream_convergence", 2, f64::INFINITY, 0.2);
            };
            match residual::assemble_residual(&field, &metrics) {
                Ok(res) => {
                    norms[k] = res
                        .iter()
                        .flat_map(|r| r.0.iter())
                        .fold(0.0f64, |m, &x| m.max(x.abs()));
                }
                Err(_) => return SuiteReport::new("freestream_convergence", 2, f64::INFINITY, 0.2),
            }
            let mut pmax = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    if let Ok(q) = residual::powell_divergence(&field, &metrics, (i, j)) {
                        pmax = pmax.max(q.abs());
                    }
                }
            }
            powell_norms[k] = pmax;
        }
        let order = convergence_order(&norms).unwrap_or(f64::NAN);
        worst = max_or_inf(worst, (order - 2.0).abs());
        details.push(format!("B∞={b_inf:?}: residual order {order:.3}"));
        if b_inf != [0.0, 0.0, 0.0] {
            let porder = convergence_order(&powell_norms).unwrap_or(f64::NAN);
            worst = max_or_inf(worst, (porder - 2.0).abs());
            details.push(format!("B∞={b_inf:?}: powell order {porder:.3}"));
        }
    }
    // purely radial magnetic field: bracket is exactly 2
    let field = freestream_field(
        &chart,
        16,
        16,
        1.0,
        [0.0; 3],
        1.0,
        [0.0; 3],
        1.0,
        IDEAL_GAMMA,
    )
    .expect("radial test field");
    let mut field = field;
    for s in &mut field.states {
        s.b3 = 1.0;
    }
    let metrics = MetricGrid::compute(&field.chart, &field.grid).expect("metrics");
    let mut radial_dev = 0.0f64;
    for i in 0..16 {
        for j in 0..16 {
            let q = residual::powell_divergence(&field, &metrics, (i, j)).expect("powell");
            radial_dev = radial_dev.max((q - 2.0).abs());
        }
    }
    details.push(format!("radial bracket deviation {radial_dev:.2e}"));
    // radial exactness shares the order gate via scaling: any deviation from
    // exactly 2.0 would exceed machine noise and trip the tolerance
    worst = worst.max(radial_dev * 1e12);
    let mut report = SuiteReport::new("freestream_convergence", 2, worst, 0.2);
    report.detail = Some(details.join("; "));
    report
}

/// Pseudo-time suite: for random states and directions, all eight
/// eigenvalues of w₁C¹ + w₂C² are real, match the closed-form speeds after
/// sorting, and contain a repeated value (non-strict hyperbolicity).
pub fn pseudotime_suite(seed: u64, cases: usize) -> SuiteReport {
    let gas = ideal_gas();
    let mut sampler = StateSampler::new(seed ^ 0x7073_6575);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let state = sampler.sample_unfiltered();
        let metric = sampler.sample_metric();
        let w = sampler.sample_direction(&metric);
        let dev = pseudotime_case_deviation(&state, &metric, &gas, &w).unwrap_or(f64::INFINITY);
        worst = max_or_inf(worst, dev);
    }
    SuiteReport::new("pseudotime_reality", cases, worst, 1e-8)
}

fn pseudotime_case_deviation(
    state: &SurfaceState,
    metric: &crate::geometry::MetricData,
    gas: &GasLaw,
    w: &Direction,
) -> Result<f64, EigenError> {
    let formula = pseudotime::pseudo_speeds_formula(state, metric, gas, w)
        .map_err(|_| EigenError::NonFinite)?;
    let numeric = pseudotime::pseudo_speeds_numeric(state, metric, gas, w)?;
    let scale = formula
        .speeds
        .iter()
        .map(|x| x.abs())
        .fold(1.0f64, f64::max);
    let mut worst = 0.0f64;
    // reality
    for z in &numeric {
        worst = max_or_inf(worst, z.im.abs() / scale);
    }
    // sorted match
    let mut reals: Vec<f64> = numeric.iter().map(|z| z.re).collect();
    reals.sort_by(f64::total_cmp);
    for (n, f) in reals.iter().zip(&formula.speeds) {
        worst = max_or_inf(worst, (n - f).abs() / scale);
    }
    // non-strictness: the numeric multiset repeats a value (the v·w pair)
    let has_repeat = reals
        .windows(2)
        .any(|p| (p[1] - p[0]).abs() <= 1e-8 * scale);
    if !has_repeat {
        worst = f64::INFINITY;
    }
    Ok(worst)
}

/// Runs every verification suite with sub-seeds derived from `seed`.
pub fn run_all_suites(seed: u64) -> VerifyReport {
    let suites = vec![
        geometry_suite(seed, 1000),
        eigenvalue_match_suite(seed, 1000),
        quartic_suite(seed, 1000),
        invariance_suite(seed, 100),
        freestream_suite(),
        pseudotime_suite(seed, 1000),
    ];
    let pass = suites.iter().all(|s| s.pass);
    VerifyReport { seed, pass, suites }
}
