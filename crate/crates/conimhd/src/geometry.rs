//! Charts on the unit sphere and the tensor machinery on them.
//!
//! A chart is an embedding map e(ξ¹, ξ²) into 3-space with |e| = 1 over a
//! ξ-rectangle. The builtin spherical chart (ξ¹ = θ, ξ² = φ) uses closed-form
//! metric and Christoffel symbols; named user embeddings are differentiated
//! by central finite differences with step [`FD_STEP`] unless an analytic
//! Jacobian is supplied.
//!
//! Index conventions: Greek surface indices run 0..2, Christoffel symbols are
//! stored as `christoffel[γ][α][ν]` = Γ_γ^α_ν, symmetric in γ ↔ ν.

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Default clip keeping the builtin spherical chart away from θ ∈ {0, π}.
pub const DEFAULT_THETA_MIN: f64 = 0.05;
/// Metric determinant floor ε_g below which a chart point is singular.
pub const METRIC_DET_FLOOR: f64 = 1e-12;
/// Step h_geom for differentiating user embeddings.
pub const FD_STEP: f64 = 1e-5;
/// Unit-length tolerance for embedding maps.
pub const UNIT_LENGTH_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point ({0}, {1}) lies outside the chart domain")]
    Domain(f64, f64),
    #[error("metric determinant {det} at ({xi1}, {xi2}) is below {METRIC_DET_FLOOR}")]
    SingularChart { det: f64, xi1: f64, xi2: f64 },
    #[error("embedding point at ({xi1}, {xi2}) has |e| = {norm}, not a unit vector")]
    NotUnitLength { norm: f64, xi1: f64, xi2: f64 },
    #[error("unknown embedding '{0}'")]
    UnknownEmbedding(String),
    #[error("empty chart domain after clipping")]
    EmptyDomain,
}

/// Structured-grid failure: differencing needs at least three points per axis.
#[derive(Debug, Clone, Error)]
#[error("axis {axis} has {n} points; finite differencing needs at least 3")]
pub struct GridError {
    pub axis: usize,
    pub n: usize,
}

type EmbeddingMap = Arc<dyn Fn(f64, f64) -> [f64; 3] + Send + Sync>;
type EmbeddingJac = Arc<dyn Fn(f64, f64) -> [[f64; 3]; 2] + Send + Sync>;

#[derive(Clone)]
enum ChartKind {
    Spherical,
    Embedding {
        name: String,
        map: EmbeddingMap,
        jac: Option<EmbeddingJac>,
    },
}

/// A coordinate chart on the unit sphere.
#[derive(Clone)]
pub struct Chart {
    kind: ChartKind,
    /// [[ξ¹min, ξ¹max], [ξ²min, ξ²max]].
    pub domain: [[f64; 2]; 2],
    pub periodic: [bool; 2],
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            ChartKind::Spherical => "spherical".to_string(),
            ChartKind::Embedding { name, .. } => format!("embedding:{name}"),
        };
        f.debug_struct("Chart")
            .field("kind", &kind)
            .field("domain", &self.domain)
            .field("periodic", &self.periodic)
            .finish()
    }
}

impl Chart {
    /// Builtin spherical chart with the default pole clip.
    pub fn spherical(
        theta: [f64; 2],
        phi: [f64; 2],
        periodic_phi: bool,
    ) -> Result<Chart, GeometryError> {
        Chart::spherical_clipped(theta, phi, periodic_phi, DEFAULT_THETA_MIN)
    }

    /// Builtin spherical chart; θ is clipped into [θ_min, π − θ_min].
    pub fn spherical_clipped(
        theta: [f64; 2],
        phi: [f64; 2],
        periodic_phi: bool,
        theta_min: f64,
    ) -> Result<Chart, GeometryError> {
        let lo = theta[0].max(theta_min);
        let hi = theta[1].min(std::f64::consts::PI - theta_min);
        if !(lo < hi) || !(phi[0] < phi[1]) {
            return Err(GeometryError::EmptyDomain);
        }
        Ok(Chart {
            kind: ChartKind::Spherical,
            domain: [[lo, hi], [phi[0], phi[1]]],
            periodic: [false, periodic_phi],
        })
    }

    /// Named builtin embedding (see [`embedding_names`]).
    pub fn embedding(
        name: &str,
        domain: [[f64; 2]; 2],
        periodic: [bool; 2],
    ) -> Result<Chart, GeometryError> {
        let (map, jac): (EmbeddingMap, Option<EmbeddingJac>) = match name {
            // Spherical chart rotated by π/2 about y: poles land on ±x.
            // Same metric as the builtin chart, different embedding.
            "rotated-spherical" => (
                Arc::new(|t: f64, p: f64| {
                    let (x, y, z) = sphere_xyz(t, p);
                    [z, y, -x]
                }),
                None,
            ),
            // φ-lines sheared along θ: tangents are non-orthogonal, the
            // metric picks up an off-diagonal g₁₂ = κ sin²θ.
            "sheared-spherical" => {
                const KAPPA: f64 = 0.35;
                (
                    Arc::new(|t: f64, p: f64| {
                        let (x, y, z) = sphere_xyz(t, p + KAPPA * t);
                        [x, y, z]
                    }),
                    None,
                )
            }
            _ => return Err(GeometryError::UnknownEmbedding(name.to_string())),
        };
        if !(domain[0][0] < domain[0][1]) || !(domain[1][0] < domain[1][1]) {
            return Err(GeometryError::EmptyDomain);
        }
        Ok(Chart {
            kind: ChartKind::Embedding {
                name: name.to_string(),
                map,
                jac,
            },
            domain,
            periodic,
        })
    }

    /// Chart from an arbitrary embedding closure (tests and extensions).
    pub fn custom_embedding(
        name: &str,
        map: impl Fn(f64, f64) -> [f64; 3] + Send + Sync + 'static,
        domain: [[f64; 2]; 2],
        periodic: [bool; 2],
    ) -> Chart {
        Chart {
            kind: ChartKind::Embedding {
                name: name.to_string(),
                map: Arc::new(map),
                jac: None,
            },
            domain,
            periodic,
        }
    }

    pub fn contains(&self, xi: [f64; 2]) -> bool {
        (0..2).all(|a| {
            if self.periodic[a] {
                true
            } else {
                let [lo, hi] = self.domain[a];
                let slack = 1e-9 * (hi - lo);
                xi[a] >= lo - slack && xi[a] <= hi + slack
            }
        })
    }

    /// Embedding point e(ξ) with domain check.
    pub fn embed(&self, xi: [f64; 2]) -> Result<[f64; 3], GeometryError> {
        if !self.contains(xi) {
            return Err(GeometryError::Domain(xi[0], xi[1]));
        }
        Ok(self.embed_unchecked(xi))
    }

    fn embed_unchecked(&self, xi: [f64; 2]) -> [f64; 3] {
        match &self.kind {
            ChartKind::Spherical => {
                let (x, y, z) = sphere_xyz(xi[0], xi[1]);
                [x, y, z]
            }
            ChartKind::Embedding { map, .. } => map(xi[0], xi[1]),
        }
    }

    /// Metric, Christoffel symbols, and projection factors at ξ.
    pub fn metric_at(&self, xi: [f64; 2]) -> Result<MetricData, GeometryError> {
        if !self.contains(xi) {
            return Err(GeometryError::Domain(xi[0], xi[1]));
        }
        match &self.kind {
            ChartKind::Spherical => Ok(spherical_metric(xi)),
            ChartKind::Embedding { map, jac, .. } => embedding_metric(xi, map, jac.as_ref()),
        }
    }

    /// The Christoffel block Γ_γ^α_ν of [`Chart::metric_at`], indexed
    /// `[γ][α][ν]` and symmetric in γ ↔ ν.
    pub fn christoffel_at(&self, xi: [f64; 2]) -> Result<[[[f64; 2]; 2]; 2], GeometryError> {
        Ok(self.metric_at(xi)?.christoffel)
    }

    /// Splits a Cartesian 3-vector into contravariant surface components and
    /// the radial component W³ = W·e(ξ).
    pub fn project_vector(
        &self,
        xi: [f64; 2],
        w: [f64; 3],
    ) -> Result<([f64; 2], f64), GeometryError> {
        let m = self.metric_at(xi)?;
        Ok(m.project(w))
    }

    /// Inverse of [`Chart::project_vector`]: W = w^α t_α + W³ e.
    pub fn lift_vector(
        &self,
        xi: [f64; 2],
        surf: [f64; 2],
        w3: f64,
    ) -> Result<[f64; 3], GeometryError> {
        let m = self.metric_at(xi)?;
        Ok(m.lift(surf, w3))
    }
}

/// Names accepted by [`Chart::embedding`].
pub fn embedding_names() -> &'static [&'static str] {
    &["rotated-spherical", "sheared-spherical"]
}

fn sphere_xyz(t: f64, p: f64) -> (f64, f64, f64) {
    (t.sin() * p.cos(), t.sin() * p.sin(), t.cos())
}

/// Metric tensor, Christoffel symbols, and projection factors at one point.
#[derive(Debug, Clone, Copy)]
pub struct MetricData {
    /// g_{αβ}.
    pub g: [[f64; 2]; 2],
    /// g^{αβ}.
    pub g_inv: [[f64; 2]; 2],
    /// g = det(g_{αβ}).
    pub det: f64,
    /// √g.
    pub sqrt_det: f64,
    /// Γ_γ^α_ν as `christoffel[γ][α][ν]`.
    pub christoffel: [[[f64; 2]; 2]; 2],
    /// ∂√g/∂ξ^γ.
    pub dsqrt_det: [f64; 2],
    /// Projection factors F^i_α: `tangents[α]` = ∂e/∂ξ^α.
    pub tangents: [[f64; 3]; 2],
    /// Projection factors F^α_i: `duals[α]` = g^{αβ} t_β.
    pub duals: [[f64; 3]; 2],
    /// Unit radial direction e(ξ).
    pub normal: [f64; 3],
}

impl MetricData {
    /// Contracted symbol Γ_γ^ν_ν.
    pub fn contracted_christoffel(&self, gamma: usize) -> f64 {
        self.christoffel[gamma][0][0] + self.christoffel[gamma][1][1]
    }

    pub fn project(&self, w: [f64; 3]) -> ([f64; 2], f64) {
        let w3 = dot3(w, self.normal);
        let surf = [dot3(w, self.duals[0]), dot3(w, self.duals[1])];
        (surf, w3)
    }

    pub fn lift(&self, surf: [f64; 2], w3: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] =
                surf[0] * self.tangents[0][i] + surf[1] * self.tangents[1][i] + w3 * self.normal[i];
        }
        out
    }

    /// Flat metric g = I with zero connection, for pointwise analysis in an
    /// orthonormal frame (no chart attached).
    pub fn orthonormal() -> MetricData {
        MetricData::from_g([[1.0, 0.0], [0.0, 1.0]])
    }

    /// Pointwise metric from a symmetric positive-definite g with the
    /// connection coefficients set to zero. Tangents are a Cholesky frame in
    /// the xy-plane so projections stay consistent with g.
    pub fn from_g(g: [[f64; 2]; 2]) -> MetricData {
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        assert!(
            g[0][0] > 0.0 && det > 0.0,
            "metric must be positive definite"
        );
        let g_inv = invert2(g, det);
        // lower-triangular L with L Lᵀ = g
        let l11 = g[0][0].sqrt();
        let l21 = g[0][1] / l11;
        let l22 = (g[1][1] - l21 * l21).sqrt();
        let tangents = [[l11, 0.0, 0.0], [l21, l22, 0.0]];
        let mut duals = [[0.0; 3]; 2];
        for a in 0..2 {
            for i in 0..3 {
                duals[a][i] = g_inv[a][0] * tangents[0][i] + g_inv[a][1] * tangents[1][i];
            }
        }
        MetricData {
            g,
            g_inv,
            det,
            sqrt_det: det.sqrt(),
            christoffel: [[[0.0; 2]; 2]; 2],
            dsqrt_det: [0.0; 2],
            tangents,
            duals,
            normal: [0.0, 0.0, 1.0],
        }
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn invert2(g: [[f64; 2]; 2], det: f64) -> [[f64; 2]; 2] {
    [
        [g[1][1] / det, -g[0][1] / det],
        [-g[1][0] / det, g[0][0] / det],
    ]
}

fn spherical_metric(xi: [f64; 2]) -> MetricData {
    let (t, p) = (xi[0], xi[1]);
    let (st, ct) = t.sin_cos();
    let (sp, cp) = p.sin_cos();
    let g = [[1.0, 0.0], [0.0, st * st]];
    let det = st * st;
    let g_inv = [[1.0, 0.0], [0.0, 1.0 / (st * st)]];
    let mut christoffel = [[[0.0; 2]; 2]; 2];
    christoffel[1][0][1] = -st * ct; // Γ_φ^θ_φ
    christoffel[0][1][1] = ct / st; // Γ_θ^φ_φ
    christoffel[1][1][0] = ct / st; // Γ_φ^φ_θ (symmetric partner)
    let tangents = [[ct * cp, ct * sp, -st], [-st * sp, st * cp, 0.0]];
    let duals = [
        tangents[0],
        [-sp / st, cp / st, 0.0], // g^{φφ} t_φ
    ];
    MetricData {
        g,
        g_inv,
        det,
        sqrt_det: st,
        christoffel,
        dsqrt_det: [ct, 0.0],
        tangents,
        duals,
        normal: [st * cp, st * sp, ct],
    }
}

fn embedding_metric(
    xi: [f64; 2],
    map: &EmbeddingMap,
    jac: Option<&EmbeddingJac>,
) -> Result<MetricData, GeometryError> {
    let e = map(xi[0], xi[1]);
    let norm = dot3(e, e).sqrt();
    if (norm - 1.0).abs() > UNIT_LENGTH_TOL {
        return Err(GeometryError::NotUnitLength {
            norm,
            xi1: xi[0],
            xi2: xi[1],
        });
    }
    let tangents = embedding_tangents(xi, map, jac);
    let g = metric_from_tangents(&tangents);
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if det < METRIC_DET_FLOOR {
        return Err(GeometryError::SingularChart {
            det,
            xi1: xi[0],
            xi2: xi[1],
        });
    }
    let g_inv = invert2(g, det);

    // ∂g_{αβ}/∂ξ^d by central differences of the embedding metric
    let mut dg = [[[0.0; 2]; 2]; 2];
    let mut dsqrt_det = [0.0; 2];
    for d in 0..2 {
        let mut plus = xi;
        let mut minus = xi;
        plus[d] += FD_STEP;
        minus[d] -= FD_STEP;
        let gp = metric_from_tangents(&embedding_tangents(plus, map, jac));
        let gm = metric_from_tangents(&embedding_tangents(minus, map, jac));
        for a in 0..2 {
            for b in 0..2 {
                dg[d][a][b] = (gp[a][b] - gm[a][b]) / (2.0 * FD_STEP);
            }
        }
        let detp = gp[0][0] * gp[1][1] - gp[0][1] * gp[1][0];
        let detm = gm[0][0] * gm[1][1] - gm[0][1] * gm[1][0];
        dsqrt_det[d] = (detp.max(0.0).sqrt() - detm.max(0.0).sqrt()) / (2.0 * FD_STEP);
    }
    // Γ_γ^α_ν = g^{αβ}/2 (∂_ν g_{βγ} + ∂_γ g_{βν} − ∂_β g_{γν})
    let mut christoffel = [[[0.0; 2]; 2]; 2];
    for gmm in 0..2 {
        for a in 0..2 {
            for nu in 0..2 {
                let mut sum = 0.0;
                for b in 0..2 {
                    sum += g_inv[a][b] * (dg[nu][b][gmm] + dg[gmm][b][nu] - dg[b][gmm][nu]);
                }
                christoffel[gmm][a][nu] = 0.5 * sum;
            }
        }
    }
    // symmetrize exactly in γ ↔ ν
    for a in 0..2 {
        let avg = 0.5 * (christoffel[0][a][1] + christoffel[1][a][0]);
        christoffel[0][a][1] = avg;
        christoffel[1][a][0] = avg;
    }

    let mut duals = [[0.0; 3]; 2];
    for a in 0..2 {
        for i in 0..3 {
            duals[a][i] = g_inv[a][0] * tangents[0][i] + g_inv[a][1] * tangents[1][i];
        }
    }
    let normal = [e[0] / norm, e[1] / norm, e[2] / norm];
    Ok(MetricData {
        g,
        g_inv,
        det,
        sqrt_det: det.sqrt(),
        christoffel,
        dsqrt_det,
        tangents,
        duals,
        normal,
    })
}

fn embedding_tangents(
    xi: [f64; 2],
    map: &EmbeddingMap,
    jac: Option<&EmbeddingJac>,
) -> [[f64; 3]; 2] {
    if let Some(j) = jac {
        return j(xi[0], xi[1]);
    }
    let mut tangents = [[0.0; 3]; 2];
    for a in 0..2 {
        let mut plus = xi;
        let mut minus = xi;
        plus[a] += FD_STEP;
        minus[a] -= FD_STEP;
        let ep = map(plus[0], plus[1]);
        let em = map(minus[0], minus[1]);
        for i in 0..3 {
            tangents[a][i] = (ep[i] - em[i]) / (2.0 * FD_STEP);
        }
    }
    // |e| = 1 forces e·∂e/∂ξ = 0 exactly; strip the O(h²) normal
    // contamination the central difference leaves behind
    let e = map(xi[0], xi[1]);
    let e_sq = dot3(e, e);
    if e_sq > 0.0 {
        for t in &mut tangents {
            let along = dot3(*t, e) / e_sq;
            for i in 0..3 {
                t[i] -= along * e[i];
            }
        }
    }
    tangents
}

fn metric_from_tangents(t: &[[f64; 3]; 2]) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            g[a][b] = dot3(t[a], t[b]);
        }
    }
    // enforce exact symmetry
    let off = 0.5 * (g[0][1] + g[1][0]);
    g[0][1] = off;
    g[1][0] = off;
    g
}

/// Node layout of a structured ξ-grid.
///
/// Along a periodic axis the step is (max − min)/n and the grid covers
/// [min, max); along a bounded axis the step is (max − min)/(n − 1) with both
/// endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub origin: [f64; 2],
    pub periodic: [bool; 2],
}

impl GridSpec {
    pub fn from_chart(chart: &Chart, n1: usize, n2: usize) -> GridSpec {
        let step = |axis: usize, n: usize| {
            let [lo, hi] = chart.domain[axis];
            if chart.periodic[axis] {
                (hi - lo) / n as f64
            } else {
                (hi - lo) / (n - 1) as f64
            }
        };
        GridSpec {
            n1,
            n2,
            h1: step(0, n1),
            h2: step(1, n2),
            origin: [chart.domain[0][0], chart.domain[1][0]],
            periodic: chart.periodic,
        }
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn xi(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + self.h1 * i as f64,
            self.origin[1] + self.h2 * j as f64,
        ]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    fn axis_len(&self, axis: usize) -> usize {
        if axis == 0 {
            self.n1
        } else {
            self.n2
        }
    }

    /// Second-order ∂f/∂ξ^axis at node (i, j): central in the interior or
    /// across a periodic wrap, one-sided three-point at bounded edges.
    pub fn deriv(
        &self,
        axis: usize,
        at: (usize, usize),
        f: &dyn Fn(usize, usize) -> f64,
    ) -> Result<f64, GridError> {
        let n = self.axis_len(axis);
        if n < 3 {
            return Err(GridError { axis, n });
        }
        let h = if axis == 0 { self.h1 } else { self.h2 };
        let (i, j) = at;
        let k = if axis == 0 { i } else { j };
        let eval = |k: usize| {
            if axis == 0 {
                f(k, j)
            } else {
                f(i, k)
            }
        };
        let value = if self.periodic[axis] {
            (eval((k + 1) % n) - eval((k + n - 1) % n)) / (2.0 * h)
        } else if k == 0 {
            (-3.0 * eval(0) + 4.0 * eval(1) - eval(2)) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * eval(n - 1) - 4.0 * eval(n - 2) + eval(n - 3)) / (2.0 * h)
        } else {
            (eval(k + 1) - eval(k - 1)) / (2.0 * h)
        };
        Ok(value)
    }
}

/// Divergence of a rank-1 relative tensor of weight 1: w^β_{||β} = ∂w^β/∂ξ^β.
pub fn divergence_weight1_rank1(
    spec: &GridSpec,
    at: (usize, usize),
    w: &dyn Fn(usize, usize) -> [f64; 2],
) -> Result<f64, GridError> {
    let d1 = spec.deriv(0, at, &|i, j| w(i, j)[0])?;
    let d2 = spec.deriv(1, at, &|i, j| w(i, j)[1])?;
    Ok(d1 + d2)
}

/// Divergence of a rank-1 tensor of weight 0:
/// w^β_{||β} = ∂w^β/∂ξ^β + Γ_γ^ν_ν w^γ.
pub fn divergence_weight0_rank1(
    spec: &GridSpec,
    metric: &MetricData,
    at: (usize, usize),
    w: &dyn Fn(usize, usize) -> [f64; 2],
) -> Result<f64, GridError> {
    let div = divergence_weight1_rank1(spec, at, w)?;
    let w0 = w(at.0, at.1);
    Ok(div + metric.contracted_christoffel(0) * w0[0] + metric.contracted_christoffel(1) * w0[1])
}

/// Divergence of a rank-2 relative tensor of weight 1:
/// w^{αβ}_{||β} = ∂w^{αβ}/∂ξ^β + Γ_γ^α_ν w^{γν}.
pub fn divergence_weight1_rank2(
    spec: &GridSpec,
    metric: &MetricData,
    at: (usize, usize),
    w: &dyn Fn(usize, usize) -> [[f64; 2]; 2],
) -> Result<[f64; 2], GridError> {
    let w0 = w(at.0, at.1);
    let mut out = [0.0; 2];
    for a in 0..2 {
        let d1 = spec.deriv(0, at, &|i, j| w(i, j)[a][0])?;
        let d2 = spec.deriv(1, at, &|i, j| w(i, j)[a][1])?;
        let mut chris = 0.0;
        for gmm in 0..2 {
            for nu in 0..2 {
                chris += metric.christoffel[gmm][a][nu] * w0[gmm][nu];
            }
        }
        out[a] = d1 + d2 + chris;
    }
    Ok(out)
}

/// Divergence of a rank-2 tensor of weight 0:
/// w^{αβ}_{||β} = ∂w^{αβ}/∂ξ^β + Γ_γ^α_ν w^{γν} + Γ_γ^ν_ν w^{αγ}.
pub fn divergence_weight0_rank2(
    spec: &GridSpec,
    metric: &MetricData,
    at: (usize, usize),
    w: &dyn Fn(usize, usize) -> [[f64; 2]; 2],
) -> Result<[f64; 2], GridError> {
    let mut out = divergence_weight1_rank2(spec, metric, at, w)?;
    let w0 = w(at.0, at.1);
    for a in 0..2 {
        for gmm in 0..2 {
            out[a] += metric.contracted_christoffel(gmm) * w0[a][gmm];
        }
    }
    Ok(out)
}
