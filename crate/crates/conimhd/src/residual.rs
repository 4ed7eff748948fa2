//! Residual evaluation of the eight projected steady conical MHD equations.
//!
//! Components are ordered (mass, momentum¹, momentum², momentum³, energy,
//! magnetic¹, magnetic², magnetic³), each reported as LHS − RHS with the
//! Powell source terms kept on the right-hand side. All ∂/∂ξ terms use
//! the second-order stencils of [`crate::geometry::GridSpec::deriv`]; the
//! covariant divergences go through the geometry helpers.
//!
//! One reduction is applied to the momentum flux: its isotropic part
//! satisfies [√g g^{αβ} Π]_{||β} = √g g^{αβ} ∂_β Π exactly (metric
//! compatibility), so only Π = P + |B|²/2μ is differenced there and a rest
//! state yields a residual at roundoff instead of truncation level. The
//! deviatoric flux √g(ρv^αv^β − b^αb^β/μ) is differenced verbatim.

use crate::geometry::{
    divergence_weight0_rank1, divergence_weight0_rank2, divergence_weight1_rank1,
    divergence_weight1_rank2, Chart, GeometryError, GridError, GridSpec, MetricData,
};
use crate::state::{self, GasLaw, StateError, SurfaceState, ThermoError};
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResidualError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("grid layout: {0}")]
    Layout(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The eight equation residuals at one node, in the order
/// (mass, mom¹, mom², mom³, energy, mag¹, mag², mag³).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualVector(pub [f64; 8]);

impl ResidualVector {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Structured grid of states over a chart rectangle.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub chart: Chart,
    pub grid: GridSpec,
    /// Row-major in ξ¹ then ξ²: index = i·n₂ + j.
    pub states: Vec<SurfaceState>,
    pub gas: GasLaw,
}

impl FieldGrid {
    /// Builds a field by evaluating `f` at every node.
    pub fn from_fn(
        chart: Chart,
        n1: usize,
        n2: usize,
        gas: GasLaw,
        f: impl Fn(&Chart, [f64; 2]) -> Result<SurfaceState, ResidualError>,
    ) -> Result<FieldGrid, ResidualError> {
        let grid = GridSpec::from_chart(&chart, n1, n2);
        check_dims(&grid)?;
        let mut states = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                states.push(f(&chart, grid.xi(i, j))?);
            }
        }
        Ok(FieldGrid {
            chart,
            grid,
            states,
            gas,
        })
    }

    pub fn from_states(
        chart: Chart,
        grid: GridSpec,
        states: Vec<SurfaceState>,
        gas: GasLaw,
    ) -> Result<FieldGrid, ResidualError> {
        check_dims(&grid)?;
        assert_eq!(states.len(), grid.len(), "state count must match the grid");
        Ok(FieldGrid {
            chart,
            grid,
            states,
            gas,
        })
    }

    pub fn state(&self, i: usize, j: usize) -> &SurfaceState {
        &self.states[self.grid.index(i, j)]
    }
}

fn check_dims(grid: &GridSpec) -> Result<(), GridError> {
    if grid.n1 < 3 {
        return Err(GridError {
            axis: 0,
            n: grid.n1,
        });
    }
    if grid.n2 < 3 {
        return Err(GridError {
            axis: 1,
            n: grid.n2,
        });
    }
    Ok(())
}

/// Metric data cached at every node of a grid.
pub struct MetricGrid {
    spec: GridSpec,
    data: Vec<MetricData>,
}

impl MetricGrid {
    pub fn compute(chart: &Chart, spec: &GridSpec) -> Result<MetricGrid, GeometryError> {
        let mut data = Vec::with_capacity(spec.len());
        for i in 0..spec.n1 {
            for j in 0..spec.n2 {
                data.push(chart.metric_at(spec.xi(i, j))?);
            }
        }
        Ok(MetricGrid { spec: *spec, data })
    }

    pub fn at(&self, i: usize, j: usize) -> &MetricData {
        &self.data[self.spec.index(i, j)]
    }
}

/// Per-node flux values entering the stencils.
#[derive(Debug, Clone, Copy)]
struct NodeFluxes {
    /// ρ√g v^β.
    mass: [f64; 2],
    /// Deviatoric momentum flux √g(ρ v^α v^β − b^α b^β/μ), `[α][β]`.
    deviatoric: [[f64; 2]; 2],
    /// Π = P + |B|²/(2μ).
    pi: f64,
    /// ρ√g V³ v^α − (√g/μ) B³ b^α.
    mom3: [f64; 2],
    /// √g[(ρE + P + |B|²/μ) v^β − (V·B)/μ b^β].
    energy: [f64; 2],
    /// Antisymmetric magnetic flux v^β b^α − v^α b^β, `[α][β]`.
    magnetic: [[f64; 2]; 2],
    /// v^β B³ − V³ b^β.
    mag3: [f64; 2],
    /// b^β itself (Powell bracket).
    b: [f64; 2],
}

fn node_fluxes(
    state: &SurfaceState,
    metric: &MetricData,
    gas: &GasLaw,
) -> Result<NodeFluxes, ThermoError> {
    let d = state::derived(state, metric, gas)?;
    let sg = metric.sqrt_det;
    let rho = state.rho;
    let mu = state.mu;
    let v = state.v;
    let b = state.b;
    let mut deviatoric = [[0.0; 2]; 2];
    let mut magnetic = [[0.0; 2]; 2];
    for a in 0..2 {
        for be in 0..2 {
            deviatoric[a][be] = sg * (rho * v[a] * v[be] - b[a] * b[be] / mu);
            magnetic[a][be] = v[be] * b[a] - v[a] * b[be];
        }
    }
    let h_tot = rho * d.total_energy + state.p + d.b_sq / mu;
    Ok(NodeFluxes {
        mass: [rho * sg * v[0], rho * sg * v[1]],
        deviatoric,
        pi: state.p + d.b_sq / (2.0 * mu),
        mom3: [
            rho * sg * state.v3 * v[0] - sg / mu * state.b3 * b[0],
            rho * sg * state.v3 * v[1] - sg / mu * state.b3 * b[1],
        ],
        energy: [
            sg * (h_tot * v[0] - d.v_dot_b / mu * b[0]),
            sg * (h_tot * v[1] - d.v_dot_b / mu * b[1]),
        ],
        magnetic,
        mag3: [
            v[0] * state.b3 - state.v3 * b[0],
            v[1] * state.b3 - state.v3 * b[1],
        ],
        b,
    })
}

/// The Powell bracket b^ν_{||ν} + 2B³ (equal to r·B^j_{|j} at r = 1);
/// zero on any divergence-free field.
pub fn powell_divergence(
    field: &FieldGrid,
    metrics: &MetricGrid,
    at: (usize, usize),
) -> Result<f64, ResidualError> {
    let div = divergence_weight0_rank1(&field.grid, metrics.at(at.0, at.1), at, &|i, j| {
        field.state(i, j).b
    })?;
    Ok(div + 2.0 * field.state(at.0, at.1).b3)
}

fn all_fluxes(field: &FieldGrid, metrics: &MetricGrid) -> Result<Vec<NodeFluxes>, ThermoError> {
    let spec = &field.grid;
    let mut fluxes = Vec::with_capacity(spec.len());
    for i in 0..spec.n1 {
        for j in 0..spec.n2 {
            fluxes.push(node_fluxes(
                field.state(i, j),
                metrics.at(i, j),
                &field.gas,
            )?);
        }
    }
    Ok(fluxes)
}

/// Residual of the eight equations at one node.
pub fn residual_at(
    field: &FieldGrid,
    metrics: &MetricGrid,
    at: (usize, usize),
) -> Result<ResidualVector, ResidualError> {
    let fluxes = all_fluxes(field, metrics)?;
    residual_core(field, metrics, at, &|i, j| fluxes[field.grid.index(i, j)])
}

/// Residual at every node; boundary nodes use the one-sided stencils or the
/// periodic wrap of the grid spec. Output order matches the state layout.
pub fn assemble_residual(
    field: &FieldGrid,
    metrics: &MetricGrid,
) -> Result<Vec<ResidualVector>, ResidualError> {
    let spec = &field.grid;
    let fluxes = all_fluxes(field, metrics)?;
    let mut out = Vec::with_capacity(spec.len());
    for i in 0..spec.n1 {
        for j in 0..spec.n2 {
            out.push(residual_core(field, metrics, (i, j), &|ii, jj| {
                fluxes[spec.index(ii, jj)]
            })?);
        }
    }
    Ok(out)
}

fn residual_core(
    field: &FieldGrid,
    metrics: &MetricGrid,
    at: (usize, usize),
    flux: &dyn Fn(usize, usize) -> NodeFluxes,
) -> Result<ResidualVector, ResidualError> {
    let spec = &field.grid;
    let state = field.state(at.0, at.1);
    let metric = metrics.at(at.0, at.1);
    let d = state::derived(state, metric, &field.gas)?;
    let sg = metric.sqrt_det;
    let mu = state.mu;
    let rho = state.rho;

    // Powell bracket at the node
    let q = divergence_weight0_rank1(spec, metric, at, &|i, j| flux(i, j).b)? + 2.0 * state.b3;

    let mut r = [0.0f64; 8];

    // mass
    r[0] = divergence_weight1_rank1(spec, at, &|i, j| flux(i, j).mass)? + 2.0 * rho * sg * state.v3;

    // surface momentum
    let dev_div = divergence_weight1_rank2(spec, metric, at, &|i, j| flux(i, j).deviatoric)?;
    let dpi = [
        spec.deriv(0, at, &|i, j| flux(i, j).pi)?,
        spec.deriv(1, at, &|i, j| flux(i, j).pi)?,
    ];
    for a in 0..2 {
        let iso = sg * (metric.g_inv[a][0] * dpi[0] + metric.g_inv[a][1] * dpi[1]);
        r[1 + a] = dev_div[a]
            + iso
            + 3.0 * sg * (rho * state.v[a] * state.v3 - state.b[a] * state.b3 / mu)
            + sg / mu * state.b[a] * q;
    }

    // third momentum: plain derivatives plus explicit metric terms
    r[3] = divergence_weight1_rank1(spec, at, &|i, j| flux(i, j).mom3)?
        + 2.0 * sg * (rho * state.v3 * state.v3 - state.b3 * state.b3 / mu)
        - rho * sg * d.v_c * d.v_c
        + sg / mu * d.b_c * d.b_c
        + sg / mu * state.b3 * q;

    // energy
    let h_tot = rho * d.total_energy + state.p + d.b_sq / mu;
    r[4] = divergence_weight1_rank1(spec, at, &|i, j| flux(i, j).energy)?
        + 2.0 * sg * (h_tot * state.v3 - d.v_dot_b / mu * state.b3)
        + sg / mu * d.v_dot_b * q;

    // surface magnetic
    let mag_div = divergence_weight0_rank2(spec, metric, at, &|i, j| flux(i, j).magnetic)?;
    for a in 0..2 {
        r[5 + a] = mag_div[a] + (state.v3 * state.b[a] - state.v[a] * state.b3) + state.v[a] * q;
    }

    // third magnetic: plain derivative with the √g weight term
    let mag3_flux = flux(at.0, at.1).mag3;
    r[7] = divergence_weight1_rank1(spec, at, &|i, j| flux(i, j).mag3)?
        + (mag3_flux[0] * metric.dsqrt_det[0] + mag3_flux[1] * metric.dsqrt_det[1]) / sg
        + state.v3 * q;

    Ok(ResidualVector(r))
}

/// The source vector S* of the primitive quasilinear form at one node:
/// the residual of a field frozen at this state (all ∂Φ vanish; only the
/// metric variation contributes). Evaluated on a 5-point auxiliary grid with
/// the same spacings, so the result carries the same O(h²) truncation as the
/// residual itself. Interior points only: the auxiliary grid must stay
/// inside the chart.
pub fn quasilinear_source(
    chart: &Chart,
    spec: &GridSpec,
    at: (usize, usize),
    state: &SurfaceState,
    gas: &GasLaw,
) -> Result<[f64; 8], ResidualError> {
    let center = spec.xi(at.0, at.1);
    let mini = GridSpec {
        n1: 5,
        n2: 5,
        h1: spec.h1,
        h2: spec.h2,
        origin: [center[0] - 2.0 * spec.h1, center[1] - 2.0 * spec.h2],
        periodic: [false, false],
    };
    let field = FieldGrid::from_states(chart.clone(), mini, vec![*state; mini.len()], *gas)?;
    let metrics = MetricGrid::compute(chart, &mini)?;
    let r = residual_at(&field, &metrics, (2, 2))?;
    Ok(r.0)
}

// ---------------------------------------------------------------------------
// CSV interfaces
// ---------------------------------------------------------------------------

/// 17 significant digits: lossless f64 round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

const FIELD_HEADER: [&str; 10] = ["xi1", "xi2", "rho", "v1", "v2", "V3", "P", "b1", "b2", "B3"];

/// Writes `xi1,xi2,rho,v1,v2,V3,P,b1,b2,B3`, row-major in ξ¹ then ξ².
pub fn write_field_csv<W: Write>(field: &FieldGrid, out: W) -> Result<(), FieldIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIELD_HEADER)?;
    for i in 0..field.grid.n1 {
        for j in 0..field.grid.n2 {
            let xi = field.grid.xi(i, j);
            let s = field.state(i, j);
            w.write_record([
                fmt_f64(xi[0]),
                fmt_f64(xi[1]),
                fmt_f64(s.rho),
                fmt_f64(s.v[0]),
                fmt_f64(s.v[1]),
                fmt_f64(s.v3),
                fmt_f64(s.p),
                fmt_f64(s.b[0]),
                fmt_f64(s.b[1]),
                fmt_f64(s.b3),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a field CSV back into a grid. Node coordinates must form a uniform
/// row-major lattice; periodicity comes from the chart, μ and γ from the
/// caller's configuration.
pub fn read_field_csv<R: Read>(
    input: R,
    chart: Chart,
    gas: GasLaw,
    mu: f64,
) -> Result<FieldGrid, FieldIoError> {
    let mut reader = csv::Reader::from_reader(input);
    {
        let headers = reader.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got != FIELD_HEADER {
            return Err(FieldIoError::Layout(format!(
                "expected header {FIELD_HEADER:?}, found {got:?}"
            )));
        }
    }
    let mut coords: Vec<[f64; 2]> = Vec::new();
    let mut states: Vec<SurfaceState> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let mut vals = [0.0f64; 10];
        for (slot, raw) in vals.iter_mut().zip(record.iter()) {
            *slot = raw.trim().parse().map_err(|e| FieldIoError::Parse {
                row: k + 2,
                message: format!("'{raw}': {e}"),
            })?;
        }
        coords.push([vals[0], vals[1]]);
        states.push(SurfaceState::new(
            vals[2], vals[3], vals[4], vals[5], vals[6], vals[7], vals[8], vals[9], mu,
        )?);
    }
    if coords.is_empty() {
        return Err(FieldIoError::Layout("empty field file".into()));
    }
    // row-major: the first block of rows shares xi1
    let n2 = coords.iter().take_while(|c| c[0] == coords[0][0]).count();
    if n2 < 3 || !coords.len().is_multiple_of(n2) {
        return Err(FieldIoError::Layout(format!(
            "cannot infer grid dims from {} rows (leading block {})",
            coords.len(),
            n2
        )));
    }
    let n1 = coords.len() / n2;
    if n1 < 3 {
        return Err(FieldIoError::Layout(format!("n1 = {n1} < 3")));
    }
    let origin = coords[0];
    let h1 = coords[n2][0] - origin[0];
    let h2 = coords[1][1] - origin[1];
    if h1 <= 0.0 || h2 <= 0.0 {
        return Err(FieldIoError::Layout(
            "grid spacings must be positive".into(),
        ));
    }
    let spec = GridSpec {
        n1,
        n2,
        h1,
        h2,
        origin,
        periodic: chart.periodic,
    };
    for i in 0..n1 {
        for j in 0..n2 {
            let want = spec.xi(i, j);
            let got = coords[i * n2 + j];
            let tol = 1e-9 * (1.0 + want[0].abs() + want[1].abs());
            if (got[0] - want[0]).abs() > tol || (got[1] - want[1]).abs() > tol {
                return Err(FieldIoError::Layout(format!(
                    "node ({i}, {j}) at ({}, {}) departs from the uniform lattice",
                    got[0], got[1]
                )));
            }
        }
    }
    FieldGrid::from_states(chart, spec, states, gas).map_err(|e| match e {
        ResidualError::State(s) => FieldIoError::State(s),
        other => FieldIoError::Layout(other.to_string()),
    })
}

/// Writes `xi1,xi2,r_mass,r_mom1,r_mom2,r_mom3,r_energy,r_mag1,r_mag2,r_mag3`.
pub fn write_residual_csv<W: Write>(
    spec: &GridSpec,
    residuals: &[ResidualVector],
    out: W,
) -> Result<(), FieldIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "xi1", "xi2", "r_mass", "r_mom1", "r_mom2", "r_mom3", "r_energy", "r_mag1", "r_mag2",
        "r_mag3",
    ])?;
    for i in 0..spec.n1 {
        for j in 0..spec.n2 {
            let xi = spec.xi(i, j);
            let r = &residuals[spec.index(i, j)];
            let mut record = vec![fmt_f64(xi[0]), fmt_f64(xi[1])];
            record.extend(r.0.iter().map(|x| fmt_f64(*x)));
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}
