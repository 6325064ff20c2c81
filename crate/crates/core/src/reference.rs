//! Reference measures `(omega, pi)` on a metric graph, per-cell masses of the
//! edge densities, detailed-balance jump rates, and the epsilon-rescalings
//! driving the multiscale regimes.

use crate::graph::{EndpointRole, MetricGraph};
use crate::math;
use alloc::vec::Vec;
use core::fmt;

/// 8-point Gauss-Legendre rule on [-1, 1]. Exact for polynomials of degree
/// <= 15; relative error far below 1e-13 for the sinusoids used here at any
/// cell count >= 2 per period.
const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_29,
    0.362_683_783_378_361_98,
    0.362_683_783_378_361_98,
    0.313_706_645_877_887_29,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceError {
    NonPositiveWeight { vertex: usize, value: f64 },
    NonPositiveDensity { edge: usize, x: f64, value: f64 },
    BadTabulatedGrid { edge: usize },
    EdgeCountMismatch { expected: usize, got: usize },
    VertexCountMismatch { expected: usize, got: usize },
    InvalidCellCount { n: usize },
    MissingRate { edge: usize },
    NonPositiveRate { edge: usize, value: f64 },
    NonPositiveEpsilon { eps: f64 },
    NotAnEdge,
    NormalizationDrift { total: f64 },
}

impl fmt::Display for ReferenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceError::NonPositiveWeight { vertex, value } => {
                write!(f, "vertex #{vertex} weight {value} is not positive")
            }
            ReferenceError::NonPositiveDensity { edge, x, value } => {
                write!(f, "edge #{edge} density {value} at x={x} is not positive")
            }
            ReferenceError::BadTabulatedGrid { edge } => {
                write!(f, "edge #{edge}: tabulated grid must strictly increase and cover [0, len]")
            }
            ReferenceError::EdgeCountMismatch { expected, got } => {
                write!(f, "expected {expected} edge densities, got {got}")
            }
            ReferenceError::VertexCountMismatch { expected, got } => {
                write!(f, "expected {expected} vertex weights, got {got}")
            }
            ReferenceError::InvalidCellCount { n } => write!(f, "cell count {n} < 2"),
            ReferenceError::MissingRate { edge } => write!(f, "no rate given for edge #{edge}"),
            ReferenceError::NonPositiveRate { edge, value } => {
                write!(f, "rate {value} on edge #{edge} is not positive")
            }
            ReferenceError::NonPositiveEpsilon { eps } => {
                write!(f, "epsilon {eps} is not positive")
            }
            ReferenceError::NotAnEdge => write!(f, "vertex pair is not an edge of the graph"),
            ReferenceError::NormalizationDrift { total } => {
                write!(f, "normalized measure has total mass {total} != 1")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ReferenceError {}

/// Closed-form edge density on `[0, len]`.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeDensityExpr {
    /// Coefficients in ascending degree: `c0 + c1 x + c2 x^2 + ...`
    Polynomial { coeffs: Vec<f64> },
    /// `amplitude * sin(omega x + phase) + offset`
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
        offset: f64,
    },
    /// Piecewise-linear interpolation of `(xs, ys)`; `xs` strictly increasing
    /// and covering `[0, len]`.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl EdgeDensityExpr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            EdgeDensityExpr::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = acc * x + c;
                }
                acc
            }
            EdgeDensityExpr::Sinusoid {
                amplitude,
                omega,
                phase,
                offset,
            } => amplitude * math::sin(omega * x + phase) + offset,
            EdgeDensityExpr::Tabulated { xs, ys } => {
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[xs.len() - 1] {
                    return ys[ys.len() - 1];
                }
                // xs is short in practice; linear scan keeps this no_std-simple
                let mut i = 0;
                while xs[i + 1] < x {
                    i += 1;
                }
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
        }
    }

    /// Integral over `[a, b]`. Gauss-Legendre for the smooth kinds (exact for
    /// the polynomials used here), exact piecewise-linear integration for
    /// tabulated data so cell sums reproduce the total mass to round-off.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        match self {
            EdgeDensityExpr::Tabulated { xs, ys } => {
                let mut total = 0.0;
                let lerp = |x: f64| self.eval(x);
                let mut left = a;
                for i in 0..xs.len() {
                    let cut = xs[i];
                    if cut <= left {
                        continue;
                    }
                    if cut >= b {
                        break;
                    }
                    total += 0.5 * (lerp(left) + lerp(cut)) * (cut - left);
                    left = cut;
                }
                let _ = ys;
                total += 0.5 * (lerp(left) + lerp(b)) * (b - left);
                total
            }
            _ => {
                // one panel is exact for polynomials up to degree 15; for
                // sinusoids keep the phase advance per panel below ~2 radians
                let panels = match self {
                    EdgeDensityExpr::Sinusoid { omega, .. } => {
                        let cycles = math::abs(*omega) * (b - a) / 2.0;
                        (cycles as usize + 1).min(256)
                    }
                    _ => 1,
                };
                let mut total = 0.0;
                for p in 0..panels {
                    let pa = a + (b - a) * p as f64 / panels as f64;
                    let pb = a + (b - a) * (p + 1) as f64 / panels as f64;
                    let mid = 0.5 * (pa + pb);
                    let half = 0.5 * (pb - pa);
                    let mut panel = 0.0;
                    for (node, weight) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
                        panel += weight * self.eval(mid + half * node);
                    }
                    total += panel * half;
                }
                total
            }
        }
    }

    /// Multiply the density by a positive constant.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            EdgeDensityExpr::Polynomial { coeffs } => EdgeDensityExpr::Polynomial {
                coeffs: coeffs.iter().map(|v| c * v).collect(),
            },
            EdgeDensityExpr::Sinusoid {
                amplitude,
                omega,
                phase,
                offset,
            } => EdgeDensityExpr::Sinusoid {
                amplitude: c * amplitude,
                omega: *omega,
                phase: *phase,
                offset: c * offset,
            },
            EdgeDensityExpr::Tabulated { xs, ys } => EdgeDensityExpr::Tabulated {
                xs: xs.clone(),
                ys: ys.iter().map(|v| c * v).collect(),
            },
        }
    }

    /// Positivity check by sampling at the quadrature nodes of 64 panels plus
    /// the endpoints (and table breakpoints for tabulated data).
    fn check_positive(&self, edge: usize, len: f64) -> Result<(), ReferenceError> {
        let check = |x: f64| -> Result<(), ReferenceError> {
            let value = self.eval(x);
            if !(value > 0.0) || !value.is_finite() {
                return Err(ReferenceError::NonPositiveDensity { edge, x, value });
            }
            Ok(())
        };
        check(0.0)?;
        check(len)?;
        let panels = 64;
        for p in 0..panels {
            let a = len * p as f64 / panels as f64;
            let b = len * (p + 1) as f64 / panels as f64;
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for node in GL8_NODES {
                check(mid + half * node)?;
            }
        }
        if let EdgeDensityExpr::Tabulated { xs, ys } = self {
            if xs.len() != ys.len() || xs.len() < 2 {
                return Err(ReferenceError::BadTabulatedGrid { edge });
            }
            if xs.windows(2).any(|w| w[1] <= w[0]) || xs[0] > 0.0 || xs[xs.len() - 1] < len {
                return Err(ReferenceError::BadTabulatedGrid { edge });
            }
            for &y in ys {
                if !(y > 0.0) {
                    return Err(ReferenceError::NonPositiveDensity {
                        edge,
                        x: f64::NAN,
                        value: y,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Normalized reference measure: vertex weights `omega_v` and edge densities
/// `pi^e` with `sum_v omega_v + sum_e int pi^e = 1`.
#[derive(Debug, Clone)]
pub struct ReferenceMeasure {
    vertex_weights: Vec<f64>,
    edge_densities: Vec<EdgeDensityExpr>,
    edge_masses: Vec<f64>,
    z: f64,
}

impl ReferenceMeasure {
    /// Normalize raw vertex weights and edge densities: `Z` is the total raw
    /// mass and everything is divided by it.
    pub fn normalize(
        raw_vertex_weights: &[f64],
        raw_edge_densities: &[EdgeDensityExpr],
        graph: &MetricGraph,
    ) -> Result<Self, ReferenceError> {
        if raw_vertex_weights.len() != graph.num_vertices() {
            return Err(ReferenceError::VertexCountMismatch {
                expected: graph.num_vertices(),
                got: raw_vertex_weights.len(),
            });
        }
        if raw_edge_densities.len() != graph.num_edges() {
            return Err(ReferenceError::EdgeCountMismatch {
                expected: graph.num_edges(),
                got: raw_edge_densities.len(),
            });
        }
        for (v, &w) in raw_vertex_weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(ReferenceError::NonPositiveWeight { vertex: v, value: w });
            }
        }
        for (e, d) in raw_edge_densities.iter().enumerate() {
            d.check_positive(e, graph.edge_length(e))?;
        }

        let raw_edge_masses: Vec<f64> = raw_edge_densities
            .iter()
            .enumerate()
            .map(|(e, d)| d.integrate(0.0, graph.edge_length(e)))
            .collect();
        let z: f64 =
            raw_vertex_weights.iter().sum::<f64>() + raw_edge_masses.iter().sum::<f64>();

        let measure = ReferenceMeasure {
            vertex_weights: raw_vertex_weights.iter().map(|w| w / z).collect(),
            edge_densities: raw_edge_densities.iter().map(|d| d.scaled(1.0 / z)).collect(),
            edge_masses: raw_edge_masses.iter().map(|m| m / z).collect(),
            z,
        };
        let total = measure.total_mass();
        if math::abs(total - 1.0) > 1e-12 {
            return Err(ReferenceError::NormalizationDrift { total });
        }
        Ok(measure)
    }

    /// Assemble from already-normalized parts (used by the rescalings).
    fn from_normalized_parts(
        vertex_weights: Vec<f64>,
        edge_densities: Vec<EdgeDensityExpr>,
        edge_masses: Vec<f64>,
        z: f64,
    ) -> Result<Self, ReferenceError> {
        let measure = ReferenceMeasure {
            vertex_weights,
            edge_densities,
            edge_masses,
            z,
        };
        let total = measure.total_mass();
        if math::abs(total - 1.0) > 1e-12 {
            return Err(ReferenceError::NormalizationDrift { total });
        }
        Ok(measure)
    }

    /// Normalization constant of the raw inputs.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn vertex_weight(&self, v: usize) -> f64 {
        self.vertex_weights[v]
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    /// Total vertex mass `omega(V)`.
    pub fn vertex_total(&self) -> f64 {
        self.vertex_weights.iter().sum()
    }

    pub fn edge_density(&self, e: usize) -> &EdgeDensityExpr {
        &self.edge_densities[e]
    }

    /// `pi^e([0, len])`.
    pub fn edge_mass(&self, e: usize) -> f64 {
        self.edge_masses[e]
    }

    /// Total edge mass `pi(L)`.
    pub fn edge_total(&self) -> f64 {
        self.edge_masses.iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.vertex_total() + self.edge_total()
    }

    /// Continuum endpoint density `pi^e|_v` (value at x=0 for the tail, x=len
    /// for the head).
    pub fn endpoint_density(&self, graph: &MetricGraph, e: usize, role: EndpointRole) -> f64 {
        let x = match role {
            EndpointRole::Tail => 0.0,
            EndpointRole::Head => graph.edge_length(e),
        };
        self.edge_densities[e].eval(x)
    }

    /// Per-cell masses of edge `e` on `n` equal cells:
    /// `cell k = int_{(k-1) len/n}^{k len/n} pi^e dx` for `k = 1..=n`.
    pub fn cell_masses(
        &self,
        graph: &MetricGraph,
        e: usize,
        n: usize,
    ) -> Result<Vec<f64>, ReferenceError> {
        if n < 2 {
            return Err(ReferenceError::InvalidCellCount { n });
        }
        let len = graph.edge_length(e);
        let h = len / n as f64;
        Ok((0..n)
            .map(|k| self.edge_densities[e].integrate(k as f64 * h, (k + 1) as f64 * h))
            .collect())
    }
}

/// Cell masses for every edge at a common cell count.
#[derive(Debug, Clone)]
pub struct CellMeasures {
    pub n: usize,
    /// Per edge, the `n` cell masses.
    pub masses: Vec<Vec<f64>>,
}

impl CellMeasures {
    pub fn build(
        measure: &ReferenceMeasure,
        graph: &MetricGraph,
        n: usize,
    ) -> Result<Self, ReferenceError> {
        let masses = (0..graph.num_edges())
            .map(|e| measure.cell_masses(graph, e, n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CellMeasures { n, masses })
    }
}

/// Which endpoint value of `pi^e` enters the edge-vertex coupling weight
/// `k_v^e sqrt(omega_v * X)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCoupling {
    /// `X = pi^e|_v`, the continuum endpoint density. Keeps the vertex
    /// exchange rate independent of the cell count, consistent with the
    /// boundary condition of the continuum system and with the endpoint
    /// densities used by the fast-edge and combinatorial generators.
    #[default]
    EndpointDensity,
    /// `X = n * cell_mass / len`, the mean density over the boundary cell.
    CellAverageDensity,
    /// `X = cell_mass` itself (the boundary cell mass).
    CellMass,
}

/// Symmetric detailed-balance rates `k_v^e`, one per (edge, endpoint).
#[derive(Debug, Clone)]
pub struct RateSpec {
    /// Per edge: `[k at tail, k at head]`.
    k: Vec<[f64; 2]>,
}

impl RateSpec {
    /// Same symmetric rate at every incidence.
    pub fn uniform(graph: &MetricGraph, k: f64) -> Result<Self, ReferenceError> {
        if !(k > 0.0) {
            return Err(ReferenceError::NonPositiveRate { edge: 0, value: k });
        }
        Ok(RateSpec {
            k: alloc::vec![[k, k]; graph.num_edges()],
        })
    }

    pub fn from_symmetric(k: Vec<[f64; 2]>, graph: &MetricGraph) -> Result<Self, ReferenceError> {
        if k.len() != graph.num_edges() {
            return Err(ReferenceError::EdgeCountMismatch {
                expected: graph.num_edges(),
                got: k.len(),
            });
        }
        for (e, pair) in k.iter().enumerate() {
            for &v in pair {
                if !(v > 0.0) {
                    return Err(ReferenceError::NonPositiveRate { edge: e, value: v });
                }
            }
        }
        Ok(RateSpec { k })
    }

    /// Complete directed rates from given vertex-to-edge rates `r(v, e)` so
    /// detailed balance holds exactly: `k_v^e = r(v,e) sqrt(omega_v / pi^e|_v)`.
    pub fn from_vertex_to_edge_rates(
        r_vertex_to_edge: &[Option<[f64; 2]>],
        measure: &ReferenceMeasure,
        graph: &MetricGraph,
    ) -> Result<Self, ReferenceError> {
        if r_vertex_to_edge.len() != graph.num_edges() {
            return Err(ReferenceError::EdgeCountMismatch {
                expected: graph.num_edges(),
                got: r_vertex_to_edge.len(),
            });
        }
        let mut k = Vec::with_capacity(graph.num_edges());
        for (e, entry) in r_vertex_to_edge.iter().enumerate() {
            let rates = entry.ok_or(ReferenceError::MissingRate { edge: e })?;
            let mut pair = [0.0; 2];
            for (slot, role) in [(0, EndpointRole::Tail), (1, EndpointRole::Head)] {
                let r = rates[slot];
                if !(r > 0.0) {
                    return Err(ReferenceError::NonPositiveRate { edge: e, value: r });
                }
                let v = graph.edge_endpoint(e, role);
                let pi_v = measure.endpoint_density(graph, e, role);
                pair[slot] = r * math::sqrt(measure.vertex_weight(v) / pi_v);
            }
            k.push(pair);
        }
        Ok(RateSpec { k })
    }

    pub fn sym_rate(&self, e: usize, role: EndpointRole) -> f64 {
        match role {
            EndpointRole::Tail => self.k[e][0],
            EndpointRole::Head => self.k[e][1],
        }
    }

    /// Directed rate edge -> vertex: `r(e,v) = k_v^e sqrt(omega_v / pi^e|_v)`.
    pub fn rate_edge_to_vertex(
        &self,
        measure: &ReferenceMeasure,
        graph: &MetricGraph,
        e: usize,
        role: EndpointRole,
    ) -> f64 {
        let v = graph.edge_endpoint(e, role);
        let pi_v = measure.endpoint_density(graph, e, role);
        self.sym_rate(e, role) * math::sqrt(measure.vertex_weight(v) / pi_v)
    }

    /// Directed rate vertex -> edge: `r(v,e) = k_v^e sqrt(pi^e|_v / omega_v)`.
    pub fn rate_vertex_to_edge(
        &self,
        measure: &ReferenceMeasure,
        graph: &MetricGraph,
        e: usize,
        role: EndpointRole,
    ) -> f64 {
        let v = graph.edge_endpoint(e, role);
        let pi_v = measure.endpoint_density(graph, e, role);
        self.sym_rate(e, role) * math::sqrt(pi_v / measure.vertex_weight(v))
    }

    fn scaled(&self, c: f64) -> Self {
        RateSpec {
            k: self.k.iter().map(|p| [c * p[0], c * p[1]]).collect(),
        }
    }
}

/// Endpoint product `a_v = k_v^e sqrt(pi^e|_v omega_v)`; equal to
/// `r(e,v) pi^e|_v` and to `r(v,e) omega_v` under detailed balance.
pub fn endpoint_product(
    measure: &ReferenceMeasure,
    rates: &RateSpec,
    graph: &MetricGraph,
    e: usize,
    role: EndpointRole,
) -> f64 {
    let v = graph.edge_endpoint(e, role);
    rates.sym_rate(e, role)
        * math::sqrt(measure.endpoint_density(graph, e, role) * measure.vertex_weight(v))
}

/// Harmonic-mean jump rate of the combinatorial limit across edge `e = vw`:
/// `Harm(a_v, a_w) / (2 sqrt(omega_v omega_w))` with `Harm(a,b) = 2/(1/a+1/b)`.
pub fn harmonic_rate(
    graph: &MetricGraph,
    measure: &ReferenceMeasure,
    rates: &RateSpec,
    v: usize,
    w: usize,
) -> Result<f64, ReferenceError> {
    let e = (0..graph.num_edges())
        .find(|&e| {
            (graph.edge_tail(e) == v && graph.edge_head(e) == w)
                || (graph.edge_tail(e) == w && graph.edge_head(e) == v)
        })
        .ok_or(ReferenceError::NotAnEdge)?;
    let a_tail = endpoint_product(measure, rates, graph, e, EndpointRole::Tail);
    let a_head = endpoint_product(measure, rates, graph, e, EndpointRole::Head);
    let harm = 2.0 / (1.0 / a_tail + 1.0 / a_head);
    Ok(harm / (2.0 * math::sqrt(measure.vertex_weight(v) * measure.vertex_weight(w))))
}

/// Multiscale rescaling regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingRegime {
    Unscaled,
    /// Vanishing reservoirs: `omega -> eps omega / Z^eps`, `pi -> pi / Z^eps`,
    /// `k -> k / eps`. The acceleration must outrun the shrinking vertex
    /// measure for the boundary coupling `k sqrt(omega^eps pi^eps)` to blow
    /// up and enforce perfect transmission (the Kirchhoff condition) in the
    /// limit; the weaker `k / sqrt(eps)` variant keeps it order one and is
    /// available through [`ScalingOptions`].
    Kirchhoff(f64),
    /// Accelerated edge diffusion: `d -> d / eps` only.
    FastEdge(f64),
    /// Edge contraction: `pi -> eps pi / Z^eps`, `omega -> omega / Z^eps`,
    /// `k -> k / sqrt(eps)`.
    Combinatorial(f64),
    /// Fast-edge and combinatorial scalings composed.
    Joint(f64),
}

impl ScalingRegime {
    pub fn eps(&self) -> Option<f64> {
        match *self {
            ScalingRegime::Unscaled => None,
            ScalingRegime::Kirchhoff(e)
            | ScalingRegime::FastEdge(e)
            | ScalingRegime::Combinatorial(e)
            | ScalingRegime::Joint(e) => Some(e),
        }
    }
}

/// Exponent of the symmetric-rate acceleration `k -> k / eps^p` in the
/// Kirchhoff regime. Scaling only the vertex-to-edge rate by `1/eps` gives
/// `p = 1/2` (transmission stays bounded; the limit keeps a Robin-type
/// resistance); scaling `k` itself gives `p = 1`; scaling both directed
/// rates by `1/eps` on the shrunken measure gives `p = 3/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum KirchhoffRateScaling {
    SqrtEps,
    #[default]
    Eps,
    EpsThreeHalves,
}

/// Alternate constants for the Kirchhoff regime.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalingOptions {
    pub kirchhoff_rate_scaling: KirchhoffRateScaling,
}

/// Result of applying a scaling regime.
#[derive(Debug, Clone)]
pub struct ScaledSetup {
    pub measure: ReferenceMeasure,
    pub rates: RateSpec,
    pub diffusivities: Vec<f64>,
    pub z_eps: f64,
}

pub fn apply_scaling(
    regime: ScalingRegime,
    measure: &ReferenceMeasure,
    rates: &RateSpec,
    diffusivities: &[f64],
) -> Result<ScaledSetup, ReferenceError> {
    apply_scaling_with(regime, measure, rates, diffusivities, ScalingOptions::default())
}

pub fn apply_scaling_with(
    regime: ScalingRegime,
    measure: &ReferenceMeasure,
    rates: &RateSpec,
    diffusivities: &[f64],
    opts: ScalingOptions,
) -> Result<ScaledSetup, ReferenceError> {
    if let Some(eps) = regime.eps() {
        if !(eps > 0.0) {
            return Err(ReferenceError::NonPositiveEpsilon { eps });
        }
    }
    let d = diffusivities.to_vec();
    match regime {
        ScalingRegime::Unscaled => Ok(ScaledSetup {
            measure: measure.clone(),
            rates: rates.clone(),
            diffusivities: d,
            z_eps: 1.0,
        }),
        ScalingRegime::FastEdge(eps) => Ok(ScaledSetup {
            measure: measure.clone(),
            rates: rates.clone(),
            diffusivities: d.iter().map(|&de| de / eps).collect(),
            z_eps: 1.0,
        }),
        ScalingRegime::Kirchhoff(eps) => {
            let z_eps = eps * measure.vertex_total() + measure.edge_total();
            let scaled = ReferenceMeasure::from_normalized_parts(
                measure.vertex_weights.iter().map(|w| eps * w / z_eps).collect(),
                measure
                    .edge_densities
                    .iter()
                    .map(|dens| dens.scaled(1.0 / z_eps))
                    .collect(),
                measure.edge_masses.iter().map(|m| m / z_eps).collect(),
                measure.z * z_eps,
            )?;
            let k_factor = match opts.kirchhoff_rate_scaling {
                KirchhoffRateScaling::SqrtEps => 1.0 / math::sqrt(eps),
                KirchhoffRateScaling::Eps => 1.0 / eps,
                KirchhoffRateScaling::EpsThreeHalves => 1.0 / (eps * math::sqrt(eps)),
            };
            Ok(ScaledSetup {
                measure: scaled,
                rates: rates.scaled(k_factor),
                diffusivities: d,
                z_eps,
            })
        }
        ScalingRegime::Combinatorial(eps) | ScalingRegime::Joint(eps) => {
            let z_eps = measure.vertex_total() + eps * measure.edge_total();
            let scaled = ReferenceMeasure::from_normalized_parts(
                measure.vertex_weights.iter().map(|w| w / z_eps).collect(),
                measure
                    .edge_densities
                    .iter()
                    .map(|dens| dens.scaled(eps / z_eps))
                    .collect(),
                measure.edge_masses.iter().map(|m| eps * m / z_eps).collect(),
                measure.z * z_eps / eps,
            )?;
            let diffusivities = if matches!(regime, ScalingRegime::Joint(_)) {
                d.iter().map(|&de| de / eps).collect()
            } else {
                d
            };
            Ok(ScaledSetup {
                measure: scaled,
                rates: rates.scaled(1.0 / math::sqrt(eps)),
                diffusivities,
                z_eps,
            })
        }
    }
}
