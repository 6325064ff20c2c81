//! Variational structure along trajectories: relative entropy, the cosh
//! dissipation pair, flux reconstruction, rate and slope functionals, the
//! energy-dissipation functional, embeddings to the metric graph, and
//! Hellinger-type distances between trajectories of different systems.
//!
//! Conventions. For a bond with conductance `c` between slots of densities
//! `u_a`, `u_b` the reconstructed flux is `f = c (u_a - u_b)`, the rate term
//! is `sigma C(f / sigma)` with `sigma = c sqrt(u_a u_b)`, and the slope term
//! is `2 c (sqrt(u_a) - sqrt(u_b))^2`. With these weights the Legendre
//! equality `sigma C(f/sigma) + sigma C*(xi) = f xi` holds at
//! `xi = log(u_a/u_b)` along exact solutions, which is what drives the
//! energy-dissipation functional to zero there.

use crate::graph::MetricGraph;
use crate::math;
use crate::system::{BondClass, DiscreteSystem, SlotKind};
use crate::integrator::Trajectory;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalError {
    NegativeMassBeyondTolerance { slot: usize, value: f64 },
    InfeasibleFlux,
    GridMismatch,
    MappingMismatch,
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for FunctionalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalError::NegativeMassBeyondTolerance { slot, value } => {
                write!(f, "mass {value} at slot {slot} below clipping tolerance")
            }
            FunctionalError::InfeasibleFlux => {
                write!(f, "nonzero flux across a bond with vanishing mobility")
            }
            FunctionalError::GridMismatch => write!(f, "trajectories use different time grids"),
            FunctionalError::MappingMismatch => {
                write!(f, "comparison map does not fit the two layouts")
            }
            FunctionalError::DimensionMismatch { expected, got } => {
                write!(f, "state length {got} != layout dimension {expected}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FunctionalError {}

/// Primal cosh potential `C(r) = 2r log((r + sqrt(r^2+4))/2) - 2 sqrt(r^2+4) + 4`.
pub fn cosh_primal(r: f64) -> f64 {
    let root = math::sqrt(r * r + 4.0);
    2.0 * r * math::ln(0.5 * (r + root)) - 2.0 * root + 4.0
}

/// Dual cosh potential `C*(s) = 4 (cosh(s/2) - 1)`.
pub fn cosh_dual(s: f64) -> f64 {
    4.0 * (math::cosh(0.5 * s) - 1.0)
}

/// Perspective form `sigma C(f / sigma)`, extended to `sigma = 0` by the
/// indicator convention: 0 when `f = 0`, `+inf` otherwise.
pub fn cosh_primal_weighted(f: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        sigma * cosh_primal(f / sigma)
    } else if f == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn clipped_density(gamma: f64, weight: f64, clip: f64, slot: usize) -> Result<f64, FunctionalError> {
    if gamma >= 0.0 {
        Ok(gamma / weight)
    } else if gamma >= -clip {
        Ok(0.0)
    } else {
        Err(FunctionalError::NegativeMassBeyondTolerance { slot, value: gamma })
    }
}

/// Relative entropy `H(gamma | w) = sum_i w_i eta(gamma_i / w_i)` with
/// `eta(r) = r log r - r + 1` and `0 log 0 = 0`. Entries in `[-clip, 0)` are
/// treated as zero; anything more negative is an error.
pub fn relative_entropy(
    weights: &[f64],
    gamma: &[f64],
    clip: f64,
) -> Result<f64, FunctionalError> {
    if weights.len() != gamma.len() {
        return Err(FunctionalError::DimensionMismatch {
            expected: weights.len(),
            got: gamma.len(),
        });
    }
    let mut total = 0.0;
    for (i, (&g, &w)) in gamma.iter().zip(weights.iter()).enumerate() {
        let u = clipped_density(g, w, clip, i)?;
        let eta = if u > 0.0 { u * math::ln(u) - u + 1.0 } else { 1.0 };
        total += w * eta;
    }
    Ok(total)
}

/// Reconstructed bond fluxes, ordered like `sys.bonds()`; positive flux runs
/// from bond slot `a` to slot `b`.
#[derive(Debug, Clone)]
pub struct FluxVector {
    pub per_bond: Vec<f64>,
}

impl FluxVector {
    /// Internal flux across the bond between cells `k` and `k+1` of edge `e`
    /// (prelimit layouts).
    pub fn internal(&self, sys: &DiscreteSystem, e: usize, k: usize) -> Option<f64> {
        let target = sys.layout().cell_slot(e, k);
        sys.bonds()
            .iter()
            .zip(self.per_bond.iter())
            .find(|(b, _)| b.class == BondClass::Diffusive && b.a == target)
            .map(|(_, f)| *f)
    }

    /// Boundary flux of edge `e` toward the vertex at the given endpoint.
    pub fn boundary(&self, sys: &DiscreteSystem, e: usize, vertex_slot: usize) -> Option<f64> {
        sys.bonds()
            .iter()
            .zip(self.per_bond.iter())
            .find(|(b, _)| {
                b.class == BondClass::Exchange
                    && b.b == vertex_slot
                    && matches!(
                        sys.layout().slots()[b.a],
                        SlotKind::Cell { edge, .. } | SlotKind::EdgePool(edge) if edge == e
                    )
            })
            .map(|(_, f)| *f)
    }
}

/// Kinetic-relation flux `f_b = c_b (u_a - u_b)` on every bond.
pub fn flux_from_state(sys: &DiscreteSystem, gamma: &[f64]) -> FluxVector {
    let w = sys.weights();
    let per_bond = sys
        .bonds()
        .iter()
        .map(|b| b.conductance * (gamma[b.a] / w[b.a] - gamma[b.b] / w[b.b]))
        .collect();
    FluxVector { per_bond }
}

/// Graph divergence of a bond flux; satisfies `A gamma = -div(flux)` when the
/// flux comes from [`flux_from_state`].
pub fn divergence(sys: &DiscreteSystem, flux: &FluxVector) -> Vec<f64> {
    let mut div = vec![0.0; sys.dim()];
    for (b, &f) in sys.bonds().iter().zip(flux.per_bond.iter()) {
        div[b.a] += f;
        div[b.b] -= f;
    }
    div
}

/// Rate and slope sums split by bond mechanism.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DissipationBreakdown {
    pub edge_rate: f64,
    pub edge_slope: f64,
    pub jump_rate: f64,
    pub jump_slope: f64,
}

impl DissipationBreakdown {
    pub fn total(&self) -> f64 {
        self.edge_rate + self.edge_slope + self.jump_rate + self.jump_slope
    }
}

/// Rate functional `R(gamma, f) = sum_b sigma_b C(f_b / sigma_b)` with
/// `sigma_b = c_b sqrt(u_a u_b)`, split into (diffusive, exchange) parts.
pub fn rate_r(
    sys: &DiscreteSystem,
    gamma: &[f64],
    flux: &FluxVector,
    clip: f64,
) -> Result<(f64, f64), FunctionalError> {
    let w = sys.weights();
    let mut diffusive = 0.0;
    let mut exchange = 0.0;
    for (b, &f) in sys.bonds().iter().zip(flux.per_bond.iter()) {
        let ua = clipped_density(gamma[b.a], w[b.a], clip, b.a)?;
        let ub = clipped_density(gamma[b.b], w[b.b], clip, b.b)?;
        let sigma = b.conductance * math::sqrt(ua * ub);
        let term = cosh_primal_weighted(f, sigma);
        match b.class {
            BondClass::Diffusive => diffusive += term,
            BondClass::Exchange => exchange += term,
        }
    }
    Ok((diffusive, exchange))
}

/// Slope functional `I(gamma) = sum_b 2 c_b (sqrt(u_a) - sqrt(u_b))^2`, split
/// into (diffusive, exchange) parts. Equals `sigma_b C*(log(u_a/u_b))` per
/// bond for positive densities.
pub fn slope_i(
    sys: &DiscreteSystem,
    gamma: &[f64],
    clip: f64,
) -> Result<(f64, f64), FunctionalError> {
    let w = sys.weights();
    let mut diffusive = 0.0;
    let mut exchange = 0.0;
    for b in sys.bonds() {
        let ua = clipped_density(gamma[b.a], w[b.a], clip, b.a)?;
        let ub = clipped_density(gamma[b.b], w[b.b], clip, b.b)?;
        let diff = math::sqrt(ua) - math::sqrt(ub);
        let term = 2.0 * b.conductance * diff * diff;
        match b.class {
            BondClass::Diffusive => diffusive += term,
            BondClass::Exchange => exchange += term,
        }
    }
    Ok((diffusive, exchange))
}

/// Entropy curve, dissipation breakdown and energy-dissipation value of a
/// trajectory.
#[derive(Debug, Clone)]
pub struct FunctionalReport {
    /// `(t, H(gamma(t) | w))` on the trajectory grid.
    pub entropy: Vec<(f64, f64)>,
    /// Time-integrated dissipation, split by mechanism and by rate/slope.
    pub breakdown: DissipationBreakdown,
    /// Total dissipation `D = integral (R + I) dt`.
    pub dissipation: f64,
    /// `L = H(T) - H(0) + D`; zero (up to quadrature and solver error) along
    /// exact solutions.
    pub l_value: f64,
}

/// Evaluate the energy-dissipation functional along a trajectory by
/// reconstructing fluxes at every output time and integrating `R + I` with
/// the composite trapezoid rule.
pub fn edp_report(
    sys: &DiscreteSystem,
    traj: &Trajectory,
    clip: f64,
) -> Result<FunctionalReport, FunctionalError> {
    let w = sys.weights();
    let m = traj.times.len();
    let mut entropy = Vec::with_capacity(m);
    let mut integrand = Vec::with_capacity(m);
    let mut parts = Vec::with_capacity(m);
    for (t, state) in traj.times.iter().zip(traj.states.iter()) {
        entropy.push((*t, relative_entropy(w, state, clip)?));
        let flux = flux_from_state(sys, state);
        let (er, jr) = rate_r(sys, state, &flux, clip)?;
        let (es, js) = slope_i(sys, state, clip)?;
        let total = er + jr + es + js;
        if !total.is_finite() {
            return Err(FunctionalError::InfeasibleFlux);
        }
        integrand.push(total);
        parts.push((er, es, jr, js));
    }

    let mut breakdown = DissipationBreakdown::default();
    let mut dissipation = 0.0;
    for i in 1..m {
        let dt = traj.times[i] - traj.times[i - 1];
        dissipation += 0.5 * dt * (integrand[i] + integrand[i - 1]);
        breakdown.edge_rate += 0.5 * dt * (parts[i].0 + parts[i - 1].0);
        breakdown.edge_slope += 0.5 * dt * (parts[i].1 + parts[i - 1].1);
        breakdown.jump_rate += 0.5 * dt * (parts[i].2 + parts[i - 1].2);
        breakdown.jump_slope += 0.5 * dt * (parts[i].3 + parts[i - 1].3);
    }

    let l_value = entropy[m - 1].1 - entropy[0].1 + dissipation;
    Ok(FunctionalReport {
        entropy,
        breakdown,
        dissipation,
        l_value,
    })
}

/// Piecewise-constant embedding of a discrete state into densities on the
/// metric edges plus vertex masses. Mass is preserved exactly.
#[derive(Debug, Clone)]
pub struct EmbeddedState {
    /// Per edge: the `n` cell density values `gamma_k / h`.
    pub edge_densities: Vec<Vec<f64>>,
    pub vertex_masses: Vec<f64>,
}

pub fn embed_state(graph: &MetricGraph, sys: &DiscreteSystem, gamma: &[f64]) -> EmbeddedState {
    let layout = sys.layout();
    let mut edge_densities = vec![Vec::new(); graph.num_edges()];
    let mut vertex_masses = vec![0.0; graph.num_vertices()];
    for (slot, kind) in layout.slots().iter().enumerate() {
        match *kind {
            SlotKind::Vertex(v) | SlotKind::Patch(v) => vertex_masses[v] += gamma[slot],
            SlotKind::Cell { edge, .. } => edge_densities[edge].push(
                gamma[slot] * layout.cells_per_edge() as f64 / graph.edge_length(edge),
            ),
            SlotKind::EdgePool(edge) => {
                edge_densities[edge].push(gamma[slot] / graph.edge_length(edge))
            }
        }
    }
    EmbeddedState {
        edge_densities,
        vertex_masses,
    }
}

/// Staggered piecewise-linear embedding of internal fluxes: the indicator
/// `1_{I_{k+s}}` averaged over `s in [0,1]` is the unit hat centered at
/// `x = k h`, so the embedded flux density is `len * sum_k f_k hat_k(x)`.
#[derive(Debug, Clone)]
pub struct EmbeddedFlux {
    /// Per edge: `(h, coefficients len * f_k for k = 1..n-1)`.
    pub edges: Vec<(f64, Vec<f64>)>,
}

impl EmbeddedFlux {
    /// Evaluate the embedded flux density on edge `e` at `x`.
    pub fn eval(&self, e: usize, x: f64) -> f64 {
        let (h, coeffs) = &self.edges[e];
        let mut total = 0.0;
        for (idx, c) in coeffs.iter().enumerate() {
            let center = (idx + 1) as f64 * h;
            let dist = math::abs(x - center) / h;
            if dist < 1.0 {
                total += c * (1.0 - dist);
            }
        }
        total
    }

    /// Exact integral over edge `e` (each hat integrates to `h`).
    pub fn integral(&self, e: usize) -> f64 {
        let (h, coeffs) = &self.edges[e];
        coeffs.iter().sum::<f64>() * h
    }
}

pub fn embed_flux(graph: &MetricGraph, sys: &DiscreteSystem, flux: &FluxVector) -> EmbeddedFlux {
    let n = sys.layout().cells_per_edge();
    let mut edges: Vec<(f64, Vec<f64>)> = (0..graph.num_edges())
        .map(|e| (graph.edge_length(e) / n.max(1) as f64, Vec::new()))
        .collect();
    for (b, &f) in sys.bonds().iter().zip(flux.per_bond.iter()) {
        if b.class != BondClass::Diffusive {
            continue;
        }
        if let SlotKind::Cell { edge, .. } = sys.layout().slots()[b.a] {
            edges[edge].1.push(graph.edge_length(edge) * f);
        }
    }
    EmbeddedFlux { edges }
}

/// How slots of two trajectories are paired for the Hellinger distance.
///
/// The `*Expand` maps spread the coarse system's value over every fine slot
/// it represents; the `*Project` maps aggregate the fine system's masses onto
/// the coarse state space first (mass-weighted coarse graining) and compare
/// there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonMap {
    /// Same layout on both sides.
    Identity,
    /// Full scheme vs. Kirchhoff scheme, expanding: interior cells map by
    /// index, the limit's patch value is compared against the boundary cells
    /// and the vertex separately.
    KirchhoffExpand,
    /// Full scheme vs. Kirchhoff scheme, projecting: the vertex and its
    /// adjacent boundary cells are pooled against the patch; interior cells
    /// map by index.
    KirchhoffProject,
    /// Full scheme vs. fast-edge system, expanding: every cell of an edge is
    /// compared against the edge pool density, vertices directly.
    FastEdgeExpand,
    /// Full scheme vs. fast-edge system, projecting: each edge's cells are
    /// pooled against the edge slot, vertices directly.
    FastEdgeProject,
    /// Compare vertex-based densities only.
    VertexOnly,
}

/// Weight given to the per-cell terms of the distance: the formula taken
/// literally (weight 1) or with each cell term weighted by its width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellWeight {
    #[default]
    Literal,
    PerCell,
}

fn slot_index(sys: &DiscreteSystem, kind: SlotKind) -> Option<usize> {
    sys.layout().slots().iter().position(|s| *s == kind)
}

/// One comparison term: slot groups on either side (aggregated by mass when
/// longer than one) and the term's weight.
struct MapPair {
    a: Vec<usize>,
    b: Vec<usize>,
    weight: f64,
}

fn pair(a: usize, b: usize, weight: f64) -> MapPair {
    MapPair {
        a: alloc::vec![a],
        b: alloc::vec![b],
        weight,
    }
}

/// Build the comparison terms for a map.
fn resolve_map(
    map: ComparisonMap,
    graph: &MetricGraph,
    sys_a: &DiscreteSystem,
    sys_b: &DiscreteSystem,
    cell_weight: CellWeight,
) -> Result<Vec<MapPair>, FunctionalError> {
    let mut pairs = Vec::new();
    let cw = |e: usize, n: usize| match cell_weight {
        CellWeight::Literal => 1.0,
        CellWeight::PerCell => graph.edge_length(e) / n as f64,
    };
    match map {
        ComparisonMap::Identity => {
            if sys_a.dim() != sys_b.dim() {
                return Err(FunctionalError::MappingMismatch);
            }
            let n = sys_a.layout().cells_per_edge().max(1);
            for (i, kind) in sys_a.layout().slots().iter().enumerate() {
                let w = match kind {
                    SlotKind::Cell { edge, .. } => cw(*edge, n),
                    _ => 1.0,
                };
                pairs.push(pair(i, i, w));
            }
        }
        ComparisonMap::VertexOnly => {
            for (i, kind) in sys_a.layout().slots().iter().enumerate() {
                if let SlotKind::Vertex(v) = kind {
                    let j = slot_index(sys_b, SlotKind::Vertex(*v))
                        .or_else(|| slot_index(sys_b, SlotKind::Patch(*v)))
                        .ok_or(FunctionalError::MappingMismatch)?;
                    pairs.push(pair(i, j, 1.0));
                }
            }
            if pairs.is_empty() {
                return Err(FunctionalError::MappingMismatch);
            }
        }
        ComparisonMap::FastEdgeExpand => {
            let n = sys_a.layout().cells_per_edge();
            for (i, kind) in sys_a.layout().slots().iter().enumerate() {
                match kind {
                    SlotKind::Vertex(v) => {
                        let j = slot_index(sys_b, SlotKind::Vertex(*v))
                            .ok_or(FunctionalError::MappingMismatch)?;
                        pairs.push(pair(i, j, 1.0));
                    }
                    SlotKind::Cell { edge, .. } => {
                        let j = slot_index(sys_b, SlotKind::EdgePool(*edge))
                            .ok_or(FunctionalError::MappingMismatch)?;
                        pairs.push(pair(i, j, cw(*edge, n)));
                    }
                    _ => return Err(FunctionalError::MappingMismatch),
                }
            }
        }
        ComparisonMap::FastEdgeProject => {
            for (i, kind) in sys_a.layout().slots().iter().enumerate() {
                if let SlotKind::Vertex(v) = kind {
                    let j = slot_index(sys_b, SlotKind::Vertex(*v))
                        .ok_or(FunctionalError::MappingMismatch)?;
                    pairs.push(pair(i, j, 1.0));
                }
            }
            for e in 0..graph.num_edges() {
                let group: Vec<usize> = sys_a
                    .layout()
                    .slots()
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| matches!(s, SlotKind::Cell { edge, .. } if *edge == e))
                    .map(|(i, _)| i)
                    .collect();
                let j = slot_index(sys_b, SlotKind::EdgePool(e))
                    .ok_or(FunctionalError::MappingMismatch)?;
                if group.is_empty() {
                    return Err(FunctionalError::MappingMismatch);
                }
                pairs.push(MapPair {
                    a: group,
                    b: alloc::vec![j],
                    weight: 1.0,
                });
            }
        }
        ComparisonMap::KirchhoffExpand => {
            let n = sys_a.layout().cells_per_edge();
            if sys_b.layout().cells_per_edge() != n - 2 {
                return Err(FunctionalError::MappingMismatch);
            }
            for (i, kind) in sys_a.layout().slots().iter().enumerate() {
                match kind {
                    SlotKind::Vertex(v) => {
                        let j = slot_index(sys_b, SlotKind::Patch(*v))
                            .ok_or(FunctionalError::MappingMismatch)?;
                        pairs.push(pair(i, j, 1.0));
                    }
                    SlotKind::Cell { edge, k } => {
                        let j = if *k == 1 {
                            slot_index(sys_b, SlotKind::Patch(graph.edge_tail(*edge)))
                        } else if *k == n {
                            slot_index(sys_b, SlotKind::Patch(graph.edge_head(*edge)))
                        } else {
                            slot_index(sys_b, SlotKind::Cell { edge: *edge, k: *k })
                        }
                        .ok_or(FunctionalError::MappingMismatch)?;
                        pairs.push(pair(i, j, cw(*edge, n)));
                    }
                    _ => return Err(FunctionalError::MappingMismatch),
                }
            }
        }
        ComparisonMap::KirchhoffProject => {
            let n = sys_a.layout().cells_per_edge();
            if sys_b.layout().cells_per_edge() != n - 2 {
                return Err(FunctionalError::MappingMismatch);
            }
            for v in 0..graph.num_vertices() {
                let mut group = alloc::vec![
                    slot_index(sys_a, SlotKind::Vertex(v))
                        .ok_or(FunctionalError::MappingMismatch)?
                ];
                for &(e, role) in graph.incident_edges(v) {
                    let k = match role {
                        crate::graph::EndpointRole::Tail => 1,
                        crate::graph::EndpointRole::Head => n,
                    };
                    group.push(
                        slot_index(sys_a, SlotKind::Cell { edge: e, k })
                            .ok_or(FunctionalError::MappingMismatch)?,
                    );
                }
                let j = slot_index(sys_b, SlotKind::Patch(v))
                    .ok_or(FunctionalError::MappingMismatch)?;
                pairs.push(MapPair {
                    a: group,
                    b: alloc::vec![j],
                    weight: 1.0,
                });
            }
            for (i, kind) in sys_a.layout().slots().iter().enumerate() {
                if let SlotKind::Cell { edge, k } = kind {
                    if *k == 1 || *k == n {
                        continue;
                    }
                    let j = slot_index(sys_b, SlotKind::Cell { edge: *edge, k: *k })
                        .ok_or(FunctionalError::MappingMismatch)?;
                    pairs.push(pair(i, j, cw(*edge, n)));
                }
            }
        }
    }
    Ok(pairs)
}

/// Time-integrated Hellinger-type distance between two trajectories on a
/// shared output grid:
/// `1/2 int sum_pairs w (sqrt(u_a) - sqrt(u_b))^2 dt`.
pub fn hellinger(
    map: ComparisonMap,
    graph: &MetricGraph,
    sys_a: &DiscreteSystem,
    traj_a: &Trajectory,
    sys_b: &DiscreteSystem,
    traj_b: &Trajectory,
    cell_weight: CellWeight,
    clip: f64,
) -> Result<f64, FunctionalError> {
    if traj_a.times.len() != traj_b.times.len()
        || traj_a
            .times
            .iter()
            .zip(traj_b.times.iter())
            .any(|(a, b)| math::abs(a - b) > 1e-12 * (1.0 + math::abs(*a)))
    {
        return Err(FunctionalError::GridMismatch);
    }
    let pairs = resolve_map(map, graph, sys_a, sys_b, cell_weight)?;
    let wa = sys_a.weights();
    let wb = sys_b.weights();
    let group_density = |slots: &[usize],
                         state: &[f64],
                         weights: &[f64]|
     -> Result<f64, FunctionalError> {
        let mut mass = 0.0;
        let mut weight = 0.0;
        for &i in slots {
            mass += state[i];
            weight += weights[i];
        }
        clipped_density(mass, weight, clip * slots.len() as f64, slots[0])
    };

    let mut integrand = Vec::with_capacity(traj_a.times.len());
    for (sa, sb) in traj_a.states.iter().zip(traj_b.states.iter()) {
        let mut total = 0.0;
        for p in &pairs {
            let ua = group_density(&p.a, sa, wa)?;
            let ub = group_density(&p.b, sb, wb)?;
            let diff = math::sqrt(ua) - math::sqrt(ub);
            total += p.weight * diff * diff;
        }
        integrand.push(total);
    }
    let mut acc = 0.0;
    for i in 1..traj_a.times.len() {
        let dt = traj_a.times[i] - traj_a.times[i - 1];
        acc += 0.5 * dt * (integrand[i] + integrand[i - 1]);
    }
    Ok(0.5 * acc)
}
