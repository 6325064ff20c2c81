//! Assembly of the linear generators for the four discrete dynamics.
//!
//! Every system is a reversible jump network: slots `i` carrying reference
//! weights `w_i` and bonds `(i, j)` carrying conductances `c`. In density
//! variables `u_i = gamma_i / w_i` each bond contributes `c (u_j - u_i)` to
//! row `i` (after dividing by `w_i`) and the opposite to row `j`. In mass
//! variables this is the generator `d gamma/dt = A gamma` with zero column
//! sums, nonnegative off-diagonal entries and `A w = 0`.
//!
//! The bond list, not the dense matrix, is the primary representation: flux
//! reconstruction and the dissipation functionals are sums over bonds with
//! exactly the coefficients used here, which is what makes the
//! energy-dissipation identity hold along discrete solutions.

use crate::graph::{EndpointRole, MetricGraph};
use crate::linalg::DenseMatrix;
use crate::math;
use crate::reference::{
    endpoint_product, BoundaryCoupling, RateSpec, ReferenceError, ReferenceMeasure,
};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum AssemblyError {
    TooFewCells { n: usize, min: usize },
    Reference(ReferenceError),
    ResidualTooLarge { residual: f64, bound: f64 },
}

impl fmt::Display for AssemblyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyError::TooFewCells { n, min } => {
                write!(f, "cell count {n} below minimum {min}")
            }
            AssemblyError::Reference(e) => write!(f, "{e}"),
            AssemblyError::ResidualTooLarge { residual, bound } => {
                write!(f, "stationary residual {residual} exceeds bound {bound}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AssemblyError {}

impl From<ReferenceError> for AssemblyError {
    fn from(e: ReferenceError) -> Self {
        AssemblyError::Reference(e)
    }
}

/// What a state-vector slot represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    /// Reservoir at vertex `v`.
    Vertex(usize),
    /// Interior cell `k` (1-based) of edge `e`.
    Cell { edge: usize, k: usize },
    /// Whole-edge degree of freedom of the fast-edge system.
    EdgePool(usize),
    /// Merged vertex patch of the Kirchhoff scheme.
    Patch(usize),
}

impl SlotKind {
    pub fn label(&self) -> String {
        use alloc::format;
        match self {
            SlotKind::Vertex(v) => format!("vertex:{v}"),
            SlotKind::Cell { edge, k } => format!("cell:{edge}:{k}"),
            SlotKind::EdgePool(e) => format!("edge:{e}"),
            SlotKind::Patch(v) => format!("patch:{v}"),
        }
    }
}

/// Slot ordering and reference weights of a system. Vertex-like slots come
/// first (in vertex order), then per-edge slots in edge order.
#[derive(Debug, Clone)]
pub struct StateLayout {
    slots: Vec<SlotKind>,
    weights: Vec<f64>,
    /// First slot of each edge's cell block (prelimit / Kirchhoff layouts).
    edge_offsets: Vec<usize>,
    /// Cells per edge in this layout (0 for vertex-only systems).
    cells_per_edge: usize,
}

impl StateLayout {
    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[SlotKind] {
        &self.slots
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn vertex_slot(&self, v: usize) -> usize {
        v
    }

    /// Slot of cell `k` (1-based within this layout's cell range) of edge `e`.
    pub fn cell_slot(&self, e: usize, k: usize) -> usize {
        self.edge_offsets[e] + (k - 1)
    }

    pub fn cells_per_edge(&self) -> usize {
        self.cells_per_edge
    }

    /// Density view `u_i = gamma_i / w_i`.
    pub fn density(&self, gamma: &[f64]) -> Vec<f64> {
        gamma
            .iter()
            .zip(self.weights.iter())
            .map(|(g, w)| g / w)
            .collect()
    }
}

/// Mechanism class of a bond, used to split the dissipation breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondClass {
    /// Discretized diffusion along a metric edge (includes Kirchhoff patch
    /// couplings).
    Diffusive,
    /// Jump exchange with a reservoir (edge-vertex, pool-vertex, or the
    /// contracted vertex-vertex jumps of the combinatorial system).
    Exchange,
}

/// Oriented conductance bond: flux counts positive from `a` to `b`.
#[derive(Debug, Clone, Copy)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub conductance: f64,
    pub class: BondClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Prelimit { n: usize },
    KirchhoffLimit { n: usize },
    FastEdgeLimit,
    CombinatorialLimit,
}

/// An assembled linear generator together with its layout and bond list.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub kind: SystemKind,
    layout: StateLayout,
    bonds: Vec<Bond>,
}

impl DiscreteSystem {
    /// Build a system directly from slots, weights and bonds. Useful for
    /// small closed-form networks (test oracles, custom chains); the
    /// assemblers below are the normal entry points.
    pub fn from_parts(kind: SystemKind, slots: Vec<SlotKind>, weights: Vec<f64>, bonds: Vec<Bond>) -> Self {
        let mut edge_offsets: Vec<usize> = Vec::new();
        for (i, slot) in slots.iter().enumerate() {
            if let SlotKind::Cell { edge, k: 1 } | SlotKind::EdgePool(edge) = *slot {
                if edge == edge_offsets.len() {
                    edge_offsets.push(i);
                }
            }
        }
        let cells_per_edge = slots
            .iter()
            .filter_map(|s| match s {
                SlotKind::Cell { edge: 0, k } => Some(*k),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        DiscreteSystem {
            kind,
            layout: StateLayout {
                slots,
                weights,
                edge_offsets,
                cells_per_edge,
            },
            bonds,
        }
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn weights(&self) -> &[f64] {
        self.layout.weights()
    }

    /// Apply the generator in mass variables: `out = A gamma`.
    pub fn apply_generator(&self, gamma: &[f64], out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = 0.0;
        }
        let w = self.layout.weights();
        for bond in &self.bonds {
            let flux = bond.conductance * (gamma[bond.a] / w[bond.a] - gamma[bond.b] / w[bond.b]);
            out[bond.a] -= flux;
            out[bond.b] += flux;
        }
    }

    /// Dense generator matrix (tests and small systems only).
    pub fn dense_generator(&self) -> DenseMatrix {
        let n = self.dim();
        let w = self.layout.weights();
        let mut m = DenseMatrix::zeros(n);
        for bond in &self.bonds {
            let (i, j, c) = (bond.a, bond.b, bond.conductance);
            m.add(i, i, -c / w[i]);
            m.add(j, j, -c / w[j]);
            m.add(i, j, c / w[j]);
            m.add(j, i, c / w[i]);
        }
        m
    }

    /// Stage matrix `I - c * S` of the symmetrized generator
    /// `S = D^{1/2} A D^{-1/2}`, `D = diag(1/w)`; symmetric positive definite
    /// for every `c > 0` because `S` is negative semidefinite.
    pub fn sym_stage_matrix(&self, c: f64) -> DenseMatrix {
        let n = self.dim();
        let w = self.layout.weights();
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        for bond in &self.bonds {
            let (i, j, g) = (bond.a, bond.b, bond.conductance);
            m.add(i, i, c * g / w[i]);
            m.add(j, j, c * g / w[j]);
            let off = c * g / math::sqrt(w[i] * w[j]);
            m.add(i, j, -off);
            m.add(j, i, -off);
        }
        m
    }
}

/// Total mass of a state vector.
pub fn total_mass(gamma: &[f64]) -> f64 {
    gamma.iter().sum()
}

/// Stationary state with the given total mass: the reference weight vector
/// rescaled. Verifies the residual `||A gamma*||_inf <= 1e-12 ||A||_inf
/// ||gamma*||_inf` as an assembly self-check.
pub fn stationary_state(sys: &DiscreteSystem, mass: f64) -> Result<Vec<f64>, AssemblyError> {
    let w = sys.weights();
    let total: f64 = w.iter().sum();
    let gamma: Vec<f64> = w.iter().map(|wi| wi * mass / total).collect();
    let mut residual = vec![0.0; sys.dim()];
    sys.apply_generator(&gamma, &mut residual);
    let res_norm = residual.iter().fold(0.0f64, |m, &v| m.max(math::abs(v)));
    let a_norm = {
        // ||A||_inf from the bond list without forming the dense matrix
        let mut row_sums = vec![0.0f64; sys.dim()];
        for bond in sys.bonds() {
            let ci = bond.conductance / w[bond.a];
            let cj = bond.conductance / w[bond.b];
            row_sums[bond.a] += ci + cj;
            row_sums[bond.b] += ci + cj;
        }
        row_sums.iter().fold(0.0f64, |m, &v| m.max(v))
    };
    let g_norm = gamma.iter().fold(0.0f64, |m, &v| m.max(math::abs(v)));
    let bound = 1e-12 * a_norm * g_norm;
    if res_norm > bound {
        return Err(AssemblyError::ResidualTooLarge {
            residual: res_norm,
            bound,
        });
    }
    Ok(gamma)
}

/// Boundary coupling weight `d_{v,n}^e = k_v^e sqrt(omega_v * X)` of the
/// prelimit scheme, with `X` chosen by the [`BoundaryCoupling`] convention.
fn boundary_weight(
    coupling: BoundaryCoupling,
    measure: &ReferenceMeasure,
    rates: &RateSpec,
    graph: &MetricGraph,
    e: usize,
    role: EndpointRole,
    cell_mass: f64,
    n: usize,
) -> f64 {
    let v = graph.edge_endpoint(e, role);
    let x = match coupling {
        BoundaryCoupling::EndpointDensity => measure.endpoint_density(graph, e, role),
        BoundaryCoupling::CellAverageDensity => cell_mass * n as f64 / graph.edge_length(e),
        BoundaryCoupling::CellMass => cell_mass,
    };
    rates.sym_rate(e, role) * math::sqrt(measure.vertex_weight(v) * x)
}

/// Assemble the full space-discrete system: `|V|` vertex slots plus `n` cells
/// per edge. Interior cells couple with conductance `n^2 d^e
/// sqrt(cell_k cell_{k+1})`; boundary cells couple to their vertex with the
/// boundary weight.
pub fn assemble_prelimit(
    graph: &MetricGraph,
    measure: &ReferenceMeasure,
    rates: &RateSpec,
    diffusivities: &[f64],
    n: usize,
    coupling: BoundaryCoupling,
) -> Result<DiscreteSystem, AssemblyError> {
    if n < 3 {
        return Err(AssemblyError::TooFewCells { n, min: 3 });
    }
    let nv = graph.num_vertices();
    let ne = graph.num_edges();

    let mut slots = Vec::with_capacity(nv + ne * n);
    let mut weights = Vec::with_capacity(nv + ne * n);
    for v in 0..nv {
        slots.push(SlotKind::Vertex(v));
        weights.push(measure.vertex_weight(v));
    }
    let mut edge_offsets = Vec::with_capacity(ne);
    let mut cell_masses = Vec::with_capacity(ne);
    for e in 0..ne {
        edge_offsets.push(slots.len());
        let cells = measure.cell_masses(graph, e, n)?;
        for (k, &mass) in cells.iter().enumerate() {
            slots.push(SlotKind::Cell { edge: e, k: k + 1 });
            weights.push(mass);
        }
        cell_masses.push(cells);
    }
    let layout = StateLayout {
        slots,
        weights,
        edge_offsets,
        cells_per_edge: n,
    };

    let n2 = (n * n) as f64;
    let mut bonds = Vec::new();
    for e in 0..ne {
        let cells = &cell_masses[e];
        let d = diffusivities[e];
        for k in 1..n {
            bonds.push(Bond {
                a: layout.cell_slot(e, k),
                b: layout.cell_slot(e, k + 1),
                conductance: n2 * d * math::sqrt(cells[k - 1] * cells[k]),
                class: BondClass::Diffusive,
            });
        }
        // boundary cells exchange with their vertices, flux oriented
        // edge -> vertex
        for (role, k, cell) in [
            (EndpointRole::Tail, 1usize, cells[0]),
            (EndpointRole::Head, n, cells[n - 1]),
        ] {
            let v = graph.edge_endpoint(e, role);
            bonds.push(Bond {
                a: layout.cell_slot(e, k),
                b: layout.vertex_slot(v),
                conductance: boundary_weight(coupling, measure, rates, graph, e, role, cell, n),
                class: BondClass::Exchange,
            });
        }
    }

    Ok(DiscreteSystem {
        kind: SystemKind::Prelimit { n },
        layout,
        bonds,
    })
}

/// Assemble the Kirchhoff-limit scheme: one merged patch per vertex (mass =
/// sum of the adjacent boundary cell masses), cells `k = 2..=n-1` per edge,
/// patch-cell couplings `n^2 d^e sqrt(cell_1 cell_2)` resp.
/// `n^2 d^e sqrt(cell_{n-1} cell_n)`. Weights are renormalized by the total
/// edge mass, matching the vanishing-reservoir limit measure.
pub fn assemble_kirchhoff_limit(
    graph: &MetricGraph,
    measure: &ReferenceMeasure,
    diffusivities: &[f64],
    n: usize,
) -> Result<DiscreteSystem, AssemblyError> {
    if n < 5 {
        return Err(AssemblyError::TooFewCells { n, min: 5 });
    }
    let nv = graph.num_vertices();
    let ne = graph.num_edges();
    let edge_total = measure.edge_total();

    let mut cell_masses = Vec::with_capacity(ne);
    for e in 0..ne {
        cell_masses.push(measure.cell_masses(graph, e, n)?);
    }

    let mut slots = Vec::with_capacity(nv + ne * (n - 2));
    let mut weights = Vec::with_capacity(nv + ne * (n - 2));
    for v in 0..nv {
        let mut patch = 0.0;
        for &(e, role) in graph.incident_edges(v) {
            patch += match role {
                EndpointRole::Tail => cell_masses[e][0],
                EndpointRole::Head => cell_masses[e][n - 1],
            };
        }
        slots.push(SlotKind::Patch(v));
        weights.push(patch / edge_total);
    }
    let mut edge_offsets = Vec::with_capacity(ne);
    for (e, cells) in cell_masses.iter().enumerate() {
        edge_offsets.push(slots.len());
        for k in 2..n {
            slots.push(SlotKind::Cell { edge: e, k });
            weights.push(cells[k - 1] / edge_total);
        }
    }
    let layout = StateLayout {
        slots,
        weights,
        edge_offsets,
        cells_per_edge: n - 2,
    };
    // cell k of the full scheme (2 <= k <= n-1) sits at offset k-2
    let cell_slot = |e: usize, k: usize| layout.edge_offsets[e] + (k - 2);

    let n2 = (n * n) as f64;
    let scale = 1.0 / edge_total;
    let mut bonds = Vec::new();
    for e in 0..ne {
        let cells = &cell_masses[e];
        let d = diffusivities[e];
        for k in 2..(n - 1) {
            bonds.push(Bond {
                a: cell_slot(e, k),
                b: cell_slot(e, k + 1),
                conductance: n2 * d * math::sqrt(cells[k - 1] * cells[k]) * scale,
                class: BondClass::Diffusive,
            });
        }
        let tail = graph.edge_tail(e);
        let head = graph.edge_head(e);
        bonds.push(Bond {
            a: layout.vertex_slot(tail),
            b: cell_slot(e, 2),
            conductance: n2 * d * math::sqrt(cells[0] * cells[1]) * scale,
            class: BondClass::Diffusive,
        });
        bonds.push(Bond {
            a: cell_slot(e, n - 1),
            b: layout.vertex_slot(head),
            conductance: n2 * d * math::sqrt(cells[n - 2] * cells[n - 1]) * scale,
            class: BondClass::Diffusive,
        });
    }

    Ok(DiscreteSystem {
        kind: SystemKind::KirchhoffLimit { n },
        layout,
        bonds,
    })
}

/// Assemble the fast-edge limit: `|V|` vertex slots plus one pool slot per
/// edge with weight `pi^e([0, len])`; pool-vertex couplings
/// `k_v^e sqrt(pi^e|_v omega_v)` with continuum endpoint densities.
pub fn assemble_fast_edge(
    graph: &MetricGraph,
    measure: &ReferenceMeasure,
    rates: &RateSpec,
) -> DiscreteSystem {
    let nv = graph.num_vertices();
    let ne = graph.num_edges();

    let mut slots = Vec::with_capacity(nv + ne);
    let mut weights = Vec::with_capacity(nv + ne);
    for v in 0..nv {
        slots.push(SlotKind::Vertex(v));
        weights.push(measure.vertex_weight(v));
    }
    let mut edge_offsets = Vec::with_capacity(ne);
    for e in 0..ne {
        edge_offsets.push(slots.len());
        slots.push(SlotKind::EdgePool(e));
        weights.push(measure.edge_mass(e));
    }
    let layout = StateLayout {
        slots,
        weights,
        edge_offsets,
        cells_per_edge: 1,
    };

    let mut bonds = Vec::new();
    for e in 0..ne {
        for role in [EndpointRole::Tail, EndpointRole::Head] {
            let v = graph.edge_endpoint(e, role);
            bonds.push(Bond {
                a: layout.edge_offsets[e],
                b: layout.vertex_slot(v),
                conductance: endpoint_product(measure, rates, graph, e, role),
                class: BondClass::Exchange,
            });
        }
    }

    DiscreteSystem {
        kind: SystemKind::FastEdgeLimit,
        layout,
        bonds,
    }
}

/// Assemble the combinatorial limit: `|V|` slots with weights
/// `omega_v / omega(V)` and one bond per edge with conductance
/// `Harm(a_v, a_w) / (2 omega(V))`, the harmonic mean of the endpoint
/// products.
pub fn assemble_combinatorial(
    graph: &MetricGraph,
    measure: &ReferenceMeasure,
    rates: &RateSpec,
) -> DiscreteSystem {
    let nv = graph.num_vertices();
    let omega_v_total = measure.vertex_total();

    let slots: Vec<SlotKind> = (0..nv).map(SlotKind::Vertex).collect();
    let weights: Vec<f64> = (0..nv)
        .map(|v| measure.vertex_weight(v) / omega_v_total)
        .collect();
    let layout = StateLayout {
        slots,
        weights,
        edge_offsets: vec![],
        cells_per_edge: 0,
    };

    let mut bonds = Vec::new();
    for e in 0..graph.num_edges() {
        let a_tail = endpoint_product(measure, rates, graph, e, EndpointRole::Tail);
        let a_head = endpoint_product(measure, rates, graph, e, EndpointRole::Head);
        let harm = 2.0 / (1.0 / a_tail + 1.0 / a_head);
        bonds.push(Bond {
            a: layout.vertex_slot(graph.edge_tail(e)),
            b: layout.vertex_slot(graph.edge_head(e)),
            conductance: harm / (2.0 * omega_v_total),
            class: BondClass::Exchange,
        });
    }

    DiscreteSystem {
        kind: SystemKind::CombinatorialLimit,
        layout,
        bonds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;

    fn check_generator_invariants(sys: &DiscreteSystem) {
        let a = sys.dense_generator();
        let n = sys.dim();
        let w = sys.weights();
        // column sums vanish
        for j in 0..n {
            let mut col_sum = 0.0;
            let mut col_max = 0.0f64;
            for i in 0..n {
                col_sum += a.get(i, j);
                col_max = col_max.max(math::abs(a.get(i, j)));
            }
            assert!(
                math::abs(col_sum) <= 1e-13 * col_max.max(1e-300),
                "column {j} sums to {col_sum}"
            );
        }
        // off-diagonals nonnegative
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert!(a.get(i, j) >= 0.0);
                }
            }
        }
        // reversibility: w_j A_ij = w_i A_ji
        for i in 0..n {
            for j in 0..n {
                let lhs = w[j] * a.get(i, j);
                let rhs = w[i] * a.get(j, i);
                let scale = math::abs(lhs).max(math::abs(rhs)).max(1e-300);
                assert!(math::abs(lhs - rhs) <= 1e-12 * scale);
            }
        }
        // A w = 0
        let mut out = vec![0.0; n];
        sys.apply_generator(w, &mut out);
        let res = out.iter().fold(0.0f64, |m, &v| m.max(math::abs(v)));
        assert!(res <= 1e-12 * a.max_abs());
    }

    #[test]
    fn prelimit_dimensions_and_invariants() {
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let r = presets::triangle_rates(&g);
        let sys = assemble_prelimit(&g, &m, &r, &[1.0, 1.0, 1.0], 100, BoundaryCoupling::default())
            .unwrap();
        assert_eq!(sys.dim(), 303);
        check_generator_invariants(&sys);
        assert!(stationary_state(&sys, 1.0).is_ok());
    }

    #[test]
    fn prelimit_rejects_tiny_n() {
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let r = presets::triangle_rates(&g);
        assert!(matches!(
            assemble_prelimit(&g, &m, &r, &[1.0, 1.0, 1.0], 2, BoundaryCoupling::default()),
            Err(AssemblyError::TooFewCells { .. })
        ));
    }

    #[test]
    fn kirchhoff_dimensions_and_invariants() {
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let sys = assemble_kirchhoff_limit(&g, &m, &[1.0, 1.0, 1.0], 100).unwrap();
        assert_eq!(sys.dim(), 3 * 98 + 3);
        assert_relative_eq!(sys.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        check_generator_invariants(&sys);
    }

    #[test]
    fn fast_edge_dimensions_and_invariants() {
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let r = presets::triangle_rates(&g);
        let sys = assemble_fast_edge(&g, &m, &r);
        assert_eq!(sys.dim(), 6);
        check_generator_invariants(&sys);
    }

    #[test]
    fn combinatorial_dimensions_and_invariants() {
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let r = presets::triangle_rates(&g);
        let sys = assemble_combinatorial(&g, &m, &r);
        assert_eq!(sys.dim(), 3);
        assert_relative_eq!(sys.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-13);
        check_generator_invariants(&sys);
    }

    #[test]
    fn single_edge_fast_edge_eigenvalues() {
        // pi = 1 on [0,1], omega = 1 each (then normalized by 3); k = 1.
        // In normalized units all couplings and weights are 1/3, so the mass
        // generator is the path-graph Laplacian with spectrum {0, -1, -3}.
        let g = MetricGraph::build(
            alloc::vec!["a".into(), "b".into()],
            &[("a".into(), "b".into(), 1.0)],
        )
        .unwrap();
        let m = ReferenceMeasure::normalize(
            &[1.0, 1.0],
            &[crate::reference::EdgeDensityExpr::Polynomial {
                coeffs: alloc::vec![1.0],
            }],
            &g,
        )
        .unwrap();
        let r = RateSpec::uniform(&g, 1.0).unwrap();
        let sys = assemble_fast_edge(&g, &m, &r);
        let a = sys.dense_generator();
        // characteristic polynomial of the 3x3: verify A v = lambda v for the
        // known eigenpairs of [[-1,1,0],[1,-2,1],[0,1,-1]] under layout
        // (vertex a, vertex b, pool)
        let mut out = vec![0.0; 3];
        // layout order: vertex a, vertex b, pool e. The pool couples to both.
        // eigenvector for 0: (1,1,1)
        sys.apply_generator(&[1.0, 1.0, 1.0], &mut out);
        for &v in &out {
            assert!(math::abs(v) < 1e-14);
        }
        // eigenvector for -1: (1,-1,0) (vertices swap through the pool)
        sys.apply_generator(&[1.0, -1.0, 0.0], &mut out);
        assert_relative_eq!(out[0], -1.0, epsilon = 1e-13);
        assert_relative_eq!(out[1], 1.0, epsilon = 1e-13);
        assert!(math::abs(out[2]) < 1e-13);
        // eigenvector for -3: (1,1,-2)
        sys.apply_generator(&[1.0, 1.0, -2.0], &mut out);
        assert_relative_eq!(out[0], -3.0, epsilon = 1e-13);
        assert_relative_eq!(out[1], -3.0, epsilon = 1e-13);
        assert_relative_eq!(out[2], 6.0, epsilon = 1e-13);
        let _ = a;
    }

    #[test]
    fn stationary_state_is_weight_vector() {
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let r = presets::triangle_rates(&g);
        let sys = assemble_combinatorial(&g, &m, &r);
        let st = stationary_state(&sys, 1.0).unwrap();
        let omega_total = m.vertex_total();
        for v in 0..3 {
            assert_relative_eq!(st[v], m.vertex_weight(v) / omega_total, max_relative = 1e-12);
        }
        assert_relative_eq!(total_mass(&st), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scaled_prelimit_keeps_invariants() {
        use crate::reference::{apply_scaling, ScalingRegime};
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let r = presets::triangle_rates(&g);
        let d = presets::triangle_diffusivities();
        for regime in [
            ScalingRegime::Kirchhoff(0.01),
            ScalingRegime::FastEdge(0.01),
            ScalingRegime::Joint(0.01),
        ] {
            let s = apply_scaling(regime, &m, &r, &d).unwrap();
            let sys = assemble_prelimit(
                &g,
                &s.measure,
                &s.rates,
                &s.diffusivities,
                20,
                BoundaryCoupling::default(),
            )
            .unwrap();
            check_generator_invariants(&sys);
            assert!(stationary_state(&sys, 1.0).is_ok());
        }
    }
}
