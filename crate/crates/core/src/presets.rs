//! The worked triangle setup used across the test suite and as the default
//! CLI scenario: three unit edges, mixed polynomial/sinusoidal reference
//! densities, unit diffusivities and unit symmetric jump rates.

use crate::graph::{self, MetricGraph};
use crate::reference::{EdgeDensityExpr, RateSpec, ReferenceMeasure};
use alloc::vec;
use alloc::vec::Vec;

pub fn triangle_graph() -> MetricGraph {
    graph::triangle()
}

/// Raw (unnormalized) vertex weights `(0.1, 1.1, 1.1)`.
pub fn triangle_raw_vertex_weights() -> Vec<f64> {
    vec![0.1, 1.1, 1.1]
}

/// Raw edge densities: `x + 0.1`, `sin(4 pi x) + 1.1`, `0.8 x^2 - 1.8 x + 1.1`.
pub fn triangle_raw_densities() -> Vec<EdgeDensityExpr> {
    vec![
        EdgeDensityExpr::Polynomial {
            coeffs: vec![0.1, 1.0],
        },
        EdgeDensityExpr::Sinusoid {
            amplitude: 1.0,
            omega: 4.0 * core::f64::consts::PI,
            phase: 0.0,
            offset: 1.1,
        },
        EdgeDensityExpr::Polynomial {
            coeffs: vec![1.1, -1.8, 0.8],
        },
    ]
}

pub fn triangle_measure(graph: &MetricGraph) -> ReferenceMeasure {
    ReferenceMeasure::normalize(
        &triangle_raw_vertex_weights(),
        &triangle_raw_densities(),
        graph,
    )
    .expect("triangle reference measure is valid")
}

pub fn triangle_rates(graph: &MetricGraph) -> RateSpec {
    RateSpec::uniform(graph, 1.0).expect("unit rates are valid")
}

pub fn triangle_diffusivities() -> Vec<f64> {
    vec![1.0, 1.0, 1.0]
}
