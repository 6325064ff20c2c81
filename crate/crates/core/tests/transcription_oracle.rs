//! Entrywise comparison of the assembled generators against straight-line
//! transcriptions of the scheme equations, written here with independent
//! index bookkeeping (density form first, then converted to mass form).

use mgf_core::linalg::DenseMatrix;
use mgf_core::presets;
use mgf_core::reference::BoundaryCoupling;
use mgf_core::{
    assemble_kirchhoff_limit, assemble_prelimit, EdgeDensityExpr, EndpointRole, MetricGraph,
    RateSpec, ReferenceMeasure,
};

/// Density-form transcription of the full scheme:
/// rows scaled by 1/weight to give mass-form A = B * diag(1/w).
fn prelimit_oracle(
    graph: &MetricGraph,
    measure: &ReferenceMeasure,
    rates: &RateSpec,
    d: &[f64],
    n: usize,
    coupling: BoundaryCoupling,
) -> (DenseMatrix, Vec<f64>) {
    let nv = graph.num_vertices();
    let dim = nv + graph.num_edges() * n;

    let mut weights = vec![0.0; dim];
    for v in 0..nv {
        weights[v] = measure.vertex_weight(v);
    }
    let cell_slot = |e: usize, k: usize| nv + e * n + (k - 1);
    let mut cells = Vec::new();
    for e in 0..graph.num_edges() {
        let cm = measure.cell_masses(graph, e, n).unwrap();
        for k in 1..=n {
            weights[cell_slot(e, k)] = cm[k - 1];
        }
        cells.push(cm);
    }

    // B[i][j] = coefficient of u_j in the equation for d gamma_i / dt
    let mut b = DenseMatrix::zeros(dim);
    for e in 0..graph.num_edges() {
        let cm = &cells[e];
        let n2 = (n * n) as f64;
        let dtilde = |k: usize| d[e] * (cm[k - 1] * cm[k]).sqrt(); // between cells k, k+1
        let coupling_weight = |role: EndpointRole| {
            let v = graph.edge_endpoint(e, role);
            let boundary_cell = match role {
                EndpointRole::Tail => cm[0],
                EndpointRole::Head => cm[n - 1],
            };
            let x = match coupling {
                BoundaryCoupling::EndpointDensity => measure.endpoint_density(graph, e, role),
                BoundaryCoupling::CellAverageDensity => {
                    boundary_cell * n as f64 / graph.edge_length(e)
                }
                BoundaryCoupling::CellMass => boundary_cell,
            };
            rates.sym_rate(e, role) * (measure.vertex_weight(v) * x).sqrt()
        };

        // interior rows k = 2..n-1
        for k in 2..n {
            let row = cell_slot(e, k);
            b.add(row, cell_slot(e, k + 1), n2 * dtilde(k));
            b.add(row, row, -n2 * dtilde(k));
            b.add(row, cell_slot(e, k - 1), n2 * dtilde(k - 1));
            b.add(row, row, -n2 * dtilde(k - 1));
        }
        // first cell
        let dv = coupling_weight(EndpointRole::Tail);
        let row1 = cell_slot(e, 1);
        b.add(row1, cell_slot(e, 2), n2 * dtilde(1));
        b.add(row1, row1, -n2 * dtilde(1));
        b.add(row1, graph.edge_tail(e), dv);
        b.add(row1, row1, -dv);
        // last cell
        let dw = coupling_weight(EndpointRole::Head);
        let rown = cell_slot(e, n);
        b.add(rown, graph.edge_head(e), dw);
        b.add(rown, rown, -dw);
        b.add(rown, cell_slot(e, n - 1), n2 * dtilde(n - 1));
        b.add(rown, rown, -n2 * dtilde(n - 1));
        // vertex rows
        b.add(graph.edge_tail(e), row1, dv);
        b.add(graph.edge_tail(e), graph.edge_tail(e), -dv);
        b.add(graph.edge_head(e), rown, dw);
        b.add(graph.edge_head(e), graph.edge_head(e), -dw);
    }

    // mass form
    let mut a = DenseMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            a.set(i, j, b.get(i, j) / weights[j]);
        }
    }
    (a, weights)
}

fn assert_matrices_match(a: &DenseMatrix, b: &DenseMatrix) {
    assert_eq!(a.n, b.n);
    let scale = a.max_abs().max(b.max_abs());
    for i in 0..a.n {
        for j in 0..a.n {
            let diff = (a.get(i, j) - b.get(i, j)).abs();
            assert!(
                diff <= 1e-13 * scale,
                "entry ({i},{j}): {} vs {}",
                a.get(i, j),
                b.get(i, j)
            );
        }
    }
}

#[test]
fn prelimit_matches_transcription_on_triangle() {
    let g = presets::triangle_graph();
    let m = presets::triangle_measure(&g);
    let r = presets::triangle_rates(&g);
    let d = presets::triangle_diffusivities();
    for n in [3usize, 4, 5] {
        for coupling in [
            BoundaryCoupling::EndpointDensity,
            BoundaryCoupling::CellAverageDensity,
            BoundaryCoupling::CellMass,
        ] {
            let sys = assemble_prelimit(&g, &m, &r, &d, n, coupling).unwrap();
            let (oracle, weights) = prelimit_oracle(&g, &m, &r, &d, n, coupling);
            assert_matrices_match(&sys.dense_generator(), &oracle);
            for (wa, wb) in sys.weights().iter().zip(weights.iter()) {
                assert!((wa - wb).abs() <= 1e-15);
            }
        }
    }
}

#[test]
fn prelimit_matches_transcription_uniform_single_edge() {
    // n = 3, pi = 1, omega = 1, k = 1, d = 1 (then normalized): the 5x5 case
    // whose interior row is n^2 * (1/3)-style second differences.
    let g = MetricGraph::build(
        vec!["a".into(), "b".into()],
        &[("a".into(), "b".into(), 1.0)],
    )
    .unwrap();
    let m = ReferenceMeasure::normalize(
        &[1.0, 1.0],
        &[EdgeDensityExpr::Polynomial { coeffs: vec![1.0] }],
        &g,
    )
    .unwrap();
    let r = RateSpec::uniform(&g, 1.0).unwrap();
    let sys = assemble_prelimit(&g, &m, &r, &[1.0], 3, BoundaryCoupling::EndpointDensity).unwrap();
    assert_eq!(sys.dim(), 5);
    let (oracle, _) = prelimit_oracle(&g, &m, &r, &[1.0], 3, BoundaryCoupling::EndpointDensity);
    assert_matrices_match(&sys.dense_generator(), &oracle);

    // interior cell row in density form: w_2 du_2 = n^2 d~ (u_3 - u_2)
    //                                            + n^2 d~ (u_1 - u_2),
    // with all cell masses 1/9 (pi = 1/3 over cells of width 1/3) and
    // d~ = 1/9: mass-form coupling to each neighbour is 9 * (1/9) / (1/9) = 9.
    let a = sys.dense_generator();
    let c2 = 2 + 1; // vertices first, cell 2 is slot 3
    assert!((a.get(c2, c2 + 1) - 9.0).abs() < 1e-12);
    assert!((a.get(c2, c2 - 1) - 9.0).abs() < 1e-12);
    assert!((a.get(c2, c2) + 18.0).abs() < 1e-12);
}

/// Kirchhoff-limit transcription for a single edge: the second-difference
/// chain with the two boundary cells merged into end patches.
#[test]
fn kirchhoff_matches_transcription_single_edge() {
    let g = MetricGraph::build(
        vec!["a".into(), "b".into()],
        &[("a".into(), "b".into(), 1.0)],
    )
    .unwrap();
    let m = ReferenceMeasure::normalize(
        &[1.0, 1.0],
        &[EdgeDensityExpr::Polynomial { coeffs: vec![1.0] }],
        &g,
    )
    .unwrap();
    let n = 5usize;
    let sys = assemble_kirchhoff_limit(&g, &m, &[1.0], n).unwrap();
    assert_eq!(sys.dim(), 2 + (n - 2));

    // transcription: weights renormalized by the edge mass; slots are
    // patch(a), patch(b), cells 2..4
    let cm: Vec<f64> = m
        .cell_masses(&g, 0, n)
        .unwrap()
        .iter()
        .map(|c| c / m.edge_total())
        .collect();
    let dim = 5;
    let slot_patch_a = 0;
    let slot_patch_b = 1;
    let slot_cell = |k: usize| 2 + (k - 2);
    let mut weights = vec![0.0; dim];
    weights[slot_patch_a] = cm[0];
    weights[slot_patch_b] = cm[n - 1];
    for k in 2..n {
        weights[slot_cell(k)] = cm[k - 1];
    }
    let n2 = (n * n) as f64;
    let dtilde = |k: usize| (cm[k - 1] * cm[k]).sqrt();
    let mut b = DenseMatrix::zeros(dim);
    // cell 2 couples to patch a (via d~_1) and cell 3
    b.add(slot_cell(2), slot_patch_a, n2 * dtilde(1));
    b.add(slot_cell(2), slot_cell(2), -n2 * dtilde(1));
    b.add(slot_cell(2), slot_cell(3), n2 * dtilde(2));
    b.add(slot_cell(2), slot_cell(2), -n2 * dtilde(2));
    // cell 3 interior
    b.add(slot_cell(3), slot_cell(2), n2 * dtilde(2));
    b.add(slot_cell(3), slot_cell(3), -n2 * dtilde(2));
    b.add(slot_cell(3), slot_cell(4), n2 * dtilde(3));
    b.add(slot_cell(3), slot_cell(3), -n2 * dtilde(3));
    // cell 4 couples to cell 3 and patch b (via d~_{n-1})
    b.add(slot_cell(4), slot_cell(3), n2 * dtilde(3));
    b.add(slot_cell(4), slot_cell(4), -n2 * dtilde(3));
    b.add(slot_cell(4), slot_patch_b, n2 * dtilde(4));
    b.add(slot_cell(4), slot_cell(4), -n2 * dtilde(4));
    // patch rows
    b.add(slot_patch_a, slot_cell(2), n2 * dtilde(1));
    b.add(slot_patch_a, slot_patch_a, -n2 * dtilde(1));
    b.add(slot_patch_b, slot_cell(4), n2 * dtilde(4));
    b.add(slot_patch_b, slot_patch_b, -n2 * dtilde(4));

    let mut oracle = DenseMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            oracle.set(i, j, b.get(i, j) / weights[j]);
        }
    }
    assert_matrices_match(&sys.dense_generator(), &oracle);
}
