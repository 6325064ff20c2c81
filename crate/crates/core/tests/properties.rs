//! Property tests over randomized graphs, densities, rates and scalings.

use mgf_core::functionals::{cosh_dual, cosh_primal};
use mgf_core::reference::{
    apply_scaling, harmonic_rate, BoundaryCoupling, EdgeDensityExpr, RateSpec, ReferenceMeasure,
    ScalingRegime,
};
use mgf_core::{
    assemble_combinatorial, assemble_fast_edge, assemble_kirchhoff_limit, assemble_prelimit,
    integrate, relative_entropy, stationary_state, DiscreteSystem, IntegratorConfig, MetricGraph,
    OutputGrid,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Setup {
    graph: MetricGraph,
    measure: ReferenceMeasure,
    rates: RateSpec,
    d: Vec<f64>,
}

fn density_strategy(len: f64) -> impl Strategy<Value = EdgeDensityExpr> {
    prop_oneof![
        // linear, positive at both endpoints
        (0.1f64..2.0, 0.1f64..2.0).prop_map(move |(a, b)| EdgeDensityExpr::Polynomial {
            coeffs: vec![a, (b - a) / len],
        }),
        (0.0f64..0.9, 0.5f64..8.0, 0.0f64..6.0).prop_map(|(amp, omega, phase)| {
            EdgeDensityExpr::Sinusoid {
                amplitude: amp,
                omega,
                phase,
                offset: amp + 0.1,
            }
        }),
        (0.1f64..2.0, 0.1f64..2.0, 0.1f64..2.0).prop_map(move |(a, b, c)| {
            EdgeDensityExpr::Tabulated {
                xs: vec![0.0, 0.37 * len, len],
                ys: vec![a, b, c],
            }
        }),
    ]
}

fn setup_strategy() -> impl Strategy<Value = Setup> {
    // a ring of `nv` vertices (always connected, no anti-parallel pairs) with
    // randomized lengths, densities, weights and rates
    (3usize..6)
        .prop_flat_map(|nv| {
            (
                Just(nv),
                proptest::collection::vec(0.3f64..2.0, nv),     // lengths
                proptest::collection::vec(0.05f64..2.0, nv),    // vertex weights
                proptest::collection::vec(0.2f64..3.0, nv),     // sym rates
                proptest::collection::vec(0.2f64..3.0, nv),     // diffusivities
            )
        })
        .prop_flat_map(|(nv, lengths, weights, ks, ds)| {
            let densities: Vec<_> = lengths.iter().map(|&l| density_strategy(l)).collect();
            (Just((nv, lengths, weights, ks, ds)), densities)
        })
        .prop_map(|((nv, lengths, weights, ks, ds), densities)| {
            let ids: Vec<String> = (0..nv).map(|i| format!("v{i}")).collect();
            let edges: Vec<(String, String, f64)> = (0..nv)
                .map(|i| (ids[i].clone(), ids[(i + 1) % nv].clone(), lengths[i]))
                .collect();
            let graph = MetricGraph::build(ids, &edges).unwrap();
            let measure = ReferenceMeasure::normalize(&weights, &densities, &graph).unwrap();
            let rates =
                RateSpec::from_symmetric(ks.iter().map(|&k| [k, k * 1.3]).collect(), &graph)
                    .unwrap();
            Setup {
                graph,
                measure,
                rates,
                d: ds,
            }
        })
}

fn check_invariants(sys: &DiscreteSystem) {
    let a = sys.dense_generator();
    let w = sys.weights();
    let dim = sys.dim();
    for j in 0..dim {
        let mut col_sum = 0.0;
        let mut col_max: f64 = 0.0;
        for i in 0..dim {
            col_sum += a.get(i, j);
            col_max = col_max.max(a.get(i, j).abs());
        }
        assert!(col_sum.abs() <= 1e-12 * col_max.max(1e-300));
    }
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                assert!(a.get(i, j) >= 0.0);
                let lhs = w[j] * a.get(i, j);
                let rhs = w[i] * a.get(j, i);
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
            }
        }
    }
    assert!(stationary_state(sys, 1.0).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn assembled_systems_are_reversible_generators(setup in setup_strategy()) {
        let Setup { graph, measure, rates, d } = setup;
        let pre = assemble_prelimit(&graph, &measure, &rates, &d, 6, BoundaryCoupling::default()).unwrap();
        check_invariants(&pre);
        let kir = assemble_kirchhoff_limit(&graph, &measure, &d, 6).unwrap();
        check_invariants(&kir);
        let fast = assemble_fast_edge(&graph, &measure, &rates);
        check_invariants(&fast);
        let comb = assemble_combinatorial(&graph, &measure, &rates);
        check_invariants(&comb);
    }

    #[test]
    fn scalings_preserve_mass_and_invariants(setup in setup_strategy(), eps in 1e-3f64..1.0) {
        let Setup { graph, measure, rates, d } = setup;
        for regime in [
            ScalingRegime::Kirchhoff(eps),
            ScalingRegime::FastEdge(eps),
            ScalingRegime::Combinatorial(eps),
            ScalingRegime::Joint(eps),
        ] {
            let s = apply_scaling(regime, &measure, &rates, &d).unwrap();
            prop_assert!((s.measure.total_mass() - 1.0).abs() < 1e-12);
            let sys = assemble_prelimit(&graph, &s.measure, &s.rates, &s.diffusivities, 5, BoundaryCoupling::default()).unwrap();
            check_invariants(&sys);
        }
    }

    #[test]
    fn cell_masses_sum_to_edge_mass(setup in setup_strategy(), n in 2usize..40) {
        let Setup { graph, measure, .. } = setup;
        for e in 0..graph.num_edges() {
            let cells = measure.cell_masses(&graph, e, n).unwrap();
            let total: f64 = cells.iter().sum();
            prop_assert!((total - measure.edge_mass(e)).abs() <= 1e-12 * measure.edge_mass(e));
            prop_assert!(cells.iter().all(|&c| c > 0.0));
        }
    }

    #[test]
    fn harmonic_rate_symmetric(setup in setup_strategy()) {
        let Setup { graph, measure, rates, .. } = setup;
        for e in 0..graph.num_edges() {
            let v = graph.edge_tail(e);
            let w = graph.edge_head(e);
            let a = harmonic_rate(&graph, &measure, &rates, v, w).unwrap();
            let b = harmonic_rate(&graph, &measure, &rates, w, v).unwrap();
            prop_assert!((a - b).abs() <= 1e-13 * a.abs());
        }
    }

    #[test]
    fn cosh_identity_on_positive_grid(a in 1e-3f64..10.0, b in 1e-3f64..10.0) {
        let lhs = (a * b).sqrt() * cosh_dual((a / b).ln());
        let rhs = 2.0 * ((a).sqrt() - (b).sqrt()).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
    }

    #[test]
    fn cosh_legendre_lower_bound(r in 0.01f64..50.0, s in -8.0f64..8.0) {
        // Young inequality: r s <= C(r) + C*(s), equality at s = 2 arsinh(r/2)
        prop_assert!(r * s <= cosh_primal(r) + cosh_dual(s) + 1e-10);
        let s_star = 2.0 * (0.5 * r + (0.25 * r * r + 1.0).sqrt()).ln();
        let gap = cosh_primal(r) + cosh_dual(s_star) - r * s_star;
        prop_assert!(gap.abs() <= 1e-9 * (1.0 + cosh_primal(r)));
    }

    #[test]
    fn entropy_decays_and_mass_conserved_along_trajectories(setup in setup_strategy()) {
        let Setup { graph, measure, rates, d } = setup;
        let sys = assemble_prelimit(&graph, &measure, &rates, &d, 5, BoundaryCoupling::default()).unwrap();
        let dim = sys.dim();
        let gamma0: Vec<f64> = (0..dim).map(|i| ((i % 4) as f64 + 0.2) / dim as f64).collect();
        let total0: f64 = gamma0.iter().sum();
        let cfg = IntegratorConfig::new(2.0)
            .with_tolerances(1e-7, 1e-10)
            .with_output(OutputGrid::Uniform(41));
        let traj = integrate(&sys, &gamma0, &cfg).unwrap();
        let mut prev = f64::INFINITY;
        for state in &traj.states {
            let total: f64 = state.iter().sum();
            prop_assert!((total - total0).abs() <= 10.0 * cfg.atol * dim as f64);
            let h = relative_entropy(sys.weights(), state, 10.0 * cfg.atol).unwrap();
            prop_assert!(h <= prev + 1e-8);
            prev = h;
        }
    }
}
