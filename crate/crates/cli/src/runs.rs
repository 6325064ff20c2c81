//! Experiment machinery: building the per-regime prelimit/limit systems,
//! mapping initial data into each layout, running the integrator, and the
//! Hellinger / entropy / joint-limit studies. Pure computation; file output
//! lives in `output`.

use crate::scenario::{EdgeProfile, InitialSpec, RegimeName, Scenario};
use anyhow::{anyhow, bail, Result};
use mgf_core::functionals::relative_entropy;
use mgf_core::reference::{apply_scaling_with, ScaledSetup, ScalingOptions, ScalingRegime};
use mgf_core::{
    assemble_combinatorial, assemble_fast_edge, assemble_kirchhoff_limit, assemble_prelimit,
    hellinger, integrate, CellWeight, ComparisonMap, DiscreteSystem, IntegratorConfig,
    MetricGraph, OutputGrid, RateSpec, ReferenceMeasure, SlotKind, SystemKind, Trajectory,
};
use rayon::prelude::*;

pub struct Workspace {
    pub scenario: Scenario,
    pub hash: String,
    pub graph: MetricGraph,
    pub measure: ReferenceMeasure,
    pub rates: RateSpec,
}

impl Workspace {
    pub fn build(scenario: Scenario, hash: String) -> Result<Self> {
        let graph = scenario.build_graph()?;
        let measure = scenario.build_measure(&graph)?;
        let rates = scenario.build_rates(&graph, &measure)?;
        Ok(Workspace {
            scenario,
            hash,
            graph,
            measure,
            rates,
        })
    }

    pub fn config(&self) -> IntegratorConfig {
        let s = &self.scenario;
        IntegratorConfig {
            scheme: s.scheme(),
            t_end: s.t_end,
            rtol: s.integrator.rtol,
            atol: s.integrator.atol,
            initial_step: s.integrator.initial_step,
            max_step: s.integrator.max_step,
            fixed_step: None,
            output: OutputGrid::Uniform(s.grid),
        }
    }

    pub fn clip(&self) -> f64 {
        10.0 * self.scenario.integrator.atol
    }

    fn scaling_regime(&self, regime: RegimeName, eps: f64) -> ScalingRegime {
        match regime {
            RegimeName::Unscaled => ScalingRegime::Unscaled,
            RegimeName::Kirchhoff => ScalingRegime::Kirchhoff(eps),
            RegimeName::FastEdge => ScalingRegime::FastEdge(eps),
            RegimeName::Combinatorial => ScalingRegime::Combinatorial(eps),
            RegimeName::Joint => ScalingRegime::Joint(eps),
        }
    }

    pub fn scaled_setup(&self, regime: RegimeName, eps: f64) -> Result<ScaledSetup> {
        apply_scaling_with(
            self.scaling_regime(regime, eps),
            &self.measure,
            &self.rates,
            &self.scenario.diffusivities,
            ScalingOptions {
                kirchhoff_rate_scaling: match self.scenario.kirchhoff_rate_scaling {
                    crate::scenario::KirchhoffScalingName::SqrtEps => {
                        mgf_core::reference::KirchhoffRateScaling::SqrtEps
                    }
                    crate::scenario::KirchhoffScalingName::Eps => {
                        mgf_core::reference::KirchhoffRateScaling::Eps
                    }
                    crate::scenario::KirchhoffScalingName::EpsThreeHalves => {
                        mgf_core::reference::KirchhoffRateScaling::EpsThreeHalves
                    }
                },
            },
        )
        .map_err(|e| anyhow!("scaling failed: {e}"))
    }

    /// The epsilon-dependent system a regime compares against its limit. For
    /// the combinatorial regime this is the fast-edge system (its edges are
    /// already contracted); every other regime uses the full `n`-cell scheme.
    pub fn prelimit_system(
        &self,
        regime: RegimeName,
        eps: f64,
        n: usize,
    ) -> Result<DiscreteSystem> {
        let setup = self.scaled_setup(regime, eps)?;
        let sys = match regime {
            RegimeName::Combinatorial => {
                assemble_fast_edge(&self.graph, &setup.measure, &setup.rates)
            }
            _ => assemble_prelimit(
                &self.graph,
                &setup.measure,
                &setup.rates,
                &setup.diffusivities,
                n,
                self.scenario.coupling(),
            )
            .map_err(|e| anyhow!("assembly failed: {e}"))?,
        };
        Ok(sys)
    }

    /// The epsilon-free limit system of a regime.
    pub fn limit_system(&self, regime: RegimeName, n: usize) -> Result<DiscreteSystem> {
        match regime {
            RegimeName::Unscaled => bail!("the unscaled regime has no limit system"),
            RegimeName::Kirchhoff => assemble_kirchhoff_limit(
                &self.graph,
                &self.measure,
                &self.scenario.diffusivities,
                n,
            )
            .map_err(|e| anyhow!("assembly failed: {e}")),
            RegimeName::FastEdge => Ok(assemble_fast_edge(&self.graph, &self.measure, &self.rates)),
            RegimeName::Combinatorial | RegimeName::Joint => {
                Ok(assemble_combinatorial(&self.graph, &self.measure, &self.rates))
            }
        }
    }

    pub fn comparison_map(&self, regime: RegimeName) -> Result<ComparisonMap> {
        let project = self.scenario.comparison_style == crate::scenario::ComparisonStyle::Project;
        Ok(match regime {
            RegimeName::Unscaled => ComparisonMap::Identity,
            RegimeName::Kirchhoff => {
                if project {
                    ComparisonMap::KirchhoffProject
                } else {
                    ComparisonMap::KirchhoffExpand
                }
            }
            RegimeName::FastEdge => {
                if project {
                    ComparisonMap::FastEdgeProject
                } else {
                    ComparisonMap::FastEdgeExpand
                }
            }
            RegimeName::Combinatorial | RegimeName::Joint => ComparisonMap::VertexOnly,
        })
    }

    /// Full cell count behind a layout (the `n` of the underlying scheme).
    fn full_n(sys: &DiscreteSystem) -> usize {
        match sys.kind {
            SystemKind::Prelimit { n } | SystemKind::KirchhoffLimit { n } => n,
            SystemKind::FastEdgeLimit | SystemKind::CombinatorialLimit => 0,
        }
    }

    fn profile_value(&self, e: usize, k: usize, n_full: usize, vertex_values: &[f64]) -> f64 {
        let profiles = match &self.scenario.initial {
            InitialSpec::WellPrepared { edge_profiles, .. } => edge_profiles.as_ref(),
            _ => None,
        };
        let profile = profiles.and_then(|p| p.get(e));
        match profile {
            Some(EdgeProfile::Constant { constant }) => *constant,
            Some(EdgeProfile::Named(name)) if name == "one-over-n" => 1.0 / n_full as f64,
            // default: linear interpolation tail -> head sampled at x = k h
            _ => {
                let x = k as f64 / n_full as f64;
                let a = vertex_values[self.graph.edge_tail(e)];
                let b = vertex_values[self.graph.edge_head(e)];
                a + x * (b - a)
            }
        }
    }

    /// Initial pool density of an edge-contracted slot: the pi-weighted mean
    /// of the profile, or the quasi-static average of the endpoint vertex
    /// values (the slow-manifold value of the pool).
    fn pool_value(&self, e: usize, vertex_values: &[f64]) -> Result<f64> {
        match self.scenario.pool_init {
            crate::scenario::PoolInit::ProfileMean => {
                let n = self.scenario.n;
                let cells = self
                    .measure
                    .cell_masses(&self.graph, e, n)
                    .map_err(|err| anyhow!("{err}"))?;
                let mut mass = 0.0;
                let mut total = 0.0;
                for (idx, &c) in cells.iter().enumerate() {
                    mass += self.profile_value(e, idx + 1, n, vertex_values) * c;
                    total += c;
                }
                Ok(mass / total)
            }
            crate::scenario::PoolInit::QuasiStatic => {
                use mgf_core::reference::endpoint_product;
                use mgf_core::EndpointRole;
                let a_tail =
                    endpoint_product(&self.measure, &self.rates, &self.graph, e, EndpointRole::Tail);
                let a_head =
                    endpoint_product(&self.measure, &self.rates, &self.graph, e, EndpointRole::Head);
                let u_tail = vertex_values[self.graph.edge_tail(e)];
                let u_head = vertex_values[self.graph.edge_head(e)];
                Ok((a_tail * u_tail + a_head * u_head) / (a_tail + a_head))
            }
        }
    }

    /// Initial mass vector for a system according to the scenario's initial
    /// data, normalized to total mass one.
    pub fn initial_state(&self, sys: &DiscreteSystem) -> Result<Vec<f64>> {
        let layout = sys.layout();
        let n_full = Self::full_n(sys).max(self.scenario.n);
        let mut gamma = vec![0.0; sys.dim()];
        match &self.scenario.initial {
            InitialSpec::Uniform => {
                for (i, kind) in layout.slots().iter().enumerate() {
                    gamma[i] = match *kind {
                        SlotKind::Vertex(_) => 1.0,
                        SlotKind::Cell { edge, .. } => {
                            self.graph.edge_length(edge) / n_full as f64
                        }
                        SlotKind::EdgePool(e) => self.graph.edge_length(e),
                        SlotKind::Patch(v) => self
                            .graph
                            .incident_edges(v)
                            .iter()
                            .map(|&(e, _)| self.graph.edge_length(e) / n_full as f64)
                            .sum(),
                    };
                }
            }
            InitialSpec::WellPrepared { vertex_values, .. } => {
                if vertex_values.len() != self.graph.num_vertices() {
                    bail!("well-prepared initial data needs one value per vertex");
                }
                for (i, kind) in layout.slots().iter().enumerate() {
                    let u = match *kind {
                        SlotKind::Vertex(v) | SlotKind::Patch(v) => vertex_values[v],
                        SlotKind::Cell { edge, k } => {
                            self.profile_value(edge, k, n_full, vertex_values)
                        }
                        SlotKind::EdgePool(e) => self.pool_value(e, vertex_values)?,
                    };
                    gamma[i] = u * layout.weight(i);
                }
            }
            InitialSpec::Explicit {
                vertex_values,
                edge_values,
            } => {
                if !matches!(sys.kind, SystemKind::Prelimit { .. }) {
                    bail!("explicit initial data targets the full scheme only");
                }
                if vertex_values.len() != self.graph.num_vertices()
                    || edge_values.len() != self.graph.num_edges()
                    || edge_values.iter().any(|v| v.len() != n_full)
                {
                    bail!("explicit initial data does not match the layout");
                }
                for (i, kind) in layout.slots().iter().enumerate() {
                    let u = match *kind {
                        SlotKind::Vertex(v) => vertex_values[v],
                        SlotKind::Cell { edge, k } => edge_values[edge][k - 1],
                        _ => unreachable!("prelimit layouts have vertices and cells only"),
                    };
                    gamma[i] = u * layout.weight(i);
                }
            }
        }
        let total: f64 = gamma.iter().sum();
        if !(total > 0.0) {
            bail!("initial data has no mass");
        }
        for g in &mut gamma {
            *g /= total;
        }
        Ok(gamma)
    }

    pub fn run(&self, sys: &DiscreteSystem, cfg: &IntegratorConfig) -> Result<Trajectory> {
        let gamma0 = self.initial_state(sys)?;
        integrate(sys, &gamma0, cfg).map_err(|e| anyhow!("integration failed: {e}"))
    }

    pub fn entropy_curve(&self, sys: &DiscreteSystem, traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
        let clip = self.clip();
        traj.times
            .iter()
            .zip(traj.states.iter())
            .map(|(t, s)| {
                relative_entropy(sys.weights(), s, clip)
                    .map(|h| (*t, h))
                    .map_err(|e| anyhow!("{e}"))
            })
            .collect()
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Late-time slope of `log H(t)`: least squares over the last 30% of the
/// curve, restricted to values above the solver floor.
pub fn late_entropy_slope(curve: &[(f64, f64)]) -> Option<f64> {
    let start = curve.len() * 7 / 10;
    let pts: Vec<(f64, f64)> = curve[start..]
        .iter()
        .filter(|(_, h)| *h > 1e-13)
        .map(|(t, h)| (*t, h.ln()))
        .collect();
    if pts.len() < 8 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    Some(least_squares_slope(&xs, &ys))
}

#[derive(Debug, Clone)]
pub struct HellingerEntry {
    pub regime: RegimeName,
    pub eps: f64,
    pub value: f64,
    pub wall_seconds: f64,
}

/// Integrate prelimit and limit systems per (regime, epsilon) and evaluate
/// the regime's Hellinger distance.
pub fn hellinger_table(
    ws: &Workspace,
    regimes: &[RegimeName],
    cell_weight: CellWeight,
) -> Result<Vec<HellingerEntry>> {
    let cfg = ws.config();
    let mut entries = Vec::new();
    for &regime in regimes {
        let limit_sys = ws.limit_system(regime, ws.scenario.n)?;
        let limit_traj = ws.run(&limit_sys, &cfg)?;
        let map = ws.comparison_map(regime)?;
        let mut per_eps: Vec<HellingerEntry> = ws
            .scenario
            .epsilons
            .par_iter()
            .map(|&eps| -> Result<HellingerEntry> {
                let start = std::time::Instant::now();
                let pre_sys = ws.prelimit_system(regime, eps, ws.scenario.n)?;
                let pre_traj = ws.run(&pre_sys, &cfg)?;
                let value = hellinger(
                    map,
                    &ws.graph,
                    &pre_sys,
                    &pre_traj,
                    &limit_sys,
                    &limit_traj,
                    cell_weight,
                    ws.clip(),
                )
                .map_err(|e| anyhow!("hellinger failed: {e}"))?;
                Ok(HellingerEntry {
                    regime,
                    eps,
                    value,
                    wall_seconds: start.elapsed().as_secs_f64(),
                })
            })
            .collect::<Result<_>>()?;
        entries.append(&mut per_eps);
    }
    Ok(entries)
}

#[derive(Debug, Clone)]
pub struct JointEntry {
    pub n: usize,
    pub eps: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct JointReport {
    pub entries: Vec<JointEntry>,
    /// Fitted log-log slope of H against n at the smallest epsilon.
    pub slope: f64,
}

/// Joint-limit rate study: Hellinger distance between the jointly rescaled
/// full scheme at several cell counts and the combinatorial limit.
pub fn joint_study(ws: &Workspace, n_list: &[usize], eps_list: &[f64]) -> Result<JointReport> {
    if n_list.is_empty() || eps_list.is_empty() {
        bail!("joint study needs non-empty n and epsilon lists");
    }
    let cfg = ws.config();
    let limit_sys = ws.limit_system(RegimeName::Joint, ws.scenario.n)?;
    let limit_traj = ws.run(&limit_sys, &cfg)?;

    let combos: Vec<(usize, f64)> = n_list
        .iter()
        .flat_map(|&n| eps_list.iter().map(move |&e| (n, e)))
        .collect();
    let mut entries: Vec<JointEntry> = combos
        .par_iter()
        .map(|&(n, eps)| -> Result<JointEntry> {
            let pre_sys = ws.prelimit_system(RegimeName::Joint, eps, n)?;
            let pre_traj = ws.run(&pre_sys, &cfg)?;
            let value = hellinger(
                ComparisonMap::VertexOnly,
                &ws.graph,
                &pre_sys,
                &pre_traj,
                &limit_sys,
                &limit_traj,
                CellWeight::Literal,
                ws.clip(),
            )
            .map_err(|e| anyhow!("hellinger failed: {e}"))?;
            Ok(JointEntry { n, eps, value })
        })
        .collect::<Result<_>>()?;
    entries.sort_by(|a, b| a.n.cmp(&b.n).then(b.eps.total_cmp(&a.eps)));

    let eps_min = eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.eps == eps_min && e.value > 0.0)
        .map(|e| ((e.n as f64).ln(), e.value.ln()))
        .collect();
    if pts.len() < 2 {
        bail!("joint study needs at least two usable cell counts for the fit");
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(JointReport { entries, slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit_recovers_exact_powerlaw() {
        // H = c / n on a log-log line fits slope -1 exactly
        let ns = [50.0f64, 100.0, 200.0, 400.0];
        let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
        let ys: Vec<f64> = ns.iter().map(|n| (3.7 / n).ln()).collect();
        let slope = least_squares_slope(&xs, &ys);
        assert!((slope + 1.0).abs() < 1e-9);
    }
}
