//! Scenario files: the JSON schema, validation, and conversion into core
//! types.

use anyhow::{anyhow, bail, Context, Result};
use mgf_core::{
    BoundaryCoupling, CellWeight, EdgeDensityExpr, MetricGraph, RateSpec, ReferenceMeasure, Scheme,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub tail: String,
    pub head: String,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DensitySpec {
    #[serde(rename = "poly")]
    Poly { coeffs: Vec<f64> },
    #[serde(rename = "sin")]
    Sin {
        amp: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        offset: f64,
    },
    #[serde(rename = "tab")]
    Tab { xs: Vec<f64>, ys: Vec<f64> },
}

impl DensitySpec {
    pub fn to_expr(&self) -> EdgeDensityExpr {
        match self {
            DensitySpec::Poly { coeffs } => EdgeDensityExpr::Polynomial {
                coeffs: coeffs.clone(),
            },
            DensitySpec::Sin {
                amp,
                omega,
                phase,
                offset,
            } => EdgeDensityExpr::Sinusoid {
                amplitude: *amp,
                omega: *omega,
                phase: *phase,
                offset: *offset,
            },
            DensitySpec::Tab { xs, ys } => EdgeDensityExpr::Tabulated {
                xs: xs.clone(),
                ys: ys.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub vertex_weights: Vec<f64>,
    pub edge_densities: Vec<DensitySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatesSpec {
    Symmetric { symmetric: f64 },
    PerIncidence { per_incidence: Vec<[f64; 2]> },
    VertexToEdge { vertex_to_edge: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeName {
    Unscaled,
    Kirchhoff,
    FastEdge,
    Combinatorial,
    Joint,
}

impl std::fmt::Display for RegimeName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeName::Unscaled => "unscaled",
            RegimeName::Kirchhoff => "kirchhoff",
            RegimeName::FastEdge => "fast-edge",
            RegimeName::Combinatorial => "combinatorial",
            RegimeName::Joint => "joint",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeProfile {
    Named(String),
    Constant { constant: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSpec {
    /// Uniform measure over the metric graph: equal density on the edges and
    /// equal atoms on the vertices.
    Uniform,
    /// Continuous density profile given by vertex values and per-edge
    /// profiles ("linear", {"constant": c}, or "one-over-n"); converted to
    /// masses with the target system's weights and normalized.
    WellPrepared {
        vertex_values: Vec<f64>,
        #[serde(default)]
        edge_profiles: Option<Vec<EdgeProfile>>,
    },
    /// Explicit per-cell densities (prelimit layout).
    Explicit {
        vertex_values: Vec<f64>,
        edge_values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    ImplicitEuler,
    TrBdf2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegratorSpec {
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default)]
    pub initial_step: Option<f64>,
    #[serde(default)]
    pub max_step: Option<f64>,
}

fn default_scheme() -> SchemeName {
    SchemeName::TrBdf2
}
fn default_rtol() -> f64 {
    1e-8
}
fn default_atol() -> f64 {
    1e-10
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            scheme: default_scheme(),
            rtol: default_rtol(),
            atol: default_atol(),
            initial_step: None,
            max_step: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointSpec {
    pub n_list: Vec<usize>,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingName {
    EndpointDensity,
    CellAverageDensity,
    CellMass,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CellWeightName {
    Literal,
    PerCell,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub graph: GraphSpec,
    pub reference: ReferenceSpec,
    pub rates: RatesSpec,
    pub diffusivities: Vec<f64>,
    pub n: usize,
    #[serde(default = "default_regimes")]
    pub regimes: Vec<RegimeName>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    pub initial: InitialSpec,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_coupling")]
    pub boundary_coupling: CouplingName,
    #[serde(default = "default_cell_weight")]
    pub hellinger_cell_weight: CellWeightName,
    #[serde(default)]
    pub joint: Option<JointSpec>,
    /// Exponent variant of the Kirchhoff rate acceleration `k -> k/eps^p`.
    #[serde(default = "default_kirchhoff_scaling")]
    pub kirchhoff_rate_scaling: KirchhoffScalingName,
    /// Direction of the prelimit/limit Hellinger comparison: project the
    /// prelimit onto the limit's coarser state space, or expand the limit
    /// onto the prelimit's slots.
    #[serde(default = "default_comparison")]
    pub comparison_style: ComparisonStyle,
    /// Initial pool densities of edge-contracted systems: the pi-weighted
    /// profile mean, or the quasi-static average of the endpoint values.
    #[serde(default = "default_pool_init")]
    pub pool_init: PoolInit,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonStyle {
    Project,
    Expand,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum KirchhoffScalingName {
    SqrtEps,
    Eps,
    EpsThreeHalves,
}

fn default_kirchhoff_scaling() -> KirchhoffScalingName {
    KirchhoffScalingName::EpsThreeHalves
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PoolInit {
    ProfileMean,
    QuasiStatic,
}

fn default_comparison() -> ComparisonStyle {
    ComparisonStyle::Project
}

fn default_pool_init() -> PoolInit {
    PoolInit::ProfileMean
}

fn default_regimes() -> Vec<RegimeName> {
    vec![
        RegimeName::Kirchhoff,
        RegimeName::FastEdge,
        RegimeName::Combinatorial,
    ]
}
fn default_epsilons() -> Vec<f64> {
    vec![1.0, 0.1, 0.01, 0.001]
}
fn default_t_end() -> f64 {
    40.0
}
fn default_grid() -> usize {
    2001
}
fn default_coupling() -> CouplingName {
    CouplingName::EndpointDensity
}
fn default_cell_weight() -> CellWeightName {
    CellWeightName::Literal
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text).context("parsing scenario JSON")?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.graph.vertices.is_empty() || self.graph.edges.is_empty() {
            bail!("scenario graph must have vertices and edges");
        }
        if self.reference.edge_densities.len() != self.graph.edges.len() {
            bail!("one edge density per edge required");
        }
        if self.reference.vertex_weights.len() != self.graph.vertices.len() {
            bail!("one vertex weight per vertex required");
        }
        if self.diffusivities.len() != self.graph.edges.len() {
            bail!("one diffusivity per edge required");
        }
        if self.n < 3 {
            bail!("cell count n must be at least 3");
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| e <= 0.0) {
            bail!("epsilon list must be positive");
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            bail!("epsilon list must be strictly decreasing");
        }
        if !(self.t_end > 0.0) {
            bail!("t_end must be positive");
        }
        if self.grid < 2 {
            bail!("output grid needs at least 2 points");
        }
        Ok(())
    }

    pub fn build_graph(&self) -> Result<MetricGraph> {
        let edges: Vec<(String, String, f64)> = self
            .graph
            .edges
            .iter()
            .map(|e| (e.tail.clone(), e.head.clone(), e.length))
            .collect();
        MetricGraph::build(self.graph.vertices.clone(), &edges)
            .map_err(|e| anyhow!("invalid graph: {e}"))
    }

    pub fn build_measure(&self, graph: &MetricGraph) -> Result<ReferenceMeasure> {
        let densities: Vec<EdgeDensityExpr> = self
            .reference
            .edge_densities
            .iter()
            .map(DensitySpec::to_expr)
            .collect();
        ReferenceMeasure::normalize(&self.reference.vertex_weights, &densities, graph)
            .map_err(|e| anyhow!("invalid reference measure: {e}"))
    }

    pub fn build_rates(
        &self,
        graph: &MetricGraph,
        measure: &ReferenceMeasure,
    ) -> Result<RateSpec> {
        match &self.rates {
            RatesSpec::Symmetric { symmetric } => RateSpec::uniform(graph, *symmetric)
                .map_err(|e| anyhow!("invalid rates: {e}")),
            RatesSpec::PerIncidence { per_incidence } => {
                RateSpec::from_symmetric(per_incidence.clone(), graph)
                    .map_err(|e| anyhow!("invalid rates: {e}"))
            }
            RatesSpec::VertexToEdge { vertex_to_edge } => {
                let entries: Vec<Option<[f64; 2]>> =
                    vertex_to_edge.iter().map(|r| Some(*r)).collect();
                RateSpec::from_vertex_to_edge_rates(&entries, measure, graph)
                    .map_err(|e| anyhow!("invalid rates: {e}"))
            }
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self.integrator.scheme {
            SchemeName::ImplicitEuler => Scheme::ImplicitEuler,
            SchemeName::TrBdf2 => Scheme::TrBdf2,
        }
    }

    pub fn coupling(&self) -> BoundaryCoupling {
        match self.boundary_coupling {
            CouplingName::EndpointDensity => BoundaryCoupling::EndpointDensity,
            CouplingName::CellAverageDensity => BoundaryCoupling::CellAverageDensity,
            CouplingName::CellMass => BoundaryCoupling::CellMass,
        }
    }

    pub fn cell_weight(&self) -> CellWeight {
        match self.hellinger_cell_weight {
            CellWeightName::Literal => CellWeight::Literal,
            CellWeightName::PerCell => CellWeight::PerCell,
        }
    }
}

/// Locate a scenario: a readable path as given, else relative to
/// `MGF_SEED_DIR`.
pub fn resolve_scenario_path(arg: &Path) -> Result<PathBuf> {
    if arg.is_file() {
        return Ok(arg.to_path_buf());
    }
    if let Ok(dir) = std::env::var("MGF_SEED_DIR") {
        let candidate = Path::new(&dir).join(arg);
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    bail!("scenario file {} not found", arg.display())
}

/// Load a scenario from a path (or the built-in default when `None`),
/// returning the scenario and the hash of its JSON bytes.
pub fn load_scenario(path: Option<&Path>) -> Result<(Scenario, String)> {
    let text = match path {
        Some(p) => {
            let p = resolve_scenario_path(p)?;
            std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?
        }
        None => crate::seed::TRIANGLE_SCENARIO.to_string(),
    };
    let scenario = Scenario::from_json(&text)?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let hash = hex_string(&hasher.finalize());
    Ok((scenario, hash))
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        use std::fmt::Write;
        let _ = write!(s, "{b:02x}");
    }
    s
}
