//! Built-in default scenario: the triangle with mixed reference densities.

pub const TRIANGLE_SCENARIO: &str = r#"{
  "name": "triangle",
  "graph": {
    "vertices": ["v1", "v2", "v3"],
    "edges": [
      {"tail": "v1", "head": "v2", "length": 1.0},
      {"tail": "v2", "head": "v3", "length": 1.0},
      {"tail": "v3", "head": "v1", "length": 1.0}
    ]
  },
  "reference": {
    "vertex_weights": [0.1, 1.1, 1.1],
    "edge_densities": [
      {"kind": "poly", "coeffs": [0.1, 1.0]},
      {"kind": "sin", "amp": 1.0, "omega": 12.566370614359172, "phase": 0.0, "offset": 1.1},
      {"kind": "poly", "coeffs": [1.1, -1.8, 0.8]}
    ]
  },
  "rates": {"symmetric": 1.0},
  "diffusivities": [1.0, 1.0, 1.0],
  "n": 100,
  "regimes": ["kirchhoff", "fast-edge", "combinatorial"],
  "epsilons": [1.0, 0.1, 0.01, 0.001],
  "initial": {
    "kind": "well-prepared",
    "vertex_values": [0.0, 1.0, 1.0],
    "edge_profiles": ["linear", {"constant": 1.0}, "linear"]
  },
  "t_end": 40.0,
  "integrator": {"scheme": "tr-bdf2", "rtol": 1e-8, "atol": 1e-10},
  "grid": 2001,
  "boundary_coupling": "endpoint-density",
  "hellinger_cell_weight": "literal",
  "joint": {"n_list": [50, 100, 200, 400], "epsilons": [0.0001]}
}
"#;
