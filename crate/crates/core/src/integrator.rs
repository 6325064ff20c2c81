//! Adaptive implicit time integration of the linear master equation
//! `d gamma/dt = A gamma`.
//!
//! Both schemes are L-stable one-step methods, so step size is limited by
//! accuracy, not stability, on arbitrarily stiff reversible generators. Each
//! implicit stage solves `(I - c h A) x = rhs`; reversibility makes the
//! symmetrized stage matrix `I - c h S` symmetric positive definite, so the
//! solves are Cholesky factorizations, cached as long as the step size (and
//! thus the stage coefficient) stays put.
//!
//! Error control: implicit Euler estimates local error by step doubling;
//! TR-BDF2 uses the classic three-stage embedded estimate filtered through
//! the stage matrix. The controller is a PI controller with safety 0.9,
//! growth cap 5x and shrink cap 0.1x.

use crate::linalg::{cholesky_in_place, cholesky_solve, DenseMatrix};
use crate::math;
use crate::system::DiscreteSystem;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImplicitEuler,
    TrBdf2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutputGrid {
    /// `m >= 2` uniformly spaced output times on `[0, t_end]`.
    Uniform(usize),
    /// Explicit sorted output times in `[0, t_end]`; `0` is prepended when
    /// missing.
    Times(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    /// Disable adaptivity and march with this step (order-verification runs).
    pub fixed_step: Option<f64>,
    pub output: OutputGrid,
}

impl IntegratorConfig {
    pub fn new(t_end: f64) -> Self {
        IntegratorConfig {
            scheme: Scheme::TrBdf2,
            t_end,
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: None,
            max_step: None,
            fixed_step: None,
            output: OutputGrid::Uniform(2001),
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_output(mut self, output: OutputGrid) -> Self {
        self.output = output;
        self
    }

    fn output_times(&self) -> Result<Vec<f64>, IntegrateError> {
        let times = match &self.output {
            OutputGrid::Uniform(m) => {
                if *m < 2 {
                    return Err(IntegrateError::BadConfig);
                }
                (0..*m)
                    .map(|i| self.t_end * i as f64 / (*m as f64 - 1.0))
                    .collect()
            }
            OutputGrid::Times(ts) => {
                let mut v = ts.clone();
                if v.first() != Some(&0.0) {
                    v.insert(0, 0.0);
                }
                if v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(IntegrateError::BadConfig);
                }
                if v.iter().any(|&t| t < 0.0 || t > self.t_end * (1.0 + 1e-12)) {
                    return Err(IntegrateError::BadConfig);
                }
                v
            }
        };
        Ok(times)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrateError {
    DimensionMismatch { expected: usize, got: usize },
    NegativeInput { slot: usize, value: f64 },
    BadConfig,
    SingularStageMatrix { t: f64, h: f64 },
    NonFiniteState { t: f64 },
    StepUnderflow { t: f64, h: f64 },
}

impl fmt::Display for IntegrateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrateError::DimensionMismatch { expected, got } => {
                write!(f, "state dimension {got} != layout dimension {expected}")
            }
            IntegrateError::NegativeInput { slot, value } => {
                write!(f, "initial state has negative entry {value} at slot {slot}")
            }
            IntegrateError::BadConfig => write!(f, "invalid integrator configuration"),
            IntegrateError::SingularStageMatrix { t, h } => {
                write!(f, "stage matrix not factorizable at t={t}, h={h}")
            }
            IntegrateError::NonFiniteState { t } => write!(f, "non-finite state at t={t}"),
            IntegrateError::StepUnderflow { t, h } => {
                write!(f, "step size underflow at t={t} (h={h})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for IntegrateError {}

#[derive(Debug, Clone, Default)]
pub struct IntegrationStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub factorizations: usize,
    /// Most negative component seen across accepted states.
    pub min_component: f64,
}

/// Time grid and mass-vector states on the caller's output grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is nonempty")
    }
}

/// TR-BDF2 stage coefficient: gamma = 2 - sqrt(2), both stage matrices share
/// `c = gamma/2 = 1 - 1/sqrt(2)`.
const TRBDF2_D: f64 = 0.292_893_218_813_452_46;
const TRBDF2_GAMMA: f64 = 0.585_786_437_626_904_9;
/// Stage-2 combination: `y1 = C1 y* - C2 y` with `C1 - C2 = 1`.
const TRBDF2_C1: f64 = 1.207_106_781_186_547_5;
const TRBDF2_C2: f64 = 0.207_106_781_186_547_52;

struct StageSolver<'a> {
    sys: &'a DiscreteSystem,
    sqrt_w: Vec<f64>,
    /// Cached Cholesky factors keyed by the stage coefficient `c` in
    /// `I - c S`.
    cache: Vec<(u64, DenseMatrix)>,
    factorizations: usize,
}

impl<'a> StageSolver<'a> {
    fn new(sys: &'a DiscreteSystem) -> Self {
        StageSolver {
            sys,
            sqrt_w: sys.weights().iter().map(|&w| math::sqrt(w)).collect(),
            cache: Vec::new(),
            factorizations: 0,
        }
    }

    /// Solve `(I - c A) x = b`, writing into `x`.
    fn solve(&mut self, c: f64, b: &[f64], x: &mut [f64]) -> Result<(), ()> {
        let key = c.to_bits();
        if !self.cache.iter().any(|(k, _)| *k == key) {
            let mut m = self.sys.sym_stage_matrix(c);
            cholesky_in_place(&mut m).map_err(|_| ())?;
            self.factorizations += 1;
            if self.cache.len() >= 6 {
                self.cache.remove(0);
            }
            self.cache.push((key, m));
        }
        let chol = &self.cache.iter().find(|(k, _)| *k == key).unwrap().1;
        for i in 0..b.len() {
            x[i] = b[i] / self.sqrt_w[i];
        }
        cholesky_solve(chol, x);
        for i in 0..b.len() {
            x[i] *= self.sqrt_w[i];
        }
        Ok(())
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(math::abs(x)))
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Scaled max-norm of an error estimate against `atol + rtol |y|`.
fn scaled_error(est: &[f64], y: &[f64], atol: f64, rtol: f64) -> f64 {
    let mut err = 0.0f64;
    for (e, yi) in est.iter().zip(y.iter()) {
        err = err.max(math::abs(*e) / (atol + rtol * math::abs(*yi)));
    }
    err
}

struct StepOutcome {
    y_new: Vec<f64>,
    err: f64,
}

fn implicit_euler_step(
    solver: &mut StageSolver,
    y: &[f64],
    h: f64,
    atol: f64,
    rtol: f64,
) -> Result<StepOutcome, ()> {
    let n = y.len();
    let mut y_full = vec![0.0; n];
    solver.solve(h, y, &mut y_full)?;
    let mut y_half = vec![0.0; n];
    solver.solve(0.5 * h, y, &mut y_half)?;
    let mut y_two = vec![0.0; n];
    solver.solve(0.5 * h, &y_half, &mut y_two)?;
    let est: Vec<f64> = y_two.iter().zip(y_full.iter()).map(|(a, b)| a - b).collect();
    let err = scaled_error(&est, &y_two, atol, rtol);
    Ok(StepOutcome { y_new: y_two, err })
}

fn trbdf2_step(
    solver: &mut StageSolver,
    sys: &DiscreteSystem,
    y: &[f64],
    h: f64,
    atol: f64,
    rtol: f64,
) -> Result<StepOutcome, ()> {
    let n = y.len();
    let c = TRBDF2_D * h;

    let mut f0 = vec![0.0; n];
    sys.apply_generator(y, &mut f0);

    // trapezoidal substage over gamma*h
    let rhs1: Vec<f64> = y.iter().zip(f0.iter()).map(|(yi, fi)| yi + c * fi).collect();
    let mut y_mid = vec![0.0; n];
    solver.solve(c, &rhs1, &mut y_mid)?;

    // BDF2 substage
    let rhs2: Vec<f64> = y_mid
        .iter()
        .zip(y.iter())
        .map(|(ym, yi)| TRBDF2_C1 * ym - TRBDF2_C2 * yi)
        .collect();
    let mut y_new = vec![0.0; n];
    solver.solve(c, &rhs2, &mut y_new)?;

    // embedded estimate h [ (1-g)/3 f0 - 1/3 f_mid + g/3 f1 ], filtered by
    // the stage matrix to keep stiff components bounded
    let mut f_mid = vec![0.0; n];
    sys.apply_generator(&y_mid, &mut f_mid);
    let mut f1 = vec![0.0; n];
    sys.apply_generator(&y_new, &mut f1);
    let a0 = (1.0 - TRBDF2_GAMMA) / 3.0;
    let a1 = -1.0 / 3.0;
    let a2 = TRBDF2_GAMMA / 3.0;
    let raw: Vec<f64> = (0..n)
        .map(|i| h * (a0 * f0[i] + a1 * f_mid[i] + a2 * f1[i]))
        .collect();
    let mut est = vec![0.0; n];
    solver.solve(c, &raw, &mut est)?;

    let err = scaled_error(&est, &y_new, atol, rtol);
    Ok(StepOutcome { y_new, err })
}

/// Integrate `d gamma/dt = A gamma` from `gamma0`, returning states on the
/// configured output grid (linear interpolation between accepted steps).
pub fn integrate(
    sys: &DiscreteSystem,
    gamma0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    if gamma0.len() != sys.dim() {
        return Err(IntegrateError::DimensionMismatch {
            expected: sys.dim(),
            got: gamma0.len(),
        });
    }
    for (i, &g) in gamma0.iter().enumerate() {
        if g < -10.0 * cfg.atol || !g.is_finite() {
            return Err(IntegrateError::NegativeInput { slot: i, value: g });
        }
    }
    if !(cfg.t_end > 0.0) || !(cfg.rtol > 0.0) || !(cfg.atol > 0.0) {
        return Err(IntegrateError::BadConfig);
    }

    let out_times = cfg.output_times()?;
    let n = sys.dim();
    let mut solver = StageSolver::new(sys);
    let mut stats = IntegrationStats {
        min_component: gamma0.iter().cloned().fold(f64::INFINITY, f64::min),
        ..Default::default()
    };

    let mut states: Vec<Vec<f64>> = Vec::with_capacity(out_times.len());
    let mut next_out = 0usize;
    if out_times[next_out] == 0.0 {
        states.push(gamma0.to_vec());
        next_out += 1;
    }

    let max_step = cfg.max_step.unwrap_or(cfg.t_end);
    let h_min = 1e-14 * cfg.t_end;

    // initial step: configured, fixed, or from the scaled first derivative
    let mut h = if let Some(hf) = cfg.fixed_step {
        hf
    } else if let Some(h0) = cfg.initial_step {
        h0
    } else {
        let mut f0 = vec![0.0; n];
        sys.apply_generator(gamma0, &mut f0);
        let d0 = max_abs(gamma0);
        let d1 = max_abs(&f0);
        if d1 > 0.0 {
            (0.01 * (cfg.atol + cfg.rtol * d0) / (cfg.rtol * d1 + cfg.atol))
                .min(max_step)
                .min(cfg.t_end / 100.0)
                .max(h_min * 10.0)
        } else {
            cfg.t_end / 100.0
        }
    };
    h = h.min(max_step).min(cfg.t_end);

    let mut t = 0.0f64;
    let mut y = gamma0.to_vec();
    let err_order = match cfg.scheme {
        Scheme::ImplicitEuler => 2.0,
        Scheme::TrBdf2 => 3.0,
    };
    let mut err_prev = 1.0f64;
    let mut singular_retries = 0usize;

    while t < cfg.t_end * (1.0 - 1e-14) {
        let last = t + h >= cfg.t_end * (1.0 - 1e-14);
        let h_eff = if last { cfg.t_end - t } else { h };
        if h_eff < h_min {
            return Err(IntegrateError::StepUnderflow { t, h: h_eff });
        }

        let attempt = match cfg.scheme {
            Scheme::ImplicitEuler => implicit_euler_step(&mut solver, &y, h_eff, cfg.atol, cfg.rtol),
            Scheme::TrBdf2 => trbdf2_step(&mut solver, sys, &y, h_eff, cfg.atol, cfg.rtol),
        };

        let outcome = match attempt {
            Ok(o) => {
                singular_retries = 0;
                o
            }
            Err(()) => {
                singular_retries += 1;
                if singular_retries > 40 {
                    return Err(IntegrateError::SingularStageMatrix { t, h: h_eff });
                }
                h = (h_eff * 0.5).max(h_min);
                continue;
            }
        };

        if !all_finite(&outcome.y_new) {
            stats.steps_rejected += 1;
            h = (h_eff * 0.5).max(h_min);
            if h <= h_min {
                return Err(IntegrateError::NonFiniteState { t });
            }
            continue;
        }

        let accept = cfg.fixed_step.is_some() || outcome.err <= 1.0;
        if !accept {
            stats.steps_rejected += 1;
            let fac = (0.9 * math::powf(outcome.err.max(1e-10), -1.0 / err_order)).clamp(0.1, 0.9);
            h = (h_eff * fac).max(h_min);
            err_prev = 1.0;
            continue;
        }

        let t_new = if last { cfg.t_end } else { t + h_eff };
        // emit output points inside (t, t_new] by linear interpolation
        while next_out < out_times.len() && out_times[next_out] <= t_new * (1.0 + 1e-14) {
            let to = out_times[next_out].min(t_new);
            let theta = if t_new > t { (to - t) / (t_new - t) } else { 1.0 };
            let interp: Vec<f64> = y
                .iter()
                .zip(outcome.y_new.iter())
                .map(|(a, b)| a + theta * (b - a))
                .collect();
            states.push(interp);
            next_out += 1;
        }

        let step_min = outcome.y_new.iter().cloned().fold(f64::INFINITY, f64::min);
        stats.min_component = stats.min_component.min(step_min);
        stats.steps_accepted += 1;
        y = outcome.y_new;
        t = t_new;

        if cfg.fixed_step.is_none() {
            // PI controller with hysteresis so the factor cache stays warm
            let err = outcome.err.max(1e-12);
            let fac = 0.9
                * math::powf(err, -0.7 / err_order)
                * math::powf(err_prev, 0.4 / err_order);
            let fac = fac.clamp(0.1, 5.0);
            if !(0.9..=1.2).contains(&fac) {
                h = (h_eff * fac).min(max_step);
            } else {
                h = h_eff.min(max_step);
            }
            err_prev = err;
        }
    }

    // numerically possible to land exactly on t_end without emitting it
    while next_out < out_times.len() {
        states.push(y.clone());
        next_out += 1;
    }

    stats.factorizations = solver.factorizations;
    Ok(Trajectory {
        times: out_times,
        states,
        stats,
    })
}

/// Integrate at the configured tolerance and at `(rtol, atol) / factor`;
/// return the tighter trajectory and the sup-norm discrepancy on the common
/// output grid as an a-posteriori error proxy.
pub fn resolve_with_tolerance_sweep(
    sys: &DiscreteSystem,
    gamma0: &[f64],
    cfg: &IntegratorConfig,
    factor: f64,
) -> Result<(Trajectory, f64), IntegrateError> {
    if !(factor > 1.0) {
        return Err(IntegrateError::BadConfig);
    }
    let loose = integrate(sys, gamma0, cfg)?;
    let mut tight_cfg = cfg.clone();
    tight_cfg.rtol = cfg.rtol / factor;
    tight_cfg.atol = cfg.atol / factor;
    let tight = integrate(sys, gamma0, &tight_cfg)?;
    let mut disc = 0.0f64;
    for (a, b) in loose.states.iter().zip(tight.states.iter()) {
        for (x, y) in a.iter().zip(b.iter()) {
            disc = disc.max(math::abs(x - y));
        }
    }
    Ok((tight, disc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::reference::BoundaryCoupling;
    use crate::system::{assemble_prelimit, stationary_state};
    use approx::assert_relative_eq;

    fn two_state_system() -> DiscreteSystem {
        // weights (1,1), single bond with conductance 1: the 2x2 reversible
        // chain with closed form gamma(t) = (1/2)(1 +- e^{-2t}) from (1,0).
        DiscreteSystem::from_parts(
            crate::system::SystemKind::CombinatorialLimit,
            alloc::vec![
                crate::system::SlotKind::Vertex(0),
                crate::system::SlotKind::Vertex(1)
            ],
            alloc::vec![1.0, 1.0],
            alloc::vec![crate::system::Bond {
                a: 0,
                b: 1,
                conductance: 1.0,
                class: crate::system::BondClass::Exchange,
            }],
        )
    }

    #[test]
    fn stationary_initial_data_stays_put() {
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let r = presets::triangle_rates(&g);
        let sys =
            assemble_prelimit(&g, &m, &r, &[1.0, 1.0, 1.0], 10, BoundaryCoupling::default())
                .unwrap();
        let st = stationary_state(&sys, 1.0).unwrap();
        let cfg = IntegratorConfig::new(5.0).with_output(OutputGrid::Uniform(11));
        let traj = integrate(&sys, &st, &cfg).unwrap();
        for state in &traj.states {
            for (a, b) in state.iter().zip(st.iter()) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_state_chain_matches_closed_form() {
        let sys = two_state_system();
        let cfg = IntegratorConfig::new(1.0)
            .with_tolerances(1e-8, 1e-12)
            .with_output(OutputGrid::Uniform(101));
        let traj = integrate(&sys, &[1.0, 0.0], &cfg).unwrap();
        for (t, state) in traj.times.iter().zip(traj.states.iter()) {
            let exact0 = 0.5 * (1.0 + math::exp(-2.0 * t));
            assert!(
                math::abs(state[0] - exact0) < 1e-6,
                "t={t}: {} vs {exact0}",
                state[0]
            );
        }
        let last = traj.last_state();
        assert!(math::abs(last[0] - 0.5 * (1.0 + math::exp(-2.0))) < 1e-6);
        assert!(math::abs(last[0] - 0.5677) < 1e-3);
    }

    #[test]
    fn both_schemes_conserve_mass() {
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let r = presets::triangle_rates(&g);
        let sys =
            assemble_prelimit(&g, &m, &r, &[1.0, 1.0, 1.0], 20, BoundaryCoupling::default())
                .unwrap();
        let dim = sys.dim();
        let gamma0: Vec<f64> = (0..dim).map(|i| 1.0 / dim as f64 * (1.0 + (i % 3) as f64)).collect();
        let total0: f64 = gamma0.iter().sum();
        for scheme in [Scheme::ImplicitEuler, Scheme::TrBdf2] {
            let cfg = IntegratorConfig::new(10.0)
                .with_scheme(scheme)
                .with_output(OutputGrid::Uniform(21));
            let traj = integrate(&sys, &gamma0, &cfg).unwrap();
            for state in &traj.states {
                let total: f64 = state.iter().sum();
                assert!(math::abs(total - total0) <= 10.0 * cfg.atol * dim as f64);
            }
        }
    }

    #[test]
    fn long_run_converges_to_stationary() {
        let g = presets::triangle_graph();
        let m = presets::triangle_measure(&g);
        let r = presets::triangle_rates(&g);
        let sys =
            assemble_prelimit(&g, &m, &r, &[1.0, 1.0, 1.0], 30, BoundaryCoupling::default())
                .unwrap();
        let dim = sys.dim();
        let gamma0 = vec![1.0 / dim as f64; dim];
        let cfg = IntegratorConfig::new(40.0).with_output(OutputGrid::Uniform(41));
        let traj = integrate(&sys, &gamma0, &cfg).unwrap();
        let st = stationary_state(&sys, 1.0).unwrap();
        let u_final = sys.layout().density(traj.last_state());
        let u_star = sys.layout().density(&st);
        for (a, b) in u_final.iter().zip(u_star.iter()) {
            assert!(math::abs(a - b) < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn tolerance_sweep_brackets_error() {
        let sys = two_state_system();
        let cfg = IntegratorConfig::new(1.0)
            .with_tolerances(1e-6, 1e-9)
            .with_output(OutputGrid::Uniform(51));
        let (tight, disc) = resolve_with_tolerance_sweep(&sys, &[1.0, 0.0], &cfg, 100.0).unwrap();
        // discrepancy should bound the tighter run's true error direction
        assert!(disc < 1e-4);
        let last = tight.last_state();
        assert!(math::abs(last[0] - 0.5 * (1.0 + math::exp(-2.0))) < disc.max(1e-9) * 10.0);
    }

    #[test]
    fn fixed_step_orders() {
        // global error ratios under step halving: ~2 for implicit Euler,
        // ~4 for TR-BDF2
        let sys = two_state_system();
        let exact = 0.5 * (1.0 + math::exp(-2.0));
        for (scheme, lo, hi) in [
            (Scheme::ImplicitEuler, 1.7, 2.3),
            (Scheme::TrBdf2, 3.4, 4.6),
        ] {
            let mut errors = Vec::new();
            for k in 0..4 {
                let h = 0.05 / (1 << k) as f64;
                let mut cfg = IntegratorConfig::new(1.0)
                    .with_scheme(scheme)
                    .with_output(OutputGrid::Uniform(2));
                cfg.fixed_step = Some(h);
                let traj = integrate(&sys, &[1.0, 0.0], &cfg).unwrap();
                errors.push(math::abs(traj.last_state()[0] - exact));
            }
            for w in errors.windows(2) {
                let ratio = w[0] / w[1];
                assert!(
                    ratio > lo && ratio < hi,
                    "{scheme:?}: ratio {ratio} outside [{lo}, {hi}]"
                );
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sys = two_state_system();
        let cfg = IntegratorConfig::new(1.0);
        assert!(matches!(
            integrate(&sys, &[1.0], &cfg),
            Err(IntegrateError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn negative_input_rejected() {
        let sys = two_state_system();
        let cfg = IntegratorConfig::new(1.0);
        assert!(matches!(
            integrate(&sys, &[1.0, -1.0], &cfg),
            Err(IntegrateError::NegativeInput { .. })
        ));
    }
}
