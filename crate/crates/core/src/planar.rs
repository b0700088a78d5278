//! Multi-center planar solutions by monotone iteration and δ-continuation.
//!
//! With `u = u0 + v` the string equation becomes, for the regularized
//! background,
//!
//! ```text
//! Δv = g0·exp(a(u0^δ+v) - (a/m)e^{m(u0^δ+v)})·(e^{m(u0^δ+v)} - 1)·F_δ + g
//! ```
//!
//! on a truncated square with `u = 0` (the broken-symmetry vacuum) on the
//! boundary. `v = -u0^δ` is a supersolution and, for `g0` large enough,
//! `v = 0` a subsolution. The solver descends from the supersolution through
//! the linear problems `(Δ_h - K)v_{k+1} = RHS(v_k) - K v_k`, where the
//! nodewise shift `K` bounds `∂RHS/∂v` below the current iterate, so every
//! iterate stays in the bracket and the sequence is nodewise non-increasing.

use crate::background::{Point, RegularizationParam, StringConfiguration};
use crate::grid::Grid;
use crate::linear::{LinearError, ShiftedLaplacian};
use crate::model::PotentialModel;
use log::debug;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanarError {
    #[error("critical coupling a·N = 1 with all strings at one point: use the radial solver")]
    RadialRegime,
    #[error("v = 0 is not a subsolution: g0 must grow by a factor of at least {required_factor:.6}")]
    Subsolution { required_factor: f64 },
    #[error("iterate left the bracket [0, -u0^δ] by {amount:e} at node {node} (iteration {iteration})")]
    BracketViolation { node: usize, iteration: usize, amount: f64 },
    #[error("no convergence in {iterations} iterations; residual history tail {history:?}")]
    NoConvergence { iterations: usize, history: Vec<f64> },
    #[error("non-finite right-hand side at ({}, {})", .point[0], .point[1])]
    NonFinite { point: Point },
    #[error("continuation stage {stage} (δ = {delta}) failed: {source}")]
    Stage {
        stage: usize,
        delta: f64,
        #[source]
        source: Box<PlanarError>,
    },
    #[error("δ schedule must be non-empty, strictly decreasing and inside (0, 1)")]
    Schedule,
    #[error("evaluation point sits on a string center")]
    OnCenter,
    #[error("model has N = {model} but the configuration carries {config} strings")]
    StringCount { model: u32, config: u32 },
    #[error(transparent)]
    Linear(#[from] LinearError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Max-norm bound on both the discrete residual and the last update.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 500 }
    }
}

impl SolverOptions {
    fn linear_tol(&self) -> f64 {
        0.05 * self.tol
    }

    /// Allowance for linear-solve inexactness in bracket and monotonicity checks.
    fn slack(&self) -> f64 {
        self.tol
    }
}

/// Nodes at least this far from every center count as far field.
pub const FAR_FIELD_DISTANCE: f64 = 1.0;

/// Default continuation schedule `δ_k = 2^{-k-1}`, `k = 0..19`.
pub fn default_schedule() -> Vec<f64> {
    (0..20).map(|k| 0.5f64.powi(k + 1)).collect()
}

/// Per-step record of a monotone solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    /// `max_x (v_{k+1} - v_k)`; non-positive for a monotone descent.
    pub max_increase: Vec<f64>,
    /// `max_x |v_{k+1} - v_k|`.
    pub step_norm: Vec<f64>,
    pub residual: Vec<f64>,
    /// Smallest value of `v` and of `-u0^δ - v` over all iterates.
    pub min_lower_gap: f64,
    pub min_upper_gap: f64,
}

impl IterationTrace {
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.max_increase.iter().all(|&d| d <= slack)
    }
}

/// Solved (or in-progress) unknown `v` on a grid.
#[derive(Debug, Clone)]
pub struct PlanarField {
    pub grid: Grid,
    pub cfg: StringConfiguration,
    pub model: PotentialModel,
    /// Regularization of the last solve; `0` means the unregularized equation.
    pub delta: f64,
    pub values: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub trace: IterationTrace,
}

impl PlanarField {
    pub fn reg(&self) -> Option<RegularizationParam> {
        regularization(self.delta)
    }

    /// `u = u0 + v` at every node (`u0` unregularized).
    pub fn u(&self) -> Vec<f64> {
        self.grid
            .nodes()
            .zip(&self.values)
            .map(|((_, _, p), v)| self.cfg.u0(p).map(|u0| u0 + v).unwrap_or(f64::NEG_INFINITY))
            .collect()
    }
}

fn regularization(delta: f64) -> Option<RegularizationParam> {
    if delta > 0.0 {
        RegularizationParam::new(delta).ok()
    } else {
        None
    }
}

/// Nodal background data for one δ.
struct Background {
    u0: Vec<f64>,
    w0: Vec<f64>,
    g: Vec<f64>,
}

impl Background {
    fn new(cfg: &StringConfiguration, grid: &Grid, reg: Option<RegularizationParam>) -> Result<Self, PlanarError> {
        let mut u0 = Vec::with_capacity(grid.len());
        let mut w0 = Vec::with_capacity(grid.len());
        let mut g = Vec::with_capacity(grid.len());
        for (_, _, p) in grid.nodes() {
            u0.push(background_u0(cfg, reg, p)?);
            w0.push(cfg.w0(p));
            g.push(cfg.source_g(p));
        }
        // g = -Δu0^δ + 4Σ n δ/(δ+d²)² >= -Δu0^δ holds exactly in the continuum.
        // Away from the centers, where the solution hugs -u0^δ, enforce it for
        // the five-point operator too so -u0^δ stays a discrete supersolution;
        // there the correction is of truncation size.
        let n = grid.n();
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let far = cfg.nearest_center(grid.point(i, j)).is_none_or(|(_, d)| d >= FAR_FIELD_DISTANCE);
                if far {
                    let k = grid.index(i, j);
                    g[k] = g[k].max(-grid.laplacian_at(&u0, i, j));
                }
            }
        }
        Ok(Self { u0, w0, g })
    }
}

fn background_u0(cfg: &StringConfiguration, reg: Option<RegularizationParam>, p: Point) -> Result<f64, PlanarError> {
    match reg {
        Some(r) => Ok(cfg.u0_delta(r, p)),
        None => cfg.u0(p).map_err(|_| PlanarError::OnCenter),
    }
}

/// `h(u0^δ + v)·F_δ` using `e^{a u0^δ}F_δ = e^{-a w0}`, which is δ-independent
/// and finite at the centers.
#[inline]
fn nonlinear_term(model: &PotentialModel, u0: f64, w0: f64, v: f64) -> f64 {
    let (a, m) = (model.a(), model.m());
    let mu = m * (u0 + v);
    if a > 0.0 && mu > 700.0 {
        return 0.0;
    }
    model.g0() * (a * (v - w0) - a / m * mu.exp()).exp() * mu.exp_m1()
}

/// Upper bound on `∂/∂v` of [`nonlinear_term`] for all `v' <= v` when `u0 + v <= 0`.
#[inline]
fn shift_bound(model: &PotentialModel, u0: f64, w0: f64, v: f64) -> f64 {
    let (a, m) = (model.a(), model.m());
    let mu = (m * (u0 + v)).min(0.0);
    model.g0() * m * (a * (v - w0) + mu - a / m * mu.exp()).exp()
}

/// Full right-hand side of the regularized equation at one point; `reg = None`
/// evaluates the unregularized equation (off-center only).
pub fn rhs_eval(
    model: &PotentialModel,
    cfg: &StringConfiguration,
    reg: Option<RegularizationParam>,
    v: f64,
    x: Point,
) -> Result<f64, PlanarError> {
    let u0 = background_u0(cfg, reg, x)?;
    let value = nonlinear_term(model, u0, cfg.w0(x), v) + cfg.source_g(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(PlanarError::NonFinite { point: x })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolutionReport {
    pub passed: bool,
    /// Smallest factor by which `g0` must be multiplied for `v = 0` to be a
    /// strict subsolution at every interior node (below 1 when it passes).
    pub required_factor: f64,
    pub worst_node: Option<usize>,
}

/// Evaluates `RHS(v = 0) < 0` at every interior node.
pub fn check_subsolution(
    model: &PotentialModel,
    cfg: &StringConfiguration,
    reg: Option<RegularizationParam>,
    grid: &Grid,
) -> Result<SubsolutionReport, PlanarError> {
    let bg = Background::new(cfg, grid, reg)?;
    let mut required_factor: f64 = 0.0;
    let mut worst_node = None;
    for (i, j, _) in grid.nodes() {
        if grid.is_boundary(i, j) {
            continue;
        }
        let k = grid.index(i, j);
        let term = nonlinear_term(model, bg.u0[k], bg.w0[k], 0.0);
        let g = bg.g[k];
        let factor = if term < 0.0 { g / -term } else if g > 0.0 { f64::INFINITY } else { 0.0 };
        if factor > required_factor || worst_node.is_none() {
            required_factor = required_factor.max(factor);
            worst_node = Some(grid.index(i, j));
        }
    }
    Ok(SubsolutionReport { passed: required_factor < 1.0, required_factor, worst_node })
}

/// Scales `g0` so that `v = 0` is a subsolution at every δ of the schedule
/// and at δ = 0, with a 10% margin.
pub fn auto_scale_g0(
    model: &PotentialModel,
    cfg: &StringConfiguration,
    grid: &Grid,
    schedule: &[f64],
) -> Result<f64, PlanarError> {
    let unit = model.with_g0(1.0).expect("unit scale is valid");
    let mut factor: f64 = 0.0;
    for reg in schedule.iter().map(|&d| regularization(d)).chain([None]) {
        factor = factor.max(check_subsolution(&unit, cfg, reg, grid)?.required_factor);
    }
    Ok(if factor > 0.0 && factor.is_finite() { 1.1 * factor } else { model.g0() })
}

fn refuse_radial_regime(model: &PotentialModel, cfg: &StringConfiguration) -> Result<(), PlanarError> {
    if model.n() != cfg.n() {
        return Err(PlanarError::StringCount { model: model.n(), config: cfg.n() });
    }
    if model.is_critical() && cfg.distinct_centers() == 1 {
        return Err(PlanarError::RadialRegime);
    }
    Ok(())
}

/// Max over interior nodes of `|Δ_h v - RHS(v)|`.
pub fn residual(field: &PlanarField) -> Result<f64, PlanarError> {
    let bg = Background::new(&field.cfg, &field.grid, field.reg())?;
    Ok(residual_with(&field.model, &field.grid, &bg, &field.values).0)
}

fn residual_with(model: &PotentialModel, grid: &Grid, bg: &Background, v: &[f64]) -> (f64, f64) {
    // (max |Δv - RHS|, max (Δv - RHS)); the second is <= 0 for a supersolution
    let mut abs_max: f64 = 0.0;
    let mut signed_max = f64::NEG_INFINITY;
    let n = grid.n();
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = grid.index(i, j);
            let r = grid.laplacian_at(v, i, j) - nonlinear_term(model, bg.u0[k], bg.w0[k], v[k]) - bg.g[k];
            abs_max = abs_max.max(r.abs());
            signed_max = signed_max.max(r);
        }
    }
    (abs_max, signed_max)
}

/// Solves the regularized equation at one δ, descending from `-u0^δ`.
pub fn solve_regularized(
    model: &PotentialModel,
    cfg: &StringConfiguration,
    reg: RegularizationParam,
    grid: &Grid,
    opts: SolverOptions,
) -> Result<PlanarField, PlanarError> {
    refuse_radial_regime(model, cfg)?;
    require_subsolution(model, cfg, Some(reg), grid)?;
    let bg = Background::new(cfg, grid, Some(reg))?;
    let start: Vec<f64> = bg.u0.iter().map(|u| -u).collect();
    let (values, residual_norm, iterations, trace) = monotone_solve(model, grid, &bg, start, opts)?;
    Ok(PlanarField {
        grid: grid.clone(),
        cfg: cfg.clone(),
        model: *model,
        delta: reg.delta(),
        values,
        residual_norm,
        iterations,
        trace,
    })
}

fn require_subsolution(
    model: &PotentialModel,
    cfg: &StringConfiguration,
    reg: Option<RegularizationParam>,
    grid: &Grid,
) -> Result<(), PlanarError> {
    // without gravity the nonlinearity is increasing in v, so the descent from
    // the supersolution needs no lower barrier
    if model.a() == 0.0 || cfg.n() == 0 {
        return Ok(());
    }
    let report = check_subsolution(model, cfg, reg, grid)?;
    if report.passed {
        Ok(())
    } else {
        Err(PlanarError::Subsolution { required_factor: report.required_factor })
    }
}

fn monotone_solve(
    model: &PotentialModel,
    grid: &Grid,
    bg: &Background,
    mut v: Vec<f64>,
    opts: SolverOptions,
) -> Result<(Vec<f64>, f64, usize, IterationTrace), PlanarError> {
    let n = grid.n();
    let len = grid.len();
    for (i, j, _) in grid.nodes() {
        if grid.is_boundary(i, j) {
            let k = grid.index(i, j);
            v[k] = -bg.u0[k];
        }
    }
    let mut trace = IterationTrace { min_lower_gap: f64::INFINITY, min_upper_gap: f64::INFINITY, ..Default::default() };
    let (mut res, _) = residual_with(model, grid, bg, &v);
    let mut shift = vec![0.0; len];
    let mut rhs = vec![0.0; len];
    let mut iteration = 0;
    while res > opts.tol || trace.step_norm.last().is_none_or(|&s| s > opts.tol) {
        if iteration >= opts.max_iterations {
            let tail = trace.residual.iter().rev().take(8).rev().copied().collect();
            return Err(PlanarError::NoConvergence { iterations: iteration, history: tail });
        }
        iteration += 1;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = grid.index(i, j);
                let kk = shift_bound(model, bg.u0[k], bg.w0[k], v[k]);
                shift[k] = kk;
                rhs[k] = nonlinear_term(model, bg.u0[k], bg.w0[k], v[k]) + bg.g[k] - kk * v[k];
            }
        }
        let op = ShiftedLaplacian::new(n, grid.spacing(), std::mem::take(&mut shift));
        let previous = v.clone();
        op.solve(&mut v, &rhs, opts.linear_tol(), 2000)?;
        shift = vec![0.0; len];

        let mut max_increase = f64::NEG_INFINITY;
        let mut step_norm: f64 = 0.0;
        for k in 0..len {
            let d = v[k] - previous[k];
            max_increase = max_increase.max(d);
            step_norm = step_norm.max(d.abs());
            let lower = v[k];
            let upper = -bg.u0[k] - v[k];
            trace.min_lower_gap = trace.min_lower_gap.min(lower);
            trace.min_upper_gap = trace.min_upper_gap.min(upper);
            if upper < -opts.slack() {
                return Err(PlanarError::BracketViolation { node: k, iteration, amount: -upper });
            }
            if !v[k].is_finite() {
                return Err(PlanarError::NonFinite { point: grid.point(k % n, k / n) });
            }
        }
        res = residual_with(model, grid, bg, &v).0;
        trace.max_increase.push(max_increase);
        trace.step_norm.push(step_norm);
        trace.residual.push(res);
        debug!("monotone step {iteration}: |dv| = {step_norm:.3e}, residual = {res:.3e}");
    }
    Ok((v, res, iteration, trace))
}

/// One stage of a continuation run.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub delta: f64,
    pub iterations: usize,
    pub residual: f64,
    pub warm_started: bool,
    /// `min v` and `min(-u0^δ - v)` of the stage solution.
    pub lower_gap: f64,
    pub upper_gap: f64,
    pub monotone: bool,
}

#[derive(Debug, Clone)]
pub struct Continuation {
    pub field: PlanarField,
    pub stages: Vec<StageReport>,
    /// `sup|v^{δ_k} - v^{δ_{k+1}}|` between consecutive stages.
    pub cauchy: Vec<f64>,
}

/// Solves along a decreasing δ schedule, warm-starting each stage from the
/// previous solution whenever that solution is a supersolution of the next
/// stage (otherwise from `-u0^δ`).
pub fn continue_delta(
    model: &PotentialModel,
    cfg: &StringConfiguration,
    grid: &Grid,
    schedule: &[f64],
    opts: SolverOptions,
) -> Result<Continuation, PlanarError> {
    if schedule.is_empty()
        || schedule.iter().any(|&d| !(d > 0.0 && d < 1.0))
        || schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(PlanarError::Schedule);
    }
    refuse_radial_regime(model, cfg)?;
    let mut stages = Vec::with_capacity(schedule.len());
    let mut cauchy = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    let mut last = None;
    for (stage, &delta) in schedule.iter().enumerate() {
        let wrap = |e: PlanarError| PlanarError::Stage { stage, delta, source: Box::new(e) };
        let reg = regularization(delta);
        require_subsolution(model, cfg, reg, grid).map_err(wrap)?;
        let bg = Background::new(cfg, grid, reg).map_err(wrap)?;
        let cold: Vec<f64> = bg.u0.iter().map(|u| -u).collect();
        let (start, warm_started) = match &previous {
            Some(prev) if is_supersolution(model, grid, &bg, prev, opts) => (prev.clone(), true),
            _ => (cold, false),
        };
        let (values, residual_norm, iterations, trace) =
            monotone_solve(model, grid, &bg, start, opts).map_err(wrap)?;
        let lower_gap = values.iter().fold(f64::INFINITY, |m, &x| m.min(x));
        let upper_gap = values.iter().zip(&bg.u0).fold(f64::INFINITY, |m, (v, u)| m.min(-u - v));
        if let Some(prev) = &previous {
            cauchy.push(prev.iter().zip(&values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
        }
        stages.push(StageReport {
            delta,
            iterations,
            residual: residual_norm,
            warm_started,
            lower_gap,
            upper_gap,
            monotone: trace.is_monotone(opts.slack()),
        });
        debug!("stage {stage}: δ = {delta:e}, {iterations} iterations, warm = {warm_started}");
        previous = Some(values.clone());
        last = Some(PlanarField {
            grid: grid.clone(),
            cfg: cfg.clone(),
            model: *model,
            delta,
            values,
            residual_norm,
            iterations,
            trace,
        });
    }
    Ok(Continuation { field: last.expect("schedule is non-empty"), stages, cauchy })
}

fn is_supersolution(model: &PotentialModel, grid: &Grid, bg: &Background, v: &[f64], opts: SolverOptions) -> bool {
    let mut candidate = v.to_vec();
    for (i, j, _) in grid.nodes() {
        if grid.is_boundary(i, j) {
            let k = grid.index(i, j);
            candidate[k] = -bg.u0[k];
        }
    }
    let within = candidate.iter().zip(&bg.u0).all(|(v, u)| *v <= -u + opts.slack());
    within && residual_with(model, grid, bg, &candidate).1 <= 0.0
}
