//! Critical coupling with all strings at one point.
//!
//! In `t = ln r` the string equation becomes `U'' = h(U)` with `U' → 2N` as
//! `t → -∞` and `U → 0` as `t → +∞`. Near `-∞` the solution is seeded from the
//! fixed point of
//!
//! ```text
//! w = T(w),   T(w)(t) = ∫_{-∞}^t (t-τ) h(2Nτ + w(τ)) dτ,   U = 2Nt + w,
//! ```
//!
//! and continued by marching the first integral `U' = √F(U)`, which for the
//! calibrated scale reads `U' = 2N·√(1 - exp(-(a/m)(e^{mU} - 1 - mU)))`.

use crate::fit::linear_fit;
use crate::model::{ModelError, PotentialModel};
use log::{debug, warn};
use thiserror::Error;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_SEED_TOL: f64 = 1e-13;
/// Seed integrals start `SEED_TAIL/(2aN)` below `t0`, where `e^{2aNτ}` is negligible.
pub const SEED_TAIL: f64 = 40.0;
/// Target for the certified contraction factor of the automatic `t0`.
pub const CONTRACTION_TARGET: f64 = 0.5;
/// Below this radicand the march follows the linearization about `U = 0`.
pub const RADICAND_FLOOR: f64 = 1e-14;
/// Most negative radicand tolerated before the scale counts as miscalibrated.
pub const CALIBRATION_SLACK: f64 = 1e-12;
const MAX_PICARD: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("the radial reduction needs critical coupling a·N = 1, got a·N = {0}")]
    NotCritical(f64),
    #[error("t0 = {t0} is too large: the contraction estimate needs t0 <= {threshold}")]
    TooLarge { t0: f64, threshold: f64 },
    #[error("Picard iteration failed to contract (ratio {ratio:.3} at iteration {iteration})")]
    NoContraction { iteration: usize, ratio: f64 },
    #[error("Picard iteration did not reach {tol:e} in {iterations} iterations")]
    NoConvergence { iterations: usize, tol: f64 },
    #[error("radicand {radicand:e} at U = {u}: g0 is inconsistent with the calibration 2N·e^(1/(mN))")]
    Calibration { u: f64, radicand: f64 },
    #[error("invalid {what}: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("fit window [{lo}, {hi}] holds fewer than three profile samples")]
    Window { lo: f64, hi: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Sampled fixed point `w` on `[t0 - SEED_TAIL/(2aN), t0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedState {
    pub model: PotentialModel,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    /// `w'`, so that `U' = 2N + w'`.
    pub w_prime: Vec<f64>,
    pub t0: f64,
    pub step: f64,
    /// Certified bound on the Lipschitz constant of `T` at this `t0`.
    pub contraction_bound: f64,
    /// `sup|w_{k+1} - w_k|` per Picard iteration.
    pub picard_log: Vec<f64>,
}

impl SeedState {
    fn two_n(&self) -> f64 {
        2.0 * self.model.n() as f64
    }

    pub fn u_at_t0(&self) -> f64 {
        self.two_n() * self.t0 + self.w[self.w.len() - 1]
    }

    pub fn u_prime_at_t0(&self) -> f64 {
        self.two_n() + self.w_prime[self.w_prime.len() - 1]
    }

    /// Measured ratios of successive Picard differences.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.picard_log.windows(2).filter(|d| d[0] > 0.0).map(|d| d[1] / d[0]).collect()
    }

    /// `sup|w - T(w)|`.
    pub fn fixed_point_residual(&self) -> f64 {
        let (tw, _) = picard_map(&self.model, &self.t, &self.w, &self.w_prime);
        tw.iter().zip(&self.w).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn require_critical(model: &PotentialModel) -> Result<(), RadialError> {
    if model.n() == 0 || !model.is_critical() {
        return Err(RadialError::NotCritical(model.coupling_product()));
    }
    Ok(())
}

/// Upper bound on the Lipschitz constant of `T` on `{sup|w| <= 1}` over
/// `(-∞, t0]`: `C1·e^a·e^{2aN t0}/(2aN)²` with
/// `C1 = g0·(m e^{m(2N t0 + 1)} + a)` bounding `e^{-aU}|h'(U)|` for `U <= 2N t0 + 1`.
pub fn contraction_bound(model: &PotentialModel, t0: f64) -> f64 {
    let (a, m, two_n) = (model.a(), model.m(), 2.0 * model.n() as f64);
    let rate = a * two_n;
    let c1 = model.g0() * (m * (m * (two_n * t0 + 1.0)).exp() + a);
    c1 * (a + rate * t0).exp() / (rate * rate)
}

/// Bound on `sup|T(w)|` over the same ball; at most 1 keeps `T` a self-map.
pub fn self_map_bound(model: &PotentialModel, t0: f64) -> f64 {
    let (a, two_n) = (model.a(), 2.0 * model.n() as f64);
    let rate = a * two_n;
    model.g0() * (a + rate * t0).exp() / (rate * rate)
}

/// Largest `t0` at which the contraction bound is at most [`CONTRACTION_TARGET`],
/// `T` maps the unit ball into itself and `2N t0 + 1 < 0`.
pub fn admissible_t0(model: &PotentialModel) -> Result<f64, RadialError> {
    require_critical(model)?;
    let two_n = 2.0 * model.n() as f64;
    let ok = |t: f64| {
        contraction_bound(model, t) <= CONTRACTION_TARGET && self_map_bound(model, t) <= 1.0 && two_n * t + 1.0 < 0.0
    };
    let (mut lo, mut hi) = (-1.0, 0.0);
    while !ok(lo) {
        hi = lo;
        lo *= 2.0;
        if lo < -1e6 {
            return Err(RadialError::Domain { what: "contraction threshold", value: lo });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// One application of `T` on a uniform grid, by Euler-Maclaurin corrected
/// cumulative trapezoids with exact end derivatives and an exponential tail
/// below the first sample. `w_prime` supplies `U' - 2N` for the derivative of `h`.
/// Returns `(T(w), T(w)')`.
pub fn picard_map(model: &PotentialModel, t: &[f64], w: &[f64], w_prime: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let len = t.len();
    let two_n = 2.0 * model.n() as f64;
    let rate = model.a() * two_n;
    let s = t[1] - t[0];
    let mut hv = Vec::with_capacity(len);
    let mut dh = Vec::with_capacity(len);
    for i in 0..len {
        let u = two_n * t[i] + w[i];
        hv.push(model.h_unchecked(u));
        dh.push(model.h_prime_unchecked(u) * (two_n + w_prime[i]));
    }
    let mut first = vec![0.0; len];
    first[0] = hv[0] / rate;
    let mut trap = first[0];
    for i in 1..len {
        trap += 0.5 * s * (hv[i - 1] + hv[i]);
        first[i] = trap - s * s / 12.0 * (dh[i] - dh[0]);
    }
    let mut second = vec![0.0; len];
    second[0] = hv[0] / (rate * rate);
    let mut trap = second[0];
    for i in 1..len {
        trap += 0.5 * s * (first[i - 1] + first[i]);
        second[i] = trap - s * s / 12.0 * (hv[i] - hv[0]);
    }
    (second, first)
}

/// Seed by Picard iteration from `w ≡ 0`. `t0 = None` picks [`admissible_t0`];
/// `t0` is then moved down onto the lattice `step·ℤ`.
pub fn fixed_point_seed(model: &PotentialModel, t0: Option<f64>, step: f64, tol: f64) -> Result<SeedState, RadialError> {
    require_critical(model)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(RadialError::Domain { what: "step", value: step });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(RadialError::Domain { what: "tolerance", value: tol });
    }
    let threshold = admissible_t0(model)?;
    let t0 = match t0 {
        Some(t) if !t.is_finite() => return Err(RadialError::Domain { what: "t0", value: t }),
        Some(t) if t > threshold => return Err(RadialError::TooLarge { t0: t, threshold }),
        Some(t) => t,
        None => threshold,
    };
    let i_hi = (t0 / step).floor() as i64;
    let t0 = i_hi as f64 * step;
    let rate = 2.0 * model.coupling_product();
    let i_lo = i_hi - (SEED_TAIL / rate / step).ceil() as i64;
    let t: Vec<f64> = (i_lo..=i_hi).map(|i| i as f64 * step).collect();

    let mut w = vec![0.0; t.len()];
    let mut w_prime = vec![0.0; t.len()];
    let mut log = Vec::new();
    loop {
        let (next, next_prime) = picard_map(model, &t, &w, &w_prime);
        let diff = next.iter().zip(&w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        w = next;
        w_prime = next_prime;
        log.push(diff);
        let k = log.len();
        if k >= 3 && log[k - 2] > 1e3 * tol {
            let ratio = diff / log[k - 2];
            if ratio >= 1.0 {
                return Err(RadialError::NoContraction { iteration: k, ratio });
            }
        }
        if diff <= tol {
            break;
        }
        if k >= MAX_PICARD {
            return Err(RadialError::NoConvergence { iterations: k, tol });
        }
    }
    debug!("seed at t0 = {t0}: {} Picard iterations", log.len());
    Ok(SeedState {
        model: *model,
        t,
        w,
        w_prime,
        t0,
        step,
        contraction_bound: contraction_bound(model, t0),
        picard_log: log,
    })
}

/// Samples of `U(t)` and `U'(t)` on an increasing `t` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub model: PotentialModel,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
    pub t0: f64,
    /// Where the march switched to the linearized solution, if it did.
    pub t_switch: Option<f64>,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `max |U'² - F(U)|` over all samples.
    pub fn conservation_residual(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.u_prime)
            .map(|(&u, &p)| (p * p - self.model.first_integral_unchecked(u)).abs())
            .fold(0.0, f64::max)
    }
}

/// `F(U)/(4N²)` with the calibration offset dropped when it is at rounding level.
fn radicand(model: &PotentialModel, offset: f64, u: f64) -> f64 {
    let (a, m) = (model.a(), model.m());
    let mu = m * u;
    if mu > 700.0 {
        return -offset.exp_m1().max(1.0);
    }
    -(offset - a / m * (mu.exp_m1() - mu)).exp_m1()
}

fn calibration_offset(model: &PotentialModel) -> f64 {
    let nn = model.n() as f64;
    let c = (model.g0() / (2.0 * model.a() * nn * nn)).ln() - model.a() / model.m();
    if c.abs() <= CALIBRATION_SLACK {
        0.0
    } else {
        c
    }
}

/// Marches `U' = 2N√(F(U)/4N²)` with classical RK4 from `(t_start, u_start)`,
/// switching to `U = U_s·e^{-√(2Nm)(t - t_s)}` once the radicand drops below
/// [`RADICAND_FLOOR`]. Sample times are `t_start + k·step`, computed as integer
/// multiples of `step` when `t_start` lies on that lattice.
pub fn march_from(
    model: &PotentialModel,
    t_start: f64,
    u_start: f64,
    t_end: f64,
    step: f64,
) -> Result<RadialProfile, RadialError> {
    require_critical(model)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(RadialError::Domain { what: "step", value: step });
    }
    if !(t_end.is_finite() && t_end > t_start) {
        return Err(RadialError::Domain { what: "t_end", value: t_end });
    }
    if !(u_start.is_finite() && u_start <= 0.0) {
        return Err(RadialError::Domain { what: "starting value U", value: u_start });
    }
    let two_n = 2.0 * model.n() as f64;
    let kappa = (two_n * model.m()).sqrt();
    let offset = calibration_offset(model);
    let slope = |u: f64| -> Result<f64, RadialError> {
        let r = radicand(model, offset, u);
        if r < -CALIBRATION_SLACK {
            return Err(RadialError::Calibration { u, radicand: r });
        }
        Ok(two_n * r.max(0.0).sqrt())
    };
    let lattice = (t_start / step).round();
    let on_lattice = (t_start / step - lattice).abs() < 1e-9;
    let time = |k: usize| if on_lattice { (lattice + k as f64) * step } else { t_start + k as f64 * step };
    let steps = ((t_end - t_start) / step).ceil() as usize;

    let mut t = Vec::with_capacity(steps + 1);
    let mut u = Vec::with_capacity(steps + 1);
    let mut up = Vec::with_capacity(steps + 1);
    let mut switch: Option<(f64, f64)> = None;
    let mut current = u_start;
    for k in 0..=steps {
        let tk = time(k);
        if switch.is_none() && radicand(model, offset, current) < RADICAND_FLOOR {
            switch = Some((tk, current));
        }
        if let Some((ts, us)) = switch {
            let value = us * (-kappa * (tk - ts)).exp();
            t.push(tk);
            u.push(value);
            up.push(-kappa * value);
            continue;
        }
        let p = slope(current)?;
        t.push(tk);
        u.push(current);
        up.push(p);
        let h = step;
        let k1 = p;
        let k2 = slope(current + 0.5 * h * k1)?;
        let k3 = slope(current + 0.5 * h * k2)?;
        let k4 = slope(current + h * k3)?;
        current += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if current >= 0.0 {
            return Err(RadialError::Calibration { u: current, radicand: radicand(model, offset, current) });
        }
    }
    Ok(RadialProfile { model: *model, t, u, u_prime: up, t0: t_start, t_switch: switch.map(|s| s.0) })
}

/// Seed samples below `t0` followed by the first-integral march from
/// `U(t0) = 2N t0 + w(t0)` to `t_end`.
pub fn first_integral_march(seed: &SeedState, t_end: f64, step: f64) -> Result<RadialProfile, RadialError> {
    let marched = march_from(&seed.model, seed.t0, seed.u_at_t0(), t_end, step)?;
    let two_n = seed.two_n();
    let keep = seed.t.len() - 1;
    let mut t = seed.t[..keep].to_vec();
    let mut u: Vec<f64> = seed.t[..keep].iter().zip(&seed.w).map(|(t, w)| two_n * t + w).collect();
    let mut up: Vec<f64> = seed.w_prime[..keep].iter().map(|w| two_n + w).collect();
    t.extend_from_slice(&marched.t);
    u.extend_from_slice(&marched.u);
    up.extend_from_slice(&marched.u_prime);
    Ok(RadialProfile { model: seed.model, t, u, u_prime: up, t0: seed.t0, t_switch: marched.t_switch })
}

/// Seed at the automatic `t0` and march to `t_end` with one step size.
pub fn solve_radial(model: &PotentialModel, t0: Option<f64>, t_end: f64, step: f64) -> Result<RadialProfile, RadialError> {
    let seed = fixed_point_seed(model, t0, step, DEFAULT_SEED_TOL)?;
    first_integral_march(&seed, t_end, step)
}

/// `max |U'' - h(U)|` over interior samples, with the fourth-order five-point
/// second difference where the spacing is uniform and the three-point
/// non-uniform one elsewhere.
pub fn verify_ode_residual(profile: &RadialProfile) -> f64 {
    let (t, u) = (&profile.t, &profile.u);
    let len = t.len();
    let mut worst: f64 = 0.0;
    for i in 1..len.saturating_sub(1) {
        let uniform = |a: usize, b: usize| {
            let s = t[i + 1] - t[i];
            (a..b).all(|j| ((t[j + 1] - t[j]) - s).abs() <= 1e-9 * s)
        };
        let second = if i >= 2 && i + 2 < len && uniform(i - 2, i + 2) {
            let s = t[i + 1] - t[i];
            (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) / (12.0 * s * s)
        } else {
            let (hl, hr) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            2.0 * (hl * u[i + 1] - (hl + hr) * u[i] + hr * u[i - 1]) / (hl * hr * (hl + hr))
        };
        worst = worst.max((second - profile.model.h_unchecked(u[i])).abs());
    }
    worst
}

/// Marches the second-order system `U' = P, P' = h(U)` with RK4 from sample
/// `start` of `profile`, stepping between consecutive samples up to `t_stop`,
/// and returns `sup|U_system - U_profile|`.
pub fn second_order_agreement(profile: &RadialProfile, start: usize, t_stop: f64) -> f64 {
    let model = &profile.model;
    let h = |u: f64| model.h_unchecked(u);
    let (mut u, mut p) = (profile.u[start], profile.u_prime[start]);
    let mut worst: f64 = 0.0;
    for i in start..profile.len() - 1 {
        if profile.t[i] >= t_stop {
            break;
        }
        let s = profile.t[i + 1] - profile.t[i];
        let (k1u, k1p) = (p, h(u));
        let (k2u, k2p) = (p + 0.5 * s * k1p, h(u + 0.5 * s * k1u));
        let (k3u, k3p) = (p + 0.5 * s * k2p, h(u + 0.5 * s * k2u));
        let (k4u, k4p) = (p + s * k3p, h(u + s * k3u));
        u += s / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        p += s / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        worst = worst.max((u - profile.u[i + 1]).abs());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Negated slope of `ln|U|` against `t`.
    pub rate: f64,
    pub r_squared: f64,
    /// `|U'/U|` at the sample nearest the window midpoint.
    pub ratio: f64,
    pub window: (f64, f64),
    /// `|U| < 0.1` throughout the window.
    pub linear_regime: bool,
}

/// Least-squares decay rate of `|U|` over `window`.
pub fn extract_decay(profile: &RadialProfile, window: (f64, f64)) -> Result<DecayFit, RadialError> {
    let (lo, hi) = window;
    let (first, last) = match (profile.t.first(), profile.t.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(RadialError::Window { lo, hi }),
    };
    if !(lo < hi) || lo < first || hi > last {
        return Err(RadialError::Domain { what: "fit window start", value: lo });
    }
    let idx: Vec<usize> = (0..profile.len()).filter(|&i| profile.t[i] >= lo && profile.t[i] <= hi).collect();
    if idx.len() < 3 {
        return Err(RadialError::Window { lo, hi });
    }
    let xs: Vec<f64> = idx.iter().map(|&i| profile.t[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| profile.u[i].abs().ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or(RadialError::Window { lo, hi })?;
    let linear_regime = idx.iter().all(|&i| profile.u[i].abs() < 0.1);
    if !linear_regime {
        warn!("decay window [{lo}, {hi}] reaches |U| >= 0.1; the fitted rate is not asymptotic");
    }
    let mid = 0.5 * (lo + hi);
    let im = *idx
        .iter()
        .min_by(|&&a, &&b| (profile.t[a] - mid).abs().total_cmp(&(profile.t[b] - mid).abs()))
        .expect("window is non-empty");
    Ok(DecayFit {
        rate: -fit.slope,
        r_squared: fit.r_squared,
        ratio: (profile.u_prime[im] / profile.u[im]).abs(),
        window,
        linear_regime,
    })
}

/// The `t`-interval on which `lo <= |U| <= hi`, for a monotone profile.
pub fn magnitude_window(profile: &RadialProfile, lo: f64, hi: f64) -> Result<(f64, f64), RadialError> {
    let inside: Vec<f64> =
        profile.t.iter().zip(&profile.u).filter(|(_, u)| u.abs() >= lo && u.abs() <= hi).map(|(t, _)| *t).collect();
    match (inside.first(), inside.last()) {
        (Some(&a), Some(&b)) if b > a => Ok((a, b)),
        _ => Err(RadialError::Window { lo, hi }),
    }
}

/// `u(r)` and `u_r(r)` on `r = e^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub u_r: Vec<f64>,
}

pub fn to_radial_field(profile: &RadialProfile) -> RadialField {
    let r: Vec<f64> = profile.t.iter().map(|t| t.exp()).collect();
    let u_r = profile.u_prime.iter().zip(&r).map(|(p, r)| p / r).collect();
    RadialField { r, u: profile.u.clone(), u_r }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::calibrate_g0;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn critical(n: u32, m: f64) -> PotentialModel {
        PotentialModel::critical(n, m).unwrap()
    }

    #[test]
    fn rejects_non_critical_models() {
        let model = PotentialModel::new(1, 1.0, 0.5, 2.0).unwrap();
        assert!(matches!(fixed_point_seed(&model, None, 1e-3, 1e-12), Err(RadialError::NotCritical(_))));
        assert!(matches!(march_from(&model, -1.0, -2.0, 1.0, 1e-3), Err(RadialError::NotCritical(_))));
    }

    #[test]
    fn first_picard_iterate_leading_order() {
        // a = 1, N = 1, g0 = 2e: w1(t) ≈ -(g0/(2aN)²)e^{2aNt}
        let model = critical(1, 1.0);
        assert_relative_eq!(model.g0(), 2.0 * E, max_relative = 1e-15);
        let step = 1e-3;
        let t: Vec<f64> = (-30_000..=-5_000).map(|i| i as f64 * step).collect();
        let zeros = vec![0.0; t.len()];
        let (w1, _) = picard_map(&model, &t, &zeros, &zeros);
        let at = *w1.last().unwrap();
        let leading = -(E / 2.0) * (-10.0f64).exp();
        assert_relative_eq!(leading, -6.17e-5, max_relative = 1e-3);
        // h(2τ) = -g0 e^{2τ - e^{2τ}}(1 - e^{2τ}), so corrections are O(e^{2t})
        assert_relative_eq!(at, leading, max_relative = 1e-4);
        assert!(w1.iter().all(|&w| w < 0.0));
    }

    #[test]
    fn first_iterate_against_fine_quadrature() {
        let model = critical(2, 1.5);
        let step = 1e-3;
        let t: Vec<f64> = (-12_000..=-2_000).map(|i| i as f64 * step).collect();
        let zeros = vec![0.0; t.len()];
        let (w1, d1) = picard_map(&model, &t, &zeros, &zeros);
        // composite Simpson on (t - τ) h(2Nτ) over [t - 40, t] with a much finer step
        let target = -2.0;
        let (n, lo) = (200_000, target - 40.0);
        let hs = (target - lo) / n as f64;
        let f = |tau: f64| (target - tau) * model.h(4.0 * tau).unwrap();
        let mut sum = f(lo) + f(target);
        for i in 1..n {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * hs);
        }
        let reference = sum * hs / 3.0;
        assert_relative_eq!(*w1.last().unwrap(), reference, max_relative = 1e-10);
        let fp = |tau: f64| model.h(4.0 * tau).unwrap();
        let mut sum = fp(lo) + fp(target);
        for i in 1..n {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * fp(lo + i as f64 * hs);
        }
        assert_relative_eq!(*d1.last().unwrap(), sum * hs / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn seed_contracts_and_is_a_fixed_point() {
        for (n, m) in [(1, 1.0), (2, 1.0), (1, 4.0), (3, 0.5)] {
            let model = critical(n, m);
            let seed = fixed_point_seed(&model, None, 1e-3, 1e-13).unwrap();
            assert!(seed.contraction_bound <= CONTRACTION_TARGET);
            assert!(seed.contraction_ratios().iter().all(|&r| r < 1.0));
            assert!(seed.w.iter().all(|w| w.abs() <= 1.0));
            assert!(seed.fixed_point_residual() <= 1e-12, "{}", seed.fixed_point_residual());
            // U' → 2N at the bottom of the seed interval
            assert!((seed.w_prime[0]).abs() < 1e-13);
            assert_eq!(seed.t0, (seed.t0 / 1e-3).round() * 1e-3);
        }
    }

    #[test]
    fn t0_beyond_threshold_is_refused() {
        let model = critical(1, 1.0);
        let threshold = admissible_t0(&model).unwrap();
        assert_relative_eq!(contraction_bound(&model, threshold), CONTRACTION_TARGET, max_relative = 1e-9);
        match fixed_point_seed(&model, Some(threshold + 0.5), 1e-3, 1e-12) {
            Err(RadialError::TooLarge { threshold: th, .. }) => assert_eq!(th, threshold),
            other => panic!("{other:?}"),
        }
        assert!(fixed_point_seed(&model, Some(threshold - 3.0), 1e-3, 1e-12).is_ok());
    }

    #[test]
    fn seed_and_march_agree_at_matching_point() {
        let model = critical(2, 1.0);
        let seed = fixed_point_seed(&model, None, 1e-3, 1e-13).unwrap();
        let from_integral = (model.first_integral(seed.u_at_t0()).unwrap()).sqrt();
        assert_relative_eq!(seed.u_prime_at_t0(), from_integral, max_relative = 1e-11);
    }

    #[test]
    fn equilibrium_is_stationary() {
        let model = critical(1, 2.0);
        let profile = march_from(&model, 0.0, 0.0, 1.0, 1e-2).unwrap();
        assert!(profile.u.iter().all(|&u| u == 0.0));
        assert!(profile.u_prime.iter().all(|&p| p == 0.0));
        assert_eq!(verify_ode_residual(&profile), 0.0);
    }

    #[test]
    fn miscalibrated_scale_is_detected() {
        let model = critical(1, 1.0);
        let high = model.with_g0(model.g0() * (1.0 + 1e-6)).unwrap();
        assert!(matches!(march_from(&high, -2.0, -4.0, 30.0, 1e-3), Err(RadialError::Calibration { .. })));
        let low = model.with_g0(model.g0() * (1.0 - 1e-6)).unwrap();
        assert!(matches!(march_from(&low, -2.0, -4.0, 40.0, 1e-3), Err(RadialError::Calibration { .. })));
        assert!(march_from(&model, -2.0, -4.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn profile_invariants() {
        let model = critical(1, 1.0);
        let profile = solve_radial(&model, None, 25.0, DEFAULT_STEP).unwrap();
        assert!(profile.t.windows(2).all(|w| w[1] > w[0]));
        assert!(profile.u.windows(2).all(|w| w[1] > w[0]));
        assert!(profile.u.iter().all(|&u| u < 0.0));
        assert!((profile.u_prime[0] - 2.0).abs() < 1e-12);
        assert!(*profile.u_prime.last().unwrap() < 1e-9);
        assert!(profile.conservation_residual() <= 1e-8 * 4.0);
        assert!(verify_ode_residual(&profile) <= 1e-6, "{}", verify_ode_residual(&profile));
        // r = 1 is sampled exactly
        assert!(profile.t.contains(&0.0));
        let field = to_radial_field(&profile);
        let i = profile.t.iter().position(|&t| t == 0.0).unwrap();
        assert_eq!(field.r[i], 1.0);
        assert_eq!(field.u_r[i], profile.u_prime[i]);
    }

    #[test]
    fn log_behavior_at_the_center() {
        let model = critical(2, 1.0);
        let profile = solve_radial(&model, None, 5.0, DEFAULT_STEP).unwrap();
        let field = to_radial_field(&profile);
        // u/ln r → 2N and u - 2N ln r → 0
        assert_relative_eq!(field.u[0] / field.r[0].ln(), 4.0, max_relative = 1e-12);
        assert!((field.u[0] - 4.0 * field.r[0].ln()).abs() < 1e-12);
    }

    #[test]
    fn synthetic_exponential_fit() {
        let model = critical(1, 1.0);
        let t: Vec<f64> = (0..200).map(|i| 1.0 + i as f64 * 0.01).collect();
        let u: Vec<f64> = t.iter().map(|t| -(-3.0 * t).exp()).collect();
        let u_prime = u.iter().map(|u| -3.0 * u).collect();
        let profile = RadialProfile { model, t, u, u_prime, t0: 1.0, t_switch: None };
        let fit = extract_decay(&profile, (1.2, 2.5)).unwrap();
        assert_relative_eq!(fit.rate, 3.0, max_relative = 1e-12);
        assert_relative_eq!(fit.ratio, 3.0, max_relative = 1e-12);
        assert!(fit.linear_regime);
        assert!(extract_decay(&profile, (0.0, 2.0)).is_err());
        assert!(extract_decay(&profile, (1.5, 1.505)).is_err());
    }

    #[test]
    fn decay_rates_match_sharp_exponent() {
        for (n, m) in [(1u32, 1.0), (2, 1.0)] {
            let model = critical(n, m);
            let profile = solve_radial(&model, None, 30.0, DEFAULT_STEP).unwrap();
            let window = magnitude_window(&profile, 1e-6, 1e-2).unwrap();
            let fit = extract_decay(&profile, window).unwrap();
            let kappa = (2.0 * n as f64 * m).sqrt();
            assert_relative_eq!(fit.rate, kappa, max_relative = 0.02);
            assert_relative_eq!(fit.ratio, kappa, max_relative = 0.02);
        }
    }

    #[test]
    fn second_order_system_agrees_before_the_tail() {
        let model = critical(1, 1.0);
        let profile = solve_radial(&model, None, 20.0, DEFAULT_STEP).unwrap();
        let start = profile.t.iter().position(|&t| t == profile.t0).unwrap();
        assert!(second_order_agreement(&profile, start, 6.0) < 1e-9);
    }

    #[test]
    fn calibrated_scale_matches_helper() {
        assert_eq!(critical(3, 0.5).g0(), calibrate_g0(3, 0.5).unwrap());
    }
}
