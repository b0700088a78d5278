//! Linear solves for the shifted five-point operator `(Δ_h - K)` with Dirichlet
//! data, by conjugate gradients preconditioned with a geometric multigrid
//! V-cycle (damped Jacobi smoothing, full weighting, bilinear prolongation).
//!
//! `K >= 0` is a nodewise shift, so `-(Δ_h - K)` is symmetric positive definite
//! on the interior unknowns.

use thiserror::Error;

const JACOBI_WEIGHT: f64 = 0.8;
const SWEEPS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearError {
    #[error("conjugate gradients stalled after {iterations} iterations at residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("non-finite value in linear solve")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearStats {
    pub iterations: usize,
    pub residual: f64,
}

struct Level {
    n: usize,
    inv_h2: f64,
    shift: Vec<f64>,
}

impl Level {
    /// `y = A x` with `A = -(Δ_h - K)`, zero Dirichlet data, interior only.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = j * n + i;
                y[k] = (4.0 * x[k] - x[k - 1] - x[k + 1] - x[k - n] - x[k + n]) * self.inv_h2
                    + self.shift[k] * x[k];
            }
        }
    }

    fn diag(&self, k: usize) -> f64 {
        4.0 * self.inv_h2 + self.shift[k]
    }

    fn jacobi(&self, z: &mut [f64], f: &[f64], scratch: &mut [f64]) {
        self.apply(z, scratch);
        let n = self.n;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = j * n + i;
                z[k] += JACOBI_WEIGHT * (f[k] - scratch[k]) / self.diag(k);
            }
        }
    }

    fn coarsen(&self) -> Option<Level> {
        if self.n <= 5 || !(self.n - 1).is_multiple_of(2) {
            return None;
        }
        let nc = (self.n - 1) / 2 + 1;
        let mut shift = vec![0.0; nc * nc];
        restrict(&self.shift, self.n, &mut shift, nc);
        Some(Level { n: nc, inv_h2: self.inv_h2 / 4.0, shift })
    }
}

/// Full weighting onto interior coarse nodes.
fn restrict(fine: &[f64], nf: usize, coarse: &mut [f64], nc: usize) {
    for jc in 1..nc - 1 {
        for ic in 1..nc - 1 {
            let k = 2 * jc * nf + 2 * ic;
            coarse[jc * nc + ic] = (4.0 * fine[k]
                + 2.0 * (fine[k - 1] + fine[k + 1] + fine[k - nf] + fine[k + nf])
                + fine[k - nf - 1]
                + fine[k - nf + 1]
                + fine[k + nf - 1]
                + fine[k + nf + 1])
                / 16.0;
        }
    }
}

/// Bilinear interpolation, added onto interior fine nodes.
fn prolong_add(coarse: &[f64], nc: usize, fine: &mut [f64], nf: usize) {
    for j in 1..nf - 1 {
        for i in 1..nf - 1 {
            let (jc, jr) = (j / 2, j % 2);
            let (ic, ir) = (i / 2, i % 2);
            let c = |a: usize, b: usize| coarse[b * nc + a];
            let v = match (ir, jr) {
                (0, 0) => c(ic, jc),
                (1, 0) => 0.5 * (c(ic, jc) + c(ic + 1, jc)),
                (0, 1) => 0.5 * (c(ic, jc) + c(ic, jc + 1)),
                _ => 0.25 * (c(ic, jc) + c(ic + 1, jc) + c(ic, jc + 1) + c(ic + 1, jc + 1)),
            };
            fine[j * nf + i] += v;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Multilevel hierarchy for one shift field.
pub struct ShiftedLaplacian {
    levels: Vec<Level>,
}

impl ShiftedLaplacian {
    /// `shift` holds `K` per node in the grid's flat layout; boundary entries are ignored.
    pub fn new(n: usize, spacing: f64, shift: Vec<f64>) -> Self {
        debug_assert_eq!(shift.len(), n * n);
        let mut levels = vec![Level { n, inv_h2: 1.0 / (spacing * spacing), shift }];
        while let Some(next) = levels.last().and_then(Level::coarsen) {
            levels.push(next);
        }
        Self { levels }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Solves `(Δ_h - K) x = b` at interior nodes, keeping the boundary
    /// entries of `x` as Dirichlet data. Stops once the max-norm of
    /// `b - (Δ_h - K)x` is at most `tol`.
    pub fn solve(&self, x: &mut [f64], b: &[f64], tol: f64, max_iter: usize) -> Result<LinearStats, LinearError> {
        let top = &self.levels[0];
        let n = top.n;
        let len = n * n;
        // residual r = b - (Δ_h - K)x, including boundary data
        let mut r = vec![0.0; len];
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = j * n + i;
                let lap = (x[k - 1] + x[k + 1] + x[k - n] + x[k + n] - 4.0 * x[k]) * top.inv_h2;
                r[k] = b[k] - (lap - top.shift[k] * x[k]);
            }
        }
        // A e = -r, e = 0 on the boundary; track s = -r - A e
        let mut s: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut e = vec![0.0; len];
        let mut z = vec![0.0; len];
        let mut q = vec![0.0; len];
        let mut res = max_abs(&s);
        if !res.is_finite() {
            return Err(LinearError::NonFinite);
        }
        let mut iterations = 0;
        if res > tol {
            self.precondition(&s, &mut z);
            let mut p = z.clone();
            let mut rz = dot(&s, &z);
            loop {
                iterations += 1;
                top.apply(&p, &mut q);
                let alpha = rz / dot(&p, &q);
                for k in 0..len {
                    e[k] += alpha * p[k];
                    s[k] -= alpha * q[k];
                }
                res = max_abs(&s);
                if !res.is_finite() {
                    return Err(LinearError::NonFinite);
                }
                if res <= tol {
                    break;
                }
                if iterations >= max_iter {
                    return Err(LinearError::NoConvergence { iterations, residual: res });
                }
                self.precondition(&s, &mut z);
                let rz_new = dot(&s, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for k in 0..len {
                    p[k] = z[k] + beta * p[k];
                }
            }
        }
        for k in 0..len {
            x[k] += e[k];
        }
        Ok(LinearStats { iterations, residual: res })
    }

    fn precondition(&self, f: &[f64], z: &mut [f64]) {
        if self.levels.len() == 1 {
            let top = &self.levels[0];
            let n = top.n;
            for j in 1..n - 1 {
                for i in 1..n - 1 {
                    let k = j * n + i;
                    z[k] = f[k] / top.diag(k);
                }
            }
            return;
        }
        z.iter_mut().for_each(|v| *v = 0.0);
        self.v_cycle(0, f, z);
    }

    fn v_cycle(&self, l: usize, f: &[f64], z: &mut [f64]) {
        let level = &self.levels[l];
        let n = level.n;
        if l + 1 == self.levels.len() {
            coarse_solve(level, f, z);
            return;
        }
        let mut scratch = vec![0.0; n * n];
        for _ in 0..SWEEPS {
            level.jacobi(z, f, &mut scratch);
        }
        level.apply(z, &mut scratch);
        let resid: Vec<f64> = f.iter().zip(&scratch).map(|(a, b)| a - b).collect();
        let coarse = &self.levels[l + 1];
        let nc = coarse.n;
        let mut fc = vec![0.0; nc * nc];
        restrict(&resid, n, &mut fc, nc);
        let mut zc = vec![0.0; nc * nc];
        self.v_cycle(l + 1, &fc, &mut zc);
        prolong_add(&zc, nc, z, n);
        for _ in 0..SWEEPS {
            level.jacobi(z, f, &mut scratch);
        }
    }
}

/// Plain conjugate gradients to near machine precision on the coarsest level.
fn coarse_solve(level: &Level, f: &[f64], z: &mut [f64]) {
    let len = level.n * level.n;
    z.iter_mut().for_each(|v| *v = 0.0);
    let mut r = f.to_vec();
    let scale = max_abs(&r);
    if scale == 0.0 {
        return;
    }
    let mut p = r.clone();
    let mut q = vec![0.0; len];
    let mut rr = dot(&r, &r);
    let cap = 4 * len + 20;
    for _ in 0..cap {
        level.apply(&p, &mut q);
        let alpha = rr / dot(&p, &q);
        for k in 0..len {
            z[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= 1e-14 * scale {
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..len {
            p[k] = r[k] + beta * p[k];
        }
    }
}
