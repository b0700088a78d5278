//! The potential family `w(s) = 1 - s^m` and everything derived from it.
//!
//! A [`PotentialModel`] carries the string number `N`, the potential exponent
//! `m`, the gravitational coupling `a = 8πG` and the metric scale `g0`. From
//! these it evaluates the Higgs-sector couplings `w`, `f`, `g_int`, the radial
//! nonlinearity `h(U)` with its derivative, and the first integral `F(U)` of
//! the log-radius equation `U'' = h(U)`.

use thiserror::Error;

/// Tolerance used to decide whether `a·N` sits on the critical value 1.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("potential exponent m must be positive and finite, got {0}")]
    Exponent(f64),
    #[error("gravitational coupling a must be nonnegative and finite, got {0}")]
    Coupling(f64),
    #[error("coupling constant g0 must be positive and finite, got {0}")]
    Scale(f64),
    #[error("a·N = {0} exceeds 1: outside the existence regime 0 <= 8πG·N <= 1")]
    Regime(f64),
    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },
    #[error("first integral requires a > 0 (gravitational coupling); got a = 0")]
    FlatFirstIntegral,
    #[error("string number must be at least 1, got {0}")]
    StringNumber(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialModel {
    n: u32,
    m: f64,
    a: f64,
    g0: f64,
}

impl PotentialModel {
    /// Validates the parameters. `n = 0` is accepted for the trivial
    /// (string-free) configuration.
    pub fn new(n: u32, m: f64, a: f64, g0: f64) -> Result<Self, ModelError> {
        if !(m.is_finite() && m > 0.0) {
            return Err(ModelError::Exponent(m));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(ModelError::Coupling(a));
        }
        if !(g0.is_finite() && g0 > 0.0) {
            return Err(ModelError::Scale(g0));
        }
        let an = a * n as f64;
        if an > 1.0 + CRITICAL_TOL {
            return Err(ModelError::Regime(an));
        }
        Ok(Self { n, m, a, g0 })
    }

    /// Critical coupling `a = 1/N` with `g0` from [`calibrate_g0`].
    pub fn critical(n: u32, m: f64) -> Result<Self, ModelError> {
        let g0 = calibrate_g0(n, m)?;
        Self::new(n, m, 1.0 / n as f64, g0)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    /// Same parameters with a different metric scale.
    pub fn with_g0(&self, g0: f64) -> Result<Self, ModelError> {
        Self::new(self.n, self.m, self.a, g0)
    }

    /// `a·N`.
    pub fn coupling_product(&self) -> f64 {
        self.a * self.n as f64
    }

    pub fn is_critical(&self) -> bool {
        (self.coupling_product() - 1.0).abs() <= CRITICAL_TOL
    }

    pub fn w(&self, s: f64) -> Result<f64, ModelError> {
        if !(s >= 0.0) {
            return Err(ModelError::Domain { function: "w", value: s });
        }
        Ok(1.0 - s.powf(self.m))
    }

    /// `f(s) = (1 - w(s))/s = s^(m-1)`.
    pub fn f(&self, s: f64) -> Result<f64, ModelError> {
        if !(s > 0.0) {
            return Err(ModelError::Domain { function: "f", value: s });
        }
        Ok(s.powf(self.m - 1.0))
    }

    /// Antiderivative of `f` vanishing at zero: `s^m / m`.
    pub fn g_int(&self, s: f64) -> Result<f64, ModelError> {
        if !(s >= 0.0) {
            return Err(ModelError::Domain { function: "g_int", value: s });
        }
        Ok(s.powf(self.m) / self.m)
    }

    /// `h(U) = g0·exp(aU - (a/m)e^{mU})·(e^{mU} - 1)`.
    pub fn h(&self, u: f64) -> Result<f64, ModelError> {
        if !u.is_finite() {
            return Err(ModelError::Domain { function: "h", value: u });
        }
        Ok(self.h_unchecked(u))
    }

    /// Signed derivative `h'(U) = g0·e^{aU - (a/m)e^{mU}}·(m e^{mU} - a(e^{mU} - 1)²)`.
    pub fn h_prime(&self, u: f64) -> Result<f64, ModelError> {
        if !u.is_finite() {
            return Err(ModelError::Domain { function: "h_prime", value: u });
        }
        Ok(self.h_prime_unchecked(u))
    }

    /// `F(U) = 4N² - (2g0/a)·exp(a(U - e^{mU}/m))`, the conserved value of `(U')²`.
    pub fn first_integral(&self, u: f64) -> Result<f64, ModelError> {
        if self.a == 0.0 {
            return Err(ModelError::FlatFirstIntegral);
        }
        if !u.is_finite() {
            return Err(ModelError::Domain { function: "first_integral", value: u });
        }
        Ok(self.first_integral_unchecked(u))
    }

    #[inline]
    pub(crate) fn h_unchecked(&self, u: f64) -> f64 {
        let mu = self.m * u;
        if self.a > 0.0 && mu > OVERFLOW_CAP {
            // exp(-(a/m)e^{mU}) underflows long before e^{mU} overflows
            return 0.0;
        }
        let emu = mu.exp();
        self.g0 * (self.a * u - self.a / self.m * emu).exp() * mu.exp_m1()
    }

    #[inline]
    pub(crate) fn h_prime_unchecked(&self, u: f64) -> f64 {
        let mu = self.m * u;
        if self.a > 0.0 && mu > OVERFLOW_CAP {
            return 0.0;
        }
        let emu = mu.exp();
        let em1 = mu.exp_m1();
        self.g0
            * (self.a * u - self.a / self.m * emu).exp()
            * (self.m * emu - self.a * em1 * em1)
    }

    #[inline]
    pub(crate) fn first_integral_unchecked(&self, u: f64) -> f64 {
        let nn = self.n as f64;
        let four_n2 = 4.0 * nn * nn;
        if nn == 0.0 {
            return -2.0 * self.g0 / self.a * (self.a * (u - (self.m * u).exp() / self.m)).exp();
        }
        // 2g0/a · e^{a(U - e^{mU}/m)} = 4N² · exp(c + aU - (a/m)e^{mU}), c = ln(g0/(2aN²)).
        // Written around the calibrated value c = a/m so F(0) cancels cleanly.
        let c_offset = (self.g0 / (2.0 * self.a * nn * nn)).ln() - self.a / self.m;
        let mu = self.m * u;
        let exponent = c_offset - self.a / self.m * (mu.exp_m1() - mu);
        -four_n2 * exponent.exp_m1()
    }
}

/// Largest `m·U` for which `e^{mU}` is evaluated directly.
const OVERFLOW_CAP: f64 = 700.0;

/// `g0 = 2N·e^{1/(mN)}`, the unique scale making `U = 0` the equilibrium of the
/// critical first integral.
pub fn calibrate_g0(n: u32, m: f64) -> Result<f64, ModelError> {
    if n < 1 {
        return Err(ModelError::StringNumber(n));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(ModelError::Exponent(m));
    }
    let nn = n as f64;
    Ok(2.0 * nn * (1.0 / (m * nn)).exp())
}

/// Sharp far-field exponent `√(2Nm)` of the critical radial solution.
pub fn decay_exponent(n: u32, m: f64) -> Result<f64, ModelError> {
    if n < 1 {
        return Err(ModelError::StringNumber(n));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(ModelError::Exponent(m));
    }
    Ok((2.0 * n as f64 * m).sqrt())
}

/// Decay rate `√(g0·m)` of the linearized flat-space (`a = 0`) equation.
pub fn flat_decay_rate(model: &PotentialModel) -> f64 {
    (model.g0() * model.m()).sqrt()
}
