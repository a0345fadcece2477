//! Problem definition: `Δ^m u = σ e^u` in `R^N` with radial data `Δ^k u(0) = a_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{self, EvenPolynomial};
use crate::scalar::{from_usize, lit, Real};

/// Sign `σ` of the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    /// `Δ^m u = e^u`.
    #[serde(rename = "+1")]
    Plus,
    /// `Δ^m u = −e^u`.
    #[serde(rename = "-1")]
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" | "plus" => Ok(Sign::Plus),
            "-1" | "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::InvalidSpec(format!("sign must be +1 or -1, got {other:?}"))),
        }
    }
}

/// Accepts `1`, `-1` or any string [`Sign::from_str`] takes.
impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(1) => Ok(Sign::Plus),
            Raw::Int(-1) => Ok(Sign::Minus),
            Raw::Int(other) => Err(serde::de::Error::custom(format!("sign must be +1 or -1, got {other}"))),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Radial initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    m: usize,
    dim: usize,
    sign: Sign,
    a: Vec<T>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(m: usize, dim: usize, sign: Sign, a: Vec<T>) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSpec(format!("order m must be >= 2, got {m}")));
        }
        if dim < 3 {
            return Err(Error::InvalidSpec(format!("dimension N must be >= 3, got {dim}")));
        }
        if a.len() != m {
            return Err(Error::InvalidSpec(format!(
                "expected {m} initial values, got {}",
                a.len()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("initial data must be finite".into()));
        }
        Ok(Self { m, dim, sign, a })
    }

    /// Conformal dimension `N = 2m`.
    pub fn conformal(m: usize, sign: Sign, a: Vec<T>) -> Result<Self> {
        Self::new(m, 2 * m, sign, a)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// `a_k = Δ^k u(0)`.
    pub fn data(&self) -> &[T] {
        &self.a
    }

    /// Same problem with different initial data.
    pub fn with_data(&self, a: Vec<T>) -> Result<Self> {
        Self::new(self.m, self.dim, self.sign, a)
    }

    /// `Δ^{m−2} u(0) = 0`, the slice on which volumes are finite and continuous.
    pub fn in_sigma0(&self) -> bool {
        self.a[self.m - 2] == T::zero()
    }

    /// Even polynomial with the same data at the origin.
    pub fn matching_polynomial(&self) -> EvenPolynomial<T> {
        poly::matching_polynomial_for(&self.a, self.dim)
    }
}

/// Step-size and classification controls for [`crate::integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorControls<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub h_init: T,
    pub h_min: T,
    pub h_max: T,
    /// `w0 ≥ u_blow` classifies the run as blow-up.
    pub u_blow: T,
    /// `exp(w0)` is taken to be exactly zero below this.
    pub u_underflow: T,
    pub r_max: T,
}

impl<T: Real> Default for IntegratorControls<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        let rel_tol = lit::<T>(1e-10).max(eps * lit(1e3));
        let abs_tol = lit::<T>(1e-12).max(eps * lit(10.0));
        // ln of the smallest subnormal, rounded down: -745 for f64.
        let u_underflow = (T::min_positive_value() * eps).ln().floor();
        Self {
            rel_tol,
            abs_tol,
            h_init: lit(1e-3),
            h_min: lit::<T>(1e-12).max(eps * lit(16.0)),
            h_max: lit(0.5),
            u_blow: lit(50.0),
            u_underflow,
            r_max: lit(100.0),
        }
    }
}

impl<T: Real> IntegratorControls<T> {
    pub fn with_r_max(mut self, r_max: T) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: T, abs_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: T| x.is_finite() && x > T::zero();
        if !pos(self.rel_tol) || !pos(self.abs_tol) {
            return Err(Error::InvalidControls("tolerances must be positive".into()));
        }
        if !(pos(self.h_min) && self.h_min < self.h_init && self.h_init <= self.h_max) {
            return Err(Error::InvalidControls(
                "step bounds must satisfy 0 < h_min < h_init <= h_max".into(),
            ));
        }
        if !(self.u_underflow < T::zero() && T::zero() < self.u_blow) {
            return Err(Error::InvalidControls(
                "thresholds must satisfy u_underflow < 0 < u_blow".into(),
            ));
        }
        if !pos(self.r_max) {
            return Err(Error::InvalidControls("r_max must be positive".into()));
        }
        Ok(())
    }
}

/// Area `ω_{N−1} = 2π^{N/2}/Γ(N/2)` of the unit sphere `S^{N−1}`.
pub fn sphere_area<T: Real>(dim: usize) -> T {
    assert!(dim >= 1, "dimension must be positive");
    // ω_{N+1} = 2π/N · ω_{N−1}
    let two_pi = T::PI() + T::PI();
    let (mut area, mut n) = if dim % 2 == 0 {
        (two_pi, 2)
    } else {
        (lit(2.0), 1)
    };
    while n < dim {
        area = area * two_pi / from_usize(n);
        n += 2;
    }
    area
}

/// `Δ^k u(0)` for the spherical solution `u = 2m ln(2/(1+r²)) + ln (2m)!` in `R^{2m}`.
///
/// Only even `m` gives `Δ^m u = +e^u`; for odd `m` the sign flips.
pub fn spherical_spec<T: Real>(m: usize) -> Result<ProblemSpec<T>> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::Unsupported(format!(
            "spherical data solves Δ^m u = e^u only for even m >= 2, got m = {m}"
        )));
    }
    let dim = 2 * m;
    let two_m: T = from_usize(2 * m);
    let ln_fact = (1..=2 * m).fold(T::zero(), |acc, k| acc + from_usize::<T>(k).ln());
    let mut a = Vec::with_capacity(m);
    a.push(ln_fact + two_m * lit::<T>(2.0).ln());
    for k in 1..m {
        // r^{2k} coefficient of −2m ln(1+r²) is 2m(−1)^k/k.
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        let coeff = two_m * sign / from_usize(k);
        a.push(coeff * poly::monomial_laplacian_constant::<T>(k, dim));
    }
    ProblemSpec::new(m, dim, Sign::Plus, a)
}

/// Closed form of the spherical solution.
pub fn spherical_solution<T: Real>(m: usize, r: T) -> T {
    let two_m: T = from_usize(2 * m);
    let ln_fact = (1..=2 * m).fold(T::zero(), |acc, k| acc + from_usize::<T>(k).ln());
    two_m * (lit::<T>(2.0) / (T::one() + r * r)).ln() + ln_fact
}

/// `Δ^{m−1} r^{2m−2}` in `R^N` (equals `c0(m)` when `N = 2m`).
pub fn branch_top<T: Real>(m: usize, dim: usize) -> T {
    poly::monomial_laplacian_constant::<T>(m - 1, dim)
}

/// Data `(−b, 0, …, 0, ±c0)` of the two special branches.
pub fn branch_data<T: Real>(m: usize, dim: usize, b: T, top_sign: Sign) -> Vec<T> {
    let mut a = vec![T::zero(); m];
    a[0] = -b;
    a[m - 1] = top_sign.value::<T>() * branch_top::<T>(m, dim);
    a
}

/// Radial state at radius `r`: `w_k = Δ^k u(r)` and `dw_k = (Δ^k u)'(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState<T> {
    pub r: T,
    pub w: Vec<T>,
    pub dw: Vec<T>,
}

impl<T: Real> RadialState<T> {
    pub fn initial(spec: &ProblemSpec<T>) -> Self {
        Self {
            r: T::zero(),
            w: spec.data().to_vec(),
            dw: vec![T::zero(); spec.m()],
        }
    }

    /// `u(r)`.
    pub fn u(&self) -> T {
        self.w[0]
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite()
            && self.w.iter().all(|x| x.is_finite())
            && self.dw.iter().all(|x| x.is_finite())
    }

    pub(crate) fn from_flat(r: T, y: &[T]) -> Self {
        let m = y.len() / 2;
        Self {
            r,
            w: y[..m].to_vec(),
            dw: y[m..].to_vec(),
        }
    }

    pub(crate) fn flat(&self) -> Vec<T> {
        self.w.iter().chain(self.dw.iter()).copied().collect()
    }
}
