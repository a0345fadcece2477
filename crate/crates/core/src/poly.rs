//! Exact Laplacian calculus on radial even polynomials `Σ α_j r^{2j}`.
//!
//! Everything here is generic over any numeric field (`f64`, or an exact
//! rational such as [`num_rational::Rational64`]), so identities like the
//! value of `c0` can be checked without rounding.

use std::ops::{Add, Mul, Neg};

use num_traits::{FromPrimitive, Num};

/// Radial even polynomial `Φ(r) = Σ_j coeffs[j] · r^{2j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenPolynomial<S> {
    coeffs: Vec<S>,
}

#[inline]
fn num<S: FromPrimitive>(n: usize) -> S {
    S::from_usize(n).expect("integer representable in coefficient type")
}

impl<S> EvenPolynomial<S>
where
    S: Clone + Num + FromPrimitive,
{
    pub fn new(coeffs: Vec<S>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: S) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c · r^{2j}`.
    pub fn monomial(j: usize, c: S) -> Self {
        let mut coeffs = vec![S::zero(); j + 1];
        coeffs[j] = c;
        Self::new(coeffs)
    }

    /// Coefficients of `r^0, r^2, r^4, ...`; trailing zeros are trimmed.
    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Coefficient of `r^{2j}` (zero past the end).
    pub fn coeff(&self, j: usize) -> S {
        self.coeffs.get(j).cloned().unwrap_or_else(S::zero)
    }

    /// Degree in `r` (so always even); `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(2 * (self.coeffs.len() - 1))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation in `r²`.
    pub fn eval(&self, r: S) -> S {
        let r2 = r.clone() * r;
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * r2.clone() + c.clone())
    }

    /// Value at the origin.
    pub fn at_origin(&self) -> S {
        self.coeff(0)
    }

    /// Radial derivative `dΦ/dr`, returned as `Σ β_j r^{2j+1}` coefficients `β_j`.
    pub fn radial_derivative_odd(&self) -> Vec<S> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c.clone() * num::<S>(2 * j))
            .collect()
    }

    /// Evaluates `dΦ/dr` at `r`.
    pub fn eval_derivative(&self, r: S) -> S {
        let odd = self.radial_derivative_odd();
        let r2 = r.clone() * r.clone();
        let inner = odd
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * r2.clone() + c.clone());
        inner * r
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }
}

impl<S> EvenPolynomial<S>
where
    S: Clone + Num + FromPrimitive,
{
    /// Maps coefficients into another field.
    pub fn map<U, F>(&self, f: F) -> EvenPolynomial<U>
    where
        U: Clone + Num + FromPrimitive,
        F: Fn(&S) -> U,
    {
        EvenPolynomial::new(self.coeffs.iter().map(f).collect())
    }
}

impl<S> Add for &EvenPolynomial<S>
where
    S: Clone + Num + FromPrimitive,
{
    type Output = EvenPolynomial<S>;

    fn add(self, rhs: Self) -> EvenPolynomial<S> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        EvenPolynomial::new((0..n).map(|j| self.coeff(j) + rhs.coeff(j)).collect())
    }
}

impl<S> Mul<S> for &EvenPolynomial<S>
where
    S: Clone + Num + FromPrimitive,
{
    type Output = EvenPolynomial<S>;

    fn mul(self, rhs: S) -> EvenPolynomial<S> {
        EvenPolynomial::new(self.coeffs.iter().map(|c| c.clone() * rhs.clone()).collect())
    }
}

impl<S> Neg for &EvenPolynomial<S>
where
    S: Clone + Num + FromPrimitive + Neg<Output = S>,
{
    type Output = EvenPolynomial<S>;

    fn neg(self) -> EvenPolynomial<S> {
        EvenPolynomial::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

/// Radial Laplacian in `R^N`, using `Δ r^{2j} = 2j(2j+N−2) r^{2j−2}`.
pub fn laplacian_of_even_poly<S>(p: &EvenPolynomial<S>, dim: usize) -> EvenPolynomial<S>
where
    S: Clone + Num + FromPrimitive,
{
    let coeffs = p
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| c.clone() * num::<S>(2 * j * (2 * j + dim - 2)))
        .collect();
    EvenPolynomial::new(coeffs)
}

/// `Δ^k p`.
pub fn iterated_laplacian<S>(p: &EvenPolynomial<S>, dim: usize, k: usize) -> EvenPolynomial<S>
where
    S: Clone + Num + FromPrimitive,
{
    (0..k).fold(p.clone(), |acc, _| laplacian_of_even_poly(&acc, dim))
}

/// `Δ^j r^{2j}` in `R^N`, i.e. `∏_{k=1}^{j} 2k(2k+N−2)`.
pub fn monomial_laplacian_constant<S>(j: usize, dim: usize) -> S
where
    S: Clone + Num + FromPrimitive,
{
    (1..=j).fold(S::one(), |acc, k| acc * num::<S>(2 * k * (2 * k + dim - 2)))
}

/// `c0(m) = 4^{m−1} ∏_{k=1}^{m−1} k(m−1+k)`, the constant `Δ^{m−1} r^{2m−2}` in `R^{2m}`.
pub fn c0<S>(m: usize) -> S
where
    S: Clone + Num + FromPrimitive,
{
    assert!(m >= 2, "c0 is defined for m >= 2");
    let four: S = num(4);
    (1..m).fold(S::one(), |acc, k| {
        acc * four.clone() * num::<S>(k) * num::<S>(m - 1 + k)
    })
}

/// The even polynomial of degree `< 2m` with `Δ^i Φ(0) = a_i` for `0 ≤ i < m`.
///
/// `Δ^i r^{2j}` vanishes at the origin unless `i = j`, so the system is
/// diagonal: `α_j = a_j / Δ^j r^{2j}`.
pub fn matching_polynomial_for<S>(a: &[S], dim: usize) -> EvenPolynomial<S>
where
    S: Clone + Num + FromPrimitive,
{
    let coeffs = a
        .iter()
        .enumerate()
        .map(|(j, aj)| aj.clone() / monomial_laplacian_constant::<S>(j, dim))
        .collect();
    EvenPolynomial::new(coeffs)
}
