//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::scalar::{lit, Real};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Subinterval budget for [`adaptive`].
const MAX_INTERVALS: usize = 400;

/// Integral estimate and absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
}

impl<T: Real> QuadResult<T> {
    pub fn zero() -> Self {
        Self { value: T::zero(), error: T::zero() }
    }
}

impl<T: Real> std::ops::Add for QuadResult<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

/// Single 15-point Kronrod rule with the embedded 7-point Gauss difference as error.
pub fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> QuadResult<T> {
    let half = (b - a) / lit(2.0);
    let center = a + half;
    let fc = f(center);
    let mut kronrod = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = half * lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * lit(WG[j / 2]);
        }
    }
    QuadResult {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive bisection: the interval with the largest error estimate
/// is split until `error ≤ max(rel_tol·|value|, abs_tol)` or the budget runs out.
pub fn adaptive<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, rel_tol: T, abs_tol: T) -> QuadResult<T> {
    if b <= a {
        return QuadResult::zero();
    }
    let first = gk15(f, a, b);
    let mut parts = vec![(a, b, first)];
    let mut total = first;
    while parts.len() < MAX_INTERVALS {
        if !total.value.is_finite() || total.error <= (rel_tol * total.value.abs()).max(abs_tol) {
            break;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, p)| if p.2.error > best.1 { (i, p.2.error) } else { best });
        let (lo, hi, whole) = parts[worst];
        let mid = lo + (hi - lo) / lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let left = gk15(f, lo, mid);
        let right = gk15(f, mid, hi);
        parts[worst] = (lo, mid, left);
        parts.push((mid, hi, right));
        total = QuadResult {
            value: total.value - whole.value + left.value + right.value,
            error: total.error - whole.error + left.error + right.error,
        };
    }
    // re-sum to avoid drift from the running updates
    parts.iter().fold(QuadResult::zero(), |acc, p| acc + p.2)
}
