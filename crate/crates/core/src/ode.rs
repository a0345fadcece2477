//! First-order radial system and its adaptive integration from `r = 0`.
//!
//! State is `(w_0..w_{m−1}, dw_0..dw_{m−1})` with `w_k = Δ^k u` and
//! `dw_k = w_k'`. The radial Laplacian `w'' + (N−1)/r · w'` gives
//!
//! ```text
//! w_k'  = dw_k
//! dw_k' = f_k − (N−1)/r · dw_k,   f_k = w_{k+1} (k < m−1),  f_{m−1} = σ e^{w_0}
//! ```
//!
//! and at the origin `dw_k' = f_k / N`.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::io::sig17;
use crate::problem::{IntegratorControls, ProblemSpec, RadialState, Sign};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Below this radius the `(N−1)/r` term is replaced by its limit.
const R_ORIGIN: f64 = 1e-12;
const MAX_STEPS: usize = 2_000_000;
/// Accepted steps inspected when classifying a step-size collapse.
const BLOWUP_WINDOW: usize = 10;

/// How an integration run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<T> {
    /// Reached `r_max`.
    GlobalToRmax(T),
    /// `w_0` crossed `u_blow`, or the step collapsed while `w_0` was rising.
    BlowUp(T),
    /// Step collapse that does not look like blow-up.
    StepUnderflow(T),
}

impl<T: Real> Outcome<T> {
    pub fn radius(&self) -> T {
        match *self {
            Outcome::GlobalToRmax(r) | Outcome::BlowUp(r) | Outcome::StepUnderflow(r) => r,
        }
    }

    pub fn is_global(&self) -> bool {
        matches!(self, Outcome::GlobalToRmax(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::GlobalToRmax(_) => "GlobalToRmax",
            Outcome::BlowUp(_) => "BlowUp",
            Outcome::StepUnderflow(_) => "StepUnderflow",
        }
    }
}

/// Source term `σ e^{w0}`, exactly zero below the underflow cut-off.
#[inline]
pub fn source<T: Real>(sign: Sign, w0: T, u_underflow: T) -> T {
    if w0 < u_underflow {
        T::zero()
    } else {
        sign.value::<T>() * w0.exp()
    }
}

struct System<T> {
    m: usize,
    sign: Sign,
    n_minus_1: T,
    inv_dim: T,
    u_underflow: T,
}

impl<T: Real> System<T> {
    fn new(spec: &ProblemSpec<T>, u_underflow: T) -> Self {
        Self {
            m: spec.m(),
            sign: spec.sign(),
            n_minus_1: from_usize(spec.dim() - 1),
            inv_dim: T::one() / from_usize(spec.dim()),
            u_underflow,
        }
    }

    fn eval(&self, r: T, y: &[T], out: &mut [T]) {
        let m = self.m;
        let (w, dw) = y.split_at(m);
        let (dw_out, ddw_out) = out.split_at_mut(m);
        dw_out.copy_from_slice(dw);
        let at_origin = r < lit(R_ORIGIN);
        for k in 0..m {
            let f = if k + 1 < m {
                w[k + 1]
            } else {
                source(self.sign, w[0], self.u_underflow)
            };
            ddw_out[k] = if at_origin {
                f * self.inv_dim
            } else {
                f - self.n_minus_1 / r * dw[k]
            };
        }
    }
}

/// Radial derivative of `(w, dw)` at `state`, with the default underflow cut-off.
pub fn reduce_rhs<T: Real>(state: &RadialState<T>, spec: &ProblemSpec<T>) -> Vec<T> {
    reduce_rhs_with(state, spec, IntegratorControls::<T>::default().u_underflow)
}

pub fn reduce_rhs_with<T: Real>(state: &RadialState<T>, spec: &ProblemSpec<T>, u_underflow: T) -> Vec<T> {
    let sys = System::new(spec, u_underflow);
    let y = state.flat();
    let mut out = vec![T::zero(); y.len()];
    sys.eval(state.r, &y, &mut out);
    out
}

/// Dormand–Prince continuous extension on one accepted step.
#[derive(Debug, Clone)]
struct DenseSegment<T> {
    r0: T,
    h: T,
    /// Five blocks of length `2m`.
    coeffs: Vec<T>,
}

impl<T: Real> DenseSegment<T> {
    fn component(&self, r: T, idx: usize, n: usize) -> T {
        let theta = (r - self.r0) / self.h;
        let theta1 = T::one() - theta;
        let c = |j: usize| self.coeffs[j * n + idx];
        c(0) + theta * (c(1) + theta1 * (c(2) + theta * (c(3) + theta1 * c(4))))
    }
}

/// Integrated solution with dense output and outcome classification.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    spec: ProblemSpec<T>,
    controls: IntegratorControls<T>,
    nodes: Vec<RadialState<T>>,
    segments: Vec<DenseSegment<T>>,
    outcome: Outcome<T>,
    rejected: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn spec(&self) -> &ProblemSpec<T> {
        &self.spec
    }

    pub fn controls(&self) -> &IntegratorControls<T> {
        &self.controls
    }

    pub fn nodes(&self) -> &[RadialState<T>] {
        &self.nodes
    }

    pub fn outcome(&self) -> Outcome<T> {
        self.outcome
    }

    pub fn last(&self) -> &RadialState<T> {
        self.nodes.last().expect("trajectory has at least the initial node")
    }

    /// Radius of the last node.
    pub fn r_end(&self) -> T {
        self.last().r
    }

    pub fn accepted_steps(&self) -> usize {
        self.segments.len()
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Index of the segment containing `r`.
    fn segment_index(&self, r: T) -> usize {
        let idx = self.nodes.partition_point(|n| n.r <= r);
        idx.saturating_sub(1).min(self.segments.len().saturating_sub(1))
    }

    fn check_range(&self, r: T) -> Result<()> {
        if !(r >= T::zero() && r <= self.r_end()) {
            return Err(Error::OutOfRange {
                r: to_f64(r),
                r_end: to_f64(self.r_end()),
            });
        }
        Ok(())
    }

    /// Component `idx` of the flat state (`w_k` for `k < m`, `dw_{k−m}` otherwise) at `r`.
    pub fn component_at(&self, r: T, idx: usize) -> Result<T> {
        self.check_range(r)?;
        Ok(self.component_unchecked(r, idx))
    }

    pub(crate) fn component_unchecked(&self, r: T, idx: usize) -> T {
        if self.segments.is_empty() {
            return self.nodes[0].flat()[idx];
        }
        let i = self.segment_index(r);
        let m = self.spec.m();
        if self.nodes[i].r == r {
            let n = &self.nodes[i];
            return if idx < m { n.w[idx] } else { n.dw[idx - m] };
        }
        self.segments[i].component(r, idx, 2 * m)
    }

    /// `u(r)` from dense output.
    pub fn u_at(&self, r: T) -> Result<T> {
        self.component_at(r, 0)
    }

    pub(crate) fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Dense output of component `idx` on segment `i` (no range check).
    pub(crate) fn segment_component(&self, i: usize, r: T, idx: usize) -> T {
        self.segments[i].component(r, idx, 2 * self.spec.m())
    }

    /// Full interpolated state at `r`.
    pub fn state_at(&self, r: T) -> Result<RadialState<T>> {
        self.check_range(r)?;
        let n = 2 * self.spec.m();
        let y: Vec<T> = (0..n).map(|i| self.component_unchecked(r, i)).collect();
        Ok(RadialState::from_flat(r, &y))
    }

    /// Writes `r,w0..,dw0..,source` with one row per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let m = self.spec.m();
        let mut header = vec!["r".to_string()];
        header.extend((0..m).map(|k| format!("w{k}")));
        header.extend((0..m).map(|k| format!("dw{k}")));
        header.push("source".into());
        writeln!(out, "{}", header.join(","))?;
        for node in &self.nodes {
            let src = source(self.spec.sign(), node.w[0], self.controls.u_underflow);
            let row: Vec<String> = std::iter::once(node.r)
                .chain(node.w.iter().copied())
                .chain(node.dw.iter().copied())
                .chain(std::iter::once(src))
                .map(sig17)
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }
}

struct Tableau<T> {
    c: [T; 7],
    a: [[T; 6]; 7],
    e: [T; 7],
    d: [T; 7],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        let z = T::zero();
        Self {
            c: [z, lit(0.2), lit(0.3), lit(0.8), lit(8.0 / 9.0), T::one(), T::one()],
            a: [
                [z; 6],
                [lit(0.2), z, z, z, z, z],
                [lit(3.0 / 40.0), lit(9.0 / 40.0), z, z, z, z],
                [lit(44.0 / 45.0), lit(-56.0 / 15.0), lit(32.0 / 9.0), z, z, z],
                [
                    lit(19372.0 / 6561.0),
                    lit(-25360.0 / 2187.0),
                    lit(64448.0 / 6561.0),
                    lit(-212.0 / 729.0),
                    z,
                    z,
                ],
                [
                    lit(9017.0 / 3168.0),
                    lit(-355.0 / 33.0),
                    lit(46732.0 / 5247.0),
                    lit(49.0 / 176.0),
                    lit(-5103.0 / 18656.0),
                    z,
                ],
                [
                    lit(35.0 / 384.0),
                    z,
                    lit(500.0 / 1113.0),
                    lit(125.0 / 192.0),
                    lit(-2187.0 / 6784.0),
                    lit(11.0 / 84.0),
                ],
            ],
            e: [
                lit(71.0 / 57600.0),
                z,
                lit(-71.0 / 16695.0),
                lit(71.0 / 1920.0),
                lit(-17253.0 / 339200.0),
                lit(22.0 / 525.0),
                lit(-1.0 / 40.0),
            ],
            d: [
                lit(-12715105075.0 / 11282082432.0),
                z,
                lit(87487479700.0 / 32700410799.0),
                lit(-10690763975.0 / 1880347072.0),
                lit(701980252875.0 / 199316789632.0),
                lit(-1453857185.0 / 822651844.0),
                lit(69997945.0 / 29380423.0),
            ],
        }
    }
}

/// Integrates the radial system from `r = 0` to `controls.r_max`.
///
/// Dormand–Prince 5(4) with PI step control; every accepted step is kept
/// together with its dense-output polynomial.
pub fn integrate<T: Real>(spec: &ProblemSpec<T>, controls: &IntegratorControls<T>) -> Result<Trajectory<T>> {
    controls.validate()?;
    let sys = System::new(spec, controls.u_underflow);
    let tab = Tableau::<T>::new();
    let n = 2 * spec.m();
    let r_max = controls.r_max;

    let safe = lit::<T>(0.9);
    let facc1 = lit::<T>(5.0);
    let facc2 = lit::<T>(0.1);
    let beta = lit::<T>(0.04);
    let expo1 = lit::<T>(0.2) - beta * lit(0.75);

    let initial = RadialState::initial(spec);
    let mut y = initial.flat();
    let mut r = T::zero();
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    sys.eval(r, &y, &mut k[0]);
    let mut stage = vec![T::zero(); n];
    let mut y1 = vec![T::zero(); n];

    let mut nodes = vec![initial];
    let mut segments: Vec<DenseSegment<T>> = Vec::new();
    let mut h = controls.h_init.min(controls.h_max).min(r_max);
    let mut facold = lit::<T>(1e-4);
    let mut last_rejected = false;
    let mut rejected = 0usize;

    let finish = |nodes: Vec<RadialState<T>>, segments, outcome, rejected| Trajectory {
        spec: spec.clone(),
        controls: *controls,
        nodes,
        segments,
        outcome,
        rejected,
    };

    loop {
        if r >= r_max {
            return Ok(finish(nodes, segments, Outcome::GlobalToRmax(r), rejected));
        }
        if segments.len() >= MAX_STEPS {
            return Ok(finish(nodes, segments, Outcome::StepUnderflow(r), rejected));
        }
        let mut last_step = false;
        if r + h * (T::one() + lit(1e-12)) >= r_max {
            h = r_max - r;
            last_step = true;
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc = acc + tab.a[s][j] * kj[i];
                }
                stage[i] = y[i] + h * acc;
            }
            let rs = if s >= 5 { r + h } else { r + tab.c[s] * h };
            if s == 6 {
                y1.copy_from_slice(&stage);
            }
            sys.eval(rs, &stage, &mut k[s]);
        }

        let mut err_sq = T::zero();
        for i in 0..n {
            let mut e = T::zero();
            for (j, kj) in k.iter().enumerate() {
                e = e + tab.e[j] * kj[i];
            }
            let sk = controls.abs_tol + controls.rel_tol * y[i].abs().max(y1[i].abs());
            let q = h * e / sk;
            err_sq = err_sq + q * q;
        }
        let err = (err_sq / from_usize(n)).sqrt();
        let finite = err.is_finite() && y1.iter().all(|v| v.is_finite()) && k[6].iter().all(|v| v.is_finite());

        if finite && err <= T::one() {
            // dense output
            let mut coeffs = vec![T::zero(); 5 * n];
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                coeffs[i] = y[i];
                coeffs[n + i] = ydiff;
                coeffs[2 * n + i] = bspl;
                coeffs[3 * n + i] = ydiff - h * k[6][i] - bspl;
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    acc = acc + tab.d[j] * kj[i];
                }
                coeffs[4 * n + i] = h * acc;
            }
            let seg = DenseSegment { r0: r, h, coeffs };
            let r_new = if last_step { r_max } else { r + h };

            let fac11 = err.powf(expo1);
            let fac = (fac11 / facold.powf(beta) / safe).min(facc1).max(facc2);
            let mut h_new = (h / fac).min(controls.h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            facold = err.max(lit(1e-4));
            last_rejected = false;

            y.copy_from_slice(&y1);
            let k_last = k[6].clone();
            k[0] = k_last;
            r = r_new;
            nodes.push(RadialState::from_flat(r, &y));
            segments.push(seg);

            if spec.sign() == Sign::Plus && y[0] >= controls.u_blow {
                let seg = segments.last().expect("just pushed");
                let r_star = crossing(seg, 0, n, controls.u_blow);
                return Ok(finish(nodes, segments, Outcome::BlowUp(r_star), rejected));
            }
            h = h_new;
        } else {
            rejected += 1;
            last_rejected = true;
            h = if finite {
                let fac11 = err.powf(expo1);
                h / facc1.min(fac11 / safe)
            } else {
                h * lit(0.1)
            };
            if h < controls.h_min {
                let outcome = if spec.sign() == Sign::Plus && rising(&nodes) {
                    Outcome::BlowUp(r)
                } else {
                    Outcome::StepUnderflow(r)
                };
                return Ok(finish(nodes, segments, outcome, rejected));
            }
        }
    }
}

/// `w_0` strictly increased across the last accepted steps.
fn rising<T: Real>(nodes: &[RadialState<T>]) -> bool {
    if nodes.len() < 2 {
        return false;
    }
    let start = nodes.len().saturating_sub(BLOWUP_WINDOW + 1);
    nodes[start..].windows(2).all(|p| p[1].w[0] > p[0].w[0])
}

/// First radius in the segment where component `idx` reaches `level` (bisection).
fn crossing<T: Real>(seg: &DenseSegment<T>, idx: usize, n: usize, level: T) -> T {
    let mut lo = seg.r0;
    let mut hi = seg.r0 + seg.h;
    if seg.component(lo, idx, n) >= level {
        return lo;
    }
    for _ in 0..200 {
        let mid = lo + (hi - lo) / lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if seg.component(mid, idx, n) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
