//! Conformal volume `V = ∫_{R^N} e^u dx = ω_{N−1} ∫_0^∞ r^{N−1} e^{u(r)} dr`.
//!
//! The integral is split at a radius `R`: `[0, R]` is integrated on the
//! integrator's dense output, `[R, ∞)` is bounded either by an explicit
//! polynomial envelope for `u` (σ = −1, `Δ^{m−1}u(R) < 0`) or, failing that,
//! by a fitted logarithmic decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::json_f64;
use crate::ode::{integrate, Outcome, Trajectory};
use crate::poly::EvenPolynomial;
use crate::problem::{sphere_area, IntegratorControls, ProblemSpec, Sign};
use crate::quad::{adaptive, QuadResult};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Default relative tail tolerance for [`total_volume`].
pub const DEFAULT_VOL_TOL: f64 = 1e-6;
/// Largest `r_max` [`total_volume`] extends to.
pub const R_MAX_CAP: f64 = 1e6;

const FIT_MIN_NODES: usize = 20;
const TAIL_INCREMENT_STOP: f64 = 1e-3;
const MAX_TAIL_CHUNKS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMode {
    CascadeCertified,
    LogDecayHeuristic,
    Invalid,
}

impl TailMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailMode::CascadeCertified => "CascadeCertified",
            TailMode::LogDecayHeuristic => "LogDecayHeuristic",
            TailMode::Invalid => "Invalid",
        }
    }
}

/// Bound on `ω_{N−1} ∫_R^∞ r^{N−1} e^u dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailBound<T> {
    pub upper: T,
    pub mode: TailMode,
    /// Polynomial `q ≥ u` on `[R, ∞)` when certified.
    pub envelope: Option<EvenPolynomial<T>>,
    /// Fitted decay exponent when heuristic.
    pub kappa: Option<T>,
}

impl<T: Real> TailBound<T> {
    fn invalid() -> Self {
        Self {
            upper: T::infinity(),
            mode: TailMode::Invalid,
            envelope: None,
            kappa: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeReport<T> {
    pub quad_part: T,
    pub tail_upper: T,
    pub tail_mode: TailMode,
    pub split_radius: T,
    /// `quad_part + tail_upper / 2`.
    pub total: T,
    pub rel_err: T,
    /// `Δ^{m−1}u` at the last node.
    pub ell_estimate: T,
    /// `Δ^{m−1}u` moved by less than `1e−8` relative over the last decade of `r`.
    pub ell_converged: bool,
    /// `r_max` cap reached without meeting the tail tolerance.
    pub warning: bool,
    pub r_max: T,
}

#[derive(Serialize)]
struct VolumeReportJson<'a> {
    #[serde(serialize_with = "json_f64")]
    quad_part: f64,
    #[serde(serialize_with = "json_f64")]
    tail_upper: f64,
    tail_mode: &'a str,
    #[serde(serialize_with = "json_f64")]
    split_radius: f64,
    #[serde(serialize_with = "json_f64")]
    total: f64,
    #[serde(serialize_with = "json_f64")]
    rel_err: f64,
    #[serde(serialize_with = "json_f64")]
    ell_estimate: f64,
}

impl<T: Real> VolumeReport<T> {
    /// Fixed key order: `quad_part, tail_upper, tail_mode, split_radius, total, rel_err, ell_estimate`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&VolumeReportJson {
            quad_part: to_f64(self.quad_part),
            tail_upper: to_f64(self.tail_upper),
            tail_mode: self.tail_mode.as_str(),
            split_radius: to_f64(self.split_radius),
            total: to_f64(self.total),
            rel_err: to_f64(self.rel_err),
            ell_estimate: to_f64(self.ell_estimate),
        })
        .expect("report serializes")
    }
}

fn check_radius<T: Real>(traj: &Trajectory<T>, radius: T) -> Result<()> {
    if !(radius >= T::zero() && radius <= traj.r_end()) {
        return Err(Error::OutOfRange {
            r: to_f64(radius),
            r_end: to_f64(traj.r_end()),
        });
    }
    Ok(())
}

/// Prefix integrals of `r^{N−1} density(u(r))` over node intervals.
pub(crate) struct Cumulative<T> {
    /// `prefix[i]` covers `[0, r_i]`.
    prefix: Vec<QuadResult<T>>,
}

impl<T: Real> Cumulative<T> {
    pub(crate) fn new<D: Fn(T) -> T>(traj: &Trajectory<T>, density: &D) -> Self {
        let pow = traj.spec().dim() as i32 - 1;
        let rel = traj.controls().rel_tol;
        let mut prefix = Vec::with_capacity(traj.nodes().len());
        let mut acc = QuadResult::zero();
        prefix.push(acc);
        for i in 0..traj.segment_count() {
            let a = traj.nodes()[i].r;
            let b = traj.nodes()[i + 1].r;
            let f = |r: T| r.powi(pow) * density(traj.segment_component(i, r, 0));
            acc = acc + adaptive(&f, a, b, rel, T::min_positive_value());
            prefix.push(acc);
        }
        Self { prefix }
    }

    /// `∫_0^R` (without the sphere factor).
    pub(crate) fn up_to<D: Fn(T) -> T>(&self, traj: &Trajectory<T>, radius: T, density: &D) -> QuadResult<T> {
        let nodes = traj.nodes();
        let idx = nodes.partition_point(|n| n.r <= radius);
        let i = idx.saturating_sub(1);
        let base = self.prefix[i];
        if nodes[i].r == radius || i >= traj.segment_count() {
            return base;
        }
        let pow = traj.spec().dim() as i32 - 1;
        let f = |r: T| r.powi(pow) * density(traj.segment_component(i, r, 0));
        base + adaptive(&f, nodes[i].r, radius, traj.controls().rel_tol, T::min_positive_value())
    }
}

/// `ω_{N−1} ∫_0^R r^{N−1} density(u(r)) dr` on the dense output.
pub fn quad_integral<T: Real, D: Fn(T) -> T>(traj: &Trajectory<T>, radius: T, density: D) -> Result<QuadResult<T>> {
    check_radius(traj, radius)?;
    let omega = sphere_area::<T>(traj.spec().dim());
    let pow = traj.spec().dim() as i32 - 1;
    let rel = traj.controls().rel_tol;
    let nodes = traj.nodes();
    let mut acc = QuadResult::zero();
    for i in 0..traj.segment_count() {
        let a = nodes[i].r;
        if a >= radius {
            break;
        }
        let b = nodes[i + 1].r.min(radius);
        let f = |r: T| r.powi(pow) * density(traj.segment_component(i, r, 0));
        acc = acc + adaptive(&f, a, b, rel, T::min_positive_value());
    }
    Ok(QuadResult {
        value: acc.value * omega,
        error: acc.error * omega,
    })
}

/// `ω_{N−1} ∫_0^R r^{N−1} e^u dr`.
pub fn quad_volume<T: Real>(traj: &Trajectory<T>, radius: T) -> Result<T> {
    quad_integral(traj, radius, |u: T| u.exp()).map(|q| q.value)
}

/// Upper envelope `q ≥ u` on `[R, ∞)` for σ = −1 with `Δ^{m−1}u(R) < 0`.
///
/// `Δ^{m−1}u` is non-increasing, so `Δ^{m−1}u ≤ Δ^{m−1}u(R)` past `R`. Each
/// lower layer follows from
/// `r^{N−1}(Δ^k u)'(r) = R^{N−1}(Δ^k u)'(R) + ∫_R^r s^{N−1} Δ^{k+1}u ds`
/// integrated once more; the `r^{1−N}` homogeneous part is bounded by its
/// value at infinity (or dropped when negative), which keeps every layer a
/// polynomial in `r²`.
pub fn cascade_envelope<T: Real>(traj: &Trajectory<T>, radius: T) -> Option<EvenPolynomial<T>> {
    let spec = traj.spec();
    if spec.sign() != Sign::Minus || !traj.outcome().is_global() {
        return None;
    }
    let state = traj.state_at(radius).ok()?;
    let m = spec.m();
    let top = state.w[m - 1];
    if !(top < T::zero()) || state.dw[m - 1] > T::zero() || radius <= T::zero() {
        return None;
    }
    let n = spec.dim();
    let n_t: T = from_usize(n);
    let r_pow_n1 = radius.powi(n as i32 - 1);
    let r_pow_2n = radius.powi(2 - n as i32);
    let r2 = radius * radius;

    let mut env = EvenPolynomial::constant(top);
    for k in (0..m - 1).rev() {
        // P(s) = Σ e_j s^{N+2j}/(N+2j)
        let p_at_r = env
            .coeffs()
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (j, &e)| {
                acc + e * radius.powi((n + 2 * j) as i32) / from_usize(n + 2 * j)
            });
        let c = r_pow_n1 * state.dw[k] - p_at_r;
        let homogeneous = c.max(T::zero()) * r_pow_2n / (n_t - lit(2.0));
        let mut coeffs = vec![T::zero(); env.coeffs().len() + 1];
        let mut constant = state.w[k] + homogeneous;
        let mut r_pow = r2;
        for (j, &e) in env.coeffs().iter().enumerate() {
            let scale = e / (from_usize::<T>(n + 2 * j) * from_usize(2 * j + 2));
            coeffs[j + 1] = scale;
            constant = constant - scale * r_pow;
            r_pow = r_pow * r2;
        }
        coeffs[0] = constant;
        env = EvenPolynomial::new(coeffs);
    }
    let lead = env.coeffs().last().copied()?;
    if env.degree()? == 0 || !(lead < T::zero()) || env.coeffs().iter().any(|c| !c.is_finite()) {
        return None;
    }
    Some(env)
}

/// `∫_R^∞ r^{N−1} e^{q(r)} dr` for a polynomial with negative leading coefficient.
fn envelope_tail<T: Real>(q: &EvenPolynomial<T>, radius: T, dim: usize, rel_tol: T) -> T {
    let pow = dim as i32 - 1;
    let n1: T = from_usize(dim - 1);
    let g = |r: T| r.powi(pow) * q.eval(r).exp();
    let log_slope = |r: T| n1 / r + q.eval_derivative(r);

    let mut x = radius;
    let slope0 = log_slope(radius).abs().max(T::one());
    let mut width = radius.min(T::one()) / slope0 * lit(1e-2);
    let mut acc = QuadResult::zero();
    for _ in 0..MAX_TAIL_CHUNKS {
        let chunk = adaptive(&g, x, x + width, rel_tol, T::min_positive_value());
        acc = acc + chunk;
        x = x + width;
        width = width * lit(2.0);
        let slope = log_slope(x);
        if slope < T::zero() && chunk.value <= lit::<T>(TAIL_INCREMENT_STOP) * acc.value {
            // log-concave past x: ∫_x^∞ g ≤ g(x)/|L'(x)|
            return acc.value + acc.error + g(x) / slope.abs();
        }
    }
    T::infinity()
}

/// Least-squares fit `u ≈ c − κ ln r` on the nodes in `[R/10, R]`.
fn log_decay_fit<T: Real>(traj: &Trajectory<T>, radius: T) -> Option<(T, T)> {
    let lo = radius / lit(10.0);
    let pts: Vec<(T, T)> = traj
        .nodes()
        .iter()
        .filter(|n| n.r >= lo && n.r <= radius && n.r > T::zero())
        .map(|n| (n.r.ln(), n.w[0]))
        .collect();
    if pts.len() < FIT_MIN_NODES || pts.iter().any(|p| !p.1.is_finite()) {
        return None;
    }
    let k: T = from_usize(pts.len());
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / k;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / k;
    let (sxy, sxx) = pts.iter().fold((T::zero(), T::zero()), |(sxy, sxx), p| {
        let dx = p.0 - mx;
        (sxy + dx * (p.1 - my), sxx + dx * dx)
    });
    if sxx <= T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, -slope))
}

/// Tail bound on `[R, ∞)`: certified cascade when available, else log-decay fit, else invalid.
pub fn tail_bound<T: Real>(traj: &Trajectory<T>, radius: T) -> TailBound<T> {
    if check_radius(traj, radius).is_err() || !traj.outcome().is_global() {
        return TailBound::invalid();
    }
    let dim = traj.spec().dim();
    let omega = sphere_area::<T>(dim);
    if let Some(q) = cascade_envelope(traj, radius) {
        let tail = envelope_tail(&q, radius, dim, traj.controls().rel_tol);
        if tail.is_finite() {
            return TailBound {
                upper: omega * tail,
                mode: TailMode::CascadeCertified,
                envelope: Some(q),
                kappa: None,
            };
        }
    }
    if let Some((c, kappa)) = log_decay_fit(traj, radius) {
        let n: T = from_usize(dim);
        if kappa > n {
            let ln_tail = omega.ln() + c + (n - kappa) * radius.ln() - (kappa - n).ln();
            return TailBound {
                upper: ln_tail.exp(),
                mode: TailMode::LogDecayHeuristic,
                envelope: None,
                kappa: Some(kappa),
            };
        }
    }
    TailBound::invalid()
}

/// First node where `w_{m−1} ≤ −0.1 max|w_{m−1}|` and `u ≤ −20`, else the last node.
pub fn split_index<T: Real>(traj: &Trajectory<T>) -> usize {
    let m = traj.spec().m();
    let nodes = traj.nodes();
    let top_max = nodes.iter().fold(T::zero(), |a, n| a.max(n.w[m - 1].abs()));
    let thresh = -lit::<T>(0.1) * top_max;
    nodes
        .iter()
        .position(|n| n.r > T::zero() && n.w[m - 1] <= thresh && n.w[0] <= lit(-20.0))
        .unwrap_or(nodes.len() - 1)
}

fn candidate_indices<T: Real>(traj: &Trajectory<T>) -> Vec<usize> {
    let nodes = traj.nodes();
    let last = nodes.len() - 1;
    let mut out = vec![split_index(traj)];
    let mut r_next = nodes[out[0]].r * lit(1.25);
    for (i, n) in nodes.iter().enumerate().skip(out[0] + 1) {
        if n.r >= r_next {
            out.push(i);
            r_next = n.r * lit(1.25);
        }
    }
    if *out.last().expect("non-empty") != last {
        out.push(last);
    }
    out
}

fn ell_converged<T: Real>(traj: &Trajectory<T>) -> bool {
    let m = traj.spec().m();
    let end = traj.r_end();
    let Ok(earlier) = traj.component_at(end / lit(10.0), m - 1) else {
        return false;
    };
    let last = traj.last().w[m - 1];
    (last - earlier).abs() <= lit::<T>(1e-8) * last.abs()
}

/// Builds a report for split radius `R` of an already integrated trajectory.
pub fn report_at<T: Real>(traj: &Trajectory<T>, radius: T) -> Result<VolumeReport<T>> {
    let cum = Cumulative::new(traj, &|u: T| u.exp());
    report_with(traj, &cum, radius)
}

fn report_with<T: Real>(traj: &Trajectory<T>, cum: &Cumulative<T>, radius: T) -> Result<VolumeReport<T>> {
    check_radius(traj, radius)?;
    let omega = sphere_area::<T>(traj.spec().dim());
    let q = cum.up_to(traj, radius, &|u: T| u.exp());
    let quad_part = q.value * omega;
    // ODE error allowance on top of the quadrature estimate.
    let quad_err = q.error * omega + lit::<T>(10.0) * traj.controls().rel_tol * quad_part;
    let tail = tail_bound(traj, radius);
    let (total, rel_err) = match tail.mode {
        TailMode::CascadeCertified => {
            let total = quad_part + tail.upper / lit(2.0);
            (total, (tail.upper / lit(2.0) + quad_err) / total)
        }
        TailMode::LogDecayHeuristic => {
            let total = quad_part + tail.upper / lit(2.0);
            (total, (tail.upper + quad_err) / total)
        }
        TailMode::Invalid => (quad_part, T::infinity()),
    };
    let m = traj.spec().m();
    Ok(VolumeReport {
        quad_part,
        tail_upper: tail.upper,
        tail_mode: tail.mode,
        split_radius: radius,
        total,
        rel_err,
        ell_estimate: traj.last().w[m - 1],
        ell_converged: ell_converged(traj),
        warning: false,
        r_max: traj.controls().r_max,
    })
}

fn better<T: Real>(a: &VolumeReport<T>, b: &VolumeReport<T>) -> bool {
    let key = |r: &VolumeReport<T>| (r.tail_mode == TailMode::Invalid, r.tail_upper / r.quad_part.max(T::min_positive_value()));
    let (ia, ra) = key(a);
    let (ib, rb) = key(b);
    (!ia && ib) || (ia == ib && ra < rb)
}

/// Integrates `spec`, picks a split radius and extends `r_max` (×2, capped)
/// until `tail_upper ≤ vol_tol · quad_part`.
///
/// Candidate split radii start at [`split_index`] and grow geometrically; the
/// first certified candidate meeting the tolerance wins, a heuristic one only
/// when no candidate can be certified.
pub fn total_volume<T: Real>(
    spec: &ProblemSpec<T>,
    controls: &IntegratorControls<T>,
    vol_tol: T,
) -> Result<VolumeReport<T>> {
    Ok(total_volume_with_trajectory(spec, controls, vol_tol)?.0)
}

/// [`total_volume`] also returning the trajectory the report was computed on.
pub fn total_volume_with_trajectory<T: Real>(
    spec: &ProblemSpec<T>,
    controls: &IntegratorControls<T>,
    vol_tol: T,
) -> Result<(VolumeReport<T>, Trajectory<T>)> {
    let cap = lit::<T>(R_MAX_CAP);
    let mut ctrl = *controls;
    let mut previous: Option<(VolumeReport<T>, Trajectory<T>)> = None;
    loop {
        let traj = integrate(spec, &ctrl)?;
        match traj.outcome() {
            Outcome::GlobalToRmax(_) => {}
            failure => {
                if let Some((mut rep, t)) = previous {
                    rep.warning = true;
                    return Ok((rep, t));
                }
                return Err(match failure {
                    Outcome::BlowUp(r) => Error::BlowUp { r_star: to_f64(r) },
                    _ => Error::StepUnderflow { r: to_f64(failure.radius()) },
                });
            }
        }
        let cum = Cumulative::new(&traj, &|u: T| u.exp());
        let mut best: Option<VolumeReport<T>> = None;
        let mut heuristic_ok: Option<VolumeReport<T>> = None;
        for i in candidate_indices(&traj) {
            let rep = report_with(&traj, &cum, traj.nodes()[i].r)?;
            let meets = rep.tail_upper <= vol_tol * rep.quad_part;
            match rep.tail_mode {
                TailMode::CascadeCertified if meets => return Ok((rep, traj)),
                TailMode::LogDecayHeuristic if meets && heuristic_ok.is_none() => {
                    heuristic_ok = Some(rep.clone());
                }
                _ => {}
            }
            if best.as_ref().map_or(true, |b| better(&rep, b)) {
                best = Some(rep);
            }
        }
        if let Some(rep) = heuristic_ok {
            return Ok((rep, traj));
        }
        let best = best.expect("at least one candidate");
        if ctrl.r_max * lit(2.0) > cap {
            let mut rep = best;
            rep.warning = true;
            return Ok((rep, traj));
        }
        previous = Some((best, traj));
        ctrl.r_max = ctrl.r_max * lit(2.0);
    }
}

/// Integrator controls plus the tail tolerance handed to [`total_volume`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeSettings<T> {
    pub controls: IntegratorControls<T>,
    pub vol_tol: T,
}

impl<T: Real> Default for VolumeSettings<T> {
    fn default() -> Self {
        Self {
            controls: IntegratorControls::default(),
            vol_tol: lit(DEFAULT_VOL_TOL),
        }
    }
}

impl<T: Real> VolumeSettings<T> {
    pub fn with_vol_tol(mut self, vol_tol: T) -> Self {
        self.vol_tol = vol_tol;
        self
    }

    pub fn total_volume(&self, spec: &ProblemSpec<T>) -> Result<VolumeReport<T>> {
        total_volume(spec, &self.controls, self.vol_tol)
    }
}

/// `ω_{N−1} ∫_0^∞ r^{N−1} e^{−r^{2m−2} − b} dr = ω_{N−1} e^{−b} Γ(N/(2m−2))/(2m−2)`,
/// the volume of the barrier dominating the `(−b, 0, …, 0, −c0)` branch.
pub fn psi_barrier_volume(m: usize, dim: usize, b: f64) -> f64 {
    let p = (2 * m - 2) as f64;
    sphere_area::<f64>(dim) * (-b).exp() * statrs::function::gamma::gamma(dim as f64 / p) / p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{branch_data, spherical_spec};
    use std::f64::consts::PI;

    fn traj(m: usize, sign: Sign, a: Vec<f64>, r_max: f64) -> Trajectory<f64> {
        let s = ProblemSpec::conformal(m, sign, a).unwrap();
        integrate(&s, &IntegratorControls::default().with_r_max(r_max)).unwrap()
    }

    /// Independent trapezoid rule on the raw nodes.
    fn trapezoid(t: &Trajectory<f64>, radius: f64) -> f64 {
        let n = t.spec().dim() as i32;
        let f = |r: f64, u: f64| r.powi(n - 1) * u.exp();
        let s: f64 = t
            .nodes()
            .windows(2)
            .filter(|p| p[1].r <= radius)
            .map(|p| 0.5 * (p[1].r - p[0].r) * (f(p[0].r, p[0].w[0]) + f(p[1].r, p[1].w[0])))
            .sum();
        s * sphere_area::<f64>(t.spec().dim())
    }

    #[test]
    fn spherical_quadrature() {
        let t = integrate(&spherical_spec::<f64>(2).unwrap(), &IntegratorControls::default()).unwrap();
        let v = quad_volume(&t, 100.0).unwrap();
        let exact = 64.0 * PI * PI;
        assert!((v - exact).abs() / exact < 1e-5, "{v}");
        let trap = trapezoid(&t, 100.0);
        assert!((trap - v).abs() / v < 1e-4, "{trap} vs {v}");
    }

    #[test]
    fn zero_radius_is_zero() {
        let t = traj(2, Sign::Minus, vec![0.0, 0.0], 5.0);
        assert_eq!(quad_volume(&t, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn beyond_trajectory_is_error() {
        let t = traj(2, Sign::Minus, vec![0.0, 0.0], 5.0);
        assert!(matches!(quad_volume(&t, 6.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn partial_segment_consistent() {
        let t = traj(2, Sign::Minus, vec![0.0, 0.0], 10.0);
        let cum = Cumulative::new(&t, &|u: f64| u.exp());
        for r in [0.37, 1.0, 2.5, 7.77] {
            let a = cum.up_to(&t, r, &|u: f64| u.exp()).value * sphere_area::<f64>(4);
            let b = quad_volume(&t, r).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn spherical_tail_is_heuristic_with_kappa_8() {
        let t = integrate(&spherical_spec::<f64>(2).unwrap(), &IntegratorControls::default()).unwrap();
        let tb = tail_bound(&t, 100.0);
        assert_eq!(tb.mode, TailMode::LogDecayHeuristic);
        let kappa = tb.kappa.unwrap();
        assert!((kappa - 8.0).abs() < 0.05, "{kappa}");
        // exact tail 2π² ∫_100^∞ 384 r³/(1+r²)⁴ dr ≈ 2π² · 96e-8
        let exact = 2.0 * PI * PI * 96e-8;
        assert!((tb.upper - exact).abs() / exact < 0.05, "{} vs {exact}", tb.upper);
    }

    #[test]
    fn invalid_when_no_decay() {
        // Blow-up trajectory: no tail.
        let t = traj(2, Sign::Plus, vec![0.0, 0.0], 100.0);
        assert_eq!(tail_bound(&t, 0.1).mode, TailMode::Invalid);
        // Δu(R) = 0 at R = 0 and too few nodes for a fit.
        let t = traj(2, Sign::Minus, vec![0.0, 0.0], 5.0);
        let tb = tail_bound(&t, 0.0);
        assert_eq!(tb.mode, TailMode::Invalid);
        assert!(tb.upper.is_infinite());
    }

    #[test]
    fn cascade_envelope_dominates_solution() {
        for (m, a) in [(2, vec![-1.0, 3.0]), (3, vec![0.0, 0.0, 0.0]), (3, vec![-2.0, 0.0, 50.0])] {
            let t = traj(m, Sign::Minus, a, 60.0);
            let idx = split_index(&t);
            let radius = t.nodes()[idx].r;
            let q = cascade_envelope(&t, radius).expect("certifiable");
            for n in t.nodes().iter().filter(|n| n.r >= radius) {
                assert!(n.w[0] <= q.eval(n.r) + 1e-8 * (1.0 + n.w[0].abs()), "m={m} r={}", n.r);
            }
        }
    }

    #[test]
    fn minus_branch_below_psi_bound() {
        let b = 10.0;
        let s = ProblemSpec::conformal(2, Sign::Minus, branch_data(2, 4, b, Sign::Minus)).unwrap();
        let rep = total_volume(&s, &IntegratorControls::default(), 1e-10).unwrap();
        assert_eq!(rep.tail_mode, TailMode::CascadeCertified);
        let bound = psi_barrier_volume(2, 4, b);
        assert!((bound - PI * PI * (-b).exp()).abs() < 1e-15);
        assert!(rep.total <= bound, "{} > {bound}", rep.total);
        assert!(rep.total > 0.99 * bound);
    }

    #[test]
    fn spherical_total() {
        let rep = total_volume(&spherical_spec::<f64>(2).unwrap(), &IntegratorControls::default(), 1e-6).unwrap();
        let exact = 64.0 * PI * PI;
        assert!((rep.total - exact).abs() / exact < 5e-3);
        assert!(rep.rel_err <= 5e-3);
        assert!(rep.total >= rep.quad_part && rep.total <= rep.quad_part + rep.tail_upper);
    }

    #[test]
    fn sigma0_m3_limit_negative_and_certified() {
        let s = ProblemSpec::conformal(3, Sign::Minus, vec![0.0, 0.0, 0.0]).unwrap();
        let rep = total_volume(&s, &IntegratorControls::default(), 1e-6).unwrap();
        assert!(rep.ell_estimate < 0.0);
        assert_eq!(rep.tail_mode, TailMode::CascadeCertified);
        assert!(rep.rel_err < 1e-5);
    }

    #[test]
    fn plus_branch_increasing_in_b() {
        let vols: Vec<f64> = [5.0, 10.0, 20.0]
            .iter()
            .map(|&b| {
                let s = ProblemSpec::conformal(2, Sign::Minus, vec![-b, 8.0]).unwrap();
                total_volume(&s, &IntegratorControls::default(), 1e-6).unwrap().total
            })
            .collect();
        assert!(vols.windows(2).all(|p| p[1] > p[0]), "{vols:?}");
    }

    #[test]
    fn json_keys_in_order() {
        let s = ProblemSpec::conformal(2, Sign::Minus, vec![-1.0, 0.0]).unwrap();
        let rep = total_volume(&s, &IntegratorControls::default(), 1e-6).unwrap();
        let json = rep.to_json();
        let keys = ["quad_part", "tail_upper", "tail_mode", "split_radius", "total", "rel_err", "ell_estimate"];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|p| p[0] < p[1]));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["tail_mode"], "CascadeCertified");
    }

    #[test]
    fn blow_up_volume_is_error() {
        let s = ProblemSpec::conformal(2, Sign::Plus, vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            total_volume(&s, &IntegratorControls::default(), 1e-6),
            Err(Error::BlowUp { .. })
        ));
    }
}
