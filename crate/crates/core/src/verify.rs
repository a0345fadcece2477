//! Numerical checks of the structural facts about these equations: ordering of
//! σ = +1 solutions, polynomial barriers for σ = −1, scaling covariance, the
//! Q-curvature normalization, first zeros along the `+c0` branch and the sign
//! of `lim Δ^{m−1}u`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::io::json_f64;
use crate::ode::{integrate, Trajectory};
use crate::poly::iterated_laplacian;
use crate::problem::{branch_data, sphere_area, spherical_spec, ProblemSpec, Sign};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::volume::{quad_integral, total_volume_with_trajectory, VolumeSettings};

/// Default seed for randomly generated probe specs.
pub const DEFAULT_SEED: u64 = 20_240_917;
/// Half-width of the box random initial data is drawn from.
pub const RANDOM_BOX: f64 = 5.0;

/// Bisection tolerance for `r0`; gaps closer than ten times this are not resolved.
const ROOT_TOL: f64 = 1e-10;

/// One probe inside a check: a signed margin (negative means violated) plus
/// the measured quantities behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub label: String,
    pub margin: f64,
    pub values: Vec<(String, f64)>,
}

impl ProbeRecord {
    fn new(label: impl Into<String>, margin: f64) -> Self {
        Self {
            label: label.into(),
            margin,
            values: Vec::new(),
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.values.push((key.into(), v));
        self
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }
}

struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        json_f64(&self.0, s)
    }
}

struct Values<'a>(&'a [(String, f64)]);

impl Serialize for Values<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0 {
            map.serialize_entry(k, &Num(*v))?;
        }
        map.end()
    }
}

impl Serialize for ProbeRecord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ProbeRecord", 3)?;
        st.serialize_field("label", &self.label)?;
        st.serialize_field("margin", &Num(self.margin))?;
        st.serialize_field("values", &Values(&self.values))?;
        st.end()
    }
}

/// Outcome of one check; `passed ⇔ worst_violation ≥ −tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Smallest probe margin.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub details: Vec<ProbeRecord>,
}

impl CheckReport {
    fn from_probes(name: impl Into<String>, tolerance: f64, details: Vec<ProbeRecord>) -> Self {
        let worst = details
            .iter()
            .map(|p| if p.margin.is_nan() { f64::NEG_INFINITY } else { p.margin })
            .fold(f64::INFINITY, f64::min);
        Self {
            name: name.into(),
            passed: worst >= -tolerance,
            worst_violation: worst,
            tolerance,
            details,
        }
    }

    fn renamed(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("check report serializes")
    }
}

impl Serialize for CheckReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CheckReport", 5)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("passed", &self.passed)?;
        st.serialize_field("worst_violation", &Num(self.worst_violation))?;
        st.serialize_field("tolerance", &Num(self.tolerance))?;
        st.serialize_field("details", &self.details)?;
        st.end()
    }
}

/// Relative difference scaled so that values near zero are compared absolutely.
fn rel_gap<T: Real>(a: T, b: T) -> f64 {
    to_f64((a - b) / (T::one() + a.abs() + b.abs()))
}

fn sorted_union<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>, limit: T) -> Vec<T> {
    let mut rs: Vec<T> = a
        .nodes()
        .iter()
        .chain(b.nodes())
        .map(|n| n.r)
        .filter(|&r| r <= limit)
        .collect();
    rs.sort_by(|x, y| x.partial_cmp(y).expect("finite radii"));
    rs.dedup();
    rs
}

/// `u ≥ v` on `[0, min(R, both stopping radii)]` for σ = +1 data ordered as
/// `Δ^k u(0) ≥ Δ^k v(0)` for every `k`.
pub fn comparison_check<T: Real>(
    u_spec: &ProblemSpec<T>,
    v_spec: &ProblemSpec<T>,
    radius: T,
    settings: &VolumeSettings<T>,
) -> Result<CheckReport> {
    comparison_probe(u_spec, v_spec, radius, settings, "pair")
        .map(|p| CheckReport::from_probes("comparison", comparison_tol(settings), vec![p]))
}

fn comparison_tol<T: Real>(settings: &VolumeSettings<T>) -> f64 {
    10.0 * to_f64(settings.controls.rel_tol)
}

fn comparison_probe<T: Real>(
    u_spec: &ProblemSpec<T>,
    v_spec: &ProblemSpec<T>,
    radius: T,
    settings: &VolumeSettings<T>,
    label: &str,
) -> Result<ProbeRecord> {
    if u_spec.sign() != Sign::Plus || v_spec.sign() != Sign::Plus {
        return Err(Error::Precondition("comparison needs sigma = +1 for both specs".into()));
    }
    if u_spec.m() != v_spec.m() || u_spec.dim() != v_spec.dim() {
        return Err(Error::Precondition("comparison needs the same m and N".into()));
    }
    if u_spec.data().iter().zip(v_spec.data()).any(|(a, b)| a < b) {
        return Err(Error::Precondition("comparison needs Δ^k u(0) >= Δ^k v(0) for all k".into()));
    }
    let u = integrate(u_spec, &settings.controls)?;
    let v = integrate(v_spec, &settings.controls)?;
    let limit = radius.min(u.r_end()).min(v.r_end());
    let mut worst = f64::INFINITY;
    let mut at = 0.0;
    for r in sorted_union(&u, &v, limit) {
        let gap = rel_gap(u.u_at(r)?, v.u_at(r)?);
        if gap < worst {
            worst = gap;
            at = to_f64(r);
        }
    }
    Ok(ProbeRecord::new(label, worst)
        .with("worst_radius", at)
        .with("compared_up_to", to_f64(limit))
        .with("u_stop", to_f64(u.r_end()))
        .with("v_stop", to_f64(v.r_end())))
}

/// `Δ^i u ≤ Δ^i Φ` at every node and every layer `0 ≤ i < m`, `Φ` the matching polynomial.
///
/// `w = u − Φ` has zero data and `Δ^m w = −e^u < 0`, so every layer of `w`
/// stays non-positive.
pub fn barrier_check<T: Real>(traj: &Trajectory<T>) -> Result<CheckReport> {
    barrier_probe(traj, "trajectory")
        .map(|p| CheckReport::from_probes("barrier", 10.0 * to_f64(traj.controls().rel_tol), vec![p]))
}

fn barrier_probe<T: Real>(traj: &Trajectory<T>, label: &str) -> Result<ProbeRecord> {
    let spec = traj.spec();
    if spec.sign() != Sign::Minus {
        return Err(Error::Precondition("barrier check needs sigma = -1".into()));
    }
    let m = spec.m();
    let layers: Vec<_> = (0..m)
        .map(|i| iterated_laplacian(&spec.matching_polynomial(), spec.dim(), i))
        .collect();
    let mut worst = f64::INFINITY;
    let mut at = (0.0, 0usize);
    for n in traj.nodes() {
        for (i, phi) in layers.iter().enumerate() {
            let gap = rel_gap(phi.eval(n.r), n.w[i]);
            if gap < worst {
                worst = gap;
                at = (to_f64(n.r), i);
            }
        }
    }
    Ok(ProbeRecord::new(label, worst)
        .with("worst_radius", at.0)
        .with("worst_layer", at.1 as f64)
        .with("layers", m as f64)
        .with("nodes", traj.nodes().len() as f64))
}

/// `u_λ(x) = u(λx) + 2m ln λ` solves the same equation with data
/// `(a_0 + 2m ln λ, λ² a_1, …, λ^{2m−2} a_{m−1})` and has volume `λ^{2m−N} V`.
///
/// Both the pointwise identity and the volume ratio are compared as relative
/// errors against `10 · vol_tol`.
pub fn scaling_check<T: Real>(spec: &ProblemSpec<T>, lambda: T, settings: &VolumeSettings<T>) -> Result<CheckReport> {
    if !(lambda > T::zero() && lambda.is_finite()) {
        return Err(Error::Precondition(format!("lambda must be positive, got {lambda}")));
    }
    let m = spec.m();
    let two_m: T = from_usize(2 * m);
    let l2 = lambda * lambda;
    let scaled = spec
        .data()
        .iter()
        .enumerate()
        .map(|(k, &a)| if k == 0 { a + two_m * lambda.ln() } else { a * l2.powi(k as i32) })
        .collect();
    let scaled_spec = spec.with_data(scaled)?;
    let (rep_u, u) = total_volume_with_trajectory(spec, &settings.controls, settings.vol_tol)?;
    let (rep_l, ul) = total_volume_with_trajectory(&scaled_spec, &settings.controls, settings.vol_tol)?;

    let mut worst_point = 0.0f64;
    let mut at = 0.0;
    for n in ul.nodes() {
        let r_src = lambda * n.r;
        if r_src > u.r_end() {
            break;
        }
        let expect = u.u_at(r_src)? + two_m * lambda.ln();
        let err = to_f64((n.w[0] - expect).abs() / (T::one() + n.w[0].abs()));
        if err > worst_point {
            worst_point = err;
            at = to_f64(n.r);
        }
    }
    let tol = 10.0 * to_f64(settings.vol_tol);
    let expected = to_f64(lambda.powi(2 * m as i32 - spec.dim() as i32));
    let ratio = to_f64(rep_l.total / rep_u.total);
    let ratio_err = (ratio / expected - 1.0).abs();
    let details = vec![
        ProbeRecord::new("pointwise", tol - worst_point)
            .with("worst_error", worst_point)
            .with("worst_radius", at)
            .with("lambda", to_f64(lambda)),
        ProbeRecord::new("volume", tol - ratio_err)
            .with("ratio", ratio)
            .with("expected_ratio", expected)
            .with("relative_error", ratio_err)
            .with("volume", to_f64(rep_u.total))
            .with("scaled_volume", to_f64(rep_l.total)),
    ];
    Ok(CheckReport::from_probes("scaling", 0.0, details))
}

/// `v = (u − ln (2m)!)/(2m)` gives `e^{2mv} = e^u/(2m)!` pointwise and
/// `∫ e^{2mv} dx = V/(2m)!`; the second volume is integrated independently on
/// the same trajectory.
pub fn conversion_check<T: Real>(spec: &ProblemSpec<T>, radii: &[T], settings: &VolumeSettings<T>) -> Result<CheckReport> {
    let m = spec.m();
    let two_m: T = from_usize(2 * m);
    let ln_fact = (1..=2 * m).fold(T::zero(), |acc, k| acc + from_usize::<T>(k).ln());
    let fact = ln_fact.exp();
    let (rep, traj) = total_volume_with_trajectory(spec, &settings.controls, settings.vol_tol)?;
    let to_v = |u: T| (u - ln_fact) / two_m;

    let mut details = Vec::new();
    let tol = 10.0 * to_f64(settings.vol_tol);
    let mut worst = 0.0f64;
    for &r in radii {
        if r > traj.r_end() {
            continue;
        }
        let u = traj.u_at(r)?;
        let lhs = (two_m * to_v(u)).exp();
        let rhs = u.exp() / fact;
        worst = worst.max(to_f64(((lhs - rhs) / rhs).abs()));
    }
    details.push(ProbeRecord::new("pointwise", tol - worst).with("worst_error", worst));

    let q = quad_integral(&traj, rep.split_radius, |u: T| (two_m * to_v(u)).exp())?;
    let vol_v = q.value + rep.tail_upper / lit(2.0) / fact;
    let ratio = to_f64(vol_v / rep.total);
    let expected = to_f64(T::one() / fact);
    let err = (ratio / expected - 1.0).abs();
    details.push(
        ProbeRecord::new("volume", tol - err)
            .with("volume_u", to_f64(rep.total))
            .with("volume_v", to_f64(vol_v))
            .with("ratio", ratio)
            .with("expected_ratio", expected)
            .with("relative_error", err),
    );
    Ok(CheckReport::from_probes("conversion", 0.0, details))
}

/// First radius where `u` reaches 0, by bisection on the dense output.
pub fn first_zero<T: Real>(traj: &Trajectory<T>) -> Option<T> {
    let nodes = traj.nodes();
    if nodes[0].w[0] >= T::zero() {
        return Some(T::zero());
    }
    let i = nodes.iter().position(|n| n.w[0] >= T::zero())?;
    let (mut lo, mut hi) = (nodes[i - 1].r, nodes[i].r);
    let tol = lit::<T>(ROOT_TOL);
    while hi - lo > tol {
        let mid = lo + (hi - lo) / lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if traj.u_at(mid).ok()? >= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Along `(−b, 0, …, 0, c0)` in `R^{2m}` (σ = −1): the first zero `r0` of `u`
/// approaches `R0 = b^{1/(2m−2)}` from above, and
/// `V(b) > (2m−2) ω_{2m−1} r0^{2m−2} Δ^{m−1}u(r0)` whenever the last factor is positive.
pub fn first_zero_check<T: Real>(m: usize, bs: &[T], settings: &VolumeSettings<T>) -> Result<CheckReport> {
    let dim = 2 * m;
    let p = 2 * m - 2;
    let omega = sphere_area::<f64>(dim);
    let mut details = Vec::new();
    let mut gaps = Vec::new();
    for &b in bs {
        if !(b >= T::zero()) {
            return Err(Error::Precondition(format!("b must be >= 0, got {b}")));
        }
        let spec = ProblemSpec::conformal(m, Sign::Minus, branch_data(m, dim, b, Sign::Plus))?;
        let (rep, traj) = total_volume_with_trajectory(&spec, &settings.controls, settings.vol_tol)?;
        let label = format!("b={}", to_f64(b));
        let big_r0 = to_f64(b).powf(1.0 / p as f64);
        let Some(r0) = first_zero(&traj) else {
            details.push(
                ProbeRecord::new(format!("{label} inconclusive"), f64::NEG_INFINITY)
                    .with("r0", f64::INFINITY)
                    .with("R0", big_r0),
            );
            continue;
        };
        let top = to_f64(traj.component_at(r0, m - 1)?);
        let r0f = to_f64(r0);
        let volume = to_f64(rep.total);
        let bound = p as f64 * omega * r0f.powi(p as i32) * top;
        let margin = if top > 0.0 { (volume - bound) / volume } else { f64::INFINITY };
        if b > T::zero() {
            gaps.push((to_f64(b), r0f - big_r0));
        }
        details.push(
            ProbeRecord::new(label, margin)
                .with("b", to_f64(b))
                .with("r0", r0f)
                .with("R0", big_r0)
                .with("gap", r0f - big_r0)
                .with("top_at_r0", top)
                .with("volume", volume)
                .with("lower_bound", bound),
        );
    }
    for w in gaps.windows(2) {
        details.push(
            ProbeRecord::new(format!("gap decreasing b={}..{}", w[0].0, w[1].0), w[0].1 - w[1].1)
                .with("gap_lo", w[0].1)
                .with("gap_hi", w[1].1),
        );
    }
    if let Some(&(b, g)) = gaps.last() {
        details.push(ProbeRecord::new(format!("gap below 1 at b={b}"), 1.0 - g).with("gap", g));
    }
    Ok(CheckReport::from_probes("first-zero", 10.0 * ROOT_TOL, details))
}

/// `lim Δ^{m−1}u < 0` (estimated at the last node) for σ = −1 specs; for
/// `m ≥ 3` the data must satisfy `a_{m−2} = 0`.
pub fn limit_estimate_check<T: Real>(specs: &[ProblemSpec<T>], settings: &VolumeSettings<T>) -> Result<CheckReport> {
    for s in specs {
        if s.sign() != Sign::Minus {
            return Err(Error::Precondition("limit check needs sigma = -1".into()));
        }
        if s.m() >= 3 && !s.in_sigma0() {
            return Err(Error::Precondition("limit check needs a_(m-2) = 0 for m >= 3".into()));
        }
    }
    let details = specs
        .par_iter()
        .map(|s| {
            let (rep, _) = total_volume_with_trajectory(s, &settings.controls, settings.vol_tol)?;
            let data: Vec<String> = s.data().iter().map(|x| format!("{x}")).collect();
            Ok(ProbeRecord::new(format!("m={} a=({})", s.m(), data.join(",")), -to_f64(rep.ell_estimate))
                .with("ell_estimate", to_f64(rep.ell_estimate))
                .with("ell_converged", if rep.ell_converged { 1.0 } else { 0.0 })
                .with("r_max", to_f64(rep.r_max)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_probes("limit", 0.0, details))
}

/// `count` σ = −1 specs in `R^{2m}` with data uniform in `[−5, 5]^m`, `a_{m−2} = 0` for `m ≥ 3`.
pub fn random_sigma0_specs<T: Real>(seed: u64, count: usize, m: usize) -> Vec<ProblemSpec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut a: Vec<T> = (0..m).map(|_| lit(rng.gen_range(-RANDOM_BOX..=RANDOM_BOX))).collect();
            if m >= 3 {
                a[m - 2] = T::zero();
            }
            ProblemSpec::conformal(m, Sign::Minus, a).expect("valid random spec")
        })
        .collect()
}

/// `count` σ = +1 pairs `(u, v)` with `Δ^k u(0) ≥ Δ^k v(0)`: two draws from
/// `[−5, 5]^m`, split into componentwise max and min.
pub fn random_ordered_pairs<T: Real>(seed: u64, count: usize, m: usize) -> Vec<(ProblemSpec<T>, ProblemSpec<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut hi = Vec::with_capacity(m);
            let mut lo = Vec::with_capacity(m);
            for _ in 0..m {
                let x: f64 = rng.gen_range(-RANDOM_BOX..=RANDOM_BOX);
                let y: f64 = rng.gen_range(-RANDOM_BOX..=RANDOM_BOX);
                hi.push(lit(x.max(y)));
                lo.push(lit(x.min(y)));
            }
            (
                ProblemSpec::conformal(m, Sign::Plus, hi).expect("valid random spec"),
                ProblemSpec::conformal(m, Sign::Plus, lo).expect("valid random spec"),
            )
        })
        .collect()
}

/// Comparison over many ordered pairs, one probe per pair.
pub fn comparison_suite<T: Real>(
    pairs: &[(ProblemSpec<T>, ProblemSpec<T>)],
    settings: &VolumeSettings<T>,
) -> Result<CheckReport> {
    let details = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (u, v))| comparison_probe(u, v, settings.controls.r_max, settings, &format!("pair {i}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_probes("comparison", comparison_tol(settings), details))
}

/// Barrier check over many σ = −1 specs, one probe per spec.
pub fn barrier_suite<T: Real>(specs: &[ProblemSpec<T>], settings: &VolumeSettings<T>) -> Result<CheckReport> {
    let details = specs
        .par_iter()
        .enumerate()
        .map(|(i, s)| barrier_probe(&integrate(s, &settings.controls)?, &format!("spec {i}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_probes("barrier", 10.0 * to_f64(settings.controls.rel_tol), details))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Comparison,
    Barrier,
    Scaling,
    Conversion,
    FirstZero,
    Limit,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "comparison" => Suite::Comparison,
            "barrier" => Suite::Barrier,
            "scaling" => Suite::Scaling,
            "conversion" => Suite::Conversion,
            "first-zero" => Suite::FirstZero,
            "limit" => Suite::Limit,
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "unknown suite {s:?} (expected all, comparison, barrier, scaling, conversion, first-zero or limit)"
                )))
            }
        })
    }
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

type Job<'a> = Box<dyn Fn() -> Result<CheckReport> + Send + Sync + 'a>;

fn spec(m: usize, dim: usize, sign: Sign, a: &[f64]) -> ProblemSpec<f64> {
    ProblemSpec::new(m, dim, sign, a.to_vec()).expect("valid built-in spec")
}

/// Runs the selected checks concurrently; reports are sorted by name.
pub fn run_suite(suite: Suite, seed: u64, settings: &VolumeSettings<f64>) -> Result<Vec<CheckReport>> {
    let s = settings;
    let mut jobs: Vec<(&str, Job<'_>)> = Vec::new();
    if suite.includes(Suite::Comparison) {
        jobs.push(("comparison/identical", Box::new(move || {
            let u = spherical_spec(2)?;
            comparison_check(&u, &u, s.controls.r_max, s)
        })));
        jobs.push(("comparison/spherical-shift", Box::new(move || {
            let u = spherical_spec(2)?;
            let v = u.with_data(vec![u.data()[0], u.data()[1] - 1.0])?;
            comparison_check(&u, &v, s.controls.r_max, s)
        })));
        for m in [2, 3] {
            let name = if m == 2 { "comparison/random-m2" } else { "comparison/random-m3" };
            jobs.push((name, Box::new(move || {
                comparison_suite(&random_ordered_pairs(seed.wrapping_add(m as u64), 100, m), s)
            })));
        }
    }
    if suite.includes(Suite::Barrier) {
        jobs.push(("barrier/branch-m2", Box::new(move || {
            barrier_check(&integrate(&spec(2, 4, Sign::Minus, &[-10.0, 8.0]), &s.controls)?)
        })));
        jobs.push(("barrier/branch-m3", Box::new(move || {
            barrier_check(&integrate(&spec(3, 6, Sign::Minus, &[-5.0, 0.0, 384.0]), &s.controls)?)
        })));
        jobs.push(("barrier/random", Box::new(move || {
            let mut specs = random_sigma0_specs(seed.wrapping_add(10), 10, 2);
            specs.extend(random_sigma0_specs(seed.wrapping_add(11), 10, 3));
            barrier_suite(&specs, s)
        })));
    }
    if suite.includes(Suite::Scaling) {
        jobs.push(("scaling/n4", Box::new(move || scaling_check(&spec(2, 4, Sign::Minus, &[-5.0, 8.0]), 2.0, s))));
        jobs.push(("scaling/n3", Box::new(move || scaling_check(&spec(2, 3, Sign::Minus, &[-5.0, 8.0]), 2.0, s))));
        jobs.push(("scaling/identity", Box::new(move || scaling_check(&spec(2, 4, Sign::Minus, &[-5.0, 8.0]), 1.0, s))));
    }
    if suite.includes(Suite::Conversion) {
        jobs.push(("conversion/spherical-m2", Box::new(move || {
            conversion_check(&spherical_spec(2)?, &[0.0, 0.5, 1.0, 2.0, 10.0], s)
        })));
        jobs.push(("conversion/branch-m3", Box::new(move || {
            conversion_check(&spec(3, 6, Sign::Minus, &[-5.0, 0.0, 384.0]), &[0.0, 0.5, 1.0, 2.0], s)
        })));
    }
    if suite.includes(Suite::FirstZero) {
        jobs.push(("first-zero/m2", Box::new(move || first_zero_check(2, &[10.0, 25.0, 50.0, 100.0], s))));
        jobs.push(("first-zero/m3", Box::new(move || first_zero_check(3, &[5.0, 10.0, 20.0, 40.0], s))));
    }
    if suite.includes(Suite::Limit) {
        jobs.push(("limit/examples", Box::new(move || {
            let specs = [
                spec(3, 6, Sign::Minus, &[0.0, 0.0, 0.0]),
                spec(2, 4, Sign::Minus, &[3.0, 7.0]),
                spec(4, 8, Sign::Minus, &[-1.0, 2.0, 0.0, 5.0]),
            ];
            limit_estimate_check(&specs, s)
        })));
        jobs.push(("limit/random", Box::new(move || {
            let mut specs = random_sigma0_specs(seed.wrapping_add(20), 20, 2);
            specs.extend(random_sigma0_specs(seed.wrapping_add(21), 15, 3));
            specs.extend(random_sigma0_specs(seed.wrapping_add(22), 15, 4));
            limit_estimate_check(&specs, s)
        })));
    }
    let mut reports = jobs
        .par_iter()
        .map(|(name, job)| job().map(|r| r.renamed(name)))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(reports)
}

/// JSON array of reports.
pub fn reports_to_json(reports: &[CheckReport]) -> String {
    serde_json::to_string(reports).expect("reports serialize")
}
