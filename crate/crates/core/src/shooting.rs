//! Prescribing the volume: branch scans, bisection along polylines in
//! initial-data space, the α-family below a σ = +1 solution, and the σ = +1
//! global-existence threshold.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{json_f64, json_f64_vec, sig17};
use crate::ode::{integrate, Outcome};
use crate::problem::{branch_top, ProblemSpec, Sign};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::volume::{total_volume_with_trajectory, TailMode, VolumeReport, VolumeSettings};

/// Scan points per path segment, endpoints included.
pub const SCAN_POINTS_PER_SEGMENT: usize = 9;
/// Starting `b_hi` of the default path.
pub const DEFAULT_B_HI: f64 = 16.0;
/// Largest `b_hi` the default path is extended to.
pub const DEFAULT_B_HI_CAP: f64 = 4096.0;
/// Default `r_max` standing in for "entire" in [`threshold_finder`].
pub const THRESHOLD_R_MAX: f64 = 1e3;

const MAX_BISECTIONS: usize = 200;
const MAX_DOUBLINGS: usize = 60;
const RETRY_VOL_TOL_FACTOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `(−b, 0, …, 0, +c0)`, parameter `b`.
    PlusC0,
    /// `(−b, 0, …, 0, −c0)`, parameter `b`.
    MinusC0,
    /// Template data with `a_{m−1}` lowered by `α ≥ 0`.
    Alpha,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::PlusC0 => "plus_c0",
            Branch::MinusC0 => "minus_c0",
            Branch::Alpha => "alpha",
        }
    }

    /// Initial data at parameter `p`; `template` supplies `m`, `N`, `σ` and, for
    /// [`Branch::Alpha`], the base data.
    pub fn data<T: Real>(&self, template: &ProblemSpec<T>, p: T) -> Result<Vec<T>> {
        let (m, dim) = (template.m(), template.dim());
        let top = branch_top::<T>(m, dim);
        let mut a = vec![T::zero(); m];
        match self {
            Branch::PlusC0 | Branch::MinusC0 => {
                a[0] = -p;
                a[m - 1] = if *self == Branch::PlusC0 { top } else { -top };
            }
            Branch::Alpha => {
                if !(p >= T::zero()) {
                    return Err(Error::InvalidSpec(format!("alpha must be >= 0, got {p}")));
                }
                a = template.data().to_vec();
                a[m - 1] = a[m - 1] - p;
            }
        }
        Ok(a)
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus_c0" => Ok(Branch::PlusC0),
            "minus_c0" => Ok(Branch::MinusC0),
            "alpha" => Ok(Branch::Alpha),
            _ => Err(Error::InvalidSpec(format!(
                "unknown branch {s:?} (expected plus_c0, minus_c0 or alpha)"
            ))),
        }
    }
}

/// One row of a branch scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow<T> {
    pub param: T,
    pub report: Result<VolumeReport<T>>,
    /// Trajectory outcome label (`GlobalToRmax`, `BlowUp`, `StepUnderflow`).
    pub outcome: &'static str,
}

impl<T: Real> ScanRow<T> {
    /// Row flagged because its tail could not be bounded (or the volume is undefined).
    pub fn is_flagged(&self) -> bool {
        match &self.report {
            Ok(r) => r.tail_mode == TailMode::Invalid || !r.rel_err.is_finite(),
            Err(_) => true,
        }
    }

    pub fn total(&self) -> Option<T> {
        self.report.as_ref().ok().map(|r| r.total)
    }
}

fn scan_one<T: Real>(branch: Branch, template: &ProblemSpec<T>, settings: &VolumeSettings<T>, p: T) -> ScanRow<T> {
    let run = || -> Result<(VolumeReport<T>, &'static str)> {
        let spec = template.with_data(branch.data(template, p)?)?;
        let (rep, traj) = total_volume_with_trajectory(&spec, &settings.controls, settings.vol_tol)?;
        Ok((rep, traj.outcome().label()))
    };
    match run() {
        Ok((rep, outcome)) => ScanRow { param: p, report: Ok(rep), outcome },
        Err(e) => {
            let outcome = match e {
                Error::BlowUp { .. } => "BlowUp",
                Error::StepUnderflow { .. } => "StepUnderflow",
                _ => "Error",
            };
            ScanRow { param: p, report: Err(e), outcome }
        }
    }
}

/// Volume along a one-parameter branch, evaluated in parallel; rows come back
/// in the order of `params`.
pub fn scan_branch<T: Real>(
    branch: Branch,
    params: &[T],
    template: &ProblemSpec<T>,
    settings: &VolumeSettings<T>,
) -> Vec<ScanRow<T>> {
    params
        .par_iter()
        .map(|&p| scan_one(branch, template, settings, p))
        .collect()
}

/// Single-threaded [`scan_branch`].
pub fn scan_branch_serial<T: Real>(
    branch: Branch,
    params: &[T],
    template: &ProblemSpec<T>,
    settings: &VolumeSettings<T>,
) -> Vec<ScanRow<T>> {
    params.iter().map(|&p| scan_one(branch, template, settings, p)).collect()
}

/// `lo:hi:n` grid, `n` equally spaced points including both ends.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidSpec(format!("grid must be lo:hi:n, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// Header `param,total,rel_err,tail_mode,ell_estimate,outcome`.
pub fn scan_to_csv<T: Real>(rows: &[ScanRow<T>]) -> String {
    let mut out = String::from("param,total,rel_err,tail_mode,ell_estimate,outcome\n");
    for row in rows {
        let (total, rel, mode, ell) = match &row.report {
            Ok(r) => (r.total, r.rel_err, r.tail_mode.as_str(), r.ell_estimate),
            Err(_) => (T::nan(), T::infinity(), TailMode::Invalid.as_str(), T::nan()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            sig17(row.param),
            sig17(total),
            sig17(rel),
            mode,
            sig17(ell),
            row.outcome
        );
    }
    out
}

/// Polyline in initial-data space, parameter `s ∈ [0, K]` for `K` segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec<T> {
    template: ProblemSpec<T>,
    vertices: Vec<Vec<T>>,
}

/// On-disk form of a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFile {
    pub m: usize,
    #[serde(default)]
    pub dim: Option<usize>,
    pub sign: Sign,
    pub vertices: Vec<Vec<f64>>,
}

impl<T: Real> PathSpec<T> {
    pub fn new(template: &ProblemSpec<T>, vertices: Vec<Vec<T>>) -> Result<Self> {
        let m = template.m();
        if vertices.len() < 2 {
            return Err(Error::InvalidSpec("a path needs at least 2 vertices".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != m {
                return Err(Error::InvalidSpec(format!(
                    "vertex {i} has length {}, expected {m}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSpec(format!("vertex {i} is not finite")));
            }
            if m >= 3 && template.sign() == Sign::Minus && v[m - 2] != T::zero() {
                return Err(Error::InvalidSpec(format!(
                    "vertex {i} leaves the slice a_(m-2) = 0"
                )));
            }
            if i > 0 && vertices[i - 1] == *v {
                return Err(Error::InvalidSpec(format!("vertices {} and {i} coincide", i - 1)));
            }
        }
        Ok(Self {
            template: template.clone(),
            vertices,
        })
    }

    /// `(−b_hi,0,…,−c0) → (0,…,−c0) → (0,…,+c0) → (−b_hi,0,…,+c0)`.
    pub fn default_path(template: &ProblemSpec<T>, b_hi: T) -> Result<Self> {
        let minus = Branch::MinusC0;
        let plus = Branch::PlusC0;
        let vertices = vec![
            minus.data(template, b_hi)?,
            minus.data(template, T::zero())?,
            plus.data(template, T::zero())?,
            plus.data(template, b_hi)?,
        ];
        Self::new(template, vertices)
    }

    pub fn from_file(file: &PathFile) -> Result<PathSpec<f64>> {
        let dim = file.dim.unwrap_or(2 * file.m);
        let template = ProblemSpec::new(file.m, dim, file.sign, vec![0.0; file.m])?;
        PathSpec::new(&template, file.vertices.clone())
    }

    pub fn template(&self) -> &ProblemSpec<T> {
        &self.template
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    pub fn segments(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Affine interpolation of the vertices at `s` (clamped to `[0, K]`).
    pub fn point(&self, s: T) -> Vec<T> {
        let k = self.segments();
        let s = s.max(T::zero()).min(from_usize(k));
        let i = s.floor().to_usize().unwrap_or(0).min(k - 1);
        let t = s - from_usize(i);
        let (a, b) = (&self.vertices[i], &self.vertices[i + 1]);
        a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
    }

    pub fn spec_at(&self, s: T) -> Result<ProblemSpec<T>> {
        self.template.with_data(self.point(s))
    }
}

/// Located initial data and how it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootResult<T> {
    pub found_data: Vec<T>,
    /// Path parameter (or `α`) of `found_data`.
    pub found_param: T,
    pub achieved_volume: T,
    pub target_volume: T,
    pub bracket_lo: T,
    pub bracket_hi: T,
    pub evaluations: usize,
    /// Every `(parameter, volume)` evaluated, in evaluation order.
    pub history: Vec<(T, T)>,
    pub report: VolumeReport<T>,
}

#[derive(Serialize)]
struct ShootJson {
    #[serde(serialize_with = "json_f64_vec")]
    found_data: Vec<f64>,
    #[serde(serialize_with = "json_f64")]
    achieved_volume: f64,
    #[serde(serialize_with = "json_f64")]
    target_volume: f64,
    #[serde(serialize_with = "json_f64")]
    bracket_lo: f64,
    #[serde(serialize_with = "json_f64")]
    bracket_hi: f64,
    evaluations: usize,
}

impl<T: Real> ShootResult<T> {
    /// Keys `found_data, achieved_volume, target_volume, bracket_lo, bracket_hi, evaluations`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ShootJson {
            found_data: self.found_data.iter().map(|&x| to_f64(x)).collect(),
            achieved_volume: to_f64(self.achieved_volume),
            target_volume: to_f64(self.target_volume),
            bracket_lo: to_f64(self.bracket_lo),
            bracket_hi: to_f64(self.bracket_hi),
            evaluations: self.evaluations,
        })
        .expect("shoot result serializes")
    }

    /// Header `param,volume`.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("param,volume\n");
        for (p, v) in &self.history {
            let _ = writeln!(out, "{},{}", sig17(*p), sig17(*v));
        }
        out
    }
}

/// Counts and records volume evaluations along a parameter.
struct Probe<T, F> {
    eval: F,
    target: T,
    tol: T,
    vol_tol: T,
    history: Vec<(T, T)>,
}

impl<T: Real, F: FnMut(T, T) -> Result<VolumeReport<T>>> Probe<T, F> {
    fn new(eval: F, target: T, tol: T, vol_tol: T) -> Self {
        Self {
            eval,
            target,
            tol,
            vol_tol,
            history: Vec::new(),
        }
    }

    /// Volume at `p`; an unusable tail is retried once at a tighter `vol_tol`.
    fn volume(&mut self, p: T) -> Result<VolumeReport<T>> {
        let mut rep = (self.eval)(p, self.vol_tol)?;
        if !usable(&rep) {
            rep = (self.eval)(p, self.vol_tol * lit(RETRY_VOL_TOL_FACTOR))?;
            if !usable(&rep) {
                self.history.push((p, rep.total));
                return Err(Error::InvalidTail {
                    param: to_f64(p),
                    message: format!("tail mode {} after retry", rep.tail_mode.as_str()),
                });
            }
        }
        self.history.push((p, rep.total));
        Ok(rep)
    }

    fn hit(&self, v: T) -> bool {
        (v - self.target).abs() <= self.tol * self.target
    }

    fn side(&self, v: T) -> bool {
        v > self.target
    }

    fn table(&self) -> Vec<(f64, f64)> {
        self.history.iter().map(|&(p, v)| (to_f64(p), to_f64(v))).collect()
    }

    /// Bisection on `[lo, hi]` whose volumes straddle the target.
    fn bisect(&mut self, mut lo: T, mut hi: T, lo_above: bool) -> Result<(T, T, T, VolumeReport<T>)> {
        for _ in 0..MAX_BISECTIONS {
            let mid = lo + (hi - lo) / lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            let rep = self.volume(mid)?;
            if self.hit(rep.total) {
                return Ok((mid, lo, hi, rep));
            }
            if self.side(rep.total) == lo_above {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::Bracketing {
            message: format!("bisection collapsed on [{lo}, {hi}] without meeting the tolerance"),
            table: self.table(),
        })
    }
}

fn usable<T: Real>(rep: &VolumeReport<T>) -> bool {
    rep.tail_mode != TailMode::Invalid && rep.rel_err.is_finite() && rep.total.is_finite()
}

fn validate_target<T: Real>(target: T, tol: T) -> Result<()> {
    if !(target > T::zero() && target.is_finite()) {
        return Err(Error::Domain(format!("target volume must be positive, got {target}")));
    }
    if !(tol > T::zero() && tol < T::one()) {
        return Err(Error::InvalidSpec(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    Ok(())
}

/// Bisects along `path` for data whose volume is within `tol · target` of `target`.
///
/// The path is scanned at [`SCAN_POINTS_PER_SEGMENT`] points per segment from
/// `s = 0`; the first sub-interval whose end volumes straddle the target is
/// refined once at its quarter points and then bisected.
pub fn solve_for_volume<T: Real>(
    target: T,
    path: &PathSpec<T>,
    tol: T,
    settings: &VolumeSettings<T>,
) -> Result<ShootResult<T>> {
    validate_target(target, tol)?;
    let eval = |s: T, vol_tol: T| {
        let spec = path.spec_at(s)?;
        crate::volume::total_volume(&spec, &settings.controls, vol_tol)
    };
    let mut probe = Probe::new(eval, target, tol, settings.vol_tol);
    let finish = |probe: Probe<T, _>, s: T, lo: T, hi: T, rep: VolumeReport<T>| ShootResult {
        found_data: path.point(s),
        found_param: s,
        achieved_volume: rep.total,
        target_volume: target,
        bracket_lo: lo,
        bracket_hi: hi,
        evaluations: probe.history.len(),
        history: probe.history,
        report: rep,
    };

    let per = SCAN_POINTS_PER_SEGMENT - 1;
    let n = path.segments() * per;
    let step = T::one() / from_usize(per);
    let mut prev: Option<(T, bool)> = None;
    let mut straddle = None;
    for j in 0..=n {
        let s = from_usize::<T>(j) * step;
        let rep = probe.volume(s)?;
        if probe.hit(rep.total) {
            return Ok(finish(probe, s, s, s, rep));
        }
        let above = probe.side(rep.total);
        if let Some((ps, pa)) = prev {
            if pa != above {
                straddle = Some((ps, s, pa));
                break;
            }
        }
        prev = Some((s, above));
    }
    let Some((mut lo, mut hi, mut lo_above)) = straddle else {
        return Err(Error::Bracketing {
            message: format!("no scanned pair straddles target {target}"),
            table: probe.table(),
        });
    };

    // one refinement pass at the quarter points, keeping the leftmost straddle
    let quarter = (hi - lo) / lit(4.0);
    let mut left = (lo, lo_above);
    for q in 1..4 {
        let s = lo + quarter * from_usize(q);
        let rep = probe.volume(s)?;
        if probe.hit(rep.total) {
            return Ok(finish(probe, s, s, s, rep));
        }
        let above = probe.side(rep.total);
        if above != left.1 {
            hi = s;
            break;
        }
        left = (s, above);
    }
    lo = left.0;
    lo_above = left.1;

    let (s, blo, bhi, rep) = probe.bisect(lo, hi, lo_above)?;
    Ok(finish(probe, s, blo, bhi, rep))
}

/// [`solve_for_volume`] on the default path, doubling `b_hi` from
/// [`DEFAULT_B_HI`] up to [`DEFAULT_B_HI_CAP`] until the target is straddled.
pub fn solve_for_volume_default<T: Real>(
    target: T,
    template: &ProblemSpec<T>,
    tol: T,
    settings: &VolumeSettings<T>,
) -> Result<ShootResult<T>> {
    let cap = lit::<T>(DEFAULT_B_HI_CAP);
    let mut b_hi = lit::<T>(DEFAULT_B_HI);
    let mut spent = 0;
    let mut table = Vec::new();
    loop {
        let path = PathSpec::default_path(template, b_hi)?;
        match solve_for_volume(target, &path, tol, settings) {
            Ok(mut res) => {
                res.evaluations += spent;
                return Ok(res);
            }
            Err(Error::Bracketing { message, table: t }) => {
                spent += t.len();
                table.extend(t);
                if b_hi * lit(2.0) > cap {
                    return Err(Error::Bracketing {
                        message: format!("{message}; b_hi reached {b_hi}"),
                        table,
                    });
                }
                b_hi = b_hi * lit(2.0);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Data of `u0` with `Δ^{m−1}u(0)` lowered by `α`.
pub fn alpha_data<T: Real>(u0: &ProblemSpec<T>, alpha: T) -> Vec<T> {
    let mut a = u0.data().to_vec();
    let m = a.len();
    a[m - 1] = a[m - 1] - alpha;
    a
}

/// Finds `α > 0` with `V(α) = target` for the family `Δ^{m−1}u(0) = Δ^{m−1}u0(0) − α`.
///
/// Volumes decrease in `α`; the bracket is found by multiplying or dividing
/// `α = 1` by 4, then bisected.
pub fn alpha_family<T: Real>(
    u0: &ProblemSpec<T>,
    target: T,
    tol: T,
    settings: &VolumeSettings<T>,
) -> Result<ShootResult<T>> {
    if u0.sign() != Sign::Plus {
        return Err(Error::Precondition("the alpha family needs sigma = +1".into()));
    }
    validate_target(target, tol)?;
    let v0 = settings.total_volume(u0)?;
    if !(target < v0.total) {
        return Err(Error::Domain(format!(
            "target {target} must lie in (0, V0) with V0 = {}",
            v0.total
        )));
    }
    let eval = |alpha: T, vol_tol: T| {
        let spec = u0.with_data(alpha_data(u0, alpha))?;
        crate::volume::total_volume(&spec, &settings.controls, vol_tol)
    };
    let mut probe = Probe::new(eval, target, tol, settings.vol_tol);
    let finish = |probe: Probe<T, _>, a: T, lo: T, hi: T, rep: VolumeReport<T>| ShootResult {
        found_data: alpha_data(u0, a),
        found_param: a,
        achieved_volume: rep.total,
        target_volume: target,
        bracket_lo: lo,
        bracket_hi: hi,
        evaluations: probe.history.len(),
        history: probe.history,
        report: rep,
    };

    let four = lit::<T>(4.0);
    let mut alpha = T::one();
    let rep = probe.volume(alpha)?;
    if probe.hit(rep.total) {
        return Ok(finish(probe, alpha, alpha, alpha, rep));
    }
    let start_above = probe.side(rep.total);
    let mut other = alpha;
    let mut found = false;
    for _ in 0..MAX_DOUBLINGS {
        other = if start_above { alpha * four } else { alpha / four };
        let rep = probe.volume(other)?;
        if probe.hit(rep.total) {
            return Ok(finish(probe, other, other, other, rep));
        }
        if probe.side(rep.total) != start_above {
            found = true;
            break;
        }
        alpha = other;
    }
    if !found {
        return Err(Error::Bracketing {
            message: format!("no alpha bracket for target {target}"),
            table: probe.table(),
        });
    }
    let (lo, hi) = if alpha < other { (alpha, other) } else { (other, alpha) };
    let (a, blo, bhi, rep) = probe.bisect(lo, hi, true)?;
    Ok(finish(probe, a, blo, bhi, rep))
}

/// Search on `β = Δ^{m−1}u(0)` for the σ = +1 global-existence threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdQuery<T> {
    pub m: usize,
    /// `a_0, …, a_{m−2}`.
    pub fixed: Vec<T>,
    /// Requested bracket width.
    pub resolution: T,
    /// Radius standing in for "entire".
    pub r_max: T,
}

impl<T: Real> ThresholdQuery<T> {
    pub fn new(m: usize, fixed: Vec<T>) -> Self {
        Self {
            m,
            fixed,
            resolution: lit(0.1),
            r_max: lit(THRESHOLD_R_MAX),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult<T> {
    /// Midpoint of the bracket.
    pub threshold: T,
    /// Largest probed `β` reaching `r_max`.
    pub lower: T,
    /// Smallest probed `β` failing to reach `r_max`.
    pub upper: T,
    pub width: T,
    pub lower_outcome: &'static str,
    /// `Δ^{m−1}u` at the last node of the `lower` trajectory.
    pub lower_ell: T,
    pub upper_outcome: &'static str,
    /// Radius where the `upper` trajectory stopped.
    pub upper_radius: T,
    pub r_max: T,
    /// Global existence is only tested up to `r_max`.
    pub approximate: bool,
    pub evaluations: usize,
    pub history: Vec<(T, &'static str)>,
}

#[derive(Serialize)]
struct ThresholdJson {
    #[serde(serialize_with = "json_f64")]
    threshold: f64,
    #[serde(serialize_with = "json_f64")]
    lower: f64,
    #[serde(serialize_with = "json_f64")]
    upper: f64,
    #[serde(serialize_with = "json_f64")]
    width: f64,
    lower_outcome: &'static str,
    #[serde(serialize_with = "json_f64")]
    lower_ell: f64,
    upper_outcome: &'static str,
    #[serde(serialize_with = "json_f64")]
    upper_radius: f64,
    #[serde(serialize_with = "json_f64")]
    r_max: f64,
    approximate: bool,
    evaluations: usize,
}

impl<T: Real> ThresholdResult<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ThresholdJson {
            threshold: to_f64(self.threshold),
            lower: to_f64(self.lower),
            upper: to_f64(self.upper),
            width: to_f64(self.width),
            lower_outcome: self.lower_outcome,
            lower_ell: to_f64(self.lower_ell),
            upper_outcome: self.upper_outcome,
            upper_radius: to_f64(self.upper_radius),
            r_max: to_f64(self.r_max),
            approximate: self.approximate,
            evaluations: self.evaluations,
        })
        .expect("threshold result serializes")
    }
}

struct BetaProbe<T> {
    global: bool,
    outcome: Outcome<T>,
    ell: T,
}

/// Brackets the largest `β` whose σ = +1 trajectory in `R^{2m}` reaches `r_max`.
pub fn threshold_finder<T: Real>(query: &ThresholdQuery<T>, settings: &VolumeSettings<T>) -> Result<ThresholdResult<T>> {
    let m = query.m;
    if query.fixed.len() + 1 != m {
        return Err(Error::InvalidSpec(format!(
            "threshold search fixes a_0..a_(m-2): expected {} values, got {}",
            m.saturating_sub(1),
            query.fixed.len()
        )));
    }
    if !(query.resolution > T::zero()) {
        return Err(Error::InvalidSpec("resolution must be positive".into()));
    }
    let controls = settings.controls.with_r_max(query.r_max);
    let mut history = Vec::new();
    let mut run = |beta: T| -> Result<BetaProbe<T>> {
        let mut a = query.fixed.clone();
        a.push(beta);
        let spec = ProblemSpec::conformal(m, Sign::Plus, a)?;
        let traj = integrate(&spec, &controls)?;
        let outcome = traj.outcome();
        history.push((beta, outcome.label()));
        Ok(BetaProbe {
            global: outcome.is_global(),
            outcome,
            ell: traj.last().w[m - 1],
        })
    };

    let two = lit::<T>(2.0);
    let mut lower: Option<(T, BetaProbe<T>)> = None;
    let mut upper: Option<(T, BetaProbe<T>)> = None;

    let mut beta = T::one();
    for _ in 0..=MAX_DOUBLINGS {
        let p = run(beta)?;
        if p.global {
            lower = Some((beta, p));
            beta = beta * two;
        } else {
            upper = Some((beta, p));
            break;
        }
    }
    let Some((mut hi, mut hi_probe)) = upper else {
        return Err(Error::SearchFailed(format!(
            "no blow-up up to beta = {beta} after {MAX_DOUBLINGS} doublings"
        )));
    };
    if lower.is_none() {
        let mut beta = -T::one();
        for _ in 0..=MAX_DOUBLINGS {
            let p = run(beta)?;
            if p.global {
                lower = Some((beta, p));
                break;
            }
            hi = beta;
            hi_probe = p;
            beta = beta * two;
        }
    }
    let Some((mut lo, mut lo_probe)) = lower else {
        return Err(Error::SearchFailed(format!(
            "every probe down to beta = {beta} fails to reach r_max"
        )));
    };
    while hi - lo > query.resolution {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let p = run(mid)?;
        if p.global {
            lo = mid;
            lo_probe = p;
        } else {
            hi = mid;
            hi_probe = p;
        }
    }
    Ok(ThresholdResult {
        threshold: lo + (hi - lo) / two,
        lower: lo,
        upper: hi,
        width: hi - lo,
        lower_outcome: lo_probe.outcome.label(),
        lower_ell: lo_probe.ell,
        upper_outcome: hi_probe.outcome.label(),
        upper_radius: hi_probe.outcome.radius(),
        r_max: query.r_max,
        approximate: true,
        evaluations: history.len(),
        history,
    })
}
