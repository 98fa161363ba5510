//! Dynamical signatures of trajectories: peaks, Lyapunov exponents,
//! attractor classes, bistability probes and hysteresis sweeps.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::integrator::{rk4_step_field, IntegrationConfig, Termination, Trajectory};
use crate::model::{field, field_jacobian, Component, ParamId, StateVector, SystemParams};
use crate::steady_state::FixedPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Refinement {
    /// Parabola through the peak sample and its two neighbours.
    Quadratic,
}

/// Local maxima of one state component over the post-transient span.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakSet {
    pub variable: Component,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub refinement: Refinement,
}

impl PeakSet {
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
}

/// Peaks of `variable` in the post-transient part of `trajectory`.
pub fn local_maxima(trajectory: &Trajectory, variable: Component) -> PeakSet {
    let series = trajectory.series(variable);
    peaks_of_series(trajectory.post_transient_times(), &series, variable)
}

/// Strict local maxima of a uniformly sampled series.
///
/// A sample that exceeds both neighbours is refined with a parabola. A flat
/// run that exceeds the samples on both sides counts as one peak located at
/// its midpoint.
pub fn peaks_of_series(times: &[f64], values: &[f64], variable: Component) -> PeakSet {
    let mut out = PeakSet {
        variable,
        times: Vec::new(),
        values: Vec::new(),
        refinement: Refinement::Quadratic,
    };
    let n = values.len().min(times.len());
    let mut i = 1;
    while i + 1 < n {
        let y1 = values[i];
        if !(y1 > values[i - 1]) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && values[j + 1] == y1 {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        if y1 > values[j + 1] {
            if j == i {
                let (y0, y2) = (values[i - 1], values[i + 1]);
                let h = times[i + 1] - times[i];
                let den = y0 - 2.0 * y1 + y2;
                let delta = if den != 0.0 { 0.5 * (y0 - y2) / den } else { 0.0 };
                out.times.push(times[i] + delta * h);
                out.values.push(y1 - 0.25 * (y0 - y2) * delta);
            } else {
                out.times.push(0.5 * (times[i] + times[j]));
                out.values.push(y1);
            }
        }
        i = j + 1;
    }
    out
}

/// Wasserstein-1 distance between two empirical distributions.
///
/// Infinite when exactly one sample set is empty.
pub fn wasserstein_1(a: &[f64], b: &[f64]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut x = xa[0].min(xb[0]);
    let mut total = 0.0;
    while i < xa.len() || j < xb.len() {
        let next = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - x);
        x = next;
        while i < xa.len() && xa[i] == x {
            i += 1;
        }
        while j < xb.len() && xb[j] == x {
            j += 1;
        }
    }
    total
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LyapunovMethod {
    /// Linearised flow along the trajectory using the analytic Jacobian.
    #[default]
    TangentMap,
    /// Nonlinear companion trajectory at small separation.
    TwoTrajectory,
}

/// Initial separation of the companion trajectory.
pub const TWO_TRAJECTORY_SEPARATION: f64 = 1e-8;

// generic start direction, not aligned with the mode-exchange symmetry
const TANGENT_SEED: [f64; 6] = [0.6, -0.2, 0.5, 0.3, -0.4, 0.3];

fn unit_seed() -> [f64; 6] {
    let n = norm6(&TANGENT_SEED);
    TANGENT_SEED.map(|x| x / n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovResult {
    pub lambda_max: f64,
    /// Standard error of the mean over renormalisation windows.
    pub std_error: f64,
    pub renorm_interval: f64,
    pub windows: usize,
    /// Spread of the running estimate over the last quarter of windows.
    pub drift: f64,
    pub converged: bool,
    pub method: LyapunovMethod,
}

fn renorm_steps(dt: f64, interval: f64) -> Result<usize> {
    if !(interval > 0.0) || !interval.is_finite() {
        return Err(Error::InvalidConfig("renorm_interval must be > 0".into()));
    }
    let k = (interval / dt).round();
    if k < 1.0 || (k * dt - interval).abs() > 1e-9 * interval {
        return Err(Error::InvalidConfig(format!(
            "renorm_interval {interval} is not a multiple of dt {dt}"
        )));
    }
    Ok(k as usize)
}

fn summarize(exponents: &[f64], interval: f64, method: LyapunovMethod) -> LyapunovResult {
    let n = exponents.len();
    if n == 0 {
        return LyapunovResult {
            lambda_max: f64::NAN,
            std_error: f64::NAN,
            renorm_interval: interval,
            windows: 0,
            drift: f64::NAN,
            converged: false,
            method,
        };
    }
    let mean = exponents.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        exponents.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let start = (3 * n).div_ceil(4).max(1);
    for (k, x) in exponents.iter().enumerate() {
        sum += x;
        if k + 1 >= start {
            let running = sum / (k + 1) as f64;
            lo = lo.min(running);
            hi = hi.max(running);
        }
    }
    let drift = hi - lo;
    LyapunovResult {
        lambda_max: mean,
        std_error: (var / n as f64).sqrt(),
        renorm_interval: interval,
        windows: n,
        drift,
        converged: n >= 4 && (drift < 0.2 * mean.abs() || drift < 0.005),
        method,
    }
}

fn norm6(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Recorder<'a> {
    config: &'a IntegrationConfig,
    first_kept: usize,
    times: Vec<f64>,
    states: Vec<StateVector>,
    transient_len: usize,
}

impl<'a> Recorder<'a> {
    fn new(config: &'a IntegrationConfig, state0: &StateVector) -> Self {
        let mut r = Recorder {
            config,
            first_kept: config.transient_steps(),
            times: Vec::with_capacity(config.steps() / config.record_stride + 1),
            states: Vec::with_capacity(config.steps() / config.record_stride + 1),
            transient_len: 0,
        };
        r.push(0, state0);
        r
    }

    fn push(&mut self, step: usize, y: &StateVector) {
        if step % self.config.record_stride != 0 {
            return;
        }
        if step < self.first_kept {
            if !self.config.keep_transient {
                return;
            }
            self.transient_len += 1;
        }
        self.times.push(step as f64 * self.config.dt);
        self.states.push(*y);
    }

    fn finish(self, termination: Termination) -> Trajectory {
        Trajectory {
            times: self.times,
            states: self.states,
            termination,
            config: *self.config,
            transient_len: self.transient_len,
        }
    }
}

/// Integrate and estimate the largest Lyapunov exponent in one pass.
///
/// The returned trajectory is bit-identical to
/// [`crate::integrator::integrate`] with the same inputs. The exponent is
/// `None` when the base trajectory diverges.
pub fn integrate_with_lyapunov(
    state0: &StateVector,
    params: &SystemParams,
    config: &IntegrationConfig,
    renorm_interval: f64,
    method: LyapunovMethod,
) -> Result<(Trajectory, Option<LyapunovResult>)> {
    params.validate()?;
    config.validate()?;
    if !state0.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let k = renorm_steps(config.dt, renorm_interval)?;
    let phase = params.phase();
    let steps = config.steps();
    let first_kept = config.transient_steps();
    let dt = config.dt;
    let mut rec = Recorder::new(config, state0);
    let mut exponents = Vec::new();
    let mut window_start = 0usize;
    let tau = k as f64 * dt;

    let diverged = |t: f64, rec: Recorder| Ok((rec.finish(Termination::Diverged { time: t }), None));

    match method {
        LyapunovMethod::TangentMap => {
            let mut z = [0.0; 12];
            z[..6].copy_from_slice(&state0.0);
            z[6..].copy_from_slice(&unit_seed());
            let f = |z: &[f64; 12]| -> [f64; 12] {
                let y: [f64; 6] = z[..6].try_into().unwrap();
                let dy = field(&y, params, phase);
                let j = field_jacobian(&y, params, phase);
                let mut out = [0.0; 12];
                out[..6].copy_from_slice(&dy);
                for r in 0..6 {
                    let mut s = 0.0;
                    for c in 0..6 {
                        s += j[(r, c)] * z[6 + c];
                    }
                    out[6 + r] = s;
                }
                out
            };
            for step in 1..=steps {
                z = rk4_step_field(&z, dt, f);
                let y = StateVector(z[..6].try_into().unwrap());
                if y.exceeds(config.blow_up_bound) {
                    return diverged(step as f64 * dt, rec);
                }
                rec.push(step, &y);
                if step % k == 0 {
                    let n = norm6(&z[6..]);
                    if !(n > 0.0) || !n.is_finite() {
                        return Err(Error::NonFinite("tangent vector"));
                    }
                    if window_start >= first_kept {
                        exponents.push(n.ln() / tau);
                    }
                    z[6..].iter_mut().for_each(|v| *v /= n);
                    window_start = step;
                }
            }
        }
        LyapunovMethod::TwoTrajectory => {
            let d0 = TWO_TRAJECTORY_SEPARATION;
            let mut y = state0.0;
            let mut w = state0.0;
            for (x, u) in w.iter_mut().zip(unit_seed()) {
                *x += d0 * u;
            }
            let f = |s: &[f64; 6]| field(s, params, phase);
            for step in 1..=steps {
                y = rk4_step_field(&y, dt, f);
                w = rk4_step_field(&w, dt, f);
                let ys = StateVector(y);
                if ys.exceeds(config.blow_up_bound) {
                    return diverged(step as f64 * dt, rec);
                }
                rec.push(step, &ys);
                if step % k == 0 {
                    let d: [f64; 6] = std::array::from_fn(|i| w[i] - y[i]);
                    let n = norm6(&d);
                    if !(n > 0.0) || !n.is_finite() {
                        return Err(Error::NonFinite("trajectory separation"));
                    }
                    if window_start >= first_kept {
                        exponents.push((n / d0).ln() / tau);
                    }
                    w = std::array::from_fn(|i| y[i] + d[i] * d0 / n);
                    window_start = step;
                }
            }
        }
    }
    Ok((
        rec.finish(Termination::Completed),
        Some(summarize(&exponents, renorm_interval, method)),
    ))
}

/// Largest Lyapunov exponent averaged over post-transient windows.
pub fn lyapunov_max(
    state0: &StateVector,
    params: &SystemParams,
    config: &IntegrationConfig,
    renorm_interval: f64,
) -> Result<LyapunovResult> {
    lyapunov_max_with(state0, params, config, renorm_interval, LyapunovMethod::TangentMap)
}

pub fn lyapunov_max_with(
    state0: &StateVector,
    params: &SystemParams,
    config: &IntegrationConfig,
    renorm_interval: f64,
    method: LyapunovMethod,
) -> Result<LyapunovResult> {
    let lean = IntegrationConfig {
        record_stride: config.steps().max(1),
        keep_transient: false,
        ..*config
    };
    match integrate_with_lyapunov(state0, params, &lean, renorm_interval, method)? {
        (_, Some(l)) => Ok(l),
        (t, None) => Err(Error::Diverged {
            time: match t.termination {
                Termination::Diverged { time } => time,
                Termination::Completed => f64::NAN,
            },
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttractorClass {
    FixedPointAttractor,
    Periodic,
    QuasiPeriodic,
    Chaotic,
    Diverged,
    NoOscillation,
    /// The Lyapunov estimate did not settle.
    Unclassifiable,
}

impl AttractorClass {
    pub const ALL: [AttractorClass; 7] = [
        AttractorClass::FixedPointAttractor,
        AttractorClass::Periodic,
        AttractorClass::QuasiPeriodic,
        AttractorClass::Chaotic,
        AttractorClass::Diverged,
        AttractorClass::NoOscillation,
        AttractorClass::Unclassifiable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttractorClass::FixedPointAttractor => "fixed_point",
            AttractorClass::Periodic => "periodic",
            AttractorClass::QuasiPeriodic => "quasi_periodic",
            AttractorClass::Chaotic => "chaotic",
            AttractorClass::Diverged => "diverged",
            AttractorClass::NoOscillation => "no_oscillation",
            AttractorClass::Unclassifiable => "unclassifiable",
        }
    }

    pub fn is_oscillatory(self) -> bool {
        matches!(
            self,
            AttractorClass::Periodic | AttractorClass::QuasiPeriodic | AttractorClass::Chaotic
        )
    }
}

impl fmt::Display for AttractorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttractorClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttractorClass::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::InvalidParams(format!("unknown attractor class '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifySettings {
    /// Largest terminal drift, relative to `max(1, |y|∞)`, still counted as
    /// a fixed point.
    pub fixed_point_drift: f64,
    /// Fraction of the run, at its end, over which drift is measured.
    pub fixed_point_window: f64,
    pub no_oscillation_spread: f64,
    pub chaos_threshold: f64,
    pub max_clusters: usize,
    /// Cluster split threshold relative to the peak-value range.
    pub cluster_gap: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            fixed_point_drift: 1e-6,
            fixed_point_window: 0.1,
            no_oscillation_spread: 1e-6,
            chaos_threshold: 0.02,
            max_clusters: 16,
            cluster_gap: 1e-3,
        }
    }
}

/// Groups of nearly equal peak values, as `(lo, hi, members)`, ascending.
///
/// Consecutive sorted values farther apart than `rel_gap` times the range
/// start a new cluster. Ranges below `rel_gap` of the largest magnitude are
/// a single cluster.
pub fn peak_clusters(values: &[f64], rel_gap: f64) -> Vec<(f64, f64, usize)> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let range = hi - lo;
    let mag = lo.abs().max(hi.abs());
    if range <= rel_gap * mag || range == 0.0 {
        return vec![(lo, hi, v.len())];
    }
    let gap = rel_gap * range;
    let mut out = vec![(v[0], v[0], 1)];
    for w in v.windows(2) {
        let last = out.last_mut().unwrap();
        if w[1] - w[0] > gap {
            out.push((w[1], w[1], 1));
        } else {
            last.1 = w[1];
            last.2 += 1;
        }
    }
    out
}

fn state_scale(t: &Trajectory) -> f64 {
    t.final_state().map_or(1.0, |s| s.max_abs().max(1.0))
}

/// Terminal drift relative to the state scale.
pub fn terminal_drift(trajectory: &Trajectory, window: f64) -> f64 {
    let Some(last) = trajectory.final_state() else {
        return f64::INFINITY;
    };
    let t_end = *trajectory.times.last().unwrap();
    let t0 = t_end - window * trajectory.config.t_total;
    let scale = state_scale(trajectory);
    let times = trajectory.post_transient_times();
    trajectory
        .post_transient()
        .iter()
        .zip(times)
        .filter(|(_, &t)| t >= t0)
        .map(|(s, _)| {
            (0..6)
                .map(|i| (s.0[i] - last.0[i]).abs())
                .fold(0.0_f64, f64::max)
        })
        .fold(0.0_f64, f64::max)
        / scale
}

pub fn classify_attractor(
    trajectory: &Trajectory,
    peaks: &PeakSet,
    lyap: Option<&LyapunovResult>,
) -> AttractorClass {
    classify_attractor_with(trajectory, peaks, lyap, &ClassifySettings::default())
}

pub fn classify_attractor_with(
    trajectory: &Trajectory,
    peaks: &PeakSet,
    lyap: Option<&LyapunovResult>,
    s: &ClassifySettings,
) -> AttractorClass {
    if trajectory.terminated_early() || trajectory.post_transient().is_empty() {
        return AttractorClass::Diverged;
    }
    if terminal_drift(trajectory, s.fixed_point_window) < s.fixed_point_drift {
        return AttractorClass::FixedPointAttractor;
    }
    let series = trajectory.series(peaks.variable);
    let lo = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = peaks.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peaks.is_empty() || hi - lo < s.no_oscillation_spread * state_scale(trajectory) {
        return AttractorClass::NoOscillation;
    }
    let Some(l) = lyap.filter(|l| l.converged) else {
        return AttractorClass::Unclassifiable;
    };
    if l.lambda_max > s.chaos_threshold {
        return AttractorClass::Chaotic;
    }
    let clusters = peak_clusters(&peaks.values, s.cluster_gap);
    if clusters.len() <= s.max_clusters && clusters.iter().all(|c| c.2 >= 2) {
        AttractorClass::Periodic
    } else {
        AttractorClass::QuasiPeriodic
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisSettings {
    pub renorm_interval: f64,
    pub method: LyapunovMethod,
    pub classify: ClassifySettings,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            renorm_interval: 1.0,
            method: LyapunovMethod::TangentMap,
            classify: ClassifySettings::default(),
        }
    }
}

/// Everything extracted from one `(params, IC)` run.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub trajectory: Trajectory,
    pub peaks_ar: PeakSet,
    pub peaks_b1r: PeakSet,
    pub lyapunov: Option<LyapunovResult>,
    pub class: AttractorClass,
    pub clusters: usize,
}

pub fn analyze(
    state0: &StateVector,
    params: &SystemParams,
    config: &IntegrationConfig,
    settings: &AnalysisSettings,
) -> Result<Analysis> {
    let (trajectory, lyapunov) =
        integrate_with_lyapunov(state0, params, config, settings.renorm_interval, settings.method)?;
    let peaks_ar = local_maxima(&trajectory, Component::Ar);
    let peaks_b1r = local_maxima(&trajectory, Component::B1r);
    let class = classify_attractor_with(&trajectory, &peaks_ar, lyapunov.as_ref(), &settings.classify);
    let clusters = peak_clusters(&peaks_ar.values, settings.classify.cluster_gap).len();
    Ok(Analysis {
        trajectory,
        peaks_ar,
        peaks_b1r,
        lyapunov,
        class,
        clusters,
    })
}

/// Decimated post-transient point clouds in the `(α_r, α_i)` and
/// `(β_1r, β_1i)` planes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttractorCloud {
    pub optical: Vec<[f64; 2]>,
    pub mechanical: Vec<[f64; 2]>,
}

pub const DEFAULT_CLOUD_POINTS: usize = 2000;

impl AttractorCloud {
    pub fn from_trajectory(t: &Trajectory, max_points: usize) -> Self {
        let s = t.post_transient();
        let stride = s.len().div_ceil(max_points.max(1)).max(1);
        let mut c = AttractorCloud::default();
        // walk back from the end so the last sample is always present
        for x in s.iter().rev().step_by(stride) {
            c.optical.push([x.0[0], x.0[1]]);
            c.mechanical.push([x.0[2], x.0[3]]);
        }
        c.optical.reverse();
        c.mechanical.reverse();
        c
    }

    pub fn is_empty(&self) -> bool {
        self.optical.is_empty()
    }

    fn scale(&self) -> f64 {
        self.optical
            .iter()
            .chain(&self.mechanical)
            .flat_map(|p| p.iter())
            .fold(1.0_f64, |m, x| m.max(x.abs()))
    }
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn directed_hausdorff_sq(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut worst = 0.0_f64;
    for p in a {
        let mut best = f64::INFINITY;
        for q in b {
            let d = dist2(p, q);
            if d < best {
                best = d;
                if best <= worst {
                    break;
                }
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// Symmetric Hausdorff distance between two planar point sets.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    directed_hausdorff_sq(a, b).max(directed_hausdorff_sq(b, a)).sqrt()
}

pub fn diameter(a: &[[f64; 2]]) -> f64 {
    let mut d = 0.0_f64;
    for (i, p) in a.iter().enumerate() {
        for q in &a[i + 1..] {
            d = d.max(dist2(p, q));
        }
    }
    d.sqrt()
}

/// Hausdorff comparison in one projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionDistance {
    pub distance: f64,
    /// Larger of the two cloud diameters.
    pub diameter: f64,
    pub threshold: f64,
}

impl ProjectionDistance {
    pub fn differs(&self) -> bool {
        self.distance > self.threshold
    }
}

/// Relative threshold on the Hausdorff distance for distinct attractors.
pub const SAME_ATTRACTOR_FRACTION: f64 = 0.01;

/// Distance floor, relative to the state scale, for point-like clouds.
pub const SAME_ATTRACTOR_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudComparison {
    pub optical: ProjectionDistance,
    pub mechanical: ProjectionDistance,
}

impl CloudComparison {
    pub fn same_attractor(&self) -> bool {
        !self.optical.differs() && !self.mechanical.differs()
    }

    /// Largest distance-to-diameter ratio over both projections.
    pub fn relative_distance(&self) -> f64 {
        [self.optical, self.mechanical]
            .iter()
            .map(|p| {
                if p.diameter > 0.0 {
                    p.distance / p.diameter
                } else if p.distance > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

pub fn compare_clouds(a: &AttractorCloud, b: &AttractorCloud) -> CloudComparison {
    let floor = SAME_ATTRACTOR_FLOOR * a.scale().max(b.scale());
    let proj = |pa: &[[f64; 2]], pb: &[[f64; 2]]| {
        let diam = diameter(pa).max(diameter(pb));
        ProjectionDistance {
            distance: hausdorff(pa, pb),
            diameter: diam,
            threshold: (SAME_ATTRACTOR_FRACTION * diam).max(floor),
        }
    };
    CloudComparison {
        optical: proj(&a.optical, &b.optical),
        mechanical: proj(&a.mechanical, &b.mechanical),
    }
}

#[derive(Clone, Debug)]
pub struct BranchOutcome {
    pub class: AttractorClass,
    pub lyapunov: Option<LyapunovResult>,
    pub cloud: AttractorCloud,
    pub diverged_at: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BistabilityReport {
    pub a: BranchOutcome,
    pub b: BranchOutcome,
    /// `None` when either branch diverged.
    pub comparison: Option<CloudComparison>,
}

impl BistabilityReport {
    pub fn same_attractor(&self) -> Option<bool> {
        self.comparison.map(|c| c.same_attractor())
    }
}

fn branch(a: Analysis) -> BranchOutcome {
    BranchOutcome {
        class: a.class,
        diverged_at: match a.trajectory.termination {
            Termination::Diverged { time } => Some(time),
            Termination::Completed => None,
        },
        cloud: AttractorCloud::from_trajectory(&a.trajectory, DEFAULT_CLOUD_POINTS),
        lyapunov: a.lyapunov,
    }
}

/// Run two initial conditions and decide whether they reach the same
/// attractor.
pub fn bistability_probe(
    params: &SystemParams,
    ic_a: &StateVector,
    ic_b: &StateVector,
    config: &IntegrationConfig,
    settings: &AnalysisSettings,
) -> Result<BistabilityReport> {
    let a = branch(analyze(ic_a, params, config, settings)?);
    let b = branch(analyze(ic_b, params, config, settings)?);
    let comparison = if a.diverged_at.is_none() && b.diverged_at.is_none() {
        Some(compare_clouds(&a.cloud, &b.cloud))
    } else {
        None
    };
    Ok(BistabilityReport { a, b, comparison })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "up" | "increasing" => Ok(Direction::Up),
            "down" | "decreasing" => Ok(Direction::Down),
            other => Err(Error::InvalidParams(format!(
                "unknown direction '{other}' (expected up|down)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HysteresisPoint {
    pub value: f64,
    pub direction: Direction,
    pub peaks_ar: PeakSet,
    pub peaks_b1r: PeakSet,
    pub class: AttractorClass,
    pub lambda_max: Option<f64>,
    /// The chain diverged here and was restarted from the origin.
    pub restarted: bool,
    pub cloud: AttractorCloud,
    pub final_state: StateVector,
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Adiabatic parameter continuation. Each point starts from the final state
/// of the previous one; `ic` seeds the first point.
#[allow(clippy::too_many_arguments)]
pub fn hysteresis_sweep(
    base: &SystemParams,
    param: ParamId,
    range: (f64, f64),
    n_points: usize,
    direction: Direction,
    config: &IntegrationConfig,
    ic: &StateVector,
    settings: &AnalysisSettings,
) -> Result<Vec<HysteresisPoint>> {
    if !(range.0.is_finite() && range.1.is_finite()) {
        return Err(Error::InvalidGrid("sweep range must be finite".into()));
    }
    if n_points < 2 {
        return Err(Error::InvalidGrid("sweep needs at least 2 points".into()));
    }
    let mut values = linspace(range.0.min(range.1), range.0.max(range.1), n_points);
    if direction == Direction::Down {
        values.reverse();
    }
    let mut state = *ic;
    let mut out = Vec::with_capacity(n_points);
    for value in values {
        let p = param.with(base, value);
        let mut run = analyze(&state, &p, config, settings)?;
        let mut restarted = false;
        if run.trajectory.terminated_early() {
            log::info!("{param} = {value}: diverged, restarting from the origin");
            run = analyze(&StateVector::ZERO, &p, config, settings)?;
            restarted = true;
        }
        let final_state = run.trajectory.final_state().copied().unwrap_or(StateVector::ZERO);
        state = if run.trajectory.terminated_early() {
            StateVector::ZERO
        } else {
            final_state
        };
        out.push(HysteresisPoint {
            value,
            direction,
            cloud: AttractorCloud::from_trajectory(&run.trajectory, DEFAULT_CLOUD_POINTS),
            lambda_max: run.lyapunov.as_ref().map(|l| l.lambda_max),
            peaks_ar: run.peaks_ar,
            peaks_b1r: run.peaks_b1r,
            class: run.class,
            restarted,
            final_state,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchComparison {
    pub value: f64,
    pub up: AttractorClass,
    pub down: AttractorClass,
    /// `None` when either branch diverged at this value.
    pub distance: Option<CloudComparison>,
}

impl BranchComparison {
    pub fn disagree(&self) -> bool {
        self.up != self.down || self.distance.is_some_and(|d| !d.same_attractor())
    }
}

/// Pair the two directions of a sweep by parameter value.
pub fn compare_branches(up: &[HysteresisPoint], down: &[HysteresisPoint]) -> Vec<BranchComparison> {
    let mut out = Vec::new();
    for u in up {
        if let Some(d) = down.iter().find(|d| d.value == u.value) {
            let distance = if u.class == AttractorClass::Diverged || d.class == AttractorClass::Diverged {
                None
            } else {
                Some(compare_clouds(&u.cloud, &d.cloud))
            };
            out.push(BranchComparison {
                value: u.value,
                up: u.class,
                down: d.class,
                distance,
            });
        }
    }
    out
}

/// Contiguous parameter intervals where the branches disagree.
pub fn disagreement_windows(cmp: &[BranchComparison]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut open = false;
    for c in cmp {
        if c.disagree() {
            if open {
                out.last_mut().unwrap().1 = c.value;
            } else {
                out.push((c.value, c.value));
                open = true;
            }
        } else {
            open = false;
        }
    }
    out
}

/// Relative radius of the linear neighbourhood around a fixed point.
pub const NEIGHBOURHOOD_RADIUS: f64 = 1e-2;

/// Hidden-attractor annotation.
///
/// True for an oscillatory attractor reached from an IC outside every fixed
/// point's neighbourhood, when either no fixed point exists or every fixed
/// point is locally attracting.
pub fn is_hidden_attractor(
    ic: &StateVector,
    class: AttractorClass,
    fixed_points: &[FixedPoint],
) -> bool {
    if !class.is_oscillatory() {
        return false;
    }
    let near = fixed_points.iter().any(|fp| {
        let r = NEIGHBOURHOOD_RADIUS * fp.state.max_abs().max(1.0);
        (0..6).all(|i| (ic.0[i] - fp.state.0[i]).abs() <= r)
    });
    !near && fixed_points.iter().all(|fp| fp.stable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::integrate;

    fn sampled(f: impl Fn(f64) -> f64, dt: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let y = t.iter().map(|&x| f(x)).collect();
        (t, y)
    }

    #[test]
    fn sine_peaks_refined() {
        let (t, y) = sampled(f64::sin, 0.01, 10_000);
        let p = peaks_of_series(&t, &y, Component::Ar);
        assert_eq!(p.len(), 16);
        for (&tp, &v) in p.times.iter().zip(&p.values) {
            assert!((v - 1.0).abs() < 1e-4);
            let k = ((tp - std::f64::consts::FRAC_PI_2) / std::f64::consts::TAU).round();
            let want = std::f64::consts::FRAC_PI_2 + k * std::f64::consts::TAU;
            assert!((tp - want).abs() < 1e-4, "{tp} {want}");
        }
        // coarse sampling still within tolerance for this amplitude
        let (t, y) = sampled(|x| 3.0 * (1.3 * x + 0.2).sin() - 1.0, 0.05, 2000);
        for v in peaks_of_series(&t, &y, Component::Ar).values {
            assert!((v - 2.0).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn flat_and_monotone_series_have_no_peaks() {
        let t: Vec<f64> = (0..50).map(f64::from).collect();
        assert!(peaks_of_series(&t, &[2.0; 50], Component::Ar).is_empty());
        assert!(peaks_of_series(&t, &t, Component::Ar).is_empty());
        assert!(peaks_of_series(&t[..2], &[1.0, 2.0], Component::Ar).is_empty());
    }

    #[test]
    fn plateau_resolves_to_midpoint() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [0.0, 1.0, 3.0, 3.0, 3.0, 1.0];
        let p = peaks_of_series(&t, &y, Component::B1r);
        assert_eq!(p.times, vec![3.0]);
        assert_eq!(p.values, vec![3.0]);
        // a plateau that runs into the end is not a peak
        let y = [0.0, 1.0, 3.0, 3.0, 3.0, 3.0];
        assert!(peaks_of_series(&t, &y, Component::B1r).is_empty());
    }

    #[test]
    fn wasserstein_basic() {
        assert_eq!(wasserstein_1(&[], &[]), 0.0);
        assert!(wasserstein_1(&[1.0], &[]).is_infinite());
        assert!((wasserstein_1(&[0.0], &[2.5]) - 2.5).abs() < 1e-15);
        assert!((wasserstein_1(&[0.0, 1.0], &[1.0, 2.0]) - 1.0).abs() < 1e-15);
        assert!((wasserstein_1(&[0.0, 0.0, 3.0], &[0.0, 3.0, 3.0]) - 1.0).abs() < 1e-15);
        let a = [0.3, -1.0, 2.0, 0.3];
        assert_eq!(wasserstein_1(&a, &a), 0.0);
    }

    #[test]
    fn clusters() {
        assert!(peak_clusters(&[], 1e-3).is_empty());
        assert_eq!(peak_clusters(&[5.0, 5.0 + 1e-9, 5.0 - 1e-9], 1e-3).len(), 1);
        let two: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 + 1e-9 * i as f64 }).collect();
        let c = peak_clusters(&two, 1e-3);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].2, 20);
        let band: Vec<f64> = (0..200).map(|i| (i as f64 * 0.7548776662).fract()).collect();
        assert!(peak_clusters(&band, 1e-3).len() > 16);
    }

    fn linear_params() -> SystemParams {
        SystemParams {
            g1: 0.0,
            g2: 0.0,
            jm: 0.0,
            alpha_in: 0.0,
            ..SystemParams::default()
        }
    }

    #[test]
    fn linear_lyapunov_is_mechanical_damping() {
        let p = linear_params();
        let c = IntegrationConfig::default();
        let s0 = StateVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let l = lyapunov_max(&s0, &p, &c, 1.0).unwrap();
        assert!((l.lambda_max + 5.385e-6).abs() < 1e-6, "{l:?}");
        assert!(l.converged);
        assert!(l.std_error >= 0.0);
        let l2 = lyapunov_max_with(&s0, &p, &c, 1.0, LyapunovMethod::TwoTrajectory).unwrap();
        assert!((l2.lambda_max + 5.385e-6).abs() < 1e-6, "{l2:?}");
    }

    #[test]
    fn lyapunov_pass_preserves_trajectory() {
        let p = SystemParams {
            delta: -1.0,
            ..SystemParams::default()
        };
        let c = IntegrationConfig {
            t_total: 20.0,
            t_transient: 10.0,
            ..Default::default()
        };
        let plain = integrate(&StateVector::ZERO, &p, &c).unwrap();
        for m in [LyapunovMethod::TangentMap, LyapunovMethod::TwoTrajectory] {
            let (t, l) = integrate_with_lyapunov(&StateVector::ZERO, &p, &c, 1.0, m).unwrap();
            assert_eq!(t, plain);
            assert_eq!(l.unwrap().windows, 10);
        }
    }

    #[test]
    fn renorm_interval_must_divide() {
        let p = linear_params();
        let c = IntegrationConfig::default();
        assert!(lyapunov_max(&StateVector::ZERO, &p, &c, 1.00005).is_err());
        assert!(lyapunov_max(&StateVector::ZERO, &p, &c, 0.0).is_err());
    }

    #[test]
    fn diverging_run_has_no_exponent() {
        let p = SystemParams {
            convention: crate::model::Convention::PaperVerbatim,
            ..SystemParams::default()
        };
        let c = IntegrationConfig {
            blow_up_bound: 1e6,
            ..Default::default()
        };
        assert!(matches!(
            lyapunov_max(&StateVector::ZERO, &p, &c, 1.0),
            Err(Error::Diverged { .. })
        ));
        let a = analyze(&StateVector::ZERO, &p, &c, &AnalysisSettings::default()).unwrap();
        assert_eq!(a.class, AttractorClass::Diverged);
        assert!(a.lyapunov.is_none());
    }

    #[test]
    fn undriven_is_fixed_point() {
        let p = SystemParams {
            alpha_in: 0.0,
            g1: 0.0,
            g2: 0.0,
            ..SystemParams::default()
        };
        let s0 = StateVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let a = analyze(&s0, &p, &IntegrationConfig::default(), &AnalysisSettings::default()).unwrap();
        assert_eq!(a.class, AttractorClass::FixedPointAttractor);
    }

    fn synthetic(values: impl Fn(f64) -> [f64; 6], n: usize) -> Trajectory {
        let config = IntegrationConfig {
            dt: 0.01,
            t_total: n as f64 * 0.01,
            t_transient: 0.0,
            record_stride: 1,
            ..Default::default()
        };
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * 0.01).collect();
        Trajectory {
            states: times.iter().map(|&t| StateVector(values(t))).collect(),
            times,
            termination: Termination::Completed,
            config,
            transient_len: 0,
        }
    }

    fn converged(lambda: f64) -> LyapunovResult {
        LyapunovResult {
            lambda_max: lambda,
            std_error: 0.0,
            renorm_interval: 1.0,
            windows: 100,
            drift: 0.0,
            converged: true,
            method: LyapunovMethod::TangentMap,
        }
    }

    #[test]
    fn decision_tree() {
        let cycle = synthetic(|t| [t.sin() + 0.5 * (2.0 * t).sin(), 0.0, 0.0, 0.0, 0.0, 0.0], 20_000);
        let peaks = local_maxima(&cycle, Component::Ar);
        assert_eq!(classify_attractor(&cycle, &peaks, Some(&converged(0.0))), AttractorClass::Periodic);
        assert_eq!(classify_attractor(&cycle, &peaks, Some(&converged(0.1))), AttractorClass::Chaotic);
        assert_eq!(classify_attractor(&cycle, &peaks, None), AttractorClass::Unclassifiable);
        let mut unsettled = converged(0.0);
        unsettled.converged = false;
        assert_eq!(
            classify_attractor(&cycle, &peaks, Some(&unsettled)),
            AttractorClass::Unclassifiable
        );

        let golden = 0.5 * (5f64.sqrt() - 1.0);
        let torus = synthetic(|t| [t.sin() + 0.7 * (golden * t).sin(), 0.0, 0.0, 0.0, 0.0, 0.0], 200_000);
        let peaks = local_maxima(&torus, Component::Ar);
        assert_eq!(
            classify_attractor(&torus, &peaks, Some(&converged(0.0))),
            AttractorClass::QuasiPeriodic
        );

        let ramp = synthetic(|t| [t, 0.0, 0.0, 0.0, 0.0, 0.0], 1000);
        let peaks = local_maxima(&ramp, Component::Ar);
        assert_eq!(classify_attractor(&ramp, &peaks, None), AttractorClass::NoOscillation);

        let still = synthetic(|_| [3.0, 1.0, 0.0, 0.0, 0.0, 0.0], 1000);
        let peaks = local_maxima(&still, Component::Ar);
        assert_eq!(classify_attractor(&still, &peaks, None), AttractorClass::FixedPointAttractor);

        let mut broken = still.clone();
        broken.termination = Termination::Diverged { time: 1.0 };
        assert_eq!(classify_attractor(&broken, &peaks, None), AttractorClass::Diverged);
    }

    #[test]
    fn hausdorff_metric() {
        let a = [[0.0, 0.0], [1.0, 0.0]];
        let b = [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]];
        assert_eq!(hausdorff(&a, &a), 0.0);
        assert!((hausdorff(&a, &b) - 2.0).abs() < 1e-15);
        assert_eq!(hausdorff(&a, &b), hausdorff(&b, &a));
        assert!((diameter(&b) - 5f64.sqrt()).abs() < 1e-15);
        assert!(hausdorff(&a, &[]).is_infinite());
    }

    #[test]
    fn identical_ics_same_attractor() {
        let p = SystemParams::default();
        let c = IntegrationConfig {
            t_total: 50.0,
            t_transient: 25.0,
            ..Default::default()
        };
        let ic = StateVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let r = bistability_probe(&p, &ic, &ic, &c, &AnalysisSettings::default()).unwrap();
        let cmp = r.comparison.unwrap();
        assert_eq!(cmp.optical.distance, 0.0);
        assert_eq!(cmp.mechanical.distance, 0.0);
        assert_eq!(r.same_attractor(), Some(true));
    }

    #[test]
    fn cloud_keeps_last_sample() {
        let t = synthetic(|t| [t, 0.0, 0.0, 0.0, 0.0, 0.0], 1000);
        let c = AttractorCloud::from_trajectory(&t, 7);
        assert!(c.optical.len() <= 7);
        assert_eq!(c.optical.last().unwrap()[0], t.final_state().unwrap().0[0]);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.4, 0.65, 26);
        assert_eq!(v.len(), 26);
        assert_eq!(v[0], 0.4);
        assert_eq!(v[25], 0.65);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
    }

    #[test]
    fn branch_windows() {
        let mk = |value: f64, same: bool| BranchComparison {
            value,
            up: AttractorClass::Periodic,
            down: if same { AttractorClass::Periodic } else { AttractorClass::Chaotic },
            distance: None,
        };
        let cmp = [mk(0.1, true), mk(0.2, false), mk(0.3, false), mk(0.4, true), mk(0.5, false)];
        assert_eq!(disagreement_windows(&cmp), vec![(0.2, 0.3), (0.5, 0.5)]);
    }

    #[test]
    fn names_round_trip() {
        for c in AttractorClass::ALL {
            assert_eq!(c.name().parse::<AttractorClass>().unwrap(), c);
        }
        assert_eq!("down".parse::<Direction>().unwrap(), Direction::Down);
        assert!("sideways".parse::<Direction>().is_err());
    }
}
