//! Fixed-step classical RK4.

use crate::analysis::{local_maxima, wasserstein_1};
use crate::error::{Error, Result};
use crate::model::{field, Component, StateVector, SystemParams, DEFAULT_BLOW_UP_BOUND};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_total: f64,
    /// Samples before this time are transient.
    pub t_transient: f64,
    /// Keep one sample every `record_stride` steps.
    pub record_stride: usize,
    pub blow_up_bound: f64,
    /// Retain transient samples in the returned trajectory.
    pub keep_transient: bool,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_total: 1e3,
            t_transient: 0.5e3,
            record_stride: 10,
            blow_up_bound: DEFAULT_BLOW_UP_BOUND,
            keep_transient: false,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig("dt must be > 0".into()));
        }
        if !(self.t_total > 0.0) || !self.t_total.is_finite() {
            return Err(Error::InvalidConfig("t_total must be > 0".into()));
        }
        if !(self.t_transient >= 0.0) || self.t_transient >= self.t_total {
            return Err(Error::InvalidConfig(
                "t_transient must satisfy 0 <= t_transient < t_total".into(),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be >= 1".into()));
        }
        if !(self.blow_up_bound > 0.0) {
            return Err(Error::InvalidConfig("blow_up_bound must be > 0".into()));
        }
        Ok(())
    }

    /// Total number of RK4 steps.
    pub fn steps(&self) -> usize {
        (self.t_total / self.dt).round() as usize
    }

    /// First step index that is no longer transient.
    pub fn transient_steps(&self) -> usize {
        (self.t_transient / self.dt).round() as usize
    }

    /// Same horizon at half the step, sampling the same instants.
    pub fn halved(&self) -> Self {
        Self {
            dt: 0.5 * self.dt,
            record_stride: 2 * self.record_stride,
            ..*self
        }
    }
}

/// One classical RK4 step of `ẏ = f(y)` for any fixed dimension.
#[inline]
pub fn rk4_step_field<const N: usize, F>(y: &[f64; N], dt: f64, f: F) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let axpy = |a: &[f64; N], h: f64, k: &[f64; N]| -> [f64; N] {
        std::array::from_fn(|i| a[i] + h * k[i])
    };
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * dt, &k1));
    let k3 = f(&axpy(y, 0.5 * dt, &k2));
    let k4 = f(&axpy(y, dt, &k3));
    std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// One RK4 step of the model equations. Any component beyond
/// [`DEFAULT_BLOW_UP_BOUND`] is reported as divergence.
pub fn rk4_step(state: &StateVector, dt: f64, params: &SystemParams) -> Result<StateVector> {
    rk4_step_bounded(state, dt, params, DEFAULT_BLOW_UP_BOUND)
}

pub fn rk4_step_bounded(
    state: &StateVector,
    dt: f64,
    params: &SystemParams,
    blow_up_bound: f64,
) -> Result<StateVector> {
    params.validate()?;
    if !state.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig("dt must be > 0".into()));
    }
    let phase = params.phase();
    let next = StateVector(rk4_step_field(&state.0, dt, |y| field(y, params, phase)));
    if next.exceeds(blow_up_bound) {
        return Err(Error::Diverged { time: dt });
    }
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Completed,
    /// A component exceeded the blow-up bound at `time`.
    Diverged { time: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub termination: Termination,
    pub config: IntegrationConfig,
    /// Index of the first post-transient sample.
    pub transient_len: usize,
}

impl Trajectory {
    pub fn terminated_early(&self) -> bool {
        matches!(self.termination, Termination::Diverged { .. })
    }

    pub fn post_transient_times(&self) -> &[f64] {
        &self.times[self.transient_len..]
    }

    pub fn post_transient(&self) -> &[StateVector] {
        &self.states[self.transient_len..]
    }

    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.last()
    }

    pub fn series(&self, c: Component) -> Vec<f64> {
        self.post_transient().iter().map(|s| s[c]).collect()
    }
}

/// Integrate the model from `state0` using `config`.
///
/// Divergence does not fail: the trajectory is truncated and its
/// termination cause set.
pub fn integrate(
    state0: &StateVector,
    params: &SystemParams,
    config: &IntegrationConfig,
) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    if !state0.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let phase = params.phase();
    let steps = config.steps();
    let first_kept = config.transient_steps();
    let stride = config.record_stride;
    let capacity = steps / stride + 1;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let mut transient_len = 0;

    let record = |step: usize| step % stride == 0 && (config.keep_transient || step >= first_kept);
    if record(0) {
        times.push(0.0);
        states.push(*state0);
        if first_kept > 0 {
            transient_len += 1;
        }
    }

    let mut y = state0.0;
    let mut termination = Termination::Completed;
    for step in 1..=steps {
        y = rk4_step_field(&y, config.dt, |s| field(s, params, phase));
        let t = step as f64 * config.dt;
        if StateVector(y).exceeds(config.blow_up_bound) {
            termination = Termination::Diverged { time: t };
            break;
        }
        if record(step) {
            times.push(t);
            states.push(StateVector(y));
            if step < first_kept {
                transient_len += 1;
            }
        }
    }
    Ok(Trajectory {
        times,
        states,
        termination,
        config: *config,
        transient_len,
    })
}

/// Step-halving comparison of post-transient observables.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// Largest relative deviation over the envelope observables: the
    /// largest, smallest and mean peak of `α_r` and `β_1r`, and the time
    /// average of `|α|²`.
    pub max_relative_deviation: f64,
    /// Largest Wasserstein-1 distance between the peak-value distributions of
    /// `α_r` and `β_1r`, relative to the peak range. Meaningful for chaotic
    /// runs where pointwise or envelope comparisons are not.
    pub peak_distribution_distance: f64,
    pub observables: Vec<(String, f64, f64)>,
}

pub fn convergence_check(
    state0: &StateVector,
    params: &SystemParams,
    config: &IntegrationConfig,
) -> Result<ConvergenceReport> {
    let coarse = integrate(state0, params, config)?;
    if let Termination::Diverged { time } = coarse.termination {
        return Err(Error::Diverged { time });
    }
    let fine = integrate(state0, params, &config.halved())?;
    if let Termination::Diverged { time } = fine.termination {
        return Err(Error::Diverged { time });
    }

    let mut observables = Vec::new();
    let mut max_dev = 0.0_f64;
    let mut dist = 0.0_f64;
    let rel = |a: f64, b: f64| {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    };
    for c in [Component::Ar, Component::B1r] {
        let pa = local_maxima(&coarse, c).values;
        let pb = local_maxima(&fine, c).values;
        let stats = |v: &[f64]| -> Option<(f64, f64, f64)> {
            if v.is_empty() {
                return None;
            }
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            Some((max, min, v.iter().sum::<f64>() / v.len() as f64))
        };
        match (stats(&pa), stats(&pb)) {
            (Some(a), Some(b)) => {
                for (name, x, y) in [
                    (format!("{c}_peak_max"), a.0, b.0),
                    (format!("{c}_peak_min"), a.1, b.1),
                    (format!("{c}_peak_mean"), a.2, b.2),
                ] {
                    max_dev = max_dev.max(rel(x, y));
                    observables.push((name, x, y));
                }
                let range = (a.0 - a.1).max(b.0 - b.1);
                let w = wasserstein_1(&pa, &pb);
                let scale = if range > 0.0 { range } else { a.0.abs().max(1e-300) };
                dist = dist.max(w / scale);
            }
            (None, None) => {}
            _ => {
                // peaks in one run only
                max_dev = max_dev.max(1.0);
                dist = dist.max(1.0);
            }
        }
    }
    let mean_n = |t: &Trajectory| {
        let s = t.post_transient();
        s.iter().map(|x| x.photon_number()).sum::<f64>() / s.len().max(1) as f64
    };
    let (na, nb) = (mean_n(&coarse), mean_n(&fine));
    max_dev = max_dev.max(rel(na, nb));
    observables.push(("mean_photon_number".into(), na, nb));

    Ok(ConvergenceReport {
        max_relative_deviation: max_dev,
        peak_distribution_distance: dist,
        observables,
    })
}
