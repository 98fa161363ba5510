//! Parallel parameter-grid and initial-condition grid engines.

use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{
    analyze, compare_clouds, is_hidden_attractor, linspace, AnalysisSettings, AttractorClass,
    AttractorCloud,
};
use crate::error::{Error, Result};
use crate::integrator::IntegrationConfig;
use crate::model::{Component, ParamId, StateVector, SystemParams};
use crate::stability::classify_fixed_point;
use crate::steady_state::{closed_form_count, find_fixed_points};

/// One swept parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub param: ParamId,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(param: ParamId, min: f64, max: f64, n: usize) -> Self {
        Self { param, min, max, n }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.n)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidGrid(format!("axis {} needs n >= 2", self.param)));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidGrid(format!("axis {} bounds must be finite", self.param)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Count,
    Stability,
    Attractor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
    pub base: SystemParams,
    pub task: Task,
    pub config: IntegrationConfig,
    pub ic: StateVector,
    /// Second initial condition for coexistence checks in attractor maps.
    pub second_ic: Option<StateVector>,
    pub analysis: AnalysisSettings,
    /// Worker threads; `None` uses all available cores.
    pub workers: Option<usize>,
}

impl GridSpec {
    pub fn new(x: Axis, y: Axis, base: SystemParams, task: Task) -> Self {
        Self {
            x,
            y,
            base,
            task,
            config: IntegrationConfig::default(),
            ic: StateVector::ZERO,
            second_ic: None,
            analysis: AnalysisSettings::default(),
            workers: None,
        }
    }

    /// Default steady-state window: `Δ ∈ [−3, 3]`, `J_m ∈ [0, 0.1]`, 101×101.
    pub fn default_window(base: SystemParams, task: Task) -> Self {
        Self::new(
            Axis::new(ParamId::Delta, -3.0, 3.0, 101),
            Axis::new(ParamId::Jm, 0.0, 0.1, 101),
            base,
            task,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.x.validate()?;
        self.y.validate()?;
        if self.x.param == self.y.param {
            return Err(Error::InvalidGrid("swept parameters must be distinct".into()));
        }
        self.base.validate()?;
        if self.task == Task::Attractor {
            self.config.validate()?;
        }
        Ok(())
    }
}

/// Result for one lattice point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRecord {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
    /// Fixed points found by Newton.
    pub count: Option<usize>,
    /// Real roots of the closed-form quadratic.
    pub closed_form_count: Option<usize>,
    /// One verdict per fixed point, `|α|` ascending.
    pub stable: Vec<bool>,
    pub max_real_parts: Vec<f64>,
    pub class: Option<AttractorClass>,
    pub lambda_max: Option<f64>,
    pub second_class: Option<AttractorClass>,
    /// The two initial conditions reached different attractors.
    pub coexisting: Option<bool>,
    pub hidden: Option<bool>,
    /// Attractor identity in basin maps, numbered in lattice order of first
    /// appearance.
    pub basin: Option<usize>,
    pub error: Option<String>,
    pub wall_time: f64,
}

impl SweepRecord {
    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &SweepRecord) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        a == *other
    }
}

fn run_indexed<T, F>(n: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers.filter(|&w| w > 0) {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidGrid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

fn grid_points(spec: &GridSpec) -> (Vec<f64>, Vec<f64>) {
    (spec.x.values(), spec.y.values())
}

fn point_params(spec: &GridSpec, x: f64, y: f64) -> SystemParams {
    let mut p = spec.base;
    spec.x.param.set(&mut p, x);
    spec.y.param.set(&mut p, y);
    p
}

fn evaluate(spec: &GridSpec, rec: &mut SweepRecord) -> Result<()> {
    let p = point_params(spec, rec.x, rec.y);
    match spec.task {
        Task::Count => {
            rec.count = Some(find_fixed_points(&p)?.points.len());
            rec.closed_form_count = Some(closed_form_count(&p)?);
        }
        Task::Stability => {
            let search = find_fixed_points(&p)?;
            rec.count = Some(search.points.len());
            for fp in &search.points {
                let v = classify_fixed_point(&fp.state, &p)?;
                rec.stable.push(v.stable);
                rec.max_real_parts.push(v.max_real_part);
            }
        }
        Task::Attractor => {
            let a = analyze(&spec.ic, &p, &spec.config, &spec.analysis)?;
            rec.class = Some(a.class);
            rec.lambda_max = a.lyapunov.as_ref().map(|l| l.lambda_max);
            if let Ok(search) = find_fixed_points(&p) {
                rec.count = Some(search.points.len());
                rec.hidden = Some(is_hidden_attractor(&spec.ic, a.class, &search.points));
            }
            if let Some(ic2) = spec.second_ic {
                let b = analyze(&ic2, &p, &spec.config, &spec.analysis)?;
                rec.second_class = Some(b.class);
                let both_finite = !a.trajectory.terminated_early() && !b.trajectory.terminated_early();
                rec.coexisting = Some(if both_finite {
                    !compare_clouds(
                        &AttractorCloud::from_trajectory(&a.trajectory, BASIN_CLOUD_POINTS),
                        &AttractorCloud::from_trajectory(&b.trajectory, BASIN_CLOUD_POINTS),
                    )
                    .same_attractor()
                } else {
                    a.class != b.class
                });
            }
        }
    }
    Ok(())
}

/// Evaluate every lattice point, returning records in row-major order with
/// `x` varying fastest.
pub fn run_grid(spec: &GridSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let (xs, ys) = grid_points(spec);
    let nx = xs.len();
    run_indexed(nx * ys.len(), spec.workers, |k| {
        let (ix, iy) = (k % nx, k / nx);
        let start = Instant::now();
        let mut rec = SweepRecord {
            ix,
            iy,
            x: xs[ix],
            y: ys[iy],
            ..Default::default()
        };
        if let Err(e) = evaluate(spec, &mut rec) {
            rec.error = Some(e.to_string());
        }
        rec.wall_time = start.elapsed().as_secs_f64();
        rec
    })
}

fn with_task(grid: &GridSpec, task: Task) -> Result<Vec<SweepRecord>> {
    if grid.task != task {
        return Err(Error::InvalidGrid(format!(
            "grid task is {:?}, expected {task:?}",
            grid.task
        )));
    }
    run_grid(grid)
}

pub fn steady_state_map(grid: &GridSpec) -> Result<Vec<SweepRecord>> {
    with_task(grid, Task::Count)
}

pub fn stability_map(grid: &GridSpec) -> Result<Vec<SweepRecord>> {
    with_task(grid, Task::Stability)
}

pub fn attractor_map(grid: &GridSpec) -> Result<Vec<SweepRecord>> {
    with_task(grid, Task::Attractor)
}

/// Fraction of error-free records whose Newton count equals `n`.
pub fn count_fraction(records: &[SweepRecord], n: usize) -> f64 {
    fraction(records, |r| r.count.map(|c| c == n))
}

/// Fraction of error-free records whose closed-form count equals `n`.
pub fn closed_form_fraction(records: &[SweepRecord], n: usize) -> f64 {
    fraction(records, |r| r.closed_form_count.map(|c| c == n))
}

/// Fraction of records with at least one stable fixed point.
pub fn stable_fraction(records: &[SweepRecord]) -> f64 {
    fraction(records, |r| r.count.map(|_| r.stable.iter().any(|&s| s)))
}

fn fraction(records: &[SweepRecord], f: impl Fn(&SweepRecord) -> Option<bool>) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for r in records.iter().filter(|r| r.error.is_none()) {
        if let Some(v) = f(r) {
            total += 1;
            hit += v as usize;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Initial-condition axis over one state component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IcAxis {
    pub component: Component,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasinSpec {
    pub params: SystemParams,
    pub x: IcAxis,
    pub y: IcAxis,
    /// Values of the non-swept components.
    pub base_ic: StateVector,
    pub config: IntegrationConfig,
    pub analysis: AnalysisSettings,
    pub workers: Option<usize>,
}

/// Points per cloud kept for basin identity matching.
pub const BASIN_CLOUD_POINTS: usize = 400;

/// Classify the attractor reached from every IC on the grid and label
/// matching attractors with a shared basin id.
pub fn basin_map(spec: &BasinSpec) -> Result<Vec<SweepRecord>> {
    for a in [&spec.x, &spec.y] {
        if a.n < 2 || !(a.min.is_finite() && a.max.is_finite()) {
            return Err(Error::InvalidGrid(format!("bad IC axis {}", a.component)));
        }
    }
    if spec.x.component == spec.y.component {
        return Err(Error::InvalidGrid("IC components must be distinct".into()));
    }
    spec.params.validate()?;
    spec.config.validate()?;
    let xs = linspace(spec.x.min, spec.x.max, spec.x.n);
    let ys = linspace(spec.y.min, spec.y.max, spec.y.n);
    let nx = xs.len();
    let results = run_indexed(nx * ys.len(), spec.workers, |k| {
        let (ix, iy) = (k % nx, k / nx);
        let start = Instant::now();
        let mut ic = spec.base_ic;
        ic.0[spec.x.component.index()] = xs[ix];
        ic.0[spec.y.component.index()] = ys[iy];
        let mut rec = SweepRecord {
            ix,
            iy,
            x: xs[ix],
            y: ys[iy],
            ..Default::default()
        };
        let cloud = match analyze(&ic, &spec.params, &spec.config, &spec.analysis) {
            Ok(a) => {
                rec.class = Some(a.class);
                rec.lambda_max = a.lyapunov.as_ref().map(|l| l.lambda_max);
                (!a.trajectory.terminated_early())
                    .then(|| AttractorCloud::from_trajectory(&a.trajectory, BASIN_CLOUD_POINTS))
            }
            Err(e) => {
                rec.error = Some(e.to_string());
                None
            }
        };
        rec.wall_time = start.elapsed().as_secs_f64();
        (rec, cloud)
    })?;

    // identities in lattice order so the labelling is independent of scheduling
    let mut references: Vec<(AttractorClass, AttractorCloud)> = Vec::new();
    let mut out = Vec::with_capacity(results.len());
    for (mut rec, cloud) in results {
        if let (Some(class), Some(cloud)) = (rec.class, cloud) {
            let id = references
                .iter()
                .position(|(c, r)| *c == class && compare_clouds(r, &cloud).same_attractor());
            rec.basin = Some(id.unwrap_or_else(|| {
                references.push((class, cloud));
                references.len() - 1
            }));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Distinct basin ids present in a basin map.
pub fn basin_count(records: &[SweepRecord]) -> usize {
    let mut ids: Vec<usize> = records.iter().filter_map(|r| r.basin).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}
