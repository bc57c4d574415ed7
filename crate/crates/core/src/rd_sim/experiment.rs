//! Single runs and warm-started parameter sweeps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::analysis::{anchoring_center, AnchorReport};
use super::grid::{Grid, Scheme, SimState, Stepper};
use super::model::ModelSpec;
use super::tip::track_tip;
use super::RdError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `N = 100`, for quick runs.
    Desk,
    /// `N = 200`, `Δt = 0.005`.
    Full,
}

impl Preset {
    pub fn grid(self) -> Grid {
        match self {
            Preset::Desk => Grid { n: 100, l: 30.0 },
            Preset::Full => Grid { n: 200, l: 30.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub grid: Grid,
    pub scheme: Scheme,
    pub dt: f64,
    pub duration: f64,
    /// Steps between tip samples.
    pub tip_every: usize,
    pub transient_fraction: f64,
    /// `(iso_u, iso_v)`; kinetics defaults when absent.
    pub tip_levels: Option<[f64; 2]>,
    /// Corner of the initial cross-field stimulus.
    pub stimulus: [f64; 2],
    /// Reverse the sense of rotation of the initial spiral.
    #[serde(default)]
    pub mirrored: bool,
    /// Steps between stored `u` frames.
    pub frame_every: Option<usize>,
}

impl RunOptions {
    pub fn preset(preset: Preset, model: &ModelSpec) -> Self {
        let oregonator = matches!(model.kinetics, super::model::Kinetics::Oregonator { .. });
        let dt = match (preset, oregonator) {
            (Preset::Full, _) => 0.005,
            (Preset::Desk, false) => 0.02,
            (Preset::Desk, true) => 0.001,
        };
        Self {
            grid: preset.grid(),
            scheme: Scheme::Rk2,
            dt,
            duration: 1000.0,
            tip_every: 10,
            transient_fraction: 0.5,
            tip_levels: None,
            stimulus: [0.0, 0.0],
            mirrored: false,
            frame_every: None,
        }
    }

    pub fn validate(&self) -> Result<(), RdError> {
        Grid::new(self.grid.n, self.grid.l)?;
        if !(self.dt > 0.0) || !(self.duration > 0.0) || self.tip_every == 0 {
            return Err(RdError::InvalidArgument("dt, duration and tip_every must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.transient_fraction) {
            return Err(RdError::InvalidArgument(format!(
                "transient fraction {} outside [0, 1)",
                self.transient_fraction
            )));
        }
        if self.frame_every == Some(0) {
            return Err(RdError::InvalidArgument("frame_every must be positive".into()));
        }
        Ok(())
    }

    fn steps(&self, duration: f64) -> usize {
        (duration / self.dt).round() as usize
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TipTrajectory {
    /// `(t, x1, x2)`.
    pub samples: Vec<[f64; 3]>,
    pub report: Option<AnchorReport>,
    /// Why no report could be made.
    pub note: Option<String>,
}

impl TipTrajectory {
    pub fn center(&self) -> Option<[f64; 2]> {
        self.report.as_ref().map(|r| r.center)
    }

    pub fn period(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.period)
    }

    pub fn anchored(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.anchored)
    }

    /// Without any nonzero bell the rotation center is arbitrary, so the
    /// run is never reported as anchored.
    fn analyse(&mut self, transient_fraction: f64, model: &ModelSpec) {
        match anchoring_center(&self.samples, transient_fraction) {
            Ok(mut r) => {
                if model.bells.iter().all(|b| b.amplitude == 0.0) {
                    r.anchored = false;
                    self.note = Some("all perturbation amplitudes are zero; center is arbitrary".into());
                }
                self.report = Some(r);
            }
            Err(e) => self.note = Some(e.to_string()),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), RdError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x1", "x2"]).map_err(csv_err)?;
        for s in &self.samples {
            w.serialize((s[0], s[1], s[2])).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> RdError {
    RdError::Io(std::io::Error::other(e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapFrame {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub tips: TipTrajectory,
    pub frames: Vec<SnapFrame>,
    pub state: SimState,
    /// Distance from the anchoring center to the nearest bell center.
    pub min_bell_distance: Option<f64>,
    /// Set when the run stopped early; samples up to that point are kept.
    pub aborted: Option<RdError>,
}

/// Integrates from `state`, sampling the tip every `tip_every` steps.
fn integrate(
    stepper: &mut Stepper,
    state: &mut SimState,
    opts: &RunOptions,
    duration: f64,
    levels: (f64, f64),
    mut previous: Option<[f64; 2]>,
    frames: &mut Vec<SnapFrame>,
) -> (TipTrajectory, Option<RdError>) {
    let mut tips = TipTrajectory::default();
    let steps = opts.steps(duration);
    let mut misses = 0usize;
    for k in 1..=steps {
        if let Err(e) = stepper.step(state) {
            return (tips, Some(e));
        }
        if k % opts.tip_every == 0 {
            match track_tip(state, levels.0, levels.1, previous) {
                Some(p) => {
                    tips.samples.push([state.t, p[0], p[1]]);
                    previous = Some(p);
                }
                None => misses += 1,
            }
        }
        if opts.frame_every.is_some_and(|f| k % f == 0) {
            frames.push(SnapFrame {
                t: state.t,
                u: state.u.clone(),
            });
        }
    }
    if misses > 0 {
        log::info!("no tip found at {misses} of {} samples", steps / opts.tip_every);
    }
    (tips, None)
}

/// Integrates `model` from the cross-field stimulus and extracts the anchoring center.
pub fn run_experiment(model: &ModelSpec, opts: &RunOptions) -> Result<ExperimentResult, RdError> {
    opts.validate()?;
    let mut stepper = Stepper::new(model, opts.grid, opts.scheme, opts.dt)?;
    let mut state = SimState::cross_field(opts.grid, model, opts.stimulus, opts.mirrored);
    let levels = levels(model, opts);
    let mut frames = Vec::new();
    let (mut tips, aborted) = integrate(&mut stepper, &mut state, opts, opts.duration, levels, None, &mut frames);
    if aborted.is_none() {
        tips.analyse(opts.transient_fraction, model);
    } else {
        tips.note = Some("run aborted".into());
    }
    let min_bell_distance = tips.center().and_then(|c| {
        model
            .bell_centers()
            .iter()
            .map(|b| (b[0] - c[0]).hypot(b[1] - c[1]))
            .min_by(f64::total_cmp)
    });
    Ok(ExperimentResult {
        tips,
        frames,
        state,
        min_bell_distance,
        aborted,
    })
}

fn levels(model: &ModelSpec, opts: &RunOptions) -> (f64, f64) {
    opts.tip_levels
        .map(|l| (l[0], l[1]))
        .unwrap_or_else(|| model.kinetics.default_tip_levels())
}

/// Arc `τ ↦ ρ (cos τ, sin τ)` in the amplitudes of two bells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPath {
    pub rho: f64,
    pub tau_start: f64,
    pub tau_end: f64,
    /// Number of intervals; `steps + 1` parameter values are visited.
    pub steps: usize,
    pub bells: [usize; 2],
}

impl SweepPath {
    pub fn taus(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| self.tau_start + (self.tau_end - self.tau_start) * k as f64 / self.steps as f64)
            .collect()
    }

    pub fn model_at(&self, base: &ModelSpec, tau: f64) -> ModelSpec {
        let mut m = base.clone();
        m.bells[self.bells[0]].amplitude = self.rho * tau.cos();
        m.bells[self.bells[1]].amplitude = self.rho * tau.sin();
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub run: RunOptions,
    /// Integration time before the first recorded parameter value.
    pub spin_up: f64,
    /// Integration time at every parameter value.
    pub per_step: f64,
    /// Also traverse the path backwards from the forward end state.
    pub reverse: bool,
    /// Center displacement between neighbouring values flagged as a jump.
    pub jump_tol: f64,
    /// Forward/reverse center distance counted as disagreement.
    pub disagreement_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub direction: Direction,
    pub center: Option<[f64; 2]>,
    pub period: Option<f64>,
    pub anchored: bool,
    /// Center moved more than the jump tolerance since the previous value.
    pub jump: bool,
}

#[derive(Debug, Default)]
pub struct SweepRecord {
    pub rows: Vec<SweepRow>,
    /// Longest run of consecutive values where both directions are anchored
    /// and disagree, as `[τ_a, τ_b]`.
    pub disagreement: Option<[f64; 2]>,
    pub aborted: Option<RdError>,
}

impl SweepRecord {
    pub fn direction(&self, d: Direction) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.direction == d).collect()
    }

    pub fn jumps(&self, d: Direction) -> Vec<f64> {
        self.direction(d).iter().filter(|r| r.jump).map(|r| r.tau).collect()
    }

    pub fn disagreement_width(&self) -> f64 {
        self.disagreement.map_or(0.0, |[a, b]| (b - a).abs())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), RdError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "center_x1", "center_x2", "anchored", "direction"])
            .map_err(csv_err)?;
        for r in &self.rows {
            let (x, y) = r.center.map_or((f64::NAN, f64::NAN), |c| (c[0], c[1]));
            w.serialize((r.tau, x, y, r.anchored, r.direction.name())).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Follows the path with warm starts, forward and then optionally back.
pub fn run_sweep(base: &ModelSpec, path: &SweepPath, opts: &SweepOptions) -> Result<SweepRecord, RdError> {
    opts.run.validate()?;
    if path.steps == 0 || path.bells.iter().any(|&b| b >= base.bells.len()) || path.bells[0] == path.bells[1] {
        return Err(RdError::InvalidArgument(format!(
            "sweep needs at least one step and two distinct bells out of {}",
            base.bells.len()
        )));
    }
    if !(opts.per_step > 0.0) || !(opts.spin_up >= 0.0) {
        return Err(RdError::InvalidArgument("sweep durations must be positive".into()));
    }
    let taus = path.taus();
    let run = &opts.run;
    let first = path.model_at(base, taus[0]);
    first.validate()?;
    let levels = levels(base, run);
    let mut state = SimState::cross_field(run.grid, &first, run.stimulus, run.mirrored);
    let mut record = SweepRecord::default();
    let mut frames = Vec::new();
    let mut previous = None;

    if opts.spin_up > 0.0 {
        let mut st = Stepper::new(&first, run.grid, run.scheme, run.dt)?;
        let (tips, err) = integrate(&mut st, &mut state, run, opts.spin_up, levels, None, &mut frames);
        if let Some(e) = err {
            record.aborted = Some(e);
            return Ok(record);
        }
        previous = tips.samples.last().map(|s| [s[1], s[2]]);
    }

    let mut order: Vec<(Direction, f64)> = taus.iter().map(|&t| (Direction::Forward, t)).collect();
    if opts.reverse {
        order.extend(taus.iter().rev().map(|&t| (Direction::Reverse, t)));
    }
    for (dir, tau) in order {
        let model = path.model_at(base, tau);
        let mut st = Stepper::new(&model, run.grid, run.scheme, run.dt)?;
        let (mut tips, err) = integrate(&mut st, &mut state, run, opts.per_step, levels, previous, &mut frames);
        frames.clear();
        if let Some(e) = err {
            record.aborted = Some(e);
            break;
        }
        previous = tips.samples.last().map(|s| [s[1], s[2]]).or(previous);
        tips.analyse(run.transient_fraction, &model);
        let center = tips.center();
        let last = record.rows.iter().rev().find(|r| r.direction == dir && r.center.is_some());
        let jump = match (last.and_then(|r| r.center), center) {
            (Some(a), Some(b)) => (a[0] - b[0]).hypot(a[1] - b[1]) > opts.jump_tol,
            _ => false,
        };
        log::info!(
            "{} tau = {tau:.4}: center {center:?}, anchored {}",
            dir.name(),
            tips.anchored()
        );
        record.rows.push(SweepRow {
            tau,
            direction: dir,
            center,
            period: tips.period(),
            anchored: tips.anchored(),
            jump,
        });
    }
    record.disagreement = disagreement(&record, &taus, opts.disagreement_tol);
    Ok(record)
}

fn disagreement(record: &SweepRecord, taus: &[f64], tol: f64) -> Option<[f64; 2]> {
    let find = |d: Direction, tau: f64| record.rows.iter().find(|r| r.direction == d && r.tau == tau);
    let differs: Vec<bool> = taus
        .iter()
        .map(|&t| match (find(Direction::Forward, t), find(Direction::Reverse, t)) {
            (Some(f), Some(r)) if f.anchored && r.anchored => {
                let (a, b) = (f.center.unwrap(), r.center.unwrap());
                (a[0] - b[0]).hypot(a[1] - b[1]) > tol
            }
            _ => false,
        })
        .collect();
    let mut best: Option<(usize, usize)> = None;
    let mut k = 0;
    while k < differs.len() {
        if differs[k] {
            let start = k;
            while k + 1 < differs.len() && differs[k + 1] {
                k += 1;
            }
            if best.is_none_or(|(a, b)| k - start > b - a) {
                best = Some((start, k));
            }
        }
        k += 1;
    }
    best.map(|(a, b)| [taus[a], taus[b]])
}

/// Binary greyscale image of `field`, clamped to `[lo, hi]`; row `x2 = L` first.
/// A non-empty `comment` goes into the header.
pub fn write_pgm<W: Write>(
    mut out: W,
    grid: Grid,
    field: &[f64],
    lo: f64,
    hi: f64,
    comment: &str,
) -> Result<(), RdError> {
    if field.len() != grid.len() || !(hi > lo) || comment.contains('\n') {
        return Err(RdError::InvalidArgument("frame size, range or comment mismatch".into()));
    }
    let n = grid.n;
    write!(out, "P5\n")?;
    if !comment.is_empty() {
        write!(out, "# {comment}\n")?;
    }
    write!(out, "{n} {n}\n255\n")?;
    let mut bytes = Vec::with_capacity(n * n);
    for i in (0..n).rev() {
        for j in 0..n {
            let s = ((field[i * n + j] - lo) / (hi - lo)).clamp(0.0, 1.0);
            bytes.push((s * 255.0).round() as u8);
        }
    }
    out.write_all(&bytes)?;
    Ok(())
}
