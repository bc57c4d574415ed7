//! One function per subcommand; each writes its files into the output directory.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use spiral_anchor::center_bundle::{find_perturbed_wave, CenterBundleError, FlowOptions};
use spiral_anchor::continuation::{bifurcation_diagram, FixedPointFamily, Termination};
use spiral_anchor::planar_map::{levelset, transverse_fold_candidates, CurveKind, LevelCurve};
use spiral_anchor::rd_sim::{run_experiment, run_sweep, write_pgm, Direction, Preset};

use crate::config::{Config, LevelsetConfig};
use crate::CliError;

/// What a finished command reports.
#[derive(Debug, Default)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
    /// Outputs are incomplete (stalled continuation, aborted simulation).
    pub partial: bool,
}

/// Output directory plus the header line every file starts with.
pub struct Sink {
    dir: PathBuf,
    header: String,
    files: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, command: &str, cfg: &Config, preset: Option<Preset>) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let context = match preset {
            Some(p) => format!("{command} --preset {}", preset_name(p)),
            None => command.to_string(),
        };
        let header = format!(
            "spiral-anchor {} {context} sha256:{}",
            env!("CARGO_PKG_VERSION"),
            cfg.digest(&context)?
        );
        let mut sink = Self {
            dir: dir.to_path_buf(),
            header,
            files: Vec::new(),
        };
        let echo = cfg.echo()?;
        sink.text("config.echo.toml", &echo)?;
        Ok(sink)
    }

    pub fn header(&self) -> &str {
        &self.header
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut f = BufWriter::new(File::create(&path)?);
        writeln!(f, "# {}", self.header)?;
        self.files.push(path);
        Ok(f)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let mut f = self.create(name)?;
        f.write_all(body.as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn csv(&mut self, name: &str, fill: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>) -> Result<(), CliError> {
        let mut f = self.create(name)?;
        fill(&mut f)?;
        f.flush()?;
        Ok(())
    }

    fn frame(&mut self, name: &str, fill: impl FnOnce(&mut BufWriter<File>, &str) -> Result<(), CliError>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut f = BufWriter::new(File::create(&path)?);
        fill(&mut f, &self.header)?;
        f.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self, summary: String, partial: bool) -> Outcome {
        Outcome {
            summary,
            files: self.files,
            partial,
        }
    }
}

pub fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::Desk => "desk",
        Preset::Full => "full",
    }
}

fn write_curves(w: &mut impl Write, curves: &[LevelCurve]) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["curve", "label", "closed", "x1", "x2"])?;
    for (k, c) in curves.iter().enumerate() {
        let label = format!("{:?}", c.label);
        for p in &c.points {
            wr.write_record([k.to_string(), label.clone(), c.closed.to_string(), format!("{:.10}", p[0]), format!("{:.10}", p[1])])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn cmd_levelset(cfg: &Config, out: &Path) -> Result<Outcome, CliError> {
    let spec = Config::require(&cfg.map, "map")?.build()?;
    let ls = cfg.levelset.clone().unwrap_or(LevelsetConfig {
        half_width: None,
        window: None,
        resolution: 400,
    });
    let window = ls.window(&spec);
    let mut sink = Sink::new(out, "levelset", cfg, None)?;
    let mut summary = String::new();
    if !window.contains(&spec.xi_point()) {
        log::warn!("window does not contain xi; C_xi stays unlabelled");
        summary.push_str("warning: window excludes xi, C_xi unlabelled\n");
    }
    let num = |e: spiral_anchor::planar_map::MapError| CliError::Numerical(e.to_string());
    for kind in [CurveKind::Kappa, CurveKind::R1, CurveKind::R2] {
        let curves = levelset(&spec, kind, &window, ls.resolution).map_err(num)?;
        writeln!(summary, "{}: {} curve(s)", kind.name(), curves.len()).ok();
        sink.csv(&format!("curves_{}.csv", kind.name()), |w| write_curves(w, &curves))?;
    }
    let report = transverse_fold_candidates(&spec, &window, ls.resolution).map_err(num)?;
    sink.csv("fold_candidates.csv", |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x1", "x2", "row", "case", "kernel_angle", "antipodal_angle", "rank_ratio"])?;
        for c in &report.candidates {
            let [a, b] = c.angles();
            wr.write_record([
                format!("{:.10}", c.x[0]),
                format!("{:.10}", c.x[1]),
                c.row.to_string(),
                format!("{:?}", c.case),
                format!("{a:.10}"),
                format!("{b:.10}"),
                format!("{:.3e}", c.rank_ratio),
            ])?;
        }
        wr.flush()?;
        Ok(())
    })?;
    writeln!(
        summary,
        "transverse fold candidates: {} ({} intersections rejected)",
        report.candidates.len(),
        report.rejected.len()
    )
    .ok();
    sink.text("summary.txt", &summary)?;
    Ok(sink.finish(summary, false))
}

pub fn cmd_continue(cfg: &Config, out: &Path) -> Result<Outcome, CliError> {
    let spec = Config::require(&cfg.map, "map")?.build()?;
    let cc = Config::require(&cfg.continuation, "continuation")?;
    let mut summary = String::new();
    if let Some(w) = cc.omega_star {
        if cc.rho >= w {
            log::warn!("rho = {} is outside the guaranteed regime rho < {w}", cc.rho);
            writeln!(summary, "warning: rho = {} >= omega_star = {w}, outside the guaranteed regime", cc.rho).ok();
        }
    }
    let fam = FixedPointFamily::new(&spec, cc.rho, cc.general).map_err(|e| CliError::Config(format!("continuation: {e}")))?;
    let opts = cc.options();
    opts.validate().map_err(|e| CliError::Config(format!("continuation: {e}")))?;
    let diagram = bifurcation_diagram(&fam, &opts).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut sink = Sink::new(out, "continue", cfg, None)?;
    sink.csv("branches.csv", |w| Ok(diagram.write_branches_csv(w)?))?;
    sink.csv("events.csv", |w| Ok(diagram.write_events_csv(w)?))?;
    summary.push_str(&diagram.summary_table());
    let mut partial = false;
    for nb in &diagram.branches {
        let ends = nb.branch.ends;
        writeln!(summary, "{}: {} ({:?} / {:?})", nb.name, nb.class.name(), ends[0], ends[1]).ok();
        if ends.iter().any(|e| matches!(e, Termination::Stalled | Termination::StepLimit)) {
            partial = true;
        }
    }
    if let Some(w) = &diagram.wedges {
        writeln!(
            summary,
            "wedges: phi0- {}, phi0+ {}, phixi- {}, phixi+ {}",
            w.phi_0_minus.describe(),
            w.phi_0_plus.describe(),
            w.phi_xi_minus.describe(),
            w.phi_xi_plus.describe()
        )
        .ok();
        if w.overlap.overlaps() {
            summary.push_str("anchoring wedges overlap\n");
        }
    }
    if partial {
        summary.push_str("continuation stalled; outputs are partial\n");
    }
    sink.text("summary.txt", &summary)?;
    Ok(sink.finish(summary, partial))
}

pub fn cmd_centerbundle(cfg: &Config, out: &Path) -> Result<Outcome, CliError> {
    let cb = Config::require(&cfg.center_bundle, "center_bundle")?;
    let sys = &cb.system;
    sys.validate().map_err(|e| CliError::Config(format!("center_bundle.system: {e}")))?;
    let opts = cb.dt.map_or_else(FlowOptions::default, FlowOptions::with_dt);
    let guess = Complex64::new(cb.guess[0], cb.guess[1]);
    let orbit = find_perturbed_wave(sys, guess, &opts).map_err(|e| match e {
        CenterBundleError::Unperturbed => {
            CliError::Numerical("all perturbation parameters vanish: the rotating wave is non-hyperbolic".into())
        }
        other => CliError::Numerical(other.to_string()),
    })?;
    let mut sink = Sink::new(out, "centerbundle", cfg, None)?;
    sink.csv("orbit.csv", |w| Ok(orbit.write_csv(w)?))?;
    let mut summary = orbit.summary();
    if !summary.ends_with('\n') {
        summary.push('\n');
    }
    for j in 0..sys.n() {
        if let Ok(a) = sys.anchoring_coefficient(j) {
            writeln!(summary, "alpha_{} = {:.10} {:+.10}i", j + 1, a.re, a.im).ok();
        }
    }
    writeln!(summary, "classification: {}", orbit.floquet.stability.name()).ok();
    sink.text("summary.txt", &summary)?;
    Ok(sink.finish(summary, false))
}

pub fn cmd_simulate(cfg: &Config, out: &Path, preset: Preset) -> Result<Outcome, CliError> {
    let model = Config::require(&cfg.model, "model")?;
    model.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
    let opts = cfg.run.clone().unwrap_or_default().options(preset, model);
    opts.validate().map_err(|e| CliError::Config(format!("run: {e}")))?;
    let res = run_experiment(model, &opts).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut sink = Sink::new(out, "simulate", cfg, Some(preset))?;
    sink.csv("tips.csv", |w| Ok(res.tips.write_csv(w)?))?;
    let (lo, hi) = model.kinetics.display_range();
    for (k, fr) in res.frames.iter().enumerate() {
        sink.frame(&format!("frames/u_{k:05}.pgm"), |w, header| {
            Ok(write_pgm(w, opts.grid, &fr.u, lo, hi, &format!("{header} t={:.4}", fr.t))?)
        })?;
    }
    let mut summary = String::new();
    writeln!(summary, "tip samples: {}", res.tips.samples.len()).ok();
    match &res.tips.report {
        Some(r) => {
            writeln!(
                summary,
                "center: ({:.6}, {:.6})\nperiod: {:.6}\nradius: {:.6}\ndrift per period: {:.6}\nanchored: {}",
                r.center[0],
                r.center[1],
                r.period,
                r.radius,
                r.drift_per_period(),
                r.anchored
            )
            .ok();
            for c in model.bell_centers() {
                writeln!(
                    summary,
                    "distance to ({:.4}, {:.4}): {:.6}",
                    c[0],
                    c[1],
                    (c[0] - r.center[0]).hypot(c[1] - r.center[1])
                )
                .ok();
            }
            if let Some(d) = res.min_bell_distance {
                writeln!(summary, "min distance to bell centers: {d:.6}").ok();
            }
        }
        None => {
            writeln!(summary, "no anchoring report: {}", res.tips.note.as_deref().unwrap_or("unknown")).ok();
        }
    }
    if let Some(e) = &res.aborted {
        writeln!(summary, "aborted: {e}").ok();
    }
    sink.text("summary.txt", &summary)?;
    Ok(sink.finish(summary, res.aborted.is_some()))
}

pub fn cmd_sweep(cfg: &Config, out: &Path, preset: Preset) -> Result<Outcome, CliError> {
    let model = Config::require(&cfg.model, "model")?;
    model.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
    let sc = Config::require(&cfg.sweep, "sweep")?;
    let run = cfg.run.clone().unwrap_or_default().options(preset, model);
    run.validate().map_err(|e| CliError::Config(format!("run: {e}")))?;
    let rec = run_sweep(model, &sc.path, &sc.options(run)).map_err(|e| match e {
        spiral_anchor::rd_sim::RdError::InvalidArgument(m) | spiral_anchor::rd_sim::RdError::InvalidModel(m) => {
            CliError::Config(format!("sweep: {m}"))
        }
        other => CliError::Numerical(other.to_string()),
    })?;
    let mut sink = Sink::new(out, "sweep", cfg, Some(preset))?;
    sink.csv("sweep.csv", |w| Ok(rec.write_csv(w)?))?;
    let mut summary = String::new();
    for d in [Direction::Forward, Direction::Reverse] {
        let rows = rec.direction(d);
        if rows.is_empty() {
            continue;
        }
        let anchored = rows.iter().filter(|r| r.anchored).count();
        writeln!(summary, "{}: {} values, {} anchored, jumps at {:?}", d.name(), rows.len(), anchored, rec.jumps(d)).ok();
        for r in [rows.first(), rows.last()].into_iter().flatten() {
            if let Some(c) = r.center {
                writeln!(summary, "  tau = {:.6}: center ({:.6}, {:.6}), anchored {}", r.tau, c[0], c[1], r.anchored).ok();
            }
        }
    }
    match rec.disagreement {
        Some([a, b]) => writeln!(summary, "forward/reverse disagreement on [{a:.6}, {b:.6}], width {:.6}", b - a).ok(),
        None => writeln!(summary, "forward/reverse disagreement: none").ok(),
    };
    if let Some(e) = &rec.aborted {
        writeln!(summary, "aborted: {e}").ok();
    }
    sink.text("summary.txt", &summary)?;
    Ok(sink.finish(summary, rec.aborted.is_some()))
}
