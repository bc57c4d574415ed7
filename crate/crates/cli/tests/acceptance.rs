//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test -p spiral-anchor-cli --test acceptance [-- filter]`. Set
//! `ACCEPTANCE_STRICT=1` to turn any failure into a non-zero exit.

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spiral_anchor::center_bundle::*;
use spiral_anchor::continuation::*;
use spiral_anchor::planar_map::*;
use spiral_anchor::rd_sim::*;
use spiral_anchor_cli::config::Config;

struct Verdict {
    pass: bool,
    details: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.details.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn config(name: &str) -> Config {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    Config::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn map_of(cfg: &Config) -> MapSpec {
    cfg.map.as_ref().expect("map section").build().unwrap()
}

fn diagram_of(cfg: &Config, rho: Option<f64>) -> Diagram {
    let map = map_of(cfg);
    let cont = cfg.continuation.as_ref().expect("continuation section");
    let fam = FixedPointFamily::new(&map, rho.unwrap_or(cont.rho), cont.general).unwrap();
    bifurcation_diagram(&fam, &cont.options()).unwrap()
}

fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn folds(d: &Diagram) -> Vec<&EventRow> {
    d.events.iter().filter(|e| e.kind == CatastropheKind::Fold).collect()
}

fn infinities(d: &Diagram) -> Vec<f64> {
    d.events
        .iter()
        .filter(|e| e.kind == CatastropheKind::Infinity)
        .map(|e| e.s_star)
        .collect()
}

const TABLE_FOLDS: [([f64; 2], f64); 6] = [
    ([1.2483, -0.1286], 5.9809),
    ([0.2269, -3.4760], 0.2308),
    ([0.3371, 3.1473], 1.1020),
    ([2.2769, 0.2982], 2.1125),
    ([-3.2933, 6.1024], 1.1581),
    ([5.6733, -1.2807], 1.9267),
];
const TABLE_INFINITIES: [f64; 2] = [1.0172, 2.3562];
const TABLE_WEDGES: [(&str, f64); 4] = [
    ("phi_0^-", 0.3023),
    ("phi_0^+", 0.2308),
    ("phi_xi^-", 0.4688),
    ("phi_xi^+", 0.5417),
];

fn wedge_values(w: &WedgeReport) -> [Option<f64>; 4] {
    [
        w.phi_0_minus.value(),
        w.phi_0_plus.value(),
        w.phi_xi_minus.value(),
        w.phi_xi_plus.value(),
    ]
}

fn table_reproduction() -> Verdict {
    let mut v = Verdict::new();
    let d = diagram_of(&config("eb.toml"), None);
    let fs = folds(&d);
    let inf = infinities(&d);
    v.check(
        fs.len() == 6 && inf.len() == 2,
        format!("{} folds and {} infinity catastrophes (want 6 and 2)", fs.len(), inf.len()),
    );
    for (x, s) in TABLE_FOLDS {
        let hit = fs.iter().find(|e| {
            let p = e.x_star.unwrap();
            (p[0] - x[0]).hypot(p[1] - x[1]) <= 0.01 && circ(e.s_star, s) <= 0.02
        });
        v.check(hit.is_some(), format!("fold s* = {s} at {x:?}"));
    }
    for extra in fs.iter().filter(|e| {
        let p = e.x_star.unwrap();
        !TABLE_FOLDS.iter().any(|(x, _)| (p[0] - x[0]).hypot(p[1] - x[1]) <= 0.01)
    }) {
        let p = extra.x_star.unwrap();
        v.check(false, format!("extra fold s* = {:.4} at ({:.4}, {:.4})", extra.s_star, p[0], p[1]));
    }
    for s in TABLE_INFINITIES {
        v.check(inf.iter().any(|t| circ(*t, s) <= 0.02), format!("infinity s* = {s} (found {inf:.4?})"));
    }
    let got = d.wedges.as_ref().map(wedge_values).unwrap_or([None; 4]);
    for ((name, want), g) in TABLE_WEDGES.iter().zip(got) {
        v.check(
            g.is_some_and(|g| (g - want).abs() <= 0.02),
            format!("{name} = {g:.4?} (want {want})"),
        );
    }
    v
}

fn visual_criterion() -> Verdict {
    let mut v = Verdict::new();
    let cfg = config("eb.toml");
    let map = map_of(&cfg);
    let ls = cfg.levelset.as_ref().expect("levelset section");
    let window = ls.window(&map);
    let report = transverse_fold_candidates(&map, &window, ls.resolution).unwrap();
    let d = diagram_of(&cfg, None);
    let cont_folds: Vec<[f64; 2]> = folds(&d).iter().filter_map(|e| e.x_star).collect();
    let n = report.candidates.len();
    v.check(n == 6, format!("{n} transverse candidates (want 6)"));
    for c in &report.candidates {
        let p = c.point();
        let near = cont_folds.iter().map(|f| (f[0] - p[0]).hypot(f[1] - p[1])).fold(f64::INFINITY, f64::min);
        let tabled = TABLE_FOLDS.iter().any(|(x, _)| (x[0] - p[0]).hypot(x[1] - p[1]) <= 0.01);
        v.check(
            near <= 0.01 && tabled,
            format!(
                "candidate ({:.4}, {:.4}): {near:.1e} from a continuation fold{}",
                p[0],
                p[1],
                if tabled { "" } else { ", not one of the six" }
            ),
        );
    }
    v
}

struct Expect {
    file: &'static str,
    same_curve: bool,
    classes: [BranchClass; 2],
    /// Counts over the four wedge angles; both zero means unchecked.
    fold_wedges: usize,
    infinity_wedges: usize,
    xi_infinity_only: bool,
    c0_has_folds: bool,
    overlap: Option<bool>,
}

fn example_topology() -> Verdict {
    use BranchClass::*;
    let mut v = Verdict::new();
    let cases = [
        Expect {
            file: "ex1.toml",
            same_curve: false,
            classes: [Bounded, Unbounded],
            fold_wedges: 2,
            infinity_wedges: 2,
            xi_infinity_only: true,
            c0_has_folds: true,
            overlap: Some(true),
        },
        Expect {
            file: "ex2.toml",
            same_curve: false,
            classes: [Unbounded, Unbounded],
            fold_wedges: 3,
            infinity_wedges: 1,
            xi_infinity_only: false,
            c0_has_folds: false,
            overlap: None,
        },
        Expect {
            file: "ex3.toml",
            same_curve: false,
            classes: [Bounded, Bounded],
            fold_wedges: 4,
            infinity_wedges: 0,
            xi_infinity_only: false,
            c0_has_folds: false,
            overlap: None,
        },
        Expect {
            file: "ex4.toml",
            same_curve: true,
            classes: [Bounded, Bounded],
            fold_wedges: 0,
            infinity_wedges: 0,
            xi_infinity_only: false,
            c0_has_folds: false,
            overlap: Some(true),
        },
        Expect {
            file: "ex5.toml",
            same_curve: true,
            classes: [Unbounded, Unbounded],
            fold_wedges: 4,
            infinity_wedges: 0,
            xi_infinity_only: false,
            c0_has_folds: false,
            overlap: None,
        },
    ];
    for e in cases {
        let d = diagram_of(&config(e.file), None);
        let class = |eta| d.branch(eta).map(|b| b.class);
        let got = [class(Eta::Origin), class(Eta::Xi)];
        let w = d.wedges.as_ref();
        let kinds: Vec<Option<CatastropheKind>> = w
            .map(|w| [w.phi_0_minus, w.phi_0_plus, w.phi_xi_minus, w.phi_xi_plus].map(|a| a.kind()).to_vec())
            .unwrap_or_default();
        let count = |k| kinds.iter().filter(|x| **x == Some(k)).count();
        let (nf, ni) = (count(CatastropheKind::Fold), count(CatastropheKind::Infinity));
        let mut ok = got == [Some(e.classes[0]), Some(e.classes[1])] && d.same_curve == e.same_curve;
        if e.fold_wedges + e.infinity_wedges > 0 {
            ok &= nf == e.fold_wedges && ni == e.infinity_wedges;
        }
        if e.xi_infinity_only {
            ok &= kinds.len() == 4 && kinds[2..].iter().all(|k| *k == Some(CatastropheKind::Infinity));
        }
        if e.c0_has_folds {
            ok &= d.events.iter().any(|x| x.curve == "C0" && x.kind == CatastropheKind::Fold);
        }
        let overlap = w.map(|w| w.overlap.overlaps());
        if let Some(want) = e.overlap {
            ok &= overlap == Some(want);
        }
        v.check(
            ok,
            format!(
                "{}: classes {:?}, same curve {}, wedge kinds {} fold / {} infinity, overlap {:?}",
                e.file,
                got.map(|c| c.map(BranchClass::name)),
                d.same_curve,
                nf,
                ni,
                overlap
            ),
        );
    }
    v
}

fn oracle_equivalence() -> Verdict {
    let mut v = Verdict::new();
    let cfg = config("eb.toml");
    let map = map_of(&cfg);
    let cont = cfg.continuation.as_ref().unwrap();
    let fam = FixedPointFamily::new(&map, cont.rho, false).unwrap();
    let window = Window::square(8.0);
    let comps = trace_kappa_components(&fam, &window, 300, &cont.options()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut roots_total, mut unmatched) = (0usize, 0usize);
    for _ in 0..40 {
        let s: f64 = rng.random_range(0.0..TAU);
        let roots = newton_grid_oracle(&fam, s, &window, 60);
        let on_branches: Vec<Point> = comps
            .iter()
            .flat_map(|c| c.branch.points_at(&fam, s, true))
            .filter(|x| window.contains(x))
            .collect();
        roots_total += roots.len();
        for r in &roots {
            if !on_branches.iter().any(|b| (b - r).norm() < 1e-6) {
                unmatched += 1;
                v.details.push(format!("FAIL s = {s:.4}: grid root ({:.6}, {:.6}) not on a branch", r[0], r[1]));
            }
        }
        for b in &on_branches {
            if !roots.iter().any(|r| (b - r).norm() < 1e-6) {
                unmatched += 1;
                v.details.push(format!("FAIL s = {s:.4}: branch point ({:.6}, {:.6}) missed by the grid", b[0], b[1]));
            }
        }
    }
    v.check(
        unmatched == 0,
        format!("40 values of s, {roots_total} grid roots, {unmatched} unmatched at 1e-6"),
    );
    v
}

fn single(h: PerturbationFn, eps: f64, wave: Complex64) -> CenterBundleSystem {
    CenterBundleSystem::new(wave, vec![Complex64::new(0.3, 0.2)], vec![h], vec![eps]).unwrap()
}

fn center_bundle_closed_forms() -> Verdict {
    let mut v = Verdict::new();
    let wave = Complex64::new(0.5, -0.8);
    let epsilons = [-0.05, -0.01, 0.01, 0.05];
    let alphas = [
        Complex64::new(-1.5, 0.7),
        Complex64::new(-0.4, -1.2),
        Complex64::new(0.6, 0.3),
        Complex64::new(1.3, -0.9),
    ];
    let opts = FlowOptions::with_dt(1e-3);
    let (mut worst, mut misclassified) = (0.0f64, 0usize);
    for eps in epsilons {
        for alpha in alphas {
            let sys = single(PerturbationFn::linear(alpha), eps, wave);
            let orbit = find_perturbed_wave(&sys, Complex64::new(0.0, 0.0), &opts).unwrap();
            let want = (TAU * eps * alpha.re).exp();
            for m in orbit.floquet.moduli() {
                worst = worst.max((m - want).abs() / want);
            }
            let rule = if eps * alpha.re < 0.0 {
                WaveStability::Anchoring
            } else {
                WaveStability::Repelling
            };
            if orbit.floquet.stability != rule {
                misclassified += 1;
            }
        }
    }
    v.check(worst <= 1e-6, format!("Floquet moduli vs exp(2 pi eps Re alpha): worst relative error {worst:.2e}"));
    v.check(misclassified == 0, format!("{misclassified} of 16 classifications differ from the sign rule"));

    let sys = CenterBundleSystem::new(
        Complex64::new(0.7, -0.4),
        vec![Complex64::new(0.0, 0.0), Complex64::new(2.0, 1.0)],
        vec![
            PerturbationFn::new()
                .with_term(2, 1, Complex64::new(1.0, 0.5))
                .with_term(0, 0, Complex64::new(0.3, 0.0)),
            PerturbationFn::linear(Complex64::new(-1.0, 2.0)),
        ],
        vec![0.0, 0.0],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut identity = 0.0f64;
    for _ in 0..100 {
        let z0 = Complex64::from_polar(5.0 * rng.random::<f64>().sqrt(), rng.random_range(0.0..TAU));
        let z1 = time_2pi_map(&sys, z0, &FlowOptions::default()).unwrap();
        identity = identity.max((z1 - z0).norm());
    }
    v.check(identity <= 1e-8, format!("zero-parameter time-2pi map: worst displacement {identity:.2e} over 100 points"));
    v
}

fn tangency() -> Verdict {
    let mut v = Verdict::new();
    let truncated = diagram_of(&config("eb.toml"), None);
    let general_cfg = config("eb_revisited.toml");
    let mut gaps = Vec::new();
    for rho in [0.02, 0.01, 0.005] {
        let d = diagram_of(&general_cfg, Some(rho));
        let (nf, ni) = (d.fold_count(), d.infinity_count());
        v.check(nf == 6 && ni == 2, format!("rho = {rho}: {nf} folds, {ni} infinity catastrophes"));
        let mut gap = 0.0;
        for e in &d.events {
            let nearest = truncated
                .events
                .iter()
                .filter(|t| t.kind == e.kind && t.curve == e.curve)
                .map(|t| circ(t.s_star, e.s_star))
                .fold(f64::INFINITY, f64::min);
            gap += nearest;
        }
        v.details.push(format!("     rho = {rho}: summed |s* gap| to the truncated map {gap:.4}"));
        gaps.push(gap);
    }
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        v.check((1.5..=2.5).contains(&ratio), format!("gap ratio per halving {ratio:.3} (want about 2)"));
    }
    v
}

fn rd_options(cfg: &Config, model: &ModelSpec) -> RunOptions {
    cfg.run.clone().unwrap_or_default().options(Preset::Desk, model)
}

fn rd_properties() -> Verdict {
    let mut v = Verdict::new();

    let cfg = config("fhn_single_bell.toml");
    let model = cfg.model.clone().unwrap();
    let opts = rd_options(&cfg, &model);
    let res = run_experiment(&model, &opts).unwrap();
    let h = opts.grid.h();
    let dist = res.min_bell_distance.unwrap_or(f64::INFINITY);
    v.check(
        res.tips.anchored() && dist <= h,
        format!(
            "(a) single bell: anchored {}, center {:.4?}, {dist:.4} from the bell (h = {h:.4})",
            res.tips.anchored(),
            res.tips.center()
        ),
    );

    let cfg = config("fhn_four_bells.toml");
    let model = cfg.model.clone().unwrap();
    let res = run_experiment(&model, &rd_options(&cfg, &model)).unwrap();
    let dist = res.min_bell_distance.unwrap_or(f64::NAN);
    let drift = res.tips.report.as_ref().map(|r| r.drift_per_period());
    v.check(
        res.tips.anchored() && dist >= 1.0,
        format!(
            "(b) four bells: anchored {}, center {:.3?}, drift per period {drift:.4?}, nearest bell {dist:.3}",
            res.tips.anchored(),
            res.tips.center()
        ),
    );

    let sweep = |name: &str| {
        let cfg = config(name);
        let model = cfg.model.clone().unwrap();
        let sw = cfg.sweep.clone().unwrap();
        let opts = sw.options(rd_options(&cfg, &model));
        run_sweep(&model, &sw.path, &opts).unwrap()
    };
    let rec = sweep("oregonator_homotopy.toml");
    let fwd = rec.direction(Direction::Forward);
    let ends = [fwd.first().and_then(|r| r.center), fwd.last().and_then(|r| r.center)];
    let near = |c: Option<[f64; 2]>, t: [f64; 2]| c.map_or(f64::INFINITY, |c| (c[0] - t[0]).hypot(c[1] - t[1]));
    let (d0, d1) = (near(ends[0], [15.0, 15.0]), near(ends[1], [18.75, 15.0]));
    v.check(
        rec.aborted.is_none() && d0 <= 0.5 && d1 <= 0.5,
        format!("(c) homotopy: end centers {ends:.3?}, {d0:.3} from (15, 15) and {d1:.3} from (18.75, 15)"),
    );

    let rec = sweep("oregonator_hysteresis.toml");
    let width = rec.disagreement_width();
    v.check(
        rec.aborted.is_none() && width > 0.0,
        format!(
            "(d) hysteresis: disagreement {:?}, forward jumps {:?}, reverse jumps {:?}",
            rec.disagreement,
            rec.jumps(Direction::Forward),
            rec.jumps(Direction::Reverse)
        ),
    );
    v
}

fn fd_relative(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / analytic.abs().max(1.0)
}

fn smooth_endpoint(model: &ModelSpec, grid: Grid, scheme: Scheme, dt: f64) -> SimState {
    let (ur, vr) = model.kinetics.rest_state();
    let mut s = SimState::uniform(grid, ur, vr);
    s.u = grid.sample(|x, y| ur + 1.5 * (-(x * x + y * y) / 8.0).exp());
    s.v = grid.sample(|x, _| vr + 0.05 * x);
    let mut st = Stepper::new(model, grid, scheme, dt).unwrap();
    st.advance(&mut s, (1.0 / dt).round() as usize).unwrap();
    s
}

fn numerics_hygiene() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;

    let mut worst_field = 0.0f64;
    for name in ["eb.toml", "ex1.toml", "ex2.toml", "ex3.toml", "ex4.toml", "ex5.toml", "eb_revisited.toml"] {
        let map = map_of(&config(name));
        let mut fields = vec![&map.f0, &map.g_xi];
        if let Some(g) = &map.general {
            fields.extend([&g.f0_correction, &g.g_correction, &g.j]);
        }
        for f in fields {
            for _ in 0..50 {
                let x = Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                let jac = f.jacobian(&x);
                for k in 0..2 {
                    let mut e = Point::zeros();
                    e[k] = h;
                    let fd = (f.eval(&(x + e)) - f.eval(&(x - e))) / (2.0 * h);
                    for r in 0..2 {
                        worst_field = worst_field.max(fd_relative(jac[(r, k)], fd[r]));
                    }
                }
            }
        }
    }
    v.check(worst_field <= 1e-6, format!("map field Jacobians: worst relative deviation {worst_field:.2e}"));

    let mut worst_family = 0.0f64;
    for (name, general, rho) in [("eb.toml", false, 0.01), ("eb_revisited.toml", true, 0.05)] {
        let map = map_of(&config(name));
        let fam = FixedPointFamily::new(&map, rho, general).unwrap();
        for _ in 0..100 {
            let x = Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let s = rng.random_range(0.0..TAU);
            let lin = fam.linearize(&x, s);
            for k in 0..2 {
                let mut e = Point::zeros();
                e[k] = h;
                let fd = (fam.residual(&(x + e), s) - fam.residual(&(x - e), s)) / (2.0 * h);
                for r in 0..2 {
                    worst_family = worst_family.max(fd_relative(lin.dx[(r, k)], fd[r]));
                }
            }
            let fd = (fam.residual(&x, s + h) - fam.residual(&x, s - h)) / (2.0 * h);
            for r in 0..2 {
                worst_family = worst_family.max(fd_relative(lin.ds[r], fd[r]));
            }
        }
    }
    v.check(
        worst_family <= 1e-6,
        format!("fixed-point equation derivatives in x and s: worst relative deviation {worst_family:.2e}"),
    );

    let hfun = PerturbationFn::new()
        .with_term(2, 1, Complex64::new(1.0, 0.5))
        .with_term(1, 0, Complex64::new(-0.7, 0.2))
        .with_term(3, 0, Complex64::new(0.1, -0.3))
        .with_term(0, 2, Complex64::new(0.4, 0.0));
    let mut worst_pert = 0.0f64;
    for _ in 0..100 {
        let w = Complex64::from_polar(rng.random_range(0.0..3.0), rng.random_range(0.0..TAU));
        let wb = w.conj();
        let d = hfun.d1(w, wb);
        let fd = (hfun.eval(w + h, wb) - hfun.eval(w - h, wb)) / (2.0 * h);
        worst_pert = worst_pert.max((d - fd).norm() / d.norm().max(1.0));
    }
    v.check(worst_pert <= 1e-6, format!("perturbation derivative in w: worst relative deviation {worst_pert:.2e}"));

    let grid = Grid::new(24, 6.0).unwrap();
    let model = ModelSpec::fhn(vec![GaussianBell {
        amplitude: 0.1,
        center: [1.0, -1.0],
        shape: BellShape::Rate(-0.2),
        target: Species::U,
    }]);
    let reference = smooth_endpoint(&model, grid, Scheme::Rk4, 0.04 / 64.0);
    for (scheme, nominal) in [(Scheme::Rk2, 2.0), (Scheme::Rk4, 4.0)] {
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&dt| {
                let s = smooth_endpoint(&model, grid, scheme, dt);
                s.u.iter()
                    .zip(&reference.u)
                    .chain(s.v.iter().zip(&reference.v))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        v.check(
            orders.iter().all(|p| (p - nominal).abs() <= 0.3),
            format!("{scheme:?} measured orders {orders:.3?} (nominal {nominal})"),
        );
    }
    v
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("eb-table", table_reproduction),
        ("visual-criterion", visual_criterion),
        ("example-topology", example_topology),
        ("oracle-equivalence", oracle_equivalence),
        ("center-bundle-closed-forms", center_bundle_closed_forms),
        ("general-map-tangency", tangency),
        ("rd-properties", rd_properties),
        ("numerics-hygiene", numerics_hygiene),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, run) in criteria {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        println!("{} {name} ({secs:.1} s)", if verdict.pass { "PASS" } else { "FAIL" });
        for d in &verdict.details {
            println!("    {d}");
        }
        if !verdict.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
