use proptest::prelude::*;
use spiral_anchor::rd_sim::*;

fn fhn_bell(amplitude: f64, center: [f64; 2], a: f64) -> GaussianBell {
    GaussianBell {
        amplitude,
        center,
        shape: BellShape::Rate(a),
        target: Species::U,
    }
}

fn smooth_state(grid: Grid, model: &ModelSpec) -> SimState {
    let (ur, vr) = model.kinetics.rest_state();
    let mut s = SimState::uniform(grid, ur, vr);
    s.u = grid.sample(|x, y| ur + 1.5 * (-(x * x + y * y) / 8.0).exp());
    s.v = grid.sample(|x, _| vr + 0.05 * x);
    s
}

fn endpoint(model: &ModelSpec, grid: Grid, scheme: Scheme, dt: f64, horizon: f64) -> SimState {
    let mut st = Stepper::new(model, grid, scheme, dt).unwrap();
    let mut s = smooth_state(grid, model);
    st.advance(&mut s, (horizon / dt).round() as usize).unwrap();
    s
}

fn max_diff(a: &SimState, b: &SimState) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .chain(a.v.iter().zip(&b.v))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn runge_kutta_orders_match_nominal() {
    let grid = Grid::new(24, 6.0).unwrap();
    let model = ModelSpec::fhn(vec![fhn_bell(0.1, [1.0, -1.0], -0.2)]);
    let horizon = 1.0;
    let reference = endpoint(&model, grid, Scheme::Rk4, 0.04 / 64.0, horizon);
    for (scheme, nominal) in [(Scheme::Rk2, 2.0), (Scheme::Rk4, 4.0)] {
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&dt| max_diff(&endpoint(&model, grid, scheme, dt, horizon), &reference))
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - nominal).abs() < 0.3, "{scheme:?}: errors {errs:?}, order {order}");
        }
    }
}

#[test]
fn uniform_equilibrium_is_stationary() {
    let grid = Grid::new(20, 5.0).unwrap();
    let model = ModelSpec::fhn(vec![]);
    let (u, v) = model.kinetics.rest_state();
    let mut s = SimState::uniform(grid, u, v);
    let mut st = Stepper::new(&model, grid, Scheme::Rk4, 0.02).unwrap();
    st.advance(&mut s, 200).unwrap();
    assert!(s.u.iter().all(|x| (x - u).abs() < 1e-12));
    assert!(s.v.iter().all(|x| (x - v).abs() < 1e-12));
}

#[test]
fn oregonator_reaction_is_finite_at_u_equal_q() {
    let k = Kinetics::Oregonator {
        f: 1.4,
        q: 0.002,
        varsigma: 0.05,
    };
    let (du, dv) = k.reaction(0.002, 0.3, 0.01, 0.0);
    assert!((du - (0.002 - 0.002f64.powi(2)) / 0.05).abs() < 1e-15);
    assert!(dv.is_finite());
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let model = ModelSpec::fhn(vec![fhn_bell(-0.3, [-1.0, 1.0], -0.05)]);
    let mut opts = RunOptions::preset(Preset::Desk, &model);
    opts.grid = Grid::new(48, 12.0).unwrap();
    opts.duration = 20.0;
    opts.frame_every = Some(250);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&model, &opts).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.state, b.state);
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.tips.samples, b.tips.samples);
}

#[test]
fn single_bell_run_anchors_on_the_bell_independent_of_transient_cut() {
    let model = ModelSpec::fhn(vec![fhn_bell(-0.3, [-3.0, 2.0], -0.05)]);
    let mut opts = RunOptions::preset(Preset::Desk, &model);
    opts.stimulus = [2.4, 2.0];
    opts.duration = 300.0;
    let res = run_experiment(&model, &opts).unwrap();
    let h = opts.grid.h();

    let tips = &res.tips;
    assert!(tips.anchored(), "{:?}", tips.report);
    let c = tips.center().unwrap();
    assert!((c[0] + 3.0).hypot(c[1] - 2.0) < h, "center {c:?}");

    let late = anchoring_center(&tips.samples, 0.7).unwrap();
    assert!((late.center[0] - c[0]).hypot(late.center[1] - c[1]) < h);

    // consecutive tips of the rotating wave stay within two cells
    let settled: Vec<_> = tips.samples.iter().filter(|s| s[0] > 50.0).collect();
    for w in settled.windows(2) {
        let step = (w[1][1] - w[0][1]).hypot(w[1][2] - w[0][2]);
        assert!(step < 2.0 * h, "tip jumped {step} at t = {}", w[1][0]);
    }
}

#[test]
fn zero_amplitude_path_is_never_anchored() {
    let base = ModelSpec::oregonator([0.0, 0.0], [1.0, 1.0]);
    let mut run = RunOptions::preset(Preset::Desk, &base);
    run.grid = Grid::new(60, 15.0).unwrap();
    run.stimulus = [5.0, 1.0];
    let path = SweepPath {
        rho: 0.0,
        tau_start: 0.0,
        tau_end: std::f64::consts::FRAC_PI_2,
        steps: 2,
        bells: [0, 1],
    };
    let opts = SweepOptions {
        run,
        spin_up: 10.0,
        per_step: 20.0,
        reverse: false,
        jump_tol: 1.0,
        disagreement_tol: 1.0,
    };
    let rec = run_sweep(&base, &path, &opts).unwrap();
    assert!(rec.aborted.is_none());
    assert_eq!(rec.rows.len(), 3);
    assert!(rec.rows.iter().all(|r| !r.anchored), "{:?}", rec.rows);
    assert!(rec.disagreement.is_none());
}

fn bell_strategy() -> impl Strategy<Value = GaussianBell> {
    (
        -1.0..1.0f64,
        -40.0..40.0f64,
        -40.0..40.0f64,
        prop_oneof![
            (-2.0..-1e-4f64).prop_map(BellShape::Rate),
            (0.2..20.0f64).prop_map(BellShape::Width)
        ],
        prop_oneof![Just(Species::U), Just(Species::V)],
    )
        .prop_map(|(amplitude, x, y, shape, target)| GaussianBell {
            amplitude,
            center: [x, y],
            shape,
            target,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perturbation_fields_stay_below_their_amplitudes(bells in prop::collection::vec(bell_strategy(), 1..5)) {
        let model = ModelSpec::fhn(bells.clone());
        let grid = Grid::new(31, 30.0).unwrap();
        let st = Stepper::new(&model, grid, Scheme::Rk2, 0.02).unwrap();
        let (pu, pv) = st.perturbation_fields();
        for (species, field) in [(Species::U, pu), (Species::V, pv)] {
            let bound: f64 = bells.iter().filter(|b| b.target == species).map(|b| b.amplitude.abs()).sum();
            prop_assert!(field.iter().all(|p| p.abs() <= bound + 1e-15));
        }
        for b in &bells {
            prop_assert!(b.eval(b.center[0] + 1e4, b.center[1]).abs() < 1e-12);
        }
    }
}
