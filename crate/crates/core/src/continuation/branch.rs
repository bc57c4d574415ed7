//! Pseudo-arclength continuation of fixed-point branches in `(x1, x2, s)`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Complex, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::events::{detect_and_refine_folds, detect_infinity};
use super::family::FixedPointFamily;
use super::ContinuationError;
use crate::planar_map::{Eta, Point};

/// Residual bound `‖P_ρ(x,s) − x‖` for accepted points.
pub const POINT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    /// Both multipliers inside the unit circle.
    Stable,
    Saddle,
    Unstable,
}

impl Stability {
    pub fn from_multipliers(m: &[Complex<f64>; 2]) -> Self {
        match m.iter().filter(|z| z.norm() < 1.0).count() {
            2 => Stability::Stable,
            1 => Stability::Saddle,
            _ => Stability::Unstable,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Saddle => "saddle",
            Stability::Unstable => "unstable",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchPoint {
    /// Parameter angle, unwrapped continuously along the branch.
    pub s: f64,
    pub x: [f64; 2],
    pub eigs: [Complex<f64>; 2],
    pub stability: Stability,
    /// `det D_x f`, whose zeros are the folds.
    pub fold_det: f64,
}

impl BranchPoint {
    pub fn point(&self) -> Point {
        Vector2::new(self.x[0], self.x[1])
    }

    pub(crate) fn y(&self) -> Vector3<f64> {
        Vector3::new(self.x[0], self.x[1], self.s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CatastropheKind {
    Fold,
    Infinity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Before,
    After,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Catastrophe {
    pub kind: CatastropheKind,
    /// Event angle in `[0, 2π)`.
    pub s_star: f64,
    /// Event angle in the unwrapped frame of the branch.
    pub s_unwrapped: f64,
    pub x_star: Option<[f64; 2]>,
    /// Relative to the seed, by the sign of `s* − s_seed` wrapped to `(−π, π]`.
    pub side: Side,
    /// Position along the branch: the event lies between points `index` and `index + 1`
    /// (for an infinity event, at the end the index points to).
    pub index: usize,
    /// `|det D_x f|` at a refined fold.
    pub residual: f64,
    pub low_confidence: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Returned to the seed.
    Closed,
    /// Left the escape radius.
    Escaped,
    /// Covered a full period in `s` without closing.
    PeriodExhausted,
    /// Corrector failed at the minimum step.
    Stalled,
    StepLimit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Branch {
    pub rho: f64,
    pub seed: Option<Eta>,
    pub seed_index: usize,
    pub seed_s: f64,
    pub points: Vec<BranchPoint>,
    pub events: Vec<Catastrophe>,
    /// How the backward and forward traces ended; a closed loop has both `Closed`.
    pub ends: [Termination; 2],
    pub escape_radius: f64,
}

impl Branch {
    pub fn is_closed(&self) -> bool {
        self.ends[1] == Termination::Closed
    }

    pub fn is_unbounded(&self) -> bool {
        self.ends.contains(&Termination::Escaped)
    }

    pub fn folds(&self) -> impl Iterator<Item = &Catastrophe> {
        self.events.iter().filter(|e| e.kind == CatastropheKind::Fold)
    }

    pub fn infinities(&self) -> impl Iterator<Item = &Catastrophe> {
        self.events.iter().filter(|e| e.kind == CatastropheKind::Infinity)
    }

    /// Shortest distance in `x` from `p` to the polyline of the branch.
    pub fn distance_to(&self, p: &Point) -> f64 {
        let pts: Vec<Point> = self.points.iter().map(|q| q.point()).collect();
        let mut best = f64::INFINITY;
        let n = pts.len();
        let segs = if self.is_closed() { n } else { n.saturating_sub(1) };
        for k in 0..segs {
            let (a, b) = (pts[k], pts[(k + 1) % n]);
            let ab = b - a;
            let t = if ab.norm_squared() > 0.0 {
                ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0)
            } else {
                0.0
            };
            best = best.min((a + ab * t - p).norm());
        }
        if n == 1 {
            best = (pts[0] - p).norm();
        }
        best
    }

    /// Fixed points of the branch at angle `s` (and at `s + π` when
    /// `antipodal`), solved from every bracketing segment.
    pub fn points_at(&self, fam: &FixedPointFamily, s: f64, antipodal: bool) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        let targets: &[f64] = if antipodal { &[0.0, PI] } else { &[0.0] };
        let n = self.points.len();
        let segs = if self.is_closed() { n } else { n.saturating_sub(1) };
        for &off in targets {
            let target = s + off;
            for k in 0..segs {
                let (a, b) = (&self.points[k], &self.points[(k + 1) % n]);
                let sa = a.s;
                // closing segment: b is the seed shifted by the loop's net turn
                let sb = if k + 1 == n { self.points[n - 1].s + wrap_pi(b.s - self.points[n - 1].s) } else { b.s };
                let lo = sa.min(sb);
                let hi = sa.max(sb);
                let m0 = ((lo - target) / TAU).ceil() as i64;
                let m1 = ((hi - target) / TAU).floor() as i64;
                for m in m0..=m1 {
                    let t_abs = target + m as f64 * TAU;
                    let t = if sb != sa { (t_abs - sa) / (sb - sa) } else { 0.0 };
                    let guess = a.point() + (b.point() - a.point()) * t;
                    if let Some(x) = fam.solve_at(&guess, t_abs, 50) {
                        if (x - guess).norm() <= 2.0 * (b.point() - a.point()).norm().max(1e-6)
                            && !out.iter().any(|q| (q - x).norm() < 1e-9)
                        {
                            out.push(x);
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationOptions {
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// Defaults to `50·max(‖ξ‖, 1)` when unset.
    pub escape_radius: Option<f64>,
    pub max_steps: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            step_init: 1e-2,
            step_min: 1e-5,
            step_max: 5e-2,
            escape_radius: None,
            max_steps: 200_000,
        }
    }
}

impl ContinuationOptions {
    pub fn validate(&self) -> Result<(), ContinuationError> {
        let ok = self.step_min > 0.0
            && self.step_min <= self.step_init
            && self.step_init <= self.step_max
            && self.escape_radius.is_none_or(|r| r > 0.0)
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(ContinuationError::InvalidArgument(format!("bad continuation options {self:?}")))
        }
    }
}

pub(crate) fn wrap_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Continues the branch through the seed `(η, s_η)`.
pub fn continue_from_eta(
    fam: &FixedPointFamily,
    eta: Eta,
    opts: &ContinuationOptions,
) -> Result<Branch, ContinuationError> {
    let mut b = continue_branch(fam, fam.map.eta_point(eta), eta.axis_angle(), opts)?;
    b.seed = Some(eta);
    Ok(b)
}

/// Continues the fixed-point branch through `(x0, s0)` in both directions,
/// then detects and refines its fold and infinity catastrophes.
pub fn continue_branch(
    fam: &FixedPointFamily,
    x0: Point,
    s0: f64,
    opts: &ContinuationOptions,
) -> Result<Branch, ContinuationError> {
    opts.validate()?;
    let res = fam.p_residual(&x0, s0);
    if !(res <= POINT_TOL) {
        return Err(ContinuationError::SeedNotFixed(res));
    }
    let escape_radius = opts
        .escape_radius
        .unwrap_or(50.0 * fam.map.xi_point().norm().max(1.0));
    if x0.norm() >= escape_radius {
        return Err(ContinuationError::InvalidArgument("seed lies beyond the escape radius".into()));
    }
    let tracer = Tracer {
        fam,
        opts,
        escape_radius,
        y0: Vector3::new(x0[0], x0[1], s0),
        t0: oriented_tangent(fam, &Vector3::new(x0[0], x0[1], s0))
            .ok_or(ContinuationError::SingularSeed)?,
    };
    let (fwd, fwd_end) = tracer.trace(1.0);
    let (ys, seed_index, ends) = if fwd_end == Termination::Closed {
        (fwd, 0, [Termination::Closed, Termination::Closed])
    } else {
        let (bwd, bwd_end) = tracer.trace(-1.0);
        let mut ys: Vec<Vector3<f64>> = bwd.iter().skip(1).rev().copied().collect();
        let seed_index = ys.len();
        ys.extend(fwd);
        (ys, seed_index, [bwd_end, fwd_end])
    };
    let points = ys.iter().map(|y| make_point(fam, y)).collect();
    let mut branch = Branch {
        rho: fam.rho,
        seed: None,
        seed_index,
        seed_s: s0,
        points,
        events: Vec::new(),
        ends,
        escape_radius,
    };
    let mut events = detect_and_refine_folds(fam, &branch);
    events.extend(detect_infinity(&branch));
    events.sort_by_key(|e| e.index);
    branch.events = events;
    Ok(branch)
}

pub(crate) fn make_point(fam: &FixedPointFamily, y: &Vector3<f64>) -> BranchPoint {
    let x = Vector2::new(y[0], y[1]);
    let eigs = fam.multipliers(&x, y[2]);
    BranchPoint {
        s: y[2],
        x: [y[0], y[1]],
        eigs,
        stability: Stability::from_multipliers(&eigs),
        fold_det: fam.fold_det(&x, y[2]),
    }
}

/// Unit null vector of `[D_x f | ∂_s f]`, oriented with increasing `s`
/// when possible.
fn oriented_tangent(fam: &FixedPointFamily, y: &Vector3<f64>) -> Option<Vector3<f64>> {
    let t = tangent(fam, y)?;
    Some(if t[2] < 0.0 { -t } else { t })
}

fn tangent(fam: &FixedPointFamily, y: &Vector3<f64>) -> Option<Vector3<f64>> {
    let lin = fam.linearize(&Vector2::new(y[0], y[1]), y[2]);
    let r1 = Vector3::new(lin.dx[(0, 0)], lin.dx[(0, 1)], lin.ds[0]);
    let r2 = Vector3::new(lin.dx[(1, 0)], lin.dx[(1, 1)], lin.ds[1]);
    let t = r1.cross(&r2);
    let n = t.norm();
    (n > 1e-300 && n.is_finite()).then(|| t / n)
}

/// Newton on `f(y) = 0`, `d·(y − anchor) = 0`.
pub(crate) fn correct(
    fam: &FixedPointFamily,
    start: Vector3<f64>,
    anchor: Vector3<f64>,
    d: Vector3<f64>,
    max_iter: usize,
) -> Option<(Vector3<f64>, usize)> {
    let mut y = start;
    for it in 1..=max_iter {
        let lin = fam.linearize(&Vector2::new(y[0], y[1]), y[2]);
        let m = Matrix3::new(
            lin.dx[(0, 0)],
            lin.dx[(0, 1)],
            lin.ds[0],
            lin.dx[(1, 0)],
            lin.dx[(1, 1)],
            lin.ds[1],
            d[0],
            d[1],
            d[2],
        );
        let r = Vector3::new(lin.f[0], lin.f[1], d.dot(&(y - anchor)));
        let dy = m.lu().solve(&(-r))?;
        y += dy;
        if !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        if dy.norm() <= 1e-12 * (1.0 + y.norm()) {
            let x = Vector2::new(y[0], y[1]);
            return (fam.p_residual(&x, y[2]) <= POINT_TOL).then_some((y, it));
        }
    }
    None
}

struct Tracer<'a, 'b> {
    fam: &'a FixedPointFamily<'b>,
    opts: &'a ContinuationOptions,
    escape_radius: f64,
    y0: Vector3<f64>,
    t0: Vector3<f64>,
}

impl Tracer<'_, '_> {
    /// Offset from the seed with `s` compared modulo 2π.
    fn rel(&self, y: &Vector3<f64>) -> Vector3<f64> {
        let mut d = y - self.y0;
        d[2] = wrap_pi(d[2]);
        d
    }

    fn trace(&self, dir: f64) -> (Vec<Vector3<f64>>, Termination) {
        let o = self.opts;
        let mut ys = vec![self.y0];
        let mut h = o.step_init;
        let mut travelled = 0.0;
        let mut far = false;
        let t_seed = dir * self.t0;
        for _ in 0..o.max_steps {
            let yk = *ys.last().unwrap();
            let dirv = if ys.len() >= 2 {
                (yk - ys[ys.len() - 2]).normalize()
            } else {
                t_seed
            };
            let pred = yk + h * dirv;
            let accepted = correct(self.fam, pred, pred, dirv, 12).filter(|(y, _)| {
                let step = y - yk;
                let len = step.norm();
                len > 0.2 * h && len < 2.0 * h && step.dot(&dirv) / len > 0.9
            });
            let Some((y, iters)) = accepted else {
                h *= 0.5;
                if h < o.step_min {
                    return (ys, Termination::Stalled);
                }
                continue;
            };
            travelled += (y - yk).norm();

            let dk = self.rel(&yk);
            let dn = self.rel(&y);
            if !far && dn.norm() > 4.0 * o.step_max {
                far = true;
            }
            if far && travelled > 8.0 * o.step_max && dn.norm() < 4.0 * o.step_max {
                let (pk, pn) = (t_seed.dot(&dk), t_seed.dot(&dn));
                if pk < 0.0 && pn >= 0.0 {
                    if self.verify_closure(&yk, &y, pk, pn, &t_seed) {
                        return (ys, Termination::Closed);
                    }
                }
            }

            ys.push(y);
            let x = Vector2::new(y[0], y[1]);
            if x.norm() > self.escape_radius {
                return (ys, Termination::Escaped);
            }
            if (y[2] - self.y0[2]).abs() > TAU + 0.5 {
                return (ys, Termination::PeriodExhausted);
            }
            if iters <= 3 {
                h = (h * 1.5).min(o.step_max);
            } else if iters >= 7 {
                h = (h * 0.5).max(o.step_min);
            }
        }
        (ys, Termination::StepLimit)
    }

    /// Corrects onto the seed hyperplane between `a` and `b` and checks that
    /// the result is the seed with `s` shifted by a multiple of 2π.
    fn verify_closure(
        &self,
        a: &Vector3<f64>,
        b: &Vector3<f64>,
        pa: f64,
        pb: f64,
        t: &Vector3<f64>,
    ) -> bool {
        let frac = pa / (pa - pb);
        let guess = a + (b - a) * frac;
        let shift = guess[2] - self.y0[2] - wrap_pi(guess[2] - self.y0[2]);
        let mut anchor = self.y0;
        anchor[2] += shift;
        correct(self.fam, guess, anchor, *t, 20).is_some_and(|(y, _)| (y - anchor).norm() <= 1e-6)
    }
}
