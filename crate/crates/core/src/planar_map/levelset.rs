//! Zero-level curves of scalar functions on a rectangular window by marching
//! squares, with per-edge root refinement and subdivision-resolved saddles.

use std::collections::HashMap;

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::Point;
use super::map::MapSpec;
use super::MapError;

/// Target tolerance on `|f|` at every refined vertex.
pub const VERTEX_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Window {
    pub fn square(half: f64) -> Self {
        Self {
            min: [-half, -half],
            max: [half, half],
        }
    }

    /// Origin-centred square with half-width `4·max(‖ξ‖, 2)`.
    pub fn auto(spec: &MapSpec) -> Self {
        Self::square(4.0 * spec.xi_point().norm().max(2.0))
    }

    pub fn contains(&self, p: &Point) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn validate(&self) -> Result<(), MapError> {
        if self.max[0] > self.min[0] && self.max[1] > self.min[1] {
            Ok(())
        } else {
            Err(MapError::InvalidArgument(format!("degenerate window {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    /// Zero set of `det A`.
    Kappa,
    /// Zero set of `Γ_1`.
    R1,
    /// Zero set of `Γ_2`.
    R2,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Kappa => "kappa",
            CurveKind::R1 => "R1",
            CurveKind::R2 => "R2",
        }
    }
}

/// Which distinguished points a κ curve passes through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveLabel {
    C0,
    CXi,
    /// A single curve through both 0 and ξ.
    C0Xi,
    Anonymous,
}

#[derive(Clone, Debug)]
pub struct LevelCurve {
    pub points: Vec<Point>,
    /// `true` for a loop inside the window, `false` when the curve exits it.
    pub closed: bool,
    pub kind: CurveKind,
    pub label: CurveLabel,
    /// Indices of vertices produced by unresolved saddle cells.
    pub flagged: Vec<usize>,
}

impl LevelCurve {
    pub fn min_distance_to(&self, p: &Point) -> f64 {
        self.points.iter().map(|q| (q - p).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Extracts the zero level set of `det A`, `Γ_1` or `Γ_2` of `spec`.
pub fn levelset(
    spec: &MapSpec,
    kind: CurveKind,
    window: &Window,
    resolution: usize,
) -> Result<Vec<LevelCurve>, MapError> {
    window.validate()?;
    if resolution < 2 {
        return Err(MapError::InvalidArgument("resolution must be >= 2".into()));
    }
    let f = |x: &Point| -> f64 {
        match kind {
            CurveKind::Kappa => spec.det_a(x),
            CurveKind::R1 => spec.fold_function_gamma(1, x).unwrap_or(f64::NAN),
            CurveKind::R2 => spec.fold_function_gamma(2, x).unwrap_or(f64::NAN),
        }
    };
    let lines = zero_set(&f, window, resolution);
    let diag = cell_diagonal(window, resolution);
    let mut curves: Vec<LevelCurve> = lines
        .into_iter()
        .map(|l| LevelCurve {
            points: l.points,
            closed: l.closed,
            kind,
            label: CurveLabel::Anonymous,
            flagged: l.flagged,
        })
        .collect();
    if kind == CurveKind::Kappa {
        label_curves(&mut curves, spec, diag);
    }
    Ok(curves)
}

pub fn cell_diagonal(window: &Window, resolution: usize) -> f64 {
    let hx = (window.max[0] - window.min[0]) / resolution as f64;
    let hy = (window.max[1] - window.min[1]) / resolution as f64;
    hx.hypot(hy)
}

fn label_curves(curves: &mut [LevelCurve], spec: &MapSpec, threshold: f64) {
    let nearest = |p: Point| -> Option<usize> {
        curves
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.min_distance_to(&p)))
            .filter(|(_, d)| *d <= threshold)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    };
    let i0 = nearest(Vector2::zeros());
    let ix = nearest(spec.xi_point());
    if let Some(i) = i0 {
        curves[i].label = CurveLabel::C0;
    }
    if let Some(i) = ix {
        curves[i].label = if Some(i) == i0 {
            CurveLabel::C0Xi
        } else {
            CurveLabel::CXi
        };
    }
}

/// Polyline output of [`zero_set`].
#[derive(Clone, Debug)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub closed: bool,
    pub flagged: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeKey {
    /// Between nodes (i, j) and (i + 1, j).
    H(usize, usize),
    /// Between nodes (i, j) and (i, j + 1).
    V(usize, usize),
}

/// Marching squares on a `resolution × resolution` cell grid.
pub fn zero_set<F>(f: &F, window: &Window, resolution: usize) -> Vec<Polyline>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let n = resolution;
    let hx = (window.max[0] - window.min[0]) / n as f64;
    let hy = (window.max[1] - window.min[1]) / n as f64;
    let node = |i: usize, j: usize| Vector2::new(window.min[0] + i as f64 * hx, window.min[1] + j as f64 * hy);

    // values[j * (n + 1) + i]
    let values: Vec<f64> = (0..=n)
        .into_par_iter()
        .flat_map_iter(|j| (0..=n).map(move |i| (i, j)))
        .map(|(i, j)| f(&node(i, j)))
        .collect();
    let val = |i: usize, j: usize| values[j * (n + 1) + i];
    let pos = |v: f64| v >= 0.0;

    let mut adjacency: HashMap<EdgeKey, Vec<EdgeKey>> = HashMap::new();
    let mut flagged_edges: Vec<EdgeKey> = Vec::new();
    let mut link = |a: EdgeKey, b: EdgeKey| {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    };

    for j in 0..n {
        for i in 0..n {
            let c = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let s = c.map(pos);
            let bottom = EdgeKey::H(i, j);
            let right = EdgeKey::V(i + 1, j);
            let top = EdgeKey::H(i, j + 1);
            let left = EdgeKey::V(i, j);
            let edges = [(bottom, s[0] != s[1]), (right, s[1] != s[2]), (top, s[2] != s[3]), (left, s[3] != s[0])];
            let crossing: Vec<EdgeKey> = edges.iter().filter(|e| e.1).map(|e| e.0).collect();
            match crossing.len() {
                0 => {}
                2 => link(crossing[0], crossing[1]),
                4 => {
                    // saddle: corners 0 and 2 share a sign, 1 and 3 the other
                    let (diag02, ok) = resolve_saddle(f, &node(i, j), hx, hy, s[0]);
                    if diag02 {
                        // 0 and 2 joined through the cell: cut off corners 1 and 3
                        link(bottom, right);
                        link(top, left);
                    } else {
                        link(bottom, left);
                        link(top, right);
                    }
                    if !ok {
                        flagged_edges.extend([bottom, right, top, left]);
                    }
                }
                _ => unreachable!("a square has an even number of sign changes"),
            }
        }
    }

    // refine every crossing edge
    let mut keys: Vec<EdgeKey> = adjacency.keys().copied().collect();
    keys.sort();
    let points: HashMap<EdgeKey, Point> = keys
        .par_iter()
        .map(|&k| {
            let (a, b, fa, fb) = match k {
                EdgeKey::H(i, j) => (node(i, j), node(i + 1, j), val(i, j), val(i + 1, j)),
                EdgeKey::V(i, j) => (node(i, j), node(i, j + 1), val(i, j), val(i, j + 1)),
            };
            (k, refine_on_segment(f, a, b, fa, fb))
        })
        .collect();

    trace(adjacency, &keys, &points, &flagged_edges)
}

fn trace(
    mut adjacency: HashMap<EdgeKey, Vec<EdgeKey>>,
    keys: &[EdgeKey],
    points: &HashMap<EdgeKey, Point>,
    flagged_edges: &[EdgeKey],
) -> Vec<Polyline> {
    let mut out = Vec::new();
    let take_chain = |start: EdgeKey, adjacency: &mut HashMap<EdgeKey, Vec<EdgeKey>>| {
        let mut chain = vec![start];
        let mut cur = start;
        loop {
            let next = match adjacency.get_mut(&cur).and_then(|v| v.pop()) {
                Some(n) => n,
                None => break,
            };
            if let Some(v) = adjacency.get_mut(&next) {
                if let Some(p) = v.iter().position(|&k| k == cur) {
                    v.swap_remove(p);
                }
            }
            if next == start {
                chain.push(next);
                break;
            }
            chain.push(next);
            cur = next;
        }
        chain
    };

    // open chains start at boundary edges (degree 1)
    for &k in keys {
        if adjacency.get(&k).map_or(0, |v| v.len()) == 1 {
            let chain = take_chain(k, &mut adjacency);
            out.push(make_polyline(&chain, false, points, flagged_edges));
        }
    }
    for &k in keys {
        if adjacency.get(&k).map_or(0, |v| v.len()) > 0 {
            let chain = take_chain(k, &mut adjacency);
            let closed = chain.len() > 2 && chain.first() == chain.last();
            out.push(make_polyline(&chain, closed, points, flagged_edges));
        }
    }
    // deterministic order: lexicographic by first vertex
    out.sort_by(|a, b| {
        let (p, q) = (a.points[0], b.points[0]);
        p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1]))
    });
    out
}

fn make_polyline(chain: &[EdgeKey], closed: bool, points: &HashMap<EdgeKey, Point>, flagged: &[EdgeKey]) -> Polyline {
    let body = if closed { &chain[..chain.len() - 1] } else { chain };
    let mut pts: Vec<Point> = Vec::with_capacity(body.len());
    let mut flags = Vec::new();
    for k in body {
        let p = points[k];
        if pts.last().is_some_and(|q: &Point| *q == p) {
            continue;
        }
        if flagged.contains(k) {
            flags.push(pts.len());
        }
        pts.push(p);
    }
    Polyline {
        points: pts,
        closed,
        flagged: flags,
    }
}

/// Decides whether the same-signed corners 0 and 2 of a saddle cell are
/// connected, by flood fill on a 5×5 sub-sampling. The flag is `false` when
/// the sub-sampling cannot separate the two pairings.
fn resolve_saddle<F>(f: &F, origin: &Point, hx: f64, hy: f64, sign0: bool) -> (bool, bool)
where
    F: Fn(&Point) -> f64,
{
    const M: usize = 5;
    let mut s = [[false; M]; M];
    for (b, row) in s.iter_mut().enumerate() {
        for (a, cell) in row.iter_mut().enumerate() {
            let p = origin + Vector2::new(hx * a as f64 / (M - 1) as f64, hy * b as f64 / (M - 1) as f64);
            *cell = f(&p) >= 0.0;
        }
    }
    let connected = |from: (usize, usize), to: (usize, usize), sign: bool| -> bool {
        let mut seen = [[false; M]; M];
        let mut stack = vec![from];
        while let Some((a, b)) = stack.pop() {
            if (a, b) == to {
                return true;
            }
            if seen[b][a] || s[b][a] != sign {
                continue;
            }
            seen[b][a] = true;
            if a > 0 {
                stack.push((a - 1, b));
            }
            if a + 1 < M {
                stack.push((a + 1, b));
            }
            if b > 0 {
                stack.push((a, b - 1));
            }
            if b + 1 < M {
                stack.push((a, b + 1));
            }
        }
        false
    };
    let c02 = connected((0, 0), (M - 1, M - 1), sign0);
    let c13 = connected((M - 1, 0), (0, M - 1), !sign0);
    match (c02, c13) {
        (true, false) => (true, true),
        (false, true) => (false, true),
        _ => {
            // bilinear centre value as the fallback decider
            let c = [
                f(origin),
                f(&(origin + Vector2::new(hx, 0.0))),
                f(&(origin + Vector2::new(hx, hy))),
                f(&(origin + Vector2::new(0.0, hy))),
            ];
            let centre = 0.25 * c.iter().sum::<f64>();
            ((centre >= 0.0) == sign0, false)
        }
    }
}

/// Root of `f` on the segment `[a, b]` given opposite-signed end values,
/// by Illinois regula falsi; stops at `|f| ≤ VERTEX_TOL` or when the
/// bracket can no longer shrink.
pub fn refine_on_segment<F>(f: &F, a: Point, b: Point, fa: f64, fb: f64) -> Point
where
    F: Fn(&Point) -> f64,
{
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let (mut t0, mut t1, mut f0, mut f1) = (0.0f64, 1.0f64, fa, fb);
    let at = |t: f64| a + (b - a) * t;
    let mut side = 0i8;
    let mut best = if f0.abs() < f1.abs() { (t0, f0) } else { (t1, f1) };
    for _ in 0..200 {
        let mut t = (t0 * f1 - t1 * f0) / (f1 - f0);
        if !(t > t0.min(t1) && t < t0.max(t1)) {
            t = 0.5 * (t0 + t1);
        }
        let ft = f(&at(t));
        if ft.abs() < best.1.abs() {
            best = (t, ft);
        }
        if ft.abs() <= VERTEX_TOL || (t1 - t0).abs() <= 4.0 * f64::EPSILON {
            break;
        }
        if (ft >= 0.0) == (f1 >= 0.0) {
            t1 = t;
            f1 = ft;
            if side == 1 {
                f0 *= 0.5;
            }
            side = 1;
        } else {
            t0 = t;
            f0 = ft;
            if side == -1 {
                f1 *= 0.5;
            }
            side = -1;
        }
    }
    at(best.0)
}
