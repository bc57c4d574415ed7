//! Fold and infinity catastrophes along a continued branch.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};

use super::branch::{correct, wrap_pi, Branch, Catastrophe, CatastropheKind, Side, Termination};
use super::family::FixedPointFamily;

/// Target for `|det D_x f|` at a refined fold.
pub const FOLD_TOL: f64 = 1e-10;

fn side_of(s: f64, seed_s: f64) -> Side {
    if wrap_pi(s - seed_s) >= 0.0 {
        Side::After
    } else {
        Side::Before
    }
}

/// Segment `k` of the branch as two points in `(x1, x2, s)`, the closing
/// segment of a loop expressed in the frame of its first end.
fn segment(branch: &Branch, k: usize) -> (Vector3<f64>, Vector3<f64>) {
    let n = branch.points.len();
    let a = branch.points[k].y();
    let mut b = branch.points[(k + 1) % n].y();
    if k + 1 == n {
        b[2] = a[2] + wrap_pi(b[2] - a[2]);
    }
    (a, b)
}

/// Brackets sign changes of `det D_x f` between consecutive points and
/// refines each on arclength; then re-examines sharp local minima of
/// `|det|` for double roots hidden inside one step.
pub fn detect_and_refine_folds(fam: &FixedPointFamily, branch: &Branch) -> Vec<Catastrophe> {
    let n = branch.points.len();
    if n < 2 {
        return Vec::new();
    }
    let segs = if branch.is_closed() { n } else { n - 1 };
    let det = |k: usize| branch.points[k % n].fold_det;
    let mut out = Vec::new();
    for k in 0..segs {
        let (da, db) = (det(k), det(k + 1));
        if (da >= 0.0) != (db >= 0.0) {
            let (a, b) = segment(branch, k);
            out.push(refine_fold(fam, branch, k, a, b, da, db));
        }
    }

    // second pass: |det| dips without a sign change
    for k in 1..segs {
        let (dl, dm, dr) = (det(k - 1), det(k), det(k + 1));
        let same = (dl >= 0.0) == (dm >= 0.0) && (dm >= 0.0) == (dr >= 0.0);
        if !same || !(dm.abs() < 0.05 * dl.abs().min(dr.abs())) {
            continue;
        }
        for seg in [k - 1, k] {
            let (a, b) = segment(branch, seg);
            let sub = 16;
            let d = b - a;
            let u = d / d.norm();
            let mut prev = (a, det(seg));
            for i in 1..=sub {
                let p = a + d * (i as f64 / sub as f64);
                let Some((y, _)) = correct(fam, p, p, u, 20) else { break };
                let dy = fam.fold_det(&y.xy(), y[2]);
                if (prev.1 >= 0.0) != (dy >= 0.0) {
                    out.push(refine_fold(fam, branch, seg, prev.0, y, prev.1, dy));
                }
                prev = (y, dy);
            }
        }
    }
    out.sort_by(|a, b| a.index.cmp(&b.index).then(a.s_unwrapped.total_cmp(&b.s_unwrapped)));
    out
}

/// Illinois iteration on the arclength `σ` along the chord `a → b`, with a
/// corrector at every `σ`.
fn refine_fold(
    fam: &FixedPointFamily,
    branch: &Branch,
    index: usize,
    a: Vector3<f64>,
    b: Vector3<f64>,
    da: f64,
    db: f64,
) -> Catastrophe {
    let len = (b - a).norm();
    let u = (b - a) / len;
    let eval = |sig: f64| -> Option<(Vector3<f64>, f64)> {
        let p = a + u * sig;
        let (y, _) = correct(fam, p, p, u, 30)?;
        Some((y, fam.fold_det(&y.xy(), y[2])))
    };
    let (mut lo, mut hi, mut flo, mut fhi) = (0.0, len, da, db);
    let mut best = if da.abs() <= db.abs() { (a, da) } else { (b, db) };
    let mut side = 0i8;
    for _ in 0..200 {
        if best.1.abs() <= FOLD_TOL || hi - lo <= 1e-15 * (1.0 + len) {
            break;
        }
        let mut sig = (lo * fhi - hi * flo) / (fhi - flo);
        if !(sig > lo && sig < hi) {
            sig = 0.5 * (lo + hi);
        }
        let Some((y, g)) = eval(sig) else { break };
        if g.abs() < best.1.abs() {
            best = (y, g);
        }
        if (g >= 0.0) == (fhi >= 0.0) {
            hi = sig;
            fhi = g;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        } else {
            lo = sig;
            flo = g;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        }
    }
    let (y, g) = best;
    Catastrophe {
        kind: CatastropheKind::Fold,
        s_star: y[2].rem_euclid(TAU),
        s_unwrapped: y[2],
        x_star: Some([y[0], y[1]]),
        side: side_of(y[2], branch.seed_s),
        index,
        residual: g.abs(),
        low_confidence: g.abs() > FOLD_TOL,
    }
}

/// Extrapolates `s` against `1/‖x‖ → 0` over the monotone tail of every
/// escaped end of the branch.
pub fn detect_infinity(branch: &Branch) -> Vec<Catastrophe> {
    let n = branch.points.len();
    let mut out = Vec::new();
    for (end, term) in branch.ends.iter().enumerate() {
        if *term != Termination::Escaped {
            continue;
        }
        let order: Vec<usize> = if end == 1 {
            (0..n).rev().collect()
        } else {
            (0..n).collect()
        };
        let r_end = branch.points[order[0]].point().norm();
        let u_end = 1.0 / r_end;
        let mut tail: Vec<(f64, f64)> = Vec::new();
        let mut last_r = f64::INFINITY;
        let mut monotone = true;
        for &i in &order {
            let p = &branch.points[i];
            let r = p.point().norm();
            if 1.0 / r > 4.0 * u_end {
                break;
            }
            if r >= last_r {
                monotone = false;
                break;
            }
            last_r = r;
            tail.push((1.0 / r, p.s));
        }
        let (s_inf, ok) = extrapolate(&tail);
        out.push(Catastrophe {
            kind: CatastropheKind::Infinity,
            s_star: s_inf.rem_euclid(TAU),
            s_unwrapped: s_inf,
            x_star: None,
            side: side_of(s_inf, branch.seed_s),
            index: order[0],
            residual: 0.0,
            low_confidence: !ok || !monotone || tail.len() < 6,
        });
    }
    out
}

/// Least-squares fit `s ≈ c0 + c1 u + c2 u²`, returning `c0`.
fn extrapolate(tail: &[(f64, f64)]) -> (f64, bool) {
    match tail.len() {
        0 => (f64::NAN, false),
        1 => (tail[0].1, false),
        2 => {
            let ((u0, s0), (u1, s1)) = (tail[0], tail[1]);
            (s0 - u0 * (s1 - s0) / (u1 - u0), false)
        }
        _ => {
            // scale u to O(1) for conditioning
            let scale = tail.iter().map(|t| t.0).fold(0.0, f64::max);
            let mut ata = Matrix3::zeros();
            let mut atb = Vector3::zeros();
            for &(u, s) in tail {
                let v = u / scale;
                let row = Vector3::new(1.0, v, v * v);
                ata += row * row.transpose();
                atb += row * s;
            }
            match ata.lu().solve(&atb) {
                Some(c) => (c[0], true),
                None => (tail[0].1, false),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_tail_is_extrapolated_exactly() {
        let tail: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let u = 0.01 + 0.001 * i as f64;
                (u, 1.25 - 3.0 * u + 7.0 * u * u)
            })
            .collect();
        let (s, ok) = extrapolate(&tail);
        assert!(ok);
        assert!((s - 1.25).abs() < 1e-10);
    }

    #[test]
    fn side_uses_wrapped_difference() {
        assert_eq!(side_of(5.98, 0.0), Side::Before);
        assert_eq!(side_of(0.23, 0.0), Side::After);
        assert_eq!(side_of(1.10, std::f64::consts::FRAC_PI_2), Side::Before);
    }
}
