//! Spiral tip as the crossing of the `u = iso_u` and `v = iso_v` contours.

use super::grid::SimState;

/// Every in-cell crossing of the two contours, in grid-scan order.
pub fn tip_candidates(state: &SimState, iso_u: f64, iso_v: f64) -> Vec<[f64; 2]> {
    let g = state.grid;
    let (n, h) = (g.n, g.h());
    let mut out = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let idx = [i * n + j, i * n + j + 1, (i + 1) * n + j, (i + 1) * n + j + 1];
            let cu = idx.map(|k| state.u[k] - iso_u);
            let cv = idx.map(|k| state.v[k] - iso_v);
            if !changes_sign(&cu) || !changes_sign(&cv) {
                continue;
            }
            if let Some((s, t)) = bilinear_root(cu, cv) {
                out.push([g.coord(j) + s * h, g.coord(i) + t * h]);
            }
        }
    }
    out
}

/// The crossing nearest to `previous`, or the first one found.
pub fn track_tip(state: &SimState, iso_u: f64, iso_v: f64, previous: Option<[f64; 2]>) -> Option<[f64; 2]> {
    let cands = tip_candidates(state, iso_u, iso_v);
    match previous {
        Some(p) => cands.into_iter().min_by(|a, b| dist2(a, &p).total_cmp(&dist2(b, &p))),
        None => cands.into_iter().next(),
    }
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn changes_sign(c: &[f64; 4]) -> bool {
    let pos = c.iter().any(|v| *v >= 0.0);
    let neg = c.iter().any(|v| *v < 0.0);
    pos && neg
}

/// Root of the bilinear interpolants on the unit cell; corner order
/// `(0,0), (1,0), (0,1), (1,1)` in `(s, t)`.
fn bilinear_root(u: [f64; 4], v: [f64; 4]) -> Option<(f64, f64)> {
    let eval = |c: &[f64; 4], s: f64, t: f64| {
        let val = c[0] * (1.0 - s) * (1.0 - t) + c[1] * s * (1.0 - t) + c[2] * (1.0 - s) * t + c[3] * s * t;
        let ds = (c[1] - c[0]) * (1.0 - t) + (c[3] - c[2]) * t;
        let dt = (c[2] - c[0]) * (1.0 - s) + (c[3] - c[1]) * s;
        (val, ds, dt)
    };
    let scale = u.iter().chain(&v).map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    for start in [(0.5, 0.5), (0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
        let (mut s, mut t) = start;
        for _ in 0..30 {
            let (fu, us, ut) = eval(&u, s, t);
            let (fv, vs, vt) = eval(&v, s, t);
            let det = us * vt - ut * vs;
            if det.abs() <= 1e-12 * scale * scale {
                break;
            }
            let ds = (fu * vt - ut * fv) / det;
            let dt = (us * fv - fu * vs) / det;
            s -= ds;
            t -= dt;
            if !(s.is_finite() && t.is_finite()) || s.abs() > 10.0 || t.abs() > 10.0 {
                break;
            }
            if ds.abs().max(dt.abs()) < 1e-13 {
                let tol = 1e-9;
                if (-tol..=1.0 + tol).contains(&s) && (-tol..=1.0 + tol).contains(&t) {
                    return Some((s.clamp(0.0, 1.0), t.clamp(0.0, 1.0)));
                }
                break;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd_sim::grid::Grid;

    fn state(g: Grid, u: impl Fn(f64, f64) -> f64, v: impl Fn(f64, f64) -> f64) -> SimState {
        SimState {
            grid: g,
            u: g.sample(u),
            v: g.sample(v),
            t: 0.0,
        }
    }

    #[test]
    fn linear_fields_cross_at_the_origin() {
        let g = Grid::new(20, 3.0).unwrap();
        let s = state(g, |x, _| x, |_, y| y);
        let tip = track_tip(&s, 0.0, 0.0, None).unwrap();
        assert!(tip[0].abs() < 1e-12 && tip[1].abs() < 1e-12);
        let s = state(g, |x, y| x - 0.37 + 0.1 * y, |x, y| y + 1.21 - 0.2 * x);
        let tip = track_tip(&s, 0.0, 0.0, None).unwrap();
        assert!((tip[0] - 0.37 + 0.1 * (-1.21 + 0.2 * tip[0])).abs() < 1e-10);
    }

    #[test]
    fn parallel_contours_have_no_tip() {
        let g = Grid::new(20, 3.0).unwrap();
        let s = state(g, |x, _| x, |x, _| 2.0 * x);
        assert!(track_tip(&s, 0.0, 0.0, None).is_none());
        let s = state(g, |x, _| x, |x, _| x + 0.5);
        assert!(track_tip(&s, 0.0, 0.0, None).is_none());
    }

    #[test]
    fn nearest_to_previous_wins() {
        let g = Grid::new(40, 4.0).unwrap();
        // u = 0 on x = ±2, v = 0 on y = 0
        let s = state(g, |x, _| x * x - 4.0, |_, y| y);
        let left = track_tip(&s, 0.0, 0.0, Some([-1.5, 0.2])).unwrap();
        let right = track_tip(&s, 0.0, 0.0, Some([1.7, -0.3])).unwrap();
        assert!((left[0] + 2.0).abs() < 0.01 && (right[0] - 2.0).abs() < 0.01);
        assert_eq!(tip_candidates(&s, 0.0, 0.0).len(), 2);
    }
}
