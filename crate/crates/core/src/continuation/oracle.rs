//! Brute-force fixed points at a fixed angle, and branches through every
//! component of κ in a window.

use nalgebra::Vector2;
use rayon::prelude::*;

use super::branch::{continue_branch, Branch, ContinuationOptions};
use super::family::FixedPointFamily;
use super::ContinuationError;
use crate::planar_map::{levelset, CurveKind, CurveLabel, Point, Window};

/// Newton on `x ↦ P_ρ(x, s) − x` from a `seeds × seeds` grid over `window`;
/// converged roots inside the window, deduplicated at `1e-6`.
pub fn newton_grid_oracle(fam: &FixedPointFamily, s: f64, window: &Window, seeds: usize) -> Vec<Point> {
    let n = seeds.max(1);
    let coord = |k: usize, lo: f64, hi: f64| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let found: Vec<Point> = (0..n * n)
        .into_par_iter()
        .filter_map(|idx| {
            let (i, j) = (idx % n, idx / n);
            let seed = Vector2::new(coord(i, window.min[0], window.max[0]), coord(j, window.min[1], window.max[1]));
            fam.solve_at(&seed, s, 60).filter(|x| window.contains(x))
        })
        .collect();
    let mut roots: Vec<Point> = Vec::new();
    for x in found {
        if !roots.iter().any(|r| (r - x).norm() < 1e-6) {
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    roots
}

/// A branch together with the κ label of the curve it was seeded from.
#[derive(Clone, Debug)]
pub struct ComponentBranch {
    pub label: CurveLabel,
    pub branch: Branch,
}

/// Seeds one branch on every κ component in `window` not already covered by
/// an earlier branch, and continues it.
pub fn trace_kappa_components(
    fam: &FixedPointFamily,
    window: &Window,
    resolution: usize,
    opts: &ContinuationOptions,
) -> Result<Vec<ComponentBranch>, ContinuationError> {
    let curves = levelset(fam.map, CurveKind::Kappa, window, resolution)?;
    let mut out: Vec<ComponentBranch> = Vec::new();
    for c in &curves {
        let probe = c.points[c.points.len() / 2];
        if out.iter().any(|b| b.branch.distance_to(&probe) < 1e-3) {
            continue;
        }
        let Some((x, s)) = seed_on_kappa(fam, &probe) else { continue };
        let branch = continue_branch(fam, x, s, opts)?;
        out.push(ComponentBranch { label: c.label, branch });
    }
    Ok(out)
}

/// Fixed point `(x, s)` near a κ vertex, with `s` from the kernel of `A`.
pub fn seed_on_kappa(fam: &FixedPointFamily, x: &Point) -> Option<(Point, f64)> {
    let a = fam.map.matrix_a(x);
    let j = if a.row(0).norm() >= a.row(1).norm() { 0 } else { 1 };
    let s = (-a[(j, 0)]).atan2(a[(j, 1)]);
    fam.solve_at(x, s, 60).map(|x| (x, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar_map::eb_map;

    #[test]
    fn origin_is_a_root_at_zero_angle() {
        let m = eb_map();
        let fam = FixedPointFamily::new(&m, 0.01, false).unwrap();
        let roots = newton_grid_oracle(&fam, 0.0, &Window::square(8.0), 30);
        assert!(roots.iter().any(|r| r.norm() < 1e-9));
    }

    #[test]
    fn kappa_components_are_all_traced() {
        let m = eb_map();
        let fam = FixedPointFamily::new(&m, 0.01, false).unwrap();
        let b = trace_kappa_components(&fam, &Window::square(8.0), 300, &ContinuationOptions::default()).unwrap();
        assert!(b.len() >= 3);
        assert!(b.iter().any(|c| c.label == CurveLabel::C0));
        assert!(b.iter().any(|c| c.label == CurveLabel::CXi));
    }
}
