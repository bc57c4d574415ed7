//! Transverse intersections of `κ = {det A = 0}` with `R_j = {Γ_j = 0}` that
//! certify fold catastrophes of `P_ρ`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::field::Point;
use super::levelset::{cell_diagonal, levelset, CurveKind, LevelCurve, Window};
use super::map::MapSpec;
use super::MapError;

/// Singular-value ratio below which an intersection counts as tangential.
pub const RANK_RATIO_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldCase {
    /// `B = 0` and `A_{j,1}C − A_{j,2}E = 0`.
    DegenerateB,
    /// `B ≠ 0` and `C² − 4BE ≥ 0`.
    Discriminant,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldCandidate {
    pub x: [f64; 2],
    /// Row index `j ∈ {1, 2}` of `A` used for the test.
    pub row: usize,
    pub case: FoldCase,
    /// Angle in `[0, π)` of the kernel direction `α`; the fold occurs at this
    /// parameter angle and at the antipodal one.
    pub kernel_angle: f64,
    /// `σ_min/σ_max` of `D(det A, Γ_j)`.
    pub rank_ratio: f64,
}

impl FoldCandidate {
    pub fn point(&self) -> Point {
        Vector2::new(self.x[0], self.x[1])
    }

    /// Unit kernel directions `±α/ρ`.
    pub fn kernel_directions(&self) -> [Vector2<f64>; 2] {
        let d = Vector2::new(self.kernel_angle.cos(), self.kernel_angle.sin());
        [d, -d]
    }

    /// Both parameter angles in `[0, 2π)`.
    pub fn angles(&self) -> [f64; 2] {
        [self.kernel_angle, self.kernel_angle + PI]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Rejection {
    RowVanishes,
    NearTangent { rank_ratio: f64 },
    CaseFails,
}

#[derive(Clone, Debug)]
pub struct RejectedIntersection {
    pub x: Point,
    pub row: usize,
    pub reason: Rejection,
}

#[derive(Clone, Debug)]
pub struct CandidateReport {
    pub candidates: Vec<FoldCandidate>,
    pub rejected: Vec<RejectedIntersection>,
    pub kappa: Vec<LevelCurve>,
}

/// Finds every intersection of κ with `R_1 ∪ R_2` in `window` and keeps the
/// ones passing the row-validity, transversality and case tests.
pub fn transverse_fold_candidates(
    spec: &MapSpec,
    window: &Window,
    resolution: usize,
) -> Result<CandidateReport, MapError> {
    let kappa = levelset(spec, CurveKind::Kappa, window, resolution)?;
    let merge_tol = 1e-6;
    let max_jump = 2.0 * cell_diagonal(window, resolution);

    let mut hits: Vec<(Point, usize)> = Vec::new();
    for curve in &kappa {
        let n = curve.points.len();
        let segs = if curve.closed { n } else { n.saturating_sub(1) };
        let gammas: Vec<[f64; 2]> = curve.points.iter().map(|p| spec.algebra_at(p).gamma).collect();
        for k in 0..segs {
            let (a, b) = (k, (k + 1) % n);
            for j in 0..2 {
                let (ga, gb) = (gammas[a][j], gammas[b][j]);
                if (ga >= 0.0) == (gb >= 0.0) {
                    continue;
                }
                let t = ga / (ga - gb);
                let guess = curve.points[a] + (curve.points[b] - curve.points[a]) * t;
                if let Some(x) = polish_intersection(spec, j, guess, max_jump) {
                    if window.contains(&x) && !hits.iter().any(|(p, r)| *r == j + 1 && (p - x).norm() < merge_tol) {
                        hits.push((x, j + 1));
                    }
                }
            }
        }
    }

    let mut candidates: Vec<FoldCandidate> = Vec::new();
    let mut rejected = Vec::new();
    for (x, row) in hits {
        match classify_intersection(spec, &x, row) {
            Ok(c) => {
                if let Some(prev) = candidates.iter_mut().find(|c| (c.point() - x).norm() < merge_tol) {
                    // same point through the other row: keep the better conditioned record
                    if c.rank_ratio > prev.rank_ratio {
                        *prev = c;
                    }
                } else {
                    candidates.push(c);
                }
            }
            Err(reason) => rejected.push(RejectedIntersection { x, row, reason }),
        }
    }
    // a point accepted through one row supersedes a rejection through the other
    rejected.retain(|r| !candidates.iter().any(|c| (c.point() - r.x).norm() < merge_tol));
    candidates.sort_by(|a, b| a.x[0].total_cmp(&b.x[0]).then(a.x[1].total_cmp(&b.x[1])));
    Ok(CandidateReport {
        candidates,
        rejected,
        kappa,
    })
}

/// Newton on `(det A, Γ_j) = 0` from `guess`.
fn polish_intersection(spec: &MapSpec, j: usize, guess: Point, max_jump: f64) -> Option<Point> {
    let mut x = guess;
    for _ in 0..40 {
        let al = spec.algebra_at(&x);
        let r = Vector2::new(al.det_a, al.gamma[j]);
        let m = Matrix2::from_rows(&[al.grad_det.transpose(), al.grad_gamma[j].transpose()]);
        let dx = m.lu().solve(&(-r))?;
        x += dx;
        if (x - guess).norm() > max_jump || !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        if dx.norm() <= 1e-14 * (1.0 + x.norm()) {
            break;
        }
    }
    Some(x)
}

fn classify_intersection(spec: &MapSpec, x: &Point, row: usize) -> Result<FoldCandidate, Rejection> {
    let al = spec.algebra_at(x);
    let j = row - 1;
    let (a1, a2) = (al.a[(j, 0)], al.a[(j, 1)]);
    let scale = al.a.abs().max().max(1e-300);
    if a1.hypot(a2) <= 1e-8 * scale.max(1.0) {
        return Err(Rejection::RowVanishes);
    }
    let m = Matrix2::from_rows(&[al.grad_det.normalize().transpose(), al.grad_gamma[j].normalize().transpose()]);
    let sv = m.singular_values();
    let ratio = sv.min() / sv.max();
    if !(ratio >= RANK_RATIO_TOL) {
        return Err(Rejection::NearTangent { rank_ratio: ratio });
    }
    let (b, c, e) = (al.b, al.c, al.e);
    let bscale = b.abs().max(c.abs()).max(e.abs()).max(1.0);
    let case = if b.abs() <= 1e-12 * bscale {
        if (a1 * c - a2 * e).abs() <= 1e-9 * bscale * scale {
            FoldCase::DegenerateB
        } else {
            return Err(Rejection::CaseFails);
        }
    } else if c * c - 4.0 * b * e >= -1e-9 * bscale * bscale {
        FoldCase::Discriminant
    } else {
        return Err(Rejection::CaseFails);
    };
    // kernel of row j: λ ∝ (A_{j,2}, −A_{j,1})
    let angle = (-a1).atan2(a2).rem_euclid(PI);
    Ok(FoldCandidate {
        x: [x[0], x[1]],
        row,
        case,
        kernel_angle: angle,
        rank_ratio: ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar_map::field::{PlanarField, Poly};
    use crate::planar_map::map::eb_map;

    #[test]
    fn eb_candidates_cover_known_folds() {
        let m = eb_map();
        let r = transverse_fold_candidates(&m, &Window::square(8.0), 600).unwrap();
        let known = [
            (1.2483, -0.1286),
            (0.2269, -3.4760),
            (0.3371, 3.1473),
            (2.2769, 0.2982),
            (-3.2933, 6.1024),
            (5.6733, -1.2807),
        ];
        for k in known {
            assert!(r.candidates.iter().any(|c| (c.point() - Vector2::new(k.0, k.1)).norm() < 1e-3), "{k:?}");
        }
        // plus a close pair on C0 bracketing an s-extent of about 3e-5
        assert_eq!(r.candidates.len(), 8);
        let extra: Vec<_> = r.candidates.iter().filter(|c| c.x[0] < -1.0 && c.x[1] < -0.9).collect();
        assert_eq!(extra.len(), 2);
        assert!((extra[0].kernel_angle - extra[1].kernel_angle).abs() < 1e-4);
        for c in &r.candidates {
            let x = c.point();
            assert!(m.det_a(&x).abs() < 1e-9);
            // both kernel directions fix x and make the fold determinant vanish
            for d in c.kernel_directions() {
                let res = m.matrix_a(&x) * d;
                assert!(res.norm() < 1e-8);
                let det = (d[0] * m.f0.jacobian(&x) + d[1] * m.g_xi.jacobian(&x)).determinant();
                assert!(det.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rotations_give_no_candidates() {
        // F0 = R1 x, Gξ = R2 (x − ξ) with R1, R2 multiplications by 2+i and 1+2i:
        // λᵀQλ = |λ1 z1 + λ2 z2|² > 0, so Γ_j vanishes only where row j of A does
        let rot = |base, a: f64, b: f64| PlanarField::new(base, Poly::new().with(1, 0, a).with(0, 1, -b), Poly::new().with(1, 0, b).with(0, 1, a));
        let m = MapSpec::new([2.0, 2.0], rot([0.0, 0.0], 2.0, 1.0), rot([2.0, 2.0], 1.0, 2.0)).unwrap();
        let r = transverse_fold_candidates(&m, &Window::square(8.0), 200).unwrap();
        assert!(r.candidates.is_empty());
    }
}
