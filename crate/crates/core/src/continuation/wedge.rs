//! Wedge angles `φ_η^±` and the overlap of the anchoring wedges.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::branch::{wrap_pi, Branch, Catastrophe, CatastropheKind, Termination};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WedgeAngle {
    /// Angular distance to the first catastrophe on this side.
    Angle { value: f64, kind: CatastropheKind },
    /// The branch stopped before any catastrophe; the true angle is at least `value`.
    LowerBound { value: f64 },
    /// No catastrophe on this side at all.
    CatastropheFree,
}

impl WedgeAngle {
    pub fn value(&self) -> Option<f64> {
        match self {
            WedgeAngle::Angle { value, .. } | WedgeAngle::LowerBound { value } => Some(*value),
            WedgeAngle::CatastropheFree => None,
        }
    }

    fn summand(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }

    pub fn kind(&self) -> Option<CatastropheKind> {
        match self {
            WedgeAngle::Angle { kind, .. } => Some(*kind),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Overlap {
    AllQuadrants,
    FirstAndThird,
    SecondAndFourth,
    /// Some `ν_j = π/2`: no overlap but a null complement.
    Boundary,
    None,
}

impl Overlap {
    pub fn overlaps(self) -> bool {
        matches!(self, Overlap::AllQuadrants | Overlap::FirstAndThird | Overlap::SecondAndFourth)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Overlap::AllQuadrants => "all four quadrants",
            Overlap::FirstAndThird => "first and third quadrants",
            Overlap::SecondAndFourth => "second and fourth quadrants",
            Overlap::Boundary => "touching (no overlap)",
            Overlap::None => "none",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WedgeReport {
    pub phi_0_minus: WedgeAngle,
    pub phi_0_plus: WedgeAngle,
    pub phi_xi_minus: WedgeAngle,
    pub phi_xi_plus: WedgeAngle,
    pub nu1: f64,
    pub nu2: f64,
    pub overlap: Overlap,
}

/// Which events of a branch define its two wedge angles, as indices into
/// `branch.events`: `(before, after)`.
pub fn wedge_events(branch: &Branch) -> (Option<usize>, Option<usize>) {
    let i0 = branch.seed_index;
    let ev = &branch.events;
    let after = (0..ev.len())
        .filter(|&k| ev[k].index >= i0)
        .min_by(|&a, &b| ev[a].index.cmp(&ev[b].index).then(ev[a].s_unwrapped.total_cmp(&ev[b].s_unwrapped)));
    let before = if branch.is_closed() {
        // walking backwards from the seed round the loop
        (0..ev.len()).max_by(|&a, &b| ev[a].index.cmp(&ev[b].index).then(ev[a].s_unwrapped.total_cmp(&ev[b].s_unwrapped)))
    } else {
        (0..ev.len())
            .filter(|&k| ev[k].index < i0)
            .max_by(|&a, &b| ev[a].index.cmp(&ev[b].index).then(ev[a].s_unwrapped.total_cmp(&ev[b].s_unwrapped)))
    };
    (before, after)
}

/// `(φ^−, φ^+)` of a single branch with respect to its seed.
pub fn branch_wedge(branch: &Branch) -> (WedgeAngle, WedgeAngle) {
    let s_seed = branch.points[branch.seed_index].s;
    let (before, after) = wedge_events(branch);
    let angle = |e: &Catastrophe, v: f64| WedgeAngle::Angle {
        value: v,
        kind: e.kind,
    };
    let n = branch.points.len();
    let net_turn = if branch.is_closed() {
        let (first, last) = (&branch.points[0], &branch.points[n - 1]);
        last.s + wrap_pi(first.s - last.s) - first.s
    } else {
        0.0
    };
    let missing = |term: Termination, s_end: f64| match term {
        Termination::Closed | Termination::PeriodExhausted => WedgeAngle::CatastropheFree,
        _ => WedgeAngle::LowerBound {
            value: (s_end - s_seed).abs(),
        },
    };
    let plus = match after {
        Some(k) => angle(&branch.events[k], branch.events[k].s_unwrapped - s_seed),
        None => missing(branch.ends[1], branch.points[n - 1].s),
    };
    let minus = match before {
        Some(k) => {
            let e = &branch.events[k];
            let reference = if branch.is_closed() { s_seed + net_turn } else { s_seed };
            angle(e, reference - e.s_unwrapped)
        }
        None => missing(branch.ends[0], branch.points[0].s),
    };
    (minus, plus)
}

pub fn wedge_angles(branch_0: &Branch, branch_xi: &Branch) -> WedgeReport {
    let (phi_0_minus, phi_0_plus) = branch_wedge(branch_0);
    let (phi_xi_minus, phi_xi_plus) = branch_wedge(branch_xi);
    let nu1 = phi_0_plus.summand() + phi_xi_minus.summand();
    let nu2 = phi_0_minus.summand() + phi_xi_plus.summand();
    WedgeReport {
        phi_0_minus,
        phi_0_plus,
        phi_xi_minus,
        phi_xi_plus,
        nu1,
        nu2,
        overlap: classify_overlap(nu1, nu2),
    }
}

pub fn classify_overlap(nu1: f64, nu2: f64) -> Overlap {
    let tol = 1e-12;
    let big = |v: f64| v > FRAC_PI_2 + tol;
    match (big(nu1), big(nu2)) {
        (true, true) => Overlap::AllQuadrants,
        (true, false) => Overlap::FirstAndThird,
        (false, true) => Overlap::SecondAndFourth,
        _ if (nu1 - FRAC_PI_2).abs() <= tol || (nu2 - FRAC_PI_2).abs() <= tol => Overlap::Boundary,
        _ => Overlap::None,
    }
}
