//! Whole bifurcation diagrams: classification, event table and CSV output.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::branch::{continue_from_eta, Branch, CatastropheKind, ContinuationOptions, Termination};
use super::family::FixedPointFamily;
use super::wedge::{branch_wedge, wedge_angles, wedge_events, WedgeAngle, WedgeReport};
use super::ContinuationError;
use crate::planar_map::Eta;

/// Branches closer than this to the other distinguished point are taken to
/// pass through it.
pub const SAME_CURVE_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchClass {
    /// A closed loop.
    Bounded,
    /// Leaves every bounded set.
    Unbounded,
    /// Stalled or truncated before the classification could be made.
    Incomplete,
}

impl BranchClass {
    pub fn of(branch: &Branch) -> Self {
        if branch.is_closed() {
            BranchClass::Bounded
        } else if branch.ends.iter().all(|e| *e == Termination::Escaped) {
            BranchClass::Unbounded
        } else {
            BranchClass::Incomplete
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BranchClass::Bounded => "bounded",
            BranchClass::Unbounded => "unbounded",
            BranchClass::Incomplete => "incomplete",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedBranch {
    pub name: String,
    pub class: BranchClass,
    pub branch: Branch,
}

/// One row of the catastrophe table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EventRow {
    pub curve: String,
    pub kind: CatastropheKind,
    pub x_star: Option<[f64; 2]>,
    pub s_star: f64,
    /// Wedge angle this event defines, e.g. `("phi_0^-", 0.30)`.
    pub wedge: Option<(String, f64)>,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagram {
    pub branches: Vec<NamedBranch>,
    pub events: Vec<EventRow>,
    pub wedges: Option<WedgeReport>,
    /// `C_0 = C_ξ`.
    pub same_curve: bool,
}

impl Diagram {
    pub fn branch(&self, eta: Eta) -> Option<&NamedBranch> {
        self.branches.iter().find(|b| b.branch.seed == Some(eta))
    }

    pub fn fold_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == CatastropheKind::Fold).count()
    }

    pub fn infinity_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == CatastropheKind::Infinity).count()
    }

    /// `branch,index,s,s_mod_2pi,norm_x,x1,x2,stability,modulus1,modulus2`.
    pub fn write_branches_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "branch", "index", "s", "s_mod_2pi", "norm_x", "x1", "x2", "stability", "modulus1", "modulus2",
        ])?;
        for nb in &self.branches {
            for (i, p) in nb.branch.points.iter().enumerate() {
                wr.write_record(&[
                    nb.name.clone(),
                    i.to_string(),
                    fmt(p.s),
                    fmt(p.s.rem_euclid(TAU)),
                    fmt(p.point().norm()),
                    fmt(p.x[0]),
                    fmt(p.x[1]),
                    p.stability.name().to_string(),
                    fmt(p.eigs[0].norm()),
                    fmt(p.eigs[1].norm()),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// `curve,type,x1,x2,s_star,wedge_angle,wedge_value,low_confidence`.
    pub fn write_events_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["curve", "type", "x1", "x2", "s_star", "wedge_angle", "wedge_value", "low_confidence"])?;
        for e in &self.events {
            let (x1, x2) = e.x_star.map_or(("n.a.".to_string(), "n.a.".to_string()), |x| (fmt(x[0]), fmt(x[1])));
            let (wn, wv) = e
                .wedge
                .as_ref()
                .map_or(("n.a.".to_string(), "n.a.".to_string()), |(n, v)| (n.clone(), fmt(*v)));
            let kind = match e.kind {
                CatastropheKind::Fold => "fold",
                CatastropheKind::Infinity => "infinity",
            };
            wr.write_record(&[e.curve.clone(), kind.to_string(), x1, x2, fmt(e.s_star), wn, wv, e.low_confidence.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Human-readable table in the column layout curve / type / x* / s* / wedge angle.
    pub fn summary_table(&self) -> String {
        let mut s = String::from("curve    type      x*                      s*       wedge angle\n");
        for e in &self.events {
            let x = e.x_star.map_or("n.a.".to_string(), |x| format!("({:.4}, {:.4})", x[0], x[1]));
            let kind = match e.kind {
                CatastropheKind::Fold => "fold",
                CatastropheKind::Infinity => "infinity",
            };
            let w = e.wedge.as_ref().map_or("n.a.".to_string(), |(n, v)| format!("{n} = {v:.4}"));
            s.push_str(&format!("{:<8} {:<9} {:<23} {:<8.4} {}\n", e.curve, kind, x, e.s_star, w));
        }
        if let Some(w) = &self.wedges {
            s.push_str(&format!(
                "nu1 = {:.4}, nu2 = {:.4}, overlap: {}\n",
                w.nu1,
                w.nu2,
                w.overlap.describe()
            ));
        }
        s
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.10}")
}

/// Classifies each named branch and builds the event table; wedge labels are
/// attached to the events that define `φ_η^±` on branches seeded at `η`.
pub fn classify_and_export(branches: Vec<(String, Branch)>) -> Diagram {
    let mut events = Vec::new();
    let mut named = Vec::new();
    for (name, branch) in branches {
        let (before, after) = wedge_events(&branch);
        let (minus, plus) = branch_wedge(&branch);
        let tag = match branch.seed {
            Some(Eta::Origin) => Some("0"),
            Some(Eta::Xi) => Some("xi"),
            None => None,
        };
        for (k, e) in branch.events.iter().enumerate() {
            let wedge = tag.and_then(|t| {
                if Some(k) == before {
                    minus.value().map(|v| (format!("phi_{t}^-"), v))
                } else if Some(k) == after {
                    plus.value().map(|v| (format!("phi_{t}^+"), v))
                } else {
                    None
                }
            });
            events.push(EventRow {
                curve: name.clone(),
                kind: e.kind,
                x_star: e.x_star,
                s_star: e.s_star,
                wedge,
                low_confidence: e.low_confidence,
            });
        }
        named.push(NamedBranch {
            name,
            class: BranchClass::of(&branch),
            branch,
        });
    }
    Diagram {
        branches: named,
        events,
        wedges: None,
        same_curve: false,
    }
}

/// Continues the branches through `(0, 0)` and `(ξ, π/2)` and assembles the
/// diagram with wedge angles and overlap.
pub fn bifurcation_diagram(fam: &FixedPointFamily, opts: &ContinuationOptions) -> Result<Diagram, ContinuationError> {
    let b0 = continue_from_eta(fam, Eta::Origin, opts)?;
    let bx = continue_from_eta(fam, Eta::Xi, opts)?;
    let same = b0.distance_to(&fam.map.xi_point()) < SAME_CURVE_TOL;
    let wedges = wedge_angles(&b0, &bx);
    let (n0, nx) = if same {
        ("C0=Cxi".to_string(), "C0=Cxi".to_string())
    } else {
        ("C0".to_string(), "Cxi".to_string())
    };
    let mut d = if same {
        // one curve: report its events once, from the branch through 0
        let mut d = classify_and_export(vec![(n0, b0)]);
        let dx = classify_and_export(vec![(nx, bx)]);
        merge_xi_wedges(&mut d, &dx);
        d.branches.extend(dx.branches);
        d
    } else {
        classify_and_export(vec![(n0, b0), (nx, bx)])
    };
    d.wedges = Some(wedges);
    d.same_curve = same;
    Ok(d)
}

/// Copies the `φ_ξ^±` labels of the ξ-seeded traversal onto the matching
/// events of the shared curve.
fn merge_xi_wedges(d: &mut Diagram, dx: &Diagram) {
    for ex in dx.events.iter().filter(|e| e.wedge.is_some()) {
        let hit = d.events.iter_mut().filter(|e| e.kind == ex.kind).min_by(|a, b| {
            event_distance(a, ex).total_cmp(&event_distance(b, ex))
        });
        match hit {
            Some(e) if event_distance(e, ex) < 1e-6 && e.wedge.is_none() => e.wedge = ex.wedge.clone(),
            _ => d.events.push(ex.clone()),
        }
    }
}

fn event_distance(a: &EventRow, b: &EventRow) -> f64 {
    let ds = super::branch::wrap_pi(a.s_star - b.s_star).abs();
    let dx = match (a.x_star, b.x_star) {
        (Some(p), Some(q)) => (p[0] - q[0]).hypot(p[1] - q[1]),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    ds + dx
}

impl WedgeAngle {
    pub fn describe(&self) -> String {
        match self {
            WedgeAngle::Angle { value, kind } => format!(
                "{value:.4} ({})",
                match kind {
                    CatastropheKind::Fold => "fold",
                    CatastropheKind::Infinity => "infinity",
                }
            ),
            WedgeAngle::LowerBound { value } => format!(">= {value:.4} (branch stopped)"),
            WedgeAngle::CatastropheFree => "catastrophe-free".to_string(),
        }
    }
}
