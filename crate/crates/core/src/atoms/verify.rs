use serde::{Deserialize, Serialize};

use super::project::discrete_moments;
use super::{Atom, AtomKind};

/// Relative tolerance on moments, in units of `||a||_inf l^{|alpha| + n}`.
pub const MOMENT_TOLERANCE: f64 = 1e-10;
const SUP_SLACK: f64 = 1e-9;
const LEAK_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentResidual {
    pub order: u32,
    /// Largest scaled `|int (x - c)^alpha a|` over `|alpha| = order`.
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCertificate {
    /// `sup_{outside Q} |a| / ||a||_inf`.
    pub support_leak: f64,
    pub support_ok: bool,
    /// `||a||_inf |Q|^{1/lambda}`; at most 1 for a valid atom.
    pub sup_slack: f64,
    pub sup_ok: bool,
    /// Empty when the kind carries no moment condition.
    pub moments: Vec<MomentResidual>,
    pub moments_checked: bool,
    pub moments_ok: bool,
    /// Rough blocks need side `>= 1`.
    pub kind_ok: bool,
    pub passed: bool,
}

pub fn verify_atom(a: &Atom) -> AtomCertificate {
    let sup = a.data.sup_norm();
    let dim = a.data.grid().dim();
    let outside = a.data.sup_outside(&a.cube);
    let support_leak = if sup == 0.0 { 0.0 } else { outside / sup };
    let support_ok = support_leak <= LEAK_TOLERANCE;
    let sup_slack = sup / a.sup_bound();
    let sup_ok = sup_slack <= 1.0 + SUP_SLACK;
    let moments_checked = a.kind != AtomKind::Rough && a.moment_order >= 0;
    let mut moments: Vec<MomentResidual> = Vec::new();
    if moments_checked {
        for (alpha, m) in discrete_moments(&a.data, &a.cube, a.moment_order) {
            let order = alpha[0] + alpha[1];
            let scale = sup * a.cube.side.powi(order as i32 + dim as i32);
            let r = if scale == 0.0 { 0.0 } else { m.norm() / scale };
            match moments.iter_mut().find(|e| e.order == order) {
                Some(e) => e.residual = e.residual.max(r),
                None => moments.push(MomentResidual {
                    order,
                    residual: r,
                    passed: true,
                }),
            }
        }
        for e in &mut moments {
            e.passed = e.residual <= MOMENT_TOLERANCE;
        }
    }
    let moments_ok = moments.iter().all(|e| e.passed);
    let kind_ok = a.kind != AtomKind::Rough || a.cube.side >= 1.0;
    AtomCertificate {
        support_leak,
        support_ok,
        sup_slack,
        sup_ok,
        moments,
        moments_checked,
        moments_ok,
        kind_ok,
        passed: support_ok && sup_ok && moments_ok && kind_ok,
    }
}
