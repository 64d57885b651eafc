//! Coefficient ledger in exact rational arithmetic, term by term as written,
//! with the same three substitutions for the undefined symbols.

use num_traits::One;
use qsim_core::circuit::CircuitParams;

use crate::exact::{f, int, invert, q, sqrt, Q};

const SQRT_BITS: u32 = 160;

/// `(name, value)` for every ledger field, in the naming of
/// `DerivedParams::fields`. Returns `None` when a radicand is not positive.
pub fn ledger(p: &CircuitParams) -> Option<Vec<(&'static str, f64)>> {
    let cn1 = q(p.c1) + q(p.c_in) + q(p.cgs1) + q(p.cds1);
    let cn2 = q(p.c2) + q(p.cds1) - q(p.cgs2);
    let cn3 = q(p.c3) + q(p.cds2) + q(p.c_out);
    let cds1 = q(p.cds1);
    let z = int(0);
    let m = vec![
        vec![cn1.clone(), -cds1.clone(), z.clone()],
        vec![-cds1.clone(), cn2.clone(), z.clone()],
        vec![z.clone(), z.clone(), cn3.clone()],
    ];
    let inv = invert(&m);
    // 1-based, as in the closed forms
    let c = |i: usize, j: usize| inv[i - 1][j - 1].clone();
    let (gm1, gm2) = (q(p.gm1), q(p.gm2));
    let two = int(2);
    let half = Q::new(1.into(), 2.into());

    let inv_cq1 = (&cn1 * c(1, 1) * c(1, 1) + c(2, 1) * c(2, 1) * &cn2 + c(3, 1) * c(3, 1) * &cn3
        - &half * c(1, 1) * c(1, 2) * &cds1)
        / &two;
    let inv_cq2 = (&cn1 * c(1, 2) * c(1, 2) + c(2, 2) * c(2, 2) * &cn2 + c(3, 2) * c(3, 2) * &cn3
        - &half * c(2, 2) * c(1, 2) * &cds1)
        / &two;
    let inv_cq3 = (&cn1 * c(1, 3) * c(1, 3) + c(2, 3) * c(2, 3) * &cn2 + c(3, 3) * c(3, 3) * &cn3
        - &half * c(3, 3) * c(1, 3) * &cds1)
        / &two;

    let inv_cq1q2 = &cn1 * c(1, 1) * c(1, 2) + &cn2 * c(2, 1) * c(2, 2) + &cn3 * c(3, 1) * c(3, 2)
        - &cds1 * (c(1, 1) * c(2, 2) + c(1, 2) * c(2, 1));
    let inv_cq1q3 = &cn1 * c(1, 1) * c(1, 3) + &cn2 * c(2, 1) * c(2, 3) + &cn3 * c(3, 1) * c(3, 3)
        - &cds1 * (c(1, 1) * c(2, 3) + c(1, 3) * c(2, 1));
    let inv_cq2q3 = &cn1 * c(1, 2) * c(1, 3) + &cn2 * c(2, 2) * c(2, 3) + &cn3 * c(2, 2) * c(3, 2)
        - &cds1 * (c(1, 2) * c(2, 3) + c(1, 3) * c(2, 2));

    let row = |k: usize| c(k, 1) * &gm1 - c(k, 2) * &gm2;
    let (r1, r2, r3) = (row(1), row(2), row(3));

    let inv_lphi2 = (&cn1 * &r1 * &r1 - &cn2 * &r2 * &r2 - &cn3 * &r3 * &r3 - &cds1 * &r1 * &r2) / &two;
    let inv_lphi3 = (&cn1 * (c(1, 2) * &gm1) * (c(1, 2) * &gm1)
        + &cn2 * (c(2, 2) * &gm2) * (c(2, 2) * &gm2)
        + &cn3 * (c(3, 2) * &gm2) * (c(3, 2) * &gm2)
        - &cds1 * (c(2, 1) * c(2, 2) * &gm2 * &gm2))
        / &two;

    let g12 = &cn1 * c(1, 1) * &r1 + &cn2 * c(2, 1) * &r2 + &cn3 * c(3, 1) * &r3
        - &cds1 * (c(1, 1) * &r2 + c(2, 1) * &r1);
    let g22 = &cn1 * c(1, 2) * &r1 + &cn2 * c(2, 2) * &r2 + &cn3 * c(3, 2) * &r3
        - &cds1 * (c(1, 2) * &r2 + c(2, 2) * &r1);
    let g32 = &cn1 * c(1, 3) * &r1 + &cn2 * c(2, 3) * &r2 + &cn3 * c(3, 3) * &r3
        - &cds1 * (c(1, 3) * &r2 + c(2, 3) * &r1);
    let g13 = &cn1 * c(1, 1) * c(1, 2) * &gm2 + &cn2 * c(2, 1) * c(2, 2) * &gm2 + &cn3 * c(3, 1) * c(3, 2) * &gm2
        - &cds1 * (c(1, 1) * c(2, 2) * &gm2 + c(1, 2) * c(2, 1) * &gm2);
    let g23 = &cn1 * c(1, 1) * c(1, 2) * &gm2 + &cn2 * c(2, 1) * c(2, 2) * &gm2 + &cn3 * c(3, 1) * c(3, 2) * &gm2
        - &cds1 * (c(1, 2) * c(2, 2) * &gm2 + c(1, 2) * c(2, 2) * &gm2);
    let g33 = &cn1 * c(1, 3) * c(1, 2) * &gm2 + &cn2 * c(2, 3) * c(2, 2) * &gm2 + &cn3 * c(3, 3) * c(3, 2) * &gm2
        - &cds1 * (c(1, 3) * c(2, 2) * &gm2 + c(1, 2) * c(2, 3) * &gm2);

    let half_inv = [c(1, 1) - &inv_cq1, c(2, 2) - &inv_cq2, c(3, 3) - &inv_cq3];
    if half_inv.iter().any(|h| *h <= int(0)) {
        return None;
    }
    let cq: Vec<Q> = half_inv.iter().map(|h| Q::one() / (&two * h)).collect();

    let inv_cq12 = c(2, 1) + c(1, 2) - &inv_cq1q2;
    let inv_cq13 = c(3, 1) + c(1, 3) - &inv_cq1q3;
    let inv_cq23 = c(3, 2) + c(2, 3) - &inv_cq2q3;

    let big_g12 = (-(&gm1 * c(1, 1)) - &gm2 * c(1, 2)) + &g12;
    let big_g13 = -(&gm2 * c(1, 2)) + &g13;
    let big_g23 = -(&gm1 * c(1, 3)) - (&gm1 * c(3, 1) - &gm2 * c(3, 2)) + &g32;
    let big_g22 = -(&gm1 * c(1, 2)) - (&gm1 * c(2, 1) - &gm2 * c(2, 2)) + &g22;
    let big_g33 = -(&gm2 * c(3, 2)) + &g33;
    // substitution: G32 has no closed form of its own
    let big_g32 = -(&gm2 * c(2, 2)) + &g23;

    // substitution: the closed-form right-hand side is added to 1/(2 L2)
    let h2 = Q::one() / (&two * q(p.l2)) - &gm1 * &r1 - &inv_lphi2;
    let h3 = Q::one() / (&two * q(p.l3)) - &inv_lphi3;
    if h2 <= int(0) || h3 <= int(0) {
        return None;
    }
    let l2_eff = Q::one() / (&two * h2);
    let l3p = Q::one() / (&two * h3);
    // substitution: L11 is read as L1
    let l = [q(p.l1), l2_eff.clone(), l3p.clone()];
    let zs: Vec<Q> = (0..3).map(|k| sqrt(&(&l[k] / &cq[k]), SQRT_BITS)).collect();
    let ws: Vec<Q> = (0..3)
        .map(|k| Q::one() / sqrt(&(&l[k] * &cq[k]), SQRT_BITS))
        .collect();

    Some(vec![
        ("CN1", f(&cn1)),
        ("CN2", f(&cn2)),
        ("CN3", f(&cn3)),
        ("inv_Cq1", f(&inv_cq1)),
        ("inv_Cq2", f(&inv_cq2)),
        ("inv_Cq3", f(&inv_cq3)),
        ("inv_Cq1q2", f(&inv_cq1q2)),
        ("inv_Cq1q3", f(&inv_cq1q3)),
        ("inv_Cq2q3", f(&inv_cq2q3)),
        ("inv_Lphi2", f(&inv_lphi2)),
        ("inv_Lphi3", f(&inv_lphi3)),
        ("g12", f(&g12)),
        ("g22", f(&g22)),
        ("g32", f(&g32)),
        ("g13", f(&g13)),
        ("g23", f(&g23)),
        ("g33", f(&g33)),
        ("CQ1", f(&cq[0])),
        ("CQ2", f(&cq[1])),
        ("CQ3", f(&cq[2])),
        ("inv_CQ12", f(&inv_cq12)),
        ("inv_CQ13", f(&inv_cq13)),
        ("inv_CQ23", f(&inv_cq23)),
        ("G12", f(&big_g12)),
        ("G13", f(&big_g13)),
        ("G22", f(&big_g22)),
        ("G23", f(&big_g23)),
        ("G32", f(&big_g32)),
        ("G33", f(&big_g33)),
        ("L2_eff", f(&l2_eff)),
        ("L3p", f(&l3p)),
        ("Z11", f(&zs[0])),
        ("Z22", f(&zs[1])),
        ("Z33", f(&zs[2])),
        ("w11", f(&ws[0])),
        ("w22", f(&ws[1])),
        ("w33", f(&ws[2])),
    ])
}

/// Fields sharing a unit, so an exact zero can be judged against its peers.
fn group(name: &str) -> &str {
    for prefix in ["CN", "inv_Cq", "inv_CQ", "inv_L", "CQ", "L", "Z", "w"] {
        if name.starts_with(prefix) {
            return prefix;
        }
    }
    "G"
}

/// Relative error, except that a structurally vanishing field (G13 is
/// identically zero) is measured against the largest field of its group.
pub fn field_error(name: &str, got: f64, exact: f64, all: &[(&str, f64)]) -> f64 {
    if got == exact {
        return 0.0;
    }
    let peers = all
        .iter()
        .filter(|(n, _)| group(n) == group(name))
        .fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
    (got - exact).abs() / exact.abs().max(1e-6 * peers)
}
