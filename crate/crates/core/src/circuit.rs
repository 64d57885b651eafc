//! Lumped-element circuit model: three LC resonators coupled through two
//! transistor small-signal models (gate-source, gate-drain, drain-source
//! capacitances plus a transconductance each).
//!
//! Node fluxes are ordered (node 1, node 2, node 3) = (input resonator,
//! interstage resonator, output resonator).

use std::fmt;

use nalgebra::Matrix3;

use crate::error::{invalid, QsimError, Result};

/// Which reading of the circuit's kinetic (capacitive) energy to use.
///
/// * `ElementSums` reads the capacitances straight off the Lagrangian:
///   `Cin + C1 + Cgs1 + Cgd1` on node 1, a `Cgd1` bridge between nodes 1 and
///   2, `C2 + Cgd1 + Cgs2 + Cgd2` on node 2 and `C3` on node 3.
/// * `NodeTotals` uses the node totals `CN1 = C1 + Cin + Cgs1 + Cds1`,
///   `CN2 = C2 + Cds1 - Cgs2`, `CN3 = C3 + Cds2 + Cout` with a `Cds1` bridge
///   between nodes 1 and 2. This is the reading every derived coefficient is
///   consistent with, hence the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixSource {
    ElementSums,
    #[default]
    NodeTotals,
}

impl MatrixSource {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixSource::ElementSums => "element_sums",
            MatrixSource::NodeTotals => "node_totals",
        }
    }
}

impl std::str::FromStr for MatrixSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "element_sums" => Ok(MatrixSource::ElementSums),
            "node_totals" => Ok(MatrixSource::NodeTotals),
            other => Err(format!(
                "unknown matrix source `{other}` (expected element_sums or node_totals)"
            )),
        }
    }
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every lumped element value and transistor small-signal parameter, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitParams {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_in: f64,
    pub c_out: f64,
    pub cgs1: f64,
    pub cgd1: f64,
    pub cds1: f64,
    pub cgs2: f64,
    pub cgd2: f64,
    pub cds2: f64,
    pub gm1: f64,
    pub gm2: f64,
    /// Drive amplitude, volts.
    pub v_in: f64,
    /// Drive frequency, hertz.
    pub f_drive: f64,
    /// Bath temperature, kelvin.
    pub t_bath: f64,
    /// Mode-environment decay rates (rad/s). `None` falls back to `omega / Q`.
    pub kappa: [Option<f64>; 3],
}

impl CircuitParams {
    /// Three identical, uncoupled LC resonators with no parasitics and no drive.
    pub fn uncoupled(l: f64, c: f64) -> Self {
        CircuitParams {
            l1: l,
            l2: l,
            l3: l,
            c1: c,
            c2: c,
            c3: c,
            c_in: 0.0,
            c_out: 0.0,
            cgs1: 0.0,
            cgd1: 0.0,
            cds1: 0.0,
            cgs2: 0.0,
            cgd2: 0.0,
            cds2: 0.0,
            gm1: 0.0,
            gm2: 0.0,
            v_in: 0.0,
            f_drive: 0.0,
            t_bath: 0.0,
            kappa: [None; 3],
        }
    }

    /// Check the field invariants.
    pub fn validate(&self) -> Result<()> {
        let strictly_positive = [
            ("L1", self.l1),
            ("L2", self.l2),
            ("L3", self.l3),
            ("C1", self.c1),
            ("C2", self.c2),
            ("C3", self.c3),
        ];
        for (name, v) in strictly_positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be strictly positive, got {v:e}")));
            }
        }
        // Cin = Cout = 0 is how an undriven, unloaded resonator is described.
        let non_negative = [
            ("Cin", self.c_in),
            ("Cout", self.c_out),
            ("Cgs1", self.cgs1),
            ("Cgd1", self.cgd1),
            ("Cds1", self.cds1),
            ("Cgs2", self.cgs2),
            ("Cgd2", self.cgd2),
            ("Cds2", self.cds2),
            ("gm1", self.gm1),
            ("gm2", self.gm2),
            ("T_bath", self.t_bath),
            ("f_drive", self.f_drive),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be non-negative, got {v:e}")));
            }
        }
        if !self.v_in.is_finite() {
            return Err(invalid("Vin", "must be finite"));
        }
        for (i, k) in self.kappa.iter().enumerate() {
            if let Some(k) = k {
                if !(k.is_finite() && *k >= 0.0) {
                    return Err(invalid(
                        &format!("kappa{}", i + 1),
                        format!("must be non-negative, got {k:e}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Node totals of the Appendix-1 reading.
    pub fn node_totals(&self) -> [f64; 3] {
        [
            self.c1 + self.c_in + self.cgs1 + self.cds1,
            self.c2 + self.cds1 - self.cgs2,
            self.c3 + self.cds2 + self.c_out,
        ]
    }

    /// Multiply every capacitance by `s`.
    pub fn scale_capacitances(&self, s: f64) -> Self {
        let mut p = self.clone();
        for c in [
            &mut p.c1,
            &mut p.c2,
            &mut p.c3,
            &mut p.c_in,
            &mut p.c_out,
            &mut p.cgs1,
            &mut p.cgd1,
            &mut p.cds1,
            &mut p.cgs2,
            &mut p.cgd2,
            &mut p.cds2,
        ] {
            *c *= s;
        }
        p
    }
}

/// Capacitance (kinetic-energy) matrix and its inverse. The inverse entries
/// are the `C11..C33` used throughout the derived-coefficient ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitanceMatrix {
    pub source: MatrixSource,
    /// Farads.
    pub m: Matrix3<f64>,
    /// Inverse farads.
    pub inv: Matrix3<f64>,
}

impl CapacitanceMatrix {
    /// `C_ij` with 1-based indices, matching the ledger's naming.
    #[inline]
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.inv[(i - 1, j - 1)]
    }

    /// Largest absolute entry of `M * Minv - I`.
    pub fn inversion_residual(&self) -> f64 {
        (self.m * self.inv - Matrix3::identity()).amax()
    }
}

pub fn build_capacitance_matrix(
    p: &CircuitParams,
    source: MatrixSource,
) -> Result<CapacitanceMatrix> {
    p.validate()?;
    let m = match source {
        MatrixSource::ElementSums => {
            let d1 = p.c_in + p.c1 + p.cgs1 + p.cgd1;
            let d2 = p.c2 + p.cgd1 + p.cgs2 + p.cgd2;
            Matrix3::new(d1, -p.cgd1, 0.0, -p.cgd1, d2, 0.0, 0.0, 0.0, p.c3)
        }
        MatrixSource::NodeTotals => {
            let [n1, n2, n3] = p.node_totals();
            Matrix3::new(n1, -p.cds1, 0.0, -p.cds1, n2, 0.0, 0.0, 0.0, n3)
        }
    };
    check_positive_definite(&m)?;
    let inv = invert_symmetric3(&m);
    Ok(CapacitanceMatrix { source, m, inv })
}

/// Sylvester's criterion on the leading principal minors.
fn check_positive_definite(m: &Matrix3<f64>) -> Result<()> {
    let minors = [
        m[(0, 0)],
        m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        m.determinant(),
    ];
    for (k, &v) in minors.iter().enumerate() {
        if !(v > 0.0) {
            return Err(QsimError::NotPositiveDefinite { minor: k + 1, value: v });
        }
    }
    Ok(())
}

/// Closed-form adjugate inverse of a 3x3 matrix. The caller guarantees a
/// nonzero determinant.
fn invert_symmetric3(m: &Matrix3<f64>) -> Matrix3<f64> {
    let a = |i: usize, j: usize| m[(i, j)];
    let cof = Matrix3::new(
        a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1),
        -(a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)),
        a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0),
        -(a(0, 1) * a(2, 2) - a(0, 2) * a(2, 1)),
        a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0),
        -(a(0, 0) * a(2, 1) - a(0, 1) * a(2, 0)),
        a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1),
        -(a(0, 0) * a(1, 2) - a(0, 2) * a(1, 0)),
        a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
    );
    let det = a(0, 0) * cof[(0, 0)] + a(0, 1) * cof[(0, 1)] + a(0, 2) * cof[(0, 2)];
    let mut inv = cof.transpose() / det;
    // symmetric input: make the output exactly symmetric
    for i in 0..3 {
        for j in (i + 1)..3 {
            let s = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = s;
            inv[(j, i)] = s;
        }
    }
    inv
}

/// The derived-coefficient ledger. Quantities that vanish in the decoupled
/// limit are stored as reciprocals (`*_inv`) so that limit is an exact zero
/// rather than an infinite capacitance or inductance.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams {
    pub cn1: f64,
    pub cn2: f64,
    pub cn3: f64,
    /// `1/Cq1`, `1/Cq2`, `1/Cq3` (1/F).
    pub cq1_inv: f64,
    pub cq2_inv: f64,
    pub cq3_inv: f64,
    /// `1/Cq1q2`, `1/Cq1q3`, `1/Cq2q3` (1/F).
    pub cq1q2_inv: f64,
    pub cq1q3_inv: f64,
    pub cq2q3_inv: f64,
    /// `1/Lphi2`, `1/Lphi3` (1/H).
    pub lphi2_inv: f64,
    pub lphi3_inv: f64,
    pub g12: f64,
    pub g22: f64,
    pub g32: f64,
    pub g13: f64,
    pub g23: f64,
    pub g33: f64,
    /// Effective mode capacitances `CQ1..CQ3` (F).
    pub cq1: f64,
    pub cq2: f64,
    pub cq3: f64,
    /// `1/CQ12`, `1/CQ13`, `1/CQ23` (1/F).
    pub cq12_inv: f64,
    pub cq13_inv: f64,
    pub cq23_inv: f64,
    pub big_g12: f64,
    pub big_g13: f64,
    pub big_g22: f64,
    pub big_g23: f64,
    pub big_g32: f64,
    pub big_g33: f64,
    /// Effective inductances of modes 2 and 3 (H).
    pub l2_eff: f64,
    pub l3p: f64,
    /// Mode impedances (ohm).
    pub z: [f64; 3],
    /// Dressed mode angular frequencies (rad/s).
    pub omega: [f64; 3],
}

/// Substitutions made where the closed forms leave a symbol undefined.
/// Echoed into every output that depends on them.
pub const SUBSTITUTIONS: &[&str] = &[
    "L11 := L1 in Z11 and w11",
    "1/(2 L2_eff) := 1/(2 L2) - gm1 (C11 gm1 - C12 gm2) - 1/Lphi2",
    "G32 := -gm2 C22 + g23",
];

impl DerivedParams {
    /// `(name, value)` pairs in ledger order, for dumps.
    pub fn fields(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("CN1", self.cn1),
            ("CN2", self.cn2),
            ("CN3", self.cn3),
            ("inv_Cq1", self.cq1_inv),
            ("inv_Cq2", self.cq2_inv),
            ("inv_Cq3", self.cq3_inv),
            ("inv_Cq1q2", self.cq1q2_inv),
            ("inv_Cq1q3", self.cq1q3_inv),
            ("inv_Cq2q3", self.cq2q3_inv),
            ("inv_Lphi2", self.lphi2_inv),
            ("inv_Lphi3", self.lphi3_inv),
            ("g12", self.g12),
            ("g22", self.g22),
            ("g32", self.g32),
            ("g13", self.g13),
            ("g23", self.g23),
            ("g33", self.g33),
            ("CQ1", self.cq1),
            ("CQ2", self.cq2),
            ("CQ3", self.cq3),
            ("inv_CQ12", self.cq12_inv),
            ("inv_CQ13", self.cq13_inv),
            ("inv_CQ23", self.cq23_inv),
            ("G12", self.big_g12),
            ("G13", self.big_g13),
            ("G22", self.big_g22),
            ("G23", self.big_g23),
            ("G32", self.big_g32),
            ("G33", self.big_g33),
            ("L2_eff", self.l2_eff),
            ("L3p", self.l3p),
            ("Z11", self.z[0]),
            ("Z22", self.z[1]),
            ("Z33", self.z[2]),
            ("w11", self.omega[0]),
            ("w22", self.omega[1]),
            ("w33", self.omega[2]),
        ]
    }
}

fn checked_sqrt(aggregate: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value.sqrt())
    } else {
        Err(QsimError::NegativeRadicand {
            aggregate: aggregate.to_string(),
            value,
        })
    }
}

/// Evaluate the full coefficient ledger, term by term as written.
pub fn derive_params(p: &CircuitParams, cm: &CapacitanceMatrix) -> Result<DerivedParams> {
    let c = |i, j| cm.c(i, j);
    let (gm1, gm2, cds1) = (p.gm1, p.gm2, p.cds1);
    let [cn1, cn2, cn3] = p.node_totals();

    let cq1_inv =
        (cn1 * c(1, 1).powi(2) + c(2, 1).powi(2) * cn2 + c(3, 1).powi(2) * cn3
            - 0.5 * c(1, 1) * c(1, 2) * cds1)
            / 2.0;
    let cq2_inv =
        (cn1 * c(1, 2).powi(2) + c(2, 2).powi(2) * cn2 + c(3, 2).powi(2) * cn3
            - 0.5 * c(2, 2) * c(1, 2) * cds1)
            / 2.0;
    let cq3_inv =
        (cn1 * c(1, 3).powi(2) + c(2, 3).powi(2) * cn2 + c(3, 3).powi(2) * cn3
            - 0.5 * c(3, 3) * c(1, 3) * cds1)
            / 2.0;

    let cq1q2_inv = cn1 * c(1, 1) * c(1, 2) + cn2 * c(2, 1) * c(2, 2) + cn3 * c(3, 1) * c(3, 2)
        - cds1 * (c(1, 1) * c(2, 2) + c(1, 2) * c(2, 1));
    let cq1q3_inv = cn1 * c(1, 1) * c(1, 3) + cn2 * c(2, 1) * c(2, 3) + cn3 * c(3, 1) * c(3, 3)
        - cds1 * (c(1, 1) * c(2, 3) + c(1, 3) * c(2, 1));
    // the third product reads C22 C32, as written
    let cq2q3_inv = cn1 * c(1, 2) * c(1, 3) + cn2 * c(2, 2) * c(2, 3) + cn3 * c(2, 2) * c(3, 2)
        - cds1 * (c(1, 2) * c(2, 3) + c(1, 3) * c(2, 2));

    // u_k = C_k1 gm1 - C_k2 gm2
    let u1 = c(1, 1) * gm1 - c(1, 2) * gm2;
    let u2 = c(2, 1) * gm1 - c(2, 2) * gm2;
    let u3 = c(3, 1) * gm1 - c(3, 2) * gm2;

    let lphi2_inv =
        (cn1 * u1.powi(2) - cn2 * u2.powi(2) - cn3 * u3.powi(2) - cds1 * u1 * u2) / 2.0;
    let lphi3_inv = (cn1 * (c(1, 2) * gm1).powi(2)
        + cn2 * (c(2, 2) * gm2).powi(2)
        + cn3 * (c(3, 2) * gm2).powi(2)
        - cds1 * (c(2, 1) * c(2, 2) * gm2.powi(2)))
        / 2.0;

    let g12 = cn1 * c(1, 1) * u1 + cn2 * c(2, 1) * u2 + cn3 * c(3, 1) * u3
        - cds1 * (c(1, 1) * u2 + c(2, 1) * u1);
    let g22 = cn1 * c(1, 2) * u1 + cn2 * c(2, 2) * u2 + cn3 * c(3, 2) * u3
        - cds1 * (c(1, 2) * u2 + c(2, 2) * u1);
    let g32 = cn1 * c(1, 3) * u1 + cn2 * c(2, 3) * u2 + cn3 * c(3, 3) * u3
        - cds1 * (c(1, 3) * u2 + c(2, 3) * u1);
    let g13 = cn1 * c(1, 1) * c(1, 2) * gm2 + cn2 * c(2, 1) * c(2, 2) * gm2
        + cn3 * c(3, 1) * c(3, 2) * gm2
        - cds1 * (c(1, 1) * c(2, 2) * gm2 + c(1, 2) * c(2, 1) * gm2);
    let g23 = cn1 * c(1, 1) * c(1, 2) * gm2 + cn2 * c(2, 1) * c(2, 2) * gm2
        + cn3 * c(3, 1) * c(3, 2) * gm2
        - cds1 * (c(1, 2) * c(2, 2) * gm2 + c(1, 2) * c(2, 2) * gm2);
    let g33 = cn1 * c(1, 3) * c(1, 2) * gm2 + cn2 * c(2, 3) * c(2, 2) * gm2
        + cn3 * c(3, 3) * c(3, 2) * gm2
        - cds1 * (c(1, 3) * c(2, 2) * gm2 + c(1, 2) * c(2, 3) * gm2);

    // 1/(2 CQi) = Cii - 1/Cqi
    let half_inv_cq = [c(1, 1) - cq1_inv, c(2, 2) - cq2_inv, c(3, 3) - cq3_inv];
    let names_cq = ["CQ1", "CQ2", "CQ3"];
    let mut cq = [0.0; 3];
    for k in 0..3 {
        if !(half_inv_cq[k].is_finite() && half_inv_cq[k] > 0.0) {
            return Err(QsimError::NegativeRadicand {
                aggregate: names_cq[k].to_string(),
                value: half_inv_cq[k],
            });
        }
        cq[k] = 1.0 / (2.0 * half_inv_cq[k]);
    }

    let cq12_inv = c(2, 1) + c(1, 2) - cq1q2_inv;
    let cq13_inv = c(3, 1) + c(1, 3) - cq1q3_inv;
    let cq23_inv = c(3, 2) + c(2, 3) - cq2q3_inv;

    let big_g12 = (-gm1 * c(1, 1) - gm2 * c(1, 2)) + g12;
    let big_g13 = -gm2 * c(1, 2) + g13;
    let big_g23 = -gm1 * c(1, 3) - (gm1 * c(3, 1) - gm2 * c(3, 2)) + g32;
    let big_g22 = -gm1 * c(1, 2) - (gm1 * c(2, 1) - gm2 * c(2, 2)) + g22;
    let big_g33 = -gm2 * c(3, 2) + g33;
    let big_g32 = -gm2 * c(2, 2) + g23;

    let half_inv_l2 = 1.0 / (2.0 * p.l2) - gm1 * u1 - lphi2_inv;
    let half_inv_l3 = 1.0 / (2.0 * p.l3) - lphi3_inv;
    if !(half_inv_l2.is_finite() && half_inv_l2 > 0.0) {
        return Err(QsimError::NegativeRadicand {
            aggregate: "L2_eff".into(),
            value: half_inv_l2,
        });
    }
    if !(half_inv_l3.is_finite() && half_inv_l3 > 0.0) {
        return Err(QsimError::NegativeRadicand {
            aggregate: "L3p".into(),
            value: half_inv_l3,
        });
    }
    let l2_eff = 1.0 / (2.0 * half_inv_l2);
    let l3p = 1.0 / (2.0 * half_inv_l3);

    let l_modes = [p.l1, l2_eff, l3p];
    let z = [
        checked_sqrt("Z11", l_modes[0] / cq[0])?,
        checked_sqrt("Z22", l_modes[1] / cq[1])?,
        checked_sqrt("Z33", l_modes[2] / cq[2])?,
    ];
    let omega = [
        1.0 / checked_sqrt("w11", l_modes[0] * cq[0])?,
        checked_sqrt("w22", 1.0 / (l_modes[1] * cq[1]))?,
        checked_sqrt("w33", 1.0 / (l_modes[2] * cq[2]))?,
    ];

    Ok(DerivedParams {
        cn1,
        cn2,
        cn3,
        cq1_inv,
        cq2_inv,
        cq3_inv,
        cq1q2_inv,
        cq1q3_inv,
        cq2q3_inv,
        lphi2_inv,
        lphi3_inv,
        g12,
        g22,
        g32,
        g13,
        g23,
        g33,
        cq1: cq[0],
        cq2: cq[1],
        cq3: cq[2],
        cq12_inv,
        cq13_inv,
        cq23_inv,
        big_g12,
        big_g13,
        big_g22,
        big_g23,
        big_g32,
        big_g33,
        l2_eff,
        l3p,
        z,
        omega,
    })
}
