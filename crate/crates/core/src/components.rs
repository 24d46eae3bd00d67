//! Electrical models of the element kinds at a single frequency.
//!
//! Losses use a series-resistance model: an inductor carries
//! `R = ω_ref·L / Q_L`, a capacitor `ESR = 1 / (ω_ref·C·Q_C)`, both fixed at
//! the reference frequency. A two-valued varactor adds the relay contact
//! resistance only in its actuated (high) state, where the contact is closed.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::netlist::{ConfigurationWord, Element, ElementKind, Netlist};
use crate::network::ComponentTable;
use crate::numeric::{c, ComplexMatrix};

/// Resistance standing in for a closed contact with no loss.
pub const SHORT_RESISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub q_l: f64,
    pub q_c: f64,
    /// Closed-contact resistance, Ω.
    pub r_on: f64,
    /// Open-relay coupling capacitance, F.
    pub c_off: f64,
    /// Frequency at which the Q values are specified, Hz.
    pub f_ref: f64,
    /// Zeroes every parasitic when set.
    pub lossless: bool,
}

impl Default for LossModel {
    fn default() -> Self {
        Self {
            q_l: 30.0,
            q_c: 100.0,
            r_on: 1.5,
            c_off: 50e-15,
            f_ref: 620e6,
            lossless: false,
        }
    }
}

impl LossModel {
    pub fn lossless() -> Self {
        Self {
            lossless: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let ok = self.q_l > 0.0
            && self.q_c > 0.0
            && self.r_on >= 0.0
            && self.c_off >= 0.0
            && self.f_ref > 0.0
            && [self.q_l, self.q_c, self.r_on, self.c_off, self.f_ref]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidQuery(format!("invalid loss model {self:?}")))
        }
    }

    fn omega_ref(&self) -> f64 {
        2.0 * PI * self.f_ref
    }

    /// Series loss resistance of an inductor.
    pub fn inductor_resistance(&self, l: f64, q: Option<f64>) -> f64 {
        if self.lossless {
            0.0
        } else {
            self.omega_ref() * l / q.unwrap_or(self.q_l)
        }
    }

    /// `ESR·C`, which stays finite as `C → 0`.
    fn esr_times_c(&self, q: Option<f64>) -> f64 {
        if self.lossless {
            0.0
        } else {
            1.0 / (self.omega_ref() * q.unwrap_or(self.q_c))
        }
    }

    pub fn capacitor_esr(&self, cap: f64, q: Option<f64>) -> f64 {
        self.esr_times_c(q) / cap
    }

    pub fn contact_resistance(&self, ron: Option<f64>) -> f64 {
        if self.lossless {
            0.0
        } else {
            ron.unwrap_or(self.r_on)
        }
    }

    pub fn off_capacitance(&self, coff: Option<f64>) -> f64 {
        if self.lossless {
            0.0
        } else {
            coff.unwrap_or(self.c_off)
        }
    }
}

pub fn omega(f: f64) -> f64 {
    2.0 * PI * f
}

/// Admittance of a capacitor `cap` in series with `r_series` plus its ESR.
fn capacitor_admittance(w: f64, cap: f64, r_series: f64, esr_c: f64) -> Complex64 {
    let jwc = c(0.0, w * cap);
    jwc / (c(1.0, 0.0) + jwc * r_series + c(0.0, w * esr_c))
}

fn capacitor_impedance(w: f64, cap: f64, r_series: f64, esr_c: f64) -> Option<Complex64> {
    (cap > 0.0).then(|| c(r_series + esr_c / cap, -1.0 / (w * cap)))
}

/// Branch impedance of a two-terminal element. `None` means an open
/// circuit, and is also returned for ports and hybrids, which have no
/// single branch impedance.
pub fn element_impedance(
    e: &Element,
    f: f64,
    word: ConfigurationWord,
    loss: &LossModel,
) -> Option<Complex64> {
    let w = omega(f);
    match e.kind {
        ElementKind::Resistor { r } => Some(c(r, 0.0)),
        ElementKind::Inductor { l, q } => Some(c(loss.inductor_resistance(l, q), w * l)),
        ElementKind::Capacitor { c: cap, q, ron } => capacitor_impedance(
            w,
            cap,
            ron.map_or(0.0, |r| loss.contact_resistance(Some(r))),
            loss.esr_times_c(q),
        ),
        ElementKind::SwitchedCapacitor {
            c_low,
            c_high,
            bit,
            q,
            ron,
        } => {
            let high = word.bit(bit);
            let cap = if high { c_high } else { c_low };
            let r = if high {
                loss.contact_resistance(ron)
            } else {
                0.0
            };
            capacitor_impedance(w, cap, r, loss.esr_times_c(q))
        }
        ElementKind::Relay { bit, ron, coff } => {
            if word.bit(bit) {
                Some(c(loss.contact_resistance(ron).max(SHORT_RESISTANCE), 0.0))
            } else {
                let coff = loss.off_capacitance(coff);
                (coff > 0.0).then(|| c(0.0, -1.0 / (w * coff)))
            }
        }
        ElementKind::IdealHybrid { .. } | ElementKind::Port { .. } => None,
    }
}

/// Branch admittance used for nodal stamps; zero for an open branch.
/// `None` for ports and hybrids.
pub fn element_admittance(
    e: &Element,
    f: f64,
    word: ConfigurationWord,
    loss: &LossModel,
) -> Option<Complex64> {
    let w = omega(f);
    match e.kind {
        ElementKind::Capacitor { c: cap, q, ron } => Some(capacitor_admittance(
            w,
            cap,
            ron.map_or(0.0, |r| loss.contact_resistance(Some(r))),
            loss.esr_times_c(q),
        )),
        ElementKind::SwitchedCapacitor {
            c_low,
            c_high,
            bit,
            q,
            ron,
        } => {
            let high = word.bit(bit);
            let cap = if high { c_high } else { c_low };
            let r = if high {
                loss.contact_resistance(ron)
            } else {
                0.0
            };
            Some(capacitor_admittance(w, cap, r, loss.esr_times_c(q)))
        }
        ElementKind::IdealHybrid { .. } | ElementKind::Port { .. } => None,
        _ => Some(match element_impedance(e, f, word, loss) {
            Some(z) => z.inv(),
            None => c(0.0, 0.0),
        }),
    }
}

/// Scattering matrix of the ideal 3-dB quadrature hybrid.
///
/// Port 1 is the input, port 2 the output, ports 3 and 4 carry the
/// reflective loads. Through paths (1→3, 2→4) lag by 90°, coupled paths
/// (1→4, 2→3) by 180°, and 1↔2, 3↔4 are isolated. The matrix is symmetric
/// and unitary and does not depend on `z0`, which only sets the reference.
pub fn ideal_hybrid_smatrix() -> ComplexMatrix {
    let t = c(0.0, -FRAC_1_SQRT_2);
    let k = c(-FRAC_1_SQRT_2, 0.0);
    let o = c(0.0, 0.0);
    ComplexMatrix::from_rows(&[
        vec![o, o, t, k],
        vec![o, o, k, t],
        vec![t, k, o, o],
        vec![k, t, o, o],
    ])
    .expect("4x4")
}

/// Two-port response of the ideal hybrid with identical loads of reflection
/// `gamma_load` on ports 3 and 4.
///
/// The reflected waves cancel at port 1 and add at port 2, so
/// `S11 = S22 = 0` and `S21 = S12 = j·Γ`: a lossless load gives full
/// transmission with a phase that follows the load reflection phase.
pub fn rtps_response(gamma_load: Complex64) -> ComplexMatrix {
    let t = c(0.0, 1.0) * gamma_load;
    let o = c(0.0, 0.0);
    ComplexMatrix::from_rows(&[vec![o, t], vec![t, o]]).expect("2x2")
}

/// Impedance of one reflective load: `L_res` in series with the two phase
/// varactors, which sit in parallel to ground.
pub fn reflective_load_impedance(
    word: ConfigurationWord,
    f: f64,
    table: &ComponentTable,
    loss: &LossModel,
) -> Complex64 {
    let w = omega(f);
    let varactor = |tv: crate::network::TwoValue, bit: u8| {
        let high = word.bit(bit);
        let cap = tv.select(high);
        let r = if high {
            loss.contact_resistance(None)
        } else {
            0.0
        };
        capacitor_admittance(w, cap, r, loss.esr_times_c(None))
    };
    let y_shunt = varactor(table.c_phase1, crate::network::BIT_PHASE1)
        + varactor(table.c_phase2, crate::network::BIT_PHASE2);
    c(loss.inductor_resistance(table.l_res, None), w * table.l_res) + y_shunt.inv()
}

/// Replaces every switched element by its fixed equivalent for `word`.
///
/// The loss model's contact resistance is baked into actuated varactors, so
/// the result solves identically to the switched netlist under the same
/// loss model. Open branches (zero capacitance, open relays without
/// coupling capacitance) are dropped. Relays in the open state become plain
/// capacitors and so pick up capacitor ESR under a lossy model.
pub fn resolve_switches(netlist: &Netlist, word: ConfigurationWord, loss: &LossModel) -> Netlist {
    let mut elements = Vec::with_capacity(netlist.elements().len());
    for e in netlist.elements() {
        let kind = match e.kind {
            ElementKind::SwitchedCapacitor {
                c_low,
                c_high,
                bit,
                q,
                ron,
            } => {
                let high = word.bit(bit);
                let cap = if high { c_high } else { c_low };
                if cap == 0.0 {
                    continue;
                }
                let r = if high {
                    loss.contact_resistance(ron)
                } else {
                    0.0
                };
                ElementKind::Capacitor {
                    c: cap,
                    q,
                    ron: (r > 0.0).then_some(r),
                }
            }
            ElementKind::Relay { bit, ron, coff } => {
                if word.bit(bit) {
                    ElementKind::Resistor {
                        r: loss.contact_resistance(ron).max(SHORT_RESISTANCE),
                    }
                } else {
                    let coff = loss.off_capacitance(coff);
                    if coff == 0.0 {
                        continue;
                    }
                    ElementKind::Capacitor {
                        c: coff,
                        q: None,
                        ron: None,
                    }
                }
            }
            ref other => other.clone(),
        };
        elements.push(Element {
            label: e.label.clone(),
            nodes: e.nodes.clone(),
            kind,
        });
    }
    Netlist::new(netlist.node_names().to_vec(), elements)
}
