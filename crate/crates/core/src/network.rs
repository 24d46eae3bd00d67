//! The two-stage reconfigurable matching network.
//!
//! ```text
//! port 1 ─ [CL section ×4] ─ h1 ─┬─ quadrature coupler ─┬─ out ─ port 2
//!                                │  ports 3, 4 loaded   │
//!                                └─ reflective loads ───┘
//! ```
//!
//! Control-line assignment:
//!
//! | bits  | element                                                        |
//! |-------|----------------------------------------------------------------|
//! | 0–3   | shunt varactor of CL sections 1–4 (`C_pa` for 1, `C_p` for 2–4) |
//! | 4–7   | series varactor `C_s` of sections 1–4                          |
//! | 8     | `C_phase1`, both reflective loads                              |
//! | 9     | `C_phase2`, both reflective loads                              |
//! | 10    | `C_2var`, both load-side coupler nodes                         |
//!
//! Bits 8–10 each drive two physical varactors, so the two reflective loads
//! always stay identical.

use serde::{Deserialize, Serialize};

use crate::netlist::{ElementKind, Netlist, NetlistBuilder};

pub const BIT_PHASE1: u8 = 8;
pub const BIT_PHASE2: u8 = 9;
pub const BIT_C2VAR: u8 = 10;

/// Bits of the first (Π) stage.
pub const PI_STAGE_BITS: [u8; 8] = [0, 1, 2, 3, 4, 5, 6, 7];
/// Bits of the phase stage.
pub const PHASE_STAGE_BITS: [u8; 3] = [BIT_PHASE1, BIT_PHASE2, BIT_C2VAR];
pub const ALL_BITS: [u8; 11] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Capacitance with a released (`low`) and an actuated (`high`) value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoValue {
    pub low: f64,
    pub high: f64,
}

impl TwoValue {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn select(self, high: bool) -> f64 {
        if high {
            self.high
        } else {
            self.low
        }
    }
}

/// Component values of the network. `Default` gives the design values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentTable {
    pub c_pa: TwoValue,
    pub c_p: TwoValue,
    pub c_s: TwoValue,
    pub c_1: f64,
    pub c_2: f64,
    pub c_2var: TwoValue,
    pub c_decoup: f64,
    pub c_phase1: TwoValue,
    pub c_phase2: TwoValue,
    pub l_s: f64,
    pub l_h: f64,
    pub l_res: f64,
    pub f_design: f64,
    pub z0: f64,
}

impl Default for ComponentTable {
    fn default() -> Self {
        Self {
            c_pa: TwoValue::new(4.5e-12, 6.5e-12),
            c_p: TwoValue::new(4e-12, 7e-12),
            c_s: TwoValue::new(4e-12, 7e-12),
            c_1: 5.14e-12,
            c_2: 2.12e-12,
            c_2var: TwoValue::new(2.12e-12, 5.5e-12),
            c_decoup: 6e-12,
            c_phase1: TwoValue::new(0.57e-12, 3.14e-12),
            c_phase2: TwoValue::new(2e-12, 7.14e-12),
            l_s: 16e-9,
            l_h: 8.5e-9,
            l_res: 16e-9,
            f_design: 620e6,
            z0: 50.0,
        }
    }
}

impl ComponentTable {
    /// Positivity and ordering of all values.
    pub fn is_valid(&self) -> bool {
        let pairs = [
            self.c_pa,
            self.c_p,
            self.c_s,
            self.c_2var,
            self.c_phase1,
            self.c_phase2,
        ];
        let singles = [
            self.c_1,
            self.c_2,
            self.c_decoup,
            self.l_s,
            self.l_h,
            self.l_res,
            self.f_design,
            self.z0,
        ];
        pairs.iter().all(|p| p.low > 0.0 && p.high > p.low)
            && singles.iter().all(|&v| v > 0.0 && v.is_finite())
    }
}

/// How the quadrature coupler of the phase stage is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CouplerMode {
    /// Ideal hybrid element with the design scattering matrix.
    #[default]
    Ideal,
    /// Lumped L–C ring built from `L_h`, `C_1`, `C_2` and `C_2var`.
    Lumped,
}

impl std::str::FromStr for CouplerMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ideal" => Ok(Self::Ideal),
            "lumped" => Ok(Self::Lumped),
            other => Err(format!(
                "unknown coupler mode `{other}` (expected ideal|lumped)"
            )),
        }
    }
}

impl std::fmt::Display for CouplerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ideal => "ideal",
            Self::Lumped => "lumped",
        })
    }
}

fn switched(tv: TwoValue, bit: u8) -> ElementKind {
    ElementKind::SwitchedCapacitor {
        c_low: tv.low,
        c_high: tv.high,
        bit,
        q: None,
        ron: None,
    }
}

fn fixed_c(c: f64) -> ElementKind {
    ElementKind::Capacitor {
        c,
        q: None,
        ron: None,
    }
}

fn ind(l: f64) -> ElementKind {
    ElementKind::Inductor { l, q: None }
}

/// Appends the four CL sections between `input` and `output`.
///
/// Each section is a two-valued shunt varactor at its input node followed
/// by the series branch `L_s` + two-valued `C_s`.
pub fn build_pi_stage(b: &mut NetlistBuilder, table: &ComponentTable, input: &str, output: &str) {
    for k in 0..4u8 {
        let from = if k == 0 {
            input.to_string()
        } else {
            format!("n{k}")
        };
        let to = if k == 3 {
            output.to_string()
        } else {
            format!("n{}", k + 1)
        };
        let mid = format!("s{}", k + 1);
        let shunt = if k == 0 { table.c_pa } else { table.c_p };
        b.add(format!("CSH{}", k + 1), &[&from, "0"], switched(shunt, k));
        b.add(format!("LS{}", k + 1), &[&from, &mid], ind(table.l_s));
        b.add(
            format!("CS{}", k + 1),
            &[&mid, &to],
            switched(table.c_s, 4 + k),
        );
    }
}

/// Appends one reflective load at `node`: series `L_res` into two
/// parallel shunt phase varactors.
pub fn build_reflective_load(
    b: &mut NetlistBuilder,
    table: &ComponentTable,
    node: &str,
    tag: &str,
) {
    let inner = format!("r{tag}");
    b.add(format!("LR{tag}"), &[node, &inner], ind(table.l_res));
    b.add(
        format!("CPH1{tag}"),
        &[&inner, "0"],
        switched(table.c_phase1, BIT_PHASE1),
    );
    b.add(
        format!("CPH2{tag}"),
        &[&inner, "0"],
        switched(table.c_phase2, BIT_PHASE2),
    );
}

/// Appends the coupler and its two reflective loads between `input` and
/// `output`.
///
/// Ideal mode: hybrid element (ports `input`, `output`, `h3`, `h4`) with a
/// load on each of `h3`, `h4`. The hybrid stands for the balanced coupler
/// with `C_2var` released, so actuating bit 10 adds only the excess
/// `C_2var.high − C_2var.low` at `h3` and `h4`. `C_decoup` is treated as
/// transparent.
///
/// Lumped mode: ring `input`–`k2`–`k3`–`output` with series `L_h` on
/// `input–k2` and `k3–output`, series `C_1` on `input–output` and `k2–k3`,
/// shunt `C_2` on `input` and `output` and shunt two-valued `C_2var` on `k2`
/// and `k3`. Each load hangs off `k2`/`k3` through a series `C_decoup`.
pub fn build_phase_stage(
    b: &mut NetlistBuilder,
    table: &ComponentTable,
    mode: CouplerMode,
    input: &str,
    output: &str,
) {
    match mode {
        CouplerMode::Ideal => {
            b.add(
                "H1",
                &[input, output, "h3", "h4"],
                ElementKind::IdealHybrid { z0: table.z0 },
            );
            let excess = TwoValue::new(0.0, table.c_2var.high - table.c_2var.low);
            for (node, tag) in [("h3", "A"), ("h4", "B")] {
                b.add(
                    format!("C2V{tag}"),
                    &[node, "0"],
                    switched(excess, BIT_C2VAR),
                );
                build_reflective_load(b, table, node, tag);
            }
        }
        CouplerMode::Lumped => {
            b.add("LH1", &[input, "k2"], ind(table.l_h));
            b.add("LH2", &["k3", output], ind(table.l_h));
            b.add("C1A", &[input, output], fixed_c(table.c_1));
            b.add("C1B", &["k2", "k3"], fixed_c(table.c_1));
            b.add("C2A", &[input, "0"], fixed_c(table.c_2));
            b.add("C2B", &[output, "0"], fixed_c(table.c_2));
            for (node, tag) in [("k2", "A"), ("k3", "B")] {
                let load = format!("d{tag}");
                b.add(
                    format!("C2V{tag}"),
                    &[node, "0"],
                    switched(table.c_2var, BIT_C2VAR),
                );
                b.add(format!("CD{tag}"), &[node, &load], fixed_c(table.c_decoup));
                build_reflective_load(b, table, &load, tag);
            }
        }
    }
}

fn port(b: &mut NetlistBuilder, label: &str, node: &str, z0: f64, num: u32) {
    b.add(label, &[node, "0"], ElementKind::Port { z0, num });
}

/// Complete network: port 1 → Π stage → phase stage → port 2.
///
/// Switched elements carry their control bit, so one netlist covers all
/// 2048 configuration words.
pub fn build_full_network(table: &ComponentTable, mode: CouplerMode) -> Netlist {
    let mut b = NetlistBuilder::new();
    port(&mut b, "P1", "in", table.z0, 1);
    build_pi_stage(&mut b, table, "in", "h1");
    build_phase_stage(&mut b, table, mode, "h1", "out");
    port(&mut b, "P2", "out", table.z0, 2);
    b.build()
}

/// The Π stage alone as a two-port.
pub fn pi_stage_network(table: &ComponentTable) -> Netlist {
    let mut b = NetlistBuilder::new();
    port(&mut b, "P1", "in", table.z0, 1);
    build_pi_stage(&mut b, table, "in", "h1");
    port(&mut b, "P2", "h1", table.z0, 2);
    b.build()
}

/// The phase stage alone as a two-port.
pub fn phase_stage_network(table: &ComponentTable, mode: CouplerMode) -> Netlist {
    let mut b = NetlistBuilder::new();
    port(&mut b, "P1", "h1", table.z0, 1);
    build_phase_stage(&mut b, table, mode, "h1", "out");
    port(&mut b, "P2", "out", table.z0, 2);
    b.build()
}

/// Lumped coupler ring alone, as a four-port in hybrid port order
/// (input, output, through-side load node, coupled-side load node).
/// Used to check the reconstruction against an ideal quadrature hybrid.
pub fn lumped_coupler_network(table: &ComponentTable) -> Netlist {
    let mut b = NetlistBuilder::new();
    b.add("LH1", &["h1", "k2"], ind(table.l_h));
    b.add("LH2", &["k3", "out"], ind(table.l_h));
    b.add("C1A", &["h1", "out"], fixed_c(table.c_1));
    b.add("C1B", &["k2", "k3"], fixed_c(table.c_1));
    b.add("C2A", &["h1", "0"], fixed_c(table.c_2));
    b.add("C2B", &["out", "0"], fixed_c(table.c_2));
    b.add("C2VA", &["k2", "0"], switched(table.c_2var, BIT_C2VAR));
    b.add("C2VB", &["k3", "0"], switched(table.c_2var, BIT_C2VAR));
    // the diagonal node leads the inductive neighbour by 90°, matching
    // the through/coupled ordering of the ideal hybrid
    port(&mut b, "P1", "h1", table.z0, 1);
    port(&mut b, "P2", "out", table.z0, 2);
    port(&mut b, "P3", "k3", table.z0, 3);
    port(&mut b, "P4", "k2", table.z0, 4);
    b.build()
}
