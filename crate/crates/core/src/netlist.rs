//! Circuit data model, the line-oriented netlist format, and topology checks.
//!
//! One element per line, `#` starts a comment:
//!
//! ```text
//! <label> <node>... <kind> key=value ...
//! ```
//!
//! | kind    | nodes | keys                                      |
//! |---------|-------|-------------------------------------------|
//! | `port`  | 2     | `z0=`, optional `num=`                    |
//! | `r`     | 2     | `r=`                                      |
//! | `ind`   | 2     | `l=`, optional `q=`                       |
//! | `cap`   | 2     | `c=` or `c=LOW/HIGH bit=K`, `q=`, `ron=`  |
//! | `relay` | 2     | `bit=`, optional `ron=`, `coff=`          |
//! | `hyb90` | 4     | `z0=`                                     |
//!
//! Values take the engineering suffixes `f p n u m k M G`. Ground is `0` or
//! `gnd`; other node names are numbered by first appearance.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of control lines of the matching network.
pub const MAX_BITS: u8 = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

pub const GROUND: NodeId = NodeId(0);

impl NodeId {
    pub fn is_ground(self) -> bool {
        self.0 == 0
    }
}

/// Switch state of all control lines; bit `i` set means line `i` is actuated.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ConfigurationWord(u16);

impl ConfigurationWord {
    /// Number of distinct words, `2^11`.
    pub const COUNT: u16 = 1 << MAX_BITS;
    pub const ZERO: Self = Self(0);

    pub fn new(value: u16) -> Result<Self, Error> {
        if value < Self::COUNT {
            Ok(Self(value))
        } else {
            Err(Error::InvalidQuery(format!(
                "configuration word {value} exceeds {}",
                Self::COUNT - 1
            )))
        }
    }

    pub const fn value(self) -> u16 {
        self.0
    }

    pub fn bit(self, index: u8) -> bool {
        (self.0 >> index) & 1 == 1
    }

    pub fn with_bit(self, index: u8, on: bool) -> Self {
        assert!(index < MAX_BITS);
        if on {
            Self(self.0 | (1 << index))
        } else {
            Self(self.0 & !(1 << index))
        }
    }

    pub fn flipped(self, index: u8) -> Self {
        assert!(index < MAX_BITS);
        Self(self.0 ^ (1 << index))
    }

    pub fn all() -> impl Iterator<Item = Self> {
        (0..Self::COUNT).map(Self)
    }
}

impl fmt::Display for ConfigurationWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Resistor {
        r: f64,
    },
    Inductor {
        l: f64,
        /// Overrides the loss model's inductor Q when set.
        q: Option<f64>,
    },
    Capacitor {
        c: f64,
        q: Option<f64>,
        /// Extra series contact resistance.
        ron: Option<f64>,
    },
    /// Two-valued varactor: `c_low` when its control bit is clear, `c_high`
    /// (through the closed contact) when set.
    SwitchedCapacitor {
        c_low: f64,
        c_high: f64,
        bit: u8,
        q: Option<f64>,
        ron: Option<f64>,
    },
    Relay {
        bit: u8,
        ron: Option<f64>,
        coff: Option<f64>,
    },
    /// Ideal 3-dB quadrature hybrid, nodes in hybrid port order 1..4.
    IdealHybrid {
        z0: f64,
    },
    Port {
        z0: f64,
        num: u32,
    },
}

impl ElementKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            ElementKind::Resistor { .. } => "r",
            ElementKind::Inductor { .. } => "ind",
            ElementKind::Capacitor { .. } | ElementKind::SwitchedCapacitor { .. } => "cap",
            ElementKind::Relay { .. } => "relay",
            ElementKind::IdealHybrid { .. } => "hyb90",
            ElementKind::Port { .. } => "port",
        }
    }

    fn node_count(keyword: &str) -> usize {
        if keyword == "hyb90" {
            4
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub label: String,
    pub nodes: Vec<NodeId>,
    pub kind: ElementKind,
}

impl Element {
    pub fn control_bit(&self) -> Option<u8> {
        match self.kind {
            ElementKind::SwitchedCapacitor { bit, .. } | ElementKind::Relay { bit, .. } => {
                Some(bit)
            }
            _ => None,
        }
    }

    pub fn port_number(&self) -> Option<u32> {
        match self.kind {
            ElementKind::Port { num, .. } => Some(num),
            _ => None,
        }
    }
}

/// A flat circuit: elements over numbered nodes, node 0 being ground.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    elements: Vec<Element>,
    node_names: Vec<String>,
    n_ports: usize,
    n_bits: usize,
}

impl Netlist {
    /// `node_names[0]` names ground.
    pub fn new(node_names: Vec<String>, elements: Vec<Element>) -> Self {
        let n_ports = elements
            .iter()
            .filter(|e| e.port_number().is_some())
            .count();
        let n_bits = elements
            .iter()
            .filter_map(Element::control_bit)
            .collect::<BTreeSet<_>>()
            .len();
        Self {
            elements,
            node_names,
            n_ports,
            n_bits,
        }
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.node_names[id.0]
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name).map(NodeId)
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn element(&self, label: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.label == label)
    }

    /// Port elements sorted by port number.
    pub fn ports(&self) -> Vec<&Element> {
        let mut ports: Vec<&Element> = self
            .elements
            .iter()
            .filter(|e| e.port_number().is_some())
            .collect();
        ports.sort_by_key(|e| e.port_number());
        ports
    }

    /// Common reference impedance of all ports.
    pub fn reference_impedance(&self) -> Result<f64, Error> {
        let mut z0 = None;
        for e in &self.elements {
            if let ElementKind::Port { z0: z, .. } = e.kind {
                match z0 {
                    None => z0 = Some(z),
                    Some(prev) if prev != z => return Err(Error::MixedReferenceImpedance),
                    _ => {}
                }
            }
        }
        z0.ok_or(Error::NoPorts)
    }

    /// Topology and bookkeeping checks. An empty list means the netlist is sound.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n_ports == 0 {
            out.push(Violation::NoPorts);
        }

        let mut seen = BTreeSet::new();
        for e in &self.elements {
            if let Some(num) = e.port_number() {
                if !seen.insert(num) {
                    out.push(Violation::DuplicatePort(num));
                }
            }
        }
        if !seen.is_empty()
            && (seen.iter().next() != Some(&1)
                || *seen.iter().last().unwrap() as usize != seen.len())
        {
            out.push(Violation::NonContiguousPorts);
        }

        for e in &self.elements {
            if let Some(bit) = e.control_bit() {
                if bit as usize >= self.n_bits {
                    out.push(Violation::BitOutOfRange {
                        label: e.label.clone(),
                        bit,
                        n_bits: self.n_bits,
                    });
                }
            }
        }

        // every element and every hybrid/port node is tied to ground
        let mut parent: Vec<usize> = (0..self.node_count()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut used = vec![false; self.node_count()];
        for e in &self.elements {
            for n in &e.nodes {
                used[n.0] = true;
            }
            let links: Vec<(usize, usize)> = match e.kind {
                ElementKind::IdealHybrid { .. } => e.nodes.iter().map(|n| (n.0, 0)).collect(),
                _ => vec![(e.nodes[0].0, e.nodes[1].0)],
            };
            for (a, b) in links {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
        let ground_root = find(&mut parent, 0);
        for (i, &u) in used.iter().enumerate().skip(1) {
            if u && find(&mut parent, i) != ground_root {
                out.push(Violation::FloatingNode(self.node_names[i].clone()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoPorts,
    DuplicatePort(u32),
    NonContiguousPorts,
    BitOutOfRange {
        label: String,
        bit: u8,
        n_bits: usize,
    },
    FloatingNode(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoPorts => write!(f, "no ports"),
            Violation::DuplicatePort(n) => write!(f, "duplicate port {n}"),
            Violation::NonContiguousPorts => write!(f, "port numbers not contiguous from 1"),
            Violation::BitOutOfRange { label, bit, n_bits } => {
                write!(f, "{label}: control bit {bit} >= n_bits {n_bits}")
            }
            Violation::FloatingNode(name) => write!(f, "floating node `{name}`"),
        }
    }
}

/// Incremental construction with named nodes.
#[derive(Debug, Clone)]
pub struct NetlistBuilder {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    elements: Vec<Element>,
}

impl Default for NetlistBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl NetlistBuilder {
    pub fn new() -> Self {
        let mut index = HashMap::new();
        index.insert("0".to_string(), GROUND);
        index.insert("gnd".to_string(), GROUND);
        Self {
            names: vec!["0".to_string()],
            index,
            elements: Vec::new(),
        }
    }

    pub fn node(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = NodeId(self.names.len());
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn add(
        &mut self,
        label: impl Into<String>,
        nodes: &[&str],
        kind: ElementKind,
    ) -> &mut Self {
        let nodes = nodes.iter().map(|n| self.node(n)).collect();
        self.elements.push(Element {
            label: label.into(),
            nodes,
            kind,
        });
        self
    }

    pub fn next_port_number(&self) -> u32 {
        self.elements
            .iter()
            .filter_map(Element::port_number)
            .max()
            .unwrap_or(0)
            + 1
    }

    pub fn build(self) -> Netlist {
        Netlist::new(self.names, self.elements)
    }
}

/// Parses a number with an optional engineering suffix (`4p`, `16n`, `6.2e8`).
pub fn parse_value(text: &str) -> Option<f64> {
    let text = text.trim();
    let last = text.chars().last()?;
    let exponent = match last {
        'f' => Some(-15),
        'p' => Some(-12),
        'n' => Some(-9),
        'u' => Some(-6),
        'm' => Some(-3),
        'k' => Some(3),
        'M' => Some(6),
        'G' => Some(9),
        _ => None,
    };
    let value = match exponent {
        None => text.parse::<f64>().ok()?,
        Some(exp) => {
            let mantissa = &text[..text.len() - 1];
            if mantissa.is_empty() || mantissa.contains(['e', 'E']) {
                mantissa.parse::<f64>().ok()? * 10f64.powi(exp)
            } else {
                // re-parse with a decimal exponent so the result is correctly rounded
                mantissa.parse::<f64>().ok()?;
                format!("{mantissa}e{exp}").parse::<f64>().ok()?
            }
        }
    };
    value.is_finite().then_some(value)
}

struct LineParser<'a> {
    line: usize,
    params: Vec<(&'a str, &'a str)>,
}

impl<'a> LineParser<'a> {
    fn take(&mut self, key: &str) -> Option<&'a str> {
        let pos = self.params.iter().position(|(k, _)| *k == key)?;
        Some(self.params.remove(pos).1)
    }

    fn bad(&self, key: &str, reason: impl Into<String>) -> Error {
        Error::BadValue {
            line: self.line,
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    fn number(&self, key: &str, raw: &str) -> Result<f64, Error> {
        parse_value(raw).ok_or_else(|| self.bad(key, format!("`{raw}` is not a number")))
    }

    fn positive(&mut self, key: &str) -> Result<Option<f64>, Error> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => {
                let v = self.number(key, raw)?;
                if v > 0.0 {
                    Ok(Some(v))
                } else {
                    Err(self.bad(key, "must be positive"))
                }
            }
        }
    }

    fn non_negative(&mut self, key: &str) -> Result<Option<f64>, Error> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => {
                let v = self.number(key, raw)?;
                if v >= 0.0 {
                    Ok(Some(v))
                } else {
                    Err(self.bad(key, "must be non-negative"))
                }
            }
        }
    }

    fn required(&mut self, key: &str) -> Result<f64, Error> {
        self.positive(key)?.ok_or_else(|| Error::Syntax {
            line: self.line,
            reason: format!("missing `{key}=`"),
        })
    }

    fn bit(&mut self) -> Result<Option<u8>, Error> {
        match self.take("bit") {
            None => Ok(None),
            Some(raw) => match raw.parse::<u8>() {
                Ok(b) if b < MAX_BITS => Ok(Some(b)),
                _ => Err(self.bad("bit", format!("expected an index in 0..{}", MAX_BITS))),
            },
        }
    }

    fn finish(&self) -> Result<(), Error> {
        match self.params.first() {
            None => Ok(()),
            Some((k, _)) => Err(Error::Syntax {
                line: self.line,
                reason: format!("unexpected key `{k}`"),
            }),
        }
    }
}

const KEYWORDS: [&str; 6] = ["port", "r", "ind", "cap", "relay", "hyb90"];

/// Parses netlist text. Elements keep file order.
pub fn parse_netlist(text: &str) -> Result<Netlist, Error> {
    let mut builder = NetlistBuilder::new();
    let mut port_numbers = BTreeSet::new();
    let mut pending_ports = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let first_kv = tokens
            .iter()
            .position(|t| t.contains('='))
            .unwrap_or(tokens.len());
        if first_kv < 2 || tokens[first_kv..].iter().any(|t| !t.contains('=')) {
            return Err(Error::Syntax {
                line,
                reason: "expected `<label> <nodes> [kind] key=value...`".into(),
            });
        }
        let label = tokens[0];
        let head = &tokens[1..first_kv];
        let last = head[head.len() - 1];
        let (keyword, node_names) = if KEYWORDS.contains(&last) {
            (last, &head[..head.len() - 1])
        } else {
            // kind left out: `R1 a 0 r=50`
            let first_key = tokens
                .get(first_kv)
                .and_then(|t| t.split_once('='))
                .map(|(k, _)| k);
            match (first_key, head.len()) {
                (Some("r"), 2) => ("r", head),
                (Some("l"), 2) => ("ind", head),
                (Some("c"), 2) => ("cap", head),
                (Some("r" | "l" | "c"), _) => {
                    return Err(Error::Syntax {
                        line,
                        reason: format!("expected 2 nodes, found {}", head.len()),
                    })
                }
                (_, n) if n > 2 => {
                    return Err(Error::UnknownElementKind {
                        line,
                        kind: last.to_string(),
                    })
                }
                _ => {
                    return Err(Error::Syntax {
                        line,
                        reason: "missing element kind".into(),
                    })
                }
            }
        };
        let expected_nodes = ElementKind::node_count(keyword);
        if node_names.len() != expected_nodes {
            return Err(Error::Syntax {
                line,
                reason: format!(
                    "`{keyword}` takes {expected_nodes} nodes, found {}",
                    node_names.len()
                ),
            });
        }
        let mut params = Vec::new();
        for t in &tokens[first_kv..] {
            let (k, v) = t.split_once('=').ok_or_else(|| Error::Syntax {
                line,
                reason: format!("malformed parameter `{t}`"),
            })?;
            if params.iter().any(|(pk, _)| *pk == k) {
                return Err(Error::Syntax {
                    line,
                    reason: format!("repeated key `{k}`"),
                });
            }
            params.push((k, v));
        }
        let mut p = LineParser { line, params };

        let kind = match keyword {
            "port" => {
                let z0 = p.required("z0")?;
                let num = match p.take("num") {
                    None => None,
                    Some(raw) => match raw.parse::<u32>() {
                        Ok(n) if n >= 1 => Some(n),
                        _ => return Err(p.bad("num", "expected a port number >= 1")),
                    },
                };
                if !matches!(node_names[1], "0" | "gnd") {
                    return Err(Error::Syntax {
                        line,
                        reason: "port reference node must be ground".into(),
                    });
                }
                if let Some(n) = num {
                    if !port_numbers.insert(n) {
                        return Err(Error::DuplicatePort { line, num: n });
                    }
                } else {
                    pending_ports.push(builder.elements.len());
                }
                ElementKind::Port {
                    z0,
                    num: num.unwrap_or(0),
                }
            }
            "r" => ElementKind::Resistor {
                r: p.required("r")?,
            },
            "ind" => ElementKind::Inductor {
                l: p.required("l")?,
                q: p.positive("q")?,
            },
            "cap" => {
                let raw = p.take("c").ok_or_else(|| Error::Syntax {
                    line,
                    reason: "missing `c=`".into(),
                })?;
                let q = p.positive("q")?;
                let ron = p.positive("ron")?;
                let bit = p.bit()?;
                match (raw.split_once('/'), bit) {
                    (Some((lo, hi)), Some(bit)) => {
                        let c_low = p.number("c", lo)?;
                        let c_high = p.number("c", hi)?;
                        if c_low < 0.0 || c_high <= c_low {
                            return Err(p.bad("c", "need 0 <= low < high"));
                        }
                        ElementKind::SwitchedCapacitor {
                            c_low,
                            c_high,
                            bit,
                            q,
                            ron,
                        }
                    }
                    (Some(_), None) => {
                        return Err(Error::Syntax {
                            line,
                            reason: "two-valued capacitor needs `bit=`".into(),
                        })
                    }
                    (None, Some(_)) => {
                        return Err(p.bad("c", "switched capacitor needs `c=LOW/HIGH`"))
                    }
                    (None, None) => {
                        let c = p.number("c", raw)?;
                        if c <= 0.0 {
                            return Err(p.bad("c", "must be positive"));
                        }
                        ElementKind::Capacitor { c, q, ron }
                    }
                }
            }
            "relay" => {
                let bit = p.bit()?.ok_or_else(|| Error::Syntax {
                    line,
                    reason: "missing `bit=`".into(),
                })?;
                ElementKind::Relay {
                    bit,
                    ron: p.positive("ron")?,
                    coff: p.non_negative("coff")?,
                }
            }
            "hyb90" => ElementKind::IdealHybrid {
                z0: p.required("z0")?,
            },
            _ => unreachable!(),
        };
        p.finish()?;
        builder.add(label, node_names, kind);
    }

    // ports without `num=` take the lowest free numbers, in file order
    let mut next = 1;
    for idx in pending_ports {
        while port_numbers.contains(&next) {
            next += 1;
        }
        port_numbers.insert(next);
        if let ElementKind::Port { num, .. } = &mut builder.elements[idx].kind {
            *num = next;
        }
    }
    Ok(builder.build())
}

/// Shortest engineering form that parses back to exactly `v`, falling back
/// to scientific notation.
fn fmt_value(v: f64) -> String {
    const SUFFIXES: [(i32, &str); 9] = [
        (-15, "f"),
        (-12, "p"),
        (-9, "n"),
        (-6, "u"),
        (-3, "m"),
        (0, ""),
        (3, "k"),
        (6, "M"),
        (9, "G"),
    ];
    if v != 0.0 && v.is_finite() {
        let exp3 = (v.abs().log10().floor() as i32).div_euclid(3) * 3;
        if let Some((_, suffix)) = SUFFIXES.iter().find(|(e, _)| *e == exp3) {
            let m = v / 10f64.powi(exp3);
            for decimals in 0..=15 {
                let digits = format!("{m:.decimals$}");
                let digits = if digits.contains('.') {
                    digits.trim_end_matches('0').trim_end_matches('.')
                } else {
                    &digits
                };
                let text = format!("{digits}{suffix}");
                if parse_value(&text) == Some(v) {
                    return text;
                }
            }
        }
    }
    format!("{v:e}")
}

impl fmt::Display for Netlist {
    /// Canonical text form; parses back to an equal netlist.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.elements {
            write!(f, "{}", e.label)?;
            for n in &e.nodes {
                write!(f, " {}", self.node_name(*n))?;
            }
            write!(f, " {}", e.kind.keyword())?;
            let opt = |f: &mut fmt::Formatter<'_>, key: &str, v: Option<f64>| match v {
                Some(v) => write!(f, " {key}={}", fmt_value(v)),
                None => Ok(()),
            };
            match &e.kind {
                ElementKind::Resistor { r } => write!(f, " r={}", fmt_value(*r))?,
                ElementKind::Inductor { l, q } => {
                    write!(f, " l={}", fmt_value(*l))?;
                    opt(f, "q", *q)?;
                }
                ElementKind::Capacitor { c, q, ron } => {
                    write!(f, " c={}", fmt_value(*c))?;
                    opt(f, "q", *q)?;
                    opt(f, "ron", *ron)?;
                }
                ElementKind::SwitchedCapacitor {
                    c_low,
                    c_high,
                    bit,
                    q,
                    ron,
                } => {
                    write!(
                        f,
                        " c={}/{} bit={bit}",
                        fmt_value(*c_low),
                        fmt_value(*c_high)
                    )?;
                    opt(f, "q", *q)?;
                    opt(f, "ron", *ron)?;
                }
                ElementKind::Relay { bit, ron, coff } => {
                    write!(f, " bit={bit}")?;
                    opt(f, "ron", *ron)?;
                    opt(f, "coff", *coff)?;
                }
                ElementKind::IdealHybrid { z0 } => write!(f, " z0={}", fmt_value(*z0))?,
                ElementKind::Port { z0, num } => write!(f, " z0={} num={num}", fmt_value(*z0))?,
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
