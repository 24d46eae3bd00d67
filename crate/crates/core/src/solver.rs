//! AC nodal analysis and port-parameter extraction.
//!
//! Two-terminal elements are stamped as admittances; the ideal hybrid is
//! stamped through the admittance matrix equivalent to its scattering
//! matrix. Two routes to S-parameters are provided:
//!
//! * [`s_parameters`] terminates every port in its reference impedance and
//!   solves once per port, `S = (2/z0)·Z_t − I` with `Z_t` the port block of
//!   the terminated impedance matrix. It works for any netlist whose
//!   terminated admittance matrix is regular, including bare series
//!   elements between ports.
//! * [`port_zmatrix`] + [`z_to_s`] extract open-circuit Z-parameters by
//!   current injection and convert. Z-parameters do not exist when a port
//!   node has no path to ground other than through another port, so this
//!   route serves as an independent cross-check.

use num_complex::Complex64;
use serde::Serialize;

use crate::components::{element_admittance, ideal_hybrid_smatrix, LossModel};
use crate::error::Error;
use crate::netlist::{ConfigurationWord, ElementKind, Netlist, NodeId};
use crate::numeric::{c, invert, ComplexMatrix, LuFactors};

/// Series resistance added at each hybrid port when `I + S` is singular.
pub const HYBRID_REGULARIZATION: f64 = 1e-6;

/// Scattering matrix at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SParameterBlock {
    pub f_hz: f64,
    pub z0: f64,
    pub s: ComplexMatrix,
}

impl SParameterBlock {
    /// `S[i][j]` with 1-based port numbers.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.s[(i - 1, j - 1)]
    }

    pub fn n_ports(&self) -> usize {
        self.s.dim()
    }
}

/// Scalar view of a two-port, convenient for serialisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPort {
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
}

impl TryFrom<&SParameterBlock> for TwoPort {
    type Error = Error;
    fn try_from(b: &SParameterBlock) -> Result<Self, Error> {
        if b.n_ports() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: b.n_ports(),
            });
        }
        Ok(Self {
            s11: b.get(1, 1),
            s12: b.get(1, 2),
            s21: b.get(2, 1),
            s22: b.get(2, 2),
        })
    }
}

/// Reflection coefficient `(z − z0)/(z + z0)`. An infinite impedance gives 1.
pub fn reflection(z: Complex64, z0: f64) -> Result<Complex64, Error> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        if z.re.is_nan() || z.im.is_nan() {
            return Err(Error::NonFinite("impedance"));
        }
        return Ok(c(1.0, 0.0));
    }
    let den = z + z0;
    if den.norm() <= f64::EPSILON * z0 {
        return Err(Error::ReflectionPole);
    }
    Ok((z - z0) / den)
}

/// Inverse of [`reflection`].
pub fn impedance_from_reflection(gamma: Complex64, z0: f64) -> Option<Complex64> {
    let den = c(1.0, 0.0) - gamma;
    (den.norm() > 0.0).then(|| z0 * (c(1.0, 0.0) + gamma) / den)
}

/// Admittance matrix `(1/z0)(I − S)(I + S)⁻¹` of an n-port given by its
/// scattering matrix. When `I + S` is singular each port is padded with a
/// small series resistance instead.
pub fn smatrix_to_admittance(s: &ComplexMatrix, z0: f64) -> Result<ComplexMatrix, Error> {
    let n = s.dim();
    let eye = ComplexMatrix::identity(n);
    let i_minus_s = eye.sub(s);
    match invert(&eye.add(s)) {
        Ok(inv) => Ok((&i_minus_s * &inv).scale(c(1.0 / z0, 0.0))),
        Err(Error::SingularMatrix { .. }) => {
            // Z = z0 (I + S)(I − S)⁻¹, then Y = (Z + r·I)⁻¹
            let z = (&eye.add(s) * &invert(&i_minus_s)?).scale(c(z0, 0.0));
            invert(&z.add(&eye.scale(c(HYBRID_REGULARIZATION, 0.0))))
        }
        Err(e) => Err(e),
    }
}

fn check_frequency(f: f64) -> Result<(), Error> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::BadFrequency(f))
    }
}

/// Nodal admittance matrix over the non-ground nodes (row `i` is node `i+1`).
/// Ports are not stamped.
pub fn assemble_admittance(
    netlist: &Netlist,
    f: f64,
    word: ConfigurationWord,
    loss: &LossModel,
) -> Result<ComplexMatrix, Error> {
    check_frequency(f)?;
    let n = netlist.node_count() - 1;
    if n == 0 {
        return Err(Error::Invalid("netlist has no non-ground nodes".into()));
    }
    let mut y = ComplexMatrix::zeros(n);
    let mut hybrid_y: Option<(f64, ComplexMatrix)> = None;

    let stamp = |y: &mut ComplexMatrix, a: NodeId, b: NodeId, v: Complex64| {
        if !a.is_ground() {
            y[(a.0 - 1, a.0 - 1)] += v;
        }
        if !b.is_ground() {
            y[(b.0 - 1, b.0 - 1)] += v;
        }
        if !a.is_ground() && !b.is_ground() {
            y[(a.0 - 1, b.0 - 1)] -= v;
            y[(b.0 - 1, a.0 - 1)] -= v;
        }
    };

    for e in netlist.elements() {
        match e.kind {
            ElementKind::Port { .. } => {}
            ElementKind::IdealHybrid { z0 } => {
                let yh = match &hybrid_y {
                    Some((z, m)) if *z == z0 => m.clone(),
                    _ => {
                        let m = smatrix_to_admittance(&ideal_hybrid_smatrix(), z0)?;
                        hybrid_y = Some((z0, m.clone()));
                        m
                    }
                };
                for (i, a) in e.nodes.iter().enumerate() {
                    if a.is_ground() {
                        continue;
                    }
                    for (j, b) in e.nodes.iter().enumerate() {
                        if !b.is_ground() {
                            y[(a.0 - 1, b.0 - 1)] += yh[(i, j)];
                        }
                    }
                }
            }
            _ => {
                let v = element_admittance(e, f, word, loss).expect("two-terminal element");
                stamp(&mut y, e.nodes[0], e.nodes[1], v);
            }
        }
    }
    if !y.is_finite() {
        return Err(Error::NonFinite("admittance matrix"));
    }
    Ok(y)
}

fn port_rows(netlist: &Netlist) -> Result<Vec<usize>, Error> {
    let ports = netlist.ports();
    if ports.is_empty() {
        return Err(Error::NoPorts);
    }
    ports
        .iter()
        .map(|p| {
            let node = p.nodes[0];
            if node.is_ground() {
                Err(Error::Invalid(format!(
                    "port {} is tied to ground",
                    p.label
                )))
            } else {
                Ok(node.0 - 1)
            }
        })
        .collect()
}

/// Port block of the inverse of `y`, one solve per port.
fn port_block(y: &ComplexMatrix, rows: &[usize]) -> Result<ComplexMatrix, Error> {
    let lu = LuFactors::factor(y)?;
    let np = rows.len();
    let mut z = ComplexMatrix::zeros(np);
    let mut rhs = vec![c(0.0, 0.0); y.dim()];
    for (j, &rj) in rows.iter().enumerate() {
        rhs.iter_mut().for_each(|v| *v = c(0.0, 0.0));
        rhs[rj] = c(1.0, 0.0);
        let v = lu.solve(&rhs)?;
        for (i, &ri) in rows.iter().enumerate() {
            z[(i, j)] = v[ri];
        }
    }
    Ok(z)
}

/// Open-circuit impedance matrix seen at the ports (unit current injected at
/// one port, all others open).
pub fn port_zmatrix(
    netlist: &Netlist,
    f: f64,
    word: ConfigurationWord,
    loss: &LossModel,
) -> Result<ComplexMatrix, Error> {
    let rows = port_rows(netlist)?;
    let y = assemble_admittance(netlist, f, word, loss)?;
    port_block(&y, &rows).map_err(|e| e.at_state(word.value(), f))
}

/// `S = (Z − z0·I)(Z + z0·I)⁻¹`.
pub fn z_to_s(z: &ComplexMatrix, z0: f64) -> Result<ComplexMatrix, Error> {
    let eye = ComplexMatrix::identity(z.dim()).scale(c(z0, 0.0));
    Ok(&z.sub(&eye) * &invert(&z.add(&eye))?)
}

/// S-parameters with every port terminated in the common reference impedance.
pub fn s_parameters(
    netlist: &Netlist,
    f: f64,
    word: ConfigurationWord,
    loss: &LossModel,
) -> Result<SParameterBlock, Error> {
    let z0 = netlist.reference_impedance()?;
    let rows = port_rows(netlist)?;
    let mut y = assemble_admittance(netlist, f, word, loss)?;
    for &r in &rows {
        y[(r, r)] += c(1.0 / z0, 0.0);
    }
    let zt = port_block(&y, &rows).map_err(|e| e.at_state(word.value(), f))?;
    let s = zt
        .scale(c(2.0 / z0, 0.0))
        .sub(&ComplexMatrix::identity(rows.len()));
    if !s.is_finite() {
        return Err(Error::NonFinite("scattering matrix").at_state(word.value(), f));
    }
    Ok(SParameterBlock { f_hz: f, z0, s })
}

/// S-parameters through the open-circuit Z-matrix.
pub fn s_parameters_via_z(
    netlist: &Netlist,
    f: f64,
    word: ConfigurationWord,
    loss: &LossModel,
) -> Result<SParameterBlock, Error> {
    let z0 = netlist.reference_impedance()?;
    let z = port_zmatrix(netlist, f, word, loss)?;
    Ok(SParameterBlock {
        f_hz: f,
        z0,
        s: z_to_s(&z, z0).map_err(|e| e.at_state(word.value(), f))?,
    })
}
