//! Configuration-space enumeration and Smith-chart coverage metrics.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::components::LossModel;
use crate::error::Error;
use crate::netlist::{ConfigurationWord, Netlist, MAX_BITS};
use crate::network::{
    build_full_network, lumped_coupler_network, phase_stage_network, ComponentTable, CouplerMode,
    BIT_PHASE1, BIT_PHASE2, PHASE_STAGE_BITS,
};
use crate::solver::{s_parameters, TwoPort};

/// Default ε for grid coverage.
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Default grid resolution per axis.
pub const DEFAULT_GRID_N: usize = 101;
/// Two reflection coefficients closer than this count as one.
pub const DISTINCT_TOLERANCE: f64 = 1e-6;

/// Response of one configuration word at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatePoint {
    pub word: ConfigurationWord,
    pub f_hz: f64,
    pub s11: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
    /// Reflection seen looking into port 2, i.e. `s22`.
    pub gamma_out: Complex64,
}

impl StatePoint {
    pub fn from_two_port(word: ConfigurationWord, f_hz: f64, tp: &TwoPort) -> Self {
        Self {
            word,
            f_hz,
            s11: tp.s11,
            s21: tp.s21,
            s22: tp.s22,
            gamma_out: tp.s22,
        }
    }
}

/// All words whose set bits lie in `bits`, ascending. Bits outside the subset
/// stay at zero.
pub fn words_over(bits: &[u8]) -> Result<Vec<ConfigurationWord>, Error> {
    let mut sorted = bits.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.iter().any(|&b| b >= MAX_BITS) {
        return Err(Error::InvalidQuery(format!(
            "bit subset {bits:?} exceeds 0..{}",
            MAX_BITS - 1
        )));
    }
    (0u32..1 << sorted.len())
        .map(|k| {
            let v = sorted
                .iter()
                .enumerate()
                .filter(|(i, _)| (k >> i) & 1 == 1)
                .fold(0u16, |acc, (_, &b)| acc | (1 << b));
            ConfigurationWord::new(v)
        })
        .collect()
}

/// Two-port response of `netlist` for every word, in input order.
pub fn evaluate_words(
    netlist: &Netlist,
    words: &[ConfigurationWord],
    f: f64,
    loss: &LossModel,
) -> Result<Vec<StatePoint>, Error> {
    words
        .par_iter()
        .map(|&w| {
            let block = s_parameters(netlist, f, w, loss).map_err(|e| e.at_state(w.value(), f))?;
            Ok(StatePoint::from_two_port(w, f, &TwoPort::try_from(&block)?))
        })
        .collect()
}

/// Enumerates the full network over the words spanned by `bit_subset`.
pub fn enumerate_states(
    table: &ComponentTable,
    mode: CouplerMode,
    f: f64,
    loss: &LossModel,
    bit_subset: &[u8],
) -> Result<Vec<StatePoint>, Error> {
    let netlist = build_full_network(table, mode);
    evaluate_words(&netlist, &words_over(bit_subset)?, f, loss)
}

/// Like [`enumerate_states`] over several frequencies, ordered by word and
/// then by ascending frequency.
pub fn enumerate_sweep(
    table: &ComponentTable,
    mode: CouplerMode,
    freqs: &[f64],
    loss: &LossModel,
    bit_subset: &[u8],
) -> Result<Vec<StatePoint>, Error> {
    let mut freqs = freqs.to_vec();
    freqs.sort_by(f64::total_cmp);
    let netlist = build_full_network(table, mode);
    let words = words_over(bit_subset)?;
    let pairs: Vec<(ConfigurationWord, f64)> = words
        .iter()
        .flat_map(|&w| freqs.iter().map(move |&f| (w, f)))
        .collect();
    pairs
        .par_iter()
        .map(|&(w, f)| {
            let block = s_parameters(&netlist, f, w, loss).map_err(|e| e.at_state(w.value(), f))?;
            Ok(StatePoint::from_two_port(w, f, &TwoPort::try_from(&block)?))
        })
        .collect()
}

pub const CSV_HEADER: &str = "word,f_hz,re_s11,im_s11,re_s21,im_s21,re_s22,im_s22";

/// CSV with 17 significant digits per float.
pub fn write_csv<W: Write>(points: &[StatePoint], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.word, p.f_hz, p.s11.re, p.s11.im, p.s21.re, p.s21.im, p.s22.re, p.s22.im
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<StatePoint>,
    pub max_radius: f64,
    pub epsilon: f64,
    pub grid_n: usize,
    pub grid_coverage: f64,
    pub distinct_count: usize,
    /// Phase-control span of the phase stage, when computed.
    pub phase_span_deg: Option<f64>,
}

/// Grid samples of the unit disc: `grid_n × grid_n` on `[-1, 1]²`, masked.
pub fn disc_grid(grid_n: usize) -> Vec<Complex64> {
    let step = 2.0 / (grid_n - 1) as f64;
    let mut pts = Vec::new();
    for i in 0..grid_n {
        for j in 0..grid_n {
            let p = Complex64::new(-1.0 + i as f64 * step, -1.0 + j as f64 * step);
            if p.norm_sqr() <= 1.0 {
                pts.push(p);
            }
        }
    }
    pts
}

/// Fraction of disc grid samples within `eps` of some point of `gammas`.
pub fn grid_coverage(gammas: &[Complex64], eps: f64, grid_n: usize) -> f64 {
    let grid = disc_grid(grid_n);
    let eps2 = eps * eps;
    let covered = grid
        .par_iter()
        .filter(|g| gammas.iter().any(|p| (*p - **g).norm_sqr() <= eps2))
        .count();
    covered as f64 / grid.len() as f64
}

/// Number of points not within [`DISTINCT_TOLERANCE`] of an earlier one.
pub fn distinct_count(gammas: &[Complex64]) -> usize {
    let mut reps: Vec<Complex64> = Vec::new();
    for g in gammas {
        if !reps.iter().any(|r| (r - g).norm() <= DISTINCT_TOLERANCE) {
            reps.push(*g);
        }
    }
    reps.len()
}

pub fn coverage_metrics(
    points: &[StatePoint],
    eps: f64,
    grid_n: usize,
) -> Result<CoverageReport, Error> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if grid_n < 16 || eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidQuery(format!(
            "need grid_n >= 16 and eps > 0, got {grid_n}, {eps}"
        )));
    }
    let gammas: Vec<Complex64> = points.iter().map(|p| p.gamma_out).collect();
    Ok(CoverageReport {
        points: points.to_vec(),
        max_radius: gammas.iter().map(|g| g.norm()).fold(0.0, f64::max),
        epsilon: eps,
        grid_n,
        grid_coverage: grid_coverage(&gammas, eps, grid_n),
        distinct_count: distinct_count(&gammas),
        phase_span_deg: None,
    })
}

/// Smallest circular arc, in degrees, containing all given angles.
pub fn circular_span_deg(angles_deg: &[f64]) -> f64 {
    if angles_deg.len() < 2 {
        return 0.0;
    }
    let mut a: Vec<f64> = angles_deg.iter().map(|x| x.rem_euclid(360.0)).collect();
    a.sort_by(f64::total_cmp);
    let mut max_gap = a[0] + 360.0 - a[a.len() - 1];
    for w in a.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    360.0 - max_gap
}

/// Transmission phases of the phase stage alone over the words spanned by `bits`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpan {
    pub mode: CouplerMode,
    pub words: Vec<ConfigurationWord>,
    pub phases_deg: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub span_deg: f64,
}

pub fn phase_span_over(
    table: &ComponentTable,
    mode: CouplerMode,
    f: f64,
    loss: &LossModel,
    bits: &[u8],
) -> Result<PhaseSpan, Error> {
    let netlist = phase_stage_network(table, mode);
    let words = words_over(bits)?;
    let points = evaluate_words(&netlist, &words, f, loss)?;
    let phases_deg: Vec<f64> = points.iter().map(|p| p.s21.arg().to_degrees()).collect();
    Ok(PhaseSpan {
        mode,
        span_deg: circular_span_deg(&phases_deg),
        magnitudes: points.iter().map(|p| p.s21.norm()).collect(),
        phases_deg,
        words,
    })
}

/// Phase-control span of the phase stage over all of its 2³ words.
pub fn phase_span(
    table: &ComponentTable,
    mode: CouplerMode,
    f: f64,
    loss: &LossModel,
) -> Result<f64, Error> {
    Ok(phase_span_over(table, mode, f, loss, &PHASE_STAGE_BITS)?.span_deg)
}

/// Expected phase-control range of the full phase stage, degrees.
pub const TARGET_PHASE_SPAN_DEG: f64 = 340.0;
pub const PHASE_SPAN_TOLERANCE_DEG: f64 = 40.0;

/// How far the lumped coupler ring is from an ideal quadrature hybrid at
/// one frequency, with bit 10 low.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplerBalance {
    pub f_hz: f64,
    pub return_loss_db: f64,
    pub isolation_db: f64,
    /// `|S31|` in dB; ideal is -3.01.
    pub through_db: f64,
    /// `|S41|` in dB; ideal is -3.01.
    pub coupled_db: f64,
    /// `arg S31 - arg S41`, wrapped to [0, 360); ideal is 90.
    pub quadrature_deg: f64,
}

fn db(x: Complex64) -> f64 {
    20.0 * x.norm().log10()
}

pub fn coupler_balance(table: &ComponentTable, f: f64) -> Result<CouplerBalance, Error> {
    let block = s_parameters(
        &lumped_coupler_network(table),
        f,
        ConfigurationWord::ZERO,
        &LossModel::lossless(),
    )?;
    Ok(CouplerBalance {
        f_hz: f,
        return_loss_db: -db(block.get(1, 1)),
        isolation_db: -db(block.get(2, 1)),
        through_db: db(block.get(3, 1)),
        coupled_db: db(block.get(4, 1)),
        quadrature_deg: (block.get(3, 1).arg() - block.get(4, 1).arg())
            .to_degrees()
            .rem_euclid(360.0),
    })
}

/// Everything needed to judge a phase span that misses its target: the
/// lumped and ideal spans side by side, the contribution of the load bits
/// alone, and the state of the coupler ring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCalibration {
    pub target_deg: f64,
    pub tolerance_deg: f64,
    pub within_tolerance: bool,
    pub lumped: PhaseSpan,
    /// `max − min` of the lumped phases taken in (−180°, 180°]. Not a span:
    /// it depends on where the branch cut falls.
    pub wrapped_range_deg: f64,
    pub ideal_span_deg: f64,
    /// Ideal coupler, bit 10 held low.
    pub load_only_span_deg: f64,
    pub coupler: CouplerBalance,
}

pub fn phase_calibration(
    table: &ComponentTable,
    f: f64,
    loss: &LossModel,
) -> Result<PhaseCalibration, Error> {
    let lumped = phase_span_over(table, CouplerMode::Lumped, f, loss, &PHASE_STAGE_BITS)?;
    let ideal_span_deg = phase_span(table, CouplerMode::Ideal, f, loss)?;
    let load_only_span_deg = phase_span_over(
        table,
        CouplerMode::Ideal,
        f,
        loss,
        &[BIT_PHASE1, BIT_PHASE2],
    )?
    .span_deg;
    Ok(PhaseCalibration {
        target_deg: TARGET_PHASE_SPAN_DEG,
        tolerance_deg: PHASE_SPAN_TOLERANCE_DEG,
        within_tolerance: (lumped.span_deg - TARGET_PHASE_SPAN_DEG).abs()
            <= PHASE_SPAN_TOLERANCE_DEG,
        wrapped_range_deg: lumped
            .phases_deg
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - lumped
                .phases_deg
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b)),
        lumped,
        ideal_span_deg,
        load_only_span_deg,
        coupler: coupler_balance(table, f)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossSweepRow {
    pub loss: LossModel,
    pub max_radius: f64,
    pub radius_ratio: f64,
}

fn max_radius(points: &[StatePoint]) -> f64 {
    points
        .iter()
        .map(|p| p.gamma_out.norm())
        .fold(0.0, f64::max)
}

/// Coverage radius under each loss setting relative to the lossless network,
/// over all 2048 words.
pub fn loss_sweep(
    table: &ComponentTable,
    mode: CouplerMode,
    f: f64,
    loss_grid: &[LossModel],
) -> Result<Vec<LossSweepRow>, Error> {
    let netlist = build_full_network(table, mode);
    let words: Vec<ConfigurationWord> = ConfigurationWord::all().collect();
    let reference = max_radius(&evaluate_words(
        &netlist,
        &words,
        f,
        &LossModel::lossless(),
    )?);
    loss_grid
        .iter()
        .map(|loss| {
            loss.validate()?;
            let r = max_radius(&evaluate_words(&netlist, &words, f, loss)?);
            Ok(LossSweepRow {
                loss: *loss,
                max_radius: r,
                radius_ratio: r / reference,
            })
        })
        .collect()
}
