//! Picking the configuration word that best matches a given load.
//!
//! The network sits between a source (port 1) and the load (port 2). Two
//! objectives are available: the input reflection
//! `Γ_in = S11 + S12·S21·Γ_L / (1 − S22·Γ_L)` and the transducer gain
//! `G_T = |S21|²(1 − |Γ_S|²)(1 − |Γ_L|²) / |(1 − S11Γ_S)(1 − S22Γ_L) − S12S21Γ_SΓ_L|²`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::components::LossModel;
use crate::error::Error;
use crate::netlist::{ConfigurationWord, Netlist, MAX_BITS};
use crate::network::{build_full_network, ComponentTable, CouplerMode};
use crate::solver::{reflection, s_parameters, TwoPort};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    MinInputReflection,
    MaxTransducerGain,
}

impl std::str::FromStr for Objective {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "min_input_reflection" | "reflection" => Ok(Self::MinInputReflection),
            "max_transducer_gain" | "gain" => Ok(Self::MaxTransducerGain),
            other => Err(format!("unknown objective `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneQuery {
    pub z_load: Complex64,
    pub z_source: Complex64,
    pub f: f64,
    pub objective: Objective,
    pub mode: CouplerMode,
    pub loss: LossModel,
}

impl TuneQuery {
    /// Query with a 50 Ω source, the default objective, ideal coupler and
    /// default losses.
    pub fn new(z_load: Complex64, f: f64) -> Self {
        Self {
            z_load,
            z_source: Complex64::new(50.0, 0.0),
            f,
            objective: Objective::default(),
            mode: CouplerMode::default(),
            loss: LossModel::default(),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !self.z_load.re.is_finite() || self.z_load.re < 0.0 || !self.z_load.im.is_finite() {
            return Err(Error::InvalidQuery(format!(
                "load {} must have Re >= 0",
                self.z_load
            )));
        }
        if !self.z_source.re.is_finite() || self.z_source.re <= 0.0 || !self.z_source.im.is_finite()
        {
            return Err(Error::InvalidQuery(format!(
                "source {} must have Re > 0",
                self.z_source
            )));
        }
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(Error::BadFrequency(self.f));
        }
        self.loss.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuneResult {
    pub word: ConfigurationWord,
    pub objective: Objective,
    /// `|Γ_in|` or `G_T`, depending on the objective.
    pub objective_value: f64,
    pub gamma_in: Complex64,
    pub transducer_gain: f64,
    /// Distance in objective value to the best other evaluated word.
    pub gap_to_second_best: f64,
    pub evaluations: usize,
}

/// Input reflection of a two-port terminated in `gamma_l`.
pub fn input_reflection(tp: &TwoPort, gamma_l: Complex64) -> Complex64 {
    tp.s11 + tp.s12 * tp.s21 * gamma_l / (Complex64::new(1.0, 0.0) - tp.s22 * gamma_l)
}

pub fn transducer_gain(tp: &TwoPort, gamma_s: Complex64, gamma_l: Complex64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let num = tp.s21.norm_sqr() * (1.0 - gamma_s.norm_sqr()) * (1.0 - gamma_l.norm_sqr());
    let den = ((one - tp.s11 * gamma_s) * (one - tp.s22 * gamma_l)
        - tp.s12 * tp.s21 * gamma_s * gamma_l)
        .norm_sqr();
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy)]
struct Eval {
    gamma_in: Complex64,
    gain: f64,
    /// Lower is better.
    cost: f64,
}

/// A query bound to its network, ready to score words.
pub struct TuneProblem {
    netlist: Netlist,
    query: TuneQuery,
    gamma_l: Complex64,
    gamma_s: Complex64,
}

impl TuneProblem {
    pub fn new(query: &TuneQuery, table: &ComponentTable) -> Result<Self, Error> {
        query.validate()?;
        let netlist = build_full_network(table, query.mode);
        let z0 = netlist.reference_impedance()?;
        Ok(Self {
            gamma_l: reflection(query.z_load, z0)?,
            gamma_s: reflection(query.z_source, z0)?,
            netlist,
            query: *query,
        })
    }

    fn evaluate(&self, word: ConfigurationWord) -> Result<Eval, Error> {
        let block = s_parameters(&self.netlist, self.query.f, word, &self.query.loss)?;
        let tp = TwoPort::try_from(&block)?;
        let gamma_in = input_reflection(&tp, self.gamma_l);
        let gain = transducer_gain(&tp, self.gamma_s, self.gamma_l);
        let cost = match self.query.objective {
            Objective::MinInputReflection => gamma_in.norm(),
            Objective::MaxTransducerGain => -gain,
        };
        Ok(Eval {
            gamma_in,
            gain,
            cost: if cost.is_nan() { f64::INFINITY } else { cost },
        })
    }

    /// Objective value of one word, as reported in [`TuneResult`].
    pub fn objective_value(&self, word: ConfigurationWord) -> Result<f64, Error> {
        Ok(self.report_value(&self.evaluate(word)?))
    }

    fn report_value(&self, e: &Eval) -> f64 {
        match self.query.objective {
            Objective::MinInputReflection => e.gamma_in.norm(),
            Objective::MaxTransducerGain => e.gain,
        }
    }

    fn result(&self, ranked: &[(ConfigurationWord, Eval)], evaluations: usize) -> TuneResult {
        let (word, best) = ranked[0];
        let gap = ranked
            .get(1)
            .map_or(0.0, |(_, second)| (second.cost - best.cost).abs());
        TuneResult {
            word,
            objective: self.query.objective,
            objective_value: self.report_value(&best),
            gamma_in: best.gamma_in,
            transducer_gain: best.gain,
            gap_to_second_best: if gap.is_finite() { gap } else { f64::INFINITY },
            evaluations,
        }
    }
}

fn by_cost(a: &(ConfigurationWord, Eval), b: &(ConfigurationWord, Eval)) -> Ordering {
    a.1.cost.total_cmp(&b.1.cost).then(a.0.cmp(&b.0))
}

/// Scores every word; ties go to the smaller word.
pub fn tune_exhaustive(query: &TuneQuery, table: &ComponentTable) -> Result<TuneResult, Error> {
    let problem = TuneProblem::new(query, table)?;
    let words: Vec<ConfigurationWord> = ConfigurationWord::all().collect();
    let mut scored: Vec<(ConfigurationWord, Eval)> = words
        .par_iter()
        .map(|&w| {
            problem
                .evaluate(w)
                .map(|e| (w, e))
                .map_err(|e| e.at_state(w.value(), query.f))
        })
        .collect::<Result<_, _>>()?;
    scored.sort_by(by_cost);
    Ok(problem.result(&scored, words.len()))
}

/// Steepest-descent bit-flip search from `restarts` distinct seeded random
/// starting words.
pub fn tune_greedy(
    query: &TuneQuery,
    table: &ComponentTable,
    restarts: usize,
    seed: u64,
) -> Result<TuneResult, Error> {
    if restarts == 0 {
        return Err(Error::InvalidQuery("restarts must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ConfigurationWord::COUNT as usize;
    let starts: Vec<ConfigurationWord> = rand::seq::index::sample(&mut rng, n, restarts.min(n))
        .into_iter()
        .map(|i| ConfigurationWord::new(i as u16).expect("index below COUNT"))
        .collect();
    tune_greedy_from(query, table, &starts)
}

/// One steepest-descent run; returns every word it scored.
fn climb(
    problem: &TuneProblem,
    start: ConfigurationWord,
) -> Result<BTreeMap<ConfigurationWord, Eval>, Error> {
    let mut cache: BTreeMap<ConfigurationWord, Eval> = BTreeMap::new();
    let mut score = |w: ConfigurationWord| -> Result<Eval, Error> {
        if let Some(e) = cache.get(&w) {
            return Ok(*e);
        }
        let e = problem
            .evaluate(w)
            .map_err(|e| e.at_state(w.value(), problem.query.f))?;
        cache.insert(w, e);
        Ok(e)
    };
    let mut current = (start, score(start)?);
    loop {
        let mut best: Option<(ConfigurationWord, Eval)> = None;
        for bit in 0..MAX_BITS {
            let w = current.0.flipped(bit);
            let cand = (w, score(w)?);
            if best
                .as_ref()
                .is_none_or(|b| by_cost(&cand, b) == Ordering::Less)
            {
                best = Some(cand);
            }
        }
        let best = best.expect("eleven neighbours");
        if best.1.cost < current.1.cost {
            current = best;
        } else {
            break;
        }
    }
    Ok(cache)
}

/// Steepest-descent search from the given starting words, one climb per
/// start in parallel.
///
/// From each start, all single-bit neighbours are scored and the best one
/// taken while it strictly improves; the best local optimum over all starts
/// is returned. `evaluations` counts distinct words scored.
pub fn tune_greedy_from(
    query: &TuneQuery,
    table: &ComponentTable,
    starts: &[ConfigurationWord],
) -> Result<TuneResult, Error> {
    if starts.is_empty() {
        return Err(Error::InvalidQuery("need at least one start".into()));
    }
    let problem = TuneProblem::new(query, table)?;
    let climbs: Vec<BTreeMap<ConfigurationWord, Eval>> = starts
        .par_iter()
        .map(|&start| climb(&problem, start))
        .collect::<Result<_, _>>()?;
    let mut cache = BTreeMap::new();
    for c in climbs {
        cache.extend(c);
    }

    let mut ranked: Vec<(ConfigurationWord, Eval)> = cache.into_iter().collect();
    ranked.sort_by(by_cost);
    let evaluations = ranked.len();
    Ok(problem.result(&ranked, evaluations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(s11: f64, s21: Complex64, s22: f64) -> TwoPort {
        TwoPort {
            s11: Complex64::new(s11, 0.0),
            s12: s21,
            s21,
            s22: Complex64::new(s22, 0.0),
        }
    }

    #[test]
    fn gamma_in_of_matched_line_is_load() {
        let line = tp(0.0, Complex64::new(0.0, -1.0), 0.0);
        let gl = Complex64::new(0.3, 0.4);
        // a matched line just rotates Γ_L by S21²
        assert!((input_reflection(&line, gl) - (-gl)).norm() < 1e-15);
    }

    #[test]
    fn gain_of_matched_lossless_line_is_unity() {
        let line = tp(0.0, Complex64::from_polar(1.0, 0.7), 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert!((transducer_gain(&line, zero, zero) - 1.0).abs() < 1e-15);
        // mismatch loss at a resistive load: 1 − |Γ_L|²
        let gl = Complex64::new(0.5, 0.0);
        assert!((transducer_gain(&line, zero, gl) - 0.75).abs() < 1e-15);
        // reactive load: nothing delivered
        assert_eq!(transducer_gain(&line, zero, Complex64::new(0.0, 1.0)), 0.0);
    }

    #[test]
    fn query_validation() {
        let mut q = TuneQuery::new(Complex64::new(-1.0, 0.0), 620e6);
        assert!(q.validate().is_err());
        q.z_load = Complex64::new(0.0, 30.0);
        assert!(q.validate().is_ok());
        q.z_source = Complex64::new(0.0, 0.0);
        assert!(q.validate().is_err());
        q.z_source = Complex64::new(50.0, 0.0);
        q.f = -1.0;
        assert!(q.validate().is_err());
    }

    #[test]
    fn objective_parsing() {
        assert_eq!(
            "gain".parse::<Objective>(),
            Ok(Objective::MaxTransducerGain)
        );
        assert_eq!(
            "min_input_reflection".parse::<Objective>(),
            Ok(Objective::MinInputReflection)
        );
        assert!("best".parse::<Objective>().is_err());
    }

    #[test]
    fn greedy_requires_a_start() {
        let q = TuneQuery::new(Complex64::new(50.0, 0.0), 620e6);
        assert!(tune_greedy(&q, &ComponentTable::default(), 0, 1).is_err());
        assert!(tune_greedy_from(&q, &ComponentTable::default(), &[]).is_err());
    }
}
