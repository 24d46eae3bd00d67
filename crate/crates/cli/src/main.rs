use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rfmems_match::analysis::{enumerate_sweep, DEFAULT_EPSILON, DEFAULT_GRID_N};
use rfmems_match::network::{ALL_BITS, PHASE_STAGE_BITS};
use rfmems_match::tuner::{tune_exhaustive, tune_greedy};
use rfmems_match::{
    build_full_network, coverage_metrics, loss_sweep, phase_calibration, phase_span,
    phase_span_over, resolve_switches, write_csv, ComponentTable, ConfigurationWord, CouplerMode,
    LossModel, Objective, TuneQuery,
};
use serde::Serialize;

mod config;
mod parse;

use config::{Format, RunArgs, RunConfig};
use parse::{parse_bits, parse_complex, parse_frequency, parse_quantity, parse_word, BitSet};

#[derive(Parser)]
#[command(
    name = "rfmatch",
    version,
    about = "Simulate and tune the MEMS reconfigurable matching network"
)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the network in netlist form
    Netlist {
        /// Fix every switch to this word (decimal, 0b or 0x)
        #[arg(long, value_parser = parse_word)]
        word: Option<ConfigurationWord>,
    },
    /// Output-side response of every configuration word, as CSV or JSON
    Enumerate {
        /// Bits to vary, e.g. 0-7 or 8,9,10 [default: all]
        #[arg(long, value_parser = parse_bits)]
        bits: Option<BitSet>,
        /// Comma-separated frequencies; overrides --freq
        #[arg(long, value_delimiter = ',', value_parser = parse_frequency)]
        sweep: Vec<f64>,
    },
    /// Smith-chart coverage summary as JSON
    Coverage {
        #[arg(long, value_parser = parse_bits)]
        bits: Option<BitSet>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_N)]
        grid_n: usize,
        /// Include every state point in the report
        #[arg(long)]
        points: bool,
    },
    /// Pick the configuration word that best matches a load
    Tune {
        /// Load impedance, a+bj or a-bj
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        load: Complex64,
        /// Source impedance
        #[arg(long, value_parser = parse_complex, default_value = "50+0j")]
        source: Complex64,
        /// min_input_reflection or max_transducer_gain
        #[arg(long, default_value = "min_input_reflection")]
        objective: Objective,
        /// Hill-climb from random starts instead of scanning all words
        #[arg(long)]
        greedy: bool,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// Coverage radius relative to the lossless network over a grid of loss settings
    LossSweep {
        /// Comma-separated Q_L values [default: --q-l]
        #[arg(long, value_delimiter = ',', value_parser = parse_quantity)]
        q_l_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = parse_quantity)]
        q_c_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = parse_quantity)]
        r_on_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = parse_quantity)]
        c_off_grid: Vec<f64>,
    },
    /// Transmission phases of the phase stage alone, as JSON
    PhaseSpan {
        /// Phase-stage bits to vary [default: 8-10]
        #[arg(long, value_parser = parse_bits)]
        bits: Option<BitSet>,
    },
}

enum Failure {
    Usage(String),
    Model(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Model(e)
    }
}

impl From<rfmems_match::Error> for Failure {
    fn from(e: rfmems_match::Error) -> Self {
        Failure::Model(e.into())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Model(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Model(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = cli.run.resolve().map_err(Failure::Usage)?;
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker threads")?;
    }
    let table = ComponentTable::default();
    let mut out = open_output(&cfg)?;

    match cli.command {
        Command::Netlist { word } => {
            let net = build_full_network(&table, cfg.mode);
            match word {
                Some(w) => write!(out, "{}", resolve_switches(&net, w, &cfg.loss))?,
                None => write!(out, "{net}")?,
            }
        }
        Command::Enumerate { bits, sweep } => {
            let bits = bits.map_or(ALL_BITS.to_vec(), |b| b.0);
            let freqs = if sweep.is_empty() {
                vec![cfg.frequency]
            } else {
                sweep
            };
            let points = enumerate_sweep(&table, cfg.mode, &freqs, &cfg.loss, &bits)?;
            match format(&cfg, Format::Csv) {
                Format::Csv => write_csv(&points, &mut out)?,
                Format::Json => write_json(&mut out, &points)?,
            }
        }
        Command::Coverage {
            bits,
            epsilon,
            grid_n,
            points,
        } => {
            json_only(&cfg)?;
            let bits = bits.map_or(ALL_BITS.to_vec(), |b| b.0);
            let states = enumerate_sweep(&table, cfg.mode, &[cfg.frequency], &cfg.loss, &bits)?;
            let mut report = coverage_metrics(&states, epsilon, grid_n)?;
            report.phase_span_deg = Some(phase_span(&table, cfg.mode, cfg.frequency, &cfg.loss)?);
            if !points {
                report.points.clear();
            }
            write_json(&mut out, &report)?;
        }
        Command::Tune {
            load,
            source,
            objective,
            greedy,
            restarts,
        } => {
            json_only(&cfg)?;
            let query = TuneQuery {
                z_source: source,
                objective,
                mode: cfg.mode,
                loss: cfg.loss,
                ..TuneQuery::new(load, cfg.frequency)
            };
            query
                .validate()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let result = if greedy {
                tune_greedy(&query, &table, restarts, cfg.seed)?
            } else {
                tune_exhaustive(&query, &table)?
            };
            write_json(&mut out, &result)?;
        }
        Command::LossSweep {
            q_l_grid,
            q_c_grid,
            r_on_grid,
            c_off_grid,
        } => {
            let grid = loss_grid(&cfg.loss, &q_l_grid, &q_c_grid, &r_on_grid, &c_off_grid);
            for m in &grid {
                m.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            }
            let rows = loss_sweep(&table, cfg.mode, cfg.frequency, &grid)?;
            match format(&cfg, Format::Csv) {
                Format::Csv => {
                    writeln!(out, "q_l,q_c,r_on,c_off,radius_ratio")?;
                    for r in &rows {
                        writeln!(
                            out,
                            "{},{},{},{:e},{:.16e}",
                            r.loss.q_l, r.loss.q_c, r.loss.r_on, r.loss.c_off, r.radius_ratio
                        )?;
                    }
                }
                Format::Json => write_json(&mut out, &rows)?,
            }
        }
        Command::PhaseSpan { bits } => {
            json_only(&cfg)?;
            let bits = bits.map_or(PHASE_STAGE_BITS.to_vec(), |b| b.0);
            if bits.iter().any(|b| !PHASE_STAGE_BITS.contains(b)) {
                return Err(Failure::Usage(format!(
                    "phase-span only varies bits {PHASE_STAGE_BITS:?}"
                )));
            }
            let span = phase_span_over(&table, cfg.mode, cfg.frequency, &cfg.loss, &bits)?;
            // the full lumped stage is checked against the expected range
            let calibration = if cfg.mode == CouplerMode::Lumped && bits == PHASE_STAGE_BITS {
                let cal = phase_calibration(&table, cfg.frequency, &cfg.loss)?;
                if cal.within_tolerance {
                    None
                } else {
                    eprintln!(
                        "warning: phase span {:.1}° is outside {}° ± {}°; calibration report attached",
                        cal.lumped.span_deg, cal.target_deg, cal.tolerance_deg
                    );
                    Some(cal)
                }
            } else {
                None
            };
            write_json(&mut out, &PhaseSpanOutput { span, calibration })?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PhaseSpanOutput {
    span: rfmems_match::PhaseSpan,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<rfmems_match::PhaseCalibration>,
}

fn open_output(cfg: &RunConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cfg.output {
        Some(path) => {
            let f =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn format(cfg: &RunConfig, default: Format) -> Format {
    cfg.format.unwrap_or(default)
}

fn json_only(cfg: &RunConfig) -> Result<(), Failure> {
    match cfg.format {
        Some(Format::Csv) => Err(Failure::Usage("this command only writes JSON".into())),
        _ => Ok(()),
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).context("writing JSON")?;
    writeln!(out)?;
    Ok(())
}

/// Cartesian product of the given value lists; an empty list keeps the base value.
fn loss_grid(
    base: &LossModel,
    q_l: &[f64],
    q_c: &[f64],
    r_on: &[f64],
    c_off: &[f64],
) -> Vec<LossModel> {
    let or_base = |v: &[f64], b: f64| if v.is_empty() { vec![b] } else { v.to_vec() };
    let mut grid = Vec::new();
    for &ql in &or_base(q_l, base.q_l) {
        for &qc in &or_base(q_c, base.q_c) {
            for &ron in &or_base(r_on, base.r_on) {
                for &coff in &or_base(c_off, base.c_off) {
                    grid.push(LossModel {
                        q_l: ql,
                        q_c: qc,
                        r_on: ron,
                        c_off: coff,
                        ..*base
                    });
                }
            }
        }
    }
    grid
}
