//! Run settings shared by all subcommands: flags first, then an optional
//! `key=value` config file, then built-in defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rfmems_match::{CouplerMode, LossModel};

use crate::parse::{parse_frequency, parse_quantity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Operating frequency (620e6, 620M, 620MHz, 0.62GHz) [default: 620MHz]
    #[arg(long, global = true, value_parser = parse_frequency)]
    pub freq: Option<f64>,
    /// Coupler model of the phase stage: ideal or lumped [default: ideal]
    #[arg(long, global = true)]
    pub mode: Option<CouplerMode>,
    /// Inductor quality factor [default: 30]
    #[arg(long = "q-l", global = true, value_parser = parse_quantity)]
    pub q_l: Option<f64>,
    /// Capacitor quality factor [default: 100]
    #[arg(long = "q-c", global = true, value_parser = parse_quantity)]
    pub q_c: Option<f64>,
    /// Relay contact resistance in ohms [default: 1.5]
    #[arg(long = "r-on", global = true, value_parser = parse_quantity)]
    pub r_on: Option<f64>,
    /// Open-relay capacitance (50f, 5e-14) [default: 50f]
    #[arg(long = "c-off", global = true, value_parser = parse_quantity)]
    pub c_off: Option<f64>,
    /// Ignore every loss mechanism
    #[arg(long, global = true)]
    pub lossless: bool,
    /// Write data here instead of stdout
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for randomized searches [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// File of `key=value` lines using the long flag names
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub frequency: f64,
    pub mode: CouplerMode,
    pub loss: LossModel,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
    pub threads: Option<usize>,
}

const KEYS: [&str; 11] = [
    "freq", "mode", "q-l", "q-c", "r-on", "c-off", "lossless", "output", "format", "seed",
    "threads",
];

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(format!(
                "{}:{}: unknown key `{}`",
                path.display(),
                i + 1,
                k.trim()
            ));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn from_file<T>(
    flag: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, String> {
    match (flag, file.get(key)) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(raw)) => parse(raw)
            .map(Some)
            .map_err(|e| format!("config `{key}`: {e}")),
        (None, None) => Ok(None),
    }
}

impl RunArgs {
    /// Merges flags with the config file. Errors are usage errors.
    pub fn resolve(&self) -> Result<RunConfig, String> {
        let file = match &self.config {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        let number = |s: &str| s.parse::<u64>().map_err(|e| e.to_string());
        let defaults = LossModel::default();
        let lossless = self.lossless
            || from_file(None, &file, "lossless", |s| {
                s.parse::<bool>().map_err(|e| e.to_string())
            })?
            .unwrap_or(false);
        let loss = LossModel {
            q_l: from_file(self.q_l, &file, "q-l", parse_quantity)?.unwrap_or(defaults.q_l),
            q_c: from_file(self.q_c, &file, "q-c", parse_quantity)?.unwrap_or(defaults.q_c),
            r_on: from_file(self.r_on, &file, "r-on", parse_quantity)?.unwrap_or(defaults.r_on),
            c_off: from_file(self.c_off, &file, "c-off", parse_quantity)?.unwrap_or(defaults.c_off),
            lossless,
            ..defaults
        };
        loss.validate().map_err(|e| e.to_string())?;
        let format = from_file(self.format, &file, "format", |s| Format::from_str(s, true))?;
        Ok(RunConfig {
            frequency: from_file(self.freq, &file, "freq", parse_frequency)?.unwrap_or(620e6),
            mode: from_file(self.mode, &file, "mode", |s| s.parse())?.unwrap_or_default(),
            loss,
            output: from_file(self.output.clone(), &file, "output", |s| {
                Ok(PathBuf::from(s))
            })?,
            format,
            seed: from_file(self.seed, &file, "seed", number)?.unwrap_or(0),
            threads: from_file(self.threads, &file, "threads", |s| {
                s.parse::<usize>().map_err(|e| e.to_string())
            })?,
        })
    }
}
