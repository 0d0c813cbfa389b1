//! One parameter struct per experiment kind, each with `validate` and `run`.

mod analytic;
mod coding;
mod regions;

use std::time::Instant;

use serde::de::DeserializeOwned;

use crate::config::{ExperimentConfig, Kind, Problems, SCHEMA_VERSION};
use crate::record::{Recorder, ResultRecord};
use crate::CliError;

pub use analytic::{BandwidthLimit, DuncanRate, FeedbackMi, SamplingConvergence, SnrMonotonicity};
pub use coding::{BcCoding, IcCoding, MacCoding, TypicalityStability};
pub use regions::{Region, RegionLimit};

pub(crate) type Outcome = Result<Recorder, CliError>;

pub(crate) fn core_err(e: ctgauss_core::Error) -> CliError {
    if e.is_numerical() {
        CliError::Numerical(e.to_string())
    } else {
        CliError::Validation(vec![e.to_string()])
    }
}

/// Seeds are emitted as JSON and CSV numbers, so they must be exact in f64.
const MAX_SEED: u64 = 1 << 53;

fn typed<T: DeserializeOwned>(cfg: &ExperimentConfig, check: impl Fn(&T) -> Problems) -> Result<T, Vec<String>> {
    let p: T = cfg.params()?;
    check(&p).finish()?;
    Ok(p)
}

enum Parsed {
    BandwidthLimit(BandwidthLimit),
    DuncanRate(DuncanRate),
    SamplingConvergence(SamplingConvergence),
    FeedbackMi(FeedbackMi),
    SnrMonotonicity(SnrMonotonicity),
    Region(Region),
    RegionLimit(RegionLimit),
    MacCoding(MacCoding),
    IcCoding(IcCoding),
    BcCoding(BcCoding),
    TypicalityStability(TypicalityStability),
}

fn parse(cfg: &ExperimentConfig) -> Result<Parsed, Vec<String>> {
    if cfg.seed > MAX_SEED {
        return Err(vec![format!("seed: must be <= 2^53, got {}", cfg.seed)]);
    }
    Ok(match cfg.kind {
        Kind::BandwidthLimit => Parsed::BandwidthLimit(typed(cfg, BandwidthLimit::validate)?),
        Kind::DuncanRate => Parsed::DuncanRate(typed(cfg, DuncanRate::validate)?),
        Kind::SamplingConvergence => Parsed::SamplingConvergence(typed(cfg, SamplingConvergence::validate)?),
        Kind::FeedbackMi => Parsed::FeedbackMi(typed(cfg, FeedbackMi::validate)?),
        Kind::SnrMonotonicity => Parsed::SnrMonotonicity(typed(cfg, SnrMonotonicity::validate)?),
        Kind::Region => Parsed::Region(typed(cfg, Region::validate)?),
        Kind::RegionLimit => Parsed::RegionLimit(typed(cfg, RegionLimit::validate)?),
        Kind::MacCoding => Parsed::MacCoding(typed(cfg, MacCoding::validate)?),
        Kind::IcCoding => Parsed::IcCoding(typed(cfg, IcCoding::validate)?),
        Kind::BcCoding => Parsed::BcCoding(typed(cfg, BcCoding::validate)?),
        Kind::TypicalityStability => Parsed::TypicalityStability(typed(cfg, TypicalityStability::validate)?),
    })
}

/// Every problem `run` would reject the config for; empty when it would
/// be accepted.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    parse(cfg).err().unwrap_or_default()
}

/// Validates and runs one experiment. Results are in nats.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultRecord, CliError> {
    let parsed = parse(cfg).map_err(CliError::Validation)?;
    let start = Instant::now();
    let rec = match &parsed {
        Parsed::BandwidthLimit(p) => p.run(),
        Parsed::DuncanRate(p) => p.run(),
        Parsed::SamplingConvergence(p) => p.run(),
        Parsed::FeedbackMi(p) => p.run(),
        Parsed::SnrMonotonicity(p) => p.run(),
        Parsed::Region(p) => p.run(cfg),
        Parsed::RegionLimit(p) => p.run(),
        Parsed::MacCoding(p) => p.run(cfg.seed),
        Parsed::IcCoding(p) => p.run(cfg.seed),
        Parsed::BcCoding(p) => p.run(cfg.seed),
        Parsed::TypicalityStability(p) => p.run(cfg.seed),
    }?;
    Ok(ResultRecord {
        id: cfg.id.clone(),
        kind: cfg.kind,
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        units: "nats".into(),
        params: cfg.params.clone(),
        metrics: rec.metrics,
        verdicts: rec.verdicts,
        table: rec.table,
        artifact: rec.artifact,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}
