//! CSV formats for datasets and branch trees.
//!
//! A dataset file starts with `# key=value` comment lines carrying the
//! generating parameters, followed by the header
//! `particle_id,branch_index,decay_time` and one row per record.

use std::io::{BufRead, Write};

use super::{BranchTree, DecayDataset, ObserverRecord, SamplerKind};
use crate::analytic::RateParams;
use crate::error::{Error, Result};
use crate::numeric::fmt_f64;

pub const DATASET_HEADER: &str = "particle_id,branch_index,decay_time";
pub const TREE_HEADER: &str = "event_ordinal,event_time";

pub fn write_dataset<W: Write>(dataset: &DecayDataset, mut out: W) -> Result<()> {
    writeln!(out, "# lambda_B={}", fmt_f64(dataset.params().lambda_b()))?;
    writeln!(out, "# epsilon={}", fmt_f64(dataset.params().epsilon()))?;
    writeln!(out, "# seed={}", dataset.seed())?;
    writeln!(out, "# sampler={}", dataset.sampler())?;
    writeln!(out, "{DATASET_HEADER}")?;
    for r in dataset.records() {
        writeln!(
            out,
            "{},{},{}",
            r.particle_id,
            r.branch_index,
            fmt_f64(r.decay_time)
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_tree<W: Write>(tree: &BranchTree, mut out: W) -> Result<()> {
    writeln!(out, "{TREE_HEADER}")?;
    for (k, &t) in tree.spine_event_times().iter().enumerate() {
        writeln!(out, "{},{}", k + 1, fmt_f64(t))?;
    }
    out.flush()?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {name} '{}'", raw.trim())))
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<DecayDataset> {
    let mut lambda_b = None;
    let mut epsilon = None;
    let mut seed = None;
    let mut sampler = None;
    let mut header_seen = false;
    let mut records = Vec::new();
    let mut last_line = 0;

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if header_seen {
                continue;
            }
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "lambda_B" => lambda_b = Some(parse_field::<f64>(lineno, "lambda_B", value)?),
                    "epsilon" => epsilon = Some(parse_field::<f64>(lineno, "epsilon", value)?),
                    "seed" => seed = Some(parse_field::<u64>(lineno, "seed", value)?),
                    "sampler" => {
                        sampler = Some(
                            value
                                .parse::<SamplerKind>()
                                .map_err(|e| parse_err(lineno, e.to_string()))?,
                        )
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if trimmed != DATASET_HEADER {
                return Err(parse_err(
                    lineno,
                    format!("expected header '{DATASET_HEADER}', found '{trimmed}'"),
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let record = ObserverRecord {
            particle_id: parse_field(lineno, "particle_id", fields[0])?,
            branch_index: parse_field(lineno, "branch_index", fields[1])?,
            decay_time: parse_field(lineno, "decay_time", fields[2])?,
        };
        if record.particle_id != records.len() as u64 {
            return Err(parse_err(
                lineno,
                format!(
                    "particle_id {} out of sequence (expected {})",
                    record.particle_id,
                    records.len()
                ),
            ));
        }
        if record.branch_index < 1 {
            return Err(parse_err(lineno, "branch_index must be >= 1"));
        }
        if !(record.decay_time > 0.0 && record.decay_time.is_finite()) {
            return Err(parse_err(
                lineno,
                format!("decay_time must be positive, found {}", record.decay_time),
            ));
        }
        records.push(record);
    }

    let end = last_line.max(1);
    if !header_seen {
        return Err(parse_err(end, "missing header line"));
    }
    let missing = |key: &str| parse_err(end, format!("missing '# {key}=' metadata line"));
    let lambda_b = lambda_b.ok_or_else(|| missing("lambda_B"))?;
    let epsilon = epsilon.ok_or_else(|| missing("epsilon"))?;
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let sampler = sampler.ok_or_else(|| missing("sampler"))?;
    let params = RateParams::new(lambda_b, epsilon).map_err(|e| parse_err(end, e.to_string()))?;
    DecayDataset::new(records, params, seed, sampler)
}
