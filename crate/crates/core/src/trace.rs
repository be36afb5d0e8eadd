//! Convergence trace files (CSV).

use std::io::{self, Write};

use crate::engine::TraceRecord;
use crate::error::{Error, Result};
use crate::scalar::Fitness;

pub const TRACE_HEADER: &str = "seconds,evaluations,generation,population,fitness";

/// Write records with the standard header. Floats use their shortest
/// round-trip representation, so parsing the output is lossless.
pub fn write_trace<S: Fitness>(mut out: impl Write, records: &[TraceRecord<S>]) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.seconds, r.evaluations, r.generation, r.population, r.fitness
        )?;
    }
    Ok(())
}

pub fn parse_trace<S: Fitness>(text: &str) -> Result<Vec<TraceRecord<S>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header '{TRACE_HEADER}'"),
            })
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse {
            line: idx + 1,
            message: format!("bad {what}"),
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [seconds, evaluations, generation, population, fitness] = fields[..] else {
            return Err(bad("field count"));
        };
        records.push(TraceRecord {
            seconds: seconds.parse().map_err(|_| bad("seconds"))?,
            evaluations: evaluations.parse().map_err(|_| bad("evaluations"))?,
            generation: generation.parse().map_err(|_| bad("generation"))?,
            population: population.parse().map_err(|_| bad("population"))?,
            fitness: S::parse_token(fitness).ok_or_else(|| bad("fitness"))?,
        });
    }
    Ok(records)
}

/// Elitist fitness, time, and evaluations never decrease.
pub fn is_monotone<S: Fitness>(records: &[TraceRecord<S>]) -> bool {
    records
        .windows(2)
        .all(|w| w[1].fitness >= w[0].fitness && w[1].seconds >= w[0].seconds && w[1].evaluations >= w[0].evaluations)
}
