use std::fs;

use anyhow::{bail, Context, Result};
use gomea_core::maxcut::{generate_complete, generate_torus, parse_edge_list};
use gomea_core::{Fitness, MaxCutInstance, WeightScheme};

use crate::args::InstanceSource;

/// Integer weights stay exact; anything else is read as `f64`.
pub enum Loaded {
    Int(MaxCutInstance<i64>),
    Real(MaxCutInstance<f64>),
}

pub fn load(source: &InstanceSource, seed: u64) -> Result<Loaded> {
    if let Some(spec) = &source.generate {
        let (kind, size) = spec
            .split_once(':')
            .with_context(|| format!("generator spec '{spec}' should look like complete:N or torus:WxH"))?;
        return generate(kind, size, &source.weights, seed).map(Loaded::Int);
    }
    let path = source.instance.as_ref().expect("clap requires an instance source");
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    match parse_edge_list::<i64>(&text) {
        Ok(inst) => Ok(Loaded::Int(inst)),
        Err(int_err) => match parse_edge_list::<f64>(&text) {
            Ok(inst) => Ok(Loaded::Real(inst)),
            Err(_) => Err(int_err).with_context(|| format!("invalid instance {}", path.display())),
        },
    }
}

pub fn parse_weights(text: &str) -> Result<WeightScheme> {
    if text == "unit" {
        return Ok(WeightScheme::Unit);
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts[..] {
        ["uniform", lo, hi] => {
            let lo: i64 = lo.parse().with_context(|| format!("bad lower weight in '{text}'"))?;
            let hi: i64 = hi.parse().with_context(|| format!("bad upper weight in '{text}'"))?;
            Ok(WeightScheme::UniformInt { lo, hi })
        }
        _ => bail!("unknown weight scheme '{text}' (expected unit or uniform:LO:HI)"),
    }
}

pub fn generate<S: Fitness>(kind: &str, size: &str, weights: &str, seed: u64) -> Result<MaxCutInstance<S>> {
    let scheme = parse_weights(weights)?;
    let number = |t: &str| t.parse::<usize>().with_context(|| format!("bad size '{size}'"));
    let instance = match kind {
        "complete" => generate_complete(number(size)?, scheme, seed)?,
        "torus" => {
            let (w, h) = size
                .split_once(['x', 'X'])
                .with_context(|| format!("torus size '{size}' should look like WxH"))?;
            generate_torus(number(w)?, number(h)?, scheme, seed)?
        }
        _ => bail!("unknown instance kind '{kind}' (expected complete or torus)"),
    };
    Ok(instance)
}
