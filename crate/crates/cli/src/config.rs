//! Run settings merged from flags, an optional TOML file, and defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gomea_core::engine::{ModelKind, PopulationSizing, Termination};
use gomea_core::ims::ImsConfig;
use gomea_core::Fitness;
use serde::Deserialize;

use crate::args::{Engine, RunArgs};

pub const DEFAULT_HEARTBEAT: f64 = 0.5;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub engine: Option<Engine>,
    pub model: Option<String>,
    pub max_evaluations: Option<f64>,
    pub max_seconds: Option<f64>,
    pub target_fitness: Option<toml::Value>,
    pub population_size: Option<usize>,
    pub workers: Option<usize>,
    pub trace: Option<PathBuf>,
    pub heartbeat: Option<f64>,
    #[serde(default)]
    pub ims: ImsFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImsFile {
    pub n_base: Option<usize>,
    pub c: Option<u64>,
    pub max_populations: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

/// Everything `run` needs, with the fitness target still unparsed because
/// its type depends on the instance.
#[derive(Debug)]
pub struct Settings {
    pub seed: u64,
    pub engine: Engine,
    pub model: ModelKind,
    pub sizing: PopulationSizing,
    pub max_evaluations: Option<f64>,
    pub max_seconds: Option<f64>,
    pub target: Option<String>,
    pub workers: usize,
    pub trace: Option<PathBuf>,
    pub heartbeat: Option<f64>,
}

impl Settings {
    pub fn resolve(args: &RunArgs, global_seed: Option<u64>) -> Result<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let model = args.model.clone().or(file.model).unwrap_or_else(|| "learned-lt".into());
        let model = parse_model(&model)?;

        let ims_flag = args.ims_n_base.is_some() || args.ims_c.is_some() || args.ims_max_populations.is_some();
        let defaults = ImsConfig::default();
        let ims = ImsConfig {
            n_base: args.ims_n_base.or(file.ims.n_base).unwrap_or(defaults.n_base),
            c: args.ims_c.or(file.ims.c).unwrap_or(defaults.c),
            max_populations: args
                .ims_max_populations
                .or(file.ims.max_populations)
                .unwrap_or(defaults.max_populations),
        };
        let sizing = match args
            .population_size
            .or(if ims_flag { None } else { file.population_size })
        {
            Some(n) => PopulationSizing::Fixed(n),
            None => PopulationSizing::Ims(ims),
        };

        let target = match (&args.target_fitness, &args.stop_on_optimum) {
            (Some(t), _) | (None, Some(t)) => Some(t.clone()),
            (None, None) => file.target_fitness.map(|v| match v {
                toml::Value::String(s) => s,
                other => other.to_string(),
            }),
        };

        let heartbeat = args.heartbeat.or(file.heartbeat).unwrap_or(DEFAULT_HEARTBEAT);
        if heartbeat.is_nan() || heartbeat < 0.0 {
            bail!("heartbeat must be non-negative");
        }

        Ok(Self {
            seed: global_seed.or(file.seed).unwrap_or(0),
            engine: args.engine.or(file.engine).unwrap_or(Engine::Serial),
            model,
            sizing,
            max_evaluations: args.max_evaluations.or(file.max_evaluations),
            max_seconds: args.max_seconds.or(file.max_seconds),
            target,
            workers: args.workers.or(file.workers).unwrap_or(1),
            trace: args.trace.clone().or(file.trace),
            heartbeat: (heartbeat > 0.0).then_some(heartbeat),
        })
    }

    pub fn termination<S: Fitness>(&self) -> Result<Termination<S>> {
        let target_fitness = match &self.target {
            Some(t) => Some(
                S::parse_token(t.trim())
                    .with_context(|| format!("target fitness '{t}' does not fit the instance weights"))?,
            ),
            None => None,
        };
        Ok(Termination {
            max_evaluations: self.max_evaluations,
            max_seconds: self.max_seconds,
            target_fitness,
            max_generations: None,
        })
    }
}

pub fn parse_model(text: &str) -> Result<ModelKind> {
    let (name, bound) = match text.split_once(':') {
        Some((name, b)) => {
            let b: usize = b.parse().with_context(|| format!("bad set size bound in '{text}'"))?;
            if b == 0 {
                bail!("set size bound must be positive");
            }
            (name, Some(b))
        }
        None => (text, None),
    };
    Ok(match (name, bound) {
        ("learned-lt", b) => ModelKind::LearnedLt(b),
        ("flt", None) => ModelKind::Flt,
        ("bflt", Some(b)) => ModelKind::Bflt(b),
        ("univariate", None) => ModelKind::Univariate,
        ("bflt", None) => bail!("bflt needs a bound, e.g. bflt:10"),
        _ => bail!("unknown model '{text}' (expected learned-lt, flt, bflt:B or univariate)"),
    })
}
