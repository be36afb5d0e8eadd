mod args;
mod config;
mod instance;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Parser;
use gomea_core::engine::{run_parallel, run_serial, ModelKind, RunConfig, RunResult, StopReason};
use gomea_core::linkage::{learn_tree_upgma, weight_similarity};
use gomea_core::scheduling::group_stats;
use gomea_core::trace::write_trace;
use gomea_core::{build_lmig, build_vig, welsh_powell, Fitness, Fos, MaxCutInstance};

use args::{Cli, ColorStatsArgs, Command, Engine, GenerateArgs, OracleArgs, RunArgs};
use config::{parse_model, Settings};
use instance::Loaded;

const EXIT_BAD_INPUT: u8 = 2;
const EXIT_TARGET_UNREACHED: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed;
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args, seed),
        Command::Generate(args) => cmd_generate(&args, seed).map(|()| ExitCode::SUCCESS),
        Command::ColorStats(args) => cmd_color_stats(&args, seed).map(|()| ExitCode::SUCCESS),
        Command::Oracle(args) => cmd_oracle(&args, seed).map(|()| ExitCode::SUCCESS),
    };
    outcome.unwrap_or_else(|err| {
        eprintln!("error: {err:#}");
        ExitCode::from(EXIT_BAD_INPUT)
    })
}

fn cmd_run(args: &RunArgs, seed: Option<u64>) -> Result<ExitCode> {
    let settings = Settings::resolve(args, seed)?;
    match instance::load(&args.source, settings.seed)? {
        Loaded::Int(inst) => run_instance(inst, &settings),
        Loaded::Real(inst) => run_instance(inst, &settings),
    }
}

fn run_instance<S: Fitness>(inst: MaxCutInstance<S>, settings: &Settings) -> Result<ExitCode> {
    let termination = settings.termination::<S>()?;
    let target = termination.target_fitness;
    let mut config = RunConfig::new(settings.sizing, settings.model, settings.seed, termination);
    config.workers = settings.workers;
    config.heartbeat = settings.heartbeat;
    if matches!(settings.model, ModelKind::Flt | ModelKind::Bflt(_)) && inst.num_vertices() >= 2 {
        config.similarity = Some(weight_similarity(&inst));
    }

    let problem = Arc::new(inst.as_graybox());
    let result = match settings.engine {
        Engine::Serial => run_serial(problem, &config)?,
        Engine::Parallel => run_parallel(problem, &config)?,
    };

    if let Some(path) = &settings.trace {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut out = BufWriter::new(file);
        write_trace(&mut out, &result.trace)?;
        out.flush()?;
    }
    print!("{}", summary(&result));

    Ok(match target {
        Some(t) if !result.reached(t) => ExitCode::from(EXIT_TARGET_UNREACHED),
        _ => ExitCode::SUCCESS,
    })
}

fn summary<S: Fitness>(result: &RunResult<S>) -> String {
    let stop = match result.stop_reason {
        StopReason::TargetReached => "target-reached",
        StopReason::EvaluationBudget => "evaluation-budget",
        StopReason::TimeLimit => "time-limit",
        StopReason::GenerationLimit => "generation-limit",
        StopReason::Converged => "converged",
    };
    let mut text = String::new();
    let _ = writeln!(text, "fitness {}", result.best.fitness);
    let _ = writeln!(text, "evaluations {}", result.evaluations);
    let _ = writeln!(text, "generations {}", result.generations);
    let _ = writeln!(text, "stop {stop}");
    let _ = writeln!(text, "solution {}", bits(&result.best.genotype));
    text
}

fn bits(genotype: &[u8]) -> String {
    genotype.iter().map(|&b| char::from(b'0' + b)).collect()
}

fn cmd_generate(args: &GenerateArgs, seed: Option<u64>) -> Result<()> {
    let inst = instance::generate::<i64>(&args.kind, &args.size, &args.weights, seed.unwrap_or(0))?;
    let text = inst.to_edge_list();
    match &args.output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).map_err(Into::into),
    }
}

fn cmd_color_stats(args: &ColorStatsArgs, seed: Option<u64>) -> Result<()> {
    match instance::load(&args.source, seed.unwrap_or(0))? {
        Loaded::Int(inst) => color_stats(&inst, args),
        Loaded::Real(inst) => color_stats(&inst, args),
    }
}

fn color_stats<S: Fitness>(inst: &MaxCutInstance<S>, args: &ColorStatsArgs) -> Result<()> {
    let ell = inst.num_vertices();
    let fos = match &args.fos {
        Some(path) => read_fos(path, ell)?,
        None => match parse_model(&args.model)? {
            ModelKind::Univariate => Fos::univariate(ell),
            _ if ell < 2 => Fos::univariate(ell),
            ModelKind::Flt => learn_tree_upgma(&weight_similarity(inst), None)?,
            ModelKind::Bflt(b) => learn_tree_upgma(&weight_similarity(inst), Some(b))?,
            ModelKind::LearnedLt(_) => {
                anyhow::bail!("a learned tree changes every generation; pick flt, bflt:B or univariate")
            }
        },
    };
    let lmig = build_lmig(&fos, &build_vig(&inst.as_graybox()));
    let groups = welsh_powell(&lmig);
    println!("sets {}", fos.len());
    println!("lmig_edges {}", lmig.num_edges());
    print!("{}", group_stats(&groups));
    if args.groups {
        for (i, group) in groups.groups().iter().enumerate() {
            let members: Vec<String> = group.iter().map(usize::to_string).collect();
            println!("group {i}: {}", members.join(" "));
        }
    }
    Ok(())
}

fn read_fos(path: &std::path::Path, ell: usize) -> Result<Fos> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut sets = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let set = line
            .split_whitespace()
            .map(|t| match t.parse::<usize>() {
                Ok(u) if u < ell => Ok(u),
                _ => Err(anyhow::anyhow!(
                    "line {}: '{t}' is not a variable index below {ell}",
                    idx + 1
                )),
            })
            .collect::<Result<Vec<usize>>>()?;
        sets.push(set);
    }
    Ok(Fos::from_sets(sets))
}

fn cmd_oracle(args: &OracleArgs, seed: Option<u64>) -> Result<()> {
    let (value, genotype) = match instance::load(&args.source, seed.unwrap_or(0))? {
        Loaded::Int(inst) => {
            let (v, g) = inst.brute_force_optimum()?;
            (v.to_string(), g)
        }
        Loaded::Real(inst) => {
            let (v, g) = inst.brute_force_optimum()?;
            (v.to_string(), g)
        }
    };
    println!("optimum {value}");
    println!("solution {}", bits(&genotype));
    Ok(())
}
