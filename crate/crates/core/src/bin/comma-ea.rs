use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use comma_ea::batch::par_map;
use comma_ea::bench::measure_throughput;
use comma_ea::checks::{run_suite, CHECKER_IDS};
use comma_ea::config::{parse_config, CheckerSuiteConfig, ExperimentConfig, OutputFormat, ParsedConfig};
use comma_ea::level::{run_threshold_sweep, SweepPlan};
use comma_ea::number_theory::{convergents, e_continued_fraction, gap_bound_scan};
use comma_ea::report::{to_json, write_header, RUN_HEADER};
use comma_ea::surrogate::{surrogate_step, Influx, SurrogateConfig};
use comma_ea::{run_until, Error, RngStream};

#[derive(Parser)]
#[command(name = "comma-ea", version, about = "Simulation and bound-checking lab for the (mu,lambda) EA on OneMax")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "COMMA_EA_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Independent replicates of one experiment.
    Run,
    /// Threshold sweep over the config's [sweep] grid.
    Sweep,
    /// Checker suite; exits 1 on any in-hypothesis failure.
    Check {
        /// Comma-separated checker ids, instead of a suite config.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        #[arg(long)]
        tolerance_sigma: Option<f64>,
    },
    /// Convergents of e and the gap scan.
    Approx {
        #[arg(long, default_value_t = 10_000)]
        mu_max: u64,
        #[arg(long, default_value_t = 2.25)]
        d: f64,
        #[arg(long, default_value_t = 20)]
        terms: usize,
    },
    /// Trajectories of the top-level surrogate chain.
    Surrogate {
        #[arg(long)]
        mu: u64,
        #[arg(long)]
        lambda: u64,
        #[arg(long)]
        x0: u64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        /// Constant influx per step.
        #[arg(long)]
        influx: Option<f64>,
    },
    /// Engine throughput in offspring evaluations per second.
    Bench {
        #[arg(long, default_value_t = 150)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        mu: usize,
        #[arg(long, default_value_t = 33)]
        lambda: usize,
        #[arg(long, default_value_t = 2.0)]
        seconds: f64,
    },
}

fn load(common: &Common) -> Result<ParsedConfig, Error> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("--config is required for this command".into()))?;
    let src = fs::read_to_string(path)?;
    parse_config(&src)
}

fn experiment(common: &Common) -> Result<ExperimentConfig, Error> {
    match load(common)? {
        ParsedConfig::Experiment(mut c) => {
            if let Some(s) = common.seed {
                c.seed = s;
            }
            if common.jobs.is_some() {
                c.jobs = common.jobs;
            }
            if let Some(f) = common.format {
                c.output.format = f;
            }
            if let Some(d) = &common.out {
                c.output.dir = Some(d.clone());
            }
            Ok(c)
        }
        ParsedConfig::Checks(_) => Err(Error::InvalidParameter(
            "expected an experiment config, found a checker suite".into(),
        )),
    }
}

fn out_dir(dir: Option<&PathBuf>) -> Result<PathBuf, Error> {
    let dir = dir.cloned().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_artifact(path: &Path, body: &[u8]) -> Result<(), Error> {
    fs::write(path, body)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_run(common: &Common) -> Result<bool, Error> {
    let cfg = experiment(common)?;
    let dir = out_dir(cfg.output.dir.as_ref())?;
    let results = par_map(cfg.jobs, cfg.replicates, |i| {
        run_until(&cfg, &mut RngStream::new(cfg.seed, i as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let toml = cfg.to_toml();
    match cfg.output.format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_header(&mut buf, cfg.seed, &toml)?;
            writeln!(buf, "{RUN_HEADER}")?;
            for (i, r) in results.iter().enumerate() {
                writeln!(buf, "{i},{},{},{}", r.generations, r.evaluations, r.success)?;
            }
            write_artifact(&dir.join("runs.csv"), &buf)?;
            for (i, r) in results.iter().enumerate() {
                if let Some(t) = &r.telemetry {
                    let mut buf = Vec::new();
                    write_header(&mut buf, cfg.seed, &toml)?;
                    t.write_csv(&mut buf)?;
                    write_artifact(&dir.join(format!("telemetry_{i}.csv")), &buf)?;
                }
            }
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "version": comma_ea::report::VERSION,
                "seed": cfg.seed,
                "config": cfg,
                "runs": results,
                "telemetry": results.iter().map(|r| r.telemetry.as_ref()).collect::<Vec<_>>(),
            });
            write_artifact(&dir.join("runs.json"), to_json(&doc)?.as_bytes())?;
        }
    }
    Ok(true)
}

fn cmd_sweep(common: &Common) -> Result<bool, Error> {
    let cfg = experiment(common)?;
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::InvalidParameter("config has no [sweep] section".into()))?;
    let plan = SweepPlan {
        n: cfg.n,
        mu_grid: spec.mu_grid,
        ratio_grid: spec.ratio_grid,
        rounding: spec.rounding,
        budget_generations: cfg.budget_generations(),
        replicates: cfg.replicates,
        seed: cfg.seed,
    };
    let surface = run_threshold_sweep(&plan, cfg.jobs)?;
    let dir = out_dir(cfg.output.dir.as_ref())?;
    match cfg.output.format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_header(&mut buf, cfg.seed, &cfg.to_toml())?;
            surface.write_csv(&mut buf)?;
            write_artifact(&dir.join("sweep.csv"), &buf)?;
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "version": comma_ea::report::VERSION, "seed": cfg.seed, "config": cfg, "cells": surface.cells,
            });
            write_artifact(&dir.join("sweep.json"), to_json(&doc)?.as_bytes())?;
        }
    }
    Ok(true)
}

fn cmd_check(common: &Common, suite: &[String], sigma: Option<f64>) -> Result<bool, Error> {
    let mut cfg = if !suite.is_empty() {
        CheckerSuiteConfig::new(suite.iter().cloned())?
    } else {
        match load(common)? {
            ParsedConfig::Checks(c) => c,
            ParsedConfig::Experiment(_) => {
                return Err(Error::InvalidParameter(format!(
                    "expected a checker suite; known ids: {}",
                    CHECKER_IDS.join(",")
                )))
            }
        }
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.jobs.is_some() {
        cfg.jobs = common.jobs;
    }
    if let Some(s) = sigma {
        cfg.tolerance_sigma = s;
    }
    let report = run_suite(&cfg)?;
    let dir = out_dir(common.out.as_ref())?;
    write_artifact(&dir.join("checks.json"), to_json(&report)?.as_bytes())?;
    for r in &report.reports {
        let tag = match (r.hypothesis_ok, r.pass) {
            (true, true) => "pass",
            (true, false) => "FAIL",
            (false, true) => "pass (outside hypothesis)",
            (false, false) => "fail (outside hypothesis)",
        };
        eprintln!("{:<9} {tag}: empirical {:.6e} bound {:.6e}", r.lemma, r.empirical, r.bound);
    }
    Ok(report.failures() == 0)
}

fn cmd_approx(common: &Common, mu_max: u64, d: f64, terms: usize) -> Result<bool, Error> {
    let dir = out_dir(common.out.as_ref())?;
    let scan = gap_bound_scan(mu_max, d)?;
    let cf = e_continued_fraction(terms)?;
    let conv = convergents(&cf);
    let echo = format!("mu_max = {mu_max}\nd = {d}\nterms = {terms}\n");
    match common.format.unwrap_or_default() {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_header(&mut buf, 0, &echo)?;
            scan.write_csv(&mut buf)?;
            write_artifact(&dir.join("scan.csv"), &buf)?;
            let mut buf = Vec::new();
            write_header(&mut buf, 0, &echo)?;
            writeln!(buf, "index,term,p,q,error,within_inverse_square")?;
            for (c, a) in conv.iter().zip(&cf) {
                writeln!(buf, "{},{a},{},{},{:e},{}", c.index, c.p, c.q, c.error(), c.within_inverse_square())?;
            }
            write_artifact(&dir.join("convergents.csv"), &buf)?;
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "version": comma_ea::report::VERSION, "mu_max": mu_max, "d": d,
                "continued_fraction": cf, "convergents": conv,
                "min_value": scan.min_value, "argmin_mu": scan.argmin_mu, "exceptions": scan.exceptions,
            });
            write_artifact(&dir.join("approx.json"), to_json(&doc)?.as_bytes())?;
        }
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_surrogate(
    common: &Common,
    mu: u64,
    lambda: u64,
    x0: u64,
    steps: usize,
    trials: u64,
    influx: Option<f64>,
) -> Result<bool, Error> {
    let influx = influx.map_or(Influx::None, Influx::Constant);
    let cfg = SurrogateConfig::new(mu, lambda, influx.clone())?;
    let seed = common.seed.unwrap_or(0);
    let rows = par_map(common.jobs, trials as usize, |i| -> Result<Vec<(u64, bool)>, Error> {
        let mut rng = RngStream::new(seed, i as u64);
        let mut x = x0;
        let mut out = vec![(x, false)];
        for t in 0..steps {
            let s = surrogate_step(x, &cfg, t, &mut rng)?;
            x = s.next;
            out.push((x, s.clamped));
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let dir = out_dir(common.out.as_ref())?;
    let echo = toml::to_string(&serde_json::json!({
        "mu": mu, "lambda": lambda, "x0": x0, "steps": steps, "trials": trials,
        "influx": influx,
    }))
    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut buf = Vec::new();
    write_header(&mut buf, seed, &echo)?;
    writeln!(buf, "trial,step,state,clamped")?;
    for (i, traj) in rows.iter().enumerate() {
        for (t, (x, c)) in traj.iter().enumerate() {
            writeln!(buf, "{i},{t},{x},{c}")?;
        }
    }
    write_artifact(&dir.join("surrogate.csv"), &buf)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let outcome = match &cli.command {
        Command::Run => cmd_run(c),
        Command::Sweep => cmd_sweep(c),
        Command::Check { suite, tolerance_sigma } => cmd_check(c, suite, *tolerance_sigma),
        Command::Approx { mu_max, d, terms } => cmd_approx(c, *mu_max, *d, *terms),
        Command::Surrogate { mu, lambda, x0, steps, trials, influx } => {
            cmd_surrogate(c, *mu, *lambda, *x0, *steps, *trials, *influx)
        }
        Command::Bench { n, mu, lambda, seconds } => {
            measure_throughput(*n, *mu, *lambda, *seconds, c.seed.unwrap_or(0)).and_then(|r| {
                println!("{}", to_json(&r)?.trim_end());
                Ok(true)
            })
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
