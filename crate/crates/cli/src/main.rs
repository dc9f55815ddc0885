//! obsim command line: run drops, sweeps and the backhaul comparison
//! from a TOML config, writing deterministic CSVs plus reproducibility
//! metadata under the output directory.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use obsim_core::config::{parse_config, RunConfig};
use obsim_core::experiments::output::{
    write_backhaul_csv, write_cdf_csv, write_meta, write_summary_csv, write_trace_csv,
};
use obsim_core::experiments::{compare_backhaul, metrics, run_drop, sweep, PointRow, SweepSpec};
use obsim_core::rng::derive_seed;
use obsim_core::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;

#[derive(Parser)]
#[command(name = "obsim", version, about = "Two-tier cellular offload simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured point and write summary.csv / cdf.csv
    Run(CommonArgs),
    /// Sweep the configured variable across its values
    Sweep(CommonArgs),
    /// Compare cell splitting against femtocell offload (backhaul.csv)
    CompareBackhaul(CommonArgs),
    /// Parse and validate a config file
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Override the configured base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override drops per point
    #[arg(long)]
    drops: Option<usize>,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
    /// Write per-iteration solver traces (run command only)
    #[arg(long)]
    trace: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Run(args) => dispatch(args, cmd_run),
        Cmd::Sweep(args) => dispatch(args, cmd_sweep),
        Cmd::CompareBackhaul(args) => dispatch(args, cmd_compare),
        Cmd::Validate { config } => parse_config(&config).map(|_| {
            println!("ok: {}", config.display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Solver { .. } => ExitCode::from(EXIT_SOLVER),
                _ => ExitCode::from(EXIT_CONFIG),
            }
        }
    }
}

struct Prepared {
    cfg: RunConfig,
    args: CommonArgs,
    started: Instant,
}

fn dispatch(args: CommonArgs, f: fn(&Prepared) -> Result<(), Error>) -> Result<(), Error> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(drops) = args.drops {
        if drops == 0 {
            return Err(Error::config("--drops must be >= 1"));
        }
        cfg.sweep.drops_per_point = drops;
    }
    if let Some(jobs) = args.jobs {
        // Ignore the error if a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    std::fs::create_dir_all(&args.out)?;
    let prepared = Prepared {
        cfg,
        args,
        started: Instant::now(),
    };
    f(&prepared)
}

fn finish(p: &Prepared) -> Result<(), Error> {
    let command: Vec<String> = std::env::args().collect();
    write_meta(
        &p.args.out.join("meta.txt"),
        env!("CARGO_PKG_VERSION"),
        &command.join(" "),
        p.cfg.base_seed,
        p.started.elapsed().as_secs_f64(),
        &p.cfg.echo(),
    )
}

fn cmd_run(p: &Prepared) -> Result<(), Error> {
    use rayon::prelude::*;
    let ctx = p.cfg.to_drop_context(p.args.trace)?;
    let drops = p.cfg.sweep.drops_per_point;
    let seeds: Vec<u64> = (0..drops)
        .map(|d| derive_seed(p.cfg.base_seed, &[0, d as u64]))
        .collect();
    let results: Result<Vec<_>, Error> = seeds.par_iter().map(|s| run_drop(&ctx, *s)).collect();
    let mut results = results?;
    results.sort_by_key(|r| r.seed);
    if p.args.trace {
        for r in &results {
            write_trace_csv(
                &p.args.out.join(format!("trace_drop_{}.csv", r.seed)),
                &r.trace,
            )?;
        }
    }
    let summary = metrics(&results, ctx.economics.floor_mbps());
    let row = PointRow {
        label: "run".into(),
        value: 0.0,
        summary,
        gain_mean: 1.0,
        gain_edge: 1.0,
        gain_geomean: 1.0,
    };
    write_summary_csv(&p.args.out.join("summary.csv"), &[row])?;
    let mut pooled: Vec<f64> = results
        .iter()
        .flat_map(|r| r.per_ms_rate_bps.iter().map(|x| x / 1e6))
        .collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    write_cdf_csv(&p.args.out.join("cdf.csv"), &[("run".into(), pooled)])?;
    finish(p)?;
    println!(
        "run: {} drops, mean rate {:.4} Mbps, geomean {:.4} Mbps",
        summary.n_drops, summary.mean_rate_mbps, summary.geomean_rate_mbps
    );
    Ok(())
}

fn cmd_sweep(p: &Prepared) -> Result<(), Error> {
    let ctx = p.cfg.to_drop_context(false)?;
    let spec = SweepSpec {
        drops_per_point: p.cfg.sweep.drops_per_point,
        ..p.cfg.sweep_spec()
    };
    let out = sweep(&ctx, &spec, p.cfg.base_seed)?;
    write_summary_csv(&p.args.out.join("summary.csv"), &out.rows)?;
    write_cdf_csv(&p.args.out.join("cdf.csv"), &out.cdf)?;
    finish(p)?;
    for row in &out.rows {
        println!(
            "{}: mean {:.4} Mbps (gain {:.3}), edge {:.4}, geomean {:.4}, gap {:.3}",
            row.label,
            row.summary.mean_rate_mbps,
            row.gain_mean,
            row.summary.edge_rate_mbps,
            row.summary.geomean_rate_mbps,
            row.summary.dual_gap_median
        );
    }
    Ok(())
}

fn cmd_compare(p: &Prepared) -> Result<(), Error> {
    let ctx = p.cfg.to_drop_context(false)?;
    let out = compare_backhaul(
        &ctx,
        &p.cfg.compare.split_factors,
        &p.cfg.compare.prices,
        p.cfg.compare.adoption_rate,
        p.cfg.sweep.drops_per_point,
        p.cfg.base_seed,
    )?;
    write_backhaul_csv(&p.args.out.join("backhaul.csv"), &out.rows)?;
    finish(p)?;
    for row in &out.rows {
        println!(
            "{} ({}): +{:.2} Mbps backhaul -> geomean {:.4} Mbps",
            row.method,
            obsim_core::experiments::output::fmt_g6(row.param),
            row.additional_backhaul_mbps,
            row.geomean_rate_mbps
        );
    }
    Ok(())
}
