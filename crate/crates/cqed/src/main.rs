use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cqed::experiments::{
    self, emit, load_config, ScenarioConfig, ScenarioResult, SweepPoint,
};
use cqed::Result;

#[derive(Parser)]
#[command(
    name = "cqed",
    version,
    about = "Truncated Fock-space simulator for driven three-level cavity QED"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its time series and summary
    Run {
        /// catalogue id, e.g. pdc-weak-epr
        scenario_id: String,
        /// TOML file whose keys override the preset
        #[arg(long)]
        config: Option<PathBuf>,
        /// output directory; falls back to the config's output_path
        #[arg(long)]
        out: Option<PathBuf>,
        /// write only this format (default: both)
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Evolve the exact and effective generators side by side and report the
    /// worst survival-probability gap
    Compare {
        scenario_id: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Rerun a scenario over a list of values of one numeric parameter
    Sweep {
        scenario_id: String,
        /// parameter to vary, e.g. tau or delta_cap
        #[arg(long)]
        vary: String,
        /// comma-separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// directory for per-point outputs (optional)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the scenario catalogue
    List,
}

fn print_merits(result: &ScenarioResult) {
    let merit = &result.summary.merit;
    if let Some(v) = merit.epr_sum_variance {
        println!("epr_sum_variance  {v:.6e}");
    }
    if let Some(q) = merit.epr_quality {
        println!("epr_quality       {q:.6}");
    }
    if let Some(v) = merit.squeeze_variance {
        println!("squeeze_variance  {v:.6e}");
    }
    if let Some(r) = merit.squeeze_factor_r {
        println!("squeeze_factor_r  {r:.6}");
    }
    if let Some(z) = merit.overlap {
        println!(
            "overlap           {:.6}{:+.6}i  |overlap|^2 {:.6}",
            z.re,
            z.im,
            z.norm_sqr()
        );
    }
    if let Some(d) = result.summary.divergence {
        println!("divergence        {d:.6e}");
    }
    for note in &result.provenance.notes {
        println!("note: {note}");
    }
}

fn run(
    scenario_id: &str,
    config_path: Option<&PathBuf>,
    out: Option<&PathBuf>,
    format: Option<Format>,
) -> Result<()> {
    let mut config = load_config(scenario_id, config_path.map(|p| p.as_path()))?;
    // the runner would write both formats on its own; keep emission here so
    // --format and --out can steer it
    let config_dir = config.output_path.take();
    let result = experiments::run_scenario(&config)?;
    print_merits(&result);
    let target = out
        .map(|p| p.to_path_buf())
        .or_else(|| config_dir.map(PathBuf::from));
    match target {
        Some(dir) => {
            let (csv, json) = match format {
                Some(Format::Csv) => (true, false),
                Some(Format::Json) => (false, true),
                None => (true, true),
            };
            for path in emit::write_outputs(&result, &dir, csv, json)? {
                println!("wrote {}", path.display());
            }
        }
        None => {
            println!("{}", emit::json_summary_string(&result)?);
        }
    }
    Ok(())
}

fn compare(scenario_id: &str, config_path: Option<&PathBuf>) -> Result<()> {
    let config = load_config(scenario_id, config_path.map(|p| p.as_path()))?;
    let divergence = experiments::compare_exact_effective(&config)?;
    println!("scenario          {scenario_id}");
    println!("initial state     {}", config.initial_state_label);
    println!("divergence        {divergence:.6e}");
    Ok(())
}

fn sweep_cmd(
    scenario_id: &str,
    vary: &str,
    values: &[f64],
    config_path: Option<&PathBuf>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let mut config: ScenarioConfig = load_config(scenario_id, config_path.map(|p| p.as_path()))?;
    config.output_path = None;
    let points = experiments::sweep(&config, vary, values)?;
    let mut first_err: Option<i32> = None;
    for (k, SweepPoint { value, outcome }) in points.iter().enumerate() {
        match outcome {
            Ok(result) => {
                let merit = &result.summary.merit;
                let headline = merit
                    .epr_quality
                    .map(|q| format!("epr_quality {q:.6}"))
                    .or_else(|| {
                        merit
                            .squeeze_factor_r
                            .map(|r| format!("squeeze_factor_r {r:.6}"))
                    })
                    .or_else(|| {
                        merit
                            .overlap
                            .map(|z| format!("|overlap|^2 {:.6}", z.norm_sqr()))
                    })
                    .or_else(|| {
                        result
                            .summary
                            .divergence
                            .map(|d| format!("divergence {d:.6e}"))
                    })
                    .unwrap_or_else(|| "done".into());
                println!("{vary} = {value:e}: {headline}");
                if let Some(dir) = out {
                    let sub = dir.join(format!("{scenario_id}-sweep-{k:03}"));
                    for path in emit::write_outputs(result, &sub, true, true)? {
                        println!("  wrote {}", path.display());
                    }
                }
            }
            Err(e) => {
                eprintln!("{vary} = {value:e}: error: {e}");
                first_err.get_or_insert(e.exit_code());
            }
        }
    }
    if let Some(code) = first_err {
        std::process::exit(code);
    }
    Ok(())
}

fn list() -> Result<()> {
    for entry in experiments::catalogue()? {
        println!("{:<22}{}", entry.scenario_id, entry.description);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run {
            scenario_id,
            config,
            out,
            format,
        } => run(scenario_id, config.as_ref(), out.as_ref(), *format),
        Command::Compare {
            scenario_id,
            config,
        } => compare(scenario_id, config.as_ref()),
        Command::Sweep {
            scenario_id,
            vary,
            values,
            config,
            out,
        } => sweep_cmd(scenario_id, vary, values, config.as_ref(), out.as_ref()),
        Command::List => list(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
