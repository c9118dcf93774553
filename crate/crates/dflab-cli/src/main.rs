//! `dflab`: command-line front end for the analysis pipeline.

use clap::{Args, Parser, Subcommand, ValueEnum};
use dflab_core::report::{emit_plot_data, run_analyze, DomainKind, OutputFormat, ReportDocument, RunConfig};
use dflab_core::{DflabError, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dflab", version, about = "Index and Stein neighborhood analysis for Hartogs domains")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report file, or the output directory for `plot`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Classify, bound the index and run the Stein analysis.
    Analyze,
    /// Analyze the worm domain with the given radius ratio.
    Worm {
        #[arg(long)]
        r: f64,
    },
    /// Certify a candidate exhaustion at a fixed exponent.
    Certify {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        exterior: bool,
    },
    /// Bracket the index by certified bisection.
    Bisect,
    /// Report only the Stein neighborhood analysis.
    Stein,
    /// Write CSV plot data into the `--out` directory.
    Plot,
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(r) = g.resolution {
        cfg.resolution = r;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(f) = g.format {
        cfg.format = match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Text => OutputFormat::Text,
        };
    }
    if let Some(o) = &g.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn render_stein(rep: &ReportDocument, f: OutputFormat) -> Result<String> {
    let Some(st) = &rep.stein else {
        return Err(DflabError::HypothesisViolation(rep.notes.join("; ")));
    };
    let verdict = dflab_core::report::verdict_str(st.verdict);
    let tau = rep.steinness.and_then(|s| s.tau_lower);
    Ok(match f {
        OutputFormat::Json => {
            let v = serde_json::json!({ "stein": st, "steinness": rep.steinness, "df_one_check": rep.df_one_check });
            serde_json::to_string_pretty(&v).map_err(|e| DflabError::Io(e.to_string()))?
        }
        OutputFormat::Csv => format!(
            "key,value\nc1,{}\na1,{}\nverdict,{verdict}\nsteinness_tau_lower,{}\n",
            st.c1,
            st.a1,
            tau.map_or(String::new(), |t| t.to_string())
        ),
        OutputFormat::Text => format!(
            "c1        {:.9}\na1        {:.9}\nverdict   {verdict}\nsteinness {}\n",
            st.c1,
            st.a1,
            tau.map_or("infeasible".into(), |t| format!("tau > {t:.9}"))
        ),
    })
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.global)?;
    match &cli.command {
        Command::Worm { r } => {
            cfg.domain.kind = DomainKind::Worm;
            cfg.domain.r = *r;
        }
        Command::Certify { tau, exterior } => {
            cfg.tau = Some(*tau);
            cfg.exterior = *exterior;
        }
        Command::Bisect => cfg.bisect = true,
        Command::Analyze | Command::Stein | Command::Plot => {}
    }
    let plot_dir = matches!(cli.command, Command::Plot).then(|| cfg.out.take().unwrap_or_else(|| PathBuf::from("plots")));
    let report = run_analyze(&cfg)?;
    if let Some(dir) = plot_dir {
        for p in emit_plot_data(&report, &dir)? {
            println!("{}", p.display());
        }
        return Ok(());
    }
    let text = match cli.command {
        Command::Stein => render_stein(&report, cfg.format)?,
        _ => report.render(cfg.format)?,
    };
    match &cfg.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Ok(n) = std::env::var("DFLAB_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: DFLAB_THREADS must be a positive integer, got {n:?}");
                return ExitCode::from(1);
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
