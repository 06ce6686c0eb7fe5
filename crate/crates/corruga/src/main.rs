use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corruga::analysis::{analyze, AnalysisOptions};
use corruga::config::SurfaceConfig;
use corruga::corruga_core::warping::{dislocation, warping_function};
use corruga::corruga_core::ThresholdPolicy;
use corruga::export::{read_section, write_mode_meshes, write_spectrum, write_warping};
use corruga::report::{spectrum_rows, AnalysisReport, SPECTRUM_FILE};
use corruga::verify::{self, Suite};
use corruga::{configure_threads, exit, CliError};

#[derive(Parser)]
#[command(name = "corruga", version, about = "Infinitesimal isometries of periodic surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and classify the effective modes of a surface.
    Analyze {
        /// Surface configuration (JSON).
        #[arg(long)]
        surface: PathBuf,
        /// Panels per period, `N` or `N,M`.
        #[arg(long, default_value = "32", value_parser = parse_resolution)]
        resolution: [usize; 2],
        /// `auto`, `auto:MIN_GAP`, or a fixed cut on the strain-revealing value.
        #[arg(long, default_value = "auto", value_parser = parse_threshold)]
        threshold: ThresholdPolicy,
        /// Seed for the randomized oracle checks.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write the base mesh and one deflected mesh per mode.
        #[arg(long)]
        export_obj: bool,
    },
    /// Run a verification suite: examples, lemma, scaling, warping or all.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Directory for `verify.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the summary as JSON instead of one line per criterion.
        #[arg(long)]
        json: bool,
    },
    /// Warping function of an open section, or dislocation of a closed one.
    Warping {
        /// CSV with `x,y` columns in arclength order.
        #[arg(long)]
        section: PathBuf,
        /// Twist rate.
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Treat the section as closed and report the dislocation.
        #[arg(long)]
        closed: bool,
        /// Output CSV (`s,w`); defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_resolution(s: &str) -> Result<[usize; 2], String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    match s.split_once(',') {
        Some((a, b)) => Ok([parse(a)?, parse(b)?]),
        None => parse(s).map(|n| [n, n]),
    }
}

fn parse_threshold(s: &str) -> Result<ThresholdPolicy, String> {
    let positive = |t: &str| t.parse::<f64>().ok().filter(|t| *t > 0.0 && t.is_finite());
    let bad = || format!("expected `auto`, `auto:MIN_GAP` or a positive number, got `{s}`");
    if s == "auto" {
        return Ok(ThresholdPolicy::default());
    }
    if let Some(gap) = s.strip_prefix("auto:") {
        let ThresholdPolicy::Auto { cap, .. } = ThresholdPolicy::default() else { unreachable!() };
        return positive(gap).map(|min_gap| ThresholdPolicy::Auto { min_gap, cap }).ok_or_else(bad);
    }
    positive(s).map(ThresholdPolicy::Fixed).ok_or_else(bad)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn cmd_analyze(
    surface: &Path,
    options: AnalysisOptions,
    out: &Path,
    export_obj: bool,
) -> Result<i32, CliError> {
    let config = SurfaceConfig::load(surface)?;
    let chart = config.to_chart()?;
    let analysis = analyze(&chart, options)?;
    create_dir(out)?;
    let mut report = AnalysisReport::new(&analysis, &config);
    write_spectrum(&out.join(SPECTRUM_FILE), &spectrum_rows(&analysis))?;
    if export_obj && analysis.nullspace.is_some() {
        let (files, amplitude) = write_mode_meshes(out, &analysis)?;
        report.export.files = files;
        report.export.obj_amplitude = Some(amplitude);
    }
    write(&out.join("report.json"), &report.to_json())?;

    if let Some(a) = &analysis.ambiguity {
        eprintln!("ambiguous rank decision at the {} stage; see {}", a.stage, out.join(SPECTRUM_FILE).display());
        return Ok(exit::AMBIGUOUS_RANK);
    }
    let dims = analysis.dims().expect("unambiguous analysis has strain spaces");
    println!(
        "{}: {} modes, dims (E, chi) = ({}, {}), worst pair residual {:.2e}",
        config.family,
        analysis.modes().len(),
        dims.0,
        dims.1,
        analysis.pairs.iter().map(|p| p.relative).fold(0.0, f64::max)
    );
    Ok(exit::SUCCESS)
}

fn cmd_verify(suite: &str, seed: u64, out: Option<&Path>, json: bool) -> Result<i32, CliError> {
    let suite: Suite = suite.parse()?;
    let summary = verify::run(suite, seed)?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    if let Some(dir) = out {
        create_dir(dir)?;
        write(&dir.join("verify.json"), &text)?;
    }
    if json {
        println!("{text}");
    } else {
        for c in &summary.criteria {
            println!("{}", c.line());
        }
    }
    Ok(if summary.passed { exit::SUCCESS } else { exit::VERIFICATION_FAILED })
}

fn cmd_warping(section: &Path, alpha: f64, closed: bool, out: Option<&Path>) -> Result<i32, CliError> {
    let curve = read_section(section, closed)?;
    if closed {
        println!("{}", dislocation(&curve, alpha)?);
        return Ok(exit::SUCCESS);
    }
    let result = warping_function(&curve, alpha)?;
    match out {
        Some(path) => write_warping(path, &result)?,
        None => {
            println!("s,w");
            for (s, w) in result.s.iter().zip(&result.w) {
                println!("{s},{w}");
            }
        }
    }
    Ok(exit::SUCCESS)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Analyze { surface, resolution, threshold, seed, out, export_obj } => {
            let options = AnalysisOptions { resolution, threshold, seed, ..Default::default() };
            cmd_analyze(&surface, options, &out, export_obj)
        }
        Command::Verify { suite, seed, out, json } => cmd_verify(&suite, seed, out.as_deref(), json),
        Command::Warping { section, alpha, closed, out } => cmd_warping(&section, alpha, closed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; usage errors share the generic code
            return ExitCode::from(if e.use_stderr() { exit::ERROR as u8 } else { exit::SUCCESS as u8 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::ERROR as u8)
        }
    }
}
