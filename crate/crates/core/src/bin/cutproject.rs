use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cutproject::output::{write_artifacts, Artifact};
use cutproject::scenario::{Scenario, ScenarioConfig};

/// Generate cut-and-project patches and check their density,
/// autocorrelation, diffraction and torus parameters against closed forms.
#[derive(Parser)]
#[command(name = "cutproject", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the patch at every radius as CSV and JSON.
    Generate(Common),
    /// Compare the empirical autocorrelation with the covariogram formula.
    Autocorr(Common),
    /// Write the predicted Bragg spectrum.
    Diffract(Common),
    /// Compare Fourier–Bohr coefficients and check the consistent phase property.
    Fbcoeff(Common),
    /// Density convergence table over the configured radii.
    DensityScan(Common),
    /// Recover torus parameters from patches.
    TorusRecover(Common),
    /// Build the Borel window and report its behaviour at t = 0.
    BorelDemo(Common),
    /// Run every criterion and write a manifest; exits nonzero on failure.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated radii; overrides `radii`.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Print results to stdout as JSON.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Print CSV artifacts to stdout instead of only writing them.
    #[arg(long)]
    csv: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> cutproject::Result<bool> {
    let (name, common) = match &command {
        Command::Generate(c) => ("generate", c),
        Command::Autocorr(c) => ("autocorr", c),
        Command::Diffract(c) => ("diffract", c),
        Command::Fbcoeff(c) => ("fbcoeff", c),
        Command::DensityScan(c) => ("density-scan", c),
        Command::TorusRecover(c) => ("torus-recover", c),
        Command::BorelDemo(c) => ("borel-demo", c),
        Command::Verify(c) => ("verify", c),
    };
    let mut config = ScenarioConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = Some(seed);
    }
    if let Some(radii) = &common.radii {
        config.radii = radii.clone();
    }
    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| config.output_dir.clone());
    let scenario = Scenario::new(config)?;

    let (artifacts, ok, report) = match &command {
        Command::Verify(_) => {
            let (manifest, files) = scenario.verify()?;
            let text = if common.json {
                serde_json::to_string_pretty(&manifest)
                    .map_err(|e| cutproject::Error::Io(e.to_string()))?
            } else {
                manifest
                    .criteria
                    .iter()
                    .map(|c| format!("[{}] {}: {}", c.verdict.label(), c.name, c.detail))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            (files, manifest.all_ok(), Some(text))
        }
        Command::Generate(_) => (scenario.generate()?, true, None),
        Command::Autocorr(_) => (scenario.autocorr()?, true, None),
        Command::Diffract(_) => (scenario.diffract()?, true, None),
        Command::Fbcoeff(_) => (scenario.fbcoeff()?, true, None),
        Command::DensityScan(_) => (scenario.density_scan()?, true, None),
        Command::TorusRecover(_) => (scenario.torus_recover()?, true, None),
        Command::BorelDemo(_) => (scenario.borel_demo()?, true, None),
    };

    let paths = write_artifacts(&out_dir, &artifacts)?;
    if let Some(text) = report {
        println!("{text}");
    } else if common.json {
        print_json(&artifacts, &paths);
    } else if common.csv {
        for a in artifacts.iter().filter(|a| a.name.ends_with(".csv")) {
            print!("{}", a.contents);
        }
    }
    if !common.json {
        for p in &paths {
            eprintln!("{name}: wrote {}", p.display());
        }
    }
    Ok(ok)
}

/// JSON artifacts verbatim, or the list of written paths when there are none.
fn print_json(artifacts: &[Artifact], paths: &[PathBuf]) {
    let mut any = false;
    for a in artifacts.iter().filter(|a| a.name.ends_with(".json")) {
        print!("{}", a.contents);
        any = true;
    }
    if !any {
        let list: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
        println!("{}", serde_json::json!({ "written": list }));
    }
}
