use clap::{Parser, Subcommand};
use hedac::harness::{self, RunOptions, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hedac", version, about = "Multi-UAV coverage and inspection trajectory planning")]
struct Cli {
    /// Directory for artifacts (default: output/<scenario name>).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Write a field snapshot every N steps (0 disables).
    #[arg(long, global = true)]
    snapshot_every: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full simulation.
    Run { config: PathBuf },
    /// Re-score a trajectory CSV with the scenario's camera and structure.
    Assess { config: PathBuf, trajectory: PathBuf },
    /// Write the generated flight-domain mesh (Gmsh 2.2) and structure surface.
    Mesh { config: PathBuf },
    /// Validate a scenario and print derived quantities.
    Info { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn output_dir(cli: &Cli, scenario: &Scenario) -> PathBuf {
    cli.output_dir.clone().unwrap_or_else(|| PathBuf::from("output").join(&scenario.name))
}

fn execute(cli: &Cli) -> Result<(), Box<dyn std::error::Error>> {
    match &cli.command {
        Command::Run { config } => {
            let scenario = Scenario::load(config)?;
            let dir = output_dir(cli, &scenario);
            let options = RunOptions {
                output_dir: Some(dir.clone()),
                snapshot_every: cli.snapshot_every,
                progress_every: if cli.quiet { 0 } else { 50 },
            };
            let report = harness::run::<f64>(scenario, &options)?;
            if !cli.quiet {
                print!("{}", report.text());
                println!("artifacts in {}", dir.display());
            }
        }
        Command::Assess { config, trajectory } => {
            let scenario = Scenario::load(config)?;
            let text = std::fs::read_to_string(trajectory)
                .map_err(|e| format!("cannot read {}: {e}", trajectory.display()))?;
            let ledger = harness::assess::<f64>(&scenario, &text)?;
            println!("inspected nodes  {} / {}", ledger.inspected(), ledger.len());
            println!("eta_a            {}", ledger.coverage::<f64>());
        }
        Command::Mesh { config } => {
            let scenario = Scenario::load(config)?;
            let dir = output_dir(cli, &scenario);
            std::fs::create_dir_all(&dir)?;
            let structure = harness::load_structure::<f64>(&scenario)?;
            let mesh = harness::build_domain_mesh(&scenario, structure.as_ref())?;
            std::fs::write(dir.join("domain.msh"), mesh.to_msh2())?;
            if let Some(s) = &structure {
                std::fs::write(dir.join("structure.obj"), s.mesh().to_obj())?;
            }
            if !cli.quiet {
                println!("{} nodes, {} cells -> {}", mesh.node_count(), mesh.cell_count(), dir.join("domain.msh").display());
            }
        }
        Command::Info { config } => {
            let scenario = Scenario::load(config)?;
            print!("{}", harness::describe(&scenario)?);
        }
    }
    Ok(())
}
