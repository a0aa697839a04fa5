//! `plate-eig` — convergence studies for the clamped-plate eigenvalue problem.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use plate_fem::assembly::Triple;
use plate_fem::mesh::refine_uniform;
use plate_fem::multilevel::Domain;
use plate_fem::study::{emit_csv, emit_plotdata, run_study, Method, StudyConfig};

#[derive(Parser)]
#[command(name = "plate-eig", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and write its CSV table and plot data.
    Study(StudyArgs),
    /// Write a triangulation in the plain text dump format.
    DumpMesh(DumpMeshArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Square,
    Lshape,
}

#[derive(Clone, Copy, ValueEnum)]
enum TripleArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Single,
    Multi,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long, value_enum)]
    domain: DomainArg,
    #[arg(long, value_enum)]
    triple: TripleArg,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Number of nested refinements; the finest level is the self-reference.
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Number of eigenpairs to track.
    #[arg(long, default_value_t = 6)]
    num_eigs: usize,
    /// Subdivisions per unit length of the initial mesh.
    #[arg(long, default_value_t = 4)]
    n0: usize,
    /// Seed for the eigensolver's start block.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for study.csv and the plot files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DumpMeshArgs {
    #[arg(long, value_enum)]
    domain: DomainArg,
    #[arg(long, default_value_t = 4)]
    n0: usize,
    /// Number of uniform refinements to apply before dumping.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version arrive through the same error path
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Study(args) => run_study_command(args),
        Command::DumpMesh(args) => run_dump_mesh(args),
    }
}

fn run_study_command(args: StudyArgs) -> ExitCode {
    let config = StudyConfig {
        domain: match args.domain {
            DomainArg::Square => Domain::Square,
            DomainArg::Lshape => Domain::LShape,
        },
        triple: match args.triple {
            TripleArg::A => Triple::A,
            TripleArg::B => Triple::B,
        },
        method: match args.method {
            MethodArg::Single => Method::Single,
            MethodArg::Multi => Method::Multi,
        },
        levels: args.levels,
        num_eigs: args.num_eigs,
        n0: args.n0,
        seed: args.seed,
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return ExitCode::from(1);
    }
    let result = match run_study(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("numerical failure: {e}");
            let _ = fs::write(args.out.join("FAILED"), format!("{e}\n"));
            return ExitCode::from(2);
        }
    };

    // stdout summary in the style of the study tables
    println!(
        "domain {:?}, triple {:?}, method {:?}, levels {}, k {}, n0 {}",
        config.domain, config.triple, config.method, config.levels, config.num_eigs, config.n0
    );
    for j in 0..config.num_eigs {
        print!("lambda_{}:", j + 1);
        for l in 0..=config.levels {
            print!(" {:.5}", result.lambdas[l][j]);
        }
        let ord = result.ord_lambda[config.levels - 1][j]
            .map(|o| format!("{o:.5}"))
            .unwrap_or_else(|| "-".into());
        let ord_u = result.ord_u[config.levels - 1][j]
            .map(|o| format!("{o:.5}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "  trend {} ord_lambda {} ord_u {} extrap {:.5}",
            result.trends[j], ord, ord_u, result.extrapolated[j]
        );
    }
    println!(
        "seconds per level: {}",
        result
            .seconds
            .iter()
            .map(|s| format!("{s:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    );

    let csv = args.out.join("study.csv");
    if let Err(e) = emit_csv(&result, &csv).and_then(|()| emit_plotdata(&result, &args.out)) {
        eprintln!("error writing results: {e}");
        return ExitCode::from(2);
    }
    println!("wrote {}", csv.display());
    ExitCode::SUCCESS
}

fn run_dump_mesh(args: DumpMeshArgs) -> ExitCode {
    let domain = match args.domain {
        DomainArg::Square => Domain::Square,
        DomainArg::Lshape => Domain::LShape,
    };
    let result = domain.initial_mesh(args.n0).and_then(|mut mesh| {
        for _ in 0..args.refine {
            mesh = refine_uniform(&mesh)?;
        }
        let mut buf = Vec::new();
        mesh.dump_text(&mut buf)?;
        fs::write(&args.out, buf)?;
        Ok(())
    });
    match result {
        Ok(()) => {
            println!("wrote {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
