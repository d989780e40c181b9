use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curv4_cli::{init_threads, presets_listing, run, Command, Identity};

/// Numerical checks of curvature identities for harmonic 2-forms on 4-manifolds.
#[derive(Parser)]
#[command(name = "curv4", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Top,
}

#[derive(clap::Args)]
struct Io {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Directory for report.json and samples.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Top {
    /// Manifold presets.
    Presets {
        #[command(subcommand)]
        cmd: PresetsCmd,
    },
    /// Sectional and biorthogonal curvature extremes over the sample.
    Curvature(Io),
    /// Pointwise identity residuals.
    Verify {
        #[command(subcommand)]
        which: VerifyCmd,
    },
    /// Kato ratio scans.
    Kato {
        #[command(subcommand)]
        which: KatoCmd,
    },
    /// Discrete harmonic forms on the periodic lattice.
    Grid {
        #[command(subcommand)]
        which: GridCmd,
    },
    /// Integrated Laplacian of FG and its decomposition.
    Integral(Io),
}

#[derive(Subcommand)]
enum PresetsCmd {
    List,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Hodge Laplacian against the rough Laplacian plus curvature term.
    Weitzenboeck(Io),
    /// Bochner formula per frame component, in normal coordinates.
    ComponentBochner(Io),
    /// Laplacians of the adapted-frame eigenvalues and of F and G.
    AdaptedFrame(Io),
    /// Laplacian of the product FG.
    FgProduct(Io),
    /// The conformal chain for g' = |phi|^k g.
    Conformal {
        #[arg(long)]
        k: f64,
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand)]
enum KatoCmd {
    /// Ratio |nabla phi|^2 / |d|phi||^2 over the sample.
    Scan(Io),
    /// Refined Kato identity for a list of conformal exponents.
    Ksweep {
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<f64>,
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand)]
enum GridCmd {
    Harmonic(Io),
    Definiteness(Io),
}

fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var("CURV4_THREADS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("CURV4_THREADS must be a positive integer, got `{v}`")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, io) = match cli.cmd {
        Top::Presets { cmd: PresetsCmd::List } => {
            print!("{}", presets_listing());
            return ExitCode::SUCCESS;
        }
        Top::Curvature(io) => (Command::Curvature, io),
        Top::Integral(io) => (Command::Integral, io),
        Top::Verify { which } => match which {
            VerifyCmd::Weitzenboeck(io) => (Command::Verify(Identity::Weitzenboeck), io),
            VerifyCmd::ComponentBochner(io) => (Command::Verify(Identity::ComponentBochner), io),
            VerifyCmd::AdaptedFrame(io) => (Command::Verify(Identity::AdaptedFrame), io),
            VerifyCmd::FgProduct(io) => (Command::Verify(Identity::FgProduct), io),
            VerifyCmd::Conformal { k, io } => (Command::Verify(Identity::Conformal { k }), io),
        },
        Top::Kato { which } => match which {
            KatoCmd::Scan(io) => (Command::KatoScan, io),
            KatoCmd::Ksweep { k, io } => (Command::Ksweep { ks: k }, io),
        },
        Top::Grid { which } => match which {
            GridCmd::Harmonic(io) => (Command::GridHarmonic, io),
            GridCmd::Definiteness(io) => (Command::GridDefiniteness, io),
        },
    };
    let fail = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    if let Err(e) = init_threads(threads) {
        return fail(e.to_string());
    }
    let origin = io.scenario.display().to_string();
    let text = match std::fs::read_to_string(&io.scenario) {
        Ok(t) => t,
        Err(e) => return fail(format!("{origin}: {e}")),
    };
    let outcome = match run(&cmd, &text, &origin) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string()),
    };
    let written = std::fs::create_dir_all(&io.out)
        .and_then(|_| std::fs::write(io.out.join("report.json"), &outcome.report_json))
        .and_then(|_| std::fs::write(io.out.join("samples.csv"), &outcome.samples_csv));
    if let Err(e) = written {
        return fail(format!("{}: {e}", io.out.display()));
    }
    println!("{} {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.summary);
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
