use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use difftk::operators::{Case, Role};
use difftk_cli::{emit, run, BoundsConfig, Command, ExperimentConfig, RelationMode};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    Validate,
    Solve,
    Certificate,
    Relation,
    Corpus,
    Independence,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Relation,
    Probe,
    Profile,
}

/// Exact experiments on linear shift, q-difference and Mahler equations.
#[derive(Parser, Debug)]
#[command(name = "difftk", version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// Inputs: rational functions (solve, certificate) or series specs
    /// (relation, corpus, independence).
    inputs: Vec<String>,
    /// Operator case: 2S, 2Q or 2M.
    #[arg(long)]
    case: Option<Case>,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    /// Which operator of the pair acts (solve, certificate).
    #[arg(long, default_value = "phi")]
    role: Role,
    /// Truncation order N.
    #[arg(long, default_value_t = BoundsConfig::default().n)]
    order: i64,
    /// Total degree bound D.
    #[arg(long, default_value_t = BoundsConfig::default().d)]
    deg: u32,
    /// Degree bound Dx for polynomial coefficients in x.
    #[arg(long, default_value_t = BoundsConfig::default().dx)]
    xdeg: u32,
    /// Search bound for q-logarithms of modulus-one quotients.
    #[arg(long, default_value_t = BoundsConfig::default().kmax)]
    kmax: u64,
    /// Number of σ-iterates for probes and profiles.
    #[arg(long, default_value_t = BoundsConfig::default().imax)]
    imax: u32,
    #[arg(long, value_enum, default_value = "relation")]
    mode: Mode,
    /// Report path; series and equation files are written next to it.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

fn config(a: Args) -> ExperimentConfig {
    let command = match a.command {
        Sub::Validate => Command::Validate,
        Sub::Solve => Command::Solve,
        Sub::Certificate => Command::Certificate,
        Sub::Relation => Command::Relation,
        Sub::Corpus => Command::Corpus,
        Sub::Independence => Command::Independence,
    };
    ExperimentConfig {
        command,
        case: a.case,
        phi: a.phi,
        sigma: a.sigma,
        role: a.role,
        inputs: a.inputs,
        bounds: BoundsConfig {
            d: a.deg,
            dx: a.xdeg,
            n: a.order,
            kmax: a.kmax,
            imax: a.imax,
        },
        mode: match a.mode {
            Mode::Relation => RelationMode::Relation,
            Mode::Probe => RelationMode::Probe,
            Mode::Profile => RelationMode::Profile,
        },
        out: a.out,
        seed: a.seed,
    }
}

fn main() -> ExitCode {
    let cfg = config(Args::parse());
    let result = run(&cfg).and_then(|rep| emit(&rep).map(|text| (text, rep.exit_code())));
    match result {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("difftk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
