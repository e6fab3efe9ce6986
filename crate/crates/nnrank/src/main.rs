use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nnrank::experiments::{
    approximation_survey, binary_form_experiment, rank_coincidence_experiment, typical_rank_histogram, FormWeights,
    SurveyConfig,
};
use nnrank::io::{read_decomposition, read_tensor, to_json, IoError};
use nnrank::output::{write_histogram, write_scalars};
use nnrank_core::cells::{support_pattern, uni23_cell_screen};
use nnrank_core::identifiability::{
    generic_rank_estimate, identifiability_report, symmetric_identifiable, uniqueness_by_restarts,
};
use nnrank_core::rank::{latin_square_tensor, maxrank_formula, nonneg_rank_bounds, paper_222_tensor};
use nnrank_core::solvers::{als_solve_real, nncp_solve};
use nnrank_core::{Error, Mode, SolverConfig, Tensor};
use serde::Serialize;

/// Nonnegative tensor rank workbench.
#[derive(Parser)]
#[command(name = "nnrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-iters", default_value_t = 2000)]
    max_iters: usize,
    #[arg(long = "feas-tol", default_value_t = 1e-8)]
    feas_tol: f64,
    #[arg(long = "supp-eps", default_value_t = 1e-7)]
    supp_eps: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            restarts: self.restarts,
            max_outer_iters: self.max_iters,
            seed: self.seed,
            feas_tol: self.feas_tol,
            supp_eps: self.supp_eps,
            ..SolverConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Nonnegative rank bounds of a tensor file.
    Rank {
        tensor: PathBuf,
        #[arg(long = "r-max", default_value_t = 6)]
        r_max: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Print a built-in tensor as JSON.
    Construct {
        #[command(subcommand)]
        which: Construct,
    },
    /// Best rank-r approximation of a tensor file.
    Approx {
        tensor: PathBuf,
        #[arg(long)]
        rank: usize,
        /// Unconstrained real factors instead of nonnegative ones.
        #[arg(long)]
        real: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Evaluate a decomposition file to a tensor.
    Evaluate { decomposition: PathBuf },
    /// Identifiability rules for a shape and rank.
    Identifiability {
        #[arg(long, value_delimiter = ',')]
        shape: Option<Vec<usize>>,
        #[arg(long)]
        rank: usize,
        /// Symmetric d-tensors on R^(n+1), given as d,n.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        symmetric: Option<Vec<usize>>,
        #[arg(long = "no-jacobian")]
        no_jacobian: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generic rank estimate from Jacobian ranks.
    GenericRank {
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Maximal nonnegative typical rank of an order-3 shape.
    Maxrank {
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
    },
    /// Cluster zero-residual restarts to test uniqueness of the decomposition.
    Uniqueness {
        tensor: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long = "match-tol", default_value_t = 1e-5)]
        match_tol: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Support pattern (cell) of a nonnegative decomposition file.
    Cells {
        decomposition: PathBuf,
        #[arg(long = "supp-eps", default_value_t = 1e-7)]
        supp_eps: f64,
    },
    /// Histogram of estimated ranks of random tensors.
    Typical {
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        #[arg(long)]
        samples: usize,
        #[arg(long = "r-max")]
        r_max: usize,
        #[arg(long)]
        real: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Fraction of random binary forms with all roots real and distinct.
    Binaryform {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Weights::SqrtBinomial)]
        weights: Weights,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Boundary and uniqueness survey of best approximations.
    Survey {
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long = "match-tol", default_value_t = 1e-5)]
        match_tol: f64,
        #[arg(long = "kkt-tol", default_value_t = 1e-6)]
        kkt_tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Real versus nonnegative rank of planted nonnegative tensors.
    Coincidence {
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        samples: usize,
        /// Extra tensor files reported separately.
        #[arg(long)]
        tensor: Vec<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Subcommand)]
enum Construct {
    /// Latin-square tensor of order n.
    Latin { n: usize },
    /// The 2x2x2 tensor with nonnegative rank 4 and real rank 2.
    #[command(alias = "paper222")]
    Gap222,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    SqrtBinomial,
    Binomial,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::NonFinite) => 3,
            _ => 2,
        }
    }
}

fn emit<T: Serialize>(value: &T) -> Result<(), CliError> {
    print!("{}", to_json(value)?);
    Ok(())
}

fn nonneg_tensor(path: &Path) -> Result<Tensor, CliError> {
    let t = read_tensor(path)?;
    if t.is_nonneg() {
        return Ok(t);
    }
    t.to_nonneg()
        .map_err(|_| CliError::Usage(format!("{} has negative entries; use a real-mode command", path.display())))
}

fn scalars(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Rank { tensor, r_max, solver } => {
            emit(&nonneg_rank_bounds(&nonneg_tensor(&tensor)?, r_max, &solver.config())?)
        }
        Command::Construct { which } => match which {
            Construct::Latin { n } => emit(&latin_square_tensor(n)?),
            Construct::Gap222 => emit(&paper_222_tensor()),
        },
        Command::Approx { tensor, rank, real, solver } => {
            let cfg = solver.config();
            let res = if real {
                als_solve_real(&read_tensor(&tensor)?, rank, &cfg)?
            } else {
                nncp_solve(&nonneg_tensor(&tensor)?, rank, &cfg)?
            };
            emit(&res)
        }
        Command::Evaluate { decomposition } => emit(&read_decomposition(&decomposition)?.evaluate()),
        Command::Identifiability { shape, rank, symmetric, no_jacobian, seed } => match (shape, symmetric) {
            (_, Some(sym)) => {
                let [d, n] = sym[..] else {
                    return Err(CliError::Usage("--symmetric takes d,n".into()));
                };
                #[derive(Serialize)]
                struct Symmetric {
                    d: usize,
                    n: usize,
                    r: usize,
                    verdict: nnrank_core::Verdict,
                }
                emit(&Symmetric { d, n, r: rank, verdict: symmetric_identifiable(d, n, rank)? })
            }
            (Some(shape), None) => emit(&identifiability_report(&shape, rank, seed, !no_jacobian)?),
            (None, None) => Err(CliError::Usage("give --shape or --symmetric".into())),
        },
        Command::GenericRank { shape, seed } => emit(&generic_rank_estimate(&shape, seed)?),
        Command::Maxrank { shape } => {
            #[derive(Serialize)]
            struct MaxRank {
                shape: Vec<usize>,
                max_typical_rank: usize,
            }
            let max_typical_rank = maxrank_formula(&shape)?;
            emit(&MaxRank { shape, max_typical_rank })
        }
        Command::Uniqueness { tensor, rank, match_tol, solver } => {
            emit(&uniqueness_by_restarts(&nonneg_tensor(&tensor)?, rank, &solver.config(), match_tol)?)
        }
        Command::Cells { decomposition, supp_eps } => {
            let d = read_decomposition(&decomposition)?;
            let pattern = support_pattern(&d, supp_eps)?;
            #[derive(Serialize)]
            struct Cells {
                #[serde(flatten)]
                pattern: nnrank_core::CellPattern,
                screen: Option<nnrank_core::Uni23Screen>,
            }
            let screen = uni23_cell_screen(d.shape().dims(), d.rank(), &pattern).ok();
            emit(&Cells { pattern, screen })
        }
        Command::Typical { shape, samples, r_max, real, csv, solver } => {
            let mode = if real { Mode::Real } else { Mode::Nonnegative };
            let h = typical_rank_histogram(&shape, samples, r_max, mode, &solver.config())?;
            if let Some(path) = csv {
                let title = format!("estimated ranks, shape {shape:?}, {samples} samples");
                write_histogram(&path, &h.csv_rows(), &title)?;
            }
            emit(&h)
        }
        Command::Binaryform { degree, samples, seed, weights, csv } => {
            let weights = match weights {
                Weights::SqrtBinomial => FormWeights::SqrtBinomial,
                Weights::Binomial => FormWeights::Binomial,
            };
            let rep = binary_form_experiment(degree, samples, seed, weights)?;
            if let Some(path) = csv {
                write_scalars(
                    &path,
                    &scalars(&[
                        ("degree", degree.to_string()),
                        ("samples", samples.to_string()),
                        ("all_real", rep.all_real.to_string()),
                        ("fraction", rep.fraction.to_string()),
                        ("standard_error", rep.standard_error.to_string()),
                    ]),
                )?;
            }
            emit(&rep)
        }
        Command::Survey { shape, rank, samples, match_tol, kkt_tol, csv, solver } => {
            let survey = SurveyConfig { match_tol, kkt_tol, ..SurveyConfig::default() };
            let rep = approximation_survey(&shape, rank, samples, &solver.config(), &survey)?;
            if let Some(path) = csv {
                write_scalars(
                    &path,
                    &scalars(&[
                        ("samples", samples.to_string()),
                        ("fraction_on_boundary", rep.fraction_on_boundary.to_string()),
                        ("fraction_unique_evidence", rep.fraction_unique_evidence.to_string()),
                        ("fraction_non_unique_witness", rep.fraction_non_unique_witness.to_string()),
                        ("fraction_inconclusive", rep.fraction_inconclusive.to_string()),
                        ("converged_interior", rep.converged_interior.to_string()),
                    ]),
                )?;
            }
            emit(&rep)
        }
        Command::Coincidence { shape, rank, samples, tensor, csv, solver } => {
            let explicit = tensor
                .iter()
                .map(|p| Ok((p.display().to_string(), nonneg_tensor(p)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let rep = rank_coincidence_experiment(&shape, rank, samples, &solver.config(), &explicit)?;
            if let Some(path) = csv {
                write_scalars(
                    &path,
                    &scalars(&[
                        ("samples", samples.to_string()),
                        ("real_fit_fraction", rep.real_fit_fraction.to_string()),
                        ("flattening_tight_fraction", rep.flattening_tight_fraction.to_string()),
                        ("coincidence_fraction", rep.coincidence_fraction.to_string()),
                    ]),
                )?;
            }
            emit(&rep)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
