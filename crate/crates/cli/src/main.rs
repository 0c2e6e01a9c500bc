//! `psidir`: command-line front end to the psi-Dirichlet toolkit. Every subcommand
//! writes one JSON document (or CSV for flat tables) to stdout.

mod commands;
mod input;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psidir::Precision;

use input::XArgs;

#[derive(Parser, Debug)]
#[command(
    name = "psidir",
    version,
    about = "Certified experiments on psi-Dirichlet reals and matrices"
)]
pub struct Cli {
    /// Working precision in bits.
    #[arg(long, global = true, env = "PSIDIR_PRECISION", default_value_t = 128)]
    pub precision: u32,
    /// Precision doublings tried before a comparison is reported Indeterminate.
    #[arg(long, global = true, default_value_t = 3)]
    pub retries: u32,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convergent criterion for D(psi) at each index of a window.
    Classify(ClassifyArgs),
    /// Comparison test for psi-approximability at each index of a window.
    Approx(ClassifyArgs),
    /// Product thresholds a_n a_(n+1) versus Psi(q_n) - 1.
    Product(ProductArgs),
    /// Greedy construction of a real that is not psi-Dirichlet.
    Construct(ConstructArgs),
    /// Closed-form class and certified partial sums of the zero-one series.
    Series(SeriesArgs),
    /// The set A(Psi) = {a_1 a_2 > Psi} and its measures.
    AnMeasure(AnMeasureArgs),
    /// lambda(A(Psi)) Psi / log Psi for several Psi.
    Asymptotics(AsymptoticsArgs),
    /// Gauss-map orbit of x.
    Orbit(OrbitArgs),
    /// Truncated Gauss-map preimage of a union of intervals.
    Preimage(PreimageArgs),
    /// Decorrelation of a cylinder and a pulled-back target.
    Mixing(MixingArgs),
    /// Fraction of random reals without certified violations in a window.
    Montecarlo(MonteCarloArgs),
    /// Growth rate of convergent denominators of random reals.
    Levy(LevyArgs),
    /// The reparametrization r(s) of the Dani correspondence.
    DaniR(DaniRArgs),
    /// Delta(g_s Lambda_Y), minus the log of the shortest sup-norm vector.
    Delta(DeltaArgs),
    /// Lattice-side criterion on a grid of s values.
    DynClassify(DynClassifyArgs),
    /// Direct witness-interval coverage of a time horizon.
    Witness(WitnessArgs),
    /// Convergent, lattice and witness criteria compared on matched times (m = n = 1).
    CrossValidate(CrossValidateArgs),
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub x: XArgs,
    /// Approximating function, e.g. "scaled_dirichlet c=7/10".
    #[arg(long)]
    pub psi: String,
    /// Index window a:b (default 1:depth).
    #[arg(long)]
    pub window: Option<String>,
    /// Exit with status 3 unless the summary is certified.
    #[arg(long)]
    pub decide: bool,
}

#[derive(Args, Debug)]
pub struct ProductArgs {
    #[command(flatten)]
    pub x: XArgs,
    #[arg(long)]
    pub psi: String,
    /// Index window a:b (default 1:depth-1).
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    /// Abort once an entry needs more bits than this.
    #[arg(long, default_value_t = psidir::construct::DEFAULT_ENTRY_BIT_CAP)]
    pub entry_bit_cap: u64,
}

#[derive(Args, Debug)]
pub struct SeriesArgs {
    #[arg(long)]
    pub psi: String,
    /// Last summation index.
    #[arg(long, default_value_t = 1024)]
    pub n_max: u64,
}

#[derive(Args, Debug)]
pub struct AnMeasureArgs {
    /// The threshold Psi.
    #[arg(long)]
    pub big_psi: String,
    /// List the intervals of A(Psi) (only when Psi <= 10^4).
    #[arg(long)]
    pub intervals: bool,
}

#[derive(Args, Debug)]
pub struct AsymptoticsArgs {
    /// Comma-separated thresholds Psi.
    #[arg(long, default_value = "100,1000,10000,100000,1000000")]
    pub values: String,
}

#[derive(Args, Debug)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub x: XArgs,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
}

#[derive(Args, Debug)]
pub struct PreimageArgs {
    /// Union of open intervals, e.g. "0:1/2,2/3:1".
    #[arg(long)]
    pub union: String,
    #[arg(long, default_value_t = 1)]
    pub iterations: usize,
    /// Branches a = 1..=K kept per interval.
    #[arg(long, default_value_t = 64)]
    pub branches: u64,
    #[arg(long, default_value_t = 1 << 14)]
    pub max_intervals: usize,
    /// List the intervals of the preimage.
    #[arg(long)]
    pub intervals: bool,
}

#[derive(Args, Debug)]
pub struct MixingArgs {
    /// Cylinder word, e.g. "1,2".
    #[arg(long)]
    pub word: String,
    /// Target union, e.g. "0:1/2".
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value_t = 1)]
    pub gap: usize,
    #[arg(long, default_value_t = 64)]
    pub branches: u64,
    #[arg(long, default_value_t = 1 << 14)]
    pub max_intervals: usize,
}

#[derive(Args, Debug)]
pub struct MonteCarloArgs {
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value = "10:60")]
    pub window: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Each sample is a dyadic interval of width 2^-bits.
    #[arg(long, default_value_t = 256)]
    pub sample_bits: u32,
}

#[derive(Args, Debug)]
pub struct LevyArgs {
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 60)]
    pub depth: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct DaniRArgs {
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Comma-separated values of s.
    #[arg(long)]
    pub s: String,
}

#[derive(Args, Debug)]
pub struct DeltaArgs {
    /// Row-major entries of the m x n matrix Y.
    #[arg(long)]
    pub y: String,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Comma-separated values of s.
    #[arg(long)]
    pub s: String,
}

#[derive(Args, Debug)]
pub struct DynClassifyArgs {
    #[arg(long)]
    pub y: String,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long)]
    pub psi: String,
    /// Comma-separated grid of s values.
    #[arg(long, conflicts_with = "s_range")]
    pub s_grid: Option<String>,
    /// Geometric grid lo:hi, with --count points.
    #[arg(long)]
    pub s_range: Option<String>,
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    /// Exit with status 3 unless the summary is certified.
    #[arg(long)]
    pub decide: bool,
}

#[derive(Args, Debug)]
pub struct WitnessArgs {
    #[arg(long)]
    pub y: String,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long)]
    pub psi: String,
    /// Time horizon T0:T1.
    #[arg(long)]
    pub horizon: String,
    /// Exit with status 3 unless coverage is certified either way.
    #[arg(long)]
    pub decide: bool,
}

#[derive(Args, Debug)]
pub struct CrossValidateArgs {
    #[command(flatten)]
    pub x: XArgs,
    #[arg(long)]
    pub psi: String,
    /// Index window a:b (default 2:min(depth, 30)).
    #[arg(long)]
    pub window: Option<String>,
    /// Comma-separated s grid (default: one point per convergent).
    #[arg(long)]
    pub s_grid: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = commands::Context {
        prec: Precision::new(cli.precision, cli.retries),
        format: cli.format,
    };
    match commands::run(&cli.command, &ctx) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.text.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
            if let Some(reason) = out.undecided {
                eprintln!("undecided: {reason}");
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
