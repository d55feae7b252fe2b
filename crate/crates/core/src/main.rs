use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tt_krylov::bench::{emit, run_bench, BenchPlan, OutputFormat};
use tt_krylov::datagen::{
    add_awgn, power_function_tensor, spectrum_decay_tensor, tensor_load, tensor_save,
    PowerFnParams, SpectrumParams,
};
use tt_krylov::decompose::{decompose, tt_svd, Method, SketchConfig, TruncationSpec, VariantFlags};
use tt_krylov::metrics::{psnr, relative_error};
use tt_krylov::{Error, Result, RngSeed, TtTensor};

#[derive(Parser)]
#[command(name = "ttkrylov", version, about = "Tensor-train approximation and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic tensor
    #[command(subcommand)]
    Synth(Synth),
    /// Add white Gaussian noise at a given SNR
    Noise {
        #[arg(long)]
        snr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'i')]
        input: PathBuf,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    /// Compute a TT decomposition
    Decompose(DecomposeArgs),
    /// Expand a .ttc file to a dense .dten tensor
    Reconstruct {
        #[arg(short = 'i')]
        input: PathBuf,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    /// Print relative error and PSNR of an approximation
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        approx: PathBuf,
    },
    /// Run a benchmark plan
    Bench {
        #[arg(long)]
        plan: PathBuf,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
    },
}

#[derive(Subcommand)]
enum Synth {
    /// n×n×n tensor with diagonal slices and a decaying spectrum
    Spectrum {
        #[arg(long)]
        n: usize,
        #[arg(long = "T")]
        plateau: usize,
        #[arg(long = "D")]
        decay: f64,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    /// Power-function tensor (i_1^h + ... + i_N^h)^(-1/h)
    Powerfn {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        h: f64,
        #[arg(short = 'o')]
        output: PathBuf,
    },
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    method: Method,
    /// Prescribed relative accuracy (svd only)
    #[arg(long, conflicts_with = "ranks")]
    epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Truncate the final sketch by its leading singular vectors (default)
    #[arg(long, conflicts_with = "qr_truncate")]
    svd_truncate: bool,
    /// Truncate the final sketch by the first columns of its QR factor
    #[arg(long)]
    qr_truncate: bool,
    /// Orthonormalize the stacked raw Krylov powers in one step
    #[arg(long)]
    naive_krylov: bool,
    /// Include the starting block in the Krylov space
    #[arg(long)]
    include_zeroth_block: bool,
    #[arg(short = 'i')]
    input: PathBuf,
    #[arg(short = 'o')]
    output: PathBuf,
    /// Write the sweep trace as JSON
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn run_decompose(args: DecomposeArgs) -> Result<()> {
    let t = tensor_load(&args.input)?;
    let (tt, mut trace) = match (args.method, args.epsilon, args.ranks) {
        (Method::Svd, Some(eps), None) => tt_svd(&t, &TruncationSpec::Epsilon(eps))?,
        (_, Some(_), _) => {
            return Err(Error::InvalidArgument(
                "--epsilon is only available with --method svd".into(),
            ))
        }
        (method, None, Some(ranks)) => {
            let variant = VariantFlags {
                naive_krylov: args.naive_krylov,
                include_zeroth_block: args.include_zeroth_block,
                svd_truncate: !args.qr_truncate,
            };
            let cfg = SketchConfig::new(ranks)
                .with_oversampling(args.p)
                .with_depth(args.q)
                .with_seed(args.seed)
                .with_variant(variant);
            decompose(method, &t, &cfg)?
        }
        (_, None, None) => {
            return Err(Error::InvalidArgument("one of --epsilon or --ranks is required".into()))
        }
    };
    tt.save(&args.output)?;
    if let Some(path) = args.trace {
        trace.verify(&t, &tt)?;
        let json = serde_json::to_string_pretty(&trace)
            .map_err(|e| Error::Numerical(format!("trace serialization: {e}")))?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::Io { path, source: e })?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(Synth::Spectrum {
            n,
            plateau,
            decay,
            output,
        }) => tensor_save(
            &spectrum_decay_tensor(&SpectrumParams { n, plateau, decay })?,
            output,
        ),
        Command::Synth(Synth::Powerfn { dims, h, output }) => {
            tensor_save(&power_function_tensor(&PowerFnParams { dims, h })?, output)
        }
        Command::Noise {
            snr,
            seed,
            input,
            output,
        } => tensor_save(&add_awgn(&tensor_load(input)?, snr, RngSeed(seed))?, output),
        Command::Decompose(args) => run_decompose(args),
        Command::Reconstruct { input, output } => {
            tensor_save(&TtTensor::load(input)?.reconstruct()?, output)
        }
        Command::Metrics { reference, approx } => {
            let a = tensor_load(reference)?;
            let ahat = tensor_load(approx)?;
            println!("rel_err {:.16e}", relative_error(&a, &ahat)?);
            println!("psnr {:.16e}", psnr(&a, &ahat)?);
            Ok(())
        }
        Command::Bench {
            plan,
            output,
            format,
        } => {
            let plan = BenchPlan::load(plan)?;
            let format = format.or(plan.format).unwrap_or_default();
            let output = output.or_else(|| plan.output.clone()).ok_or_else(|| {
                Error::InvalidArgument("no output path (-o or plan \"output\")".into())
            })?;
            let out = run_bench(&plan)?;
            for f in &out.failures {
                eprintln!("warning: cell failed: {f}");
            }
            emit(&out.records, format, output)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
