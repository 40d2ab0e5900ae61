use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ubl_core::group::cap_from_env;
use ubl_core::lemmas::{lemma_check_id, Config, RequestedMode, Workbench};
use ubl_core::recon::{check_recon, L2Model};
use ubl_core::report::{CheckReport, Summary};
use ubl_core::tower::{run_tower, TowerSpec};
use ubl_core::{Error, FieldCtx, UnitaryCtx};

#[derive(Parser)]
#[command(name = "ubl", version, about = "Verification workbench for U3(2^n) and its Borel subgroup")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite field GF(2^n).
    Field {
        #[command(subcommand)]
        cmd: FieldCmd,
    },
    /// Build U3(q) and print its orders and named elements.
    Group {
        #[command(subcommand)]
        cmd: GroupCmd,
    },
    /// Bruhat coordinates of an element.
    Bruhat {
        #[command(subcommand)]
        cmd: BruhatCmd,
    },
    /// Run structural checks; one JSON report per line, then a summary.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Subfield chain embeddings, e.g. --chain 1,3.
    Tower {
        #[arg(long)]
        chain: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rebuild L = Z H0 <v> Z from words.
    Recon {
        #[command(subcommand)]
        cmd: ReconCmd,
    },
}

#[derive(Subcommand)]
enum FieldCmd {
    Info {
        #[arg(long)]
        n: u32,
    },
}

#[derive(Subcommand)]
enum GroupCmd {
    Build {
        #[arg(long)]
        q: u32,
    },
}

#[derive(Subcommand)]
enum BruhatCmd {
    Decompose {
        #[arg(long)]
        q: u32,
        /// Nine hex entries, row-major, comma separated.
        #[arg(long)]
        element: String,
    },
}

#[derive(Subcommand)]
enum ReconCmd {
    L2 {
        #[arg(long)]
        q: u32,
        /// Write the multiplication table here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Subcommand)]
enum VerifyTarget {
    /// Every check, in a fixed order.
    All(VerifyArgs),
    /// Group orders and the structure of U, Z and H.
    Prop3(VerifyArgs),
    /// One numbered check, 1 to 9.
    Lemma {
        #[arg(long)]
        id: u32,
        #[command(flatten)]
        args: VerifyArgs,
    },
    /// (v z)^3 = 1 has exactly one solution z in Z#.
    Eq6(VerifyArgs),
    /// The relation for v t v, t in Z#.
    Eq7(VerifyArgs),
    /// B cap B^g has odd order for every g outside B.
    StrongEmbedding(VerifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    q: u32,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the report stream to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the `ms` field with wall-clock time.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Exhaustive,
    Sampled,
    Algebraic,
}

impl From<ModeArg> for RequestedMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => RequestedMode::Auto,
            ModeArg::Exhaustive => RequestedMode::Exhaustive,
            ModeArg::Sampled => RequestedMode::Sampled,
            ModeArg::Algebraic => RequestedMode::Algebraic,
        }
    }
}

fn exponent(q: u32) -> Result<u32, Error> {
    if q.is_power_of_two() && (2..=1 << ubl_core::unitary::MAX_EXPONENT).contains(&q) {
        Ok(q.trailing_zeros())
    } else {
        Err(Error::Config(format!("q must be one of 2, 4, 8, 16; got {q}")))
    }
}

fn config(q: u32, run: &RunArgs) -> Result<Config, Error> {
    Config::resolve(q, run.mode.into(), run.samples, run.seed, cap_from_env(), run.timing)
}

/// Print each report as it completes, then the summary; mirror them to `--out` when given.
fn emit<I>(reports: I, out: Option<&PathBuf>) -> Result<ExitCode, Error>
where
    I: IntoIterator<Item = Result<CheckReport, Error>>,
{
    let mut file = match out {
        Some(path) => Some(BufWriter::new(File::create(path).map_err(io_err)?)),
        None => None,
    };
    let mut done = Vec::new();
    let mut stdout_open = true;
    let mut write = |line: &str| -> Result<(), Error> {
        if stdout_open {
            let mut w = io::stdout().lock();
            match writeln!(w, "{line}").and_then(|_| w.flush()) {
                Ok(()) => {}
                // a closed reader (`| head`) stops the echo, not the run
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => stdout_open = false,
                Err(e) => return Err(io_err(e)),
            }
        }
        if let Some(f) = file.as_mut() {
            writeln!(f, "{line}").map_err(io_err)?;
        }
        Ok(())
    };
    for report in reports {
        let report = report?;
        write(&report.to_json_line())?;
        done.push(report);
    }
    let summary = Summary::of(&done);
    write(&serde_json::to_string(&summary).expect("summary serialises"))?;
    drop(write);
    if let Some(mut f) = file {
        f.flush().map_err(io_err)?;
    }
    Ok(ExitCode::from(summary.exit_code as u8))
}

fn io_err(e: io::Error) -> Error {
    Error::Config(format!("i/o: {e}"))
}

fn print(v: serde_json::Value) -> ExitCode {
    println!("{v}");
    ExitCode::SUCCESS
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Field { cmd: FieldCmd::Info { n } } => {
            let f = FieldCtx::new(n)?;
            let subfields: Vec<u32> = (1..=n).filter(|d| n % d == 0).collect();
            Ok(print(json!({
                "n": n,
                "size": f.size(),
                "modulus": format!("{:#x}", f.modulus()),
                "generator": f.generator().to_hex(),
                "multiplicative_order": f.mult_order(),
                "subfield_degrees": subfields,
            })))
        }
        Command::Group { cmd: GroupCmd::Build { q } } => {
            let ctx = UnitaryCtx::new(exponent(q)?)?;
            let nm = ctx.named();
            Ok(print(json!({
                "q": q,
                "d": ctx.d(),
                "orders": {
                    "G": ctx.order_g(), "B": ctx.order_b(), "U": ctx.order_u(), "Z": ctx.order_z(),
                    "H": ctx.order_h(), "H0": ctx.order_h0(), "H1": ctx.order_h1(),
                },
                "cosets": ctx.coset_count(),
                "elements": {
                    "v": nm.v, "u0": nm.u0, "h": nm.h_gen, "h0": nm.h0_gen, "h1": nm.h1_gen,
                    "u_gens": nm.u_gens, "z_gens": nm.z_gens,
                },
            })))
        }
        Command::Bruhat { cmd: BruhatCmd::Decompose { q, element } } => {
            let ctx = UnitaryCtx::new(exponent(q)?)?;
            let g = ctx.parse_element(&element)?;
            let c = ctx.bruhat_decompose(&g)?;
            let back = ctx.bruhat_recompose(&c)?;
            Ok(print(json!({
                "q": q,
                "element": g,
                "coordinates": c,
                "rank": ctx.rank(&g)?,
                "recompose": back == g,
            })))
        }
        Command::Verify { target } => {
            let (ids, args): (Vec<&str>, VerifyArgs) = match target {
                VerifyTarget::All(a) => (ubl_core::lemmas::ALL_CHECKS.to_vec(), a),
                VerifyTarget::Prop3(a) => (vec!["prop3"], a),
                VerifyTarget::Eq6(a) => (vec!["eq6"], a),
                VerifyTarget::Eq7(a) => (vec!["eq7"], a),
                VerifyTarget::StrongEmbedding(a) => (vec!["strong-embedding"], a),
                VerifyTarget::Lemma { id, args } => {
                    let name = lemma_check_id(id).ok_or_else(|| Error::Config(format!("no check for lemma {id}")))?;
                    (vec![name], args)
                }
            };
            let cfg = config(args.q, &args.run)?;
            let wb = Workbench::new(exponent(args.q)?, cfg)?;
            emit(ids.iter().map(|id| wb.run_check(id)), args.run.out.as_ref())
        }
        Command::Tower { chain, run } => {
            let spec = TowerSpec::parse(&chain)?;
            let cfg = config(spec.top().q(), &run)?;
            emit(run_tower(&spec, &cfg).into_iter().map(Ok), run.out.as_ref())
        }
        Command::Recon { cmd: ReconCmd::L2 { q, csv, run } } => {
            let n = exponent(q)?;
            let cfg = config(q, &run)?;
            let report = check_recon(n, &cfg)?;
            if let Some(path) = csv {
                let model = L2Model::new(n)?;
                let f = BufWriter::new(File::create(&path).map_err(io_err)?);
                model.write_csv(f).map_err(|e| Error::Config(format!("csv: {e}")))?;
            }
            emit([Ok(report)], run.out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_string() }));
            ExitCode::from(2)
        }
    }
}
