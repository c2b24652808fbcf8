//! The `tnk` command-line front end.
//!
//! [`run`] takes the full argument vector (program name first) and returns
//! the exit code together with everything destined for stdout and stderr,
//! so the binary is a thin wrapper and tests can drive it in process.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
//! malformed input, shape mismatch), 3 numerical failure or tolerance not
//! met. Failures print a single diagnostic line on stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::decomp::{cp_fit_gd, hosvd, CpFitOptions, HosvdRanks};
use crate::error::Error;
use crate::grad::{finite_diff_jacobian, jacobian_wrt_node};
use crate::io::{
    load_mpo, load_network, load_tensor, load_tt, tensor_to_string, tt_to_string, write_file,
};
use crate::linalg::numerical_rank;
use crate::network::{Bindings, TensorNetwork};
use crate::ops::matricize;
use crate::prob::{prob_validate, BornMachine};
use crate::random::{verify_identity, Identity};
use crate::tensor::{ModeSet, Tensor};
use crate::tt::{mpo_matvec, tt_als_fit, tt_reconstruct, tt_round, tt_scale, tt_svd, TT};

/// What a finished invocation produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "tnk", version, about = "Tensor networks, decompositions and random-tensor checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Contract a network file with bound tensors.
    Contract {
        network: PathBuf,
        #[command(flatten)]
        bind: BindArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Min-cut upper bound on the rank of the output matricization.
    RankBound {
        network: PathBuf,
        #[command(flatten)]
        bind: BindArgs,
        /// Output labels forming the row side.
        #[arg(long, value_delimiter = ',', required = true)]
        rows: Vec<String>,
        /// Also contract and report the numerical rank of the matricization.
        #[arg(long)]
        numerical: bool,
    },
    /// Matricize a tensor with the given (1-based) row modes.
    Matricize {
        tensor: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        rows: Vec<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Fit a CP decomposition by gradient descent.
    CpFit {
        tensor: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 5000)]
        iters: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write factors to PREFIX.factor<n>.ten.
        #[arg(long, value_name = "PREFIX")]
        out: Option<PathBuf>,
    },
    /// Higher-order SVD; exact unless --ranks or --tol is given.
    Hosvd {
        tensor: PathBuf,
        #[arg(long, value_delimiter = ',', conflicts_with = "tol")]
        ranks: Option<Vec<usize>>,
        #[arg(long)]
        tol: Option<f64>,
        /// Write PREFIX.core.ten and PREFIX.factor<n>.ten.
        #[arg(long, value_name = "PREFIX")]
        out: Option<PathBuf>,
    },
    /// Tensor-train decomposition of a dense tensor.
    TtSvd {
        tensor: PathBuf,
        #[command(flatten)]
        trunc: TruncArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Recompress a tensor train.
    TtRound {
        train: PathBuf,
        #[command(flatten)]
        trunc: TruncArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Fit a tensor train of fixed ranks by alternating least squares.
    TtAls {
        tensor: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        sweeps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Dense tensor from a tensor train.
    TtReconstruct {
        train: PathBuf,
        /// Report the relative error against this tensor instead of
        /// printing the reconstruction.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Apply an MPO to a tensor train, optionally rounding the result.
    MpoMatvec {
        operator: PathBuf,
        train: PathBuf,
        #[command(flatten)]
        trunc: TruncArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compare the node-removal Jacobian with central finite differences.
    Gradcheck {
        network: PathBuf,
        #[command(flatten)]
        bind: BindArgs,
        /// Tensor name to differentiate with respect to.
        #[arg(long)]
        wrt: String,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        /// Largest accepted relative error.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Marginal of a dense probability tensor.
    ProbMarginal {
        tensor: PathBuf,
        /// 1-based modes to keep.
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Conditional of a dense probability tensor.
    ProbConditional {
        tensor: PathBuf,
        #[command(flatten)]
        given: GivenArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Normalization constant of a Born machine; --out writes the
    /// normalized train.
    BornNormalize {
        train: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Marginal (--keep) or conditional (--given) of a Born machine.
    BornMarginal {
        train: PathBuf,
        /// 1-based modes to keep.
        #[arg(long, value_delimiter = ',', required_unless_present = "given", conflicts_with = "given")]
        keep: Option<Vec<usize>>,
        /// Conditioning pairs MODE=INDEX (1-based mode, 0-based index).
        #[arg(long, value_delimiter = ',')]
        given: Option<Vec<String>>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Monte Carlo check of a Gaussian expectation identity.
    RandVerify(RandVerifyArgs),
    /// Random-tensor utilities.
    Rand {
        #[command(subcommand)]
        command: RandCommand,
    },
}

#[derive(Subcommand, Debug)]
enum RandCommand {
    /// Same as `rand-verify`.
    Verify(RandVerifyArgs),
}

#[derive(Args, Debug)]
struct RandVerifyArgs {
    /// gram-mean, outer-pair, frob-mean, prod-norm, isserlis4, gram-outer2,
    /// ab-outer2, trace-quartic or chain-example.
    identity: String,
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Covariance matrix for isserlis4.
    #[arg(long)]
    sigma: Option<PathBuf>,
    /// Fixed matrix X for trace-quartic; --dims then gives only n.
    #[arg(long)]
    x: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BindArgs {
    /// Bind NAME=FILE.ten; repeatable.
    #[arg(long = "bind", value_name = "NAME=FILE")]
    bind: Vec<String>,
}

#[derive(Args, Debug)]
struct OutArg {
    /// Write the result here and print a summary instead.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TruncArgs {
    /// Relative Frobenius tolerance.
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    /// Per-bond rank caps.
    #[arg(long, value_delimiter = ',')]
    caps: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct GivenArg {
    /// Conditioning pairs MODE=INDEX (1-based mode, 0-based index).
    #[arg(long, value_delimiter = ',', required = true)]
    given: Vec<String>,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: msg.into(),
    }
}

fn numerical(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_NUMERICAL,
        message: msg.into(),
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` and executes the subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: e.render().to_string(),
                    stderr: String::new(),
                },
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: e.render().to_string(),
                },
                _ => {
                    let text = e.render().to_string();
                    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
                    Outcome {
                        code: EXIT_USAGE,
                        stdout: String::new(),
                        stderr: format!("{line}\n"),
                    }
                }
            };
        }
    };
    let mut out = String::new();
    match execute(cli.command, &mut out) {
        Ok(()) => Outcome {
            code: 0,
            stdout: out,
            stderr: String::new(),
        },
        Err(f) => Outcome {
            code: f.code,
            stdout: out,
            stderr: format!("error: {}\n", f.message.replace('\n', " ")),
        },
    }
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

fn bindings(args: &BindArgs) -> Result<Bindings, Failure> {
    let mut b = Bindings::new();
    for item in &args.bind {
        let (name, file) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--bind expects NAME=FILE, got `{item}`")))?;
        if b.insert(name.to_string(), load_tensor(Path::new(file))?).is_some() {
            return Err(usage(format!("`{name}` is bound twice")));
        }
    }
    Ok(b)
}

fn bound_network(path: &Path, bind: &BindArgs) -> Result<TensorNetwork, Failure> {
    Ok(load_network(path)?.bind(&bindings(bind)?)?)
}

fn given_pairs(items: &[String]) -> Result<Vec<(usize, usize)>, Failure> {
    items
        .iter()
        .map(|item| {
            let parsed = item
                .split_once('=')
                .and_then(|(m, i)| Some((m.trim().parse().ok()?, i.trim().parse().ok()?)));
            parsed.ok_or_else(|| usage(format!("--given expects MODE=INDEX, got `{item}`")))
        })
        .collect()
}

fn emit_tensor(out: &mut String, t: &Tensor, dest: &OutArg) -> CmdResult {
    match &dest.out {
        None => out.push_str(&tensor_to_string(t)),
        Some(p) => {
            write_file(p, &tensor_to_string(t))?;
            kv(out, "shape", list(t.shape()));
            kv(out, "norm", t.norm());
        }
    }
    Ok(())
}

fn emit_tt(out: &mut String, t: &TT, dest: &OutArg) -> CmdResult {
    match &dest.out {
        None => out.push_str(&tt_to_string(t)),
        Some(p) => {
            write_file(p, &tt_to_string(t))?;
            kv(out, "dims", list(&t.dims()));
            kv(out, "ranks", list(&t.ranks()));
            kv(out, "storage", t.storage());
        }
    }
    Ok(())
}

fn caps(trunc: &TruncArgs) -> Option<&[usize]> {
    trunc.caps.as_deref()
}

fn execute(cmd: Command, out: &mut String) -> CmdResult {
    match cmd {
        Command::Contract { network, bind, out: dest } => {
            let t = bound_network(&network, &bind)?.contract()?;
            emit_tensor(out, &t, &dest)
        }
        Command::RankBound {
            network,
            bind,
            rows,
            numerical,
        } => {
            let net = bound_network(&network, &bind)?;
            let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
            let cut = net.rank_bound(&refs)?;
            kv(out, "bound", cut.bound);
            kv(out, "degenerate", cut.degenerate);
            kv(out, "row_nodes", list(&cut.row_side));
            if numerical {
                let modes: Vec<usize> = refs
                    .iter()
                    .map(|r| net.output().iter().position(|o| o == r).unwrap() + 1)
                    .collect();
                let m = matricize(&net.contract()?, &ModeSet::new(&modes)?)?;
                kv(out, "numerical_rank", numerical_rank(&m)?);
            }
            Ok(())
        }
        Command::Matricize { tensor, rows, out: dest } => {
            let t = load_tensor(&tensor)?;
            emit_tensor(out, &matricize(&t, &ModeSet::new(&rows)?)?, &dest)
        }
        Command::CpFit {
            tensor,
            rank,
            iters,
            tol,
            seed,
            out: prefix,
        } => {
            let t = load_tensor(&tensor)?;
            let opts = CpFitOptions {
                max_iters: iters,
                tol,
                seed,
                ..CpFitOptions::default()
            };
            let fit = cp_fit_gd(&t, rank, &opts)?;
            if let Some(p) = prefix {
                for (n, f) in fit.form.factors().iter().enumerate() {
                    write_file(&suffixed(&p, &format!("factor{}.ten", n + 1)), &tensor_to_string(f))?;
                }
            }
            kv(out, "rank", rank);
            kv(out, "iterations", fit.iterations);
            kv(out, "converged", fit.converged);
            kv(out, "loss", fit.loss());
            kv(out, "rel_error", fit.form.reconstruct().rel_error(&t)?);
            Ok(())
        }
        Command::Hosvd {
            tensor,
            ranks,
            tol,
            out: prefix,
        } => {
            let t = load_tensor(&tensor)?;
            let mode = match (ranks, tol) {
                (Some(r), _) => HosvdRanks::Caps(r),
                (None, Some(tol)) => HosvdRanks::Tolerance(tol),
                (None, None) => HosvdRanks::Exact,
            };
            let h = hosvd(&t, &mode)?;
            if let Some(p) = prefix {
                write_file(&suffixed(&p, "core.ten"), &tensor_to_string(h.form.core()))?;
                for (n, f) in h.form.factors().iter().enumerate() {
                    write_file(&suffixed(&p, &format!("factor{}.ten", n + 1)), &tensor_to_string(f))?;
                }
            }
            kv(out, "ranks", list(&h.form.ranks()));
            kv(out, "discarded", list(&h.discarded));
            kv(out, "core_norm", h.form.core().norm());
            kv(out, "rel_error", h.form.reconstruct().rel_error(&t)?);
            Ok(())
        }
        Command::TtSvd { tensor, trunc, out: dest } => {
            let t = load_tensor(&tensor)?;
            let tt = tt_svd(&t, caps(&trunc), trunc.tol)?;
            emit_tt(out, &tt, &dest)?;
            if dest.out.is_some() {
                kv(out, "rel_error", tt_reconstruct(&tt).rel_error(&t)?);
            }
            Ok(())
        }
        Command::TtRound { train, trunc, out: dest } => {
            let tt = load_tt(&train)?;
            let r = tt_round(&tt, caps(&trunc), trunc.tol)?;
            emit_tt(out, &r, &dest)
        }
        Command::TtAls {
            tensor,
            ranks,
            sweeps,
            seed,
            out: dest,
        } => {
            let t = load_tensor(&tensor)?;
            let fit = tt_als_fit(&t, &ranks, sweeps, seed)?;
            emit_tt(out, &fit.tt, &dest)?;
            if dest.out.is_some() {
                kv(out, "loss", fit.loss());
                kv(out, "rel_error", tt_reconstruct(&fit.tt).rel_error(&t)?);
            }
            Ok(())
        }
        Command::TtReconstruct {
            train,
            reference,
            out: dest,
        } => {
            let t = tt_reconstruct(&load_tt(&train)?);
            match reference {
                None => emit_tensor(out, &t, &dest),
                Some(r) => {
                    if let Some(p) = &dest.out {
                        write_file(p, &tensor_to_string(&t))?;
                    }
                    kv(out, "shape", list(t.shape()));
                    kv(out, "rel_error", t.rel_error(&load_tensor(&r)?)?);
                    Ok(())
                }
            }
        }
        Command::MpoMatvec {
            operator,
            train,
            trunc,
            out: dest,
        } => {
            let m = load_mpo(&operator)?;
            let v = load_tt(&train)?;
            let mut y = mpo_matvec(&m, &v)?;
            if trunc.tol > 0.0 || trunc.caps.is_some() {
                y = tt_round(&y, caps(&trunc), trunc.tol)?;
            }
            emit_tt(out, &y, &dest)
        }
        Command::Gradcheck {
            network,
            bind,
            wrt,
            step,
            tol,
        } => {
            let net = bound_network(&network, &bind)?;
            let j = jacobian_wrt_node(&net, &wrt)?.contract()?;
            let fd = finite_diff_jacobian(&net, &wrt, step)?;
            let diff = j.sub(&fd)?;
            let rel = diff.norm() / fd.norm().max(f64::MIN_POSITIVE);
            kv(out, "shape", list(j.shape()));
            kv(out, "max_abs_diff", diff.max_abs());
            kv(out, "rel_error", rel);
            if !(rel <= tol || diff.max_abs() <= tol * step) {
                return Err(numerical(format!("gradient check failed: rel_error {rel:e} > {tol:e}")));
            }
            Ok(())
        }
        Command::ProbMarginal { tensor, keep, out: dest } => {
            let p = prob_validate(load_tensor(&tensor)?)?;
            emit_tensor(out, p.marginal(&ModeSet::new(&keep)?)?.tensor(), &dest)
        }
        Command::ProbConditional { tensor, given, out: dest } => {
            let pairs = given_pairs(&given.given)?;
            let p = prob_validate(load_tensor(&tensor)?)?;
            emit_tensor(out, p.conditional(&pairs)?.tensor(), &dest)
        }
        Command::BornNormalize { train, out: dest } => {
            let b = BornMachine::new(load_tt(&train)?);
            let zeta = b.zeta();
            if !(zeta > 0.0 && zeta.is_finite()) {
                return Err(numerical(format!("normalization constant is {zeta}")));
            }
            if let Some(p) = &dest.out {
                write_file(p, &tt_to_string(&tt_scale(b.tt(), 1.0 / zeta.sqrt())))?;
            }
            kv(out, "zeta", zeta);
            Ok(())
        }
        Command::BornMarginal {
            train,
            keep,
            given,
            out: dest,
        } => {
            let pairs = given.as_deref().map(given_pairs).transpose()?;
            let b = BornMachine::new(load_tt(&train)?);
            let p = match (keep, pairs) {
                (Some(k), _) => b.marginal(&ModeSet::new(&k)?)?,
                (None, Some(g)) => b.conditional(&g)?,
                (None, None) => return Err(usage("one of --keep or --given is required")),
            };
            emit_tensor(out, p.tensor(), &dest)
        }
        Command::RandVerify(args)
        | Command::Rand {
            command: RandCommand::Verify(args),
        } => rand_verify(args, out),
    }
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn rand_verify(args: RandVerifyArgs, out: &mut String) -> CmdResult {
    let id = match (args.identity.as_str(), &args.sigma, &args.x) {
        ("isserlis4", Some(s), _) => Identity::Isserlis4 {
            sigma: load_tensor(s)?,
        },
        ("trace-quartic", _, Some(x)) => match args.dims.as_slice() {
            [n] if *n > 0 => Identity::TraceQuartic {
                x: load_tensor(x)?,
                n: *n,
            },
            _ => return Err(usage("trace-quartic with --x takes --dims N")),
        },
        (_, Some(_), _) => return Err(usage("--sigma applies only to isserlis4")),
        (_, _, Some(_)) => return Err(usage("--x applies only to trace-quartic")),
        (name, None, None) => Identity::from_name(name, &args.dims).map_err(|e| usage(e.to_string()))?,
    };
    let r = verify_identity(&id, args.samples, args.seed)?;
    kv(out, "identity", r.identity);
    kv(out, "samples", r.samples);
    kv(out, "seed", r.seed);
    kv(out, "shape", list(r.analytic.shape()));
    kv(out, "estimate", list(r.estimate.data()));
    kv(out, "analytic", list(r.analytic.data()));
    kv(out, "stderr", list(r.stderr.data()));
    kv(out, "max_abs_z", r.max_abs_z);
    kv(out, "passed", r.passed());
    if !r.passed() {
        return Err(numerical(format!("max |z| = {} exceeds the threshold", r.max_abs_z)));
    }
    Ok(())
}
