//! The `conecg` command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::atoms::{gen_u2, gen_v2};
use crate::cg::engine::{self, CgConfig, CgRun, Mode, Pricing};
use crate::cg::sdp::{SdpMaster, SdpProblem};
use crate::conic::BACKEND_NAME;
use crate::error::{Error, Result};
use crate::generate::{gen_er, gen_quartic, gen_spectrahedron, NORMAL_METHOD, RNG_NAME};
use crate::poly::{cg_polymin, Poly};
use crate::stableset::{cg_stableset, Graph};

#[derive(Parser, Debug)]
#[command(
    name = "conecg",
    version,
    about = "Column generation bounds from DD/SDD inner approximations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lower-bound the minimum of an even-degree form on the unit sphere.
    Polymin(RunArgs),
    /// Upper-bound the stability number of a graph.
    Stableset(RunArgs),
    /// Lower-bound max bᵀy s.t. C − Σ y_iA_i ⪰ 0.
    Sdp(RunArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Lp,
    Socp,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PricingArg {
    Eig,
    Triples,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Instance file (polynomial, DIMACS graph or SDP text format).
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    pub input: Option<PathBuf>,
    /// Generated instance: quartic:N, motzkin; er:N:P, petersen,
    /// petersen-complement, cycle:N, path:N, complete:N, empty:N; spectra:N.
    #[arg(long)]
    pub gen: Option<String>,
    #[arg(long, value_enum, default_value = "lp")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "eig")]
    pub pricing: PricingArg,
    /// Violated triples collected per scan.
    #[arg(long)]
    pub t1: Option<usize>,
    /// Triples added per iteration (default 5000, 500 for stableset).
    #[arg(long)]
    pub t2: Option<usize>,
    /// Eigenvector atoms (or pairs) added per iteration.
    #[arg(long, default_value_t = 1)]
    pub cuts: usize,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    /// Wall-clock limit in seconds, checked between master solves.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trace CSV destination (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary CSV destination (stderr if absent).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Write 0 for elapsed_ms so repeated runs give identical output.
    #[arg(long)]
    pub no_timing: bool,
}

impl RunArgs {
    fn config(&self, default_t2: usize) -> Result<CgConfig> {
        let mode = match self.mode {
            ModeArg::Lp => Mode::Lp,
            ModeArg::Socp => Mode::Socp,
        };
        let pricing = match self.pricing {
            PricingArg::Eig => Pricing::Eig,
            PricingArg::Triples => Pricing::Triples,
        };
        let mut c = CgConfig::new(mode, pricing);
        c.cuts_per_iter = self.cuts;
        if let Some(t1) = self.t1 {
            c.t1 = t1;
        }
        c.t2 = self.t2.unwrap_or(default_t2);
        c.max_iters = self.max_iters;
        if let Some(t) = self.time_limit {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidInput(
                    "--time-limit must be a nonnegative number of seconds".into(),
                ));
            }
            c.time_limit = Some(Duration::from_secs_f64(t));
        }
        c.record_timing = !self.no_timing;
        c.validate()?;
        Ok(c)
    }

    fn instance_name(&self) -> String {
        match (&self.gen, &self.input) {
            (Some(g), _) => g.clone(),
            (None, Some(p)) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "input".into()),
            (None, None) => "input".into(),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn gen_parts(spec: &str) -> (&str, Vec<&str>) {
    let mut it = spec.split(':');
    let head = it.next().unwrap_or("");
    (head, it.collect())
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("bad {what} `{s}` in generator spec")))
}

fn one_size(args: &[&str], spec: &str) -> Result<usize> {
    match args {
        [n] => parse_num(n, "size"),
        _ => Err(Error::InvalidInput(format!(
            "generator `{spec}` needs exactly one size argument"
        ))),
    }
}

pub fn generate_poly(spec: &str, seed: u64) -> Result<Poly> {
    match gen_parts(spec) {
        ("quartic", a) => {
            let n = one_size(&a, spec)?;
            if !(2..=30).contains(&n) {
                return Err(Error::InvalidInput("quartic size must be in 2..=30".into()));
            }
            gen_quartic(n, seed)
        }
        ("motzkin", a) if a.is_empty() => Ok(Poly::motzkin()),
        _ => Err(Error::InvalidInput(format!(
            "unknown polynomial generator `{spec}` (quartic:N, motzkin)"
        ))),
    }
}

pub fn generate_graph(spec: &str, seed: u64) -> Result<Graph> {
    const MAX_NODES: usize = 5000;
    let sized = |a: &[&str]| -> Result<usize> {
        let n = one_size(a, spec)?;
        if n == 0 || n > MAX_NODES {
            return Err(Error::InvalidInput(format!(
                "graph size must be in 1..={MAX_NODES}"
            )));
        }
        Ok(n)
    };
    match gen_parts(spec) {
        ("er", a) => match a.as_slice() {
            [n, p] => {
                let n: usize = parse_num(n, "size")?;
                if n == 0 || n > MAX_NODES {
                    return Err(Error::InvalidInput(format!("graph size must be in 1..={MAX_NODES}")));
                }
                gen_er(n, parse_num(p, "probability")?, seed)
            }
            _ => Err(Error::InvalidInput("er generator takes er:N:P".into())),
        },
        ("petersen", a) if a.is_empty() => Ok(Graph::petersen()),
        ("petersen-complement", a) if a.is_empty() => Ok(Graph::petersen().complement()),
        ("cycle", a) => Ok(Graph::cycle(sized(&a)?)),
        ("path", a) => Ok(Graph::path(sized(&a)?)),
        ("complete", a) => Ok(Graph::complete(sized(&a)?)),
        ("empty", a) => Ok(Graph::empty(sized(&a)?)),
        _ => Err(Error::InvalidInput(format!(
            "unknown graph generator `{spec}` (er:N:P, petersen, petersen-complement, cycle:N, path:N, complete:N, empty:N)"
        ))),
    }
}

pub fn generate_sdp(spec: &str, seed: u64) -> Result<SdpProblem> {
    match gen_parts(spec) {
        ("spectra", a) => {
            let n = one_size(&a, spec)?;
            if !(1..=500).contains(&n) {
                return Err(Error::InvalidInput(
                    "spectrahedron size must be in 1..=500".into(),
                ));
            }
            gen_spectrahedron(n, seed)
        }
        _ => Err(Error::InvalidInput(format!(
            "unknown SDP generator `{spec}` (spectra:N)"
        ))),
    }
}

/// What a subcommand produced.
pub struct Outcome {
    pub csv: String,
    pub summary: String,
}

fn header(sub: &str, args: &RunArgs, cfg: &CgConfig, run: &CgRun) -> Vec<String> {
    vec![
        format!("conecg {} {sub}", env!("CARGO_PKG_VERSION")),
        format!("instance={}", args.instance_name()),
        format!("seed={}", args.seed),
        format!("rng={RNG_NAME} normal={NORMAL_METHOD}"),
        format!("backend={BACKEND_NAME}"),
        format!(
            "mode={} pricing={} cuts={} t1={} t2={} max_iters={}",
            cfg.mode, cfg.pricing, cfg.cuts_per_iter, cfg.t1, cfg.t2, cfg.max_iters
        ),
        format!("termination={}", run.trace.termination),
    ]
}

/// Runs one subcommand and returns its outputs without touching the
/// filesystem (except to read `--input`).
pub fn execute(command: &Command) -> Result<Outcome> {
    if let Ok(b) = std::env::var("CONECG_BACKEND") {
        if b != BACKEND_NAME {
            return Err(Error::InvalidInput(format!(
                "backend `{b}` is not available (compiled in: {BACKEND_NAME})"
            )));
        }
    }
    match command {
        Command::Polymin(args) => {
            let p = match (&args.gen, &args.input) {
                (Some(g), _) => generate_poly(g, args.seed)?,
                (None, Some(path)) => Poly::parse(&read(path)?)?,
                _ => return Err(Error::InvalidInput("need --input or --gen".into())),
            };
            let cfg = args.config(5000)?;
            let run = cg_polymin(&p, &cfg)?;
            let csv = run.trace.to_csv(&header("polymin", args, &cfg, &run));
            let summary = format!(
                "instance,n,degree,mode,pricing,final_bound,iters,converged\n{},{},{},{},{},{:?},{},{}\n",
                args.instance_name(),
                p.n(),
                p.degree(),
                cfg.mode,
                cfg.pricing,
                run.trace.final_bound(),
                run.trace.iterations(),
                run.trace.converged()
            );
            Ok(Outcome { csv, summary })
        }
        Command::Stableset(args) => {
            let g = match (&args.gen, &args.input) {
                (Some(spec), _) => generate_graph(spec, args.seed)?,
                (None, Some(path)) => Graph::parse_dimacs(&read(path)?)?,
                _ => return Err(Error::InvalidInput("need --input or --gen".into())),
            };
            let cfg = args.config(500)?;
            let run = cg_stableset(&g, &cfg)?;
            let csv = run.trace.to_csv(&header("stableset", args, &cfg, &run));
            let summary = format!(
                "graph,n,m,mode,pricing,final_bound,iters,converged\n{},{},{},{},{},{:?},{},{}\n",
                args.instance_name(),
                g.n(),
                g.num_edges(),
                cfg.mode,
                cfg.pricing,
                run.trace.final_bound(),
                run.trace.iterations(),
                run.trace.converged()
            );
            Ok(Outcome { csv, summary })
        }
        Command::Sdp(args) => {
            let prob = match (&args.gen, &args.input) {
                (Some(spec), _) => generate_sdp(spec, args.seed)?,
                (None, Some(path)) => SdpProblem::parse(&read(path)?)?,
                _ => return Err(Error::InvalidInput("need --input or --gen".into())),
            };
            let cfg = args.config(5000)?;
            let n = prob.n();
            let init = match cfg.mode {
                Mode::Socp if n >= 2 => gen_v2(n),
                _ => gen_u2(n),
            };
            let run = engine::run(&mut SdpMaster::new(prob), init, &cfg)?;
            let csv = run.trace.to_csv(&header("sdp", args, &cfg, &run));
            let summary = format!(
                "instance,n,mode,pricing,final_bound,iters,converged\n{},{},{},{},{:?},{},{}\n",
                args.instance_name(),
                n,
                cfg.mode,
                cfg.pricing,
                run.trace.final_bound(),
                run.trace.iterations(),
                run.trace.converged()
            );
            Ok(Outcome { csv, summary })
        }
    }
}

fn args_of(c: &Command) -> &RunArgs {
    match c {
        Command::Polymin(a) | Command::Stableset(a) | Command::Sdp(a) => a,
    }
}

/// Entry point shared by the binary and tests. Returns the exit code:
/// 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let args = args_of(&cli.command);
    let written = match &args.out {
        Some(path) => std::fs::write(path, &outcome.csv)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout
            .write_all(outcome.csv.as_bytes())
            .map_err(|e| e.to_string()),
    }
    .and_then(|_| match &args.summary {
        Some(path) => std::fs::write(path, &outcome.summary)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stderr
            .write_all(outcome.summary.as_bytes())
            .map_err(|e| e.to_string()),
    });
    match written {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(
            std::iter::once("conecg").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(&[]).0, 2);
        assert_eq!(run(&["stableset"]).0, 2);
        assert_eq!(run(&["stableset", "--gen", "cycle:5", "--input", "x"]).0, 2);
        assert_eq!(run(&["stableset", "--gen", "cycle:5", "--bogus"]).0, 2);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn bad_generators_fail_cleanly() {
        for g in [
            "er:10",
            "er:x:0.5",
            "er:10:2",
            "cycle:0",
            "nope",
            "cycle:1:2",
        ] {
            let (code, _, err) = run(&["stableset", "--gen", g]);
            assert_eq!(code, 1, "{g}");
            assert!(err.starts_with("error:"), "{err}");
        }
        assert_eq!(run(&["polymin", "--gen", "quartic:1"]).0, 1);
        assert_eq!(run(&["sdp", "--gen", "spectra"]).0, 1);
    }

    #[test]
    fn missing_input_file() {
        let (code, _, err) = run(&["sdp", "--input", "/nonexistent/file.sdp"]);
        assert_eq!(code, 1);
        assert!(err.contains("cannot read"));
    }

    #[test]
    fn stableset_csv_shape() {
        let (code, out, err) = run(&[
            "stableset",
            "--gen",
            "cycle:5",
            "--max-iters",
            "3",
            "--no-timing",
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("# seed=0"));
        assert!(out.contains("iter,bound,atoms_added,status,elapsed_ms"));
        assert!(err.starts_with(
            "graph,n,m,mode,pricing,final_bound,iters,converged\ncycle:5,5,5,lp,eig,"
        ));
        let recs = engine::parse_trace_csv(&out).unwrap();
        assert!(!recs.is_empty() && recs.len() <= 4);
        assert!(recs.iter().all(|r| r.elapsed_ms == 0));
    }
}
