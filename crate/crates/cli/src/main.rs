//! `trustlam` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use trustlam::analysis::{DEFAULT_NODE_LIMIT, DEFAULT_VECTOR_LIMIT};
use trustlam::machine::DEFAULT_FUEL;
use trustlam::{
    build_tree, check_program, confidence, confidence_curve, eval, infer_closed, output_distribution, parse_dist,
    parse_program, run, Diagnostic, Dist, Env, Limits, Rat, RTree, Term, TypeError,
};

#[derive(Parser)]
#[command(name = "trustlam", version, about = "Run and analyse programs of a probabilistic lambda calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a program and print the type of `main`.
    Check { file: PathBuf },
    /// Evaluate `main` with seeds seed, seed+1, ...
    Run { file: PathBuf },
    /// Print the exact output distribution of `main`.
    Dist { file: PathBuf },
    /// Sample a trust verdict and print the exact probability of `true`.
    Trust { file: PathBuf },
    /// Print exact confidence values for n = 1..n-max (or just --n).
    Confidence { file: PathBuf },
    /// Print the reduction tree of `main`.
    Tree { file: PathBuf },
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Experiment size for `trust`, or a single point for `confidence`.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true, default_value_t = 10)]
    n_max: usize,
    /// Tolerance used when the target has no `@ eps`.
    #[arg(long, global = true, default_value = "1/20")]
    eps: String,
    /// Target distribution, e.g. "(1/2 H, 1/2 T) @ 1/4".
    #[arg(long, global = true)]
    target: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true, env = "TRUSTLAM_NODE_LIMIT", default_value_t = DEFAULT_NODE_LIMIT)]
    node_limit: usize,
    /// Print a JSON trace of every step.
    #[arg(long, global = true)]
    trace: bool,
    /// Show probabilities as decimals.
    #[arg(long, global = true)]
    decimal: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

enum Failure {
    Io(String),
    Parse(Vec<Diagnostic>),
    Type(Vec<Diagnostic>),
    Other(&'static str, String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 2,
            Failure::Parse(_) => 3,
            Failure::Type(_) => 4,
            Failure::Other(..) => 1,
        }
    }

    fn diagnostics(self) -> Vec<Diagnostic> {
        let plain = |code: &str, message: String| Diagnostic {
            code: code.to_string(),
            message,
            line: 0,
            col: 0,
        };
        match self {
            Failure::Io(m) => vec![plain("io", m)],
            Failure::Parse(ds) | Failure::Type(ds) => ds,
            Failure::Other(code, m) => vec![plain(code, m)],
        }
    }
}

fn type_failure(e: TypeError) -> Failure {
    Failure::Type(vec![Diagnostic {
        code: e.kind.code().to_string(),
        message: e.kind.to_string(),
        line: 0,
        col: 0,
    }])
}

fn other(code: &'static str) -> impl Fn(String) -> Failure {
    move |m| Failure::Other(code, m)
}

struct Loaded {
    env: Env,
    main: Term,
    ty: String,
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let src = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let p = parse_program(&src).map_err(|e| Failure::Parse(vec![Diagnostic::from(&e)]))?;
    let typed = check_program(&p).map_err(Failure::Type)?;
    let env = Env::from_program(&p).map_err(type_failure)?;
    Ok(Loaded {
        env,
        main: p.main,
        ty: typed.ty.to_string(),
    })
}

struct Ctx {
    opts: Opts,
}

impl Ctx {
    fn prob(&self, r: &Rat) -> String {
        if self.opts.decimal {
            r.to_decimal(6)
        } else {
            r.to_string()
        }
    }

    fn limits(&self) -> Limits {
        Limits {
            nodes: self.opts.node_limit,
            vectors: DEFAULT_VECTOR_LIMIT,
        }
    }

    fn json_only(&self, what: &str) -> Result<(), Failure> {
        match self.opts.format {
            Format::Dot => Err(Failure::Other("usage", format!("{what} has no dot output"))),
            _ => Ok(()),
        }
    }

    /// The sampled term, experiment size and target for `trust` and
    /// `confidence`: either from flags, or read off a `main` of the form
    /// `trust exp[n] t with P`.
    fn experiment(&self, l: &Loaded, need_n: bool) -> Result<(Term, Option<usize>, Dist), Failure> {
        if let Some(src) = &self.opts.target {
            let eps = self.opts.eps.parse::<Rat>().map_err(|e| Failure::Other("usage", format!("--eps: {e}")))?;
            let target = parse_dist(src, &l.env.atom_names(), eps).map_err(|e| Failure::Parse(vec![Diagnostic::from(&e)]))?;
            l.env.subtypes.validate_dist(&target).map_err(type_failure)?;
            if need_n && self.opts.n.is_none() {
                return Err(Failure::Other("usage", "--n is required with --target".into()));
            }
            return Ok((l.main.clone(), self.opts.n, target));
        }
        match &l.main {
            Term::Trust(subject, target) => match subject.as_ref() {
                Term::Exp(n, s) => Ok(((**s).clone(), Some(self.opts.n.unwrap_or(*n)), target.clone())),
                _ => Err(Failure::Other("usage", "main is not `trust exp[n] t with ...`; pass --target".into())),
            },
            _ => Err(Failure::Other("usage", "no target: pass --target or use a main of the form `trust exp[n] t with ...`".into())),
        }
    }
}

fn cmd_check(ctx: &Ctx, file: &Path) -> Result<String, Failure> {
    let l = load(file)?;
    ctx.json_only("check")?;
    Ok(match ctx.opts.format {
        Format::Json => json!({ "type": l.ty }).to_string(),
        _ => l.ty,
    })
}

fn cmd_run(ctx: &Ctx, file: &Path) -> Result<String, Failure> {
    let l = load(file)?;
    ctx.json_only("run")?;
    let seeds: Vec<u64> = (0..ctx.opts.trials).map(|i| ctx.opts.seed.wrapping_add(i)).collect();
    let lines: Vec<String> = if ctx.opts.trace {
        seeds
            .par_iter()
            .map(|&s| eval(&l.main, s, DEFAULT_FUEL, &l.env).map(|t| t.to_json().to_string()))
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Other("runtime", e.to_string()))?
    } else {
        let results: Vec<(u64, Term, u64)> = seeds
            .par_iter()
            .map(|&s| run(&l.main, s, DEFAULT_FUEL, &l.env).map(|(v, n)| (s, v, n)))
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Other("runtime", e.to_string()))?;
        match ctx.opts.format {
            Format::Json => {
                let rs: Vec<Value> = results
                    .iter()
                    .map(|(s, v, n)| json!({"seed": s, "value": v.to_string(), "steps": n}))
                    .collect();
                vec![json!({ "results": rs }).to_string()]
            }
            _ => results.iter().map(|(_, v, _)| v.to_string()).collect(),
        }
    };
    Ok(lines.join("\n"))
}

fn cmd_dist(ctx: &Ctx, file: &Path) -> Result<String, Failure> {
    let l = load(file)?;
    ctx.json_only("dist")?;
    let od = output_distribution(&l.main, &l.env, &ctx.limits()).map_err(|e| other("analysis")(e.to_string()))?;
    Ok(match ctx.opts.format {
        Format::Json => {
            let es: Vec<Value> = od
                .entries
                .iter()
                .map(|(v, p)| json!({"value": v.to_string(), "prob": ctx.prob(p)}))
                .collect();
            json!({ "entries": es }).to_string()
        }
        _ => od
            .entries
            .iter()
            .map(|(v, p)| format!("{v}: {}", ctx.prob(p)))
            .collect::<Vec<_>>()
            .join("\n"),
    })
}

fn cmd_trust(ctx: &Ctx, file: &Path) -> Result<String, Failure> {
    let l = load(file)?;
    ctx.json_only("trust")?;
    let (s, n, target) = ctx.experiment(&l, true)?;
    let n = n.expect("experiment size");
    let wrapped = Term::trust(Term::exp(n, s.clone()), target.clone());
    infer_closed(&wrapped, &l.env).map_err(type_failure)?;
    let seeds: Vec<u64> = (0..ctx.opts.trials).map(|i| ctx.opts.seed.wrapping_add(i)).collect();
    let verdicts: Vec<(u64, Term)> = seeds
        .par_iter()
        .map(|&seed| run(&wrapped, seed, DEFAULT_FUEL, &l.env).map(|(v, _)| (seed, v)))
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Other("runtime", e.to_string()))?;
    let p = confidence(&s, &target, n, &l.env, &ctx.limits()).map_err(|e| other("analysis")(e.to_string()))?;
    Ok(match ctx.opts.format {
        Format::Json => {
            let vs: Vec<Value> = verdicts
                .iter()
                .map(|(seed, v)| json!({"seed": seed, "value": v.to_string()}))
                .collect();
            json!({"term": wrapped.to_string(), "verdicts": vs, "prob_true": ctx.prob(&p)}).to_string()
        }
        _ => {
            let mut out: Vec<String> = verdicts.iter().map(|(_, v)| v.to_string()).collect();
            out.push(format!("Pr(true) = {}", ctx.prob(&p)));
            out.join("\n")
        }
    })
}

fn cmd_confidence(ctx: &Ctx, file: &Path) -> Result<String, Failure> {
    let l = load(file)?;
    ctx.json_only("confidence")?;
    let (s, n, target) = ctx.experiment(&l, false)?;
    let limits = ctx.limits();
    let points: Vec<(usize, Rat)> = match ctx.opts.n.and(n) {
        Some(n) => vec![(n, confidence(&s, &target, n, &l.env, &limits).map_err(|e| other("analysis")(e.to_string()))?)],
        None => {
            confidence_curve(&s, &target, ctx.opts.n_max, &l.env, &limits)
                .map_err(|e| other("analysis")(e.to_string()))?
                .points
        }
    };
    Ok(match ctx.opts.format {
        Format::Json => {
            let ps: Vec<Value> = points
                .iter()
                .map(|(n, r)| json!({"n": n, "value": ctx.prob(r)}))
                .collect();
            json!({"term": s.to_string(), "target": target.to_string(), "points": ps}).to_string()
        }
        _ => points
            .iter()
            .map(|(n, r)| format!("{n}: {}", ctx.prob(r)))
            .collect::<Vec<_>>()
            .join("\n"),
    })
}

fn tree_text(ctx: &Ctx, tree: &RTree) -> String {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, 0usize, None::<Rat>)];
    while let Some((i, depth, p)) = stack.pop() {
        let node = tree.node(i);
        let edge = p.map(|p| format!("[{}] ", ctx.prob(&p))).unwrap_or_default();
        out.push(format!("{}{edge}{}", "  ".repeat(depth), node.term));
        for (q, c) in node.children.iter().rev() {
            stack.push((*c, depth + 1, Some(q.clone())));
        }
    }
    out.join("\n")
}

fn cmd_tree(ctx: &Ctx, file: &Path) -> Result<String, Failure> {
    let l = load(file)?;
    let tree = build_tree(&l.main, &l.env, ctx.opts.node_limit).map_err(|e| other("analysis")(e.to_string()))?;
    Ok(match ctx.opts.format {
        Format::Dot => tree.to_dot(),
        Format::Json => tree.to_json().to_string(),
        Format::Text => tree_text(ctx, &tree),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let ctx = Ctx { opts: cli.opts };
    let result = match &cli.command {
        Command::Check { file } => cmd_check(&ctx, file),
        Command::Run { file } => cmd_run(&ctx, file),
        Command::Dist { file } => cmd_dist(&ctx, file),
        Command::Trust { file } => cmd_trust(&ctx, file),
        Command::Confidence { file } => cmd_confidence(&ctx, file),
        Command::Tree { file } => cmd_tree(&ctx, file),
    };
    match result {
        Ok(out) => {
            println!("{}", out.trim_end());
            ExitCode::SUCCESS
        }
        Err(f) => {
            let code = f.exit_code();
            for d in f.diagnostics() {
                eprintln!("{}", serde_json::to_string(&d).expect("diagnostic serializes"));
            }
            ExitCode::from(code)
        }
    }
}
