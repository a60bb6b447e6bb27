use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use grm::corrector::{decode, DecodeOptions};
use grm::generic::{build_generic, run_generic_test, BlockProductSpec};
use grm::grassmann::{
    affine_shadow_check, edge_expansion, edge_expansion_sampled, flat_shadow_check,
    persistence_check, phi_checks, random_zoom, rejecting_set, zoom_density, VertexSet,
    DEFAULT_GRAPH_BUDGET,
};
use grm::oracle::{distance_to_code, exact_degree, DEFAULT_BUDGET};
use grm::stats::{stream_rng, Proportion};
use grm::sweep::{fit_c, query_report, run_sweep, SweepRecord};
use grm::{
    build_spec, derive_params, estimate_rejection, run_sparse_test, AffineMap, Elem, Error,
    EvalTable, Field, TesterSpec,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "grm",
    version,
    about = "Sparse flat testing for generalized Reed-Muller codes"
)]
struct Cli {
    /// Field as p^k.
    #[arg(long, global = true, default_value = "2^2")]
    field: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Work budget for exhaustive enumerations.
    #[arg(long, global = true)]
    budget: Option<u128>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct DegreeArgs {
    #[arg(long)]
    d: usize,
    /// Tail arity (default p+2).
    #[arg(long)]
    t: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the field tables against the field axioms.
    Field,
    /// Tester parameters and support sizes.
    Spec(DegreeArgs),
    /// Query-count comparison with the full flat tester.
    Report(DegreeArgs),
    /// Estimate the rejection rate of a function, or run one test with --map.
    Test {
        #[command(flatten)]
        deg: DegreeArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Rejection rates of perturbed codewords, as CSV.
    Sweep {
        #[command(flatten)]
        deg: DegreeArgs,
        #[arg(long)]
        n: usize,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,0.001,0.002,0.004,0.008,0.016"
        )]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Affine Grassmann and affine bilinear scheme analytics.
    Graph {
        #[command(subcommand)]
        cmd: GraphCmd,
    },
    /// Brute-force code oracles.
    Oracle {
        #[command(subcommand)]
        cmd: OracleCmd,
    },
    /// Iterative local correction.
    Decode {
        #[command(flatten)]
        deg: DegreeArgs,
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_steps: usize,
        /// Trials of each overall rejection estimate.
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        /// Where to write the corrected table (stdout trace only if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block-product testers from a spec file.
    Generic {
        #[command(subcommand)]
        cmd: GenericCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ZoomKind {
    In,
    InLin,
    Out,
    OutLin,
}

impl ZoomKind {
    fn name(self) -> &'static str {
        match self {
            ZoomKind::In => "in",
            ZoomKind::InLin => "in-lin",
            ZoomKind::Out => "out",
            ZoomKind::OutLin => "out-lin",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ShadowKind {
    Flat,
    Affine,
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Edge expansion of a zoom set, or of the rejecting set of a function.
    Expansion {
        #[arg(long)]
        zoom: Option<ZoomKind>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long = "fn")]
        func: Option<PathBuf>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 100_000)]
        max_tries: u64,
    },
    /// Upper-shadow ratio of the rejecting flats or maps of a function.
    Shadow {
        #[command(flatten)]
        deg: DegreeArgs,
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, value_enum, default_value = "affine")]
        kind: ShadowKind,
        /// Flat dimension for the flat shadow.
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
    },
    /// Density of the rejecting set inside a random zoom.
    Zoom {
        #[command(flatten)]
        deg: DegreeArgs,
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, value_enum)]
        kind: ZoomKind,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
    },
    /// Probability that a rejecting map still rejects after one step.
    Persistence {
        #[command(flatten)]
        deg: DegreeArgs,
        #[arg(long = "fn")]
        func: PathBuf,
        /// Use the up-down walk instead of the fully uniform step.
        #[arg(long)]
        proper: bool,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 100_000)]
        max_tries: u64,
    },
    /// Checks of the embedding of maps into flats.
    Phi {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Exact degree of a table.
    Degree {
        #[arg(long = "fn")]
        func: PathBuf,
    },
    /// Distance to the nearest codeword of degree at most d.
    Distance {
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Subcommand)]
enum GenericCmd {
    /// Estimate the rejection rate of a block-product tester.
    Test {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long)]
        map: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()?;
    let fs = Field::from_name(&cli.field)?;
    let seed = cli.seed;
    let budget = cli.budget;
    match cli.cmd {
        Cmd::Field => emit(&field_check(&fs)),
        Cmd::Spec(deg) => {
            let spec = spec_for(&fs, deg)?;
            let report = query_report(&spec);
            emit(&json!({
                "field": report.field,
                "d": report.d,
                "s": report.s,
                "r": report.r,
                "t": report.t,
                "supp_p": report.supp_p,
                "supp_h": report.supp_h,
                "valid_exps": spec.valid_exps().len(),
                "bound": report.bound,
            }))
        }
        Cmd::Report(deg) => emit(&query_report(&spec_for(&fs, deg)?)),
        Cmd::Test {
            deg,
            n,
            func,
            trials,
            map,
        } => {
            let spec = spec_for(&fs, deg)?;
            let f = load_table(&fs, &func, n)?;
            match map {
                Some(path) => {
                    let t = load_map(&fs, &path)?;
                    emit(&run_sparse_test(&f, &t, &spec)?)
                }
                None => {
                    let est = estimate_rejection(&f, &spec, trials, seed)?;
                    emit(&json!({
                        "rate": est.rate,
                        "ci": est.ci,
                        "rejections": est.rejections,
                        "trials": est.trials,
                        "queries": est.queries,
                        "witnesses": est.witnesses,
                        "seed": seed,
                    }))
                }
            }
        }
        Cmd::Sweep {
            deg,
            n,
            deltas,
            trials,
        } => {
            let spec = spec_for(&fs, deg)?;
            let records = run_sweep(&spec, n, &deltas, trials, seed)?;
            println!("{}", SweepRecord::CSV_HEADER);
            for r in &records {
                println!("{}", r.to_csv());
            }
            if let Some(c) = fit_c(&records) {
                println!("# fitted_c={c:.6}");
            }
            Ok(())
        }
        Cmd::Graph { cmd } => graph(&fs, cmd, seed, budget.unwrap_or(DEFAULT_GRAPH_BUDGET)),
        Cmd::Oracle { cmd } => match cmd {
            OracleCmd::Degree { func } => {
                let f = load_table(&fs, &func, None)?;
                emit(&json!({ "degree": exact_degree(&fs, &f) }))
            }
            OracleCmd::Distance { func, d } => {
                let f = load_table(&fs, &func, None)?;
                let res = distance_to_code(&fs, &f, d, budget.unwrap_or(DEFAULT_BUDGET))?;
                emit(&json!({
                    "errors": res.errors,
                    "points": res.points,
                    "delta": res.delta(),
                    "ties": res.ties,
                    "coeffs": res.coeffs,
                    "nearest": res.nearest.values(),
                }))
            }
        },
        Cmd::Decode {
            deg,
            func,
            max_steps,
            trials,
            out,
        } => {
            let spec = spec_for(&fs, deg)?;
            let f = load_table(&fs, &func, None)?;
            let opts = DecodeOptions {
                max_steps,
                estimate_trials: trials,
                ..DecodeOptions::default()
            };
            let (fixed, trace) = decode(&f, &spec, &opts, seed)?;
            if let Some(path) = out {
                fs::write(&path, fixed.to_text())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            emit(&json!({ "seed": seed, "trace": trace }))
        }
        Cmd::Generic {
            cmd:
                GenericCmd::Test {
                    spec,
                    func,
                    trials,
                    map,
                },
        } => {
            let text = read(&spec)?;
            let g = build_generic(&fs, &BlockProductSpec::parse(&fs, &text)?)?;
            let f = load_table(&fs, &func, None)?;
            if let Some(path) = map {
                let t = load_map(&fs, &path)?;
                return emit(&run_generic_test(&f, &t, &g)?);
            }
            let rejections = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let t = AffineMap::sample_uniform(
                        &fs,
                        f.arity(),
                        g.dim(),
                        &mut stream_rng(seed, i),
                    );
                    Ok(u64::from(run_generic_test(&f, &t, &g)?.reject))
                })
                .sum::<grm::Result<u64>>()?;
            let prop = Proportion::new(rejections, trials);
            emit(&json!({
                "rate": prop.rate,
                "ci": prop.ci,
                "rejections": rejections,
                "trials": trials,
                "queries": g.queries(),
                "seed": seed,
            }))
        }
    }
}

fn graph(fs: &Field, cmd: GraphCmd, seed: u64, budget: u128) -> Result<()> {
    match cmd {
        GraphCmd::Expansion {
            zoom,
            n,
            l,
            func,
            d,
            t,
            trials,
            max_tries,
        } => {
            let stats = if let Some(kind) = zoom {
                let (n, l) = n
                    .zip(l)
                    .ok_or_else(|| Error::BadParams("--zoom needs --n and --l".into()))?;
                let z = random_zoom(fs, kind.name(), n, l, &mut stream_rng(seed, u64::MAX))?;
                let set = VertexSet::zoom(fs, n, l, z.clone());
                let stats = expansion(fs, &set, budget, trials, seed, max_tries)?;
                json!({ "zoom": z, "stats": stats })
            } else {
                let (func, d) = func
                    .zip(d)
                    .ok_or_else(|| Error::BadParams("need --zoom or --fn with --d".into()))?;
                let spec = spec_for(fs, DegreeArgs { d, t })?;
                let f = load_table(fs, &func, n)?;
                let set = rejecting_set(&f, &spec);
                json!({ "stats": expansion(fs, &set, budget, trials, seed, max_tries)? })
            };
            emit(&stats)
        }
        GraphCmd::Shadow {
            deg,
            func,
            kind,
            l,
            trials,
        } => {
            let f = load_table(fs, &func, None)?;
            let report = match kind {
                ShadowKind::Flat => flat_shadow_check(fs, &f, deg.d, l, trials, seed)?,
                ShadowKind::Affine => affine_shadow_check(&f, &spec_for(fs, deg)?, trials, seed)?,
            };
            emit(&json!({ "seed": seed, "shadow": report }))
        }
        GraphCmd::Zoom {
            deg,
            func,
            kind,
            trials,
        } => {
            let spec = spec_for(fs, deg)?;
            let f = load_table(fs, &func, None)?;
            let (n, l) = (f.arity(), spec.dim());
            let z = random_zoom(fs, kind.name(), n, l, &mut stream_rng(seed, u64::MAX))?;
            let density = zoom_density(fs, &rejecting_set(&f, &spec), &z, budget, trials, seed)?;
            emit(&json!({ "seed": seed, "zoom": z, "density": density }))
        }
        GraphCmd::Persistence {
            deg,
            func,
            proper,
            trials,
            max_tries,
        } => {
            let spec = spec_for(fs, deg)?;
            let f = load_table(fs, &func, None)?;
            let stay = persistence_check(&f, &spec, trials, seed, proper, max_tries)?;
            emit(&json!({ "seed": seed, "proper": proper, "stay": stay }))
        }
        GraphCmd::Phi { n, l } => emit(&phi_checks(fs, n, l, budget)?),
    }
}

fn expansion(
    fs: &Field,
    set: &VertexSet,
    budget: u128,
    trials: u64,
    seed: u64,
    max_tries: u64,
) -> Result<impl Serialize> {
    match edge_expansion(fs, set, budget) {
        Err(Error::BudgetExceeded { .. }) => {
            Ok(edge_expansion_sampled(fs, set, trials, seed, max_tries)?)
        }
        other => Ok(other?),
    }
}

fn field_check(fs: &Field) -> serde_json::Value {
    let elems: Vec<Elem> = fs.elements().collect();
    let (zero, one) = (Elem(0), Elem(1));
    let inverses = elems.iter().skip(1).all(|&a| fs.mul(a, fs.inv(a)) == one);
    let negation = elems.iter().all(|&a| fs.add(a, fs.neg(a)) == zero);
    let commutative = elems.iter().all(|&a| {
        elems
            .iter()
            .all(|&b| fs.add(a, b) == fs.add(b, a) && fs.mul(a, b) == fs.mul(b, a))
    });
    let laws = elems.par_iter().all(|&a| {
        elems.iter().all(|&b| {
            elems.iter().all(|&c| {
                fs.mul(a, fs.add(b, c)) == fs.add(fs.mul(a, b), fs.mul(a, c))
                    && fs.mul(fs.mul(a, b), c) == fs.mul(a, fs.mul(b, c))
                    && fs.add(fs.add(a, b), c) == fs.add(a, fs.add(b, c))
            })
        })
    });
    let g = fs.generator();
    let order = (1..fs.q() as u64)
        .find(|&e| fs.pow(g, e) == one)
        .unwrap_or(0);
    json!({
        "field": fs.name(),
        "p": fs.p(),
        "k": fs.k(),
        "q": fs.q(),
        "modulus": fs.modulus(),
        "generator": g,
        "generator_order": order,
        "axioms_ok": inverses && negation && commutative && laws && order as usize == fs.q() - 1,
    })
}

fn spec_for(fs: &Field, deg: DegreeArgs) -> Result<TesterSpec> {
    Ok(build_spec(fs, derive_params(fs, deg.d, deg.t)?)?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_table(fs: &Field, path: &Path, n: Option<usize>) -> Result<EvalTable> {
    let table = EvalTable::parse(&read(path)?)?;
    if table.q() != fs.q() {
        return Err(Error::BadParams(format!(
            "table is over q={}, field has q={}",
            table.q(),
            fs.q()
        ))
        .into());
    }
    if let Some(n) = n.filter(|&n| n != table.arity()) {
        return Err(Error::ArityMismatch {
            expected: n,
            found: table.arity(),
        }
        .into());
    }
    Ok(table)
}

fn load_map(fs: &Field, path: &Path) -> Result<AffineMap> {
    Ok(AffineMap::parse(fs.q(), &read(path)?)?)
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}
