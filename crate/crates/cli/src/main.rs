use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use delrips::complex_order::{build_delaunay_rips_with, build_rips};
use delrips::experiments::{
    bound_histogram, generate, histogram_csv, stability_csv, stability_sweep, stats_table, InstanceKind,
    InstanceSpec, DEFAULT_EPSILON, DEFAULT_SIGMA,
};
use delrips::geometry::{validate_general_position, DelaunayOptions, PointCloud, Violation};
use delrips::metrics::{bottleneck, log_diagram, DiagramPointSet};
use delrips::oracle;
use delrips::persistence::{
    extract_generators_with, run_pipeline, PersistenceDiagram, PipelineOptions, Units,
};
use delrips::{Error, Result};

#[derive(Parser)]
#[command(name = "delrips", version, about = "Delaunay-Rips persistent homology")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Persistence diagram of a point file, as JSON on stdout.
    Ph(PhArgs),
    /// Bottleneck distance between two diagram files.
    Compare(CompareArgs),
    /// Representative cycles (R³ only) as an OBJ line/face set.
    Generators(GeneratorArgs),
    /// Sizes of the intermediate constructions per simplex dimension.
    Stats(StatsArgs),
    /// Instance generation and experiment drivers.
    #[command(subcommand)]
    Experiment(Experiment),
    /// General-position report; exits 3 when the cloud is degenerate.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum UnitsArg {
    Diameter,
    Radius,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Filtration {
    DelaunayRips,
    Rips,
}

#[derive(Args)]
struct PhArgs {
    input: PathBuf,
    /// Highest homology dimension to report (default: ambient dimension - 1).
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long, value_enum, default_value = "diameter")]
    units: UnitsArg,
    /// Keep zero-persistence pairs.
    #[arg(long)]
    keep_zero: bool,
    /// Also run the boundary-matrix reduction and fail on any mismatch.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Resolve cospherical ties by symbolic perturbation.
    #[arg(long)]
    perturb: bool,
    #[arg(long, value_enum, default_value = "delaunay-rips")]
    filtration: Filtration,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Compare log-scaled diagrams.
    #[arg(long)]
    log: bool,
    #[arg(long, default_value_t = 1)]
    dim: usize,
}

#[derive(Args)]
struct GeneratorArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    min_persistence: f64,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    perturb: bool,
}

#[derive(Args)]
struct StatsArgs {
    input: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    input: PathBuf,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    #[arg(long)]
    kind: String,
    #[arg(short, long, default_value_t = 30)]
    n: usize,
    /// Ambient dimension (uniform-cube) or sphere dimension (antipodal-sphere-worst).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InstanceArgs {
    fn spec(&self) -> Result<InstanceSpec> {
        let kind: InstanceKind = self.kind.parse()?;
        let mut spec = InstanceSpec::new(kind, self.n, self.seed);
        if let Some(d) = self.dim {
            spec.dim = d;
        }
        spec.sigma = self.sigma;
        spec.epsilon = self.epsilon;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Experiment {
    /// Write one generated instance as a point file on stdout.
    Generate(InstanceArgs),
    /// Log-bottleneck distances between Delaunay-Rips and Rips diagrams.
    BoundHist {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(short, long, default_value_t = 1)]
        k: usize,
        /// Per-trial CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Bottleneck distances under bounded perturbations.
    Stability {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(short, long, default_value_t = 1)]
        k: usize,
        /// Comma-separated perturbation sizes.
        #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.05,0.1")]
        eps: Vec<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("serializable")));
}

fn units(u: UnitsArg) -> Units {
    match u {
        UnitsArg::Diameter => Units::Diameter,
        UnitsArg::Radius => Units::Radius,
    }
}

fn ph(args: &PhArgs) -> Result<()> {
    if args.threads == 0 {
        return Err(Error::Input("--threads must be at least 1".into()));
    }
    let cloud = PointCloud::parse(&read(&args.input)?)?;
    let max_dim = args.max_dim.unwrap_or(cloud.dim().saturating_sub(1));
    let diagram = match args.filtration {
        Filtration::Rips => {
            let fc = build_rips(&cloud, max_dim + 1)?;
            oracle::reduce(&fc)?
        }
        Filtration::DelaunayRips => {
            let options = DelaunayOptions {
                perturb: args.perturb,
                ..Default::default()
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(args.threads)
                .build()
                .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
            let fc = build_delaunay_rips_with(&cloud, options)?;
            let out = pool.install(|| {
                run_pipeline(
                    &fc,
                    &PipelineOptions {
                        threads: args.threads,
                        generators: None,
                    },
                )
            })?;
            if args.oracle {
                let reference = oracle::reduce(&fc)?;
                if reference.value_multiset() != out.diagram.value_multiset() {
                    return Err(Error::Internal("pipeline and oracle reduction disagree".into()));
                }
                eprintln!("oracle: {} pairs agree", reference.len());
            }
            out.diagram
        }
    };
    let diagram = if args.keep_zero { diagram } else { diagram.without_zero_persistence() };
    let v = diagram.truncated(max_dim).to_json(units(args.units));
    emit(&format!("{}\n", serde_json::to_string(&v).expect("serializable")));
    Ok(())
}

/// Up to 12 significant digits, trailing zeros trimmed.
fn format_distance(v: f64) -> String {
    if v.is_infinite() {
        return "inf".into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let decimals = (11 - v.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn compare(args: &CompareArgs) -> Result<()> {
    let a = PersistenceDiagram::from_json(&read(&args.a)?)?;
    let b = PersistenceDiagram::from_json(&read(&args.b)?)?;
    let (mut pa, mut pb) = (
        DiagramPointSet::from_diagram(&a, args.dim),
        DiagramPointSet::from_diagram(&b, args.dim),
    );
    if args.log {
        pa = log_diagram(&pa)?;
        pb = log_diagram(&pb)?;
    }
    emit(&format!("{}\n", format_distance(bottleneck(&pa, &pb))));
    Ok(())
}

fn generators(args: &GeneratorArgs) -> Result<()> {
    let cloud = PointCloud::parse(&read(&args.input)?)?;
    let options = DelaunayOptions {
        perturb: args.perturb,
        ..Default::default()
    };
    let gens = extract_generators_with(&cloud, args.min_persistence, options)?;
    let mut out = String::new();
    out.push_str(&format!("# {} generators\n", gens.len()));
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        out.push_str(&format!("v {:?} {:?} {:?}\n", p[0], p[1], p[2]));
    }
    for (gi, g) in gens.iter().enumerate() {
        out.push_str(&format!("g generator_{gi}\n# dim {} birth {:?} death {:?}\n", g.dim, g.birth, g.death));
        let tag = if g.dim == 1 { "l" } else { "f" };
        for s in &g.simplices {
            let idx: Vec<String> = s.vertices().iter().map(|v| (v + 1).to_string()).collect();
            out.push_str(&format!("{tag} {}\n", idx.join(" ")));
        }
    }
    match &args.output {
        Some(path) => write(path, &out)?,
        None => emit(&out),
    }
    eprintln!("{} generators", gens.len());
    Ok(())
}

fn stats(args: &StatsArgs) -> Result<()> {
    let cloud = PointCloud::parse(&read(&args.input)?)?;
    let rows = stats_table(&cloud)?;
    if args.json {
        print_json(&serde_json::to_value(&rows).expect("serializable"));
        return Ok(());
    }
    let opt = |v: Option<usize>| v.map_or("/".to_string(), |x| x.to_string());
    let ratio = |v: Option<f64>| v.map_or("/".to_string(), |x| format!("{x:.2}"));
    emit(&format!(
        "{:>2} {:>9} {:>9} {:>9} {:>9} {:>9} {:>11} {:>11}\n",
        "k", "|PH_k-1|", "|Poly_k|", "|MSA_k|", "|US_k|", "|DEL^k|", "Poly/MSA", "Poly/DEL"
    ));
    for r in &rows {
        emit(&format!(
            "{:>2} {:>9} {:>9} {:>9} {:>9} {:>9} {:>11} {:>11}\n",
            r.k,
            r.positive_pairs,
            r.cells,
            opt(r.msa),
            opt(r.urquhart),
            r.simplices,
            ratio(r.cells_over_msa),
            format!("{:.2}", r.cells_over_simplices)
        ));
    }
    Ok(())
}

fn experiment(cmd: &Experiment) -> Result<()> {
    match cmd {
        Experiment::Generate(instance) => {
            emit(&generate(&instance.spec()?)?.to_text());
        }
        Experiment::BoundHist { instance, trials, k, csv } => {
            let run = bound_histogram(&instance.spec()?, *trials, *k)?;
            if let Some(path) = csv {
                write(path, &histogram_csv(&run)?)?;
            }
            print_json(&json!({
                "experiment": "bound-hist",
                "spec": run.spec,
                "k": run.k,
                "trials": run.samples.len(),
                "bound": run.bound,
                "bound_holds": run.bound_holds,
                "summary": run.summary,
            }));
        }
        Experiment::Stability { instance, trials, k, eps, csv } => {
            let run = stability_sweep(&instance.spec()?, *trials, eps, *k)?;
            if let Some(path) = csv {
                write(path, &stability_csv(&run)?)?;
            }
            let levels: Vec<Value> = run
                .levels
                .iter()
                .map(|l| {
                    json!({
                        "epsilon": l.epsilon,
                        "rips": l.rips_summary,
                        "delaunay_rips": l.dr_summary,
                        "rips_bound": l.rips_bound,
                        "rips_holds": l.rips_holds,
                        "delaunay_rips_holds": l.dr_holds,
                        "delaunay_rips_above_rips_bound": l.dr_above_rips_bound,
                    })
                })
                .collect();
            print_json(&json!({
                "experiment": "stability",
                "spec": run.spec,
                "k": run.k,
                "trials": run.trials,
                "levels": levels,
            }));
        }
    }
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<()> {
    let cloud = PointCloud::parse(&read(&args.input)?)?;
    let report = validate_general_position(&cloud);
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| match v {
            Violation::Cohyperplanar { points } => json!({ "kind": "cohyperplanar", "points": points }),
            Violation::Cospherical { points } => json!({ "kind": "cospherical", "points": points }),
            Violation::RepeatedDistance { distance, pairs } => {
                json!({ "kind": "repeated-distance", "distance": distance, "pairs": pairs })
            }
        })
        .collect();
    print_json(&json!({
        "clean": report.is_clean(),
        "exhaustive": report.exhaustive,
        "truncated": report.truncated,
        "violations": violations,
    }));
    if report.is_clean() {
        Ok(())
    } else {
        let points = report
            .violations
            .iter()
            .flat_map(|v| match v {
                Violation::Cohyperplanar { points } | Violation::Cospherical { points } => points.clone(),
                Violation::RepeatedDistance { pairs, .. } => pairs.iter().flat_map(|&(a, b)| [a, b]).collect(),
            })
            .collect();
        Err(Error::degeneracy(format!("{} general-position violations", report.violations.len()), points))
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ph(a) => ph(a),
        Command::Compare(a) => compare(a),
        Command::Generators(a) => generators(a),
        Command::Stats(a) => stats(a),
        Command::Experiment(e) => experiment(e),
        Command::Validate(a) => validate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
