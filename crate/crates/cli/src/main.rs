//! `netgeom` command-line driver.
//!
//! Exit codes: 0 when every check passes, 1 when checks ran and failed,
//! 2 for invalid invocations or unusable inputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netgeom::ahlfors::ahlfors_check;
use netgeom::exact::{format_rational, parse_rational};
use netgeom::growth::{ball_count_table, fit_growth, parse_radii, select_centers, CenterSelection, CountTable};
use netgeom::hausdorff::{hausdorff_estimate, levels_to_csv};
use netgeom::measure::quantize_measure;
use netgeom::nets::{check_net, greedy_net, lipschitz_sandwich, NetOrder, PairSampling};
use netgeom::pipeline::{load_measure, load_space, run_pipeline, PipelinePlan};
use netgeom::regularize::{default_k, regularize_degrees, verify_regularization, RegularizationResult};
use netgeom::space_file::write_space_file;
use netgeom::{BallKind, BallSpec, FiniteMetricSpace, Graph, PointId, Rational, Record};

#[derive(Parser)]
#[command(name = "netgeom", version, about = "Discrete metric-measure geometry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a space and write it as a space file.
    Gen(GenArgs),
    /// Greedy δ-net with exhaustive separation/covering check and Lipschitz sandwich.
    Net(NetArgs),
    /// Ball counts and a log-log growth fit.
    Growth(GrowthArgs),
    /// Ahlfors regularity check of a measure.
    Ahlfors(AhlforsArgs),
    /// Quantize a measure to density 1/M and check the error bounds.
    Quantize(QuantizeArgs),
    /// Regularize the degrees of an edge-list graph with spiked gadgets.
    Regularize(RegularizeArgs),
    /// Net covering sums over a descending δ ladder.
    Hausdorff(HausdorffArgs),
    /// Re-check a regularization file, or the metric axioms of a space.
    Verify(VerifyArgs),
    /// Run the representation pipeline from a TOML plan.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SpaceArg {
    /// Space file or inline spec such as "kind=grid dims=64x64".
    #[arg(long)]
    space: String,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    space: SpaceArg,
    /// Output directory; prints to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NetArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    delta: String,
    /// Scan order: index, seeded or farthest.
    #[arg(long, default_value = "index")]
    order: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sandwich source points; 0 checks all carrier pairs.
    #[arg(long, default_value_t = 64)]
    sources: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GrowthArgs {
    /// Space to count balls in (or use --counts).
    #[arg(long, conflicts_with = "counts", required_unless_present = "counts")]
    space: Option<String>,
    /// Existing count-table CSV.
    #[arg(long)]
    counts: Option<PathBuf>,
    #[arg(long, required_unless_present = "counts")]
    radii: Option<String>,
    /// Fit interval "a,b"; defaults to the radius range.
    #[arg(long)]
    interval: Option<String>,
    #[arg(long, default_value = "open")]
    ball: BallKind,
    #[arg(long, default_value = "bulk")]
    centers: CenterSelection,
    /// Target exponent; the run fails if the fit is farther than --tolerance.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AhlforsArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    radii: String,
    #[arg(long)]
    lambda: f64,
    /// Measure file or counting:M.
    #[arg(long, default_value = "counting:1")]
    measure: String,
    /// Radius bound R; defaults to twice the largest radius.
    #[arg(long)]
    bound: Option<String>,
    #[arg(long, default_value = "open")]
    ball: BallKind,
    #[arg(long, default_value = "bulk")]
    centers: CenterSelection,
    /// Required lower constant k.
    #[arg(long, requires = "k_max")]
    k_min: Option<f64>,
    /// Required upper constant K.
    #[arg(long, requires = "k_min")]
    k_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuantizeArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long, default_value = "counting:1")]
    measure: String,
    /// Density denominator M.
    #[arg(long)]
    m: u64,
    /// Random subsets for the error check (exhaustive for ≤ 20 atoms).
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegularizeArgs {
    /// Edge list ("u v" lines, optional "# vertices N").
    #[arg(long)]
    graph: PathBuf,
    /// Odd k ≥ 3 + max degree; defaults to the smallest such k.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HausdorffArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    lambda: f64,
    /// δ ladder, any order; it is used descending.
    #[arg(long)]
    radii: String,
    /// Target set: "all" or a closed ball "ball:center,radius".
    #[arg(long, default_value = "all")]
    target: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Regularization file written by `regularize`.
    #[arg(long, required_unless_present = "space")]
    regularization: Option<PathBuf>,
    /// Space whose metric axioms to check.
    #[arg(long)]
    space: Option<String>,
    /// Sampled triples for large spaces.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PipelineArgs {
    plan: PathBuf,
    /// Overrides the plan's output root.
    #[arg(long)]
    out: Option<PathBuf>,
}

type Outcome = netgeom::Result<bool>;

fn emit(out: &Option<PathBuf>, files: &[(&str, String)], summary: &Record) -> netgeom::Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for (name, content) in files {
            fs::write(dir.join(name), content)?;
        }
    }
    print!("{summary}");
    Ok(())
}

fn interval(text: &Option<String>, radii: &[Rational]) -> netgeom::Result<(Rational, Rational)> {
    match text {
        Some(t) => {
            let parts: Vec<&str> = t.split(',').collect();
            match parts.as_slice() {
                [a, b] => Ok((parse_rational(a)?, parse_rational(b)?)),
                _ => Err(netgeom::Error::Parameter("interval must be a,b".into())),
            }
        }
        None => match (radii.first(), radii.last()) {
            (Some(a), Some(b)) => Ok((*a, *b)),
            _ => Err(netgeom::Error::Parameter("no radii".into())),
        },
    }
}

fn gen(a: GenArgs) -> Outcome {
    let space = load_space(&a.space.space)?;
    let text = write_space_file(&space);
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("space.txt"), &text)?;
            print!("{}", Record::new().with("n_points", space.n_points()));
        }
        None => print!("{text}"),
    }
    Ok(true)
}

fn net(a: NetArgs) -> Outcome {
    let space = load_space(&a.space.space)?;
    let delta = parse_rational(&a.delta)?;
    let order = match a.order.as_str() {
        "index" => NetOrder::Index,
        "seeded" => NetOrder::Seeded(a.seed),
        "farthest" => NetOrder::FarthestPoint,
        other => return Err(netgeom::Error::Parameter(format!("unknown order {other:?}"))),
    };
    let net = greedy_net(&space, &delta, &order)?;
    let all: Vec<PointId> = space.points().collect();
    let check = check_net(&space, &net, &all)?;
    let sampling = match a.sources {
        0 => PairSampling::All,
        count => PairSampling::Sources { count, seed: a.seed },
    };
    let sandwich = lipschitz_sandwich(&space, &net, &sampling)?;
    let ok = check.passed() && sandwich.passed();
    let mut summary = Record::new()
        .with("size", net.len())
        .with("covering_radius", format_rational(&net.covering_radius))
        .with("separation_violations", check.separation_violations.len())
        .with("uncovered", check.uncovered.len());
    for (k, v) in sandwich.to_record().fields() {
        summary.push(k, v);
    }
    summary.push("passed", ok);
    emit(&a.out, &[("net.txt", net.serialize()), ("sandwich.txt", sandwich.to_record().to_string())], &summary)?;
    Ok(ok)
}

fn growth(a: GrowthArgs) -> Outcome {
    let table = match (&a.counts, &a.space) {
        (Some(path), _) => CountTable::from_csv(&fs::read_to_string(path)?)?,
        (None, Some(space)) => {
            let space = load_space(space)?;
            let radii = parse_radii(a.radii.as_deref().unwrap_or_default())?;
            let max = *radii.last().ok_or_else(|| netgeom::Error::Parameter("no radii".into()))?;
            let centers = select_centers(&space, &a.centers, &max)?;
            ball_count_table(&space, &centers, &radii, a.ball)?
        }
        (None, None) => unreachable!("clap requires one of --space and --counts"),
    };
    let (lo, hi) = interval(&a.interval, &table.radii)?;
    let report = fit_growth(&table, &lo, &hi)?;
    let ok = a.lambda.is_none_or(|l| (report.lambda - l).abs() <= a.tolerance);
    let summary = report.to_record().with("passed", ok);
    emit(
        &a.out,
        &[
            ("counts.csv", table.to_csv()),
            ("growth.txt", summary.to_string()),
            ("growth.dat", report.gnuplot_data(&table)),
        ],
        &summary,
    )?;
    Ok(ok)
}

fn ahlfors(a: AhlforsArgs) -> Outcome {
    let space = load_space(&a.space.space)?;
    let nu = load_measure(&a.measure, &space)?;
    let radii = parse_radii(&a.radii)?;
    let max = *radii.last().ok_or_else(|| netgeom::Error::Parameter("no radii".into()))?;
    let bound = match &a.bound {
        Some(b) => parse_rational(b)?,
        None => max * Rational::from_integer(2),
    };
    let centers = select_centers(&space, &a.centers, &max)?;
    let targets = a.k_min.zip(a.k_max);
    let report = ahlfors_check(&space, &nu, a.lambda, &bound, &centers, &radii, a.ball, targets)?;
    emit(
        &a.out,
        &[("ahlfors.txt", report.to_record().to_string()), ("ahlfors.csv", report.to_csv())],
        &report.to_record(),
    )?;
    Ok(report.passed())
}

fn quantize(a: QuantizeArgs) -> Outcome {
    let space = load_space(&a.space.space)?;
    let nu = load_measure(&a.measure, &space)?;
    let q = quantize_measure(&nu, a.m, false)?;
    let bracketing = q.bracketing_violations(&nu);
    let subset = q.max_subset_error(&nu, a.samples, a.seed)?;
    let ok = bracketing.is_empty() && q.total_mass_ok(&nu) && subset.passed();
    let summary = Record::new()
        .with("M", a.m)
        .with("total_base", format_rational(&nu.total()))
        .with("total_quantized", format_rational(&q.total()))
        .with("bracketing_violations", bracketing.len())
        .with("subsets_checked", subset.subsets_checked)
        .with("exhaustive", subset.exhaustive)
        .with("max_subset_error", format_rational(&subset.max_error))
        .with("bound", format_rational(&subset.bound))
        .with("passed", ok);
    emit(&a.out, &[("measure.txt", q.serialize()), ("quantize.txt", summary.to_string())], &summary)?;
    Ok(ok)
}

fn regularize(a: RegularizeArgs) -> Outcome {
    let graph = Graph::parse_edge_list(&fs::read_to_string(&a.graph)?)?;
    let k = a.k.unwrap_or_else(|| default_k(&graph));
    let result = regularize_degrees(&graph, k)?;
    let check = verify_regularization(&result);
    let summary = Record::new()
        .with("k", k)
        .with("union_vertices", result.spiked.union.n_vertices())
        .with("union_edges", result.spiked.union.n_edges())
        .with("parity_fixes", result.parity_fixes.len())
        .with("bridges", result.spiked.bridges.len());
    let mut summary = summary;
    for (key, v) in check.to_record().fields() {
        summary.push(key, v);
    }
    emit(&a.out, &[("regularization.txt", result.serialize())], &summary)?;
    Ok(check.passed())
}

fn hausdorff(a: HausdorffArgs) -> Outcome {
    let space = load_space(&a.space.space)?;
    let mut ladder = if a.radii.contains(':') {
        parse_radii(&a.radii)?
    } else {
        a.radii.split(',').map(|t| parse_rational(t.trim())).collect::<netgeom::Result<Vec<_>>>()?
    };
    ladder.sort_by(|x, y| y.cmp(x));
    ladder.dedup();
    let target = target_set(&space, &a.target)?;
    let levels = hausdorff_estimate(&space, a.lambda, &ladder, &target)?;
    let csv = levels_to_csv(&levels);
    let summary = Record::new()
        .with("lambda", a.lambda)
        .with("target_size", target.len())
        .with("levels", levels.len())
        .with("first_sum", levels.first().map_or(0.0, |l| l.sum))
        .with("last_sum", levels.last().map_or(0.0, |l| l.sum));
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("hausdorff.csv"), &csv)?;
    }
    print!("{summary}{csv}");
    Ok(true)
}

fn target_set(space: &FiniteMetricSpace, text: &str) -> netgeom::Result<Vec<PointId>> {
    if text == "all" {
        return Ok(space.points().collect());
    }
    let spec = text
        .strip_prefix("ball:")
        .ok_or_else(|| netgeom::Error::Parameter(format!("target must be all or ball:c,r, got {text:?}")))?;
    let (c, r) = spec
        .split_once(',')
        .ok_or_else(|| netgeom::Error::Parameter("ball target needs center,radius".into()))?;
    let c: usize = c.parse().map_err(|_| netgeom::Error::Parameter(format!("bad center {c:?}")))?;
    space.ball_members(&BallSpec::closed(c, parse_rational(r)?))
}

fn verify(a: VerifyArgs) -> Outcome {
    let mut ok = true;
    if let Some(path) = &a.regularization {
        let result = RegularizationResult::parse(&fs::read_to_string(path)?)?;
        let check = verify_regularization(&result);
        print!("{}", check.to_record());
        ok &= check.passed();
    }
    if let Some(space) = &a.space {
        let space = load_space(space)?;
        let report = space.verify_metric(a.samples, a.seed, space.tree_spec().is_some())?;
        print!(
            "{}",
            Record::new()
                .with("exhaustive", report.exhaustive)
                .with("triples_checked", report.triples_checked)
                .with("violations", report.violations.len())
                .with("passed", report.passed())
        );
        if let Some(v) = report.violations.first() {
            println!("witness={v:?}");
        }
        ok &= report.passed();
    }
    Ok(ok)
}

fn pipeline(a: PipelineArgs) -> Outcome {
    let text = fs::read_to_string(&a.plan)?;
    let plan = PipelinePlan::from_toml(&text)?;
    let report = run_pipeline(&plan)?;
    let root = a.out.unwrap_or_else(|| Path::new(&plan.out).to_path_buf());
    let dir = report.write(&root)?;
    print!("{}", report.to_text());
    println!("output={}", dir.display());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Net(a) => net(a),
        Command::Growth(a) => growth(a),
        Command::Ahlfors(a) => ahlfors(a),
        Command::Quantize(a) => quantize(a),
        Command::Regularize(a) => regularize(a),
        Command::Hausdorff(a) => hausdorff(a),
        Command::Verify(a) => verify(a),
        Command::Pipeline(a) => pipeline(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
