//! End-to-end representation pipeline: space → greedy δ-net → δ-graph →
//! Lipschitz sandwich → measure pushed to the net and quantized → growth
//! fit on the net → Ahlfors check of the quantized measure, plus an
//! optional ball-nesting probe of the original space.
//!
//! Plans are TOML. Outputs go to `<out>/<sha256 of the canonical plan>/`;
//! an existing directory is never reused, the next free `.1`, `.2`, … suffix
//! is taken instead.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ahlfors::ahlfors_check;
use crate::error::{Error, Result};
use crate::exact::{format_rational, int, parse_rational, Rational};
use crate::growth::{ball_count_table, fit_growth, parse_radii, select_centers, CenterSelection};
use crate::length::{ball_nest_witness, NestOutcome};
use crate::measure::{normalized_counting_measure, quantize_measure, AtomicMeasure};
use crate::metric::{BallKind, FiniteMetricSpace, PointId};
use crate::nets::{check_net, greedy_net, lipschitz_sandwich, sample_pairs, Net, NetOrder, PairSampling};
use crate::record::Record;
use crate::space_file::{read_space_file, write_space_file};
use crate::spaces::SpaceSpec;

/// Which metric the growth and Ahlfors stages use on the net.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthMetric {
    /// `δ · dist` in the δ-graph; requires a connected δ-graph.
    #[default]
    Graph,
    /// The ambient metric restricted to the net.
    Ambient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelinePlan {
    /// Inline spec (`kind=grid dims=128x128`) or a space file path.
    pub space: String,
    pub delta: String,
    /// `a,b,c` or `geometric:a,b,ratio`.
    pub radii: String,
    /// Fit interval `[I₋, I₊]`; defaults to the radius range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub lambda_tolerance: f64,
    /// `counting:M` or a measure file path.
    #[serde(default = "default_measure")]
    pub measure: String,
    /// Quantization density `1/M`.
    #[serde(default = "default_quantization")]
    pub quantization: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default = "default_ball")]
    pub ball: String,
    #[serde(default = "default_centers")]
    pub centers: String,
    #[serde(default)]
    pub growth_metric: GrowthMetric,
    /// Source points for the sandwich; 0 means all carrier pairs.
    #[serde(default = "default_sources")]
    pub sandwich_sources: usize,
    /// Radius bound `R` of the Ahlfors check; defaults to `2 I₊`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ahlfors_bound: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_spread: Option<f64>,
    /// Sampled pairs for the ball-nesting probe; 0 disables it.
    #[serde(default)]
    pub nest_pairs: usize,
}

fn default_tolerance() -> f64 {
    0.05
}
fn default_measure() -> String {
    "counting:1".into()
}
fn default_quantization() -> u64 {
    1
}
fn default_out() -> String {
    "runs".into()
}
fn default_ball() -> String {
    "open".into()
}
fn default_centers() -> String {
    "bulk".into()
}
fn default_sources() -> usize {
    64
}

/// Plan values after parsing.
struct Resolved {
    delta: Rational,
    radii: Vec<Rational>,
    lower: Rational,
    upper: Rational,
    kind: BallKind,
    centers: CenterSelection,
    r_bound: Rational,
}

impl PipelinePlan {
    pub fn from_toml(text: &str) -> Result<PipelinePlan> {
        if text.trim().is_empty() {
            return Err(Error::param("empty plan"));
        }
        let plan: PipelinePlan = toml::from_str(text).map_err(|e| Error::param(format!("plan: {e}")))?;
        plan.resolve()?;
        Ok(plan)
    }

    /// Normalized TOML text; the output directory is keyed by its hash.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("plans serialize")
    }

    pub fn hash_hex(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .fold(String::new(), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    fn resolve(&self) -> Result<Resolved> {
        let delta = parse_rational(&self.delta)?;
        if !delta.is_positive() {
            return Err(Error::param("δ must be positive"));
        }
        let radii = parse_radii(&self.radii)?;
        let (lower, upper) = match &self.interval {
            Some([a, b]) => (parse_rational(a)?, parse_rational(b)?),
            None => (
                *radii.first().ok_or_else(|| Error::param("no radii"))?,
                *radii.last().expect("nonempty"),
            ),
        };
        if !lower.is_positive() || lower > upper {
            return Err(Error::param("interval must satisfy 0 < I₋ ≤ I₊"));
        }
        if !radii.iter().any(|r| *r >= lower && *r <= upper) {
            return Err(Error::param("no radius inside the interval"));
        }
        let r_bound = match &self.ahlfors_bound {
            Some(r) => parse_rational(r)?,
            None => upper * int(2),
        };
        if r_bound <= upper {
            return Err(Error::param("Ahlfors bound must exceed I₊"));
        }
        if self.quantization == 0 {
            return Err(Error::param("quantization M must be at least 1"));
        }
        if !(self.lambda_tolerance >= 0.0) {
            return Err(Error::param("lambda_tolerance must be nonnegative"));
        }
        for arg in [&self.space, &self.measure] {
            if !is_inline_space(arg) && !arg.starts_with("counting:") && !Path::new(arg).exists() {
                return Err(Error::param(format!("file {arg:?} does not exist")));
            }
        }
        Ok(Resolved {
            delta,
            radii,
            lower,
            upper,
            kind: self.ball.parse()?,
            centers: self.centers.parse()?,
            r_bound,
        })
    }
}

fn is_inline_space(arg: &str) -> bool {
    arg.contains("kind=")
}

/// Inline space spec or space file.
pub fn load_space(arg: &str) -> Result<FiniteMetricSpace> {
    if is_inline_space(arg) {
        arg.parse::<SpaceSpec>()?.build()
    } else {
        read_space_file(&fs::read_to_string(arg)?)
    }
}

/// `counting:M` or a measure file matching the space size.
pub fn load_measure(arg: &str, space: &FiniteMetricSpace) -> Result<AtomicMeasure> {
    let nu = match arg.strip_prefix("counting:") {
        Some(m) => normalized_counting_measure(space, &parse_rational(m)?)?,
        None => AtomicMeasure::parse(&fs::read_to_string(arg)?)?,
    };
    if nu.len() != space.n_points() {
        return Err(Error::param(format!(
            "measure has {} atoms, space has {} points",
            nu.len(),
            space.n_points()
        )));
    }
    Ok(nu)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageStatus {
    Pass,
    Fail,
    /// The stage could not run; later stages are skipped.
    Error(String),
    /// Reported but not part of the verdict.
    Info,
    Skipped,
}

impl std::fmt::Display for StageStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StageStatus::Pass => "pass",
            StageStatus::Fail => "fail",
            StageStatus::Error(_) => "error",
            StageStatus::Info => "info",
            StageStatus::Skipped => "skipped",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub name: &'static str,
    pub status: StageStatus,
    pub record: Record,
}

#[derive(Clone, Debug)]
pub struct RepresentationReport {
    pub plan_hash: String,
    pub stages: Vec<Stage>,
    /// `(file name, content)` of every artifact, in writing order.
    pub artifacts: Vec<(String, String)>,
}

impl RepresentationReport {
    pub fn passed(&self) -> bool {
        self.stages
            .iter()
            .all(|s| matches!(s.status, StageStatus::Pass | StageStatus::Info))
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = Record::new()
            .with("plan_hash", &self.plan_hash)
            .with("passed", self.passed())
            .inline();
        out.push('\n');
        for s in &self.stages {
            let mut r = Record::new().with("stage", s.name).with("status", &s.status);
            if let StageStatus::Error(msg) = &s.status {
                r.push("error", msg.replace(' ', "_"));
            }
            for (k, v) in s.record.fields() {
                r.push(k, v);
            }
            out.push_str(&r.inline());
            out.push('\n');
        }
        out
    }

    /// Writes the report and all artifacts into a fresh directory under
    /// `root` and returns it.
    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        fs::create_dir_all(root)?;
        let mut dir = root.join(&self.plan_hash);
        let mut suffix = 0;
        while dir.exists() {
            suffix += 1;
            dir = root.join(format!("{}.{suffix}", self.plan_hash));
        }
        fs::create_dir(&dir)?;
        fs::write(dir.join("report.txt"), self.to_text())?;
        for (name, content) in &self.artifacts {
            fs::write(dir.join(name), content)?;
        }
        Ok(dir)
    }
}

struct Run {
    stages: Vec<Stage>,
    artifacts: Vec<(String, String)>,
}

impl Run {
    fn push(&mut self, name: &'static str, status: StageStatus, record: Record) {
        self.stages.push(Stage { name, status, record });
    }

    fn artifact(&mut self, name: &str, content: String) {
        self.artifacts.push((name.to_string(), content));
    }

    fn verdict(ok: bool) -> StageStatus {
        if ok {
            StageStatus::Pass
        } else {
            StageStatus::Fail
        }
    }
}

const STAGES: [&str; 7] = [
    "generate",
    "greedy_net",
    "delta_graph",
    "lipschitz_sandwich",
    "quantize",
    "fit_growth",
    "ahlfors",
];

/// Runs every stage. Invalid plans are errors; a stage whose inputs are
/// unusable is recorded as a stage error and the remaining stages are
/// skipped. The result depends only on the plan.
pub fn run_pipeline(plan: &PipelinePlan) -> Result<RepresentationReport> {
    let resolved = plan.resolve()?;
    let mut run = Run {
        stages: Vec::new(),
        artifacts: vec![("plan.toml".into(), plan.canonical())],
    };
    if let Err((name, e)) = run_stages(plan, &resolved, &mut run) {
        run.push(name, StageStatus::Error(e.to_string()), Record::new());
        let done = run.stages.len();
        for name in STAGES.iter().skip(done) {
            run.push(name, StageStatus::Skipped, Record::new());
        }
    }
    Ok(RepresentationReport {
        plan_hash: plan.hash_hex(),
        stages: run.stages,
        artifacts: run.artifacts,
    })
}

type StageResult<T> = std::result::Result<T, (&'static str, Error)>;

fn tag<T>(name: &'static str, r: Result<T>) -> StageResult<T> {
    r.map_err(|e| (name, e))
}

fn run_stages(plan: &PipelinePlan, p: &Resolved, run: &mut Run) -> StageResult<()> {
    let space = tag("generate", load_space(&plan.space))?;
    run.push(
        "generate",
        StageStatus::Pass,
        Record::new()
            .with("n_points", space.n_points())
            .with("backend", format!("{:?}", space.backend_kind()).to_lowercase()),
    );
    run.artifact("space.txt", write_space_file(&space));

    let net = tag("greedy_net", greedy_net(&space, &p.delta, &NetOrder::Index))?;
    let all: Vec<PointId> = space.points().collect();
    let check = tag("greedy_net", check_net(&space, &net, &all))?;
    run.push(
        "greedy_net",
        Run::verdict(check.passed()),
        Record::new()
            .with("delta", format_rational(&net.delta))
            .with("size", net.len())
            .with("covering_radius", format_rational(&net.covering_radius))
            .with("separation_violations", check.separation_violations.len())
            .with("uncovered", check.uncovered.len()),
    );
    run.artifact("net.txt", net.serialize());

    let components = net.net_graph.components();
    let n_components = components.iter().copied().max().map_or(0, |m| m + 1);
    run.push(
        "delta_graph",
        StageStatus::Pass,
        Record::new()
            .with("vertices", net.net_graph.n_vertices())
            .with("edges", net.net_graph.n_edges())
            .with("components", n_components)
            .with("max_degree", net.net_graph.max_degree()),
    );

    let sampling = match plan.sandwich_sources {
        0 => PairSampling::All,
        count => PairSampling::Sources { count, seed: plan.seed },
    };
    let sandwich = tag("lipschitz_sandwich", lipschitz_sandwich(&space, &net, &sampling))?;
    run.push(
        "lipschitz_sandwich",
        Run::verdict(sandwich.passed() && sandwich.c_min.is_some()),
        sandwich.to_record(),
    );
    run.artifact("sandwich.txt", sandwich.to_record().to_string());

    let nu = tag("quantize", load_measure(&plan.measure, &space))?;
    let nearest = tag("quantize", space.nearest_in_set(&net.carrier))?;
    let nu_net = tag("quantize", nu.push_forward(&nearest, net.len()))?;
    let quantized = tag("quantize", quantize_measure(&nu_net, plan.quantization, false))?;
    let bracketing = quantized.bracketing_violations(&nu_net);
    let subset = tag("quantize", quantized.max_subset_error(&nu_net, 1000, plan.seed))?;
    run.push(
        "quantize",
        Run::verdict(bracketing.is_empty() && quantized.total_mass_ok(&nu_net) && subset.passed()),
        Record::new()
            .with("M", plan.quantization)
            .with("total_base", format_rational(&nu_net.total()))
            .with("total_quantized", format_rational(&quantized.total()))
            .with("carrier_len", quantized.carrier_len())
            .with("bracketing_violations", bracketing.len())
            .with("subsets_checked", subset.subsets_checked)
            .with("max_subset_error", format_rational(&subset.max_error))
            .with("subset_bound", format_rational(&subset.bound)),
    );
    run.artifact("measure.txt", quantized.serialize());

    let rep = tag("fit_growth", representation_space(&space, &net, plan.growth_metric))?;
    let centers = tag("fit_growth", select_centers(&rep, &p.centers, &p.upper))?;
    let table = tag("fit_growth", ball_count_table(&rep, &centers, &p.radii, p.kind))?;
    let growth = tag("fit_growth", fit_growth(&table, &p.lower, &p.upper))?;
    let finite = growth.c.is_finite() && growth.big_c.is_finite() && growth.c > 0.0;
    let on_target = plan.lambda.is_none_or(|l| (growth.lambda - l).abs() <= plan.lambda_tolerance);
    let mut record = growth.to_record().with("n_centers", centers.len());
    if let Some(l) = plan.lambda {
        record.push("lambda_target", l).push("lambda_tolerance", plan.lambda_tolerance);
    }
    run.push("fit_growth", Run::verdict(finite && on_target), record);
    run.artifact("counts.csv", table.to_csv());
    run.artifact("growth.txt", growth.to_record().to_string());
    run.artifact("growth.dat", growth.gnuplot_data(&table));

    let mu = quantized.to_base_measure();
    let lambda = plan.lambda.unwrap_or(growth.lambda);
    let radii: Vec<Rational> = p.radii.iter().copied().filter(|r| *r >= p.lower && *r <= p.upper).collect();
    let ahlfors = tag(
        "ahlfors",
        ahlfors_check(&rep, &mu, lambda, &p.r_bound, &centers, &radii, p.kind, None),
    )?;
    let band_ok = ahlfors.k > 0.0 && ahlfors.big_k.is_finite();
    let spread_ok = plan.max_spread.is_none_or(|m| ahlfors.spread() <= m);
    run.push("ahlfors", Run::verdict(band_ok && spread_ok), ahlfors.to_record());
    run.artifact("ahlfors.txt", ahlfors.to_record().to_string());
    run.artifact("ahlfors.csv", ahlfors.to_csv());

    if plan.nest_pairs > 0 {
        let record = tag("ball_nest", nest_probe(&space, plan.nest_pairs, plan.seed))?;
        run.push("ball_nest", StageStatus::Info, record);
    }
    Ok(())
}

/// The net as a metric space: `δ · dist` on the δ-graph, or the ambient
/// metric restricted to the carrier. Point `i` is `net.carrier[i]`.
pub fn representation_space(space: &FiniteMetricSpace, net: &Net, metric: GrowthMetric) -> Result<FiniteMetricSpace> {
    match metric {
        GrowthMetric::Graph => {
            if !net.net_graph.is_connected() {
                return Err(Error::Degenerate(
                    "δ-graph is disconnected; use growth_metric = \"ambient\"".into(),
                ));
            }
            FiniteMetricSpace::from_graph(net.net_graph.clone(), net.delta)
        }
        GrowthMetric::Ambient => {
            let rows = net
                .carrier
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    net.carrier[..i]
                        .iter()
                        .map(|&y| space.distance(x, y))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            FiniteMetricSpace::from_lower_triangle(&rows)
        }
    }
}

/// Samples pairs at distance at least `12ε` and asks for a nested ball with
/// `ρ = d(a, x)` and `r = ρ/4`.
fn nest_probe(space: &FiniteMetricSpace, pairs: usize, seed: u64) -> Result<Record> {
    let eps = space
        .min_positive_distance()
        .ok_or_else(|| Error::Degenerate("space has a single point".into()))?;
    let pairs = sample_pairs(space, pairs, &(eps * int(12)), seed)?;
    let mut found = 0usize;
    let mut first_failure = None;
    for &(a, x) in &pairs {
        let rho = space.distance(a, x)?;
        let r = rho / int(4);
        match ball_nest_witness(space, a, x, &r, &rho)? {
            NestOutcome::Found(_) => found += 1,
            NestOutcome::NotFound { .. } => {
                first_failure.get_or_insert((a, x));
            }
        }
    }
    let mut record = Record::new()
        .with("pairs", pairs.len())
        .with("found", found)
        .with("not_found", pairs.len() - found);
    if let Some((a, x)) = first_failure {
        record.push("failure_witness", format!("{},{}", a.0, x.0));
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: &str = r#"
space = "kind=grid dims=24x24"
delta = "1"
radii = "2.5,3.5,4.5,5.5"
lambda = 2.0
lambda_tolerance = 0.3
"#;

    #[test]
    fn empty_and_bad_plans() {
        assert!(PipelinePlan::from_toml("").is_err());
        assert!(PipelinePlan::from_toml("space = \"kind=grid dims=3x3\"").is_err());
        assert!(PipelinePlan::from_toml(&GRID.replace("delta = \"1\"", "delta = \"0\"")).is_err());
        assert!(PipelinePlan::from_toml(&format!("{GRID}\nbogus = 1\n")).is_err());
        assert!(PipelinePlan::from_toml(&GRID.replace("kind=grid dims=24x24", "/no/such/file")).is_err());
    }

    #[test]
    fn small_grid_passes_and_is_deterministic() {
        let plan = PipelinePlan::from_toml(GRID).unwrap();
        let a = run_pipeline(&plan).unwrap();
        assert!(a.passed(), "{}", a.to_text());
        assert_eq!(a.stages.len(), 7);
        let b = run_pipeline(&plan).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.artifacts, b.artifacts);
        let c = a.stage("lipschitz_sandwich").unwrap();
        assert_eq!(c.record.get("c_min"), Some("1"));
    }

    #[test]
    fn never_overwrites() {
        let plan = PipelinePlan::from_toml(GRID).unwrap();
        let report = run_pipeline(&plan).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let first = report.write(dir.path()).unwrap();
        let second = report.write(dir.path()).unwrap();
        assert_ne!(first, second);
        assert!(second.to_string_lossy().ends_with(".1"));
        assert_eq!(
            fs::read(first.join("report.txt")).unwrap(),
            fs::read(second.join("report.txt")).unwrap()
        );
        for name in ["net.txt", "counts.csv", "growth.dat", "ahlfors.csv", "measure.txt", "plan.toml"] {
            assert!(first.join(name).exists(), "{name}");
        }
    }

    #[test]
    fn disconnected_delta_graph_is_a_stage_error() {
        let plan = PipelinePlan::from_toml(
            r#"
space = "kind=tree depth=5 branching=2 base=3"
delta = "1/81"
radii = "1/81,1/27,1/9,1/3"
ball = "closed"
centers = "all"
"#,
        )
        .unwrap();
        let report = run_pipeline(&plan).unwrap();
        assert!(!report.passed());
        assert!(matches!(report.stage("fit_growth").unwrap().status, StageStatus::Error(_)));
        assert_eq!(report.stage("ahlfors").unwrap().status, StageStatus::Skipped);
    }
}
