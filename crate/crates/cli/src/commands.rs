//! Subcommand pipelines. Each returns the report body and whether every
//! verified contract held.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use wignerlab::bundle::{assign_invariant_field, BundleSpec, FieldMethod, FieldState};
use wignerlab::crossed::{
    crossed_report, tensor_iso_check, CrossedProductModel, CrossedReport, TensorIsoReport,
    DEFAULT_AMBIENT_CAP,
};
use wignerlab::entropy::{partition_entropy, vn_entropy, LogBase, PartitionWeights};
use wignerlab::groups::{GroupDescriptor, GroupElement, RepMap, UnitaryRep};
use wignerlab::rng::stream_rng;
use wignerlab::states::{
    default_order, haar_average, invariance_residual, is_separating, AveragingMethod,
    DensityState, SeparatingCheck, SEPARATING_TOL,
};
use wignerlab::wigner::{
    cesaro_fixed_point, random_problems, verify_batch, WignerProblem, WignerReport,
    DEFAULT_MAX_ITER,
};
use wignerlab::Error;

use crate::config::{config_err, resolve_elements, ConfigError, ElementRef, Format, GroupSpec, RunConfig};

pub const MAX_ENTROPY_N: usize = 1_000_000;
const DEFAULT_BATCH: usize = 10;
const DEFAULT_MIXED_BATCH: usize = 200;
const DEFAULT_MC_SAMPLES: usize = 100_000;
const LIE_GENERATORS: usize = 4;

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Lib(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    /// 2 for a violated numerical contract, 1 for anything the user can fix
    /// in the configuration.
    pub fn exit_code(&self) -> i32 {
        fn contract(e: &Error) -> bool {
            match e {
                Error::NoConvergence { .. }
                | Error::RepairTooLarge { .. }
                | Error::NonConvergent { .. }
                | Error::SpectrumOutOfRange { .. }
                | Error::Contract(_) => true,
                Error::Fibre { source, .. } => contract(source),
                _ => false,
            }
        }
        match self {
            Failure::Lib(e) if contract(e) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

pub struct Output {
    pub body: String,
    pub ok: bool,
    pub summary: String,
}

fn json_body<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn csv_body(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| config_err(format!("cannot write CSV: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| config_err(format!("cannot write CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// 17 significant digits.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn group_spec(cfg: &RunConfig, default: &str) -> Result<GroupSpec, ConfigError> {
    GroupSpec::parse(cfg.group.as_deref().unwrap_or(default))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &PathBuf, what: &str) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("invalid {what} {}: {e}", path.display())))
}

// ---------------------------------------------------------------- wigner-verify

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WignerOptions {
    rep: Option<RepMap>,
    /// A single problem.
    elements: Option<Vec<ElementRef>>,
    /// Several explicit problems.
    problems: Option<Vec<Vec<ElementRef>>>,
    /// Number of randomised problems.
    count: Option<usize>,
    /// Elements per randomised problem.
    n: Option<usize>,
}

#[derive(Serialize)]
struct WignerVerifyReport<'a> {
    config: &'a RunConfig,
    all_verified: bool,
    problems: Vec<WignerReport>,
}

pub fn wigner_verify(cfg: &RunConfig) -> Result<Output, Failure> {
    let opts: WignerOptions = cfg.options()?;
    let problems = match &cfg.group {
        None => {
            if opts.elements.is_some() || opts.problems.is_some() || opts.rep.is_some() {
                return Err(config_err("explicit elements need a group").into());
            }
            if cfg.dim.is_some() {
                return Err(config_err("the mixed batch chooses dimensions itself; set a group to use dim").into());
            }
            random_problems(cfg.seed, opts.count.unwrap_or(DEFAULT_MIXED_BATCH))
        }
        Some(_) => {
            let spec = group_spec(cfg, "su2")?;
            let d = cfg.fibre_dim(spec.default_dim())?;
            let rep = spec.rep(d, opts.rep.clone())?;
            let group = rep.group().clone();
            let explicit: Option<Vec<Vec<ElementRef>>> = match (&opts.problems, &opts.elements) {
                (Some(_), Some(_)) => {
                    return Err(config_err("give either elements or problems, not both").into())
                }
                (Some(p), None) => Some(p.clone()),
                (None, Some(e)) => Some(vec![e.clone()]),
                (None, None) => None,
            };
            let element_sets = match explicit {
                Some(sets) => sets
                    .iter()
                    .map(|s| resolve_elements(s, &group))
                    .collect::<Result<Vec<_>, _>>()?,
                None => {
                    let count = opts.count.unwrap_or(DEFAULT_BATCH);
                    let n = opts.n.unwrap_or(2);
                    if n == 0 {
                        return Err(config_err("n must be at least 1").into());
                    }
                    let all = group.haar_sample(cfg.seed, count * n);
                    all.chunks(n).map(<[GroupElement]>::to_vec).collect()
                }
            };
            element_sets
                .into_iter()
                .map(|els| WignerProblem::new(rep.clone(), els))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| config_err(format!("invalid problem: {e}")))?
        }
    };
    if problems.is_empty() {
        return Err(config_err("the batch is empty").into());
    }
    let reports = verify_batch(&problems).into_iter().collect::<Result<Vec<_>, _>>()?;
    let all_verified = reports.iter().all(|r| r.verdict);
    let passed = reports.iter().filter(|r| r.verdict).count();
    let summary = format!("{passed}/{} problems verified", reports.len());
    let body = match cfg.format {
        Format::Json => json_body(&WignerVerifyReport {
            config: cfg,
            all_verified,
            problems: reports,
        })?,
        Format::Csv => csv_body(
            &[
                "index",
                "group",
                "d",
                "n",
                "intersection_dim",
                "crosscheck_dim",
                "averaged_dim",
                "largest_principal_angle",
                "min_principal_cosine",
                "verdict",
            ],
            reports
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    vec![
                        i.to_string(),
                        r.group.to_string(),
                        r.d.to_string(),
                        r.elements.len().to_string(),
                        r.intersection_dim.to_string(),
                        r.intersection_crosscheck_dim.to_string(),
                        r.averaged_dim.to_string(),
                        float(r.largest_principal_angle),
                        float(r.min_principal_cosine),
                        r.verdict.to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    Ok(Output {
        body,
        ok: all_verified,
        summary,
    })
}

// ---------------------------------------------------------------- invariant-state

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StateMethod {
    #[default]
    Auto,
    Quadrature,
    MonteCarlo,
    FiniteExact,
    Cesaro,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateOptions {
    rep: Option<RepMap>,
    state: Option<DensityState>,
    state_file: Option<PathBuf>,
    #[serde(default)]
    method: StateMethod,
    order: Option<usize>,
    samples: Option<usize>,
    generators: Option<Vec<ElementRef>>,
    max_iter: Option<usize>,
}

#[derive(Serialize)]
struct CesaroSummary {
    generators: Vec<GroupElement>,
    residual: f64,
    per_element_residual: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct InvariantStateReport<'a> {
    config: &'a RunConfig,
    method: String,
    seed_state: DensityState,
    state: DensityState,
    invariance_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    repair_magnitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cesaro: Option<CesaroSummary>,
    separating: SeparatingCheck,
    entropy: f64,
}

/// Default generators for the ergodic mean: the whole finite group, or a few
/// Haar samples together with their inverses.
fn default_generators(rep: &UnitaryRep, seed: u64) -> Result<Vec<GroupElement>, Error> {
    if let Some(all) = rep.group().elements() {
        return Ok(all);
    }
    let mut gens = rep.haar_sample(seed, LIE_GENERATORS)?;
    let inv = gens
        .iter()
        .map(|g| rep.group().inverse(g))
        .collect::<Result<Vec<_>, _>>()?;
    gens.extend(inv);
    Ok(gens)
}

pub fn invariant_state(cfg: &RunConfig) -> Result<Output, Failure> {
    if cfg.format == Format::Csv {
        return Err(config_err("invariant-state writes JSON only").into());
    }
    let opts: StateOptions = cfg.options()?;
    let spec = group_spec(cfg, "su2")?;
    let seed_state = match (&opts.state, &opts.state_file) {
        (Some(_), Some(_)) => return Err(config_err("give either state or state_file, not both").into()),
        (Some(s), None) => Some(s.clone()),
        (None, Some(p)) => Some(read_json::<DensityState>(p, "state file")?),
        (None, None) => None,
    };
    let default_dim = seed_state.as_ref().map_or(spec.default_dim(), DensityState::d);
    let d = cfg.fibre_dim(default_dim)?;
    let rep = spec.rep(d, opts.rep.clone())?;
    let seed_state =
        seed_state.unwrap_or_else(|| DensityState::random(rep.dim(), &mut stream_rng(cfg.seed, 0)));
    if seed_state.d() != rep.dim() {
        return Err(config_err(format!(
            "seed state has dimension {} but the representation acts on C^{}",
            seed_state.d(),
            rep.dim()
        ))
        .into());
    }
    let average = |m: AveragingMethod| -> Result<InvariantStateReport, Failure> {
        let name = serde_json::to_value(&m)
            .ok()
            .and_then(|v| match v {
                serde_json::Value::String(s) => Some(s),
                serde_json::Value::Object(o) => o.keys().next().cloned(),
                _ => None,
            })
            .unwrap_or_default();
        let avg = haar_average(&rep, &seed_state, &m)?;
        Ok(InvariantStateReport {
            config: cfg,
            method: name,
            seed_state: seed_state.clone(),
            separating: is_separating(&avg.state, SEPARATING_TOL)?,
            entropy: vn_entropy(&avg.state, LogBase::E)?,
            invariance_residual: avg.invariance_residual,
            repair_magnitude: Some(avg.repair_magnitude),
            standard_error: avg.standard_error,
            state: avg.state,
            cesaro: None,
        })
    };
    let report = match opts.method {
        StateMethod::Cesaro => {
            let generators = match &opts.generators {
                Some(refs) => resolve_elements(refs, rep.group())?,
                None => default_generators(&rep, cfg.seed)?,
            };
            let problem = WignerProblem::new(rep.clone(), generators.clone())
                .map_err(|e| config_err(format!("invalid generators: {e}")))?;
            let out = cesaro_fixed_point(
                &problem,
                &seed_state,
                cfg.tol,
                opts.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            )?;
            InvariantStateReport {
                config: cfg,
                method: "cesaro".into(),
                seed_state: seed_state.clone(),
                separating: is_separating(&out.state, SEPARATING_TOL)?,
                entropy: vn_entropy(&out.state, LogBase::E)?,
                invariance_residual: invariance_residual(&rep, &out.state)?,
                repair_magnitude: None,
                standard_error: None,
                cesaro: Some(CesaroSummary {
                    generators,
                    residual: out.residual,
                    per_element_residual: out.per_element_residual,
                    iterations: out.iterations,
                }),
                state: out.state,
            }
        }
        StateMethod::Quadrature => average(AveragingMethod::Quadrature {
            order: opts.order.unwrap_or(default_order(rep.dim())),
        })?,
        StateMethod::MonteCarlo => average(AveragingMethod::MonteCarlo {
            seed: cfg.seed,
            count: opts.samples.unwrap_or(DEFAULT_MC_SAMPLES),
        })?,
        StateMethod::FiniteExact => average(AveragingMethod::FiniteExact)?,
        StateMethod::Auto => match AveragingMethod::default_for(&rep) {
            AveragingMethod::MonteCarlo { count, .. } => average(AveragingMethod::MonteCarlo {
                seed: cfg.seed,
                count: opts.samples.unwrap_or(count),
            })?,
            AveragingMethod::Quadrature { order } => average(AveragingMethod::Quadrature {
                order: opts.order.unwrap_or(order),
            })?,
            m => average(m)?,
        },
    };
    let summary = format!(
        "{} average on C^{}: invariance residual {:.3e}, min eigenvalue {:.3e}",
        report.method,
        rep.dim(),
        report.invariance_residual,
        report.separating.min_eigenvalue
    );
    Ok(Output {
        body: json_body(&report)?,
        ok: true,
        summary,
    })
}

// ---------------------------------------------------------------- crossed

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Action {
    /// The group's built-in representation (or `rep`).
    #[default]
    Standard,
    Trivial,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrossedOptions {
    rep: Option<RepMap>,
    #[serde(default)]
    action: Action,
    /// Number of tensor factors for the tensor-isomorphism check.
    tensor: Option<usize>,
    cap: Option<usize>,
}

#[derive(Serialize)]
struct CrossedCommandReport<'a> {
    config: &'a RunConfig,
    verified: bool,
    crossed: CrossedReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    tensor: Option<TensorIsoReport>,
}

pub fn crossed(cfg: &RunConfig) -> Result<Output, Failure> {
    if cfg.format == Format::Csv {
        return Err(config_err("crossed writes JSON only").into());
    }
    let opts: CrossedOptions = cfg.options()?;
    let spec = group_spec(cfg, "z2")?;
    if !matches!(spec.descriptor(), GroupDescriptor::Finite(_)) {
        return Err(config_err("crossed products need a finite group (z<N>, q8, trivial or file:PATH)").into());
    }
    let d = cfg.fibre_dim(spec.default_dim())?;
    let rep = match opts.action {
        Action::Trivial => {
            if opts.rep.is_some() {
                return Err(config_err("a trivial action takes no rep").into());
            }
            UnitaryRep::trivial(spec.descriptor(), d).map_err(|e| config_err(e.to_string()))?
        }
        Action::Standard => spec.rep(d, opts.rep.clone())?,
    };
    let model = CrossedProductModel::new(rep).map_err(|e| config_err(e.to_string()))?;
    let cap = opts.cap.unwrap_or(DEFAULT_AMBIENT_CAP);
    if model.ambient_dim() > cap {
        return Err(config_err(format!(
            "ambient dimension {} exceeds the cap {cap}",
            model.ambient_dim()
        ))
        .into());
    }
    let report = crossed_report(&model)?;
    let tensor = match opts.tensor {
        None => None,
        Some(n) if n < 2 => return Err(config_err("tensor needs at least 2 factors").into()),
        Some(n) => Some(
            tensor_iso_check(&vec![model.clone(); n], cap).map_err(|e| match e {
                Error::ResourceLimit { .. } => Failure::Config(config_err(e.to_string())),
                other => Failure::Lib(other),
            })?,
        ),
    };
    let verified = report.consistent && tensor.as_ref().is_none_or(|t| t.equal);
    let mut summary = format!(
        "crossed product dimension {} (double commutant {}), covariance residual {:.1e}",
        report.closure_dim, report.double_commutant_dim, report.covariance_residual
    );
    if let Some(t) = &tensor {
        summary.push_str(&format!("; tensor check {} vs {}", t.tensor_dim, t.product_dim));
    }
    Ok(Output {
        body: json_body(&CrossedCommandReport {
            config: cfg,
            verified,
            crossed: report,
            tensor,
        })?,
        ok: verified,
        summary,
    })
}

// ---------------------------------------------------------------- entropy

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntropyOptions {
    n_max: Option<usize>,
    #[serde(default)]
    base: LogBase,
}

#[derive(Serialize)]
struct EntropyRow {
    n: usize,
    entropy: f64,
}

#[derive(Serialize)]
struct EntropyReport<'a> {
    config: &'a RunConfig,
    rows: Vec<EntropyRow>,
}

/// Largest accepted deviation of a uniform-partition entropy from `log n`.
const LOG_N_TOL: f64 = 1e-12;

pub fn entropy(cfg: &RunConfig) -> Result<Output, Failure> {
    let opts: EntropyOptions = cfg.options()?;
    if cfg.group.is_some() {
        return Err(config_err("entropy takes no group").into());
    }
    let n_max = match (opts.n_max, cfg.dim) {
        (Some(a), Some(b)) if a != b => {
            return Err(config_err(format!("n_max {a} conflicts with dim {b}")).into())
        }
        (a, b) => a.or(b).unwrap_or(8),
    };
    if n_max > MAX_ENTROPY_N {
        return Err(config_err(format!("sweep length {n_max} exceeds the cap {MAX_ENTROPY_N}")).into());
    }
    let scale = match opts.base {
        LogBase::E => 1.0,
        LogBase::Two => std::f64::consts::LN_2,
    };
    let rows = (1..=n_max)
        .map(|n| {
            let w = PartitionWeights::uniform(n)?;
            Ok(EntropyRow {
                n,
                entropy: partition_entropy(&w, opts.base),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let worst = rows
        .iter()
        .map(|r| (r.entropy - (r.n as f64).ln() / scale).abs())
        .fold(0.0, f64::max);
    let ok = worst <= LOG_N_TOL;
    let summary = format!("{n_max} uniform partitions, max deviation from log n {worst:.1e}");
    let body = match cfg.format {
        Format::Csv => csv_body(
            &["n", "entropy"],
            rows.iter().map(|r| vec![r.n.to_string(), float(r.entropy)]).collect(),
        )?,
        Format::Json => json_body(&EntropyReport { config: cfg, rows })?,
    };
    Ok(Output { body, ok, summary })
}

// ---------------------------------------------------------------- bundle

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleOptions {
    bundle: Option<BundleSpec>,
    bundle_file: Option<PathBuf>,
    points: Option<Vec<String>>,
    rep: Option<RepMap>,
    #[serde(default)]
    method: FieldMethod,
}

#[derive(Serialize)]
struct BundleReport<'a> {
    config: &'a RunConfig,
    bundle: &'a BundleSpec,
    field: FieldState,
}

pub fn bundle(cfg: &RunConfig) -> Result<Output, Failure> {
    if cfg.format == Format::Csv {
        return Err(config_err("bundle writes JSON only").into());
    }
    let opts: BundleOptions = cfg.options()?;
    let given = match (opts.bundle, &opts.bundle_file) {
        (Some(_), Some(_)) => return Err(config_err("give either bundle or bundle_file, not both").into()),
        (Some(b), None) => Some(b),
        (None, Some(p)) => Some(read_json::<BundleSpec>(p, "bundle file")?),
        (None, None) => None,
    };
    let spec = match given {
        Some(b) => {
            if cfg.group.is_some() || cfg.dim.is_some() || opts.points.is_some() || opts.rep.is_some() {
                return Err(config_err("an explicit bundle excludes group, dim, points and rep").into());
            }
            b
        }
        None => {
            let group = group_spec(cfg, "su2")?;
            let d = cfg.fibre_dim(group.default_dim())?;
            let rep = group.rep(d, opts.rep.clone())?;
            let points = opts.points.unwrap_or_else(|| vec!["x".to_string()]);
            let labels: Vec<&str> = points.iter().map(String::as_str).collect();
            BundleSpec::uniform(&rep, &labels).map_err(|e| config_err(e.to_string()))?
        }
    };
    let field = assign_invariant_field(&spec, &opts.method, cfg.seed)?;
    let worst = field
        .components
        .iter()
        .map(|c| c.invariance_residual)
        .fold(0.0, f64::max);
    let min = field
        .components
        .iter()
        .map(|c| c.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let summary = format!(
        "{} fibres: max invariance residual {worst:.1e}, min eigenvalue {min:.3e}",
        field.components.len()
    );
    Ok(Output {
        body: json_body(&BundleReport {
            config: cfg,
            bundle: &spec,
            field,
        })?,
        ok: true,
        summary,
    })
}
