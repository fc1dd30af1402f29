//! Job description, configuration merging and the experiment runner.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use mor_iha::baselines::{balanced_truncation, modified_bt, MbtSettings};
use mor_iha::iha::{run_iha, trefethen_diagnostics, IhaConfig, Step2Mode};
use mor_iha::norms::{
    error_curve_csv, frequency_response_csv, hankel_singular_values, hinf_norm_realization, hinf_norm_sampled,
    DenseRealization, Difference, HankelSpectrum, NormMethod, DEFAULT_HINF_TOL,
};
use mor_iha::{run_irka, FrequencyGrid, IrkaConfig, LtiSystem, MorError, ReducedModel, StorageKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::ingest::{ingest, SystemFiles};
use crate::mtx;
use crate::report::{sig5, Report, ReportRow, SystemSummary};
use crate::synthetic::{make_synthetic, SyntheticKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Iha,
    Irka,
    Bt,
    Mbt,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "iha" => Ok(Self::Iha),
            "irka" => Ok(Self::Irka),
            "bt" => Ok(Self::Bt),
            "mbt" => Ok(Self::Mbt),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Iha => "iha",
            Self::Irka => "irka",
            Self::Bt => "bt",
            Self::Mbt => "mbt",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    Files(SystemFiles),
    Synthetic { kind: SyntheticKind, n: usize },
}

impl InputSource {
    fn describe(&self, seed: u64) -> String {
        match self {
            Self::Files(f) => f.a.parent().map(|p| p.display().to_string()).unwrap_or_default(),
            Self::Synthetic { kind, n } => format!("synthetic {kind} n={n} seed={seed}"),
        }
    }
}

/// Step-2 mode plus the output switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeFlags {
    pub step2: Step2Mode,
    /// Report sampled norms even when certified ones are affordable.
    pub sampled_norms: bool,
    pub dump_curves: bool,
}

impl Default for ModeFlags {
    fn default() -> Self {
        Self { step2: Step2Mode::Surrogate, sampled_norms: false, dump_curves: false }
    }
}

impl FromStr for ModeFlags {
    type Err = String;

    /// Comma-separated list of `surrogate`, `exact`, `both`, `exact-step2`,
    /// `sampled-norms`, `dump-curves`.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Self::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "surrogate" => out.step2 = Step2Mode::Surrogate,
                "exact" | "exact-step2" => out.step2 = Step2Mode::Exact,
                "both" => out.step2 = Step2Mode::Both,
                "sampled-norms" => out.sampled_norms = true,
                "dump-curves" => out.dump_curves = true,
                other => return Err(format!("unknown mode flag '{other}'")),
            }
        }
        Ok(out)
    }
}

fn mode_name(m: &ModeFlags) -> String {
    let mut parts = vec![match m.step2 {
        Step2Mode::Surrogate => "surrogate",
        Step2Mode::Exact => "exact",
        Step2Mode::Both => "both",
    }];
    if m.sampled_norms {
        parts.push("sampled-norms");
    }
    if m.dump_curves {
        parts.push("dump-curves");
    }
    parts.join(",")
}

/// `lo:hi:count` logarithmic grid.
pub fn parse_grid(s: &str) -> Result<FrequencyGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid '{s}' is not lo:hi:count"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad grid start '{}'", parts[0]))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| format!("bad grid end '{}'", parts[1]))?;
    let count: usize = parts[2].trim().parse().map_err(|_| format!("bad grid count '{}'", parts[2]))?;
    FrequencyGrid::logspace(lo, hi, count).map_err(|e| e.to_string())
}

/// `kind:n`, e.g. `sss:100`.
pub fn parse_synthetic(s: &str) -> Result<(SyntheticKind, usize), String> {
    let (kind, n) = s.split_once(':').ok_or_else(|| format!("synthetic input '{s}' is not kind:n"))?;
    let n = n.trim().parse().map_err(|_| format!("bad synthetic order '{n}'"))?;
    Ok((kind.trim().parse()?, n))
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(|p| p.parse::<T>().map_err(|e| format!("'{p}': {e}"))).collect()
}

#[derive(Clone, Debug)]
pub struct Job {
    pub input: InputSource,
    pub methods: Vec<Method>,
    pub orders: Vec<usize>,
    pub out: PathBuf,
    pub mode: ModeFlags,
    pub seed: u64,
    pub grid: FrequencyGrid,
    /// IRKA relative shift-change tolerance.
    pub tol: f64,
}

impl Job {
    pub fn new(input: InputSource, methods: Vec<Method>, orders: Vec<usize>, out: impl Into<PathBuf>) -> Self {
        Self {
            input,
            methods,
            orders,
            out: out.into(),
            mode: ModeFlags::default(),
            seed: 0,
            grid: FrequencyGrid::default_sampled(),
            tol: 1e-6,
        }
    }

    pub fn load_system(&self) -> Result<LtiSystem, CliError> {
        match &self.input {
            InputSource::Files(f) => ingest(f),
            InputSource::Synthetic { kind, n } => Ok(make_synthetic(*kind, *n, self.seed)?),
        }
    }

    /// Checks the order list against the state dimension.
    pub fn validate(&self, n: usize) -> Result<(), CliError> {
        if self.methods.is_empty() {
            return Err(CliError::Invalid("no methods requested".into()));
        }
        if self.orders.is_empty() {
            return Err(CliError::Invalid("no reduction orders requested".into()));
        }
        if let Some(&r) = self.orders.iter().find(|&&r| r == 0 || r >= n) {
            return Err(CliError::Invalid(format!("order {r} outside 1..{n}")));
        }
        if !(self.tol > 0.0) {
            return Err(CliError::Invalid(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }
}

/// Flat key-value job file; every key mirrors a command-line flag.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct JobFile {
    pub input_dir: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub method: Option<String>,
    pub orders: Option<Vec<usize>>,
    pub mode: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid: Option<String>,
    pub tol: Option<f64>,
}

impl JobFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Invalid(format!("config: {e}")))
    }

    /// Values from `over` win; unset keys fall back to `self`.
    pub fn overridden_by(self, over: JobFile) -> JobFile {
        JobFile {
            input_dir: over.input_dir.or(self.input_dir),
            synthetic: over.synthetic.or(self.synthetic),
            method: over.method.or(self.method),
            orders: over.orders.or(self.orders),
            mode: over.mode.or(self.mode),
            out: over.out.or(self.out),
            seed: over.seed.or(self.seed),
            grid: over.grid.or(self.grid),
            tol: over.tol.or(self.tol),
        }
    }

    pub fn into_job(self) -> Result<Job, CliError> {
        let invalid = CliError::Invalid;
        let input = match (self.input_dir, self.synthetic) {
            (Some(_), Some(_)) => return Err(invalid("both an input directory and a synthetic system given".into())),
            (Some(dir), None) => InputSource::Files(SystemFiles::in_dir(&dir)?),
            (None, Some(s)) => {
                let (kind, n) = parse_synthetic(&s).map_err(invalid)?;
                InputSource::Synthetic { kind, n }
            }
            (None, None) => return Err(invalid("no input given".into())),
        };
        let methods = parse_list(self.method.as_deref().unwrap_or("iha")).map_err(invalid)?;
        let orders = self.orders.ok_or_else(|| invalid("no reduction orders given".into()))?;
        let out = self.out.unwrap_or_else(|| PathBuf::from("mor-iha-out"));
        let mut job = Job::new(input, methods, orders, out);
        if let Some(m) = self.mode {
            job.mode = m.parse().map_err(invalid)?;
        }
        if let Some(g) = self.grid {
            job.grid = parse_grid(&g).map_err(invalid)?;
        }
        job.seed = self.seed.unwrap_or(0);
        job.tol = self.tol.unwrap_or(job.tol);
        Ok(job)
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn method_label(m: NormMethod) -> String {
    match m {
        NormMethod::LevelSet => "level-set".into(),
        NormMethod::Sampled => "sampled".into(),
    }
}

/// Reference quantities shared by every row.
struct Reference {
    full: Option<DenseRealization>,
    full_norm: f64,
    hankel: Option<HankelSpectrum>,
}

impl Reference {
    fn method(&self) -> NormMethod {
        if self.full.is_some() {
            NormMethod::LevelSet
        } else {
            NormMethod::Sampled
        }
    }

    fn error(&self, sys: &LtiSystem, model: &ReducedModel, grid: &FrequencyGrid) -> Result<f64, MorError> {
        match &self.full {
            Some(full) => {
                let err = DenseRealization::difference(full, &DenseRealization::from_reduced(model));
                match hinf_norm_realization(&err, DEFAULT_HINF_TOL) {
                    Ok(h) => Ok(h.value),
                    Err(MorError::UnstableSystem(_)) => Ok(f64::INFINITY),
                    Err(e) => Err(e),
                }
            }
            None => Ok(hinf_norm_sampled(&Difference(sys, model), grid)?.value),
        }
    }
}

fn certified(job: &Job, sys: &LtiSystem) -> bool {
    let rmax = job.orders.iter().copied().max().unwrap_or(0);
    !job.mode.sampled_norms && sys.n() + rmax <= sys.dense_cap()
}

fn build_reference(job: &Job, sys: &LtiSystem) -> Result<Reference, MorError> {
    if certified(job, sys) {
        let full = DenseRealization::from_lti(sys)?;
        let full_norm = hinf_norm_realization(&full, DEFAULT_HINF_TOL)?.value;
        let hankel = Some(hankel_singular_values(sys)?);
        Ok(Reference { full: Some(full), full_norm, hankel })
    } else {
        let full_norm = hinf_norm_sampled(sys, &job.grid)?.value;
        Ok(Reference { full: None, full_norm, hankel: None })
    }
}

/// Result of [`run_job`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Report,
    /// 0 when every row succeeded, 2 otherwise.
    pub exit_code: i32,
}

struct RowOutput {
    model: ReducedModel,
    dr_star: f64,
    surrogate_k: Option<usize>,
    files: Vec<(PathBuf, String)>,
}

fn real_model_files(dir: &Path, model: &ReducedModel) -> Vec<(PathBuf, String)> {
    let r = model.order();
    let re = |m: &faer::Mat<num_complex::Complex64>| faer::Mat::from_fn(r, r, |i, j| m[(i, j)].re);
    let vec_re = |v: &[num_complex::Complex64]| v.iter().map(|z| z.re).collect::<Vec<f64>>();
    vec![
        (dir.join("E.mtx"), mtx::write_array(&re(&model.er))),
        (dir.join("A.mtx"), mtx::write_array(&re(&model.ar))),
        (dir.join("b.mtx"), mtx::write_vector(&vec_re(&model.br))),
        (dir.join("c.mtx"), mtx::write_vector(&vec_re(&model.cr))),
        (dir.join("D.mtx"), mtx::write_vector(&[model.dr])),
    ]
}

fn singular_value_csv(sigmas: &[f64]) -> String {
    let top = sigmas.first().copied().unwrap_or(0.0);
    let mut out = String::from("index,sigma,relative\n");
    for (i, s) in sigmas.iter().enumerate() {
        let rel = if top > 0.0 { s / top } else { 0.0 };
        out.push_str(&format!("{},{:.6e},{:.6e}\n", i + 1, s, rel));
    }
    out
}

#[derive(Serialize)]
struct IhaDiagnostics {
    irka_converged: bool,
    irka_iterations: usize,
    irka_fallback_iteration: Option<usize>,
    log_size: usize,
    surrogate_k: usize,
    step2_skipped: bool,
    rejected_dr: usize,
    dr_star: f64,
    objective_value: f64,
    circularity: Option<f64>,
    circularity_at_zero: Option<f64>,
    rhp_interpolation_count: Option<usize>,
    contour_converged: Option<bool>,
}

/// Contour counts evaluate the full model thousands of times; skip them above this order.
const CONTOUR_LIMIT: usize = 2000;

fn core_model(res: &mor_iha::iha::IhaResult) -> ReducedModel {
    let mut m = res.family.assemble_statespace(0.0);
    m.dr += res.feedthrough;
    m
}

fn run_method(job: &Job, sys: &LtiSystem, method: Method, r: usize) -> Result<RowOutput, MorError> {
    let tag = format!("{method}_r{r}");
    let mut files = Vec::new();
    let (model, dr_star, surrogate_k) = match method {
        Method::Iha => {
            let mut cfg = IhaConfig::new(r).with_mode(job.mode.step2);
            cfg.irka = cfg.irka.with_tol(job.tol);
            let res = run_iha(sys, &cfg)?;
            if let Some(s) = &res.surrogate_search {
                files.push((job.out.join("traces").join(format!("{tag}_surrogate.csv")), s.trace_csv()));
            }
            if let Some(s) = &res.exact_search {
                files.push((job.out.join("traces").join(format!("{tag}_exact.csv")), s.trace_csv()));
            }
            if !res.loewner_singular_values.is_empty() {
                files.push((job.out.join("loewner").join(format!("{tag}.csv")), singular_value_csv(&res.loewner_singular_values)));
            }
            let (after, before) = if sys.n() <= CONTOUR_LIMIT {
                (
                    trefethen_diagnostics(sys, &res.model, &job.grid).ok(),
                    trefethen_diagnostics(sys, &core_model(&res), &job.grid).ok(),
                )
            } else {
                (None, None)
            };
            let diag = IhaDiagnostics {
                irka_converged: res.irka.converged,
                irka_iterations: res.irka.trace.len(),
                irka_fallback_iteration: res.irka.fallback_iteration,
                log_size: res.log_size,
                surrogate_k: res.surrogate_order(),
                step2_skipped: res.step2_skipped,
                rejected_dr: res.rejected_dr_count(),
                dr_star: sig5(res.dr_star),
                objective_value: sig5(res.objective_value),
                circularity: after.as_ref().map(|d| sig5(d.circularity)),
                circularity_at_zero: before.as_ref().map(|d| sig5(d.circularity)),
                rhp_interpolation_count: after.as_ref().and_then(|d| d.rhp_interpolation_count),
                contour_converged: after.as_ref().map(|d| d.contour_converged),
            };
            files.push((
                job.out.join("diagnostics").join(format!("{tag}.json")),
                serde_json::to_string_pretty(&diag).expect("diagnostics serialize") + "\n",
            ));
            let k = res.surrogate.as_ref().map(|s| s.k);
            (res.model, res.dr_star, k)
        }
        Method::Irka => {
            let mut model = run_irka(sys, &IrkaConfig::new(r).with_tol(job.tol))?.model;
            model.dr = sys.d();
            (model, 0.0, None)
        }
        Method::Bt => {
            let mut model = balanced_truncation(sys, r)?.model;
            model.dr = sys.d();
            (model, 0.0, None)
        }
        Method::Mbt => {
            let res = modified_bt(sys, r, MbtSettings::default())?;
            let mut trace = String::from("dr,value\n");
            for p in &res.trace {
                trace.push_str(&format!("{:.6e},{:.6e}\n", p.x, p.value));
            }
            files.push((job.out.join("traces").join(format!("{tag}.csv")), trace));
            let mut model = res.bt.model;
            model.dr = res.dr_star;
            (model, res.dr_star, None)
        }
    };
    files.extend(real_model_files(&job.out.join("models").join(&tag), &model));
    if job.mode.dump_curves {
        let dir = job.out.join("curves");
        files.push((dir.join(format!("{tag}_response.csv")), frequency_response_csv(&model, &job.grid)?));
        files.push((dir.join(format!("{tag}_error.csv")), error_curve_csv(sys, &model, &job.grid)?));
    }
    Ok(RowOutput { model, dr_star, surrogate_k, files })
}

fn run_row(job: &Job, sys: &LtiSystem, reference: &Reference, method: Method, r: usize) -> ReportRow {
    let start = Instant::now();
    let result = run_method(job, sys, method, r).and_then(|out| {
        let abs = reference.error(sys, &out.model, &job.grid)?;
        Ok((out, abs))
    });
    let seconds = start.elapsed().as_secs_f64();
    let (out, abs) = match result {
        Ok(v) => v,
        Err(e) => return ReportRow::failed(&method.to_string(), r, format!("{e:?}"), seconds),
    };
    for (path, text) in &out.files {
        if let Err(e) = write_atomic(path, text) {
            return ReportRow::failed(&method.to_string(), r, e.to_string(), seconds);
        }
    }
    ReportRow {
        method: method.to_string(),
        r,
        dr_star: Some(out.dr_star),
        abs_error: Some(abs),
        rel_error: Some(abs / reference.full_norm),
        lower_bound: reference.hankel.as_ref().map(|h| h.sigma_after(r) / reference.full_norm),
        surrogate_k: out.surrogate_k,
        norm_method: Some(method_label(reference.method())),
        status: "ok".into(),
        seconds,
    }
    .rounded()
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    source: String,
    methods: Vec<String>,
    orders: &'a [usize],
    mode: String,
    seed: u64,
    grid: [f64; 2],
    grid_points: usize,
    tol: f64,
}

/// Loads the system, runs every `(method, r)` row and writes all artifacts.
/// Input problems are returned as errors; per-row failures are recorded in
/// the report and reflected in the exit code.
pub fn run_job(job: &Job) -> Result<RunOutcome, CliError> {
    let sys = job.load_system()?;
    job.validate(sys.n())?;
    std::fs::create_dir_all(&job.out).map_err(|e| CliError::io(&job.out, e))?;
    let pts = job.grid.points();
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        source: job.input.describe(job.seed),
        methods: job.methods.iter().map(Method::to_string).collect(),
        orders: &job.orders,
        mode: mode_name(&job.mode),
        seed: job.seed,
        grid: [pts[0], pts[pts.len() - 1]],
        grid_points: pts.len(),
        tol: job.tol,
    };
    write_atomic(&job.out.join("manifest.json"), &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;

    let pairs: Vec<(Method, usize)> = job.methods.iter().flat_map(|&m| job.orders.iter().map(move |&r| (m, r))).collect();
    let mut summary = SystemSummary {
        source: manifest.source.clone(),
        n: sys.n(),
        storage: match sys.storage_kind() {
            StorageKind::Dense => "dense".into(),
            StorageKind::Sparse => "sparse".into(),
        },
        state_space_symmetric: sys.is_state_space_symmetric(1e-12),
        full_norm: None,
        norm_method: None,
    };

    let stability = if sys.n() <= sys.dense_cap() {
        sys.poles().map(|p| p.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    } else {
        Ok(f64::NEG_INFINITY)
    };
    let setup = match stability {
        Ok(worst) if worst >= 0.0 => Err(MorError::UnstableSystem(worst)),
        Ok(_) => build_reference(job, &sys),
        Err(e) => Err(e),
    };
    let rows: Vec<ReportRow> = match &setup {
        Ok(reference) => {
            summary.full_norm = Some(sig5(reference.full_norm));
            summary.norm_method = Some(method_label(reference.method()));
            if job.mode.dump_curves {
                write_atomic(&job.out.join("curves").join("full_response.csv"), &frequency_response_csv(&sys, &job.grid)?)?;
            }
            pairs.par_iter().map(|&(m, r)| run_row(job, &sys, reference, m, r)).collect()
        }
        Err(e) => pairs.iter().map(|&(m, r)| ReportRow::failed(&m.to_string(), r, format!("{e:?}"), 0.0)).collect(),
    };
    let report = Report { system: summary, rows };
    write_atomic(&job.out.join("report.csv"), &report.to_csv())?;
    write_atomic(&job.out.join("report.json"), &report.to_json())?;
    write_atomic(&job.out.join("timing.csv"), &report.timing_csv())?;
    let exit_code = if report.all_ok() { 0 } else { 2 };
    Ok(RunOutcome { report, exit_code })
}
