//! Command-line front end. Exit codes: 0 ok, 1 verification failed, 2 usage,
//! 3 numerical failure.

use crate::oracle::{OracleError, SearchBox, SpectrumResult};
use crate::potential::{Parity, Potential, PotentialError, PotentialSpec};
use crate::quantize::{EigenvaluePrediction, QuantizeError, WkbProblem};
use crate::stokes::{build_graph, TraceOptions};
use crate::turning::{classify, continue_in_mu, migration_path, ContinuationOptions, TurningError};
use crate::verify::{self, Comparison, VerifyOptions};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "zss", version, about = "Semiclassical eigenvalues of the Zakharov-Shabat operator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the turning-point configuration at mu0
    Classify(Common),
    /// Bohr-Sommerfeld and splitting predictions as JSON lines
    Wkb(Common),
    /// Eigenvalues in a box by direct shooting
    Oracle(Common),
    /// Pair WKB predictions with oracle eigenvalues
    Compare(Common),
    /// Stokes graph at mu
    Stokes(Common),
    /// Turning-point migration along mu0 exp(i theta)
    Migrate(Common),
    /// Run the acceptance suite
    Verify(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated list of h values
    #[arg(long, value_delimiter = ',')]
    pub h: Option<Vec<f64>>,
    #[arg(long)]
    pub mu0: Option<f64>,
    /// Window radius around mu0
    #[arg(long)]
    pub eps: Option<f64>,
    /// Search box re0,re1,im0,im1 in the lambda plane
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    pub search_box: Option<[f64; 4]>,
    #[arg(long)]
    pub parity: Option<Parity>,
    /// Restrict predictions to one quantum number
    #[arg(long)]
    pub seed_k: Option<i64>,
}

fn parse_box(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected re0,re1,im0,im1, got {} values", v.len()))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MigrateConfig {
    #[serde(default)]
    pub angle: Option<f64>,
    #[serde(default)]
    pub frames: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StokesConfig {
    #[serde(default)]
    pub max_len: Option<f64>,
    #[serde(default)]
    pub step_tol: Option<f64>,
}

/// Declarative run configuration; every field may be overridden by a flag.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub mu0: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    /// Explicit `mu` window; takes precedence over `eps`.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(default, rename = "box")]
    pub search_box: Option<[f64; 4]>,
    /// Complex `mu` for the Stokes graph, `[re, im]`; defaults to `mu0`.
    #[serde(default)]
    pub mu: Option<[f64; 2]>,
    #[serde(default)]
    pub seed_k: Option<i64>,
    #[serde(default)]
    pub migrate: MigrateConfig,
    #[serde(default)]
    pub stokes: StokesConfig,
    /// Replaces every numerical tolerance of the verification suite.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed")]
    Verification,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::Parse(_) | PotentialError::InvalidBuiltin(_) | PotentialError::InvalidSpec(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<TurningError> for CliError {
    fn from(e: TurningError) -> Self {
        match e {
            TurningError::MuOutOfRange { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<QuantizeError> for CliError {
    fn from(e: QuantizeError) -> Self {
        match e {
            QuantizeError::Turning(t) => t.into(),
            QuantizeError::WrongConfiguration { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::InvalidBox(_) => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// Configuration after flag overrides and validation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub potential: Potential,
    pub mu0: f64,
    pub window: (f64, f64),
    pub hs: Vec<f64>,
    pub search_box: Option<SearchBox>,
    pub seed_k: Option<i64>,
    pub config: RunConfig,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn resolve(common: &Common, needs_potential: bool) -> Result<Resolved, CliError> {
    let mut cfg = load_config(&common.config)?;
    if let Some(h) = &common.h {
        cfg.h = h.clone();
    }
    if let Some(m) = common.mu0 {
        cfg.mu0 = Some(m);
    }
    if let Some(e) = common.eps {
        cfg.eps = Some(e);
        cfg.window = None;
    }
    if let Some(b) = common.search_box {
        cfg.search_box = Some(b);
    }
    if let Some(k) = common.seed_k {
        cfg.seed_k = Some(k);
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    let mut spec = match (&cfg.potential, needs_potential) {
        (Some(p), _) => p.clone(),
        (None, true) => return Err(CliError::Usage("config has no potential".into())),
        (None, false) => PotentialSpec {
            expr: Some("sech(x)".into()),
            ..Default::default()
        },
    };
    if let Some(p) = common.parity {
        spec.parity = Some(p);
    }
    let potential = Potential::from_spec(&spec)?;
    if cfg.h.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(CliError::Usage("h values must be positive".into()));
    }
    let mut hs = cfg.h.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mu0 = cfg.mu0.unwrap_or(0.0);
    let window = match (cfg.window, cfg.eps) {
        (Some([lo, hi]), _) => (lo, hi),
        (None, Some(e)) => (mu0 - e, mu0 + e),
        (None, None) => (mu0 - 0.05 * mu0, mu0 + 0.05 * mu0),
    };
    if needs_potential && cfg.mu0.is_some() {
        let v0 = potential.sup_abs()?;
        if !(mu0 > 0.0 && mu0 < v0) {
            return Err(CliError::Usage(format!("mu0 = {mu0} must lie in (0, V0) with V0 = {v0}")));
        }
    }
    let search_box = cfg.search_box.map(|b| SearchBox::new(b[0], b[1], b[2], b[3]));
    Ok(Resolved {
        potential,
        mu0,
        window,
        hs,
        search_box,
        seed_k: cfg.seed_k,
        out: cfg.out.clone(),
        config: cfg,
    })
}

fn require_mu0(r: &Resolved) -> Result<f64, CliError> {
    r.config
        .mu0
        .ok_or_else(|| CliError::Usage("mu0 is required (config or --mu0)".into()))
}

fn require_h(r: &Resolved) -> Result<&[f64], CliError> {
    if r.hs.is_empty() {
        Err(CliError::Usage("at least one h is required (config or --h)".into()))
    } else {
        Ok(&r.hs)
    }
}

fn default_box(r: &Resolved) -> SearchBox {
    r.search_box
        .unwrap_or_else(|| SearchBox::new(-0.05, 0.05, r.window.0.max(1e-3), r.window.1))
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable output")
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyOutput {
    pub mu0: f64,
    pub v0: f64,
    pub potential: String,
    pub parity: Parity,
    #[serde(flatten)]
    pub config: crate::turning::ConfigurationReport,
}

pub fn cmd_classify(r: &Resolved) -> Result<Vec<String>, CliError> {
    let mu0 = require_mu0(r)?;
    let cfg = classify(&r.potential, mu0)?;
    let out = ClassifyOutput {
        mu0,
        v0: r.potential.sup_abs()?,
        potential: r.potential.describe(),
        parity: r.potential.parity(),
        config: cfg.report(),
    };
    Ok(vec![json(&out)])
}

fn predictions(r: &Resolved, wkb: &WkbProblem, h: f64) -> Result<Vec<EigenvaluePrediction>, CliError> {
    let ks = match r.seed_k {
        Some(k) => vec![k],
        None => wkb.enumerate_indices(h)?,
    };
    let mut out = Vec::new();
    for k in ks {
        let p = if !wkb.config.is_double() {
            wkb.solve_bs_single(h, k)?
        } else if r.potential.parity() != Parity::None {
            wkb.predict_splitting(h, k)?
        } else {
            wkb.predict_full_qc(h, k)?
        };
        out.push(p);
    }
    Ok(out)
}

pub fn cmd_wkb(r: &Resolved) -> Result<Vec<String>, CliError> {
    let mu0 = require_mu0(r)?;
    let wkb = WkbProblem::new(r.potential.clone(), mu0, r.window)?;
    let mut all = Vec::new();
    for &h in require_h(r)? {
        all.extend(predictions(r, &wkb, h)?);
    }
    all.sort_by(|a, b| a.k.cmp(&b.k).then(b.h.total_cmp(&a.h)));
    Ok(all.iter().map(|p| p.to_json_line()).collect())
}

fn spectra(r: &Resolved) -> Result<Vec<SpectrumResult>, CliError> {
    let b = default_box(r);
    require_h(r)?
        .iter()
        .map(|&h| verify::oracle_spectrum(&r.potential, h, &b).map_err(CliError::from))
        .collect()
}

pub fn cmd_oracle(r: &Resolved) -> Result<Vec<String>, CliError> {
    Ok(spectra(r)?.iter().map(json).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRecord {
    pub h: f64,
    #[serde(flatten)]
    pub comparison: Comparison,
    pub pairing_failure: bool,
}

/// Returns the records and whether every prediction was paired one to one.
pub fn cmd_compare(r: &Resolved) -> Result<(Vec<String>, bool), CliError> {
    let mu0 = require_mu0(r)?;
    let wkb = WkbProblem::new(r.potential.clone(), mu0, r.window)?;
    let mut lines = Vec::new();
    let mut ok = true;
    for s in spectra(r)? {
        let preds = predictions(r, &wkb, s.h)?;
        let lam: Vec<Complex64> = s.eigenvalues.iter().map(|e| e.lambda).collect();
        let cmp = verify::compare(&preds, &lam);
        let n_pred: usize = preds.iter().map(|p| p.lambda_pred.len()).sum();
        let failure = !cmp.unpaired_predictions.is_empty() || n_pred != lam.len();
        ok &= !failure;
        lines.push(json(&CompareRecord {
            h: s.h,
            comparison: cmp,
            pairing_failure: failure,
        }));
    }
    Ok((lines, ok))
}

fn trace_options(r: &Resolved) -> TraceOptions {
    let mut t = TraceOptions::default();
    if let Some(m) = r.config.stokes.max_len {
        t.max_len = m;
    }
    if let Some(s) = r.config.stokes.step_tol {
        t.step_tol = s;
    }
    t
}

pub fn cmd_stokes(r: &Resolved) -> Result<Vec<String>, CliError> {
    let mu0 = require_mu0(r)?;
    let mut cfg = classify(&r.potential, mu0)?;
    if let Some([re, im]) = r.config.mu {
        let target = Complex64::new(re, im);
        if target != cfg.mu {
            let mut opts = ContinuationOptions::for_mu0(mu0);
            opts.enforce_ordering = false;
            cfg = continue_in_mu(&r.potential, &cfg, target, 16, &opts)?;
        }
    }
    let g = build_graph(&r.potential, &cfg, &trace_options(r)).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(vec![json(&g)])
}

pub fn cmd_migrate(r: &Resolved) -> Result<Vec<String>, CliError> {
    let mu0 = require_mu0(r)?;
    let angle = r.config.migrate.angle.unwrap_or(std::f64::consts::PI);
    let frames = r.config.migrate.frames.unwrap_or(65);
    let path = migration_path(&r.potential, mu0, angle, frames, r.config.eps)?;
    Ok(vec![json(&path)])
}

/// Runs the suite; returns the verdict lines, the JSON summary and the
/// overall result.
pub fn cmd_verify(r: &Resolved) -> (Vec<String>, String, bool) {
    let opts = VerifyOptions {
        tolerance_override: r.config.tolerance,
    };
    let outcome = verify::run_suite(opts);
    let lines = outcome
        .criteria
        .iter()
        .map(|c| {
            if c.informational {
                format!("{} [informational]", c.line())
            } else {
                c.line()
            }
        })
        .collect();
    (lines, json(&outcome), outcome.passed())
}

fn emit(out: &Option<PathBuf>, lines: &[String]) -> Result<(), CliError> {
    let mut text = lines.join("\n");
    if !lines.is_empty() {
        text.push('\n');
    }
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Caps the global thread pool at `ZSS_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("ZSS_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("ZSS_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(CliError::Usage("ZSS_THREADS must be positive".into()));
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Classify(c) => {
            let r = resolve(c, true)?;
            emit(&r.out, &cmd_classify(&r)?)
        }
        Command::Wkb(c) => {
            let r = resolve(c, true)?;
            emit(&r.out, &cmd_wkb(&r)?)
        }
        Command::Oracle(c) => {
            let r = resolve(c, true)?;
            emit(&r.out, &cmd_oracle(&r)?)
        }
        Command::Compare(c) => {
            let r = resolve(c, true)?;
            let (lines, ok) = cmd_compare(&r)?;
            emit(&r.out, &lines)?;
            if ok {
                Ok(())
            } else {
                Err(CliError::Verification)
            }
        }
        Command::Stokes(c) => {
            let r = resolve(c, true)?;
            emit(&r.out, &cmd_stokes(&r)?)
        }
        Command::Migrate(c) => {
            let r = resolve(c, true)?;
            emit(&r.out, &cmd_migrate(&r)?)
        }
        Command::Verify(c) => {
            let r = resolve(c, false)?;
            let (lines, summary, ok) = cmd_verify(&r);
            let mut stdout = std::io::stdout().lock();
            for l in &lines {
                writeln!(stdout, "{l}")?;
            }
            if let Some(p) = &r.out {
                std::fs::write(p, summary + "\n")?;
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::Verification)
            }
        }
    }
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(e, CliError::Verification) {
                eprintln!("zss: {e}");
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn common(path: &Path) -> Common {
        Common {
            config: path.to_path_buf(),
            out: None,
            h: None,
            mu0: None,
            eps: None,
            search_box: None,
            parity: None,
            seed_k: None,
        }
    }

    #[test]
    fn flags_override_config() {
        let f = config(r#"{"potential": {"expr": "sech(x)"}, "mu0": 0.5, "h": [0.1], "eps": 0.1}"#);
        let mut c = common(f.path());
        c.h = Some(vec![0.2, 0.25]);
        c.mu0 = Some(0.4);
        c.search_box = Some(parse_box("-0.1,0.1,0.2,0.8").unwrap());
        let r = resolve(&c, true).unwrap();
        assert_eq!(r.hs, vec![0.25, 0.2]);
        assert_eq!(r.mu0, 0.4);
        assert!((r.window.0 - 0.3).abs() < 1e-15 && (r.window.1 - 0.5).abs() < 1e-15);
        assert_eq!(r.search_box, Some(SearchBox::new(-0.1, 0.1, 0.2, 0.8)));
    }

    #[test]
    fn config_validation() {
        let f = config(r#"{"potential": {"expr": "sech(x)"}, "mu0": 1.5}"#);
        assert!(matches!(resolve(&common(f.path()), true), Err(CliError::Usage(_))));
        let f = config(r#"{"potential": {"expr": "sech(x)"}, "mu0": 0.5, "h": [-0.1]}"#);
        assert!(matches!(resolve(&common(f.path()), true), Err(CliError::Usage(_))));
        let f = config(r#"{"potential": {"expr": "sech(x)"}, "bogus": 1}"#);
        assert!(matches!(resolve(&common(f.path()), true), Err(CliError::Usage(_))));
        let f = config(r#"{"mu0": 0.5}"#);
        assert!(matches!(resolve(&common(f.path()), true), Err(CliError::Usage(_))));
        assert!(matches!(
            resolve(&common(Path::new("/nonexistent/zss.json")), true),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn box_flag_parsing() {
        assert_eq!(parse_box("-0.05, 0.05,0.1,0.9").unwrap(), [-0.05, 0.05, 0.1, 0.9]);
        assert!(parse_box("1,2,3").is_err());
        assert!(parse_box("1,2,x,4").is_err());
    }

    #[test]
    fn missing_config_is_usage_error() {
        assert_eq!(main_with_args(["zss", "verify"]), 2);
        assert_eq!(main_with_args(["zss", "frobnicate", "--config", "x"]), 2);
    }

    #[test]
    fn classify_reports() {
        let f = config(r#"{"potential": {"builtin": {"name": "double-sech"}}, "mu0": 0.2}"#);
        let r = resolve(&common(f.path()), true).unwrap();
        let out = cmd_classify(&r).unwrap();
        let j: serde_json::Value = serde_json::from_str(&out[0]).unwrap();
        assert_eq!(j["kind"], "double-lobe");
        assert_eq!(j["points"].as_array().unwrap().len(), 4);
        assert!((j["v0"].as_f64().unwrap() - 0.25933).abs() < 1e-4);
    }

    #[test]
    fn wkb_sech_predictions() {
        let f = config(r#"{"potential": {"expr": "sech(x)"}, "mu0": 0.5, "window": [0.01, 0.99], "h": [0.2]}"#);
        let r = resolve(&common(f.path()), true).unwrap();
        let lines = cmd_wkb(&r).unwrap();
        assert_eq!(lines.len(), 5);
        for (k, l) in lines.iter().enumerate() {
            let j: serde_json::Value = serde_json::from_str(l).unwrap();
            assert_eq!(j["k"], k as i64);
            let im = j["lambda"][0][1].as_f64().unwrap();
            assert!((im - 0.2 * (5.0 - k as f64 - 0.5)).abs() < 1e-10);
        }
        // window holding no level
        let f = config(r#"{"potential": {"expr": "sech(x)"}, "mu0": 0.5, "window": [0.51, 0.52], "h": [0.2]}"#);
        let r = resolve(&common(f.path()), true).unwrap();
        assert!(cmd_wkb(&r).unwrap().is_empty());
    }

    #[test]
    fn wkb_even_pairs_are_vertical() {
        let f = config(
            r#"{"potential": {"builtin": {"name": "double-sech"}, "parity": "even"}, "mu0": 0.2, "window": [0.14, 0.235], "h": [0.1]}"#,
        );
        let r = resolve(&common(f.path()), true).unwrap();
        let lines = cmd_wkb(&r).unwrap();
        assert!(!lines.is_empty());
        for l in lines {
            let j: serde_json::Value = serde_json::from_str(&l).unwrap();
            assert!(j["flags"].as_array().unwrap().iter().any(|f| f == "vertical"));
            assert_eq!(j["lambda"].as_array().unwrap().len(), 2);
        }
    }

    #[test]
    fn compare_pairing_failure_is_reported() {
        // a box that misses most of the spectrum
        let f = config(
            r#"{"potential": {"expr": "sech(x)"}, "mu0": 0.5, "window": [0.01, 0.99], "h": [0.2], "box": [-0.05, 0.05, 0.45, 0.55]}"#,
        );
        let r = resolve(&common(f.path()), true).unwrap();
        let (lines, ok) = cmd_compare(&r).unwrap();
        assert!(!ok);
        let j: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
        assert_eq!(j["pairing_failure"], true);
    }

    #[test]
    fn compare_sech_is_exact() {
        let f = config(
            r#"{"potential": {"expr": "sech(x)"}, "mu0": 0.5, "window": [0.01, 0.99], "h": [0.2], "box": [-0.05, 0.05, 0.05, 0.95]}"#,
        );
        let r = resolve(&common(f.path()), true).unwrap();
        let (lines, ok) = cmd_compare(&r).unwrap();
        assert!(ok);
        let j: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
        for p in j["pairs"].as_array().unwrap() {
            assert!(p["delta"].as_f64().unwrap() < 1e-7);
        }
    }

    #[test]
    fn stokes_and_migrate_outputs() {
        let f = config(r#"{"potential": {"expr": "sech(x)"}, "mu0": 0.2, "mu": [0.2, 0.01], "migrate": {"frames": 9}}"#);
        let r = resolve(&common(f.path()), true).unwrap();
        let g: serde_json::Value = serde_json::from_str(&cmd_stokes(&r).unwrap()[0]).unwrap();
        assert_eq!(g["lines"].as_array().unwrap().len(), 6);
        assert_eq!(g["connections"][0]["status"], "broken");
        let m: serde_json::Value = serde_json::from_str(&cmd_migrate(&r).unwrap()[0]).unwrap();
        assert_eq!(m.as_array().unwrap().len(), 9);
        assert!(m[0]["points"][0].is_array());
    }

    #[test]
    fn identical_config_gives_identical_json() {
        let f = config(
            r#"{"potential": {"builtin": {"name": "double-sech", "params": {"sign": -1}}}, "mu0": 0.2, "window": [0.14, 0.235], "h": [0.14], "box": [-0.03, 0.03, 0.14, 0.235]}"#,
        );
        let r = resolve(&common(f.path()), true).unwrap();
        let a = cmd_oracle(&r).unwrap();
        let b = cmd_oracle(&r).unwrap();
        assert_eq!(a, b);
        assert_eq!(cmd_stokes(&r).unwrap(), cmd_stokes(&r).unwrap());
    }
}
