//! Configuration ingestion, subcommand dispatch, and report serialization.

use crate::asymptotics::predict_pauli;
use crate::channels::{virtual_channels, zero_mode, Channel, Regime, Spin};
use crate::error::{Error, Result};
use crate::fields::{setup, FieldSetup, Piece, ProfileKind, RadialProfile};
use crate::halfline::Method;
use crate::hardy::{certify_setup, DEFAULT_M_MAX};
use crate::harness::{
    concavity_check, conjugation_check, count_check, default_alphas, run_row, sweep, CountEntry,
    SweepReport, SweepRow,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::PathBuf;

/// Exact schema of the tabular report; floating-point fields are printed
/// with 17 significant digits so that parsing them back is lossless.
pub const CSV_HEADER: &str =
    "channel_m,spin,alpha,lambda_numeric,lambda_predicted,ratio,method,residual";

pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        row.channel_m,
        row.spin,
        format_sig17(row.alpha),
        format_sig17(row.lambda_numeric),
        format_sig17(row.lambda_predicted),
        format_sig17(row.ratio),
        row.method,
        format_sig17(row.residual),
    )
}

pub fn csv_body(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Shoot,
    Fem,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Shoot => vec![Method::Shoot],
            MethodChoice::Fem => vec![Method::Fem],
            MethodChoice::Both => vec![Method::Shoot, Method::Fem],
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_method() -> MethodChoice {
    MethodChoice::Both
}
fn default_m_max() -> i64 {
    DEFAULT_M_MAX
}
fn default_rel_tol() -> f64 {
    1e-8
}
fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_method")]
    pub method: MethodChoice,
    #[serde(default = "default_m_max")]
    pub m_max: i64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: default_method(),
            m_max: default_m_max(),
            rel_tol: default_rel_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Strictly decreasing couplings; empty means the per-regime defaults.
    #[serde(default)]
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub magnetic_field: ProfileSpec,
    pub potential: ProfileSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for OutputFormat {
    fn default() -> Self {
        default_format()
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization is infallible")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.solver.rel_tol > 0.0) {
            return Err(Error::Config(format!(
                "solver.rel_tol must be positive, got {}",
                self.solver.rel_tol
            )));
        }
        if self.solver.m_max < 0 {
            return Err(Error::Config(format!(
                "solver.m_max must be nonnegative, got {}",
                self.solver.m_max
            )));
        }
        if self.sweep.alphas.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Config("sweep.alphas must be positive".into()));
        }
        if self.sweep.alphas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "sweep.alphas must be strictly decreasing".into(),
            ));
        }
        Ok(())
    }

    pub fn to_setup(&self) -> Result<FieldSetup> {
        let b = RadialProfile::new(ProfileKind::Magnetic, self.magnetic_field.pieces.clone())
            .map_err(|e| Error::Config(format!("magnetic_field: {e}")))?;
        let v = RadialProfile::new(ProfileKind::Electric, self.potential.pieces.clone())
            .map_err(|e| Error::Config(format!("potential: {e}")))?;
        setup(b, v)
    }
}

pub fn parse_channel(text: &str) -> Result<Channel> {
    let bad = || Error::Config(format!("channel must be 'm,spin' (e.g. '-1,-'), got '{text}'"));
    let (m_str, s_str) = text.split_once(',').ok_or_else(bad)?;
    let m: i64 = m_str.trim().parse().map_err(|_| bad())?;
    let spin = match s_str.trim() {
        "+" | "plus" => Spin::Plus,
        "-" | "minus" => Spin::Minus,
        _ => return Err(bad()),
    };
    Ok(Channel::new(m, spin))
}

#[derive(Parser, Debug)]
#[command(
    name = "pauli-weakbind",
    about = "Negative spectrum of weakly perturbed two-dimensional Pauli operators"
)]
struct CliArgs {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print flux, zero-mode counts, virtual channels, and their coefficients
    Describe(Common),
    /// Print the leading weak-coupling eigenvalue predictions at one coupling
    Predict(Common),
    /// Compute one channel's lowest eigenvalue at one coupling
    Solve(Common),
    /// Run the full alpha sweep and write the comparison report
    Sweep(Common),
    /// Run the verification suite (bounds, counts, symmetries)
    Verify(Common),
    /// Print Hardy/Muckenhoupt certificates and the certified coupling range
    Hardy(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coupling strength for predict/solve
    #[arg(long)]
    alpha: Option<f64>,
    /// Channel as 'm,spin', spin one of +|-
    #[arg(long, allow_hyphen_values = true)]
    channel: Option<String>,
    /// Solver selection
    #[arg(long, value_parser = ["shoot", "fem", "both"])]
    method: Option<String>,
    /// Output path (defaults to the config's output.path, else stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Angular momentum cutoff for hardy/verify
    #[arg(long)]
    mmax: Option<i64>,
    /// Report format
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, FieldSetup)> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_json(&text)?;
        if let Some(m) = &self.method {
            cfg.solver.method = match m.as_str() {
                "shoot" => MethodChoice::Shoot,
                "fem" => MethodChoice::Fem,
                _ => MethodChoice::Both,
            };
        }
        if let Some(m) = self.mmax {
            cfg.solver.m_max = m;
        }
        if let Some(f) = &self.format {
            cfg.output.format = if f == "json" {
                OutputFormat::Json
            } else {
                OutputFormat::Csv
            };
        }
        if let Some(p) = &self.out {
            cfg.output.path = Some(p.clone());
        }
        let s = cfg.to_setup()?;
        Ok((cfg, s))
    }

    fn alpha(&self, cfg: &RunConfig) -> Result<f64> {
        if let Some(a) = self.alpha {
            if !(a > 0.0) {
                return Err(Error::Config(format!("--alpha must be positive, got {a}")));
            }
            return Ok(a);
        }
        cfg.sweep
            .alphas
            .first()
            .copied()
            .ok_or_else(|| Error::Config("--alpha (or sweep.alphas) is required".into()))
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Config(format!("stdout: {e}")))
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Profile(_) => 1,
        _ => 2,
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("PAULI_WEAKBIND_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn describe(setup: &FieldSetup) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("flux Phi = {}\n", setup.flux()));
    out.push_str(&format!(
        "zero modes N = {}, weakly bound states N' = {}\n",
        setup.n_zero_modes(),
        setup.n_prime()
    ));
    for vc in virtual_channels(setup) {
        let mode = zero_mode(setup, vc.channel)?;
        out.push_str(&format!(
            "channel {}: mu = {}, regime {}, v = {:.12e}",
            vc.channel,
            vc.mu,
            vc.regime.label(),
            mode.v_coeff()
        ));
        if let Some(n) = mode.norm_sq() {
            out.push_str(&format!(", |omega|^2 = {n:.12e}"));
        }
        if vc.regime == Regime::Power {
            out.push_str(&format!(", c_mu = {:.12e}", crate::specfun::c_mu(vc.mu)?));
        }
        out.push('\n');
    }
    Ok(out)
}

fn predict_text(setup: &FieldSetup, alpha: f64, format: OutputFormat) -> Result<String> {
    let preds = predict_pauli(setup, alpha)?;
    if format == OutputFormat::Json {
        #[derive(Serialize)]
        struct P {
            channel_m: i64,
            spin: char,
            mu: f64,
            regime: &'static str,
            v: f64,
            norm_sq: Option<f64>,
            lambda_leading: f64,
            remainder_order: &'static str,
        }
        let rows: Vec<P> = preds
            .iter()
            .map(|p| {
                let ch = p.channel.expect("pauli predictions carry channels");
                P {
                    channel_m: ch.m,
                    spin: ch.spin.symbol(),
                    mu: p.mu,
                    regime: p.regime.label(),
                    v: p.v,
                    norm_sq: p.norm_sq,
                    lambda_leading: p.lambda_leading,
                    remainder_order: p.remainder_order,
                }
            })
            .collect();
        return serde_json::to_string_pretty(&rows)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Config(e.to_string()));
    }
    let mut out = format!("alpha = {alpha}\n");
    for p in &preds {
        let ch = p.channel.expect("pauli predictions carry channels");
        out.push_str(&format!(
            "channel {ch}: regime {}, lambda ~ {}, remainder {}\n",
            p.regime.label(),
            format_sig17(p.lambda_leading),
            p.remainder_order
        ));
    }
    Ok(out)
}

fn sweep_rows(
    setup: &FieldSetup,
    cfg: &RunConfig,
    channels: Option<&[Channel]>,
) -> Result<SweepReport> {
    let methods = cfg.solver.method.methods();
    if !cfg.sweep.alphas.is_empty() {
        return sweep(setup, &cfg.sweep.alphas, channels, &methods);
    }
    // no explicit grid: default per-regime grids, merged
    let virt = virtual_channels(setup);
    let selected: Vec<_> = virt
        .iter()
        .filter(|vc| channels.map_or(true, |cs| cs.contains(&vc.channel)))
        .collect();
    let mut report = SweepReport {
        flux: setup.flux(),
        n_prime: setup.n_prime(),
        rows: Vec::new(),
        fits: Vec::new(),
        count_table: Vec::new(),
    };
    for vc in selected {
        let grid = default_alphas(vc.regime);
        let part = sweep(setup, &grid, Some(&[vc.channel]), &methods)?;
        report.rows.extend(part.rows);
        report.fits.extend(part.fits);
    }
    report.rows.sort_by(|x, y| {
        (x.channel_m, x.spin, x.method)
            .partial_cmp(&(y.channel_m, y.spin, y.method))
            .unwrap()
            .then(y.alpha.partial_cmp(&x.alpha).unwrap())
    });
    Ok(report)
}

fn report_text(report: &SweepReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => Ok(csv_body(&report.rows)),
        OutputFormat::Json => serde_json::to_string_pretty(report)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Config(e.to_string())),
    }
}

fn verify_suite(setup: &FieldSetup, cfg: &RunConfig) -> Result<(String, bool)> {
    let mut out = String::new();
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, out: &mut String| {
        out.push_str(&format!("{} {name}\n", if ok { "PASS" } else { "FAIL" }));
        if !ok {
            all_ok = false;
        }
        ok
    };
    // trimmed grids keep the suite at desk scale
    let trim = |g: Vec<f64>| -> Vec<f64> { g.into_iter().step_by(4).collect() };
    let virt = virtual_channels(setup);
    let mut report = SweepReport {
        flux: setup.flux(),
        n_prime: setup.n_prime(),
        rows: Vec::new(),
        fits: Vec::new(),
        count_table: Vec::new(),
    };
    for vc in &virt {
        let grid = trim(default_alphas(vc.regime));
        let part = sweep(setup, &grid, Some(&[vc.channel]), &[Method::Shoot])?;
        report.rows.extend(part.rows);
    }
    let rows_ok = report.rows.iter().all(|r| r.ok() && r.ratio > 0.0);
    check("rows solved with positive eigenvalue ratios", rows_ok, &mut out);
    let bound_ok = report
        .rows
        .iter()
        .all(|r| r.upper_bound.map_or(true, |u| u >= r.lambda_numeric - 1e-12 * r.lambda_numeric.abs()));
    check("variational upper bound on every row", bound_ok, &mut out);
    let concave_ok = virt.iter().all(|vc| concavity_check(&report, vc.channel));
    check("eigenvalue concavity in the coupling", concave_ok, &mut out);
    let conj_ok = conjugation_check(setup, 0.05)?;
    check("conjugation symmetry of the negative spectrum", conj_ok, &mut out);
    let cert = certify_setup(setup, cfg.solver.m_max)?;
    check("hardy certificates positive", cert.alpha_c > 0.0, &mut out);
    let alpha = (0.5 * cert.alpha_c).min(1e-2);
    let (total, expected) = count_check(setup, alpha, cfg.solver.m_max)?;
    report.count_table.push(CountEntry {
        alpha,
        total,
        n_prime: expected,
    });
    check(
        "negative eigenvalue count equals N'",
        total == expected as usize,
        &mut out,
    );
    Ok((out, all_ok))
}

fn hardy_text(setup: &FieldSetup, m_max: i64, format: OutputFormat) -> Result<String> {
    let cert = certify_setup(setup, m_max)?;
    if format == OutputFormat::Json {
        #[derive(Serialize)]
        struct C {
            channel_m: i64,
            spin: char,
            muck_sup: f64,
            alpha_threshold: f64,
        }
        #[derive(Serialize)]
        struct Out {
            alpha_c: f64,
            sup_condition_k: f64,
            sup_condition_log: f64,
            per_channel: Vec<C>,
        }
        let o = Out {
            alpha_c: cert.alpha_c,
            sup_condition_k: cert.sup_condition_k,
            sup_condition_log: cert.sup_condition_log,
            per_channel: cert
                .per_channel
                .iter()
                .map(|c| C {
                    channel_m: c.channel.m,
                    spin: c.channel.spin.symbol(),
                    muck_sup: c.muck_sup,
                    alpha_threshold: c.alpha_threshold,
                })
                .collect(),
        };
        return serde_json::to_string_pretty(&o)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Config(e.to_string()));
    }
    let mut out = format!(
        "certified coupling range: alpha < {:.12e}\nsup conditions: k-family {:.12e}, log {:.12e}\n",
        cert.alpha_c, cert.sup_condition_k, cert.sup_condition_log
    );
    for c in &cert.per_channel {
        out.push_str(&format!(
            "channel {}: muck_sup = {:.12e}, alpha_threshold = {:.12e}\n",
            c.channel, c.muck_sup, c.alpha_threshold
        ));
    }
    Ok(out)
}

fn dispatch(cmd: &Cmd) -> Result<i32> {
    let common = match cmd {
        Cmd::Describe(c)
        | Cmd::Predict(c)
        | Cmd::Solve(c)
        | Cmd::Sweep(c)
        | Cmd::Verify(c)
        | Cmd::Hardy(c) => c,
    };
    let (cfg, s) = common.load()?;
    match cmd {
        Cmd::Describe(_) => {
            emit(&cfg, &describe(&s)?)?;
        }
        Cmd::Predict(c) => {
            let alpha = c.alpha(&cfg)?;
            emit(&cfg, &predict_text(&s, alpha, cfg.output.format)?)?;
        }
        Cmd::Solve(c) => {
            let alpha = c.alpha(&cfg)?;
            let ch_text = c
                .channel
                .as_ref()
                .ok_or_else(|| Error::Config("--channel m,spin is required for solve".into()))?;
            let ch = parse_channel(ch_text)?;
            let vc = virtual_channels(&s)
                .into_iter()
                .find(|v| v.channel == ch)
                .ok_or_else(|| {
                    Error::Config(format!("channel {ch} is not a virtual channel of this setup"))
                })?;
            let mut rows = Vec::new();
            for m in cfg.solver.method.methods() {
                let row = run_row(&s, &vc, alpha, m);
                if let Some(e) = &row.error {
                    return Err(Error::Domain(e.clone()));
                }
                rows.push(row);
            }
            emit(&cfg, &csv_body(&rows))?;
        }
        Cmd::Sweep(c) => {
            let channels = match &c.channel {
                Some(t) => Some(vec![parse_channel(t)?]),
                None => None,
            };
            let report = sweep_rows(&s, &cfg, channels.as_deref())?;
            emit(&cfg, &report_text(&report, cfg.output.format)?)?;
        }
        Cmd::Verify(_) => {
            let (text, ok) = verify_suite(&s, &cfg)?;
            emit(&cfg, &text)?;
            if !ok {
                return Ok(3);
            }
        }
        Cmd::Hardy(_) => {
            emit(&cfg, &hardy_text(&s, cfg.solver.m_max, cfg.output.format)?)?;
        }
    }
    Ok(0)
}

/// Parses argv, runs the subcommand, and maps errors to exit codes:
/// 0 success, 1 configuration error, 2 solver failure, 3 verification failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            // clap handles --help/--version by "erroring" with the text
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    match dispatch(&args.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "magnetic_field": {"pieces": [{"lo": 0.0, "hi": 1.0, "coeffs": [2.0]}]},
        "potential": {"pieces": [{"lo": 0.0, "hi": 1.0, "coeffs": [1.0]}]},
        "sweep": {"alphas": [0.1, 0.05]}
    }"#;

    #[test]
    fn config_round_trip_is_stable() {
        let cfg = RunConfig::from_json(EXAMPLE).unwrap();
        let once = cfg.to_json();
        let again = RunConfig::from_json(&once).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(once, again.to_json());
    }

    #[test]
    fn config_validation() {
        let bad = EXAMPLE.replace("[0.1, 0.05]", "[0.05, 0.1]");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = EXAMPLE.replace("\"sweep\"", "\"unknown_key\"");
        assert!(RunConfig::from_json(&bad).is_err());
        // overlapping pieces are rejected with the offending breakpoint named
        let bad = EXAMPLE.replace(
            "{\"lo\": 0.0, \"hi\": 1.0, \"coeffs\": [2.0]}",
            "{\"lo\": 0.0, \"hi\": 1.0, \"coeffs\": [2.0]}, {\"lo\": 0.5, \"hi\": 2.0, \"coeffs\": [1.0]}",
        );
        let cfg = RunConfig::from_json(&bad).unwrap();
        match cfg.to_setup() {
            Err(Error::Config(msg)) => assert!(msg.contains("0.5"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn channel_parsing() {
        assert_eq!(parse_channel("-1,-").unwrap(), Channel::new(-1, Spin::Minus));
        assert_eq!(parse_channel("0, +").unwrap(), Channel::new(0, Spin::Plus));
        assert_eq!(
            parse_channel("2,minus").unwrap(),
            Channel::new(2, Spin::Minus)
        );
        assert!(parse_channel("2").is_err());
        assert!(parse_channel("x,+").is_err());
    }

    #[test]
    fn csv_format_round_trips() {
        let row = SweepRow {
            channel_m: -1,
            spin: '-',
            mu: 0.5,
            regime_label: "power",
            alpha: 0.1,
            lambda_numeric: -1.9391558503086792e-3,
            lambda_predicted: -2.0e-3,
            ratio: 0.96957,
            method: "shoot",
            residual: 1e-14,
            upper_bound: None,
            error: None,
        };
        let line = csv_row(&row);
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0], "-1");
        assert_eq!(fields[1], "-");
        assert_eq!(fields[6], "shoot");
        let back: f64 = fields[3].parse().unwrap();
        assert_eq!(back.to_bits(), row.lambda_numeric.to_bits());
        assert!(csv_body(&[row]).starts_with(CSV_HEADER));
    }

    #[test]
    fn run_reports_config_errors() {
        assert_eq!(run(["pauli-weakbind", "describe"]), 1);
        assert_eq!(
            run(["pauli-weakbind", "describe", "--config", "/nonexistent.json"]),
            1
        );
        assert_eq!(run(["pauli-weakbind", "nonsense"]), 1);
    }
}
