//! Run configuration: JSON document or built-in preset, plus flag overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use gfc_core::{PotentialKind, PotentialSpec64};
use serde::Deserialize;
use serde_json::Value;

pub const DEFAULT_N: usize = 2001;
pub const DEFAULT_MODES: usize = 32;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_FINAL: f64 = 10.0;
pub const DEFAULT_CHECKPOINTS: usize = 100;
pub const DEFAULT_AMPLITUDES: [f64; 3] = [0.2, -0.1, 0.05];
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    beta: Option<f64>,
    potential: Value,
    domain: Option<RawDomain>,
    observables: Option<Vec<String>>,
    q: Option<Vec<f64>>,
    modes: Option<usize>,
    time: Option<RawTime>,
    initial: Option<RawInitial>,
    tolerances: Option<RawTolerances>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    min: Option<f64>,
    max: Option<f64>,
    n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_final: Option<f64>,
    dt: Option<f64>,
    checkpoints: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum RawInitial {
    Amplitudes(Vec<f64>),
    Expression(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
enum StructuredPotential {
    Quadratic { mu: f64 },
    Polynomial { coefficients: Vec<f64> },
    Expression { expr: String },
}

/// Initial ratio `Phi_0 = rho_0 / rho_G`.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// `1 + sum_s c_s phi_s / ‖phi_s‖∞` over modes `s = 1, 2, ...`.
    Amplitudes(Vec<f64>),
    /// Node values of an expression in `x`.
    Expression(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    pub checkpoints: usize,
}

/// Fully validated configuration with defaults applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub beta: f64,
    pub potential: PotentialSpec64,
    /// Human-readable potential, echoed into reports.
    pub potential_label: String,
    pub domain: Domain,
    pub observables: Vec<String>,
    /// Points of the q scan, each of length `observables.len()`.
    pub q_points: Vec<Vec<f64>>,
    pub modes: usize,
    pub time: TimeConfig,
    pub initial: Initial,
    pub tolerance_scale: f64,
    pub out_dir: PathBuf,
    pub parallel: bool,
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub modes: Option<usize>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub q: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub parallel: bool,
    pub tolerance_scale: Option<f64>,
}

/// Reads and validates a JSON configuration file.
pub fn load_config(path: &Path, ov: &Overrides) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text, ov).with_context(|| format!("in config {}", path.display()))
}

pub fn parse_config(text: &str, ov: &Overrides) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            anyhow!("{}", e.inner())
        } else {
            anyhow!("{path}: {}", e.inner())
        }
    })?;
    resolve(raw, ov)
}

/// The Gaussian example: `mu = 1`, `beta = 1`, `B = [x]`, `[-10, 10]`, `n = 2001`,
/// scanning `q` over `0, 0.5, 1`.
pub fn gaussian_preset(ov: &Overrides) -> Result<RunConfig> {
    let raw = RawConfig {
        beta: Some(1.0),
        potential: serde_json::json!({"kind": "quadratic", "mu": 1.0}),
        domain: None,
        observables: Some(vec!["x".into()]),
        q: Some(vec![0.0, 0.5, 1.0]),
        modes: None,
        time: None,
        initial: None,
        tolerances: None,
        output: None,
    };
    resolve(raw, ov)
}

fn potential_from(v: &Value, beta: f64) -> Result<(PotentialSpec64, String, Option<f64>)> {
    let structured = match v {
        Value::String(s) => {
            let spec = PotentialSpec64::expression(s, beta).map_err(|e| anyhow!("potential: {e}"))?;
            return Ok((spec, s.clone(), None));
        }
        Value::Object(_) => serde_path_to_error::deserialize::<_, StructuredPotential>(v.clone()).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                anyhow!("potential: {}", e.inner())
            } else {
                anyhow!("potential.{path}: {}", e.inner())
            }
        })?,
        _ => bail!("potential: expected an expression string or an object with a `kind`"),
    };
    match structured {
        StructuredPotential::Quadratic { mu } => {
            if !(mu > 0.0 && mu.is_finite()) {
                bail!("potential.mu: must be positive and finite, got {mu}");
            }
            let spec = PotentialSpec64::quadratic(mu, beta).map_err(|e| anyhow!("potential: {e}"))?;
            Ok((spec, format!("x^2/(2*{mu})"), Some(mu)))
        }
        StructuredPotential::Polynomial { coefficients } => {
            if coefficients.is_empty() {
                bail!("potential.coefficients: must not be empty");
            }
            let label = coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| format!("{c}*x^{k}"))
                .collect::<Vec<_>>()
                .join(" + ");
            let spec = PotentialSpec64::new(PotentialKind::Polynomial(coefficients), beta)
                .map_err(|e| anyhow!("potential: {e}"))?;
            Ok((spec, label, None))
        }
        StructuredPotential::Expression { expr } => {
            let spec = PotentialSpec64::expression(&expr, beta).map_err(|e| anyhow!("potential.expr: {e}"))?;
            Ok((spec, expr, None))
        }
    }
}

fn resolve(raw: RawConfig, ov: &Overrides) -> Result<RunConfig> {
    let beta = raw.beta.unwrap_or(1.0);
    if !(beta > 0.0 && beta.is_finite()) {
        bail!("beta: must be positive and finite, got {beta}");
    }
    let (potential, potential_label, mu) = potential_from(&raw.potential, beta)?;

    let d = raw.domain.unwrap_or_default();
    let half = 10.0 * mu.map_or(1.0, |mu| (mu / beta).sqrt());
    let domain = Domain {
        min: d.min.unwrap_or(-half),
        max: d.max.unwrap_or(half),
        n: d.n.unwrap_or(DEFAULT_N),
    };
    if domain.n < 3 {
        bail!("domain.n: must be at least 3, got {}", domain.n);
    }
    if !(domain.min.is_finite() && domain.max.is_finite() && domain.min < domain.max) {
        bail!("domain: need finite min < max, got [{}, {}]", domain.min, domain.max);
    }

    let observables = raw.observables.unwrap_or_else(|| vec!["x".into()]);
    if observables.is_empty() {
        bail!("observables: need at least one observable");
    }
    let dim = observables.len();
    let q_flat = ov.q.clone().or(raw.q).unwrap_or_else(|| vec![0.0; dim]);
    if q_flat.is_empty() || !q_flat.len().is_multiple_of(dim) {
        bail!(
            "q: length {} is not a positive multiple of the observable count {dim}",
            q_flat.len()
        );
    }
    if let Some(v) = q_flat.iter().find(|v| !v.is_finite()) {
        bail!("q: non-finite entry {v}");
    }
    let q_points = q_flat.chunks(dim).map(<[f64]>::to_vec).collect();

    let modes = ov.modes.or(raw.modes).unwrap_or(DEFAULT_MODES);
    if modes < 2 {
        bail!("modes: must be at least 2, got {modes}");
    }
    if modes > domain.n {
        bail!("modes: {modes} exceeds the node count {}", domain.n);
    }

    let t = raw.time.unwrap_or_default();
    let time = TimeConfig {
        t_final: ov.t_final.or(t.t_final).unwrap_or(DEFAULT_T_FINAL),
        dt: ov.dt.or(t.dt).unwrap_or(DEFAULT_DT),
        checkpoints: t.checkpoints.unwrap_or(DEFAULT_CHECKPOINTS),
    };
    if !(time.t_final >= 0.0 && time.t_final.is_finite()) {
        bail!("time.t_final: must be nonnegative and finite, got {}", time.t_final);
    }
    if !(time.dt > 0.0 && time.dt.is_finite()) {
        bail!("time.dt: must be positive, got {}", time.dt);
    }
    if time.checkpoints == 0 {
        bail!("time.checkpoints: must be at least 1");
    }

    let initial = match raw.initial {
        Some(RawInitial::Amplitudes(a)) => {
            if a.len() >= modes {
                bail!(
                    "initial.amplitudes: {} amplitudes need more than {modes} modes",
                    a.len()
                );
            }
            Initial::Amplitudes(a)
        }
        Some(RawInitial::Expression(s)) => Initial::Expression(s),
        None => Initial::Amplitudes(DEFAULT_AMPLITUDES[..DEFAULT_AMPLITUDES.len().min(modes - 1)].to_vec()),
    };

    let tolerance_scale = ov
        .tolerance_scale
        .or(raw.tolerances.and_then(|t| t.scale))
        .unwrap_or(1.0);
    if !(tolerance_scale > 0.0 && tolerance_scale.is_finite()) {
        bail!("tolerances.scale: must be positive, got {tolerance_scale}");
    }
    let out_dir = ov
        .out
        .clone()
        .or(raw.output.and_then(|o| o.dir))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    Ok(RunConfig {
        beta,
        potential,
        potential_label,
        domain,
        observables,
        q_points,
        modes,
        time,
        initial,
        tolerance_scale,
        out_dir,
        parallel: ov.parallel,
    })
}

impl RunConfig {
    /// `mu` when the potential is `x²/(2 mu)` and the only observable is `x`,
    /// the case with closed-form oracles.
    pub fn gaussian_mu(&self) -> Option<f64> {
        match self.potential.kind() {
            PotentialKind::Quadratic { mu } if self.observables.len() == 1 && self.observables[0].trim() == "x" => {
                Some(*mu)
            }
            _ => None,
        }
    }

    /// Number of steps of size `dt` covering `[0, t_final]`.
    pub fn steps(&self) -> Result<usize> {
        let s = self.time.t_final / self.time.dt;
        let r = s.round();
        if (s - r).abs() > 1e-9 * s.max(1.0) {
            bail!(
                "time.t_final = {} is not a whole number of steps dt = {}",
                self.time.t_final,
                self.time.dt
            );
        }
        Ok(r as usize)
    }

    /// Checkpoint times `k t_final / checkpoints`, `k = 0..=checkpoints`.
    pub fn checkpoint_times(&self) -> Vec<f64> {
        let m = self.time.checkpoints;
        (0..=m).map(|k| self.time.t_final * k as f64 / m as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config(text, &Overrides::default())
    }

    #[test]
    fn preset_matches_documented_defaults() {
        let c = gaussian_preset(&Overrides::default()).unwrap();
        assert_eq!(c.beta, 1.0);
        assert_eq!(c.gaussian_mu(), Some(1.0));
        assert_eq!(c.observables, vec!["x".to_string()]);
        assert_eq!(
            c.domain,
            Domain {
                min: -10.0,
                max: 10.0,
                n: 2001
            }
        );
        assert_eq!(c.modes, 32);
        assert_eq!(c.time.dt, 1e-3);
        assert_eq!(c.q_points, vec![vec![0.0], vec![0.5], vec![1.0]]);
    }

    #[test]
    fn quadratic_domain_scales_with_width() {
        let c = parse(r#"{"beta": 4, "potential": {"kind": "quadratic", "mu": 1}}"#).unwrap();
        assert_eq!((c.domain.min, c.domain.max), (-5.0, 5.0));
    }

    #[test]
    fn expression_passes_through() {
        let c = parse(r#"{"beta": 2, "potential": "x^2/2"}"#).unwrap();
        assert_eq!(c.beta, 2.0);
        assert_eq!(c.potential.beta(), 2.0);
        assert!(matches!(c.potential.kind(), PotentialKind::Expression(_)));
        assert_eq!(c.gaussian_mu(), None);
    }

    #[test]
    fn small_grid_names_the_field() {
        let e = parse(r#"{"potential": "x^2/2", "domain": {"n": 2}}"#).unwrap_err();
        assert!(e.to_string().contains("domain.n"), "{e}");
    }

    #[test]
    fn schema_errors_carry_paths() {
        let e = parse(r#"{"potential": "x^2/2", "domain": {"n": "many"}}"#).unwrap_err();
        assert!(e.to_string().starts_with("domain.n"), "{e}");
        let e = parse(r#"{"potential": "x^2/2", "time": {"dt": 0.1, "extra": 1}}"#).unwrap_err();
        assert!(e.to_string().contains("time") && e.to_string().contains("extra"), "{e}");
        let e = parse(r#"{"potential": "x^2/2", "colour": 1}"#).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let e = parse(r#"{"potential": {"kind": "quadratic", "nu": 1}}"#).unwrap_err();
        assert!(e.to_string().contains("potential"), "{e}");
    }

    #[test]
    fn semantic_checks() {
        assert!(parse(r#"{"potential": "x^2/2", "modes": 1}"#).is_err());
        assert!(parse(r#"{"potential": "x^2/2", "time": {"dt": 0}}"#).is_err());
        assert!(parse(r#"{"potential": "x^2/2", "time": {"t_final": -1}}"#).is_err());
        assert!(parse(r#"{"potential": "x^2/2", "domain": {"min": 1, "max": 0}}"#).is_err());
        assert!(parse(r#"{"potential": "x^2/2", "observables": ["x", "x^2"], "q": [1, 2, 3]}"#).is_err());
        assert!(parse(r#"{"potential": "x^2/2 +"}"#).is_err());
    }

    #[test]
    fn overrides_win() {
        let ov = Overrides {
            modes: Some(6),
            q: Some(vec![0.25]),
            t_final: Some(2.0),
            ..Overrides::default()
        };
        let c = parse_config(r#"{"potential": "x^2/2", "modes": 8, "q": [1]}"#, &ov).unwrap();
        assert_eq!(c.modes, 6);
        assert_eq!(c.q_points, vec![vec![0.25]]);
        assert_eq!(c.steps().unwrap(), 2000);
    }

    #[test]
    fn q_scan_chunks_by_dimension() {
        let c = parse(r#"{"potential": "x^2/2", "observables": ["x", "x^2"], "q": [0, 0.1, 0.5, 0.2]}"#).unwrap();
        assert_eq!(c.q_points, vec![vec![0.0, 0.1], vec![0.5, 0.2]]);
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(load_config(Path::new("/nonexistent/gfc.json"), &Overrides::default()).is_err());
    }
}
