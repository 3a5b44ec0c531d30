//! Scenario configuration: a line-oriented `key = value` file.
//!
//! ```text
//! # comments start with '#'
//! omega1_hz     = 300e3
//! tau_grid_s    = linspace(0, 12e-3, 13)
//! theta_grid_rad = [0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
//! dt_s          = auto
//! ```
//!
//! Frequencies are ordinary frequencies in Hz. Every key is optional;
//! unset keys take per-scenario defaults (see [`ScenarioConfig::resolve`]).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    Fig1c,
    Fig3,
    Parity,
    Fig4b,
    Fig4c,
    Qutrit,
    MsBaseline,
    Convergence,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 8] = [
        ScenarioName::Fig1c,
        ScenarioName::Fig3,
        ScenarioName::Parity,
        ScenarioName::Fig4b,
        ScenarioName::Fig4c,
        ScenarioName::Qutrit,
        ScenarioName::MsBaseline,
        ScenarioName::Convergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Fig1c => "fig1c",
            ScenarioName::Fig3 => "fig3",
            ScenarioName::Parity => "parity",
            ScenarioName::Fig4b => "fig4b",
            ScenarioName::Fig4c => "fig4c",
            ScenarioName::Qutrit => "qutrit",
            ScenarioName::MsBaseline => "msbaseline",
            ScenarioName::Convergence => "convergence",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownScenario(t.to_string()))
    }
}

/// Where the parity scenario takes its state from.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StateSource {
    /// The ideal |ψ1⟩ with the motion in its ground state.
    Ideal,
    /// The state produced by the drive at the first P↓↓ maximum.
    Simulated,
}

impl fmt::Display for StateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateSource::Ideal => "ideal",
            StateSource::Simulated => "simulated",
        })
    }
}

impl FromStr for StateSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ideal" => Ok(StateSource::Ideal),
            "simulated" => Ok(StateSource::Simulated),
            other => Err(format!("expected 'ideal' or 'simulated', got '{other}'")),
        }
    }
}

/// Values as written in a config file; `None` means "use the default".
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Option<ScenarioName>,
    pub omega1_hz: Option<f64>,
    pub eta_omega2_hz: Option<f64>,
    pub delta_hz: Option<f64>,
    pub phase_rf: Option<f64>,
    pub phase_opt: Option<f64>,
    pub n_max: Option<usize>,
    /// `Some(None)` is an explicit `auto`.
    pub dt_s: Option<Option<f64>>,
    pub duration_s: Option<f64>,
    pub sample_every_s: Option<f64>,
    pub tau_grid_s: Option<Vec<f64>>,
    pub tau_grid_dressed_s: Option<Vec<f64>>,
    pub theta_grid_rad: Option<Vec<f64>>,
    pub ratio_grid: Option<Vec<f64>>,
    pub nmax_grid: Option<Vec<usize>>,
    pub sigma_b_hz: Option<f64>,
    pub t_bare_s: Option<f64>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    pub thermal_mean: Option<f64>,
    pub source: Option<StateSource>,
    pub output: Option<PathBuf>,
}

pub const KEYS: [&str; 22] = [
    "scenario",
    "omega1_hz",
    "eta_omega2_hz",
    "delta_hz",
    "phase_rf",
    "phase_opt",
    "n_max",
    "dt_s",
    "duration_s",
    "sample_every_s",
    "tau_grid_s",
    "tau_grid_dressed_s",
    "theta_grid_rad",
    "ratio_grid",
    "nmax_grid",
    "sigma_b_hz",
    "t_bare_s",
    "n_samples",
    "seed",
    "thermal_mean",
    "source",
    "output",
];

fn parse_float(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.trim().parse().map_err(|_| format!("expected a number, got '{}'", v.trim()))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got '{}'", v.trim()))
    }
}

fn parse_uint<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.trim().parse().map_err(|_| format!("expected a non-negative integer, got '{}'", v.trim()))
}

/// `[a, b, c]`, `a, b, c` or `linspace(start, stop, n)` (both ends included).
fn parse_float_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    let t = v.trim();
    if let Some(args) = t.strip_prefix("linspace(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 3 {
            return Err("linspace takes (start, stop, count)".into());
        }
        let (a, b) = (parse_float(parts[0])?, parse_float(parts[1])?);
        let n: usize = parse_uint(parts[2])?;
        return match n {
            0 => Err("linspace count must be >= 1".into()),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
        };
    }
    let inner = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(t);
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(parse_float).collect()
}

fn parse_uint_list(v: &str) -> std::result::Result<Vec<usize>, String> {
    let t = v.trim();
    let inner = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(t);
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(parse_uint).collect()
}

fn unquote(v: &str) -> &str {
    let t = v.trim();
    t.strip_prefix('"').and_then(|r| r.strip_suffix('"')).unwrap_or(t)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |key: &str, reason: String| Error::Config { line: Some(line_no), key: key.to_string(), reason };
        let (key, value) = line.split_once('=').ok_or_else(|| err(line, "expected 'key = value'".into()))?;
        let key = key.trim();
        let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
            return Err(err(key, "unknown key".into()));
        };
        if let Some((_, first)) = seen.iter().find(|(k, _)| *k == known) {
            return Err(err(key, format!("duplicate key (first set on line {first})")));
        }
        seen.push((known, line_no));
        let v = value.trim();
        let r: std::result::Result<(), String> = (|| {
            match known {
                "scenario" => cfg.scenario = Some(v.parse().map_err(|e: Error| e.to_string())?),
                "omega1_hz" => cfg.omega1_hz = Some(parse_float(v)?),
                "eta_omega2_hz" => cfg.eta_omega2_hz = Some(parse_float(v)?),
                "delta_hz" => cfg.delta_hz = Some(parse_float(v)?),
                "phase_rf" => cfg.phase_rf = Some(parse_float(v)?),
                "phase_opt" => cfg.phase_opt = Some(parse_float(v)?),
                "n_max" => cfg.n_max = Some(parse_uint(v)?),
                "dt_s" => {
                    cfg.dt_s = Some(if v.eq_ignore_ascii_case("auto") { None } else { Some(parse_float(v)?) })
                }
                "duration_s" => cfg.duration_s = Some(parse_float(v)?),
                "sample_every_s" => cfg.sample_every_s = Some(parse_float(v)?),
                "tau_grid_s" => cfg.tau_grid_s = Some(parse_float_list(v)?),
                "tau_grid_dressed_s" => cfg.tau_grid_dressed_s = Some(parse_float_list(v)?),
                "theta_grid_rad" => cfg.theta_grid_rad = Some(parse_float_list(v)?),
                "ratio_grid" => cfg.ratio_grid = Some(parse_float_list(v)?),
                "nmax_grid" => cfg.nmax_grid = Some(parse_uint_list(v)?),
                "sigma_b_hz" => cfg.sigma_b_hz = Some(parse_float(v)?),
                "t_bare_s" => cfg.t_bare_s = Some(parse_float(v)?),
                "n_samples" => cfg.n_samples = Some(parse_uint(v)?),
                "seed" => cfg.seed = Some(parse_uint(v)?),
                "thermal_mean" => cfg.thermal_mean = Some(parse_float(v)?),
                "source" => cfg.source = Some(v.parse()?),
                "output" => {
                    let p = unquote(v);
                    if p.is_empty() {
                        return Err("empty path".into());
                    }
                    cfg.output = Some(PathBuf::from(p));
                }
                _ => unreachable!("key list and match arms agree"),
            }
            Ok(())
        })();
        r.map_err(|reason| err(key, reason))?;
    }
    Ok(cfg)
}

/// Fully resolved parameters for one run. Frequencies stay in Hz here;
/// conversion happens when the physics types are built.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub scenario: ScenarioName,
    pub omega1_hz: f64,
    pub eta_omega2_hz: f64,
    pub delta_hz: f64,
    pub phase_rf: f64,
    pub phase_opt: f64,
    pub n_max: usize,
    pub dt_s: Option<f64>,
    pub duration_s: f64,
    pub sample_every_s: f64,
    pub tau_grid_s: Vec<f64>,
    pub tau_grid_dressed_s: Vec<f64>,
    pub theta_grid_rad: Vec<f64>,
    pub ratio_grid: Vec<f64>,
    pub nmax_grid: Vec<usize>,
    pub sigma_b_hz: f64,
    pub t_bare_s: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub thermal_mean: f64,
    pub source: StateSource,
    pub output: PathBuf,
}

/// Drive parameters of the strong-dressing calculation.
pub const FIG1C_HZ: (f64, f64, f64) = (300e3, 20e3, 40e3);
/// Drive parameters of the experiment.
pub const EXPERIMENT_HZ: (f64, f64, f64) = (10.5e3, 8.8e3, 17.6e3);
pub const DEFAULT_N_MAX: usize = 10;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_T_BARE_S: f64 = 4.3e-3;
pub const DEFAULT_N_SAMPLES: usize = 400;
pub const MAX_N_MAX: usize = 60;

pub fn default_ratio_grid() -> Vec<f64> {
    vec![
        0.2,
        0.4,
        0.6,
        0.8,
        1.0,
        EXPERIMENT_HZ.0 / EXPERIMENT_HZ.1,
        1.5,
        2.0,
        3.0,
        4.0,
        5.0,
        6.0,
        8.0,
        10.0,
        12.0,
    ]
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

fn field(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { line: None, key: key.to_string(), reason: reason.into() }
}

impl ScenarioConfig {
    /// Fills defaults for `scenario` and validates every value.
    ///
    /// Defaults: `fig1c`, `qutrit` and `convergence` use 300/20/40 kHz; the
    /// others use the experimental 10.5/8.8/17.6 kHz. `msbaseline` switches
    /// the rf off, sets δ = 2ηΩ2, φ_opt = π/4 and runs one gate time 2π/δ.
    /// `n_max` = 10, `dt_s` = auto, 1 µs sampling, seed 1, 400 shots.
    pub fn resolve(&self, scenario: ScenarioName) -> Result<Resolved> {
        use ScenarioName::*;
        let base = match scenario {
            Fig1c | Qutrit | Convergence => FIG1C_HZ,
            _ => EXPERIMENT_HZ,
        };
        let eta = self.eta_omega2_hz.unwrap_or(base.1);
        let (omega1, delta) = match scenario {
            MsBaseline => (self.omega1_hz.unwrap_or(0.0), self.delta_hz.unwrap_or(2.0 * eta)),
            _ => (self.omega1_hz.unwrap_or(base.0), self.delta_hz.unwrap_or(base.2)),
        };
        let phase_opt = self.phase_opt.unwrap_or(if scenario == MsBaseline { PI / 4.0 } else { 0.0 });
        let duration = self.duration_s.unwrap_or(match scenario {
            Fig1c | Convergence => 1.2e-3,
            Qutrit => 0.7e-3,
            Fig3 | Parity => 300e-6,
            Fig4c => 3e-3,
            Fig4b => 0.0,
            MsBaseline => {
                if delta > 0.0 {
                    1.0 / delta
                } else {
                    0.0
                }
            }
        });
        let sample_every = self.sample_every_s.unwrap_or(if scenario == MsBaseline { 1e-7 } else { 1e-6 });

        let r = Resolved {
            scenario,
            omega1_hz: omega1,
            eta_omega2_hz: eta,
            delta_hz: delta,
            phase_rf: self.phase_rf.unwrap_or(0.0),
            phase_opt,
            n_max: self.n_max.unwrap_or(DEFAULT_N_MAX),
            dt_s: self.dt_s.unwrap_or(None),
            duration_s: duration,
            sample_every_s: sample_every,
            tau_grid_s: self.tau_grid_s.clone().unwrap_or_else(|| {
                let mut g = uniform(0.0, 12e-3, 12);
                g.push(12e-3);
                g
            }),
            tau_grid_dressed_s: self.tau_grid_dressed_s.clone().unwrap_or_else(|| {
                let mut g = uniform(0.0, 200e-3, 10);
                g.push(200e-3);
                g
            }),
            theta_grid_rad: self.theta_grid_rad.clone().unwrap_or_else(|| uniform(0.0, TAU, 32)),
            ratio_grid: self.ratio_grid.clone().unwrap_or_else(default_ratio_grid),
            nmax_grid: self.nmax_grid.clone().unwrap_or_else(|| vec![6, 8, 10, 12]),
            sigma_b_hz: match self.sigma_b_hz {
                Some(s) => s,
                None => {
                    let t = self.t_bare_s.unwrap_or(DEFAULT_T_BARE_S);
                    // σ (rad/s) = 1/(√2 T); stored as an ordinary frequency
                    if t > 0.0 {
                        1.0 / (std::f64::consts::SQRT_2 * t) / TAU
                    } else {
                        f64::NAN
                    }
                }
            },
            t_bare_s: self.t_bare_s.unwrap_or(DEFAULT_T_BARE_S),
            n_samples: self.n_samples.unwrap_or(DEFAULT_N_SAMPLES),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            thermal_mean: self.thermal_mean.unwrap_or(0.0),
            source: self.source.unwrap_or(StateSource::Simulated),
            output: self.output.clone().unwrap_or_else(|| PathBuf::from("out")),
        };
        r.validate()?;
        Ok(r)
    }
}

impl Resolved {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("omega1_hz", self.omega1_hz), ("eta_omega2_hz", self.eta_omega2_hz), ("delta_hz", self.delta_hz)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(field(key, format!("{v} must be a finite frequency >= 0")));
            }
        }
        if !(self.sigma_b_hz >= 0.0 && self.sigma_b_hz.is_finite()) {
            return Err(field("sigma_b_hz", format!("{} must be finite and >= 0", self.sigma_b_hz)));
        }
        if !(self.t_bare_s > 0.0) {
            return Err(field("t_bare_s", "must be > 0"));
        }
        if self.n_max == 0 || self.n_max > MAX_N_MAX {
            return Err(field("n_max", format!("must be in 1..={MAX_N_MAX}")));
        }
        if let Some(dt) = self.dt_s {
            if !(dt > 0.0) {
                return Err(field("dt_s", "must be > 0 or 'auto'"));
            }
        }
        if !(self.duration_s >= 0.0) {
            return Err(field("duration_s", "must be >= 0"));
        }
        if !(self.sample_every_s > 0.0) {
            return Err(field("sample_every_s", "must be > 0"));
        }
        for (key, g) in [("tau_grid_s", &self.tau_grid_s), ("tau_grid_dressed_s", &self.tau_grid_dressed_s)] {
            if g.is_empty() {
                return Err(field(key, "grid is empty"));
            }
            if g[0] < 0.0 || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(field(key, "delays must be >= 0 and strictly increasing"));
            }
        }
        if self.theta_grid_rad.is_empty() {
            return Err(field("theta_grid_rad", "grid is empty"));
        }
        if self.ratio_grid.is_empty() || self.ratio_grid.iter().any(|&r| !(r > 0.0)) {
            return Err(field("ratio_grid", "needs at least one ratio, all > 0"));
        }
        if self.nmax_grid.len() < 2
            || self.nmax_grid.windows(2).any(|w| w[1] <= w[0])
            || self.nmax_grid.iter().any(|&n| n == 0 || n > MAX_N_MAX)
        {
            return Err(field("nmax_grid", format!("needs >= 2 strictly increasing cutoffs in 1..={MAX_N_MAX}")));
        }
        if self.n_samples == 0 {
            return Err(field("n_samples", "must be >= 1"));
        }
        if !(self.thermal_mean >= 0.0 && self.thermal_mean.is_finite()) {
            return Err(field("thermal_mean", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// The resolved parameters in config syntax; parsing this text and
    /// resolving it again reproduces `self`.
    pub fn to_config_text(&self) -> String {
        fn list<T: fmt::Display>(v: &[T]) -> String {
            let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("[{}]", items.join(", "))
        }
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("scenario", self.scenario.to_string());
        kv("omega1_hz", self.omega1_hz.to_string());
        kv("eta_omega2_hz", self.eta_omega2_hz.to_string());
        kv("delta_hz", self.delta_hz.to_string());
        kv("phase_rf", self.phase_rf.to_string());
        kv("phase_opt", self.phase_opt.to_string());
        kv("n_max", self.n_max.to_string());
        kv("dt_s", self.dt_s.map_or_else(|| "auto".to_string(), |d| d.to_string()));
        kv("duration_s", self.duration_s.to_string());
        kv("sample_every_s", self.sample_every_s.to_string());
        kv("tau_grid_s", list(&self.tau_grid_s));
        kv("tau_grid_dressed_s", list(&self.tau_grid_dressed_s));
        kv("theta_grid_rad", list(&self.theta_grid_rad));
        kv("ratio_grid", list(&self.ratio_grid));
        kv("nmax_grid", list(&self.nmax_grid));
        kv("sigma_b_hz", self.sigma_b_hz.to_string());
        kv("t_bare_s", self.t_bare_s.to_string());
        kv("n_samples", self.n_samples.to_string());
        kv("seed", self.seed.to_string());
        kv("thermal_mean", self.thermal_mean.to_string());
        kv("source", self.source.to_string());
        kv("output", format!("\"{}\"", self.output.display()));
        s
    }
}
