//! Line-based `key = value` configuration with `[section]` headers.
//!
//! Blank lines and lines starting with `#` are ignored. Every key belongs to
//! exactly one section; omitted keys take the documented defaults.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use tbgp::validate::{BasisModel, ExperimentConfig, InitialLattice};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Global(String),
}

fn at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Line { line, message: message.into() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub eps: f64,
    pub a: f64,
    pub band: usize,
    pub sigma: f64,
    pub n_k: usize,
    pub n_x: usize,
    pub n_w: usize,
    pub n_d: usize,
    pub n_lat: usize,
    pub l_max: usize,
    pub n_max: usize,
    pub m_max: usize,
    /// Continuum time step; `None` selects the default of the basis model.
    pub dt: Option<f64>,
    pub dt_lattice: f64,
    /// Horizon of `simulate` in slow time.
    pub t_final: f64,
    pub t0: f64,
    pub sample_count: usize,
    pub eps_list: Vec<f64>,
    pub initial: InitialLattice,
    pub basis: BasisModel,
    pub gronwall: Option<f64>,
    pub out_dir: PathBuf,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        Self {
            eps: 0.5,
            a: PI,
            band: e.band,
            sigma: e.sigma,
            n_k: e.n_k,
            n_x: e.n_x,
            n_w: e.n_w,
            n_d: e.n_d,
            n_lat: e.n_lat,
            l_max: 6,
            n_max: e.n_max,
            m_max: e.m_max,
            dt: None,
            dt_lattice: e.dt_lattice,
            t_final: 1.0,
            t0: e.t0,
            sample_count: e.sample_count,
            eps_list: e.eps_list,
            initial: e.initial,
            basis: e.basis,
            gronwall: e.gronwall_eps,
            out_dir: PathBuf::from("out"),
            verbosity: 1,
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("potential", &["eps", "a", "band", "sigma"]),
    ("grids", &["n_k", "n_x", "n_w", "n_d", "n_lat", "l_max", "n_max", "m_max"]),
    ("steps", &["dt", "dt_lattice", "t_final", "t0", "sample_count"]),
    ("sweep", &["eps_list", "initial", "amplitude", "custom", "basis", "gronwall"]),
    ("output", &["dir", "verbosity"]),
];

fn real(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| at(line, format!("`{key}` expects a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(at(line, format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn positive(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = real(line, key, v)?;
    if x <= 0.0 {
        return Err(at(line, format!("`{key}` must be positive, got {x}")));
    }
    Ok(x)
}

fn count(line: usize, key: &str, v: &str, min: usize) -> Result<usize, ConfigError> {
    let n: usize = v.parse().map_err(|_| at(line, format!("`{key}` expects a non-negative integer, got `{v}`")))?;
    if n < min {
        return Err(at(line, format!("`{key}` must be at least {min}, got {n}")));
    }
    Ok(n)
}

fn even(line: usize, key: &str, v: &str, min: usize) -> Result<usize, ConfigError> {
    let n = count(line, key, v, min)?;
    if n % 2 != 0 {
        return Err(at(line, format!("`{key}` must be even, got {n}")));
    }
    Ok(n)
}

fn list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| real(line, key, s.trim())).collect()
}

/// Parse and validate a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section: Option<&str> = None;
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut amplitude: Option<f64> = None;
    let mut custom: Option<Vec<f64>> = None;
    let mut preset: Option<(usize, String)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| at(line, "unterminated section header"))?.trim();
            section = Some(
                KEYS.iter().map(|(k, _)| *k).find(|k| *k == name).ok_or_else(|| at(line, format!("unknown section `{name}`")))?,
            );
            continue;
        }
        let (key, value) = s.split_once('=').ok_or_else(|| at(line, format!("expected `key = value`, got `{s}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = match section {
            Some(sec) => sec,
            None => KEYS
                .iter()
                .find(|(_, keys)| keys.contains(&key))
                .map(|(sec, _)| *sec)
                .ok_or_else(|| at(line, format!("unknown key `{key}`")))?,
        };
        let allowed = KEYS.iter().find(|(k, _)| *k == sec).map(|(_, keys)| *keys).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(at(line, format!("unknown key `{key}` in section [{sec}]")));
        }
        if !seen.insert((sec.to_string(), key.to_string())) {
            return Err(at(line, format!("duplicate key `{key}` in section [{sec}]")));
        }
        match key {
            "eps" => cfg.eps = positive(line, key, value)?,
            "a" => {
                let a = real(line, key, value)?;
                if !(a > 0.0 && a < 2.0 * PI) {
                    return Err(at(line, format!("`a` must lie in (0, 2π), got {a}")));
                }
                cfg.a = a;
            }
            "band" => cfg.band = count(line, key, value, 1)?,
            "sigma" => {
                let s = real(line, key, value)?;
                if s != 1.0 && s != -1.0 {
                    return Err(at(line, format!("`sigma` must be 1 or -1, got {s}")));
                }
                cfg.sigma = s;
            }
            "n_k" => cfg.n_k = even(line, key, value, 2)?,
            "n_x" => cfg.n_x = even(line, key, value, 8)?,
            "n_w" => cfg.n_w = count(line, key, value, 4)?,
            "n_d" => cfg.n_d = count(line, key, value, 1)?,
            "n_lat" => cfg.n_lat = count(line, key, value, 1)?,
            "l_max" => cfg.l_max = count(line, key, value, 1)?,
            "n_max" => cfg.n_max = count(line, key, value, 2)?,
            "m_max" => cfg.m_max = count(line, key, value, 2)?,
            "dt" => cfg.dt = Some(positive(line, key, value)?),
            "dt_lattice" => cfg.dt_lattice = positive(line, key, value)?,
            "t_final" => cfg.t_final = positive(line, key, value)?,
            "t0" => cfg.t0 = positive(line, key, value)?,
            "sample_count" => cfg.sample_count = count(line, key, value, 2)?,
            "eps_list" => {
                let l = list(line, key, value)?;
                if l.iter().any(|&e| e <= 0.0) {
                    return Err(at(line, "`eps_list` entries must be positive"));
                }
                if l.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(at(line, "`eps_list` must be strictly decreasing"));
                }
                cfg.eps_list = l;
            }
            "initial" => match value {
                "single_site" | "two_site" | "custom" => preset = Some((line, value.to_string())),
                other => return Err(at(line, format!("unknown initial preset `{other}`"))),
            },
            "amplitude" => amplitude = Some(real(line, key, value)?),
            "custom" => custom = Some(list(line, key, value)?),
            "basis" => {
                cfg.basis = match value {
                    "grid" => BasisModel::Grid,
                    "continuum" => BasisModel::Continuum,
                    other => return Err(at(line, format!("unknown basis `{other}`"))),
                }
            }
            "gronwall" => cfg.gronwall = if value == "none" { None } else { Some(positive(line, key, value)?) },
            "dir" => {
                if value.is_empty() {
                    return Err(at(line, "`dir` must not be empty"));
                }
                cfg.out_dir = PathBuf::from(value);
            }
            "verbosity" => {
                let v = count(line, key, value, 0)?;
                cfg.verbosity = u8::try_from(v).map_err(|_| at(line, "`verbosity` is too large"))?;
            }
            _ => unreachable!("key table and match arms agree"),
        }
    }

    let amp = amplitude.unwrap_or(1.0);
    match preset {
        Some((_, p)) if p == "two_site" => cfg.initial = InitialLattice::TwoSite(amp),
        Some((line, p)) if p == "custom" => {
            cfg.initial = InitialLattice::Custom(custom.ok_or_else(|| at(line, "preset `custom` needs a `custom` list"))?)
        }
        _ => cfg.initial = InitialLattice::SingleSite(amp),
    }
    cfg.check()?;
    Ok(cfg)
}

impl RunConfig {
    fn check(&self) -> Result<(), ConfigError> {
        let g = |m: String| Err(ConfigError::Global(m));
        let nodes = self.a * self.n_x as f64 / (2.0 * PI);
        if (nodes - nodes.round()).abs() > 1e-9 {
            return g(format!("n_x = {} does not place the wall edge a = {} on a grid node", self.n_x, self.a));
        }
        if self.n_lat >= self.n_d {
            return g(format!("n_lat = {} must be smaller than n_d = {}", self.n_lat, self.n_d));
        }
        if self.m_max <= self.band || self.l_max < self.band {
            return g(format!("band {} needs m_max > band and l_max ≥ band", self.band));
        }
        if let Some(e) = self.gronwall {
            if !self.eps_list.contains(&e) {
                return g(format!("gronwall = {e} is not a member of eps_list"));
            }
        }
        self.experiment().validate().or_else(|e| g(e.to_string()))
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.basis.default_dt())
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            eps_list: self.eps_list.clone(),
            a: self.a,
            band: self.band,
            sigma: self.sigma,
            t0: self.t0,
            initial: self.initial.clone(),
            n_k: self.n_k,
            n_x: self.n_x,
            n_w: self.n_w,
            n_d: self.n_d,
            n_lat: self.n_lat,
            n_max: self.n_max,
            m_max: self.m_max,
            dt: self.dt(),
            dt_lattice: self.dt_lattice,
            sample_count: self.sample_count,
            basis: self.basis,
            gronwall_eps: self.gronwall,
            ..ExperimentConfig::default()
        }
    }

    /// Effective parameters in the input format; parsing the result gives
    /// back an identical configuration.
    pub fn to_manifest(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "[potential]\neps = {:?}\na = {:?}\nband = {}\nsigma = {:?}\n", self.eps, self.a, self.band, self.sigma);
        let _ = writeln!(
            s,
            "[grids]\nn_k = {}\nn_x = {}\nn_w = {}\nn_d = {}\nn_lat = {}\nl_max = {}\nn_max = {}\nm_max = {}\n",
            self.n_k, self.n_x, self.n_w, self.n_d, self.n_lat, self.l_max, self.n_max, self.m_max
        );
        let _ = writeln!(
            s,
            "[steps]\ndt = {:?}\ndt_lattice = {:?}\nt_final = {:?}\nt0 = {:?}\nsample_count = {}\n",
            self.dt(),
            self.dt_lattice,
            self.t_final,
            self.t0,
            self.sample_count
        );
        let _ = writeln!(s, "[sweep]\neps_list = {}", join(&self.eps_list));
        match &self.initial {
            InitialLattice::SingleSite(a) => {
                let _ = writeln!(s, "initial = single_site\namplitude = {a:?}");
            }
            InitialLattice::TwoSite(a) => {
                let _ = writeln!(s, "initial = two_site\namplitude = {a:?}");
            }
            InitialLattice::Custom(v) => {
                let _ = writeln!(s, "initial = custom\ncustom = {}", join(v));
            }
        }
        let _ = writeln!(s, "basis = {}", self.basis.name());
        let _ = writeln!(s, "gronwall = {}\n", self.gronwall.map_or("none".to_string(), |g| format!("{g:?}")));
        let _ = writeln!(s, "[output]\ndir = {}\nverbosity = {}", self.out_dir.display(), self.verbosity);
        s
    }
}
