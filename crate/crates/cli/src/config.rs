//! Experiment configuration: a flat `key = value` document (or the
//! equivalent JSON object), merged with command-line overrides and filled
//! with documented defaults.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use magnus_qed::driven::DrivenModeConfig;
use magnus_qed::fermi::FermiConfig;
use magnus_qed::propagators::PropagatorKind;

/// Config-level failure: carries the offending key and source line when
/// they are known.
#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
    pub key: Option<String>,
    pub line: Option<usize>,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self { message: message.into(), key: None, line: None }
    }

    fn with_key(message: impl Into<String>, key: &str, line: Option<usize>) -> Self {
        Self { message: message.into(), key: Some(key.to_string()), line }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(key) = &self.key {
            write!(f, " (key `{key}`")?;
            if let Some(line) = self.line {
                write!(f, ", line {line}")?;
            }
            write!(f, ")")?;
        } else if let Some(line) = self.line {
            write!(f, " (line {line})")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
enum RawValue {
    Text(String),
    Number(f64),
    Flag(bool),
    Numbers(Vec<f64>),
}

impl RawValue {
    fn describe(&self) -> String {
        match self {
            RawValue::Text(s) => s.clone(),
            RawValue::Number(x) => format!("{x}"),
            RawValue::Flag(b) => format!("{b}"),
            RawValue::Numbers(v) => v
                .iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

/// Parsed key/value document, before semantic interpretation.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (RawValue, Option<usize>)>,
}

impl RawConfig {
    /// Parse a flat `key = value` document (`#` comments) or a JSON object.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_flat(text)
        }
    }

    fn from_flat(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    message: format!("expected `key = value`, got `{line}`"),
                    key: None,
                    line: Some(line_no),
                });
            };
            let key = normalize_key(key);
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::with_key(
                    "empty key or value",
                    &key,
                    Some(line_no),
                ));
            }
            if entries
                .insert(key.clone(), (RawValue::Text(value), Some(line_no)))
                .is_some()
            {
                return Err(ConfigError::with_key(
                    "duplicate key",
                    &key,
                    Some(line_no),
                ));
            }
        }
        Ok(Self { entries })
    }

    fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError {
            message: format!("invalid JSON: {e}"),
            key: None,
            line: Some(e.line()),
        })?;
        let serde_json::Value::Object(map) = value else {
            return Err(ConfigError::new("JSON config must be an object"));
        };
        let mut entries = BTreeMap::new();
        for (key, value) in map {
            let key = normalize_key(&key);
            let raw = match value {
                serde_json::Value::String(s) => RawValue::Text(s),
                serde_json::Value::Number(n) => RawValue::Number(n.as_f64().ok_or_else(|| {
                    ConfigError::with_key("number out of range", &key, None)
                })?),
                serde_json::Value::Bool(b) => RawValue::Flag(b),
                serde_json::Value::Array(items) => {
                    let mut nums = Vec::with_capacity(items.len());
                    for item in items {
                        let n = item.as_f64().ok_or_else(|| {
                            ConfigError::with_key("array entries must be numbers", &key, None)
                        })?;
                        nums.push(n);
                    }
                    RawValue::Numbers(nums)
                }
                other => {
                    return Err(ConfigError::with_key(
                        format!("unsupported JSON value {other}"),
                        &key,
                        None,
                    ))
                }
            };
            entries.insert(key, (raw, None));
        }
        Ok(Self { entries })
    }

    /// Apply a command-line override; flags win over file entries.
    pub fn set_override(&mut self, key: &str, value: String) {
        self.entries
            .insert(normalize_key(key), (RawValue::Text(value), None));
    }

    /// The subcommand names the experiment; a conflicting `experiment` entry
    /// in the file is an error, a matching or absent one is filled in.
    pub fn ensure_experiment(&mut self, name: &str) -> Result<(), ConfigError> {
        match self.entries.get("experiment") {
            Some((value, line)) => {
                let v = value.describe();
                if v != name {
                    return Err(ConfigError::with_key(
                        format!(
                            "config names experiment `{v}` but the subcommand is `{name}`"
                        ),
                        "experiment",
                        *line,
                    ));
                }
            }
            None => {
                self.entries
                    .insert("experiment".into(), (RawValue::Text(name.into()), None));
            }
        }
        Ok(())
    }

    fn take(&mut self, key: &str) -> Option<(RawValue, Option<usize>)> {
        self.entries.remove(key)
    }

    fn get_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((RawValue::Number(x), _)) => Ok(Some(x)),
            Some((RawValue::Text(s), line)) => s.parse::<f64>().map(Some).map_err(|_| {
                ConfigError::with_key(format!("expected a number, got `{s}`"), key, line)
            }),
            Some((other, line)) => Err(ConfigError::with_key(
                format!("expected a number, got `{}`", other.describe()),
                key,
                line,
            )),
        }
    }

    fn get_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.get_f64(key)? {
            None => Ok(None),
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= usize::MAX as f64 => Ok(Some(x as usize)),
            Some(x) => Err(ConfigError::with_key(
                format!("expected a non-negative integer, got `{x}`"),
                key,
                None,
            )),
        }
    }

    fn get_bool(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((RawValue::Flag(b), _)) => Ok(Some(b)),
            Some((RawValue::Text(s), line)) => match s.as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                _ => Err(ConfigError::with_key(
                    format!("expected true or false, got `{s}`"),
                    key,
                    line,
                )),
            },
            Some((other, line)) => Err(ConfigError::with_key(
                format!("expected true or false, got `{}`", other.describe()),
                key,
                line,
            )),
        }
    }

    fn get_text(&mut self, key: &str) -> Result<Option<(String, Option<usize>)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((RawValue::Text(s), line)) => Ok(Some((s, line))),
            Some((other, line)) => Ok(Some((other.describe(), line))),
        }
    }

    fn get_usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
        let to_usize = |x: f64| -> Result<usize, ConfigError> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(ConfigError::with_key(
                    format!("sweep entries must be non-negative integers, got `{x}`"),
                    key,
                    None,
                ))
            }
        };
        match self.take(key) {
            None => Ok(None),
            Some((RawValue::Numbers(v), _)) => {
                v.into_iter().map(to_usize).collect::<Result<Vec<_>, _>>().map(Some)
            }
            Some((RawValue::Text(s), line)) => {
                let items: Result<Vec<usize>, _> = s
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|p| !p.is_empty())
                    .map(|p| p.parse::<usize>())
                    .collect();
                items.map(Some).map_err(|_| {
                    ConfigError::with_key(
                        format!("expected a list of integers, got `{s}`"),
                        key,
                        line,
                    )
                })
            }
            Some((other, line)) => Err(ConfigError::with_key(
                format!("expected a list of integers, got `{}`", other.describe()),
                key,
                line,
            )),
        }
    }

    /// Error on the first remaining (unconsumed) key.
    fn finish(self, experiment: ExperimentKind) -> Result<(), ConfigError> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(ConfigError::with_key(
                format!(
                    "unknown key for experiment `{}`",
                    experiment.name()
                ),
                &key,
                line,
            ));
        }
        Ok(())
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// The five runnable experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    FermiAnalytic,
    FermiNumeric,
    RwaCompare,
    DrivenMode,
    Convergence,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FermiAnalytic => "fermi-analytic",
            Self::FermiNumeric => "fermi-numeric",
            Self::RwaCompare => "rwa-compare",
            Self::DrivenMode => "driven-mode",
            Self::Convergence => "convergence",
        }
    }

    fn uses_fermi(&self) -> bool {
        !matches!(self, Self::DrivenMode)
    }

    fn uses_driven(&self) -> bool {
        matches!(self, Self::DrivenMode | Self::Convergence)
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "fermi-analytic" => Ok(Self::FermiAnalytic),
            "fermi-numeric" => Ok(Self::FermiNumeric),
            "rwa-compare" => Ok(Self::RwaCompare),
            "driven-mode" => Ok(Self::DrivenMode),
            "convergence" => Ok(Self::Convergence),
            other => Err(ConfigError::with_key(
                format!(
                    "unknown experiment `{other}` (expected fermi-analytic, fermi-numeric, \
                     rwa-compare, driven-mode, or convergence)"
                ),
                "experiment",
                None,
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(ConfigError::with_key(
                format!("unknown format `{other}` (expected csv or json)"),
                "format",
                None,
            )),
        }
    }
}

/// A validated experiment description with every default filled in.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Present for every experiment except `driven-mode`.
    pub fermi: Option<FermiConfig>,
    /// Present for `driven-mode` and `convergence`.
    pub driven: Option<DrivenModeConfig>,
    pub t_max: f64,
    pub steps: usize,
    pub propagator: PropagatorKind,
    pub rwa: bool,
    pub modes_sweep: Vec<usize>,
    pub steps_sweep: Vec<usize>,
    pub format: OutputFormat,
    pub output: Option<String>,
}

/// Parse and validate a config document. The `experiment` key must be
/// present (the CLI injects the subcommand when the file omits it).
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    ExperimentConfig::from_raw(RawConfig::from_text(text)?)
}

impl ExperimentConfig {
    pub fn from_raw(mut raw: RawConfig) -> Result<Self, ConfigError> {
        let Some((experiment_text, line)) = raw.get_text("experiment")? else {
            return Err(ConfigError::with_key(
                "missing experiment name",
                "experiment",
                None,
            ));
        };
        let experiment = ExperimentKind::from_str(&experiment_text).map_err(|mut e| {
            e.line = line;
            e
        })?;

        let format = match raw.get_text("format")? {
            None => OutputFormat::Csv,
            Some((s, line)) => OutputFormat::from_str(&s).map_err(|mut e| {
                e.line = line;
                e
            })?,
        };
        let output = raw.get_text("output")?.map(|(s, _)| s);

        // Model payloads. When both are present (convergence), the driven
        // hbar is addressed as `driven_hbar` to keep keys unambiguous.
        let fermi = if experiment.uses_fermi() {
            Some(Self::fermi_from_raw(&mut raw)?)
        } else {
            None
        };
        let driven = if experiment.uses_driven() {
            Some(Self::driven_from_raw(&mut raw, fermi.is_some())?)
        } else {
            None
        };

        let propagator = match experiment {
            ExperimentKind::FermiNumeric => match raw.get_text("propagator")? {
                None => PropagatorKind::Magnus2Series,
                Some((s, line)) => PropagatorKind::from_str(&s).map_err(|e| {
                    ConfigError::with_key(e.to_string(), "propagator", line)
                })?,
            },
            _ => PropagatorKind::Magnus2Series,
        };
        let rwa = match experiment {
            ExperimentKind::FermiNumeric => raw.get_bool("rwa")?.unwrap_or(false),
            _ => false,
        };

        // Sweeps.
        let modes_sweep = match experiment {
            ExperimentKind::RwaCompare | ExperimentKind::Convergence => {
                let sweep = raw
                    .get_usize_list("modes_sweep")?
                    .unwrap_or_else(|| vec![64, 128, 256]);
                validate_sweep(&sweep, "modes_sweep")?;
                sweep
            }
            _ => Vec::new(),
        };
        let steps_sweep = match experiment {
            ExperimentKind::Convergence => {
                let sweep = raw
                    .get_usize_list("steps_sweep")?
                    .unwrap_or_else(|| vec![100, 200, 400, 800]);
                validate_sweep(&sweep, "steps_sweep")?;
                for &s in &sweep {
                    if s < 2 {
                        return Err(ConfigError::with_key(
                            "steps sweep entries must be at least 2",
                            "steps_sweep",
                            None,
                        ));
                    }
                }
                sweep
            }
            _ => Vec::new(),
        };

        // Time grid.
        let t_max = raw.get_f64("t_max")?;
        let steps = raw.get_usize("steps")?;
        let (t_max, steps) = grid_defaults(experiment, &fermi, &driven, t_max, steps)?;

        raw.finish(experiment)?;

        Ok(Self {
            experiment,
            fermi,
            driven,
            t_max,
            steps,
            propagator,
            rwa,
            modes_sweep,
            steps_sweep,
            format,
            output,
        })
    }

    fn fermi_from_raw(raw: &mut RawConfig) -> Result<FermiConfig, ConfigError> {
        let omega_l = raw.get_f64("omega_l")?.unwrap_or(8.0);
        let omega_r = raw.get_f64("omega_r")?.unwrap_or(10.0);
        let separation = raw.get_f64("separation")?.unwrap_or(1.0);
        let mut cfg = FermiConfig {
            omega_l,
            omega_r,
            z_l: 0.0,
            z_r: separation,
            dipole_l: raw.get_f64("dipole_l")?.unwrap_or(1.0),
            dipole_r: raw.get_f64("dipole_r")?.unwrap_or(1.0),
            epsilon0: raw.get_f64("epsilon0")?.unwrap_or(1.0),
            hbar: raw.get_f64("hbar")?.unwrap_or(1.0),
            c: raw.get_f64("c")?.unwrap_or(1.0),
            box_length: f64::NAN,
            modes_per_branch: raw.get_usize("modes")?.unwrap_or(256),
            photon_cutoff: raw.get_usize("photon_cutoff")?.unwrap_or(2),
            dimension_ceiling: raw.get_usize("dimension_ceiling")?.unwrap_or(4096),
        };
        cfg.box_length = raw
            .get_f64("box_length")?
            .unwrap_or(8.0 * separation);
        cfg.validate()
            .map_err(|e| ConfigError::new(e.to_string()))?;
        Ok(cfg)
    }

    fn driven_from_raw(
        raw: &mut RawConfig,
        fermi_present: bool,
    ) -> Result<DrivenModeConfig, ConfigError> {
        let hbar_key = if fermi_present { "driven_hbar" } else { "hbar" };
        let cfg = DrivenModeConfig {
            g: raw.get_f64("g")?.unwrap_or(0.3),
            omega: raw.get_f64("omega")?.unwrap_or(1.0),
            n_max: raw.get_usize("n_max")?.unwrap_or(12),
            hbar: raw.get_f64(hbar_key)?.unwrap_or(1.0),
        };
        cfg.validate()
            .map_err(|e| ConfigError::new(e.to_string()))?;
        Ok(cfg)
    }

    /// Every key with its fully-defaulted value, for the metadata echo.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        map.insert("experiment".into(), self.experiment.name().to_string());
        map.insert("format".into(), self.format.name().to_string());
        map.insert("t_max".into(), format!("{}", self.t_max));
        map.insert("steps".into(), format!("{}", self.steps));
        if let Some(f) = &self.fermi {
            map.insert("omega_l".into(), format!("{}", f.omega_l));
            map.insert("omega_r".into(), format!("{}", f.omega_r));
            map.insert("separation".into(), format!("{}", f.separation()));
            map.insert("dipole_l".into(), format!("{}", f.dipole_l));
            map.insert("dipole_r".into(), format!("{}", f.dipole_r));
            map.insert("epsilon0".into(), format!("{}", f.epsilon0));
            map.insert("hbar".into(), format!("{}", f.hbar));
            map.insert("c".into(), format!("{}", f.c));
            map.insert("box_length".into(), format!("{}", f.box_length));
            map.insert("modes".into(), format!("{}", f.modes_per_branch));
            map.insert("photon_cutoff".into(), format!("{}", f.photon_cutoff));
            map.insert(
                "dimension_ceiling".into(),
                format!("{}", f.dimension_ceiling),
            );
        }
        if let Some(d) = &self.driven {
            map.insert("g".into(), format!("{}", d.g));
            map.insert("omega".into(), format!("{}", d.omega));
            map.insert("n_max".into(), format!("{}", d.n_max));
            let hbar_key = if self.fermi.is_some() { "driven_hbar" } else { "hbar" };
            map.insert(hbar_key.into(), format!("{}", d.hbar));
        }
        match self.experiment {
            ExperimentKind::FermiNumeric => {
                map.insert("propagator".into(), self.propagator.name().to_string());
                map.insert("rwa".into(), format!("{}", self.rwa));
            }
            ExperimentKind::RwaCompare => {
                map.insert("modes_sweep".into(), join_usize(&self.modes_sweep));
            }
            ExperimentKind::Convergence => {
                map.insert("modes_sweep".into(), join_usize(&self.modes_sweep));
                map.insert("steps_sweep".into(), join_usize(&self.steps_sweep));
            }
            _ => {}
        }
        map
    }
}

fn join_usize(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn validate_sweep(sweep: &[usize], key: &str) -> Result<(), ConfigError> {
    if sweep.is_empty() {
        return Err(ConfigError::with_key("sweep values must be non-empty", key, None));
    }
    if sweep.contains(&0) {
        return Err(ConfigError::with_key("sweep values must be positive", key, None));
    }
    Ok(())
}

/// Fill grid defaults: the driven grid covers `w t` in `[0, 4 pi]` at 400
/// steps per unit of `w t_end / 2 pi`; the numeric two-atom grids resolve
/// the fastest mode with at least 8 points per period and stay odd so no
/// node lands on the light cone. Step defaults are computed from the
/// resolved `t_max`, so overriding one key keeps the other sensible.
fn grid_defaults(
    experiment: ExperimentKind,
    fermi: &Option<FermiConfig>,
    driven: &Option<DrivenModeConfig>,
    t_max: Option<f64>,
    steps: Option<usize>,
) -> Result<(f64, usize), ConfigError> {
    let t_default = match experiment {
        ExperimentKind::DrivenMode => {
            4.0 * PI / driven.as_ref().expect("driven payload").omega
        }
        ExperimentKind::FermiAnalytic | ExperimentKind::FermiNumeric => {
            3.0 * fermi.as_ref().expect("fermi payload").light_cone_time()
        }
        ExperimentKind::RwaCompare | ExperimentKind::Convergence => {
            0.96 * fermi.as_ref().expect("fermi payload").light_cone_time()
        }
    };
    let t_max = t_max.unwrap_or(t_default);
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(ConfigError::with_key(
            format!("t_max must be positive, got {t_max}"),
            "t_max",
            None,
        ));
    }
    let steps_default = match experiment {
        ExperimentKind::DrivenMode => {
            let d = driven.as_ref().expect("driven payload");
            let periods = d.omega * t_max / (2.0 * PI);
            (400.0 * periods.max(1.0)).ceil() as usize
        }
        ExperimentKind::FermiAnalytic => 400,
        _ => fermi_steps_default(fermi.as_ref().expect("fermi payload"), t_max),
    };
    let steps = steps.unwrap_or(steps_default);
    if steps < 2 {
        return Err(ConfigError::with_key(
            format!("steps must be at least 2, got {steps}"),
            "steps",
            None,
        ));
    }
    Ok((t_max, steps))
}

fn fermi_steps_default(f: &FermiConfig, t_max: f64) -> usize {
    // >= 8 samples per period of the fastest mode.
    let nu_max = f.delta_nu() * f.modes_per_branch as f64;
    let fine = (8.0 * nu_max * t_max / (2.0 * PI)).ceil() as usize;
    let steps = fine.max(401);
    if steps.is_multiple_of(2) {
        steps + 1
    } else {
        steps
    }
}
