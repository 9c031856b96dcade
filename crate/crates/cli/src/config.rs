//! Flat `key = value` configuration with `[label]` sections, one per run.

use std::collections::BTreeMap;
use std::fmt;

use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

/// Keys accepted before the first section.
pub const GLOBAL_KEYS: &[&str] = &["output_dir", "workers", "sample_fs"];

/// Keys shared by every scenario.
const COMMON_KEYS: &[&str] = &[
    "scenario",
    "omega0_ev",
    "width_fs",
    "center_fs",
    "fluence_mj_cm2",
    "intensity_w_cm2",
    "dt_au",
    "half_widths",
    "t_end_fs",
    "post_step_au",
    "oracle",
    "oracle_tol",
    "sample_fs",
];

pub const SINGLE_SPIN_KEYS: &[&str] = &["b_tesla", "lambda_mev"];

pub const ANTIFERRO_KEYS: &[&str] =
    &["jex_mev", "axis", "delta_mev", "delta_e_mev", "eps_ex_ev", "d0", "mean_field", "full_check"];

const LIST_KEYS: &[&str] = &["b_tesla"];
const SWITCH_KEYS: &[&str] = &["oracle", "full_check"];
/// Keys whose value is one of a fixed set of words.
pub const WORD_KEYS: &[(&str, &[&str])] = &[("axis", &["z", "x"]), ("mean_field", &["live", "frozen"])];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

/// One `[label]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub label: String,
    pub scenario: Scenario,
    pub line: usize,
    pub entries: BTreeMap<String, Entry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseEnergy {
    FluenceMjCm2(f64),
    IntensityWCm2(f64),
}

impl RunConfig {
    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.entry(key) {
            None => Ok(default),
            Some(e) => parse_f64(&e.value, e.line, key),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.entry(key).map(|e| parse_f64(&e.value, e.line, key)).transpose()
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.entry(key) {
            None => Ok(default.to_vec()),
            Some(e) => {
                let v = e
                    .value
                    .split(',')
                    .map(|s| parse_f64(s.trim(), e.line, key))
                    .collect::<Result<Vec<_>, _>>()?;
                if v.is_empty() {
                    return Err(err(e.line, format!("{key}: empty list")));
                }
                Ok(v)
            }
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.entry(key) {
            None => Ok(default),
            Some(e) => match e.value.to_ascii_lowercase().as_str() {
                "on" | "true" | "yes" | "1" => Ok(true),
                "off" | "false" | "no" | "0" => Ok(false),
                _ => Err(err(e.line, format!("{key}: expected on/off, found '{}'", e.value))),
            },
        }
    }

    /// A value from a fixed set of words.
    pub fn word_or(&self, key: &str, allowed: &[&str], default: &str) -> Result<String, ConfigError> {
        match self.entry(key) {
            None => Ok(default.to_string()),
            Some(e) => {
                let v = e.value.to_ascii_lowercase();
                if allowed.contains(&v.as_str()) {
                    Ok(v)
                } else {
                    Err(err(e.line, format!("{key}: expected one of {allowed:?}, found '{}'", e.value)))
                }
            }
        }
    }

    /// Parses every value once so type errors surface before any run starts.
    fn check_values(&self) -> Result<(), ConfigError> {
        for key in self.entries.keys() {
            let k = key.as_str();
            if k == "scenario" {
                continue;
            }
            if LIST_KEYS.contains(&k) {
                self.list_or(k, &[])?;
            } else if SWITCH_KEYS.contains(&k) {
                self.bool_or(k, false)?;
            } else if let Some((_, allowed)) = WORD_KEYS.iter().find(|w| w.0 == k) {
                self.word_or(k, allowed, "")?;
            } else {
                self.f64_or(k, 0.0)?;
            }
        }
        Ok(())
    }

    /// The configured pulse energy, or `None` when the scenario default applies.
    pub fn pulse_energy(&self) -> Result<Option<PulseEnergy>, ConfigError> {
        match (self.opt_f64("fluence_mj_cm2")?, self.opt_f64("intensity_w_cm2")?) {
            (Some(_), Some(_)) => Err(err(
                self.entry("intensity_w_cm2").map_or(self.line, |e| e.line),
                "specify exactly one of fluence_mj_cm2 and intensity_w_cm2",
            )),
            (Some(f), None) => Ok(Some(PulseEnergy::FluenceMjCm2(f))),
            (None, Some(i)) => Ok(Some(PulseEnergy::IntensityWCm2(i))),
            (None, None) => Ok(None),
        }
    }
}

fn parse_f64(s: &str, line: usize, key: &str) -> Result<f64, ConfigError> {
    let v: f64 = s.trim().parse().map_err(|_| err(line, format!("{key}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(err(line, format!("{key}: value must be finite")));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub output_dir: String,
    pub workers: usize,
    pub sample_fs: f64,
    pub runs: Vec<RunConfig>,
}

pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let mut global: BTreeMap<String, Entry> = BTreeMap::new();
    let mut sections: Vec<(String, usize, BTreeMap<String, Entry>)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let label = rest.strip_suffix(']').ok_or_else(|| err(line, "unterminated section header"))?.trim();
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(err(line, format!("invalid section label '{label}'")));
            }
            if sections.iter().any(|s| s.0 == label) {
                return Err(err(line, format!("duplicate section '{label}'")));
            }
            sections.push((label.to_string(), line, BTreeMap::new()));
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| err(line, "expected 'key = value'"))?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim().to_string());
        if key.is_empty() || value.is_empty() {
            return Err(err(line, "empty key or value"));
        }
        let target = match sections.last_mut() {
            Some(s) => &mut s.2,
            None => {
                if !GLOBAL_KEYS.contains(&key.as_str()) {
                    return Err(err(line, format!("unknown global key '{key}'")));
                }
                &mut global
            }
        };
        if target.insert(key.clone(), Entry { value, line }).is_some() {
            return Err(err(line, format!("duplicate key '{key}'")));
        }
    }
    if sections.is_empty() {
        return Err(err(0, "no [section] defines a run"));
    }
    let get = |k: &str| global.get(k);
    let output_dir = get("output_dir").map_or_else(|| "results".to_string(), |e| e.value.clone());
    let workers = match get("workers") {
        None => 1,
        Some(e) => match e.value.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(err(e.line, "workers: expected a positive integer")),
        },
    };
    let sample_fs = match get("sample_fs") {
        None => 1.0,
        Some(e) => parse_f64(&e.value, e.line, "sample_fs")?,
    };
    if !(sample_fs > 0.0) {
        return Err(err(get("sample_fs").map_or(0, |e| e.line), "sample_fs must be positive"));
    }
    let mut runs = Vec::with_capacity(sections.len());
    for (label, line, entries) in sections {
        let name = entries.get("scenario").map_or(label.as_str(), |e| e.value.as_str());
        let at = entries.get("scenario").map_or(line, |e| e.line);
        let scenario = Scenario::from_name(name).ok_or_else(|| err(at, format!("unknown scenario '{name}'")))?;
        let family = if scenario.is_antiferro() { ANTIFERRO_KEYS } else { SINGLE_SPIN_KEYS };
        for (key, e) in &entries {
            if !COMMON_KEYS.contains(&key.as_str()) && !family.contains(&key.as_str()) {
                return Err(err(e.line, format!("key '{key}' does not apply to scenario '{}'", scenario.name())));
            }
        }
        let run = RunConfig { label, scenario, line, entries };
        run.check_values()?;
        run.pulse_energy()?;
        runs.push(run);
    }
    Ok(Config { output_dir, workers, sample_fs, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_globals_sections_and_values() {
        let cfg = parse(
            "# demo\noutput_dir = out\nworkers = 3\n\n[fig3]\nb_tesla = 0, 7 ,20\nlambda_mev = 20 # meV\n[slow]\nscenario = fig5d\noracle = off\n",
        )
        .unwrap();
        assert_eq!(cfg.output_dir, "out");
        assert_eq!(cfg.workers, 3);
        assert_eq!(cfg.sample_fs, 1.0);
        assert_eq!(cfg.runs.len(), 2);
        assert_eq!(cfg.runs[0].list_or("b_tesla", &[]).unwrap(), vec![0.0, 7.0, 20.0]);
        assert_eq!(cfg.runs[0].f64_or("lambda_mev", 1.0).unwrap(), 20.0);
        assert_eq!(cfg.runs[1].scenario, Scenario::from_name("fig5c").unwrap());
        assert!(!cfg.runs[1].bool_or("oracle", true).unwrap());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("[fig3]\nlambda_mev = abc\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse("[fig3]\nfluence_mj_cm2 = 2\nintensity_w_cm2 = 1e10\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("exactly one"));
        let e = parse("[nope]\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse("[fig3]\njex_mev = 3\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse("workers = 0\n[fig3]\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse("[fig3]\nb_tesla 7\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse("[fig3]\n[fig3]\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(parse("").unwrap_err().line, 0);
        let e = parse("[fig5a]\naxis = y\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse("[fig5a]\nfull_check = maybe\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn pulse_energy_choice_is_recorded() {
        let cfg = parse("[a]\nscenario = fig3\nfluence_mj_cm2 = 2\n[b]\nscenario = fig5a\nintensity_w_cm2 = 2e10\n[c]\nscenario = fig4\n")
            .unwrap();
        assert_eq!(cfg.runs[0].pulse_energy().unwrap(), Some(PulseEnergy::FluenceMjCm2(2.0)));
        assert_eq!(cfg.runs[1].pulse_energy().unwrap(), Some(PulseEnergy::IntensityWCm2(2e10)));
        assert_eq!(cfg.runs[2].pulse_energy().unwrap(), None);
    }
}
