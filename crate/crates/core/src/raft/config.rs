use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

/// Milliseconds per unit for the unit suffixes accepted in config keys.
const UNITS: &[(&str, f64)] = &[
    ("ms", 1.0),
    ("s", 1e3),
    ("min", 6e4),
    ("h", 3.6e6),
    ("day", 8.64e7),
    ("week", 6.048e8),
    ("month", 730.5 * 3.6e6),
];

fn unit_ms(unit: &str) -> Option<f64> {
    UNITS.iter().find(|(u, _)| *u == unit).map(|(_, ms)| *ms)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownOverride(String),
    #[error("`{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Whether the client event is present (response time) or not
/// (long-run availability with long-term failures).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Response,
    Availability,
}

impl FromStr for Mode {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "response" => Ok(Mode::Response),
            "availability" => Ok(Mode::Availability),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Response => "response",
            Mode::Availability => "availability",
        })
    }
}

/// Failure types drawn by the injection process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionMix {
    /// Hardware, process and bundle failures equally likely.
    Mixed,
    Hardware,
    Process,
    Bundle,
    /// No injected failures.
    None,
}

impl InjectionMix {
    /// `(hardware, process, bundle)` probabilities.
    pub fn probabilities(self) -> (f64, f64, f64) {
        match self {
            InjectionMix::Mixed => (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
            InjectionMix::Hardware => (1.0, 0.0, 0.0),
            InjectionMix::Process => (0.0, 1.0, 0.0),
            InjectionMix::Bundle => (0.0, 0.0, 1.0),
            InjectionMix::None => (0.0, 0.0, 0.0),
        }
    }
}

impl FromStr for InjectionMix {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "mixed" => Ok(InjectionMix::Mixed),
            "hardware" => Ok(InjectionMix::Hardware),
            "process" => Ok(InjectionMix::Process),
            "bundle" => Ok(InjectionMix::Bundle),
            "none" => Ok(InjectionMix::None),
            _ => Err(()),
        }
    }
}

impl fmt::Display for InjectionMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InjectionMix::Mixed => "mixed",
            InjectionMix::Hardware => "hardware",
            InjectionMix::Process => "process",
            InjectionMix::Bundle => "bundle",
            InjectionMix::None => "none",
        })
    }
}

/// Cluster and model parameters.
///
/// Every real-valued field is held in the unit named by its key, so the
/// pairs from [`ClusterConfig::to_pairs`] parse back to an identical value.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub c: u32,
    pub n_f: u32,
    pub e_s: u32,
    pub r_m: u32,
    pub watchdog: bool,
    pub mode: Mode,
    pub injection: InjectionMix,
    pub t_a_ms: f64,
    pub t_c_ms: f64,
    pub t_cl_ms: f64,
    pub t_r_ms: f64,
    pub t_m_best_ms: f64,
    pub t_cr_ms: f64,
    pub inv_lambda_f_ms: f64,
    pub inv_lambda_ca_ms: f64,
    pub inv_lambda_f_h_month: f64,
    pub inv_lambda_f_s_week: f64,
    /// Window over which the injected failures are expected; the injection
    /// rate is `N_F / window`.
    pub injection_window_ms: f64,
    pub inv_lambda_r_h_h: f64,
    pub lambda_d_per_h: f64,
    pub inv_lambda_r_s_min: f64,
    pub inv_lambda_r_sbw_ms: f64,
    pub inv_lambda_r_spw_s: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self::table2()
    }
}

#[derive(Clone, Copy)]
enum Field {
    Time(fn(&mut ClusterConfig) -> &mut f64, f64),
    Mean(fn(&mut ClusterConfig) -> &mut f64, f64),
    Rate(fn(&mut ClusterConfig) -> &mut f64, f64),
}

/// `(symbol, canonical key, field)` for every real-valued parameter.
const FIELDS: &[(&str, &str, Field)] = &[
    ("T_A", "T_A_ms", Field::Time(|c| &mut c.t_a_ms, 1.0)),
    ("T_C", "T_C_ms", Field::Time(|c| &mut c.t_c_ms, 1.0)),
    ("T_CL", "T_CL_ms", Field::Time(|c| &mut c.t_cl_ms, 1.0)),
    ("T_R", "T_R_ms", Field::Time(|c| &mut c.t_r_ms, 1.0)),
    (
        "T_M_best",
        "T_M_best_ms",
        Field::Time(|c| &mut c.t_m_best_ms, 1.0),
    ),
    ("T_CR", "T_CR_ms", Field::Time(|c| &mut c.t_cr_ms, 1.0)),
    (
        "injection_window",
        "injection_window_ms",
        Field::Time(|c| &mut c.injection_window_ms, 1.0),
    ),
    (
        "f",
        "inv_lambda_f_ms",
        Field::Mean(|c| &mut c.inv_lambda_f_ms, 1.0),
    ),
    (
        "ca",
        "inv_lambda_ca_ms",
        Field::Mean(|c| &mut c.inv_lambda_ca_ms, 1.0),
    ),
    (
        "F_H",
        "inv_lambda_F_H_month",
        Field::Mean(|c| &mut c.inv_lambda_f_h_month, 730.5 * 3.6e6),
    ),
    (
        "F_S",
        "inv_lambda_F_S_week",
        Field::Mean(|c| &mut c.inv_lambda_f_s_week, 6.048e8),
    ),
    (
        "R_H",
        "inv_lambda_R_H_h",
        Field::Mean(|c| &mut c.inv_lambda_r_h_h, 3.6e6),
    ),
    (
        "d",
        "lambda_d_per_h",
        Field::Rate(|c| &mut c.lambda_d_per_h, 3.6e6),
    ),
    (
        "R_S",
        "inv_lambda_R_S_min",
        Field::Mean(|c| &mut c.inv_lambda_r_s_min, 6e4),
    ),
    (
        "R_Sbw",
        "inv_lambda_R_Sbw_ms",
        Field::Mean(|c| &mut c.inv_lambda_r_sbw_ms, 1.0),
    ),
    (
        "R_Spw",
        "inv_lambda_R_Spw_s",
        Field::Mean(|c| &mut c.inv_lambda_r_spw_s, 1e3),
    ),
];

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl ClusterConfig {
    /// The reference parameter set, for a three-node cluster with one
    /// injected mixed failure.
    pub fn table2() -> Self {
        ClusterConfig {
            c: 3,
            n_f: 1,
            e_s: 20,
            r_m: 10,
            watchdog: false,
            mode: Mode::Response,
            injection: InjectionMix::Mixed,
            t_a_ms: 1.0,
            t_c_ms: 1.0,
            t_cl_ms: 50.0,
            t_r_ms: 10.0,
            t_m_best_ms: 5.0,
            t_cr_ms: 1.0,
            inv_lambda_f_ms: 225.0,
            inv_lambda_ca_ms: 225.0,
            inv_lambda_f_h_month: 6.0,
            inv_lambda_f_s_week: 1.0,
            injection_window_ms: 30.0,
            inv_lambda_r_h_h: 12.0,
            lambda_d_per_h: 0.0,
            inv_lambda_r_s_min: 3.0,
            inv_lambda_r_sbw_ms: 182.9,
            inv_lambda_r_spw_s: 26.9,
        }
    }

    /// Named presets.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "table2" => Some(Self::table2()),
            _ => None,
        }
    }

    /// Sets one parameter from its textual form. Real-valued parameters
    /// accept the canonical key, `inv_lambda_<sym>_<unit>` (a mean time) or
    /// `lambda_<sym>_per_<unit>` (a rate), and times any unit suffix.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        let int = || value.parse::<u32>().map_err(|_| bad());
        match key {
            "C" => self.c = int()?,
            "N_F" => self.n_f = int()?,
            "E_S" => self.e_s = int()?,
            "R_M" => self.r_m = int()?,
            "watchdog" => self.watchdog = parse_bool(value).ok_or_else(bad)?,
            "mode" => self.mode = value.parse().map_err(|_| bad())?,
            "injection" => self.injection = value.parse().map_err(|_| bad())?,
            _ => {
                let x: f64 = value.parse().map_err(|_| bad())?;
                if x.is_nan() {
                    return Err(bad());
                }
                self.set_real(key, x)
                    .ok_or_else(|| ConfigError::UnknownOverride(key.to_string()))?;
            }
        }
        Ok(())
    }

    fn set_real(&mut self, key: &str, x: f64) -> Option<()> {
        for &(sym, canonical, field) in FIELDS {
            if key == canonical {
                match field {
                    Field::Time(get, _) | Field::Mean(get, _) | Field::Rate(get, _) => {
                        *get(self) = x
                    }
                }
                return Some(());
            }
            let (given_mean, unit) = if let Some(rest) = key
                .strip_prefix("inv_lambda_")
                .and_then(|k| k.strip_prefix(sym))
                .and_then(|k| k.strip_prefix('_'))
            {
                (true, rest)
            } else if let Some(rest) = key
                .strip_prefix("lambda_")
                .and_then(|k| k.strip_prefix(sym))
                .and_then(|k| k.strip_prefix("_per_"))
            {
                (false, rest)
            } else if let Some(rest) = key.strip_prefix(sym).and_then(|k| k.strip_prefix('_')) {
                if !matches!(field, Field::Time(..)) {
                    continue;
                }
                (true, rest)
            } else {
                continue;
            };
            let Some(ms) = unit_ms(unit) else {
                continue;
            };
            let mean_ms = if given_mean { x * ms } else { ms / x };
            match field {
                Field::Time(get, canon) | Field::Mean(get, canon) => {
                    if matches!(field, Field::Time(..)) && !given_mean {
                        continue;
                    }
                    *get(self) = mean_ms / canon;
                }
                Field::Rate(get, canon) => *get(self) = canon / mean_ms,
            }
            return Some(());
        }
        None
    }

    /// Parses `key=value` lines on top of the reference preset. Blank lines
    /// and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::table2();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("expected key=value, found `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("empty key or value in `{line}`"),
                });
            }
            match cfg.set(key, value) {
                Ok(()) => {}
                Err(ConfigError::UnknownOverride(key)) => {
                    return Err(ConfigError::UnknownKey { line: line_no, key })
                }
                Err(ConfigError::BadValue { key, value }) => {
                    return Err(ConfigError::Syntax {
                        line: line_no,
                        message: format!("cannot parse value `{value}` for `{key}`"),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Invalid(m));
        if self.c < 3 || self.c.is_multiple_of(2) {
            return fail(format!("C must be odd and at least 3, got {}", self.c));
        }
        if self.n_f < 1 || self.n_f > self.c {
            return fail(format!("N_F must lie in 1..={}, got {}", self.c, self.n_f));
        }
        if self.e_s < 1 {
            return fail("E_S must be at least 1".into());
        }
        let mut reals = Vec::new();
        let mut copy = self.clone();
        for &(_, key, field) in FIELDS {
            match field {
                Field::Time(get, _) | Field::Mean(get, _) => {
                    reals.push((key, *get(&mut copy), false))
                }
                Field::Rate(get, _) => reals.push((key, *get(&mut copy), true)),
            }
        }
        for (key, x, zero_ok) in reals {
            let ok = x.is_finite() && (x > 0.0 || (zero_ok && x == 0.0));
            if !ok {
                return fail(format!(
                    "{key} must be {}, got {x}",
                    if zero_ok {
                        "finite and nonnegative"
                    } else {
                        "finite and positive"
                    }
                ));
            }
        }
        if (self.t_r_ms - 2.0 * self.t_m_best_ms).abs() > 1e-12 * self.t_r_ms.abs() {
            return fail(format!(
                "T_R ({}) must equal 2*T_M_best ({})",
                self.t_r_ms, self.t_m_best_ms
            ));
        }
        Ok(())
    }

    /// Every effective setting as canonical `(key, value)` pairs.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("C".to_string(), self.c.to_string()),
            ("N_F".to_string(), self.n_f.to_string()),
            ("E_S".to_string(), self.e_s.to_string()),
            ("R_M".to_string(), self.r_m.to_string()),
            ("watchdog".to_string(), self.watchdog.to_string()),
            ("mode".to_string(), self.mode.to_string()),
            ("injection".to_string(), self.injection.to_string()),
        ];
        let mut copy = self.clone();
        for &(_, key, field) in FIELDS {
            let v = match field {
                Field::Time(get, _) | Field::Mean(get, _) | Field::Rate(get, _) => *get(&mut copy),
            };
            out.push((key.to_string(), v.to_string()));
        }
        out
    }

    /// The pairs of [`to_pairs`](Self::to_pairs) as config-file text.
    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn lambda_f(&self) -> f64 {
        1.0 / self.inv_lambda_f_ms
    }

    pub fn lambda_ca(&self) -> f64 {
        1.0 / self.inv_lambda_ca_ms
    }

    /// Long-term hardware failure rate per node, per ms.
    pub fn lambda_f_h(&self) -> f64 {
        1.0 / (self.inv_lambda_f_h_month * 730.5 * 3.6e6)
    }

    /// Long-term rate of each software failure kind per node, per ms.
    pub fn lambda_f_s(&self) -> f64 {
        1.0 / (self.inv_lambda_f_s_week * 6.048e8)
    }

    /// Critical data-plane failure rate, per ms.
    pub fn lambda_d(&self) -> f64 {
        self.lambda_d_per_h / 3.6e6
    }

    /// Injection rate, per ms.
    pub fn lambda_f_si(&self) -> f64 {
        self.n_f as f64 / self.injection_window_ms
    }

    pub fn lambda_r_h(&self) -> f64 {
        1.0 / (self.inv_lambda_r_h_h * 3.6e6)
    }

    pub fn lambda_r_s(&self) -> f64 {
        1.0 / (self.inv_lambda_r_s_min * 6e4)
    }

    pub fn lambda_r_sbw(&self) -> f64 {
        1.0 / self.inv_lambda_r_sbw_ms
    }

    pub fn lambda_r_spw(&self) -> f64 {
        1.0 / (self.inv_lambda_r_spw_s * 1e3)
    }

    /// Process repair rate in effect, per ms.
    pub fn process_repair_rate(&self) -> f64 {
        if self.watchdog {
            self.lambda_r_spw()
        } else {
            self.lambda_r_s()
        }
    }

    /// Bundle repair rate in effect, per ms.
    pub fn bundle_repair_rate(&self) -> f64 {
        if self.watchdog {
            self.lambda_r_sbw()
        } else {
            self.lambda_r_s()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_preset() {
        assert_eq!(ClusterConfig::parse("").unwrap(), ClusterConfig::table2());
        assert_eq!(
            ClusterConfig::parse("# nothing\n\n").unwrap(),
            ClusterConfig::table2()
        );
    }

    #[test]
    fn overrides_and_aliases() {
        let cfg = ClusterConfig::parse("T_M_best_ms=5\nC=7").unwrap();
        assert_eq!(
            cfg,
            ClusterConfig {
                c: 7,
                ..ClusterConfig::table2()
            }
        );
        let cfg = ClusterConfig::parse("lambda_F_S_per_week=2\ninv_lambda_R_Sbw_s=0.5").unwrap();
        assert_eq!(cfg.inv_lambda_f_s_week, 0.5);
        assert_eq!(cfg.inv_lambda_r_sbw_ms, 500.0);
        let cfg = ClusterConfig::parse("inv_lambda_d_h=inf").unwrap();
        assert_eq!(cfg.lambda_d_per_h, 0.0);
        let cfg = ClusterConfig::parse("T_CL_s=0.05").unwrap();
        assert_eq!(cfg.t_cl_ms, 50.0);
    }

    #[test]
    fn rejections() {
        assert!(matches!(
            ClusterConfig::parse("C=4"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ClusterConfig::parse("C=3\nbogus=1"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            ClusterConfig::parse("C=3\n\nC"),
            Err(ConfigError::Syntax { line: 3, .. })
        ));
        assert!(matches!(
            ClusterConfig::parse("N_F=x"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(ClusterConfig::parse("T_M_best_ms=4").is_err());
        assert!(ClusterConfig::parse("N_F=4").is_err());
        assert!(ClusterConfig::parse("T_A_ms=0").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = ClusterConfig::table2();
        cfg.set("inv_lambda_R_H_day", "0.3").unwrap();
        cfg.set("mode", "availability").unwrap();
        cfg.watchdog = true;
        assert_eq!(ClusterConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn derived_rates() {
        let cfg = ClusterConfig {
            n_f: 3,
            ..ClusterConfig::table2()
        };
        assert!((cfg.lambda_f_si() - 0.1).abs() < 1e-15);
        assert_eq!(cfg.process_repair_rate(), cfg.lambda_r_s());
        let wd = ClusterConfig {
            watchdog: true,
            ..cfg
        };
        assert_eq!(wd.bundle_repair_rate(), 1.0 / 182.9);
        assert_eq!(wd.process_repair_rate(), 1.0 / 26_900.0);
    }
}
