use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use raftsan::des::{self, DesError, RNG_ALGORITHM};
use raftsan::raft::{
    compile, sequence_end_reward, ClusterConfig, CompiledModel, ConfigError, InjectionMix, Mode,
    RaftError,
};
use raftsan::solver::SolverSettings;
use raftsan::state_space::{ExplorationLimits, StateSpaceError};
use thiserror::Error;

use crate::table::{ResultTable, TableError};

/// Total uniformization truncation error used unless overridden.
pub const DEFAULT_EPS: f64 = 1e-9;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_RUNS: usize = 100_000;

/// Prefix of metadata keys that echo the effective cluster configuration.
pub const CONFIG_PREFIX: &str = "config.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StudyId {
    CdfByClusterSize,
    CorrelatedFailures,
    WatchdogResponse,
    Unavailability1000h,
    StateSpaceReport,
    OracleCrosscheck,
}

impl StudyId {
    pub const ALL: [StudyId; 6] = [
        StudyId::CdfByClusterSize,
        StudyId::CorrelatedFailures,
        StudyId::WatchdogResponse,
        StudyId::Unavailability1000h,
        StudyId::StateSpaceReport,
        StudyId::OracleCrosscheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyId::CdfByClusterSize => "S1-cdf-by-cluster-size",
            StudyId::CorrelatedFailures => "S2-correlated-failures",
            StudyId::WatchdogResponse => "S3-watchdog-response",
            StudyId::Unavailability1000h => "S4-unavailability-1000h",
            StudyId::StateSpaceReport => "S5-statespace-report",
            StudyId::OracleCrosscheck => "S6-oracle-crosscheck",
        }
    }

    pub fn short(self) -> &'static str {
        &self.name()[..2]
    }

    pub fn description(self) -> &'static str {
        match self {
            StudyId::CdfByClusterSize => {
                "response-time CDF for C in {3,5,7} after one injected mixed failure"
            }
            StudyId::CorrelatedFailures => {
                "response-time CDFs for N_F in 1..=C/2+1, mixed and bundle-only, with and without watchdog"
            }
            StudyId::WatchdogResponse => {
                "response-time CDFs of a 7-node cluster for N_F in 1..=4, with and without watchdog"
            }
            StudyId::Unavailability1000h => {
                "hourly unavailability of a 3-node cluster over 1000 h, with and without watchdog"
            }
            StudyId::StateSpaceReport => {
                "state and transition counts, generation and solve times per (C, E_S, N_F)"
            }
            StudyId::OracleCrosscheck => {
                "analytic response-time CDF against discrete-event estimates with 99% intervals"
            }
        }
    }
}

impl fmt::Display for StudyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyId {
    type Err = StudyError;
    /// Accepts the full identifier or its `S<n>` prefix, in any case.
    fn from_str(s: &str) -> Result<Self, StudyError> {
        StudyId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s) || id.short().eq_ignore_ascii_case(s))
            .ok_or_else(|| StudyError::UnknownStudy(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("unknown study `{0}`; run `study list` for the available ids")]
    UnknownStudy(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error("{context}: {source}; reduce E_S or N_F, or raise --max-states")]
    StateSpaceLimit {
        context: String,
        source: StateSpaceError,
    },
    #[error("{context}: {source}")]
    Model { context: String, source: RaftError },
    #[error(transparent)]
    Simulation(#[from] DesError),
    #[error(transparent)]
    Table(#[from] TableError),
}

impl StudyError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            StudyError::UnknownStudy(_) | StudyError::Config(_) | StudyError::InvalidSetting(_) => {
                2
            }
            StudyError::Model {
                source: RaftError::Config(_),
                ..
            } => 2,
            StudyError::StateSpaceLimit { .. } => 3,
            _ => 1,
        }
    }

    fn model(cfg: &ClusterConfig, err: RaftError) -> Self {
        let context = format!(
            "C={} N_F={} E_S={} mode={} injection={} watchdog={}",
            cfg.c, cfg.n_f, cfg.e_s, cfg.mode, cfg.injection, cfg.watchdog
        );
        match err {
            RaftError::StateSpace(
                source @ (StateSpaceError::LimitExceeded { .. }
                | StateSpaceError::TokenLimit { .. }),
            ) => StudyError::StateSpaceLimit { context, source },
            source => StudyError::Model { context, source },
        }
    }
}

/// A study together with everything that determines its output.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub id: StudyId,
    /// Base configuration; each study varies some parameters on top of it.
    pub config: ClusterConfig,
    pub output: Option<PathBuf>,
    pub eps: f64,
    pub max_states: usize,
    pub seed: u64,
    /// Replications for simulation-based columns.
    pub runs: usize,
}

impl StudySpec {
    pub fn new(id: StudyId) -> Self {
        StudySpec {
            id,
            config: ClusterConfig::table2(),
            output: None,
            eps: DEFAULT_EPS,
            max_states: ExplorationLimits::default().max_states,
            seed: DEFAULT_SEED,
            runs: DEFAULT_RUNS,
        }
    }

    /// Applies `key=value` overrides to the base configuration.
    pub fn with_overrides<'a>(
        mut self,
        overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, StudyError> {
        for (k, v) in overrides {
            self.config.set(k, v)?;
        }
        self.config.validate()?;
        Ok(self)
    }

    pub fn settings(&self) -> Result<SolverSettings<f64>, StudyError> {
        SolverSettings::with_total(self.eps)
            .map_err(|e| StudyError::InvalidSetting(format!("--eps {}: {e}", self.eps)))
    }

    pub fn limits(&self) -> ExplorationLimits {
        ExplorationLimits {
            max_states: self.max_states,
            ..ExplorationLimits::default()
        }
    }

    fn validate(&self) -> Result<(), StudyError> {
        self.config.validate()?;
        self.settings()?;
        if self.max_states == 0 {
            return Err(StudyError::InvalidSetting(
                "--max-states must be positive".into(),
            ));
        }
        if self.id == StudyId::OracleCrosscheck && self.runs < 2 {
            return Err(StudyError::InvalidSetting(
                "at least two replications are needed".into(),
            ));
        }
        Ok(())
    }
}

/// Rebuilds the configuration echoed in a table's metadata.
pub fn config_from_metadata(table: &ResultTable) -> Result<ClusterConfig, StudyError> {
    let text: String = table
        .metadata
        .iter()
        .filter_map(|(k, v)| k.strip_prefix(CONFIG_PREFIX).map(|k| format!("{k}={v}\n")))
        .collect();
    Ok(ClusterConfig::parse(&text)?)
}

/// Millisecond grid over one second.
pub fn millisecond_grid() -> Vec<f64> {
    (0..=1000).map(f64::from).collect()
}

/// Hourly grid over 1000 hours, in milliseconds.
pub fn hourly_grid_ms() -> Vec<f64> {
    (0..=1000).map(|h| f64::from(h) * 3.6e6).collect()
}

pub fn run_study(spec: &StudySpec) -> Result<ResultTable, StudyError> {
    spec.validate()?;
    let runner = Runner {
        spec,
        settings: spec.settings()?,
    };
    let mut table = match spec.id {
        StudyId::CdfByClusterSize => runner.cdf_by_cluster_size(),
        StudyId::CorrelatedFailures => runner.correlated_failures(),
        StudyId::WatchdogResponse => runner.watchdog_response(),
        StudyId::Unavailability1000h => runner.unavailability(),
        StudyId::StateSpaceReport => runner.state_space_report(),
        StudyId::OracleCrosscheck => runner.oracle_crosscheck(),
    }?;
    let mut metadata = indexmap::IndexMap::new();
    metadata.insert("study".to_string(), spec.id.name().to_string());
    metadata.insert(
        "tool".to_string(),
        format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
    );
    metadata.insert("eps".to_string(), spec.eps.to_string());
    metadata.insert("max_states".to_string(), spec.max_states.to_string());
    metadata.extend(table.metadata.drain(..));
    for (k, v) in spec.config.to_pairs() {
        metadata.insert(format!("{CONFIG_PREFIX}{k}"), v);
    }
    table.metadata = metadata;
    table.validate()?;
    Ok(table)
}

struct Runner<'a> {
    spec: &'a StudySpec,
    settings: SolverSettings<f64>,
}

fn response_point(
    base: &ClusterConfig,
    c: u32,
    n_f: u32,
    mix: InjectionMix,
    watchdog: bool,
) -> ClusterConfig {
    ClusterConfig {
        c,
        n_f,
        injection: mix,
        watchdog,
        mode: Mode::Response,
        ..base.clone()
    }
}

fn column_tag(mix: InjectionMix, watchdog: bool) -> String {
    let mut tag = String::new();
    if mix != InjectionMix::Mixed {
        tag.push('_');
        tag.push_str(&mix.to_string());
    }
    if watchdog {
        tag.push_str("_WD");
    }
    tag
}

fn curves_table(
    time_column: &str,
    times: &[f64],
    time_scale: f64,
    curves: Vec<(String, Vec<(f64, f64)>)>,
) -> Result<ResultTable, StudyError> {
    let mut columns = vec![time_column.to_string()];
    columns.extend(curves.iter().map(|(n, _)| n.clone()));
    let mut table = ResultTable::new(columns);
    for (k, &t) in times.iter().enumerate() {
        let mut row = vec![t / time_scale];
        row.extend(curves.iter().map(|(_, c)| c[k].1));
        table.push_row(row)?;
    }
    Ok(table)
}

impl Runner<'_> {
    fn compile(&self, cfg: &ClusterConfig) -> Result<CompiledModel<f64>, StudyError> {
        let compiled =
            compile::<f64>(cfg, self.spec.limits()).map_err(|e| StudyError::model(cfg, e))?;
        log::info!(
            "C={} N_F={} E_S={} {} {}: {} states, {} transitions in {:.2?}",
            cfg.c,
            cfg.n_f,
            cfg.e_s,
            cfg.mode,
            cfg.injection,
            compiled.stats.states,
            compiled.stats.transitions,
            compiled.stats.elapsed
        );
        Ok(compiled)
    }

    fn cdf(&self, cfg: &ClusterConfig, times: &[f64]) -> Result<Vec<(f64, f64)>, StudyError> {
        self.compile(cfg)?
            .response_cdf(times, &self.settings)
            .map_err(|e| StudyError::model(cfg, e))
    }

    fn cdf_by_cluster_size(&self) -> Result<ResultTable, StudyError> {
        let base = &self.spec.config;
        let times = millisecond_grid();
        let mut curves = Vec::new();
        for c in [3, 5, 7] {
            let cfg = response_point(base, c, 1, InjectionMix::Mixed, base.watchdog);
            curves.push((format!("P_C{c}"), self.cdf(&cfg, &times)?));
        }
        let mut table = curves_table("t_ms", &times, 1.0, curves)?;
        table.set_meta("sweep", "C=3,5,7 N_F=1 injection=mixed mode=response");
        Ok(table)
    }

    fn correlated_failures(&self) -> Result<ResultTable, StudyError> {
        let base = &self.spec.config;
        let times = millisecond_grid();
        let max_nf = base.c / 2 + 1;
        let mut curves = Vec::new();
        for mix in [InjectionMix::Mixed, InjectionMix::Bundle] {
            for n_f in 1..=max_nf {
                for watchdog in [false, true] {
                    let cfg = response_point(base, base.c, n_f, mix, watchdog);
                    let name = format!("P_NF{n_f}{}", column_tag(mix, watchdog));
                    curves.push((name, self.cdf(&cfg, &times)?));
                }
            }
        }
        let mut table = curves_table("t_ms", &times, 1.0, curves)?;
        table.set_meta(
            "sweep",
            format!(
                "C={} N_F=1..{max_nf} injection=mixed,bundle watchdog=false,true mode=response",
                base.c
            ),
        );
        Ok(table)
    }

    fn watchdog_response(&self) -> Result<ResultTable, StudyError> {
        let base = &self.spec.config;
        let times = millisecond_grid();
        let c = 7;
        let max_nf = c / 2 + 1;
        let mut curves = Vec::new();
        for n_f in 1..=max_nf {
            for watchdog in [false, true] {
                let cfg = response_point(base, c, n_f, base.injection, watchdog);
                let name = format!("P_NF{n_f}{}", if watchdog { "_WD" } else { "" });
                curves.push((name, self.cdf(&cfg, &times)?));
            }
        }
        let mut table = curves_table("t_ms", &times, 1.0, curves)?;
        table.set_meta(
            "sweep",
            format!(
                "C={c} N_F=1..{max_nf} injection={} watchdog=false,true mode=response",
                base.injection
            ),
        );
        Ok(table)
    }

    fn unavailability(&self) -> Result<ResultTable, StudyError> {
        let base = &self.spec.config;
        let times = hourly_grid_ms();
        let c = 3;
        let mut curves = Vec::new();
        for watchdog in [false, true] {
            let cfg = ClusterConfig {
                c,
                n_f: c,
                watchdog,
                mode: Mode::Availability,
                ..base.clone()
            };
            let curve = self
                .compile(&cfg)?
                .unavailability(&times, &self.settings)
                .map_err(|e| StudyError::model(&cfg, e))?;
            let name = if watchdog { "U_WD" } else { "U" };
            curves.push((name.to_string(), curve));
        }
        let mut table = curves_table("t_h", &times, 3.6e6, curves)?;
        table.set_meta(
            "sweep",
            format!("C={c} N_F={c} watchdog=false,true mode=availability"),
        );
        Ok(table)
    }

    fn state_space_report(&self) -> Result<ResultTable, StudyError> {
        let base = &self.spec.config;
        let times = millisecond_grid();
        let columns = [
            "C",
            "E_S",
            "N_F",
            "states",
            "transitions",
            "vanishing",
            "generation_s",
            "solve_s",
        ];
        let mut table = ResultTable::new(columns.iter().map(|s| s.to_string()).collect());
        for c in [3, 5, 7] {
            for e_s in [5, 10] {
                let n_f = c / 2 + 1;
                let cfg = ClusterConfig {
                    e_s,
                    ..response_point(base, c, n_f, base.injection, base.watchdog)
                };
                let compiled = self.compile(&cfg)?;
                let start = Instant::now();
                compiled
                    .response_cdf(&times, &self.settings)
                    .map_err(|e| StudyError::model(&cfg, e))?;
                let solve = start.elapsed();
                log::info!("C={c} E_S={e_s} N_F={n_f}: solved in {solve:.2?}");
                table.push_row(vec![
                    f64::from(c),
                    f64::from(e_s),
                    f64::from(n_f),
                    compiled.stats.states as f64,
                    compiled.stats.transitions as f64,
                    compiled.stats.vanishing as f64,
                    compiled.stats.elapsed.as_secs_f64(),
                    solve.as_secs_f64(),
                ])?;
            }
        }
        table.set_meta(
            "sweep",
            format!(
                "C=3,5,7 E_S=5,10 N_F=C/2+1 injection={} mode=response points=1001",
                base.injection
            ),
        );
        Ok(table)
    }

    fn oracle_crosscheck(&self) -> Result<ResultTable, StudyError> {
        let cfg = ClusterConfig {
            mode: Mode::Response,
            ..self.spec.config.clone()
        };
        let times = [50.0, 200.0, 500.0, 1000.0];
        let compiled = self.compile(&cfg)?;
        let analytic = compiled
            .response_cdf(&times, &self.settings)
            .map_err(|e| StudyError::model(&cfg, e))?;
        let reward = sequence_end_reward(&compiled.model);
        let estimates = des::estimate_reward_at(
            &compiled.model,
            &reward,
            &times,
            self.spec.runs,
            self.spec.seed,
        )?;
        let columns = [
            "t_ms",
            "analytic",
            "des_mean",
            "des_std_error",
            "ci99_low",
            "ci99_high",
            "inside",
        ];
        let mut table = ResultTable::new(columns.iter().map(|s| s.to_string()).collect());
        for ((&t, &(_, p)), est) in times.iter().zip(&analytic).zip(&estimates) {
            table.push_row(vec![
                t,
                p,
                est.mean,
                est.std_error(),
                est.mean - est.ci_halfwidth,
                est.mean + est.ci_halfwidth,
                if est.contains(p) { 1.0 } else { 0.0 },
            ])?;
        }
        table.set_meta("seed", self.spec.seed);
        table.set_meta("runs", self.spec.runs);
        table.set_meta("rng", RNG_ALGORITHM);
        table.set_meta("sweep", "simulation of the Erlang-expanded model");
        Ok(table)
    }
}
