//! Sweeps, presets, output files and the command-line front end.
//!
//! A run file is a scenario config (flat keys) with an optional `[sweep]`
//! table:
//!
//! ```toml
//! drops = 20
//! data_frames = 2000
//!
//! [sweep]
//! axis = "d"               # d, le or m
//! values = [50, 100, 200, 400]
//! le_series = [1, 10]      # optional: repeat the sweep per fixed Le
//! schemes = ["fixed_cap", "open_loop", "closed_loop"]
//! metrics = ["drmt"]
//! ```
//!
//! Reference schemes needed by the requested metrics (`no_femto` for DRMT,
//! `fixed_cap` for ARFT) are added to every drop automatically. All schemes
//! of one drop share its topology and channel realisation, and drop `i` uses
//! the same seed at every sweep point.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{FemtoLayout, ScenarioConfig, Scheme, WallMode};
use crate::engine::{run_schemes, AuditStats, DropResult, UserClass};
use crate::error::{Error, Result};
use crate::metrics::{arft_estimate, drmt_estimate, mean_ci, percentile_estimate, Estimate};
use crate::rng::drop_seed;

pub const RESULTS_HEADER: [&str; 9] = [
    "scheme",
    "axis",
    "axis_value",
    "metric",
    "value",
    "ci_low",
    "ci_high",
    "drops",
    "seed",
];

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "FEMTOPC_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Distance of the single building from the centre BS (m).
    #[serde(alias = "D")]
    D,
    /// Fixed external wall loss of the single building (dB).
    #[serde(alias = "Le")]
    Le,
    /// Femtocells per macrocell.
    #[serde(alias = "M")]
    M,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::D => "D",
            Axis::Le => "Le",
            Axis::M => "M",
        }
    }

    fn apply(self, cfg: &mut ScenarioConfig, v: f64) {
        match self {
            Axis::D => {
                cfg.femto_layout = FemtoLayout::Single;
                cfg.femto_distance_m = v;
            }
            Axis::Le => {
                cfg.femto_layout = FemtoLayout::Single;
                cfg.wall_mode = WallMode::Fixed;
                cfg.external_wall_db = v;
            }
            Axis::M => {
                cfg.femto_layout = FemtoLayout::Multi;
                cfg.femtos_per_macrocell = v as usize;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "drmt")]
    Drmt,
    #[serde(rename = "arft")]
    Arft,
    #[serde(rename = "macro_avg_throughput_bps")]
    MacroAvgThroughput,
    #[serde(rename = "femto_avg_throughput_bps")]
    FemtoAvgThroughput,
    #[serde(rename = "macro_5pct_user_throughput_bps")]
    Macro5pctThroughput,
    #[serde(rename = "femto_5pct_user_throughput_bps")]
    Femto5pctThroughput,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Drmt,
        Metric::Arft,
        Metric::MacroAvgThroughput,
        Metric::FemtoAvgThroughput,
        Metric::Macro5pctThroughput,
        Metric::Femto5pctThroughput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Drmt => "drmt",
            Metric::Arft => "arft",
            Metric::MacroAvgThroughput => "macro_avg_throughput_bps",
            Metric::FemtoAvgThroughput => "femto_avg_throughput_bps",
            Metric::Macro5pctThroughput => "macro_5pct_user_throughput_bps",
            Metric::Femto5pctThroughput => "femto_5pct_user_throughput_bps",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// `[sweep]` table of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<Axis>,
    values: Vec<f64>,
    le_series: Vec<f64>,
    schemes: Vec<Scheme>,
    metrics: Vec<Metric>,
}

impl Default for SweepTable {
    fn default() -> Self {
        SweepTable {
            axis: None,
            values: Vec::new(),
            le_series: Vec::new(),
            schemes: vec![Scheme::FixedCap, Scheme::OpenLoop, Scheme::ClosedLoop],
            metrics: Metric::ALL.to_vec(),
        }
    }
}

/// A scenario swept along one axis for a set of schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// `None` runs the base scenario as a single point.
    pub axis: Option<Axis>,
    pub values: Vec<f64>,
    /// Fixed external wall losses; each produces its own series.
    pub le_series: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub metrics: Vec<Metric>,
    pub base: ScenarioConfig,
}

/// One concrete scenario of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis: String,
    pub axis_value: f64,
    pub config: ScenarioConfig,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl SweepSpec {
    pub fn single(base: ScenarioConfig) -> Self {
        let t = SweepTable::default();
        SweepSpec {
            axis: None,
            values: t.values,
            le_series: t.le_series,
            schemes: t.schemes,
            metrics: t.metrics,
            base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.axis.is_some() && self.values.is_empty() {
            return Err(Error::config("sweep.values", "must not be empty"));
        }
        if !strictly_increasing(&self.values) {
            return Err(Error::config("sweep.values", "must be strictly increasing"));
        }
        if !strictly_increasing(&self.le_series) {
            return Err(Error::config(
                "sweep.le_series",
                "must be strictly increasing",
            ));
        }
        if self.axis == Some(Axis::M) && !self.le_series.is_empty() {
            return Err(Error::config(
                "sweep.le_series",
                "only applies to single-femto sweeps",
            ));
        }
        if self.axis == Some(Axis::M) && self.values.iter().any(|&m| m < 0.0 || m.fract() != 0.0) {
            return Err(Error::config(
                "sweep.values",
                "M must be a non-negative integer",
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("sweep.schemes", "must not be empty"));
        }
        if self.schemes.contains(&Scheme::NoFemto) {
            return Err(Error::config(
                "sweep.schemes",
                "no_femto is a reference run and is scheduled automatically",
            ));
        }
        if self.metrics.is_empty() {
            return Err(Error::config("sweep.metrics", "must not be empty"));
        }
        for p in self.points() {
            p.config.validate()?;
        }
        Ok(())
    }

    /// Scenarios in output order: Le series outermost, then axis values.
    pub fn points(&self) -> Vec<SweepPoint> {
        let series: Vec<Option<f64>> = if self.le_series.is_empty() {
            vec![None]
        } else {
            self.le_series.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for le in series {
            let mut base = self.base.clone();
            if let Some(le) = le {
                Axis::Le.apply(&mut base, le);
            }
            let axis_name = |a: Axis| match le {
                Some(le) => format!("{}/Le={}", a.label(), le),
                None => a.label().to_string(),
            };
            match self.axis {
                None => out.push(SweepPoint {
                    axis: "none".into(),
                    axis_value: 0.0,
                    config: base,
                }),
                Some(axis) => {
                    for &v in &self.values {
                        let mut config = base.clone();
                        axis.apply(&mut config, v);
                        out.push(SweepPoint {
                            axis: axis_name(axis),
                            axis_value: v,
                            config,
                        });
                    }
                }
            }
        }
        out
    }

    /// Emitted schemes plus the references the metrics need, in canonical order.
    pub fn required_schemes(&self) -> Vec<Scheme> {
        Scheme::ALL
            .into_iter()
            .filter(|s| {
                self.schemes.contains(s)
                    || (*s == Scheme::NoFemto && self.metrics.contains(&Metric::Drmt))
                    || (*s == Scheme::FixedCap && self.metrics.contains(&Metric::Arft))
            })
            .collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: PathBuf::from("<config>"),
            message,
        };
        let mut table: toml::Table = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        let sweep = match table.remove("sweep") {
            Some(v) => v
                .try_into::<SweepTable>()
                .map_err(|e| parse_err(format!("[sweep]: {e}")))?,
            None => SweepTable::default(),
        };
        let base: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
        let spec = SweepSpec {
            axis: sweep.axis,
            values: sweep.values,
            le_series: sweep.le_series,
            schemes: sweep.schemes,
            metrics: sweep.metrics,
            base,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        let mut table = toml::Table::try_from(&self.base).expect("serialisable config");
        let sweep = SweepTable {
            axis: self.axis,
            values: self.values.clone(),
            le_series: self.le_series.clone(),
            schemes: self.schemes.clone(),
            metrics: self.metrics.clone(),
        };
        table.insert(
            "sweep".into(),
            toml::Value::try_from(sweep).expect("serialisable sweep"),
        );
        toml::to_string(&table).expect("serialisable table")
    }
}

/// Named preset sweeps at desk scale (20 drops x 2000 data frames).
pub fn fig_preset(name: &str) -> Result<SweepSpec> {
    let single = ScenarioConfig {
        femto_layout: FemtoLayout::Single,
        wall_mode: WallMode::Fixed,
        internal_wall_db: 0.0,
        ..ScenarioConfig::default()
    };
    let multi = ScenarioConfig {
        femto_layout: FemtoLayout::Multi,
        wall_mode: WallMode::Sampled,
        ..ScenarioConfig::default()
    };
    let d_sweep = |schemes: Vec<Scheme>, metric: Metric| SweepSpec {
        axis: Some(Axis::D),
        values: vec![50.0, 100.0, 200.0, 400.0],
        le_series: vec![1.0, 10.0],
        schemes,
        metrics: vec![metric],
        base: single.clone(),
    };
    let m_sweep = |metrics: Vec<Metric>| SweepSpec {
        axis: Some(Axis::M),
        values: vec![10.0, 20.0, 30.0, 40.0, 50.0],
        le_series: vec![],
        schemes: vec![Scheme::FixedCap, Scheme::OpenLoop, Scheme::ClosedLoop],
        metrics,
        base: multi.clone(),
    };
    match name {
        "fig2" => Ok(d_sweep(
            vec![Scheme::FixedCap, Scheme::OpenLoop, Scheme::ClosedLoop],
            Metric::Drmt,
        )),
        "fig3" => Ok(d_sweep(
            vec![Scheme::OpenLoop, Scheme::ClosedLoop],
            Metric::Arft,
        )),
        "fig4" => Ok(m_sweep(vec![
            Metric::MacroAvgThroughput,
            Metric::FemtoAvgThroughput,
        ])),
        "fig5" => Ok(m_sweep(vec![
            Metric::Macro5pctThroughput,
            Metric::Femto5pctThroughput,
        ])),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Outcome of one scheme on one drop of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct DropRecord {
    pub point: usize,
    pub scheme: Scheme,
    pub drop: usize,
    pub seed: u64,
    pub macro_throughput_bps: f64,
    pub femto_throughput_bps: Option<f64>,
    pub macro_users_bps: Vec<f64>,
    pub femto_users_bps: Vec<f64>,
    pub audit: AuditStats,
}

impl DropRecord {
    fn new(point: usize, drop: usize, r: &DropResult) -> Self {
        DropRecord {
            point,
            scheme: r.scheme,
            drop,
            seed: r.seed,
            macro_throughput_bps: r.macro_cell_throughput_bps,
            femto_throughput_bps: r.femto_avg_throughput_bps(),
            macro_users_bps: r.measured_user_throughputs(UserClass::Macro).collect(),
            femto_users_bps: r.measured_user_throughputs(UserClass::Femto).collect(),
            audit: r.audit,
        }
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub axis: String,
    pub axis_value: f64,
    pub metric: Metric,
    pub estimate: Estimate,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub spec: SweepSpec,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    pub records: Vec<DropRecord>,
    pub rows: Vec<ResultRow>,
}

impl SweepOutcome {
    pub fn audit(&self) -> AuditStats {
        let mut a = AuditStats::default();
        for r in &self.records {
            a.merge(&r.audit);
        }
        a
    }

    pub fn row(&self, scheme: Scheme, point: usize, metric: Metric) -> Option<&ResultRow> {
        let p = &self.points[point];
        self.rows.iter().find(|r| {
            r.scheme == scheme
                && r.metric == metric
                && r.axis == p.axis
                && r.axis_value == p.axis_value
        })
    }

    /// Records of `scheme` at `point`, ordered by drop.
    pub fn records_of(&self, scheme: Scheme, point: usize) -> Vec<&DropRecord> {
        self.records
            .iter()
            .filter(|r| r.scheme == scheme && r.point == point)
            .collect()
    }
}

fn trace_path(base: &Path, point: usize, scheme: Scheme, drop: usize) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = format!("{stem}_p{point}_{}_d{drop}.csv", scheme.name());
    base.with_file_name(name)
}

/// Runs every (point, drop) of the sweep on a pool of `parallelism` workers.
/// Records come back in (point, drop, scheme) order whatever the schedule.
pub fn run_sweep(spec: &SweepSpec, seed: u64, parallelism: usize) -> Result<SweepOutcome> {
    spec.validate()?;
    let points = spec.points();
    let schemes = spec.required_schemes();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..points[p].config.drops).map(move |d| (p, d)))
        .collect();
    info!(
        "{} points x {} drops, schemes {:?}",
        points.len(),
        spec.base.drops,
        schemes
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::config("parallelism", e.to_string()))?;
    let per_job: Vec<Vec<DropRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, d)| {
                let cfg = &points[p].config;
                let s = drop_seed(seed, d as u64);
                let results = if let Some(trace) = &cfg.trace {
                    // one trace file per simulated scheme
                    schemes
                        .iter()
                        .map(|&sc| {
                            let c = ScenarioConfig {
                                trace: Some(trace_path(trace, p, sc, d)),
                                ..cfg.clone()
                            };
                            Ok(run_schemes(&c, s, &[sc])?.remove(0))
                        })
                        .collect::<Result<Vec<_>>>()?
                } else {
                    run_schemes(cfg, s, &schemes)?
                };
                info!("point {p} drop {d} done");
                Ok(results.iter().map(|r| DropRecord::new(p, d, r)).collect())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let records: Vec<DropRecord> = per_job.into_iter().flatten().collect();
    let rows = aggregate(spec, &points, &records, seed);
    Ok(SweepOutcome {
        spec: spec.clone(),
        seed,
        points,
        records,
        rows,
    })
}

fn nan_estimate(drops: usize) -> Estimate {
    Estimate {
        value: f64::NAN,
        ci_low: f64::NAN,
        ci_high: f64::NAN,
        drops,
    }
}

/// Computes the result rows from drop records.
pub fn aggregate(
    spec: &SweepSpec,
    points: &[SweepPoint],
    records: &[DropRecord],
    seed: u64,
) -> Vec<ResultRow> {
    let mut by_key: BTreeMap<(usize, Scheme), Vec<&DropRecord>> = BTreeMap::new();
    for r in records {
        by_key.entry((r.point, r.scheme)).or_default().push(r);
    }
    for v in by_key.values_mut() {
        v.sort_by_key(|r| r.drop);
    }
    let empty = Vec::new();
    let mut rows = Vec::new();
    for (pi, point) in points.iter().enumerate() {
        let base_macro = by_key.get(&(pi, Scheme::NoFemto)).unwrap_or(&empty);
        let base_femto = by_key.get(&(pi, Scheme::FixedCap)).unwrap_or(&empty);
        for &scheme in &spec.schemes {
            let recs = by_key.get(&(pi, scheme)).unwrap_or(&empty);
            let n = recs.len();
            for &metric in &spec.metrics {
                let est = match metric {
                    Metric::Drmt => {
                        let (b, x): (Vec<f64>, Vec<f64>) =
                            pair(base_macro, recs, |r| Some(r.macro_throughput_bps));
                        drmt_estimate(&b, &x).ok()
                    }
                    Metric::Arft => {
                        let (b, x) = pair(base_femto, recs, |r| r.femto_throughput_bps);
                        arft_estimate(&x, &b).ok()
                    }
                    Metric::MacroAvgThroughput => mean_ci(
                        &recs
                            .iter()
                            .map(|r| r.macro_throughput_bps)
                            .collect::<Vec<_>>(),
                    ),
                    Metric::FemtoAvgThroughput => mean_ci(
                        &recs
                            .iter()
                            .filter_map(|r| r.femto_throughput_bps)
                            .collect::<Vec<_>>(),
                    ),
                    Metric::Macro5pctThroughput => {
                        let groups: Vec<Vec<f64>> =
                            recs.iter().map(|r| r.macro_users_bps.clone()).collect();
                        percentile_estimate(&groups, 0.05, seed ^ pi as u64)
                    }
                    Metric::Femto5pctThroughput => {
                        let groups: Vec<Vec<f64>> =
                            recs.iter().map(|r| r.femto_users_bps.clone()).collect();
                        percentile_estimate(&groups, 0.05, seed ^ pi as u64)
                    }
                };
                rows.push(ResultRow {
                    scheme,
                    axis: point.axis.clone(),
                    axis_value: point.axis_value,
                    metric,
                    estimate: est.unwrap_or_else(|| nan_estimate(n)),
                    seed,
                });
            }
        }
    }
    rows
}

/// Values of drops present in both `a` and `b` (matched by drop index).
fn pair(
    a: &[&DropRecord],
    b: &[&DropRecord],
    f: impl Fn(&DropRecord) -> Option<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let mut out = (Vec::new(), Vec::new());
    for ra in a {
        if let Some(rb) = b.iter().find(|r| r.drop == ra.drop) {
            if let (Some(x), Some(y)) = (f(ra), f(rb)) {
                out.0.push(x);
                out.1.push(y);
            }
        }
    }
    out
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.name().to_string(),
            r.axis.clone(),
            r.axis_value.to_string(),
            r.metric.name().to_string(),
            r.estimate.value.to_string(),
            r.estimate.ci_low.to_string(),
            r.estimate.ci_high.to_string(),
            r.estimate.drops.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

const DROPS_HEADER: [&str; 16] = [
    "point",
    "axis",
    "axis_value",
    "scheme",
    "drop",
    "seed",
    "macro_cell_throughput_bps",
    "femto_avg_throughput_bps",
    "open_loop_violations",
    "power_violations",
    "ordering_violations",
    "max_beta_identity_error",
    "open_loop_checks",
    "power_checks",
    "ordering_checks",
    "beta_checks",
];

fn write_drops_csv(path: &Path, points: &[SweepPoint], records: &[DropRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DROPS_HEADER)?;
    for r in records {
        let p = &points[r.point];
        w.write_record([
            r.point.to_string(),
            p.axis.clone(),
            p.axis_value.to_string(),
            r.scheme.name().to_string(),
            r.drop.to_string(),
            r.seed.to_string(),
            r.macro_throughput_bps.to_string(),
            r.femto_throughput_bps
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.audit.open_loop_violations.to_string(),
            r.audit.power_violations.to_string(),
            r.audit.ordering_violations.to_string(),
            r.audit.max_beta_identity_error.to_string(),
            r.audit.open_loop_checks.to_string(),
            r.audit.power_checks.to_string(),
            r.audit.ordering_checks.to_string(),
            r.audit.beta_checks.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_users_csv(path: &Path, records: &[DropRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["point", "scheme", "drop", "class", "throughput_bps"])?;
    for r in records {
        let classes = [("macro", &r.macro_users_bps), ("femto", &r.femto_users_bps)];
        for (class, users) in classes {
            for u in users {
                w.write_record([
                    r.point.to_string(),
                    r.scheme.name().to_string(),
                    r.drop.to_string(),
                    class.to_string(),
                    u.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Plain-text table of the result rows.
pub fn summary_text(outcome: &SweepOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "seed {}  drops {}  data frames {}",
        outcome.seed, outcome.spec.base.drops, outcome.spec.base.data_frames
    );
    let _ = writeln!(
        s,
        "points {}  schemes {}",
        outcome.points.len(),
        outcome
            .spec
            .schemes
            .iter()
            .map(|s| s.name())
            .collect::<Vec<_>>()
            .join(",")
    );
    for metric in &outcome.spec.metrics {
        let _ = writeln!(s, "\n{}", metric.name());
        let _ = writeln!(
            s,
            "{:<12} {:>10} {:<12} {:>14} {:>14} {:>14}",
            "axis", "value", "scheme", "estimate", "ci_low", "ci_high"
        );
        for r in outcome.rows.iter().filter(|r| r.metric == *metric) {
            let _ = writeln!(
                s,
                "{:<12} {:>10} {:<12} {:>14.6} {:>14.6} {:>14.6}",
                r.axis,
                r.axis_value,
                r.scheme.name(),
                r.estimate.value,
                r.estimate.ci_low,
                r.estimate.ci_high
            );
        }
    }
    let a = outcome.audit();
    let _ = writeln!(
        s,
        "\naudit: open-loop violations {} / {}, power violations {} / {}, ordering violations {} / {}, max beta identity error {:e}",
        a.open_loop_violations, a.open_loop_checks, a.power_violations, a.power_checks,
        a.ordering_violations, a.ordering_checks, a.max_beta_identity_error
    );
    s
}

/// Writes `results.csv`, `drops.csv`, `users.csv`, `summary.txt` and `resolved.toml`.
pub fn write_outputs(out_dir: &Path, outcome: &SweepOutcome) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_results_csv(&out_dir.join("results.csv"), &outcome.rows)?;
    write_drops_csv(
        &out_dir.join("drops.csv"),
        &outcome.points,
        &outcome.records,
    )?;
    write_users_csv(&out_dir.join("users.csv"), &outcome.records)?;
    let summary = out_dir.join("summary.txt");
    fs::write(&summary, summary_text(outcome)).map_err(|e| Error::io(&summary, e))?;
    let resolved = out_dir.join("resolved.toml");
    let mut spec = outcome.spec.clone();
    spec.base.seed = outcome.seed;
    fs::write(&resolved, spec.to_toml_string()).map_err(|e| Error::io(&resolved, e))?;
    Ok(())
}

/// Runs the scenario file at `config` and writes outputs to `out_dir`.
pub fn run(
    config: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    parallelism: usize,
) -> Result<SweepOutcome> {
    let spec = SweepSpec::from_file(config)?;
    run_spec(&spec, out_dir, seed, parallelism)
}

pub fn run_spec(
    spec: &SweepSpec,
    out_dir: &Path,
    seed: Option<u64>,
    parallelism: usize,
) -> Result<SweepOutcome> {
    let seed = seed.unwrap_or(spec.base.seed);
    let outcome = run_sweep(spec, seed, parallelism)?;
    write_outputs(out_dir, &outcome)?;
    Ok(outcome)
}

fn read_csv(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.records().collect::<std::result::Result<Vec<_>, _>>()?)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            message: format!("bad value in column {i}: {:?}", rec.get(i)),
        })
}

/// Re-aggregates a previous run directory and rewrites `results.csv` and
/// `summary.txt` from its drop and user records.
pub fn report(in_dir: &Path) -> Result<SweepOutcome> {
    let spec = SweepSpec::from_file(&in_dir.join("resolved.toml"))?;
    let seed = spec.base.seed;
    let points = spec.points();
    let drops_path = in_dir.join("drops.csv");
    let mut records = Vec::new();
    for rec in read_csv(&drops_path)? {
        let scheme_name: String = field(&rec, 3, &drops_path)?;
        let scheme = Scheme::parse(&scheme_name).ok_or_else(|| Error::Parse {
            path: drops_path.clone(),
            message: format!("unknown scheme {scheme_name}"),
        })?;
        let femto = rec
            .get(7)
            .filter(|s| !s.is_empty())
            .map(|_| field(&rec, 7, &drops_path))
            .transpose()?;
        records.push(DropRecord {
            point: field(&rec, 0, &drops_path)?,
            scheme,
            drop: field(&rec, 4, &drops_path)?,
            seed: field(&rec, 5, &drops_path)?,
            macro_throughput_bps: field(&rec, 6, &drops_path)?,
            femto_throughput_bps: femto,
            macro_users_bps: Vec::new(),
            femto_users_bps: Vec::new(),
            audit: AuditStats {
                open_loop_violations: field(&rec, 8, &drops_path)?,
                power_violations: field(&rec, 9, &drops_path)?,
                ordering_violations: field(&rec, 10, &drops_path)?,
                max_beta_identity_error: field(&rec, 11, &drops_path)?,
                open_loop_checks: field(&rec, 12, &drops_path)?,
                power_checks: field(&rec, 13, &drops_path)?,
                ordering_checks: field(&rec, 14, &drops_path)?,
                beta_checks: field(&rec, 15, &drops_path)?,
                ..AuditStats::default()
            },
        });
    }
    let users_path = in_dir.join("users.csv");
    for rec in read_csv(&users_path)? {
        let point: usize = field(&rec, 0, &users_path)?;
        let scheme_name: String = field(&rec, 1, &users_path)?;
        let drop: usize = field(&rec, 2, &users_path)?;
        let class: String = field(&rec, 3, &users_path)?;
        let v: f64 = field(&rec, 4, &users_path)?;
        let target = records
            .iter_mut()
            .find(|r| r.point == point && r.drop == drop && r.scheme.name() == scheme_name)
            .ok_or_else(|| Error::Parse {
                path: users_path.clone(),
                message: format!("user row without drop record: point {point} drop {drop}"),
            })?;
        match class.as_str() {
            "macro" => target.macro_users_bps.push(v),
            _ => target.femto_users_bps.push(v),
        }
    }
    let rows = aggregate(&spec, &points, &records, seed);
    let outcome = SweepOutcome {
        spec,
        seed,
        points,
        records,
        rows,
    };
    write_results_csv(&in_dir.join("results.csv"), &outcome.rows)?;
    let summary = in_dir.join("summary.txt");
    fs::write(&summary, summary_text(&outcome)).map_err(|e| Error::io(&summary, e))?;
    Ok(outcome)
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Parser)]
#[command(
    name = "femtopc",
    version,
    about = "Two-tier femtocell uplink power-control simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario or sweep described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
        out: PathBuf,
        /// Master seed (overrides the config's `seed`).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = default_parallelism())]
        parallelism: usize,
    },
    /// Run one of the preset sweeps (fig2, fig3, fig4, fig5).
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = default_parallelism())]
        parallelism: usize,
        /// Override the number of drops per point.
        #[arg(long)]
        drops: Option<usize>,
        /// Override the number of data frames per drop.
        #[arg(long)]
        data_frames: Option<usize>,
        /// Only write the resolved config, do not simulate.
        #[arg(long)]
        dry_run: bool,
    },
    /// Re-aggregate the drop records of a previous run.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            parallelism,
        } => {
            let outcome = run(&config, &out, seed, parallelism)?;
            print!("{}", summary_text(&outcome));
            println!("wrote {}", out.display());
        }
        Command::Preset {
            name,
            out,
            seed,
            parallelism,
            drops,
            data_frames,
            dry_run,
        } => {
            let mut spec = fig_preset(&name)?;
            if let Some(d) = drops {
                spec.base.drops = d;
            }
            if let Some(f) = data_frames {
                spec.base.data_frames = f;
            }
            if let Some(s) = seed {
                spec.base.seed = s;
            }
            spec.validate()?;
            if dry_run {
                fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
                let path = out.join("resolved.toml");
                fs::write(&path, spec.to_toml_string()).map_err(|e| Error::io(&path, e))?;
                println!("wrote {}", path.display());
                return Ok(());
            }
            let outcome = run_spec(&spec, &out, None, parallelism)?;
            print!("{}", summary_text(&outcome));
            println!("wrote {}", out.display());
        }
        Command::Report { input } => {
            let outcome = report(&input)?;
            print!("{}", summary_text(&outcome));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_expected_sweeps() {
        let f2 = fig_preset("fig2").unwrap();
        assert_eq!(
            f2.schemes,
            vec![Scheme::FixedCap, Scheme::OpenLoop, Scheme::ClosedLoop]
        );
        assert_eq!(f2.metrics, vec![Metric::Drmt]);
        assert_eq!(f2.points().len(), 8);
        assert_eq!(f2.points()[4].axis, "D/Le=10");
        assert!(f2
            .points()
            .iter()
            .all(|p| p.config.internal_wall_db == 0.0 && p.config.wall_mode == WallMode::Fixed));

        let f3 = fig_preset("fig3").unwrap();
        assert_eq!(f3.schemes, vec![Scheme::OpenLoop, Scheme::ClosedLoop]);
        assert_eq!(f3.metrics, vec![Metric::Arft]);
        assert_eq!(
            f3.required_schemes(),
            vec![Scheme::FixedCap, Scheme::OpenLoop, Scheme::ClosedLoop]
        );

        let f5 = fig_preset("fig5").unwrap();
        assert!(f5.metrics.contains(&Metric::Femto5pctThroughput));
        assert_eq!(f5.points().len(), 5);
        assert!(f5
            .points()
            .iter()
            .all(|p| p.config.femto_layout == FemtoLayout::Multi));
        assert!(matches!(fig_preset("fig9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn presets_are_desk_scale() {
        for n in ["fig2", "fig3", "fig4", "fig5"] {
            let s = fig_preset(n).unwrap();
            assert_eq!((s.base.drops, s.base.data_frames), (20, 2000));
        }
    }

    #[test]
    fn drmt_schedules_reference_run() {
        let s = fig_preset("fig2").unwrap();
        assert_eq!(s.required_schemes()[0], Scheme::NoFemto);
    }

    #[test]
    fn spec_round_trips_through_toml() {
        for n in ["fig2", "fig4"] {
            let s = fig_preset(n).unwrap();
            assert_eq!(SweepSpec::from_toml_str(&s.to_toml_string()).unwrap(), s);
        }
    }

    #[test]
    fn sweep_values_must_increase() {
        let text = "[sweep]\naxis = \"d\"\nvalues = [100, 50]\n";
        let err = SweepSpec::from_toml_str(text).unwrap_err().to_string();
        assert!(err.contains("sweep.values"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SweepSpec::from_toml_str("dorps = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("dorps"), "{err}");
        let err = SweepSpec::from_toml_str("[sweep]\naxes = \"d\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("axes"), "{err}");
    }

    #[test]
    fn no_femto_cannot_be_emitted() {
        let err = SweepSpec::from_toml_str("[sweep]\nschemes = [\"no_femto\"]\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("sweep.schemes"), "{err}");
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(Metric::parse(m.name()), Some(m));
        }
    }

    #[test]
    fn m_axis_rows_are_cross_product() {
        let spec = SweepSpec {
            base: ScenarioConfig {
                drops: 1,
                warmup_frames: 10,
                warmup_average_frames: 5,
                data_frames: 5,
                ..ScenarioConfig::default()
            },
            ..fig_preset("fig4").unwrap()
        };
        let out = run_sweep(&spec, 3, 1).unwrap();
        let per_metric = out
            .rows
            .iter()
            .filter(|r| r.metric == Metric::MacroAvgThroughput)
            .count();
        assert_eq!(per_metric, 15);
    }
}
