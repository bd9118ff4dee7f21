//! Run configuration, error-versus-run-time sweeps and their CSV/JSON output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::apt::{analyze, bc_expansion, AptOptions, Expansion};
use crate::error::{Error, Result};
use crate::family::{parse_matrix_pair, InterpolatedFamily};
use crate::grover::{grover_family, jansen_bound, roland_time, schedule_from_constant_fisher, GroverMode};
use crate::linalg::CMat;
use crate::par::{self, Execution};
use crate::schedule::{Schedule, ScheduleKind};
use crate::sim::{propagate, Integrator, SimOptions};

pub const CSV_VERSION_LINE: &str = "# adia-tradeoff csv v1";
pub const CSV_HEADER: &str = "N,schedule,p,C,T,eps_numeric,eps_leading,eps_upper,eps_lower,T_val,eps_tilde,jansen,roland_T,flags";

const MAX_TOL: f64 = 1e-2;
const MAX_FULL_N: usize = 128;
const MAX_BETA_ORDER: u32 = 6;
/// Run times per curve when no times are configured, spanning `[T_val, 8 T_val]`.
const DEFAULT_T_COUNT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    #[default]
    GroverReduced,
    GroverFull,
    CustomMatrixFile,
}

impl Model {
    fn is_grover(self) -> bool {
        !matches!(self, Model::CustomMatrixFile)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::GroverReduced => "grover-reduced",
            Model::GroverFull => "grover-full",
            Model::CustomMatrixFile => "custom-matrix-file",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grover-reduced" => Ok(Model::GroverReduced),
            "grover-full" => Ok(Model::GroverFull),
            "custom-matrix-file" => Ok(Model::CustomMatrixFile),
            other => Err(Error::config("model", format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SeriesConfig {
    pub schedule: ScheduleKind,
    pub p: Option<u32>,
    pub c: Option<f64>,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<usize>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(n) => vec![n],
        OneOrMany::Many(v) => v,
    }))
}

/// Sweep configuration as read from a TOML file or command-line flags.
/// Every field is optional so that a file and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<Model>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub n: Option<Vec<usize>>,
    pub marked: Option<usize>,
    pub matrix_file: Option<PathBuf>,
    pub schedule: Option<ScheduleKind>,
    pub p: Option<u32>,
    pub c: Option<f64>,
    pub t_list: Option<Vec<f64>>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_count: Option<usize>,
    pub quad_tol: Option<f64>,
    pub integrator_tol: Option<f64>,
    pub integrator: Option<Integrator>,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let field = message
                .split('`')
                .nth(1)
                .filter(|_| message.starts_with("unknown field"))
                .map_or_else(|| "config".to_string(), str::to_string);
            Error::config(field, message)
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        // Relative matrix paths are taken relative to the config file.
        if let (Some(file), Some(dir)) = (&config.matrix_file, path.parent()) {
            if file.is_relative() {
                config.matrix_file = Some(dir.join(file));
            }
        }
        Ok(config)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(self, other: RunConfig) -> RunConfig {
        RunConfig {
            model: other.model.or(self.model),
            n: other.n.or(self.n),
            marked: other.marked.or(self.marked),
            matrix_file: other.matrix_file.or(self.matrix_file),
            schedule: other.schedule.or(self.schedule),
            p: other.p.or(self.p),
            c: other.c.or(self.c),
            t_list: other.t_list.or(self.t_list),
            t_min: other.t_min.or(self.t_min),
            t_max: other.t_max.or(self.t_max),
            t_count: other.t_count.or(self.t_count),
            quad_tol: other.quad_tol.or(self.quad_tol),
            integrator_tol: other.integrator_tol.or(self.integrator_tol),
            integrator: other.integrator.or(self.integrator),
            csv: other.csv.or(self.csv),
            json: other.json.or(self.json),
            seed: other.seed.or(self.seed),
            jobs: other.jobs.or(self.jobs),
            series: if other.series.is_empty() { self.series } else { other.series },
        }
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let model = self.model.unwrap_or_default();
        let check_tol = |field: &str, v: Option<f64>, default: f64| -> Result<f64> {
            let v = v.unwrap_or(default);
            if v > 0.0 && v <= MAX_TOL {
                Ok(v)
            } else {
                Err(Error::config(field, format!("tolerance must lie in (0, {MAX_TOL:e}], got {v:e}")))
            }
        };
        let quad_tol = check_tol("quad-tol", self.quad_tol, 1e-10)?;
        let integrator_tol = check_tol("integrator-tol", self.integrator_tol, 1e-10)?;

        let (ns, matrices) = match model {
            Model::CustomMatrixFile => {
                if self.n.is_some() {
                    return Err(Error::config("n", "the dimension of a custom model comes from its matrix file"));
                }
                let path = self.matrix_file.as_ref().ok_or_else(|| Error::config("matrix-file", "required for model custom-matrix-file"))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::config("matrix-file", format!("cannot read {}: {e}", path.display())))?;
                let pair = parse_matrix_pair(&text)?;
                (vec![pair.0.nrows()], Some(pair))
            }
            _ => {
                if self.matrix_file.is_some() {
                    return Err(Error::config("matrix-file", format!("not used by model {model}")));
                }
                let ns = self.n.clone().unwrap_or_else(|| vec![32]);
                if ns.is_empty() {
                    return Err(Error::config("n", "at least one value is required"));
                }
                if let Some(&bad) = ns.iter().find(|&&n| n < 2) {
                    return Err(Error::config("n", format!("N must be at least 2, got {bad}")));
                }
                if model == Model::GroverFull {
                    if let Some(&bad) = ns.iter().find(|&&n| n > MAX_FULL_N) {
                        return Err(Error::config("n", format!("full model is limited to N <= {MAX_FULL_N}, got {bad}")));
                    }
                }
                (ns, None)
            }
        };
        let marked = match (model, self.marked) {
            (Model::GroverFull, m) => {
                let m = m.unwrap_or(0);
                if let Some(&n) = ns.iter().find(|&&n| m >= n) {
                    return Err(Error::config("marked", format!("marked index {m} is out of range for N = {n}")));
                }
                m
            }
            (_, Some(_)) => return Err(Error::config("marked", format!("only applies to model grover-full, not {model}"))),
            (_, None) => 0,
        };

        let raw_series = if self.series.is_empty() {
            vec![SeriesConfig { schedule: self.schedule.unwrap_or(ScheduleKind::Optimal), p: self.p, c: self.c }]
        } else {
            if self.schedule.is_some() || self.p.is_some() || self.c.is_some() {
                return Err(Error::config("series", "cannot be combined with top-level schedule, p or c"));
            }
            self.series.clone()
        };
        let series = raw_series.iter().map(|s| resolve_series(s, model)).collect::<Result<Vec<_>>>()?;

        let times = match (&self.t_list, self.t_min, self.t_max) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::config("t-list", "give either t-list or t-min/t-max, not both"));
            }
            (Some(list), None, None) => {
                if list.is_empty() {
                    return Err(Error::config("t-list", "at least one run time is required"));
                }
                if let Some(bad) = list.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
                    return Err(Error::config("t-list", format!("run times must be positive, got {bad}")));
                }
                TimeSpec::List(list.clone())
            }
            (None, Some(min), Some(max)) => {
                if !(min > 0.0 && min.is_finite()) {
                    return Err(Error::config("t-min", format!("must be positive, got {min}")));
                }
                if !(max >= min && max.is_finite()) {
                    return Err(Error::config("t-max", format!("must be at least t-min = {min}, got {max}")));
                }
                let count = self.t_count.unwrap_or(DEFAULT_T_COUNT);
                if count == 0 || (count == 1 && max > min) {
                    return Err(Error::config("t-count", format!("need at least 2 points for a range, got {count}")));
                }
                TimeSpec::Range { min, max, count }
            }
            (None, Some(_), None) => return Err(Error::config("t-max", "required together with t-min")),
            (None, None, Some(_)) => return Err(Error::config("t-min", "required together with t-max")),
            (None, None, None) => {
                let count = self.t_count.unwrap_or(DEFAULT_T_COUNT);
                if count < 2 {
                    return Err(Error::config("t-count", format!("need at least 2 points, got {count}")));
                }
                TimeSpec::Validity { count }
            }
        };
        if self.jobs == Some(0) {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        Ok(ResolvedConfig {
            model,
            ns,
            marked,
            matrices,
            series,
            times,
            quad_tol,
            integrator_tol,
            integrator: self.integrator.unwrap_or_default(),
            seed: self.seed.unwrap_or(0),
            exec: Execution::from_jobs(self.jobs),
        })
    }
}

fn resolve_series(s: &SeriesConfig, model: Model) -> Result<Series> {
    if !model.is_grover() && matches!(s.schedule, ScheduleKind::Optimal | ScheduleKind::Custom) {
        return Err(Error::config("schedule", format!("`{}` is specific to the Grover models", s.schedule)));
    }
    let p = match (s.schedule, s.p) {
        (ScheduleKind::Beta, p) => p.unwrap_or(1),
        (_, None | Some(0)) => 0,
        (kind, Some(p)) => return Err(Error::config("p", format!("order {p} only applies to beta schedules, not {kind}"))),
    };
    if p > MAX_BETA_ORDER {
        return Err(Error::config("p", format!("beta order must be at most {MAX_BETA_ORDER}, got {p}")));
    }
    let c = s.c.unwrap_or_else(|| default_c(s.schedule, p));
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("c", format!("must be positive, got {c}")));
    }
    Ok(Series { kind: s.schedule, p, c })
}

/// Default validity constant per schedule.
pub fn default_c(kind: ScheduleKind, p: u32) -> f64 {
    match (kind, p) {
        (ScheduleKind::Optimal | ScheduleKind::Custom, _) => 9.5,
        (ScheduleKind::Beta, 2..) => 70.0,
        _ => 50.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeSpec {
    List(Vec<f64>),
    /// Log-spaced, endpoints included.
    Range { min: f64, max: f64, count: usize },
    /// Log-spaced over `[T_val, 8 T_val]` of each curve.
    Validity { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Series {
    pub kind: ScheduleKind,
    pub p: u32,
    pub c: f64,
}

#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub model: Model,
    pub ns: Vec<usize>,
    pub marked: usize,
    matrices: Option<(CMat, CMat)>,
    pub series: Vec<Series>,
    pub times: TimeSpec,
    pub quad_tol: f64,
    pub integrator_tol: f64,
    pub integrator: Integrator,
    pub seed: u64,
    pub exec: Execution,
}

pub fn log_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    let (a, b) = (min.ln(), max.ln());
    (0..count)
        .map(|k| match k {
            0 => min,
            k if k + 1 == count => max,
            k => (a + (b - a) * k as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub schedule: ScheduleKind,
    pub p: u32,
    pub c: f64,
    pub t: f64,
    pub eps_numeric: f64,
    pub eps_leading: f64,
    pub eps_upper: f64,
    pub eps_lower: f64,
    pub t_val: f64,
    pub eps_tilde: f64,
    pub jansen: Option<f64>,
    pub roland_t: Option<f64>,
    pub flags: Vec<&'static str>,
}

impl SweepRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:?}"));
        format!(
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{}",
            self.n,
            self.schedule,
            self.p,
            self.c,
            self.t,
            self.eps_numeric,
            self.eps_leading,
            self.eps_upper,
            self.eps_lower,
            self.t_val,
            self.eps_tilde,
            opt(self.jansen),
            opt(self.roland_t),
            self.flags.join(";")
        )
    }
}

pub fn write_csv<W: Write>(records: &[SweepRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_VERSION_LINE}")?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub schedule: ScheduleKind,
    pub p: u32,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "T_val")]
    pub t_val: f64,
    pub eps_tilde: f64,
    pub points: usize,
    /// Log-log slope of the numeric error against `T`.
    pub slope_numeric: Option<f64>,
    /// Log-log slope of the oscillation-free upper bound against `T`.
    pub slope_upper: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingSummary {
    pub schedule: ScheduleKind,
    pub p: u32,
    #[serde(rename = "C")]
    pub c: f64,
    /// Log-log slope of `T_val` against `N`.
    pub t_val_exponent: f64,
    /// Log-log slope of the validity error against `N`.
    pub eps_tilde_exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub format: &'static str,
    pub model: String,
    pub seed: u64,
    pub records: usize,
    pub curves: Vec<CurveSummary>,
    pub scaling: Vec<ScalingSummary>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
}

struct Curve {
    n: usize,
    series: Series,
    family: InterpolatedFamily,
    expansion: Expansion,
    t_val: f64,
    eps_tilde: f64,
    times: Vec<f64>,
}

/// Family for one `(N, series)` pair of a resolved config.
pub fn family_for(config: &ResolvedConfig, n: usize, series: Series) -> Result<InterpolatedFamily> {
    let schedule = match series.kind {
        ScheduleKind::Linear => Schedule::linear(),
        ScheduleKind::Beta => Schedule::beta(series.p),
        ScheduleKind::Optimal => Schedule::optimal(n)?,
        ScheduleKind::Custom => schedule_from_constant_fisher(n, 1e-10)?,
    };
    let family = match (config.model, &config.matrices) {
        (Model::GroverReduced, _) => grover_family(n, schedule, GroverMode::Reduced2)?,
        (Model::GroverFull, _) => grover_family(n, schedule, GroverMode::Full { marked: config.marked })?,
        (Model::CustomMatrixFile, Some((hi, hf))) => InterpolatedFamily::new(hi.clone(), hf.clone(), schedule)?,
        (Model::CustomMatrixFile, None) => unreachable!("resolve() loads the matrix file"),
    };
    Ok(family)
}

fn build_curve(config: &ResolvedConfig, n: usize, series: Series) -> Result<Curve> {
    let family = family_for(config, n, series)?;
    let opts = AptOptions { quad_tol: config.quad_tol };
    let expansion = if series.p == 0 { analyze(&family, 1.0, opts)? } else { bc_expansion(&family, series.p, opts)? };
    let tradeoff = expansion.tradeoff(series.c)?;
    let times = match &config.times {
        TimeSpec::List(list) => list.clone(),
        TimeSpec::Range { min, max, count } => log_spaced(*min, *max, *count),
        TimeSpec::Validity { count } => log_spaced(tradeoff.t_val, 8.0 * tradeoff.t_val, *count),
    };
    Ok(Curve { n, series, family, expansion, t_val: tradeoff.t_val, eps_tilde: tradeoff.eps_tilde, times })
}

fn record(config: &ResolvedConfig, curve: &Curve, t: f64) -> Result<SweepRecord> {
    let sim = SimOptions { tol: config.integrator_tol, integrator: config.integrator, ..SimOptions::default() };
    let eps_numeric = propagate(&curve.family, t, sim)?.final_distance();
    let eps_leading = curve.expansion.leading(t);
    let (eps_lower, eps_upper) = curve.expansion.bounds(t);
    let mut flags = Vec::new();
    if eps_leading < 0.1 * eps_upper {
        flags.push("resonance-near");
    }
    if t < curve.t_val {
        flags.push("below-validity");
    }
    let grover = config.model.is_grover();
    Ok(SweepRecord {
        n: curve.n,
        schedule: curve.series.kind,
        p: curve.series.p,
        c: curve.series.c,
        t,
        eps_numeric,
        eps_leading,
        eps_upper,
        eps_lower,
        t_val: curve.t_val,
        eps_tilde: curve.eps_tilde,
        jansen: grover.then(|| jansen_bound(curve.n, t)),
        roland_t: grover.then(|| roland_time(curve.n, eps_upper)),
        flags,
    })
}

fn curve_label(n: usize, s: &Series) -> String {
    format!("N={n} schedule={} p={} C={}", s.kind, s.p, s.c)
}

pub fn run_sweep(config: &ResolvedConfig) -> Result<SweepOutput> {
    let keys: Vec<(usize, Series)> = config.ns.iter().flat_map(|&n| config.series.iter().map(move |s| (n, *s))).collect();
    let curves = par::map(config.exec, &keys, |&(n, s)| build_curve(config, n, s).map_err(|e| e.context(curve_label(n, &s))))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize, f64)> =
        curves.iter().enumerate().flat_map(|(k, c)| c.times.iter().map(move |&t| (k, c.series_index(config), t))).collect();
    let mut records = par::map(config.exec, &tasks, |&(k, _, t)| {
        let curve = &curves[k];
        record(config, curve, t).map_err(|e| e.context(format!("{} T={t}", curve_label(curve.n, &curve.series))))
    })
    .into_iter()
    .zip(&tasks)
    .map(|(r, &(_, si, _))| r.map(|r| (si, r)))
    .collect::<Result<Vec<_>>>()?;
    records.sort_by(|(sa, a), (sb, b)| a.n.cmp(&b.n).then(a.t.total_cmp(&b.t)).then(sa.cmp(sb)));
    let records: Vec<SweepRecord> = records.into_iter().map(|(_, r)| r).collect();

    let curve_summaries = curves
        .iter()
        .map(|c| {
            let rows: Vec<&SweepRecord> =
                records.iter().filter(|r| r.n == c.n && r.schedule == c.series.kind && r.p == c.series.p && r.c == c.series.c).collect();
            let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
            let fit = |y: Vec<f64>| (ts.len() >= 2 && ts[0] != ts[ts.len() - 1]).then(|| loglog_slope(&ts, &y));
            CurveSummary {
                n: c.n,
                schedule: c.series.kind,
                p: c.series.p,
                c: c.series.c,
                t_val: c.t_val,
                eps_tilde: c.eps_tilde,
                points: rows.len(),
                slope_numeric: fit(rows.iter().map(|r| r.eps_numeric).collect()),
                slope_upper: fit(rows.iter().map(|r| r.eps_upper).collect()),
            }
        })
        .collect::<Vec<_>>();
    let scaling = if config.ns.len() >= 2 {
        config
            .series
            .iter()
            .map(|s| {
                let mine: Vec<&Curve> = curves.iter().filter(|c| c.series == *s).collect();
                let ns: Vec<f64> = mine.iter().map(|c| c.n as f64).collect();
                ScalingSummary {
                    schedule: s.kind,
                    p: s.p,
                    c: s.c,
                    t_val_exponent: loglog_slope(&ns, &mine.iter().map(|c| c.t_val).collect::<Vec<_>>()),
                    eps_tilde_exponent: loglog_slope(&ns, &mine.iter().map(|c| c.eps_tilde).collect::<Vec<_>>()),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    let summary = SweepSummary {
        format: "adia-tradeoff summary v1",
        model: config.model.to_string(),
        seed: config.seed,
        records: records.len(),
        curves: curve_summaries,
        scaling,
    };
    Ok(SweepOutput { records, summary })
}

impl Curve {
    fn series_index(&self, config: &ResolvedConfig) -> usize {
        config.series.iter().position(|s| *s == self.series).unwrap_or(0)
    }
}

impl SweepOutput {
    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        write_csv(&self.records, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<ResolvedConfig> {
        RunConfig::from_toml_str(text)?.resolve()
    }

    #[test]
    fn defaults_resolve() {
        let c = cfg("").unwrap();
        assert_eq!(c.model, Model::GroverReduced);
        assert_eq!(c.ns, vec![32]);
        assert_eq!(c.series, vec![Series { kind: ScheduleKind::Optimal, p: 0, c: 9.5 }]);
        assert_eq!(c.times, TimeSpec::Validity { count: 20 });
        assert_eq!(default_c(ScheduleKind::Beta, 1), 50.0);
        assert_eq!(default_c(ScheduleKind::Beta, 2), 70.0);
        assert_eq!(default_c(ScheduleKind::Linear, 0), 50.0);
    }

    #[test]
    fn config_errors_name_fields() {
        for (text, field) in [
            ("n = 1", "n"),
            ("n = [4, 1]", "n"),
            ("quad-tol = 1e30", "quad-tol"),
            ("integrator-tol = 0.0", "integrator-tol"),
            ("t-list = [10.0, -1.0]", "t-list"),
            ("t-min = 5.0", "t-max"),
            ("t-min = 5.0\nt-max = 2.0", "t-max"),
            ("bogus = 3", "bogus"),
            ("schedule = \"linear\"\np = 2", "p"),
            ("c = -1.0", "c"),
            ("model = \"grover-full\"\nn = 8\nmarked = 8", "marked"),
            ("model = \"custom-matrix-file\"", "matrix-file"),
            ("jobs = 0", "jobs"),
            ("schedule = \"optimal\"\n[[series]]\nschedule = \"linear\"", "series"),
        ] {
            match cfg(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn merge_prefers_overrides() {
        let file = RunConfig::from_toml_str("n = [8, 16]\nc = 3.0\nschedule = \"linear\"").unwrap();
        let flags = RunConfig { c: Some(4.0), ..Default::default() };
        let merged = file.merge(flags);
        assert_eq!(merged.c, Some(4.0));
        assert_eq!(merged.n, Some(vec![8, 16]));
        assert_eq!(merged.schedule, Some(ScheduleKind::Linear));
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let v = log_spaced(20.0, 400.0, 5);
        assert_eq!(v[0], 20.0);
        assert_eq!(v[4], 400.0);
        assert!((v[2] - (20.0f64 * 400.0).sqrt()).abs() < 1e-9);
        assert!((loglog_slope(&v, &v.iter().map(|t| 3.0 / (t * t)).collect::<Vec<_>>()) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_sweep_is_sorted_and_flagged() {
        let c = cfg("n = [8, 4]\nschedule = \"linear\"\nt-list = [200.0, 20.0, 60.0]").unwrap();
        let out = run_sweep(&c).unwrap();
        assert_eq!(out.records.len(), 6);
        let keys: Vec<(usize, f64)> = out.records.iter().map(|r| (r.n, r.t)).collect();
        assert_eq!(keys, vec![(4, 20.0), (4, 60.0), (4, 200.0), (8, 20.0), (8, 60.0), (8, 200.0)]);
        for r in &out.records {
            assert_eq!(r.flags.contains(&"below-validity"), r.t < r.t_val);
            assert!(r.eps_lower <= r.eps_upper);
            assert!((r.roland_t.unwrap() - std::f64::consts::FRAC_PI_2 * (r.n as f64).sqrt() / r.eps_upper).abs() < 1e-9 * r.roland_t.unwrap());
        }
        let csv = out.csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_VERSION_LINE));
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(csv.lines().count(), 8);
        assert_eq!(out.summary.scaling.len(), 1);
        let closed = |n| crate::grover::closed_tradeoff(n, ScheduleKind::Linear, 50.0, 0, crate::grover::J0Source::Exact, 1e-10).unwrap();
        let expected = loglog_slope(&[4.0, 8.0], &[closed(4).t_val, closed(8).t_val]);
        assert!((out.summary.scaling[0].t_val_exponent - expected).abs() < 1e-6);
    }

    #[test]
    fn custom_matrix_model() {
        let dir = std::env::temp_dir().join(format!("adia-sweep-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pair.txt");
        std::fs::write(&path, "2 2\n0.5 -0.5\n-0.5 0.5\n0 0\n0 1\n").unwrap();
        let text = format!("model = \"custom-matrix-file\"\nmatrix-file = {:?}\nschedule = \"linear\"\nt-list = [30.0]", path.display().to_string());
        let c = cfg(&text).unwrap();
        let out = run_sweep(&c).unwrap();
        assert_eq!(out.records[0].n, 2);
        assert_eq!(out.records[0].jansen, None);
        let csv = out.csv_string();
        let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
        assert_eq!((row[11], row[12]), ("", ""));
        let bad = "model = \"custom-matrix-file\"\nschedule = \"optimal\"\nmatrix-file = ".to_string() + &format!("{:?}", path.display().to_string());
        assert!(matches!(cfg(&bad), Err(Error::Config { field, .. }) if field == "schedule"));
        std::fs::remove_dir_all(dir).ok();
    }
}
