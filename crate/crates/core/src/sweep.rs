//! Parameter grids over grant period and provisioning factor, and their
//! CSV/SVG artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::engine::{simulate, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    resource_metrics_in, summarize, DelayStats, ResourceMetrics, DEFAULT_DEADLINE_MS,
};
use crate::plot::{self, Chart, Series};
use crate::sched::ProvisioningFactor;
use crate::tbs::TbsTable;

pub const SWEEP_HEADER: [&str; 12] = [
    "period_ms",
    "alpha",
    "seed",
    "count",
    "mean_ms",
    "std_ms",
    "p999_ms",
    "exceed50",
    "prbs_per_grant",
    "alloc_bps",
    "overalloc",
    "users",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub periods_ms: Vec<u32>,
    pub alphas: Vec<f64>,
    /// Repetition `k` runs with seed `base.seed + k`.
    pub repetitions: u32,
    pub base: SimConfig,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

pub fn default_periods() -> Vec<u32> {
    (1..=50).step_by(3).collect()
}

pub fn default_alphas() -> Vec<f64> {
    vec![1.0, 1.5, 2.0]
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            periods_ms: default_periods(),
            alphas: default_alphas(),
            repetitions: 1,
            base: SimConfig::default(),
            jobs: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.periods_ms.is_empty() || self.alphas.is_empty() {
            return Err(Error::Config(
                "sweep needs at least one period and one alpha".into(),
            ));
        }
        if self.periods_ms.contains(&0) {
            return Err(Error::Config("sweep periods must be >= 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        for &a in &self.alphas {
            ProvisioningFactor::from_f64(a)?;
        }
        Ok(())
    }

    fn points(&self) -> Vec<(u32, f64, u64)> {
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for &p in &self.periods_ms {
                for k in 0..self.repetitions {
                    out.push((p, alpha, self.base.seed.wrapping_add(k as u64)));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub period_ms: u32,
    pub alpha: f64,
    pub seed: u64,
    pub stats: DelayStats<f64>,
    pub resources: ResourceMetrics<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPoint {
    pub period_ms: u32,
    pub alpha: f64,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedPoint>,
}

fn run_point(
    base: &SimConfig,
    table: &TbsTable,
    period: u32,
    alpha: f64,
    seed: u64,
) -> Result<SweepRow> {
    let mut cfg = base
        .clone()
        .with_grant(period, ProvisioningFactor::from_f64(alpha)?);
    cfg.seed = seed;
    cfg.trace_path = None;
    let out = simulate(&cfg, table)?;
    Ok(SweepRow {
        period_ms: period,
        alpha,
        seed,
        stats: summarize(&out.records, DEFAULT_DEADLINE_MS)?,
        resources: resource_metrics_in(table, &cfg.flow, &cfg.cell)?,
    })
}

/// Runs every grid point; failing points are reported in `skipped`.
pub fn run_sweep_in(spec: &SweepSpec, table: &TbsTable) -> Result<SweepResult> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = spec.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let points = spec.points();
    let outcomes: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .map(|&(p, a, s)| run_point(&spec.base, table, p, a, s))
            .collect()
    });

    let mut result = SweepResult::default();
    for (&(period_ms, alpha, seed), outcome) in points.iter().zip(outcomes) {
        match outcome {
            Ok(row) => result.rows.push(row),
            Err(e) => result.skipped.push(SkippedPoint {
                period_ms,
                alpha,
                seed,
                reason: format!("{}: {e}", e.kind()),
            }),
        }
    }
    Ok(result)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_in(spec, TbsTable::standard())
}

/// Six significant digits, shortest form.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SWEEP_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.period_ms.to_string(),
            sig6(r.alpha),
            r.seed.to_string(),
            r.stats.count.to_string(),
            sig6(r.stats.mean_ms),
            sig6(r.stats.std_ms),
            sig6(r.stats.p999_ms),
            sig6(r.stats.exceed_freq),
            r.resources.prbs_per_grant.to_string(),
            sig6(r.resources.allocated_bps),
            sig6(r.resources.overalloc_ratio),
            r.resources.users_supported.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`write_sweep_csv`]. Columns not stored in the
/// file (min/max delay) come back as NaN.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(SWEEP_HEADER) {
        return Err(Error::Parse {
            origin: path.display().to_string(),
            line: 1,
            msg: "unexpected sweep header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = i + 2;
        let field = |k: usize| -> Result<&str> {
            rec.get(k).ok_or_else(|| Error::Parse {
                origin: path.display().to_string(),
                line,
                msg: format!("missing column {}", SWEEP_HEADER[k]),
            })
        };
        macro_rules! num {
            ($k:expr) => {
                field($k)?.parse().map_err(|_| Error::Parse {
                    origin: path.display().to_string(),
                    line,
                    msg: format!("bad value in column {}", SWEEP_HEADER[$k]),
                })?
            };
        }
        rows.push(SweepRow {
            period_ms: num!(0),
            alpha: num!(1),
            seed: num!(2),
            stats: DelayStats {
                count: num!(3),
                mean_ms: num!(4),
                std_ms: num!(5),
                p999_ms: num!(6),
                exceed_freq: num!(7),
                min_ms: f64::NAN,
                max_ms: f64::NAN,
            },
            resources: ResourceMetrics {
                prbs_per_grant: num!(8),
                allocated_bps: num!(9),
                overalloc_ratio: num!(10),
                users_supported: num!(11),
            },
        });
    }
    Ok(rows)
}

/// Repetitions of one grid point averaged together.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub period_ms: u32,
    pub alpha: f64,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub p999_ms: f64,
    pub exceed_freq: f64,
    pub resources: ResourceMetrics<f64>,
}

pub fn aggregate(rows: &[SweepRow]) -> Vec<PointSummary> {
    let mut out: Vec<(PointSummary, usize)> = Vec::new();
    for r in rows {
        let slot = out
            .iter_mut()
            .find(|(s, _)| s.period_ms == r.period_ms && s.alpha == r.alpha);
        match slot {
            Some((s, n)) => {
                s.mean_ms += r.stats.mean_ms;
                s.std_ms += r.stats.std_ms;
                s.p999_ms += r.stats.p999_ms;
                s.exceed_freq += r.stats.exceed_freq;
                *n += 1;
            }
            None => out.push((
                PointSummary {
                    period_ms: r.period_ms,
                    alpha: r.alpha,
                    mean_ms: r.stats.mean_ms,
                    std_ms: r.stats.std_ms,
                    p999_ms: r.stats.p999_ms,
                    exceed_freq: r.stats.exceed_freq,
                    resources: r.resources,
                },
                1,
            )),
        }
    }
    out.into_iter()
        .map(|(mut s, n)| {
            let n = n as f64;
            s.mean_ms /= n;
            s.std_ms /= n;
            s.p999_ms /= n;
            s.exceed_freq /= n;
            s
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub selection: &'static str,
    pub point: PointSummary,
}

/// Per alpha, the cheapest point meeting the deadline at the 99.9th
/// percentile (ties go to the longer period), then the minimum-mean point.
pub fn select_table(points: &[PointSummary], deadline_ms: f64) -> Vec<TableRow> {
    let mut alphas: Vec<f64> = points.iter().map(|p| p.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let mut out = Vec::new();
    for a in alphas {
        let best = points
            .iter()
            .filter(|p| p.alpha == a && p.p999_ms <= deadline_ms)
            .min_by(|x, y| {
                x.resources
                    .overalloc_ratio
                    .total_cmp(&y.resources.overalloc_ratio)
                    .then(y.period_ms.cmp(&x.period_ms))
            });
        if let Some(p) = best {
            out.push(TableRow {
                selection: "least_resources",
                point: p.clone(),
            });
        }
    }
    let fastest = points.iter().min_by(|x, y| {
        x.mean_ms
            .total_cmp(&y.mean_ms)
            .then(x.alpha.total_cmp(&y.alpha))
            .then(x.period_ms.cmp(&y.period_ms))
    });
    if let Some(p) = fastest {
        out.push(TableRow {
            selection: "min_mean",
            point: p.clone(),
        });
    }
    out
}

fn write_table_csv(path: &Path, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "selection",
        "alpha",
        "period_ms",
        "mean_ms",
        "p999_ms",
        "std_ms",
        "overalloc",
    ])
    .map_err(csv_err(path))?;
    for r in rows {
        let p = &r.point;
        w.write_record([
            r.selection.to_string(),
            sig6(p.alpha),
            p.period_ms.to_string(),
            sig6(p.mean_ms),
            sig6(p.p999_ms),
            sig6(p.std_ms),
            sig6(p.resources.overalloc_ratio),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_skipped_csv(path: &Path, skipped: &[SkippedPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["period_ms", "alpha", "seed", "reason"])
        .map_err(csv_err(path))?;
    for s in skipped {
        w.write_record([
            s.period_ms.to_string(),
            sig6(s.alpha),
            s.seed.to_string(),
            s.reason.clone(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn series_by_alpha(points: &[PointSummary], y: impl Fn(&PointSummary) -> f64) -> Vec<Series> {
    let mut alphas: Vec<f64> = points.iter().map(|p| p.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    alphas
        .into_iter()
        .map(|a| {
            let mut pts: Vec<&PointSummary> = points.iter().filter(|p| p.alpha == a).collect();
            pts.sort_by_key(|p| p.period_ms);
            Series {
                name: format!("alpha = {a}"),
                points: pts.iter().map(|p| (p.period_ms as f64, y(p))).collect(),
                error: None,
            }
        })
        .collect()
}

fn chart(title: &str, y_label: &str, series: Vec<Series>) -> Chart {
    Chart {
        title: title.into(),
        x_label: "grant period [ms]".into(),
        y_label: y_label.into(),
        series,
        ..Default::default()
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `sweep.csv`, `skipped.csv`, `table1.csv` and the three figures
/// into `out_dir`, returning the paths written.
pub fn emit(result: &SweepResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = |name: &str| out_dir.join(name);
    let points = aggregate(&result.rows);

    write_sweep_csv(&path("sweep.csv"), &result.rows)?;
    write_skipped_csv(&path("skipped.csv"), &result.skipped)?;
    write_table_csv(
        &path("table1.csv"),
        &select_table(&points, DEFAULT_DEADLINE_MS),
    )?;

    let mut mean = series_by_alpha(&points, |p| p.mean_ms);
    for s in &mut mean {
        let a = s.name.clone();
        let mut pts: Vec<&PointSummary> = points
            .iter()
            .filter(|p| format!("alpha = {}", p.alpha) == a)
            .collect();
        pts.sort_by_key(|p| p.period_ms);
        s.error = Some(pts.iter().map(|p| p.std_ms).collect());
    }
    write_file(
        &path("fig2_delay.svg"),
        &plot::render(&[chart("Mean delay (+/- std)", "delay [ms]", mean)]),
    )?;

    let mut p999 = chart(
        "99.9th percentile delay",
        "delay [ms]",
        series_by_alpha(&points, |p| p.p999_ms),
    );
    p999.reference.push((DEFAULT_DEADLINE_MS, "50 ms".into()));
    let mut exceed = chart(
        "Delays exceeding 50 ms",
        "relative frequency",
        series_by_alpha(&points, |p| p.exceed_freq),
    );
    exceed.log_y = true;
    exceed.reference.push((1e-3, "1e-3".into()));
    write_file(
        &path("fig3_reliability.svg"),
        &plot::render(&[p999, exceed]),
    )?;

    write_file(
        &path("fig4_resources.svg"),
        &plot::render(&[
            chart(
                "PRBs per grant",
                "PRBs",
                series_by_alpha(&points, |p| p.resources.prbs_per_grant as f64),
            ),
            chart(
                "Allocated / mean rate",
                "ratio",
                series_by_alpha(&points, |p| p.resources.overalloc_ratio),
            ),
            chart(
                "Supported users",
                "users",
                series_by_alpha(&points, |p| p.resources.users_supported as f64),
            ),
        ]),
    )?;

    Ok([
        "sweep.csv",
        "skipped.csv",
        "table1.csv",
        "fig2_delay.svg",
        "fig3_reliability.svg",
        "fig4_resources.svg",
    ]
    .iter()
    .map(|n| path(n))
    .collect())
}
