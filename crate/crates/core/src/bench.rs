//! Benchmark harness comparing inverse-TTC enumeration with the exhaustive
//! baseline on seeded random profiles.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerator::{brute_force_frontier_with, itea_with, EnumOptions, Frontier};
use crate::error::{Error, Result};
use crate::instances::{mix64, random_profile};
use crate::model::{factorial, PreferenceProfile, MAX_SCAN_N};

pub const CSV_HEADER: [&str; 9] = [
    "n",
    "instance",
    "seed",
    "method",
    "frontier_size",
    "ttc_calls",
    "states_visited",
    "wall_time_us",
    "timeout",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Itea,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Itea => "itea",
        }
    }

    pub fn run(self, profile: &PreferenceProfile, opts: EnumOptions) -> Result<Frontier> {
        match self {
            Method::Brute => brute_force_frontier_with(profile, opts),
            Method::Itea => itea_with(profile, opts),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "brute" => Ok(Method::Brute),
            "itea" => Ok(Method::Itea),
            _ => Err(format!("unknown method `{s}` (expected itea or brute)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub instances_per_n: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    /// CSV destination; nothing is written when `None`.
    pub output: Option<PathBuf>,
    /// Runs slower than this are flagged, not aborted.
    pub time_limit: Duration,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_min: 3,
            n_max: 9,
            instances_per_n: 100,
            base_seed: 1,
            methods: vec![Method::Itea, Method::Brute],
            output: None,
            time_limit: Duration::from_secs(600),
            workers: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::InvalidConfig(format!(
                "empty n range {}..={}",
                self.n_min, self.n_max
            )));
        }
        if self.n_max > MAX_SCAN_N {
            return Err(Error::InstanceTooLarge {
                n: self.n_max,
                max: MAX_SCAN_N,
            });
        }
        if self.instances_per_n == 0 {
            return Err(Error::InvalidConfig(
                "instances_per_n must be at least 1".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        Ok(())
    }

    pub fn effective_workers(&self) -> usize {
        if self.workers == 0 {
            std::thread::available_parallelism().map_or(1, |p| p.get())
        } else {
            self.workers
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n: usize,
    pub instance: usize,
    pub seed: u64,
    pub method: Method,
    pub frontier_size: u64,
    pub ttc_calls: u64,
    pub states_visited: u64,
    pub wall_time_us: u64,
    pub timeout: bool,
}

impl BenchRecord {
    fn key(&self) -> (usize, usize, Method) {
        (self.n, self.instance, self.method)
    }
}

/// Seed of instance `index` at size `n`.
pub fn instance_seed(base_seed: u64, n: usize, index: usize) -> u64 {
    mix64(mix64(base_seed ^ mix64(n as u64)) ^ mix64(index as u64 + 1))
}

fn run_instance(config: &BenchConfig, n: usize, index: usize) -> Result<Vec<BenchRecord>> {
    let seed = instance_seed(config.base_seed, n, index);
    let profile = random_profile(n, seed)?;
    let opts = EnumOptions {
        keep_classes: false,
    };
    let mut records = Vec::with_capacity(config.methods.len());
    let mut reference: Option<Frontier> = None;
    for &method in &config.methods {
        let start = Instant::now();
        let frontier = method.run(&profile, opts)?;
        let elapsed = start.elapsed();
        records.push(BenchRecord {
            n,
            instance: index,
            seed,
            method,
            frontier_size: frontier.len() as u64,
            ttc_calls: frontier.stats.ttc_calls,
            states_visited: frontier.stats.states_visited,
            wall_time_us: elapsed.as_micros() as u64,
            timeout: elapsed > config.time_limit,
        });
        match &reference {
            Some(r) if r.members != frontier.members => {
                return Err(Error::FrontierMismatch { n, instance: index });
            }
            Some(_) => {}
            None => reference = Some(frontier),
        }
    }
    Ok(records)
}

/// Runs every configured method on `instances_per_n` seeded profiles for each
/// `n`, checking that methods agree on each frontier. Records come back
/// sorted by `(n, instance, method)` whatever the completion order.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.effective_workers())
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    // one discarded warm-up run per (n, method)
    for n in config.n_min..=config.n_max {
        let profile = random_profile(n, instance_seed(config.base_seed, n, 0))?;
        for &method in &config.methods {
            std::hint::black_box(method.run(
                &profile,
                EnumOptions {
                    keep_classes: false,
                },
            )?);
        }
    }

    let tasks: Vec<(usize, usize)> = (config.n_min..=config.n_max)
        .flat_map(|n| (0..config.instances_per_n).map(move |i| (n, i)))
        .collect();
    let batches: Vec<Vec<BenchRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(n, i)| run_instance(config, n, i))
            .collect::<Result<_>>()
    })?;
    let mut records: Vec<BenchRecord> = batches.into_iter().flatten().collect();
    records.sort_by_key(BenchRecord::key);

    if let Some(path) = &config.output {
        emit_csv(&records, path)?;
    }
    Ok(records)
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn write_csv<W: std::io::Write>(records: &[BenchRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes records as CSV, header first (also for an empty slice).
pub fn emit_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_error(path))?;
    write_csv(records, file).map_err(|e| match e {
        Error::Csv(c) => Error::Io {
            path: path.to_owned(),
            source: std::io::Error::other(c),
        },
        other => other,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<BenchRecord>> {
    let file = std::fs::File::open(path).map_err(io_error(path))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize()
        .collect::<std::result::Result<Vec<BenchRecord>, _>>()
        .map_err(Error::from)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub method: Method,
    pub count: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub min_us: u64,
    pub max_us: u64,
    pub mean_frontier: f64,
    pub mean_ttc_calls: f64,
    /// Mean frontier size over `n!`.
    pub frontier_ratio: f64,
    pub timeouts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

pub fn summarize(records: &[BenchRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: BTreeMap<(usize, Method), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.n, r.method)).or_default().push(r);
    }
    let rows = groups
        .into_iter()
        .map(|((n, method), rs)| {
            let count = rs.len();
            let mean = |f: fn(&BenchRecord) -> u64| {
                rs.iter().map(|r| f(r) as f64).sum::<f64>() / count as f64
            };
            let mut times: Vec<u64> = rs.iter().map(|r| r.wall_time_us).collect();
            times.sort_unstable();
            let median_us = if count % 2 == 1 {
                times[count / 2] as f64
            } else {
                (times[count / 2 - 1] + times[count / 2]) as f64 / 2.0
            };
            let mean_frontier = mean(|r| r.frontier_size);
            SummaryRow {
                n,
                method,
                count,
                mean_us: mean(|r| r.wall_time_us),
                median_us,
                min_us: times[0],
                max_us: times[count - 1],
                mean_frontier,
                mean_ttc_calls: mean(|r| r.ttc_calls),
                frontier_ratio: mean_frontier / factorial(n).map_or(f64::INFINITY, |f| f as f64),
                timeouts: rs.iter().filter(|r| r.timeout).count(),
            }
        })
        .collect();
    Ok(Summary { rows })
}

impl Summary {
    pub fn row(&self, n: usize, method: Method) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.n == n && r.method == method)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:>3} {:>6} {:>6} {:>12} {:>12} {:>10} {:>10} {:>10} {:>12} {:>9} {:>4}",
            "n",
            "method",
            "count",
            "mean_us",
            "median_us",
            "min_us",
            "max_us",
            "mean_|P|",
            "mean_ttc",
            "|P|/n!",
            "t/o"
        )
        .unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{:>3} {:>6} {:>6} {:>12.1} {:>12.1} {:>10} {:>10} {:>10.2} {:>12.1} {:>9.5} {:>4}",
                r.n,
                r.method.name(),
                r.count,
                r.mean_us,
                r.median_us,
                r.min_us,
                r.max_us,
                r.mean_frontier,
                r.mean_ttc_calls,
                r.frontier_ratio,
                r.timeouts
            )
            .unwrap();
        }
        out
    }

    pub fn render_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Line chart of mean wall time against `n`, log-scaled, one line per
    /// method.
    pub fn render_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const PAD: f64 = 60.0;
        let ns: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        let (n_lo, n_hi) = (
            *ns.iter().min().unwrap_or(&0),
            *ns.iter().max().unwrap_or(&1),
        );
        let logs: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.mean_us.max(1.0).log10())
            .collect();
        let y_lo = logs.iter().copied().fold(f64::INFINITY, f64::min).floor();
        let y_hi = logs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            .ceil()
            .max(y_lo + 1.0);
        let x = |n: usize| PAD + (n - n_lo) as f64 / (n_hi - n_lo).max(1) as f64 * (W - 2.0 * PAD);
        let y = |l: f64| H - PAD - (l - y_lo) / (y_hi - y_lo) * (H - 2.0 * PAD);

        let mut svg = String::new();
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(
            svg,
            r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
            b = H - PAD,
            r = W - PAD
        )
        .unwrap();
        for n in n_lo..=n_hi {
            writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{n}</text>"#,
                x(n),
                H - PAD + 18.0
            )
            .unwrap();
        }
        for e in y_lo as i64..=y_hi as i64 {
            writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{e} us</text>"#,
                PAD - 6.0,
                y(e as f64) + 4.0
            )
            .unwrap();
        }
        for (method, colour) in [(Method::Itea, "#1f77b4"), (Method::Brute, "#d62728")] {
            let points: Vec<String> = self
                .rows
                .iter()
                .zip(&logs)
                .filter(|(r, _)| r.method == method)
                .map(|(r, &l)| format!("{:.1},{:.1}", x(r.n), y(l)))
                .collect();
            if points.is_empty() {
                continue;
            }
            writeln!(
                svg,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
                points.join(" ")
            )
            .unwrap();
            let label_y = if method == Method::Itea {
                PAD - 30.0
            } else {
                PAD - 14.0
            };
            writeln!(
                svg,
                r#"<text x="{:.1}" y="{label_y:.1}" fill="{colour}">{}</text>"#,
                W - PAD - 80.0,
                method.name()
            )
            .unwrap();
        }
        svg.push_str("</svg>\n");
        svg
    }
}
