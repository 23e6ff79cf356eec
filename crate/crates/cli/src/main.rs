use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use ipso_core::enumeration::{
    build_grid, dp_counts, enumerate_pairs_with_limit, hasse_cover, sample_pairs, sample_pairs_with_workers,
    write_counts_csv, CategoryCounts, DEFAULT_EXHAUSTIVE_LIMIT,
};
use ipso_core::experiment::{
    category_fractions, compare_systems, rank_systems, select_by_percentile, sweep_all_pairs, topic_table,
    write_topic_table_csv, CompareConfig, SigTest, SweepConfig, DEFAULT_ALPHA,
};
use ipso_core::trec::{
    judgment_coverage, read_qrels_file, read_run_file, read_runs_dir, Qrels, RunFile, RunParseOptions,
};
use ipso_core::{Error, MetricSpec};

#[derive(Parser)]
#[command(name = "ipso", version, about = "Innate partial ordering of binary-relevance SERPs")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    /// Aligned text for `compare`; other commands fall back to CSV.
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Count equal / separable / non-separable SERP pairs of length k.
    Enumerate {
        /// One or more depths, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Estimate from this many random pairs instead of counting exactly.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for sampling (defaults to all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Use the dynamic program instead of listing pairs.
        #[arg(long, conflicts_with = "samples")]
        dp: bool,
        /// Largest k listed pair by pair.
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
        exact_limit: usize,
    },
    /// Relationship grid with axes ordered by two metrics.
    Grid {
        #[arg(long)]
        k: usize,
        /// Metric ordering the rows, e.g. `RBP0.5` or `AP@k`.
        #[arg(long)]
        rows: String,
        #[arg(long)]
        cols: String,
    },
    /// Covering edges of the non-inferiority order.
    Hasse {
        #[arg(long)]
        k: usize,
    },
    /// Compare two runs with a metric test corroborated by IPSO.
    Compare {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        k: usize,
        /// Metric; the depth defaults to k.
        #[arg(long, default_value = "P")]
        metric: String,
        #[arg(long, default_value = "t")]
        test: String,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Render significance marks as dagger symbols in text output.
        #[arg(long)]
        unicode: bool,
    },
    /// Per-topic trajectories and score differences of two runs.
    Topics {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        k: usize,
        /// Metrics, comma separated; depths default to k.
        #[arg(long, value_delimiter = ',', default_value = "RR,P,RBP0.5,RBP0.8,AP,NDCG")]
        metrics: Vec<String>,
    },
    /// Compare every pair of runs in a directory.
    Sweep {
        #[command(flatten)]
        runs: RunsArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Metric families, re-evaluated at every k.
        #[arg(long, value_delimiter = ',', default_value = "P")]
        metrics: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "t")]
        tests: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Emit per-setting category fractions instead of per-pair rows.
        #[arg(long)]
        summary: bool,
    },
    /// Relationship fractions over all topics and run pairs.
    Fractions {
        #[command(flatten)]
        runs: RunsArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
    },
    /// Rank runs by mean metric score.
    Rank {
        #[command(flatten)]
        runs: RunsArgs,
        #[arg(long, default_value = "P@10")]
        metric: String,
        /// Print only the run at this percentile of the ranking (100 = best).
        #[arg(long)]
        percentile: Option<f64>,
    },
    /// Unjudged documents in the retrieved lists.
    Coverage {
        #[command(flatten)]
        runs: RunsArgs,
        /// Emit one row per (system, topic) list.
        #[arg(long)]
        per_list: bool,
    },
}

#[derive(Args)]
struct ParseArgs {
    /// Documents kept per topic (0 keeps all).
    #[arg(long, default_value_t = 100)]
    depth: usize,
    /// Order documents by the rank column rather than by score.
    #[arg(long)]
    honor_rank: bool,
}

impl ParseArgs {
    fn options(&self, source: &Path) -> RunParseOptions {
        RunParseOptions {
            depth: (self.depth > 0).then_some(self.depth),
            honor_rank: self.honor_rank,
            source_name: source.display().to_string(),
        }
    }
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    run_a: PathBuf,
    #[arg(long)]
    run_b: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[command(flatten)]
    parse: ParseArgs,
}

impl PairArgs {
    fn load(&self) -> anyhow::Result<(RunFile, RunFile, Qrels)> {
        let a = read_run_file(&self.run_a, &self.parse.options(&self.run_a))
            .with_context(|| format!("reading {}", self.run_a.display()))?;
        let b = read_run_file(&self.run_b, &self.parse.options(&self.run_b))
            .with_context(|| format!("reading {}", self.run_b.display()))?;
        let q = read_qrels_file(&self.qrels).with_context(|| format!("reading {}", self.qrels.display()))?;
        Ok((a, b, q))
    }
}

#[derive(Args)]
struct RunsArgs {
    /// Directory of run files.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[command(flatten)]
    parse: ParseArgs,
}

impl RunsArgs {
    fn load(&self) -> anyhow::Result<(Vec<RunFile>, Qrels)> {
        let runs = read_runs_dir(&self.runs, &self.parse.options(&self.runs))
            .with_context(|| format!("reading runs from {}", self.runs.display()))?;
        let q = read_qrels_file(&self.qrels).with_context(|| format!("reading {}", self.qrels.display()))?;
        info!("loaded {} runs, {} judged topics", runs.len(), q.len());
        Ok((runs, q))
    }
}

/// Accepts `NAME@d` or a bare `NAME`, which is evaluated at `depth`.
fn parse_metric(s: &str, depth: usize) -> Result<MetricSpec, Error> {
    if s.contains('@') {
        s.parse()
    } else {
        format!("{s}@{depth}").parse()
    }
}

fn parse_tests(names: &[String]) -> Result<Vec<SigTest>, Error> {
    names.iter().map(|t| t.parse()).collect()
}

fn emit_json<T: Serialize + ?Sized>(value: &T, out: &mut impl Write) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli, out: &mut impl Write) -> anyhow::Result<()> {
    let json = cli.format == Format::Json;
    match cli.command {
        Command::Enumerate {
            k,
            samples,
            seed,
            workers,
            dp,
            exact_limit,
        } => {
            let mut rows: Vec<CategoryCounts> = Vec::new();
            for k in k {
                let start = Instant::now();
                let counts = match samples {
                    Some(n) => match workers {
                        Some(w) => sample_pairs_with_workers(k, n, seed, w)?,
                        None => sample_pairs(k, n, seed)?,
                    },
                    None if dp => dp_counts(k)?,
                    None => enumerate_pairs_with_limit(k, exact_limit)?,
                };
                info!("k={k}: {} pairs in {:.3}s", counts.total, start.elapsed().as_secs_f64());
                rows.push(counts);
            }
            if json {
                emit_json(&rows, out)?;
            } else {
                write_counts_csv(&mut *out, &rows)?;
            }
        }
        Command::Grid { k, rows, cols } => {
            let grid = build_grid(k, &parse_metric(&rows, k)?, &parse_metric(&cols, k)?)?;
            if json {
                #[derive(Serialize)]
                struct GridJson {
                    k: usize,
                    rows: Vec<String>,
                    cols: Vec<String>,
                    cells: Vec<Vec<&'static str>>,
                }
                let n = grid.cols.len();
                let g = GridJson {
                    k,
                    rows: grid.rows.iter().map(|s| s.bitstring()).collect(),
                    cols: grid.cols.iter().map(|s| s.bitstring()).collect(),
                    cells: (0..grid.rows.len())
                        .map(|r| (0..n).map(|c| grid.cell(r, c).code()).collect())
                        .collect(),
                };
                emit_json(&g, out)?;
            } else {
                grid.write_csv(&mut *out)?;
            }
        }
        Command::Hasse { k } => {
            let hasse = hasse_cover(k)?;
            if json {
                let edges: Vec<[String; 2]> = hasse
                    .edges
                    .iter()
                    .map(|(a, b)| [a.bitstring(), b.bitstring()])
                    .collect();
                emit_json(&serde_json::json!({ "k": k, "edges": edges }), out)?;
            } else {
                writeln!(out, "from,to")?;
                hasse.write_edge_list(&mut *out)?;
            }
        }
        Command::Compare {
            pair,
            k,
            metric,
            test,
            alpha,
            unicode,
        } => {
            let (a, b, q) = pair.load()?;
            let config = CompareConfig {
                k,
                metric: parse_metric(&metric, k)?,
                alpha,
                test: test.parse()?,
            };
            let report = compare_systems(&a, &b, &q, &config)?;
            match cli.format {
                Format::Json => emit_json(&report, out)?,
                Format::Text => write!(out, "{}", report.render_text(!unicode))?,
                Format::Csv => {
                    let mut w = csv_writer(&mut *out);
                    w.write_record([
                        "system_a",
                        "system_b",
                        "k",
                        "metric",
                        "test",
                        "alpha",
                        "topics",
                        "mean_a",
                        "mean_b",
                        "effect_size",
                        "metric_p",
                        "ipso_ns_nonsep",
                        "ipso_ns",
                        "ipso_equal",
                        "ipso_ni",
                        "ipso_ni_nonsep",
                        "ipso_p",
                        "metric_significant",
                        "ipso_corroborated",
                    ])?;
                    let mut rec = vec![
                        report.system_a.clone(),
                        report.system_b.clone(),
                        report.k.to_string(),
                        report.metric.to_string(),
                        report.test.to_string(),
                        report.alpha.to_string(),
                        report.topics.to_string(),
                        report.mean_a.to_string(),
                        report.mean_b.to_string(),
                        report.effect_size.to_string(),
                        report.metric_p.to_string(),
                    ];
                    rec.extend(report.ipso_counts.0.iter().map(|c| c.to_string()));
                    rec.push(report.ipso_p.map_or(String::new(), |p| p.to_string()));
                    rec.push(report.metric_significant.to_string());
                    rec.push(report.ipso_corroborated.to_string());
                    w.write_record(&rec)?;
                    w.flush()?;
                }
            }
        }
        Command::Topics { pair, k, metrics } => {
            let (a, b, q) = pair.load()?;
            let metrics = metrics
                .iter()
                .map(|m| parse_metric(m, k))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = topic_table(&a, &b, &q, k, &metrics)?;
            if json {
                emit_json(&rows, out)?;
            } else {
                write_topic_table_csv(&rows, &mut *out)?;
            }
        }
        Command::Sweep {
            runs,
            k,
            metrics,
            tests,
            alpha,
            summary,
        } => {
            let (runs, q) = runs.load()?;
            let first = *k.first().expect("clap requires k");
            let config = SweepConfig {
                metrics: metrics
                    .iter()
                    .map(|m| parse_metric(m, first))
                    .collect::<Result<Vec<_>, _>>()?,
                tests: parse_tests(&tests)?,
                k_values: k,
                alpha,
            };
            let start = Instant::now();
            let result = sweep_all_pairs(&runs, &q, &config)?;
            info!(
                "{} sweep rows in {:.3}s",
                result.rows.len(),
                start.elapsed().as_secs_f64()
            );
            match (json, summary) {
                (true, true) => emit_json(&result.summaries, out)?,
                (true, false) => emit_json(&result, out)?,
                (false, true) => write_serialized_csv(&result.summaries, &mut *out)?,
                (false, false) => {
                    let mut w = csv_writer(&mut *out);
                    w.write_record([
                        "pair_index",
                        "system_a",
                        "system_b",
                        "k",
                        "metric",
                        "test",
                        "effect_size",
                        "metric_p",
                        "ipso_p",
                        "category",
                    ])?;
                    for r in &result.rows {
                        w.write_record([
                            r.pair_index.to_string(),
                            r.system_a.clone(),
                            r.system_b.clone(),
                            r.k.to_string(),
                            r.metric.to_string(),
                            r.test.to_string(),
                            r.effect_size.to_string(),
                            r.metric_p.to_string(),
                            r.ipso_p.map_or(String::new(), |p| p.to_string()),
                            r.category.to_string(),
                        ])?;
                    }
                    w.flush()?;
                }
            }
        }
        Command::Fractions { runs, k } => {
            let (runs, q) = runs.load()?;
            let rows = k
                .into_iter()
                .map(|k| category_fractions(&runs, &q, k))
                .collect::<Result<Vec<_>, _>>()?;
            if json {
                emit_json(&rows, out)?;
            } else {
                write_counts_csv(&mut *out, &rows)?;
            }
        }
        Command::Rank {
            runs,
            metric,
            percentile,
        } => {
            let (runs, q) = runs.load()?;
            let metric = parse_metric(&metric, 10)?;
            let ranking = rank_systems(&runs, &q, &metric)?;
            if let Some(pct) = percentile {
                let tag = select_by_percentile(&ranking, pct)?;
                writeln!(out, "{tag}")?;
            } else if json {
                let rows: Vec<_> = ranking
                    .iter()
                    .map(|(tag, mean)| serde_json::json!({ "system": tag, "mean": mean }))
                    .collect();
                emit_json(&rows, out)?;
            } else {
                writeln!(out, "system,{metric}")?;
                for (tag, mean) in &ranking {
                    writeln!(out, "{tag},{mean}")?;
                }
            }
        }
        Command::Coverage { runs, per_list } => {
            let (runs, q) = runs.load()?;
            let report = judgment_coverage(&runs, &q);
            if json {
                emit_json(&report, out)?;
            } else if per_list {
                write_serialized_csv(&report.rows, &mut *out)?;
            } else {
                writeln!(
                    out,
                    "fraction_with_unjudged,mean_first_unjudged_rank,mean_unjudged_per_100"
                )?;
                let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
                writeln!(
                    out,
                    "{},{},{}",
                    report.fraction_with_unjudged,
                    opt(report.mean_first_unjudged_rank),
                    opt(report.mean_unjudged_per_100)
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::Writer::from_writer(out)
}

fn write_serialized_csv<T: Serialize>(rows: &[T], out: &mut impl Write) -> anyhow::Result<()> {
    let mut w = csv_writer(&mut *out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// 1 for unreadable or malformed input, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let parse = err
        .chain()
        .any(|e| e.downcast_ref::<Error>().is_some_and(Error::is_parse) || e.is::<io::Error>());
    if parse {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
