//! Batch evaluation: sample queries, answer them through every configured
//! path and compare each answer against the exhaustive one.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::engine::{topk, Hit, IndexKind, Indexes, Kernel, QueryOptions, QuerySpec, TopKResult};
use super::ssr::sum_ratio;
use super::QueryError;
use crate::index::{PivotIndex, TreeIndex, DEFAULT_LEAF_MIN};
use crate::metric::{DistanceOracle, PreparedQuery, SimilarityBudget};
use crate::model::{TrajectoryId, TrajectoryStore};
use crate::Scalar;

pub const HISTOGRAM_BINS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub query_count: usize,
    pub ks: Vec<usize>,
    pub indexes: Vec<IndexKind>,
    /// Filter radius for the index paths.
    pub radius: Option<f64>,
    pub h: usize,
    pub leaf_min: usize,
    pub seed: u64,
    pub kernel: Kernel,
    pub bounding: bool,
    pub parallel: bool,
    /// Also bin the similarity of every query against every stored trajectory.
    pub histogram: bool,
}

impl ProtocolConfig {
    pub fn new(seed: u64) -> Self {
        ProtocolConfig {
            query_count: 100,
            ks: vec![1, 4, 16, 64],
            indexes: vec![IndexKind::Exact],
            radius: None,
            h: 8,
            leaf_min: DEFAULT_LEAF_MIN,
            seed,
            kernel: Kernel::Merge,
            bounding: true,
            parallel: true,
            histogram: false,
        }
    }
}

/// One answered query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRecord {
    pub query_id: TrajectoryId,
    pub k: usize,
    pub index: IndexKind,
    pub r: Option<f64>,
    pub h: Option<usize>,
    pub results: Vec<Hit<f64>>,
    pub candidate_count: usize,
    pub filter_ms: f64,
    pub eval_ms: f64,
    pub fell_back: bool,
    /// `None` when the exhaustive answer sums to zero.
    pub ssr: Option<f64>,
}

/// Deterministic aggregate per (index, k).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub index: IndexKind,
    pub k: usize,
    pub queries: usize,
    pub mean_candidates: f64,
    pub mean_results: f64,
    pub mean_ssr: Option<f64>,
    pub min_ssr: Option<f64>,
    pub ssr_undefined: usize,
    pub fallbacks: usize,
}

/// Wall-clock aggregate per (index, k).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub index: IndexKind,
    pub k: usize,
    pub mean_ms: f64,
    pub stddev_ms: f64,
    pub mean_filter_ms: f64,
    pub mean_eval_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildRecord {
    pub index: IndexKind,
    pub build_ms: f64,
    pub entries: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    pub queries: Vec<TrajectoryId>,
    pub records: Vec<QueryRecord>,
    pub summary: Vec<SummaryRow>,
    pub timing: Vec<TimingRow>,
    pub builds: Vec<BuildRecord>,
    pub histogram: Option<Vec<u64>>,
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn run_protocol<S: Scalar>(
    store: &TrajectoryStore,
    oracle: &DistanceOracle<S>,
    config: &ProtocolConfig,
) -> Result<ProtocolReport, QueryError> {
    if store.is_empty() {
        return Err(QueryError::EmptyStore);
    }
    if config.ks.contains(&0) {
        return Err(QueryError::InvalidK);
    }
    let radius = match config.radius {
        Some(r) => Some(S::from_f64_lossy(r)),
        None if config.indexes.iter().any(|&i| i != IndexKind::Exact) => {
            let kind = *config.indexes.iter().find(|&&i| i != IndexKind::Exact).expect("present");
            return Err(QueryError::MissingRadius(kind));
        }
        None => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let amount = config.query_count.min(store.len());
    let queries: Vec<usize> = rand::seq::index::sample(&mut rng, store.len(), amount).into_vec();

    let mut builds = Vec::new();
    let (mut pivot, mut tree) = (None, None);
    if config.indexes.contains(&IndexKind::Pivot) {
        let start = Instant::now();
        let index = PivotIndex::build(store, oracle, config.h)?;
        builds.push(BuildRecord {
            index: IndexKind::Pivot,
            build_ms: millis(start.elapsed()),
            entries: index.entry_count(),
            nodes: 1,
        });
        pivot = Some(index);
    }
    if config.indexes.contains(&IndexKind::Tree) {
        let start = Instant::now();
        let index = TreeIndex::build(store, oracle, config.h, config.leaf_min)?;
        builds.push(BuildRecord {
            index: IndexKind::Tree,
            build_ms: millis(start.elapsed()),
            entries: index.entry_count(),
            nodes: index.stats().node_count,
        });
        tree = Some(index);
    }
    let indexes = Indexes { pivot: pivot.as_ref(), tree: tree.as_ref() };
    let options = QueryOptions { bounding: config.bounding, parallel: config.parallel, kernel: config.kernel };
    let spec_for = |pos: usize, k: usize, kind: IndexKind| {
        let q = store.as_slice()[pos].clone();
        let r = if kind == IndexKind::Exact { None } else { radius };
        QuerySpec::new(q, k).via(kind, r)
    };

    // Warm-up, not recorded.
    if let (Some(&first), Some(&k)) = (queries.first(), config.ks.iter().max()) {
        for &kind in &config.indexes {
            topk(&spec_for(first, k, kind), store, indexes, oracle, options)?;
        }
    }

    let mut records = Vec::new();
    for &pos in &queries {
        for &k in &config.ks {
            let exact = topk(&spec_for(pos, k, IndexKind::Exact), store, indexes, oracle, options)?;
            let reference_sum = exact.similarity_sum();
            for &kind in &config.indexes {
                let result: TopKResult<S> = if kind == IndexKind::Exact {
                    exact.clone()
                } else {
                    topk(&spec_for(pos, k, kind), store, indexes, oracle, options)?
                };
                let indexed = kind != IndexKind::Exact;
                records.push(QueryRecord {
                    query_id: store.as_slice()[pos].id,
                    k,
                    index: kind,
                    r: if indexed { config.radius } else { None },
                    h: if indexed { Some(config.h) } else { None },
                    results: result
                        .hits
                        .iter()
                        .map(|h| Hit { id: h.id, similarity: h.similarity.to_f64_lossless() })
                        .collect(),
                    candidate_count: result.candidate_count,
                    filter_ms: millis(result.filter_time),
                    eval_ms: millis(result.eval_time),
                    fell_back: result.fell_back,
                    ssr: sum_ratio(result.similarity_sum(), reference_sum).ok().map(S::to_f64_lossless),
                });
            }
        }
    }

    let mut summary = Vec::new();
    let mut timing = Vec::new();
    for &kind in &config.indexes {
        for &k in &config.ks {
            let rows: Vec<&QueryRecord> = records.iter().filter(|r| r.index == kind && r.k == k).collect();
            let ssrs: Vec<f64> = rows.iter().filter_map(|r| r.ssr).collect();
            summary.push(SummaryRow {
                index: kind,
                k,
                queries: rows.len(),
                mean_candidates: mean(rows.iter().map(|r| r.candidate_count as f64)).unwrap_or(0.0),
                mean_results: mean(rows.iter().map(|r| r.results.len() as f64)).unwrap_or(0.0),
                mean_ssr: mean(ssrs.iter().copied()),
                min_ssr: ssrs.iter().copied().reduce(f64::min),
                ssr_undefined: rows.len() - ssrs.len(),
                fallbacks: rows.iter().filter(|r| r.fell_back).count(),
            });
            let totals: Vec<f64> = rows.iter().map(|r| r.filter_ms + r.eval_ms).collect();
            let m = mean(totals.iter().copied()).unwrap_or(0.0);
            timing.push(TimingRow {
                index: kind,
                k,
                mean_ms: m,
                stddev_ms: mean(totals.iter().map(|t| (t - m) * (t - m))).unwrap_or(0.0).sqrt(),
                mean_filter_ms: mean(rows.iter().map(|r| r.filter_ms)).unwrap_or(0.0),
                mean_eval_ms: mean(rows.iter().map(|r| r.eval_ms)).unwrap_or(0.0),
            });
        }
    }

    let histogram = if config.histogram { Some(similarity_histogram(store, oracle, &queries)?) } else { None };

    Ok(ProtocolReport {
        queries: queries.iter().map(|&p| store.as_slice()[p].id).collect(),
        records,
        summary,
        timing,
        builds,
        histogram,
    })
}

fn similarity_histogram<S: Scalar>(
    store: &TrajectoryStore,
    oracle: &DistanceOracle<S>,
    queries: &[usize],
) -> Result<Vec<u64>, QueryError> {
    let mut bins = vec![0u64; HISTOGRAM_BINS];
    for &pos in queries {
        let q = &store.as_slice()[pos];
        let window = q.lifespan();
        let prepared = PreparedQuery::new(oracle, q.clone())?;
        let local = store
            .as_slice()
            .par_iter()
            .fold(
                || vec![0u64; HISTOGRAM_BINS],
                |mut acc, t| {
                    let sim = prepared.evaluate(t, window, SimilarityBudget::disabled()).value.to_f64_lossless();
                    acc[((sim * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1;
                    acc
                },
            )
            .reduce(|| vec![0u64; HISTOGRAM_BINS], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
        for (b, c) in bins.iter_mut().zip(local) {
            *b += c;
        }
    }
    Ok(bins)
}

#[derive(Serialize)]
struct HistogramRow {
    bin: usize,
    lower: f64,
    upper: f64,
    count: u64,
}

impl ProtocolReport {
    /// One JSON object per answered query.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn write_csv<T: Serialize>(rows: &[T], out: impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()
    }

    /// Candidate sizes and result quality; identical across reruns.
    pub fn write_summary_csv(&self, out: impl Write) -> std::io::Result<()> {
        Self::write_csv(&self.summary, out)
    }

    pub fn write_timing_csv(&self, out: impl Write) -> std::io::Result<()> {
        Self::write_csv(&self.timing, out)
    }

    pub fn write_build_csv(&self, out: impl Write) -> std::io::Result<()> {
        Self::write_csv(&self.builds, out)
    }

    /// Nothing is written when the histogram was not requested.
    pub fn write_histogram_csv(&self, out: impl Write) -> std::io::Result<()> {
        let Some(bins) = &self.histogram else { return Ok(()) };
        let width = 1.0 / HISTOGRAM_BINS as f64;
        let rows: Vec<HistogramRow> = bins
            .iter()
            .enumerate()
            .map(|(bin, &count)| HistogramRow {
                bin,
                lower: bin as f64 * width,
                upper: (bin + 1) as f64 * width,
                count,
            })
            .collect();
        Self::write_csv(&rows, out)
    }
}
