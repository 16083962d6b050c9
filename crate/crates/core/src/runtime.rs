//! Multi-worker execution of expansion jobs.
//!
//! Jobs sit in one queue in strategy order. Each worker repeatedly claims the
//! next queue slot through an atomic cursor and evaluates that job, so an idle
//! worker always takes the next job: list scheduling on the realized
//! durations. Results travel over a channel and are summed in job-id order
//! once every worker has finished, which keeps totals independent of worker
//! count and interleaving.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::approx::estimate_jobs;
use crate::error::{Error, Result};
use crate::exact::{per_hybrid, ExpansionNode, RyserScalar};
use crate::schedule::{efficiency_report, order_jobs, schedule_with, truncate, Job, Schedule, Strategy};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone)]
pub struct RunPlan<T> {
    pub nodes: Vec<ExpansionNode<T>>,
    pub order: Strategy,
    pub workers: usize,
    pub seed: u64,
    /// Estimator trials per job; the square of the job order when absent.
    pub trials: Option<usize>,
    /// Measured durations by job id, required for the `lpt` order.
    pub durations: Option<Vec<f64>>,
}

impl<T> RunPlan<T> {
    pub fn new(nodes: Vec<ExpansionNode<T>>, order: Strategy, workers: usize) -> Self {
        Self {
            nodes,
            order,
            workers,
            seed: crate::DEFAULT_SEED,
            trials: None,
            durations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: usize,
    /// Slot in the dispatch queue.
    pub position: usize,
    pub worker: usize,
    /// Seconds since the run started.
    pub start: f64,
    pub finish: f64,
    pub duration: f64,
    pub estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<T> {
    pub total: T,
    /// Permanent of each job, by job id.
    pub values: Vec<T>,
    /// Sorted by job id.
    pub records: Vec<JobRecord>,
    pub wall_seconds: f64,
    /// Latest finish time over all jobs.
    pub makespan: f64,
    /// Time spent estimating, when the order needed estimates.
    pub estimate_seconds: Option<f64>,
}

impl<T> RunResult<T> {
    /// Jobs with their measured durations and estimates, ready for replay.
    pub fn replay_jobs(&self) -> Vec<Job> {
        self.records
            .iter()
            .map(|r| Job {
                id: r.id,
                time: r.duration.max(1e-6),
                estimate: r.estimate,
            })
            .collect()
    }
}

/// Applies `f` to every item on `workers` threads, keeping input order.
pub fn map_parallel<I: Sync, O: Send>(items: &[I], workers: usize, f: impl Fn(&I) -> O + Sync) -> Vec<O> {
    let cursor = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            let tx = tx.clone();
            let (cursor, f) = (&cursor, &f);
            scope.spawn(move || loop {
                let k = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(k) else { break };
                if tx.send((k, f(item))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut out: Vec<(usize, O)> = rx.into_iter().collect();
    out.sort_by_key(|(k, _)| *k);
    out.into_iter().map(|(_, o)| o).collect()
}

fn micros(seconds: f64) -> f64 {
    (seconds * 1e6).round() / 1e6
}

/// Dispatch order, per-job estimates and the time spent estimating.
type Dispatch = (Vec<usize>, Vec<Option<f64>>, Option<f64>);

fn plan_order<T: RyserScalar>(plan: &RunPlan<T>) -> Result<Dispatch> {
    let n = plan.nodes.len();
    let mut estimates = vec![None; n];
    let mut estimate_seconds = None;
    if plan.order == Strategy::Estimated {
        let t = Instant::now();
        let reports = estimate_jobs(&plan.nodes, plan.trials, plan.seed)?;
        estimate_seconds = Some(micros(t.elapsed().as_secs_f64()));
        for (slot, r) in estimates.iter_mut().zip(&reports) {
            *slot = Some(r.mean);
        }
    }
    let times = match (&plan.durations, plan.order) {
        (Some(d), _) if d.len() == n => d.clone(),
        (Some(d), _) => {
            return Err(Error::Invalid(format!(
                "{} recorded durations for {n} jobs",
                d.len()
            )))
        }
        (None, Strategy::Lpt) => {
            return Err(Error::Invalid(
                "the lpt order needs recorded durations (pass a replay file)".into(),
            ))
        }
        (None, _) => vec![1.0; n],
    };
    let jobs: Vec<Job> = (0..n)
        .map(|k| Job {
            id: k,
            time: times[k],
            estimate: estimates[k],
        })
        .collect();
    let order = order_jobs(&jobs, plan.order)?.iter().map(|j| j.id).collect();
    Ok((order, estimates, estimate_seconds))
}

struct Done<T> {
    id: usize,
    position: usize,
    worker: usize,
    start: f64,
    finish: f64,
    value: Result<T>,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "worker panicked".to_string())
}

/// Runs every job of the plan on `plan.workers` threads. An empty plan (a
/// structurally singular matrix expanded away) has total zero.
pub fn execute<T: RyserScalar>(plan: &RunPlan<T>) -> Result<RunResult<T>> {
    if plan.workers == 0 {
        return Err(Error::Invalid("worker count must be at least 1".into()));
    }
    let (order, estimates, estimate_seconds) = plan_order(plan)?;

    let cursor = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<Done<T>>();
    let t0 = Instant::now();
    std::thread::scope(|scope| {
        for worker in 0..plan.workers {
            let tx = tx.clone();
            let (cursor, abort, order, nodes) = (&cursor, &abort, &order, &plan.nodes);
            scope.spawn(move || loop {
                if abort.load(Ordering::Relaxed) {
                    break;
                }
                let position = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(&id) = order.get(position) else {
                    break;
                };
                let start = t0.elapsed().as_secs_f64();
                let value = catch_unwind(AssertUnwindSafe(|| per_hybrid(&nodes[id].matrix)))
                    .unwrap_or_else(|p| {
                        Err(Error::JobFailed {
                            job: id,
                            msg: panic_message(p),
                        })
                    });
                if value.is_err() {
                    abort.store(true, Ordering::Relaxed);
                }
                let finish = t0.elapsed().as_secs_f64();
                let _ = tx.send(Done {
                    id,
                    position,
                    worker,
                    start,
                    finish,
                    value,
                });
            });
        }
    });
    drop(tx);
    let wall_seconds = micros(t0.elapsed().as_secs_f64());

    let mut done: Vec<Done<T>> = rx.into_iter().collect();
    done.sort_by_key(|d| d.id);
    if let Some(failed) = done.iter().find(|d| d.value.is_err()) {
        let err = failed.value.as_ref().unwrap_err();
        return Err(match err {
            Error::JobFailed { .. } => err.clone(),
            other => Error::JobFailed {
                job: failed.id,
                msg: other.to_string(),
            },
        });
    }
    if done.len() != plan.nodes.len() {
        return Err(Error::Invalid(format!(
            "{} of {} jobs reported back",
            done.len(),
            plan.nodes.len()
        )));
    }

    let mut total = T::zero();
    let mut values = Vec::with_capacity(done.len());
    let mut records = Vec::with_capacity(done.len());
    for d in done {
        let v = d.value?;
        total = total.add(v)?;
        values.push(v);
        let (start, finish) = (micros(d.start), micros(d.finish));
        records.push(JobRecord {
            id: d.id,
            position: d.position,
            worker: d.worker,
            start,
            finish,
            duration: micros(d.finish - d.start),
            estimate: estimates[d.id],
        });
    }
    let makespan = records.iter().map(|r| r.finish).fold(0.0, f64::max);
    Ok(RunResult {
        total,
        values,
        records,
        wall_seconds,
        makespan,
        estimate_seconds,
    })
}

/// Simulated schedule of recorded jobs under a strategy.
pub fn replay(jobs: &[Job], strategy: Strategy, m: usize) -> Result<Schedule> {
    if jobs.is_empty() {
        return Err(Error::Invalid("no recorded durations to replay".into()));
    }
    schedule_with(jobs, m, strategy)
}

/// One line of a speed-up table; the single-worker row has no ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub num: usize,
    pub time: f64,
    pub ratio: Option<f64>,
    pub efficiency: Option<f64>,
}

fn check_counts(counts: &[usize]) -> Result<()> {
    if counts.first() != Some(&1) || counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(
            "worker counts must start at 1 and increase".into(),
        ));
    }
    Ok(())
}

fn sweep_rows(counts: &[usize], times: &[f64]) -> Result<Vec<SweepRow>> {
    let t1 = times[0];
    counts
        .iter()
        .zip(times)
        .map(|(&num, &time)| {
            if num == 1 {
                return Ok(SweepRow {
                    num,
                    time,
                    ratio: None,
                    efficiency: None,
                });
            }
            let e = efficiency_report(t1, time, num)?.truncated();
            Ok(SweepRow {
                num,
                time,
                ratio: Some(e.accelerated_ratio),
                efficiency: Some(e.parallel_efficiency),
            })
        })
        .collect()
}

/// Speed-up table from replaying recorded jobs at each machine count.
pub fn efficiency_sweep_replay(jobs: &[Job], strategy: Strategy, counts: &[usize]) -> Result<Vec<SweepRow>> {
    check_counts(counts)?;
    let times = counts
        .iter()
        .map(|&m| replay(jobs, strategy, m).map(|s| s.makespan))
        .collect::<Result<Vec<_>>>()?;
    sweep_rows(counts, &times)
}

/// Speed-up table from real runs, one per worker count.
pub fn efficiency_sweep<T: RyserScalar>(plan: &RunPlan<T>, counts: &[usize]) -> Result<Vec<SweepRow>> {
    check_counts(counts)?;
    let mut times = Vec::with_capacity(counts.len());
    for &workers in counts {
        let mut p = plan.clone();
        p.workers = workers;
        times.push(execute(&p)?.wall_seconds.max(1e-6));
    }
    sweep_rows(counts, &times)
}

/// `num  time  ratio  efficiency`, with `--` for the single-worker row.
pub fn write_sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("num\ttime\tratio\tefficiency\n");
    for r in rows {
        let ratio = r.ratio.map_or("--".to_string(), |v| format!("{:.2}", truncate(v, 2)));
        let eff = r
            .efficiency
            .map_or("--".to_string(), |v| format!("{:.4}", truncate(v, 4)));
        out.push_str(&format!("{}\t{:.2}\t{}\t{}\n", r.num, r.time, ratio, eff));
    }
    out
}
