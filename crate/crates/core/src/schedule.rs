//! Greedy scheduling on identical machines.
//!
//! All jobs are released at time zero, so a schedule is fully described by
//! the machine each job lands on. Every tie goes to the lowest index.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: usize,
    /// Processing time in seconds.
    pub time: f64,
    pub estimate: Option<f64>,
}

impl Job {
    pub fn new(id: usize, time: f64) -> Self {
        Self {
            id,
            time,
            estimate: None,
        }
    }

    pub fn with_estimate(mut self, estimate: f64) -> Self {
        self.estimate = Some(estimate);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub machines: usize,
    /// `(job id, machine)` in the order jobs were dispatched.
    pub assignment: Vec<(usize, usize)>,
    pub loads: Vec<f64>,
    pub makespan: f64,
}

/// Job ordering used before list scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Jobs in the order given.
    Natural,
    /// Longest processing time first.
    Lpt,
    /// Largest estimate first.
    Estimated,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Natural, Strategy::Lpt, Strategy::Estimated];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Natural => "natural",
            Strategy::Lpt => "lpt",
            Strategy::Estimated => "estimated",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "natural" => Ok(Strategy::Natural),
            "lpt" => Ok(Strategy::Lpt),
            "estimated" => Ok(Strategy::Estimated),
            other => Err(Error::Invalid(format!(
                "unknown order `{other}` (expected natural, lpt or estimated)"
            ))),
        }
    }
}

fn check_inputs(jobs: &[Job], m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Invalid("machine count must be at least 1".into()));
    }
    if let Some(j) = jobs.iter().find(|j| !(j.time > 0.0 && j.time.is_finite())) {
        return Err(Error::Invalid(format!(
            "job {} has non-positive processing time {}",
            j.id, j.time
        )));
    }
    Ok(())
}

/// Each job in turn goes to the currently least-loaded machine.
pub fn schedule_ls(jobs: &[Job], m: usize) -> Result<Schedule> {
    check_inputs(jobs, m)?;
    let mut loads = vec![0.0f64; m];
    let mut assignment = Vec::with_capacity(jobs.len());
    for job in jobs {
        let k = least_loaded(&loads);
        loads[k] += job.time;
        assignment.push((job.id, k));
    }
    let makespan = loads.iter().copied().fold(0.0, f64::max);
    Ok(Schedule {
        machines: m,
        assignment,
        loads,
        makespan,
    })
}

pub(crate) fn least_loaded(loads: &[f64]) -> usize {
    let mut best = 0;
    for (k, &l) in loads.iter().enumerate().skip(1) {
        if l < loads[best] {
            best = k;
        }
    }
    best
}

/// Jobs sorted by processing time, longest first (ties by id), then LS.
pub fn schedule_lpt(jobs: &[Job], m: usize) -> Result<Schedule> {
    schedule_ls(&order_jobs(jobs, Strategy::Lpt)?, m)
}

/// Jobs sorted by estimate, largest first (ties by id), then LS.
pub fn schedule_estimated(jobs: &[Job], m: usize) -> Result<Schedule> {
    schedule_ls(&order_jobs(jobs, Strategy::Estimated)?, m)
}

pub fn schedule_with(jobs: &[Job], m: usize, strategy: Strategy) -> Result<Schedule> {
    schedule_ls(&order_jobs(jobs, strategy)?, m)
}

/// Dispatch order for a strategy.
pub fn order_jobs(jobs: &[Job], strategy: Strategy) -> Result<Vec<Job>> {
    let mut out = jobs.to_vec();
    match strategy {
        Strategy::Natural => {}
        Strategy::Lpt => out.sort_by(|a, b| b.time.total_cmp(&a.time).then(a.id.cmp(&b.id))),
        Strategy::Estimated => {
            if let Some(j) = jobs.iter().find(|j| j.estimate.is_none()) {
                return Err(Error::MissingEstimate(j.id));
            }
            out.sort_by(|a, b| {
                b.estimate
                    .unwrap()
                    .total_cmp(&a.estimate.unwrap())
                    .then(a.id.cmp(&b.id))
            });
        }
    }
    Ok(out)
}

pub const OPTIMUM_MAX_JOBS: usize = 12;

/// Minimum makespan by exhaustive search.
///
/// Jobs are placed longest first; machines with equal load are
/// interchangeable, so only the first of them is tried, and branches that
/// cannot beat the incumbent are cut.
pub fn optimum_makespan(jobs: &[Job], m: usize) -> Result<f64> {
    check_inputs(jobs, m)?;
    if jobs.len() > OPTIMUM_MAX_JOBS {
        return Err(Error::TooLarge {
            what: "exhaustive optimum",
            n: jobs.len(),
            max: OPTIMUM_MAX_JOBS,
        });
    }
    if jobs.is_empty() {
        return Ok(0.0);
    }
    let mut times: Vec<f64> = jobs.iter().map(|j| j.time).collect();
    times.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = times.iter().sum();
    let lower = times[0].max(total / m as f64);

    fn place(times: &[f64], loads: &mut [f64], current: f64, best: &mut f64, lower: f64) {
        let Some((&t, rest)) = times.split_first() else {
            *best = best.min(current);
            return;
        };
        for k in 0..loads.len() {
            if loads[..k].contains(&loads[k]) {
                continue;
            }
            let next = loads[k] + t;
            if next >= *best {
                continue;
            }
            loads[k] = next;
            place(rest, loads, current.max(next), best, lower);
            loads[k] -= t;
            if *best <= lower {
                return;
            }
        }
    }

    let mut best = schedule_lpt(jobs, m)?.makespan;
    let mut loads = vec![0.0; m];
    place(&times, &mut loads, 0.0, &mut best, lower);
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    /// `T1 / Tm`
    pub accelerated_ratio: f64,
    /// `T1 / (m * Tm)`
    pub parallel_efficiency: f64,
}

impl Efficiency {
    /// Ratio cut to two decimals and efficiency to four, as in timing tables.
    pub fn truncated(self) -> Self {
        Self {
            accelerated_ratio: truncate(self.accelerated_ratio, 2),
            parallel_efficiency: truncate(self.parallel_efficiency, 4),
        }
    }
}

/// Cuts toward zero at `digits` decimals; the small nudge keeps values such
/// as `0.29` from landing just below their own grid point.
pub fn truncate(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    (x * scale + 1e-9).floor() / scale
}

pub fn efficiency_report(t1: f64, tm: f64, m: usize) -> Result<Efficiency> {
    if !(t1 > 0.0 && tm > 0.0) {
        return Err(Error::Invalid(format!(
            "times must be positive (T1 = {t1}, Tm = {tm})"
        )));
    }
    if m == 0 {
        return Err(Error::Invalid("machine count must be at least 1".into()));
    }
    let ratio = t1 / tm;
    Ok(Efficiency {
        accelerated_ratio: ratio,
        parallel_efficiency: ratio / m as f64,
    })
}

/// Seeded stand-in for a measured run: hidden job sizes are log-normal
/// (median 1, log-sd 0.5), each estimate is the size itself, and each time is
/// the size scaled by a uniform factor in `[1 - noise, 1 + noise]`.
pub fn synthetic_workload(count: usize, noise: f64, seed: u64) -> Result<Vec<Job>> {
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::Invalid(format!("noise must lie in [0, 1), got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = LogNormal::new(0.0, 0.5).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok((0..count)
        .map(|id| {
            let size: f64 = sizes.sample(&mut rng);
            let factor = 1.0 + noise * rng.gen_range(-1.0..=1.0);
            Job::new(id, size * factor).with_estimate(size)
        })
        .collect())
}

/// Tab-separated `id  time  estimate`, one job per line, with a header.
/// A missing estimate is written as `-`.
pub fn write_jobs_tsv(jobs: &[Job]) -> String {
    let mut out = String::from("id\ttime\testimate\n");
    for j in jobs {
        let est = j.estimate.map_or_else(|| "-".to_string(), |e| e.to_string());
        out.push_str(&format!("{}\t{}\t{}\n", j.id, j.time, est));
    }
    out
}

pub fn parse_jobs_tsv(text: &str) -> Result<Vec<Job>> {
    let mut jobs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (jobs.is_empty() && line.starts_with("id")) {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: k + 1, msg };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(bad(format!("expected 2 or 3 tab-separated fields, got {}", fields.len())));
        }
        let id = fields[0]
            .parse::<usize>()
            .map_err(|_| bad(format!("invalid job id `{}`", fields[0])))?;
        let time = fields[1]
            .parse::<f64>()
            .map_err(|_| bad(format!("invalid time `{}`", fields[1])))?;
        if !(time > 0.0 && time.is_finite()) {
            return Err(bad(format!("processing time must be positive, got {time}")));
        }
        let estimate = match fields.get(2) {
            None | Some(&"-") | Some(&"") => None,
            Some(s) => Some(
                s.parse::<f64>()
                    .map_err(|_| bad(format!("invalid estimate `{s}`")))?,
            ),
        };
        jobs.push(Job { id, time, estimate });
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jobs(times: &[f64]) -> Vec<Job> {
        times.iter().enumerate().map(|(i, &t)| Job::new(i, t)).collect()
    }

    #[test]
    fn ls_tight_instance() {
        let s = schedule_ls(&jobs(&[1.0, 1.0, 2.0]), 2).unwrap();
        assert_eq!(s.loads, vec![3.0, 1.0]);
        assert_eq!(s.makespan, 3.0);
        assert_eq!(optimum_makespan(&jobs(&[1.0, 1.0, 2.0]), 2).unwrap(), 2.0);
    }

    #[test]
    fn lpt_tight_instance() {
        let j = jobs(&[3.0, 3.0, 2.0, 2.0, 2.0]);
        assert_eq!(schedule_lpt(&j, 2).unwrap().makespan, 7.0);
        assert_eq!(optimum_makespan(&j, 2).unwrap(), 6.0);
    }

    #[test]
    fn trivial_machine_counts() {
        let j = jobs(&[2.0, 5.0, 1.5]);
        assert_eq!(schedule_ls(&j, 1).unwrap().makespan, 8.5);
        assert_eq!(schedule_ls(&j, 5).unwrap().makespan, 5.0);
        assert_eq!(optimum_makespan(&j, 1).unwrap(), 8.5);
        assert_eq!(optimum_makespan(&jobs(&[4.0]), 3).unwrap(), 4.0);
        assert_eq!(schedule_lpt(&jobs(&[1.0; 4]), 2).unwrap().makespan, 2.0);
    }

    #[test]
    fn empty_schedule() {
        let s = schedule_ls(&[], 3).unwrap();
        assert_eq!(s.makespan, 0.0);
        assert!(s.assignment.is_empty());
    }

    #[test]
    fn estimated_order() {
        let j: Vec<Job> = jobs(&[1.0, 4.0, 2.0, 3.0])
            .into_iter()
            .map(|j| {
                let t = j.time;
                j.with_estimate(t)
            })
            .collect();
        assert_eq!(schedule_estimated(&j, 2).unwrap(), schedule_lpt(&j, 2).unwrap());
        let flat: Vec<Job> = jobs(&[1.0, 4.0, 2.0]).into_iter().map(|j| j.with_estimate(7.0)).collect();
        assert_eq!(schedule_estimated(&flat, 2).unwrap(), schedule_ls(&flat, 2).unwrap());
        assert_eq!(schedule_estimated(&jobs(&[1.0]), 2), Err(Error::MissingEstimate(0)));
    }

    #[test]
    fn invalid_inputs() {
        assert!(schedule_ls(&jobs(&[1.0]), 0).is_err());
        assert!(schedule_ls(&jobs(&[0.0]), 1).is_err());
        assert!(matches!(
            optimum_makespan(&jobs(&[1.0; 13]), 2),
            Err(Error::TooLarge { .. })
        ));
        assert!(efficiency_report(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn efficiency_table_values() {
        let e = efficiency_report(118413.21, 59265.87, 2).unwrap().truncated();
        assert_eq!(e.accelerated_ratio, 1.99);
        assert_eq!(e.parallel_efficiency, 0.9990);
        let e = efficiency_report(118413.21, 3796.85, 32).unwrap().truncated();
        assert_eq!(e.parallel_efficiency, 0.9746);
        let e = efficiency_report(5.0, 5.0, 1).unwrap();
        assert_eq!((e.accelerated_ratio, e.parallel_efficiency), (1.0, 1.0));
    }

    #[test]
    fn tsv_round_trip() {
        let j = vec![Job::new(0, 1.5).with_estimate(3.25), Job::new(7, 2.0)];
        let text = write_jobs_tsv(&j);
        assert_eq!(text, "id\ttime\testimate\n0\t1.5\t3.25\n7\t2\t-\n");
        assert_eq!(parse_jobs_tsv(&text).unwrap(), j);
        let err = parse_jobs_tsv("id\ttime\n1\tabc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("fifo".parse::<Strategy>().is_err());
    }

    #[test]
    fn synthetic_workload_shape() {
        let a = synthetic_workload(159, 0.2, 5).unwrap();
        assert_eq!(a, synthetic_workload(159, 0.2, 5).unwrap());
        assert_ne!(a, synthetic_workload(159, 0.2, 6).unwrap());
        for j in &a {
            let e = j.estimate.unwrap();
            assert!(j.time >= 0.8 * e - 1e-12 && j.time <= 1.2 * e + 1e-12);
        }
        let exact = synthetic_workload(10, 0.0, 5).unwrap();
        assert!(exact.iter().all(|j| j.estimate == Some(j.time)));
        assert!(synthetic_workload(3, 1.0, 0).is_err());
    }
}
