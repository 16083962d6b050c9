//! Regression and rank correlation for relating job features to run times.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::exact::per_hybrid;
use crate::matrix::IntMatrix;

/// Structural invariants of a job matrix, plus its measured time if known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFeatures {
    /// Permanent.
    pub p: i128,
    /// Absolute value of the determinant.
    pub abs_d: i128,
    /// Number of nonzero entries.
    pub s: usize,
    /// Population variance of the row sums.
    pub v1: f64,
    /// Population variance of the column sums.
    pub v2: f64,
    pub time: Option<f64>,
}

impl MatrixFeatures {
    /// Predictor values in the order P, |D|, S, V1, V2.
    pub fn predictors(&self) -> [f64; 5] {
        [self.p as f64, self.abs_d as f64, self.s as f64, self.v1, self.v2]
    }
}

pub const FEATURE_NAMES: [&str; 5] = ["P", "absD", "S", "V1", "V2"];

fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

pub fn extract_features(a: &IntMatrix) -> Result<MatrixFeatures> {
    let n = a.order();
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j) as f64;
            rows[i] += v;
            cols[j] += v;
        }
    }
    Ok(MatrixFeatures {
        p: per_hybrid(a)?,
        abs_d: determinant(a)?.checked_abs().ok_or(Error::Overflow("absolute value"))?,
        s: a.nnz(),
        v1: population_variance(&rows),
        v2: population_variance(&cols),
        time: None,
    })
}

/// Exact integer determinant by Bareiss fraction-free elimination.
pub fn determinant(a: &IntMatrix) -> Result<i128> {
    let n = a.order();
    if n == 0 {
        return Ok(1);
    }
    let mut m: Vec<i128> = a.as_slice().to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    let ovf = |what| Error::Overflow(what);
    for k in 0..n - 1 {
        if m[k * n + k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| m[i * n + k] != 0) else {
                return Ok(0);
            };
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            sign = -sign;
        }
        let pivot = m[k * n + k];
        for i in k + 1..n {
            for j in k + 1..n {
                let t = pivot
                    .checked_mul(m[i * n + j])
                    .and_then(|x| x.checked_sub(m[i * n + k].checked_mul(m[k * n + j])?))
                    .ok_or_else(|| ovf("multiplication"))?;
                m[i * n + j] = t / prev;
            }
            m[i * n + k] = 0;
        }
        prev = pivot;
    }
    Ok(sign * m[n * n - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    /// Intercept first, then one coefficient per entry of `selected`.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    /// Residual sum of squares over residual degrees of freedom (0 when none).
    pub residual_variance: f64,
    /// Indices of the predictor columns in the model.
    pub selected: Vec<usize>,
    /// Set when the response has zero spread and R² was defined as 0.
    pub constant_response: bool,
}

struct Fit {
    coefficients: Vec<f64>,
    sse: f64,
    sst: f64,
    ssr: f64,
}

fn fit_columns(columns: &[Vec<f64>], selected: &[usize], y: &[f64]) -> Result<Fit> {
    let n = y.len();
    let p = selected.len() + 1;
    if n < p {
        return Err(Error::Invalid(format!(
            "{n} observations cannot fit {p} parameters"
        )));
    }
    for &c in selected {
        if columns[c].len() != n {
            return Err(Error::Invalid(format!(
                "predictor {c} has {} values, response has {n}",
                columns[c].len()
            )));
        }
    }
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[selected[j - 1]][i] });
    let yv = DVector::from_column_slice(y);

    // column scaling keeps the rank test meaningful for predictors of very
    // different magnitudes (permanents next to variances)
    let scales: Vec<f64> = (0..p)
        .map(|j| x.column(j).amax().max(f64::MIN_POSITIVE))
        .collect();
    let xs = DMatrix::from_fn(n, p, |i, j| x[(i, j)] / scales[j]);
    let qr = xs.clone().qr();
    let r = qr.r();
    let rmax = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..p).any(|j| r[(j, j)].abs() <= 1e-10 * rmax.max(1.0)) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * &yv;
    let beta_s = r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)?;
    let coefficients: Vec<f64> = (0..p).map(|j| beta_s[j] / scales[j]).collect();

    let fitted = &xs * &beta_s;
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let ssr = fitted.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let sse = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    Ok(Fit {
        coefficients,
        sse,
        sst,
        ssr,
    })
}

fn finish(fit: Fit, selected: Vec<usize>, n: usize) -> RegressionFit {
    let df = n.saturating_sub(selected.len() + 1);
    let constant_response = fit.sst == 0.0;
    RegressionFit {
        coefficients: fit.coefficients,
        r_squared: if constant_response {
            0.0
        } else {
            (fit.ssr / fit.sst).clamp(0.0, 1.0)
        },
        residual_variance: if df == 0 { 0.0 } else { fit.sse / df as f64 },
        selected,
        constant_response,
    }
}

/// Least squares with an intercept on all predictor columns.
pub fn ols_fit(columns: &[Vec<f64>], y: &[f64]) -> Result<RegressionFit> {
    let selected: Vec<usize> = (0..columns.len()).collect();
    let fit = fit_columns(columns, &selected, y)?;
    Ok(finish(fit, selected, y.len()))
}

pub const DEFAULT_ALPHA: f64 = 0.05;

/// p-value of the partial F test for adding one predictor.
fn partial_f_pvalue(sse_reduced: f64, sse_full: f64, sst: f64, df: usize) -> f64 {
    let gain = sse_reduced - sse_full;
    let scale = sst.max(f64::MIN_POSITIVE);
    if gain <= 1e-12 * scale || df == 0 {
        return 1.0;
    }
    if sse_full <= 1e-14 * scale {
        return 0.0;
    }
    let f = gain / (sse_full / df as f64);
    match FisherSnedecor::new(1.0, df as f64) {
        Ok(dist) => dist.sf(f),
        Err(_) => 1.0,
    }
}

/// Forward selection: repeatedly adds the predictor whose partial F test has
/// the smallest p-value, while that p-value is below `alpha`.
pub fn stepwise_select(columns: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<RegressionFit> {
    let n = y.len();
    let mut selected: Vec<usize> = Vec::new();
    let mut current = fit_columns(columns, &selected, y)?;
    loop {
        let mut best: Option<(f64, usize, Fit)> = None;
        for c in (0..columns.len()).filter(|c| !selected.contains(c)) {
            let mut trial = selected.clone();
            trial.push(c);
            let fit = match fit_columns(columns, &trial, y) {
                Ok(f) => f,
                Err(Error::RankDeficient) | Err(Error::Invalid(_)) => continue,
                Err(e) => return Err(e),
            };
            let df = n.saturating_sub(trial.len() + 1);
            let p = partial_f_pvalue(current.sse, fit.sse, current.sst, df);
            if best.as_ref().is_none_or(|(bp, _, _)| p < *bp) {
                best = Some((p, c, fit));
            }
        }
        match best {
            Some((p, c, fit)) if p < alpha => {
                selected.push(c);
                current = fit;
            }
            _ => break,
        }
    }
    Ok(finish(current, selected, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallTau {
    pub tau: f64,
    /// Two-sided, from the normal approximation.
    pub p_value: f64,
    /// Concordant minus discordant pairs.
    pub s: i64,
}

/// Number of pairs within groups of equal adjacent values in a sorted slice.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> i64 {
    let mut total = 0i64;
    let mut run = 1i64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts in place and returns the number of inversions.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as i64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Variance of tau under independence, large-sample form.
pub fn tau_null_variance(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (2.0 * n + 5.0) / (9.0 * n * (n - 1.0))
}

/// Two-sided normal-approximation p-value for an observed tau.
pub fn tau_p_value(tau: f64, n: usize) -> f64 {
    let z = tau.abs() / tau_null_variance(n).sqrt();
    erfc(z / std::f64::consts::SQRT_2)
}

/// Kendall's tau with tie corrections in `O(n log n)`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<KendallTau> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Invalid(format!(
            "series lengths differ ({n} vs {})",
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::Invalid("need at least two observations".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Invalid("series contain NaN".into()));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let total = (n as i64) * (n as i64 - 1) / 2;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let t = tied_pairs(&xs);
    let joint = tied_pairs(&pairs);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = merge_count(&mut ys, &mut Vec::with_capacity(n));
    let u = tied_pairs(&ys);

    if t == total || u == total {
        return Err(Error::UndefinedCorrelation("a series has no distinct values"));
    }
    let s = total - t - u + joint - 2 * discordant;
    let tau = (s as f64 / ((total - t) as f64 * (total - u) as f64).sqrt()).clamp(-1.0, 1.0);
    Ok(KendallTau {
        tau,
        p_value: tau_p_value(tau, n),
        s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub against: String,
    pub tau: f64,
    pub p_value: f64,
}

/// Rank agreement of run times with exact values and with estimates.
pub fn rank_correlation_study(times: &[f64], values: &[f64], estimates: &[f64]) -> Result<Vec<CorrelationRow>> {
    let n = times.len();
    if values.len() != n || estimates.len() != n {
        return Err(Error::Invalid("times, values and estimates differ in length".into()));
    }
    if n < 10 {
        return Err(Error::Invalid(format!("need at least 10 jobs, got {n}")));
    }
    [("exact", values), ("estimate", estimates)]
        .into_iter()
        .map(|(name, series)| {
            let k = kendall_tau(times, series)?;
            Ok(CorrelationRow {
                against: name.to_string(),
                tau: k.tau,
                p_value: k.p_value,
            })
        })
        .collect()
}

/// One row of an observation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub id: usize,
    #[serde(rename = "T")]
    pub time: Option<f64>,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "absD")]
    pub abs_d: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "V1")]
    pub v1: f64,
    #[serde(rename = "V2")]
    pub v2: f64,
    #[serde(rename = "AP")]
    pub ap: Option<f64>,
}

impl Observation {
    pub fn from_features(id: usize, f: &MatrixFeatures, estimate: Option<f64>) -> Self {
        Self {
            id,
            time: f.time,
            p: f.p as f64,
            abs_d: f.abs_d as f64,
            s: f.s as f64,
            v1: f.v1,
            v2: f.v2,
            ap: estimate,
        }
    }

    pub fn predictors(&self) -> [f64; 5] {
        [self.p, self.abs_d, self.s, self.v1, self.v2]
    }
}

pub fn write_observations_csv(rows: &[Observation]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Invalid(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn parse_observations_csv(text: &str) -> Result<Vec<Observation>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .enumerate()
        .map(|(k, row)| {
            row.map_err(|e| Error::Parse {
                line: k + 2,
                msg: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_of_small_matrices() {
        let f = extract_features(&IntMatrix::identity(3)).unwrap();
        assert_eq!((f.p, f.abs_d, f.s, f.v1, f.v2), (1, 1, 3, 0.0, 0.0));
        let f = extract_features(&IntMatrix::from_fn(3, |_, _| 1)).unwrap();
        assert_eq!((f.p, f.abs_d, f.s), (6, 0, 9));
        let a = IntMatrix::from_rows(&[vec![1, 1, 0], vec![1, 1, 1], vec![0, 1, 1]]).unwrap();
        let f = extract_features(&a).unwrap();
        assert_eq!((f.p, f.abs_d, f.s), (3, 1, 7));
        assert!((f.v1 - 2.0 / 9.0).abs() < 1e-15);
        assert!((f.v2 - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn determinant_needs_row_swap() {
        let a = IntMatrix::from_rows(&[vec![0, 2, 1], vec![3, 0, 0], vec![1, 1, 4]]).unwrap();
        // expansion along row 1: -3 * (2*4 - 1*1)
        assert_eq!(determinant(&a).unwrap(), -21);
    }

    #[test]
    fn exact_line() {
        let x = vec![vec![0.0, 1.0, 2.0, 3.0, 4.0]];
        let y: Vec<f64> = x[0].iter().map(|v| 2.0 + 3.0 * v).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response_has_zero_r2() {
        let fit = ols_fit(&[vec![1.0, 2.0, 3.0]], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(fit.r_squared, 0.0);
        assert!(fit.constant_response);
    }

    #[test]
    fn collinear_predictors_rejected() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        assert_eq!(ols_fit(&[a, b], &[1.0, 3.0, 2.0, 5.0]), Err(Error::RankDeficient));
    }

    #[test]
    fn stepwise_picks_both_exact_columns() {
        let a: Vec<f64> = (0..20).map(|i| (i * 7 % 11) as f64).collect();
        let b: Vec<f64> = (0..20).map(|i| (i * 5 % 13) as f64).collect();
        let c: Vec<f64> = (0..20).map(|i| ((i * 3 + 1) % 7) as f64).collect();
        let y: Vec<f64> = (0..20).map(|i| 1.0 + 2.0 * a[i] - b[i]).collect();
        let fit = stepwise_select(&[a, c, b], &y, DEFAULT_ALPHA).unwrap();
        let mut sel = fit.selected.clone();
        sel.sort();
        assert_eq!(sel, vec![0, 2]);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_examples() {
        let k = kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(k.tau, 1.0);
        let k = kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(k.tau, -1.0);
        let k = kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(k.s, 4);
        assert!((k.tau - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tau_with_ties() {
        // one tied pair in each series; the four remaining pairs are concordant
        let k = kendall_tau(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(k.s, 4);
        assert!((k.tau - 4.0 / 5.0).abs() < 1e-15);
        assert!(matches!(
            kendall_tau(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn study_rows_coincide_for_equal_inputs() {
        let t: Vec<f64> = (0..12).map(|i| (i * 5 % 12) as f64).collect();
        let rows = rank_correlation_study(&t, &t, &t).unwrap();
        assert_eq!(rows[0].tau, 1.0);
        assert_eq!((rows[0].tau, rows[0].p_value), (rows[1].tau, rows[1].p_value));
        assert!(rows[0].p_value < 1e-4);
        assert!(rank_correlation_study(&t[..5], &t[..5], &t[..5]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            Observation {
                id: 0,
                time: Some(12.5),
                p: 1211353365376.0,
                abs_d: 0.0,
                s: 240.0,
                v1: 0.25,
                v2: 0.5,
                ap: Some(1.2e12),
            },
            Observation {
                id: 1,
                time: None,
                p: 3.0,
                abs_d: 1.0,
                s: 7.0,
                v1: 0.0,
                v2: 0.0,
                ap: None,
            },
        ];
        let text = write_observations_csv(&rows).unwrap();
        assert!(text.starts_with("id,T,P,absD,S,V1,V2,AP\n"));
        assert_eq!(parse_observations_csv(&text).unwrap(), rows);
    }
}
