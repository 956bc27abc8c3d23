//! Grid scans, log-log growth fits and envelope diagnostics.
//!
//! Scans evaluate grid points in parallel but every row carries its grid
//! index and rows are emitted in index order, so a scan's CSV depends only
//! on its [`ScanSpec`] (including the seed), not on thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frac::{parse_alpha, Alpha};
use crate::fracsum::{
    lemma33_report, prop31_report, rcount_report, BoundReport, MinSumParams, PsiSumParams,
    DEFAULT_EPSILON,
};
use crate::lattice::{error_term, error_term_real};
use crate::report::Table;
use crate::scalar::{CompensatedSum, Real};
use crate::sieve::ArithTables;
use crate::Fraction;

/// Least-squares line through (log x, log y).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult<F> {
    pub slope: F,
    pub intercept: F,
    pub max_abs_residual: F,
    pub point_count: usize,
    /// Points with y = 0 that were left out.
    pub dropped: usize,
}

pub fn loglog_fit<F: Real>(points: &[(F, F)]) -> Result<FitResult<F>> {
    let mut logs = Vec::with_capacity(points.len());
    let mut dropped = 0;
    for &(x, y) in points {
        if !(x > F::zero()) || !x.is_finite() || !y.is_finite() || y < F::zero() {
            return invalid(format!("loglog_fit: point ({x}, {y}) is not positive"));
        }
        if y == F::zero() {
            dropped += 1;
            continue;
        }
        logs.push((x.ln(), y.ln()));
    }
    if logs.len() < 3 {
        return invalid(format!(
            "loglog_fit: need at least 3 usable points, got {}",
            logs.len()
        ));
    }
    let n = F::from_usize(logs.len()).expect("small");
    let mean_x = logs.iter().map(|p| p.0).collect::<CompensatedSum<F>>().value() / n;
    let mean_y = logs.iter().map(|p| p.1).collect::<CompensatedSum<F>>().value() / n;
    let sxx = logs
        .iter()
        .map(|p| (p.0 - mean_x) * (p.0 - mean_x))
        .collect::<CompensatedSum<F>>()
        .value();
    let sxy = logs
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .collect::<CompensatedSum<F>>()
        .value();
    if sxx == F::zero() {
        return invalid("loglog_fit: all x coordinates coincide");
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let max_abs_residual = logs
        .iter()
        .map(|&(lx, ly)| (ly - (intercept + slope * lx)).abs())
        .fold(F::zero(), F::max);
    Ok(FitResult {
        slope,
        intercept,
        max_abs_residual,
        point_count: logs.len(),
        dropped,
    })
}

/// Where the α values of a scan come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSource {
    /// `p/q`, a decimal, or a named irrational (see [`parse_alpha`]).
    Explicit(String),
    /// Every reduced p/q in (0, 1) with q ≤ max_den.
    Ladder { max_den: u64 },
    /// Uniform reals in (0, 1) from a ChaCha8 stream keyed by the scan seed.
    Random { count: usize },
}

/// M offset of a min-sum series: fixed, or tied to N.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridParam {
    Fixed(u64),
    EqualsN,
}

impl GridParam {
    fn at(self, n: u64) -> u64 {
        match self {
            GridParam::Fixed(v) => v,
            GridParam::EqualsN => n,
        }
    }

    fn label(self) -> String {
        match self {
            GridParam::Fixed(v) => v.to_string(),
            GridParam::EqualsN => "N".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanSpec {
    pub orders: Vec<u64>,
    pub n_grid: Vec<u64>,
    pub ks: Vec<u32>,
    pub qs: Vec<u64>,
    pub alphas: Vec<AlphaSource>,
    pub epsilon: f64,
    pub offsets: Vec<GridParam>,
    pub ls: Vec<GridParam>,
    pub deltas: Vec<f64>,
    /// Grid points with N below this are reported but not fitted.
    pub fit_min_n: u64,
    pub seed: u64,
    pub output: Option<String>,
}

pub const DEFAULT_SEED: u64 = 42;

/// {100, 141, 200, 283, ..., 1600}: 100·√2^i rounded.
pub fn default_order_grid() -> Vec<u64> {
    (0..=8)
        .map(|i| (100.0 * std::f64::consts::SQRT_2.powi(i)).round() as u64)
        .collect()
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            orders: default_order_grid(),
            n_grid: (8..=14).map(|e| 1u64 << e).collect(),
            ks: vec![2, 3],
            qs: vec![1, 6, 30, 210],
            alphas: vec![
                AlphaSource::Explicit("1/7".into()),
                AlphaSource::Explicit("2/11".into()),
                AlphaSource::Explicit("golden".into()),
                AlphaSource::Explicit("invsqrt2".into()),
                AlphaSource::Random { count: 8 },
            ],
            epsilon: DEFAULT_EPSILON,
            offsets: vec![GridParam::Fixed(0), GridParam::EqualsN],
            ls: vec![GridParam::Fixed(4), GridParam::Fixed(64), GridParam::EqualsN],
            deltas: vec![0.25, 1.0 / 16.0, 1.0 / 64.0],
            fit_min_n: 256,
            seed: DEFAULT_SEED,
            output: None,
        }
    }
}

fn check_grid(name: &str, grid: &[u64]) -> Result<()> {
    if grid.is_empty() {
        return invalid(format!("{name} grid is empty"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid(format!("{name} grid is not strictly increasing"));
    }
    Ok(())
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        check_grid("order", &self.orders)?;
        check_grid("N", &self.n_grid)?;
        if self.ks.is_empty() || self.ks.iter().any(|&k| k < 2) {
            return invalid("k list must be nonempty with every k >= 2");
        }
        if self.qs.is_empty() || self.qs.contains(&0) {
            return invalid("q list must be nonempty with every q >= 1");
        }
        if self.alphas.is_empty() {
            return invalid("alpha list is empty");
        }
        Ok(())
    }

    /// Labelled α values in declaration order.
    pub fn resolve_alphas(&self) -> Result<Vec<(String, Alpha<f64>)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        for src in &self.alphas {
            match src {
                AlphaSource::Explicit(s) => {
                    let a = parse_alpha(s, false)?;
                    if !a.is_positive() {
                        return invalid(format!("alpha {s} is not positive"));
                    }
                    out.push((s.clone(), a));
                }
                AlphaSource::Ladder { max_den } => {
                    for q in 2..=*max_den {
                        for p in 1..q {
                            if num_integer::gcd(p, q) == 1 {
                                out.push((format!("{p}/{q}"), Alpha::rational(p as i64, q as i64)));
                            }
                        }
                    }
                }
                AlphaSource::Random { count } => {
                    for i in 0..*count {
                        let mut x: f64 = rng.random();
                        while x == 0.0 {
                            x = rng.random();
                        }
                        out.push((format!("rand{i}"), Alpha::Real(x)));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One fitted series of a bound scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub key: String,
    /// None when fewer than 3 fitted points have a nonzero ratio.
    pub fit: Option<FitResult<f64>>,
    pub max_ratio: f64,
    /// Grid points where the left-hand side vanished exactly.
    pub zero_points: usize,
}

impl SeriesSummary {
    pub fn slope(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.slope)
    }

    /// Slope at most `tol`; a series that is identically zero passes.
    pub fn slope_within(&self, tol: f64) -> bool {
        self.slope().is_none_or(|s| s <= tol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundScan {
    pub reports: Vec<BoundReport<f64>>,
    pub series: Vec<SeriesSummary>,
    pub table: Table,
}

impl BoundScan {
    pub fn max_slope(&self) -> Option<f64> {
        self.series.iter().filter_map(SeriesSummary::slope).reduce(f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    /// |ψ-sum| against the ψ-sum bound.
    Prop31,
    /// min(L, 1/‖nα‖) sum against its bound.
    Lemma33,
    /// near-integer count against its envelope.
    Rcount,
}

type Job<'a> = Box<dyn Fn(u64) -> Result<BoundReport<f64>> + Send + Sync + 'a>;

fn run_series(spec: &ScanSpec, series: Vec<(String, Job<'_>)>) -> Result<BoundScan> {
    let grid = &spec.n_grid;
    let points: Vec<(usize, usize)> = (0..series.len())
        .flat_map(|s| (0..grid.len()).map(move |i| (s, i)))
        .collect();
    let reports: Vec<BoundReport<f64>> = points
        .par_iter()
        .map(|&(s, i)| (series[s].1)(grid[i]))
        .collect::<Result<_>>()?;

    let mut summaries = Vec::with_capacity(series.len());
    let mut table: Option<Table> = None;
    for (s, (key, _)) in series.iter().enumerate() {
        let chunk = &reports[s * grid.len()..(s + 1) * grid.len()];
        let fit_points: Vec<(f64, f64)> = grid
            .iter()
            .zip(chunk)
            .filter(|(&n, _)| n >= spec.fit_min_n)
            .map(|(&n, r)| (n as f64, r.ratio))
            .collect();
        let fit = if fit_points.iter().filter(|p| p.1 != 0.0).count() >= 3 {
            Some(loglog_fit(&fit_points)?)
        } else {
            None
        };
        let max_ratio = chunk.iter().map(|r| r.ratio).fold(0.0, f64::max);
        summaries.push(SeriesSummary {
            key: key.clone(),
            fit,
            max_ratio,
            zero_points: chunk.iter().filter(|r| r.ratio == 0.0).count(),
        });
        for r in chunk {
            let t = table.get_or_insert_with(|| {
                let mut header: Vec<String> = vec!["series".into()];
                header.extend(r.params.iter().map(|p| p.0.to_string()));
                header.push("lhs".into());
                header.extend((1..=r.rhs.terms.len()).map(|i| format!("term{i}")));
                header.extend(["prefactor".into(), "rhs".into(), "ratio".into()]);
                Table::new(header)
            });
            let mut row = vec![key.clone()];
            row.extend(r.params.iter().map(|p| p.1.clone()));
            row.push(r.lhs.to_string());
            row.extend(r.rhs.terms.iter().map(|t| t.1.to_string()));
            row.extend([r.rhs.prefactor.to_string(), r.rhs_total.to_string(), r.ratio.to_string()]);
            t.push_row(row);
        }
    }
    Ok(BoundScan {
        reports,
        series: summaries,
        table: table.unwrap_or_default(),
    })
}

/// Per-series ratios lhs/rhs over the N grid, with a log-log slope per series.
pub fn bound_ratio_scan(
    tables: &ArithTables,
    spec: &ScanSpec,
    family: BoundFamily,
) -> Result<BoundScan> {
    spec.validate()?;
    let alphas = spec.resolve_alphas()?;
    let mut series: Vec<(String, Job<'_>)> = Vec::new();
    match family {
        BoundFamily::Prop31 => {
            if let Some(&q) = spec.qs.iter().find(|&&q| q > tables.limit()) {
                return invalid(format!("q = {q} exceeds table limit {}", tables.limit()));
            }
            for &k in &spec.ks {
                for &q in &spec.qs {
                    for (label, alpha) in &alphas {
                        let key = format!("k={k};q={q};alpha={label}");
                        let alpha = alpha.clone();
                        let eps = spec.epsilon;
                        series.push((
                            key,
                            Box::new(move |n| {
                                let mut p = PsiSumParams::new(n, k, alpha.clone(), q);
                                p.epsilon = eps;
                                prop31_report(tables, &p)
                            }),
                        ));
                    }
                }
            }
        }
        BoundFamily::Lemma33 => {
            for &m in &spec.offsets {
                for &l in &spec.ls {
                    for (label, alpha) in &alphas {
                        let key = format!("M={};L={};alpha={label}", m.label(), l.label());
                        let alpha = alpha.clone();
                        series.push((
                            key,
                            Box::new(move |n| {
                                lemma33_report(&MinSumParams {
                                    m: m.at(n),
                                    n,
                                    l: l.at(n).max(4),
                                    alpha: alpha.clone(),
                                })
                            }),
                        ));
                    }
                }
            }
        }
        BoundFamily::Rcount => {
            for &delta in &spec.deltas {
                for (label, alpha) in &alphas {
                    let key = format!("delta={delta};alpha={label}");
                    let alpha = alpha.clone();
                    series.push((key, Box::new(move |n| rcount_report(0, n, &alpha, delta))));
                }
            }
        }
    }
    run_series(spec, series)
}

/// The k = 2 instance used in the Σ(T) estimate: N = A, q = b, α = d/b².
pub fn quadratic_instance(
    tables: &ArithTables,
    a: u64,
    b: u64,
    d: u64,
    epsilon: f64,
) -> Result<BoundReport<f64>> {
    let alpha = Alpha::Rational(Fraction::new(d.into(), (b * b).into()));
    let mut p = PsiSumParams::new(a, 2, alpha, b);
    p.epsilon = epsilon;
    prop31_report(tables, &p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorGrowthRow {
    pub order: u64,
    pub c: u64,
    pub f: u64,
    pub half_count: u64,
    pub g: f64,
    pub e: f64,
    /// Exact E(T) where it was computed (small T).
    pub e_exact: Option<Fraction>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorGrowthScan {
    pub rows: Vec<ErrorGrowthRow>,
    pub fit: FitResult<f64>,
    /// Largest relative deviation of floating from exact |E(T)|.
    pub max_rel_deviation: Option<f64>,
}

/// Orders up to this bound are cross-checked against exact E(T).
pub const EXACT_CROSSCHECK_MAX_ORDER: u64 = 100;

/// Fits |E(T)| against T over the order grid.
pub fn error_growth_scan(tables: &ArithTables, orders: &[u64]) -> Result<ErrorGrowthScan> {
    check_grid("order", orders)?;
    let mut rows = Vec::with_capacity(orders.len());
    for &order in orders {
        let r = error_term_real::<f64>(tables, order)?;
        let e_exact = if order <= EXACT_CROSSCHECK_MAX_ORDER {
            Some(error_term(tables, order)?.e)
        } else {
            None
        };
        rows.push(ErrorGrowthRow {
            order,
            c: r.c,
            f: r.f,
            half_count: r.half_count,
            g: r.g,
            e: r.e,
            e_exact,
        });
    }
    let fit = loglog_fit(
        &rows
            .iter()
            .map(|r| (r.order as f64, r.e.abs()))
            .collect::<Vec<_>>(),
    )?;
    let max_rel_deviation = rows
        .iter()
        .filter_map(|r| {
            let exact: f64 = crate::frac::ratio_to_real(r.e_exact.as_ref()?);
            Some(if exact == 0.0 {
                r.e.abs()
            } else {
                (r.e.abs() - exact.abs()).abs() / exact.abs()
            })
        })
        .reduce(f64::max);
    Ok(ErrorGrowthScan {
        rows,
        fit,
        max_rel_deviation,
    })
}

impl ErrorGrowthScan {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["T", "C", "F", "Icount", "G", "E", "absE", "E_exact"]);
        for r in &self.rows {
            t.push_row([
                r.order.to_string(),
                r.c.to_string(),
                r.f.to_string(),
                r.half_count.to_string(),
                r.g.to_string(),
                r.e.to_string(),
                r.e.abs().to_string(),
                r.e_exact.as_ref().map(|e| e.to_string()).unwrap_or_default(),
            ]);
        }
        t
    }
}

/// ρ(t) = exp((log t)^{1/2} (log log t)^{5/2}), with the o(1) in the exponent set to 0.
pub fn rho<F: Real>(t: F) -> F {
    let l = t.ln();
    (l.sqrt() * l.ln().powf(F::lit(2.5))).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MertensEnvelopeRow {
    pub t: u64,
    pub m: i64,
    pub scaled: f64,
    pub rho: f64,
}

/// Rows (t, M(t), |M(t)|/√t, ρ(t)); t must be at least 16 so that log log t > 0.
pub fn mertens_envelope_scan(tables: &ArithTables, ts: &[u64]) -> Result<Vec<MertensEnvelopeRow>> {
    ts.iter()
        .map(|&t| {
            if t < 16 {
                return invalid(format!("mertens envelope needs t >= 16, got {t}"));
            }
            let m = tables.mertens(t)?;
            Ok(MertensEnvelopeRow {
                t,
                m,
                scaled: m.unsigned_abs() as f64 / (t as f64).sqrt(),
                rho: rho(t as f64),
            })
        })
        .collect()
}

pub fn mertens_envelope_table(rows: &[MertensEnvelopeRow]) -> Table {
    let mut t = Table::new(["t", "M", "absM_over_sqrt_t", "rho_o1_zero"]);
    for r in rows {
        t.push_row([r.t.to_string(), r.m.to_string(), r.scaled.to_string(), r.rho.to_string()]);
    }
    t
}

/// Partial sums Σ_{n ≤ x} F_β(n) at each x.
pub fn f_beta_partial_sums(tables: &ArithTables, beta: f64, xs: &[u64]) -> Result<Vec<(u64, f64)>> {
    check_grid("x", xs)?;
    let last = *xs.last().expect("nonempty");
    if last > tables.limit() {
        return invalid(format!("x = {last} exceeds table limit {}", tables.limit()));
    }
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = CompensatedSum::new();
    let mut next = xs.iter().peekable();
    for n in 1..=last {
        acc.add(tables.f_beta(n, beta)?);
        if next.peek() == Some(&&n) {
            out.push((n, acc.value()));
            next.next();
        }
    }
    Ok(out)
}

/// JSON-ready summary of a scan run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScanSummary {
    pub fits: BTreeMap<String, FitResult<f64>>,
    pub max_ratios: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, String>,
    pub seed: u64,
    pub grid: Vec<u64>,
}

impl ScanSummary {
    pub fn from_bound_scan(scan: &BoundScan, spec: &ScanSpec) -> Self {
        Self {
            fits: scan
                .series
                .iter()
                .filter_map(|s| Some((s.key.clone(), s.fit.clone()?)))
                .collect(),
            max_ratios: scan.series.iter().map(|s| (s.key.clone(), s.max_ratio)).collect(),
            residuals: BTreeMap::new(),
            seed: spec.seed,
            grid: spec.n_grid.clone(),
        }
    }
}
