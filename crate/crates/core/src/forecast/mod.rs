//! Spatial-lag regression of monthly call rates and forward forecasting.
//!
//! The model is λ_ℓ = ρWλ_ℓ + c + β₀λ_{ℓ−1} + Σ_t β_tᵀX_{ℓ−t} + ε.
//! For a fixed ρ the regression of (I − ρW)λ_ℓ on the remaining columns
//! is ordinary least squares, so ρ is profiled out.

mod weights;

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::interp::CensusTensor;
use crate::workload::WorkloadPanel;
pub use weights::{build_weights, SpatialWeights};

/// Atom × month matrix of rates (or workloads), row-major by atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    pub n_atoms: usize,
    pub first_month: YearMonth,
    pub n_months: usize,
    pub values: Vec<f64>,
}

impl RateMatrix {
    pub fn zeros(n_atoms: usize, first_month: YearMonth, n_months: usize) -> Self {
        RateMatrix {
            n_atoms,
            first_month,
            n_months,
            values: vec![0.0; n_atoms * n_months],
        }
    }

    /// Counts N_iℓ as the rate proxy.
    pub fn from_counts(panel: &WorkloadPanel) -> Self {
        RateMatrix {
            n_atoms: panel.n_atoms,
            first_month: panel.first_month,
            n_months: panel.n_months,
            values: panel.counts.iter().map(|&c| c as f64).collect(),
        }
    }

    pub fn from_columns(first_month: YearMonth, cols: &[Vec<f64>]) -> Self {
        let n_atoms = cols.first().map_or(0, |c| c.len());
        let mut m = RateMatrix::zeros(n_atoms, first_month, cols.len());
        for (l, c) in cols.iter().enumerate() {
            m.set_column(l, c);
        }
        m
    }

    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.values[i * self.n_months + l]
    }

    pub fn set(&mut self, i: usize, l: usize, v: f64) {
        self.values[i * self.n_months + l] = v;
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        (0..self.n_atoms).map(|i| self.get(i, l)).collect()
    }

    pub fn set_column(&mut self, l: usize, c: &[f64]) {
        for (i, &v) in c.iter().enumerate() {
            self.set(i, l, v);
        }
    }

    pub fn month(&self, l: usize) -> YearMonth {
        self.first_month.offset(l as i64)
    }

    pub fn scaled(&self, s: f64) -> RateMatrix {
        RateMatrix {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, w: W, value_name: &str) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["atom_id", "month", value_name])?;
        for i in 0..self.n_atoms {
            for l in 0..self.n_months {
                wtr.write_record([i.to_string(), self.month(l).to_string(), self.get(i, l).to_string()])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<rate csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = || Error::Parse {
                path: "<rate csv>".into(),
                message: format!("line {}: malformed row", k + 2),
            };
            let i: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let ym: YearMonth = rec.get(1).ok_or_else(bad)?.parse()?;
            let v: f64 = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            rows.push((i, ym, v));
        }
        let first = rows.iter().map(|r| r.1).min().ok_or_else(|| Error::InvalidInput("empty rate csv".into()))?;
        let last = rows.iter().map(|r| r.1).max().expect("non-empty");
        let n_atoms = rows.iter().map(|r| r.0.saturating_add(1)).max().expect("non-empty");
        let n_months = usize::try_from(last.index() - first.index() + 1).unwrap_or(usize::MAX);
        if n_atoms.checked_mul(n_months) != Some(rows.len()) {
            return Err(Error::InvalidInput("rate csv is not a complete atom × month grid".into()));
        }
        let mut m = RateMatrix::zeros(n_atoms, first, n_months);
        let mut seen = vec![false; rows.len()];
        for (i, ym, v) in rows {
            let l = (ym.index() - first.index()) as usize;
            if std::mem::replace(&mut seen[i * n_months + l], true) {
                return Err(Error::InvalidInput(format!("rate csv lists atom {i} month {ym} twice")));
            }
            m.set(i, l, v);
        }
        Ok(m)
    }
}

/// Future rates λ̂ for the forecast months.
pub type RateSurface = RateMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for RhoGrid {
    fn default() -> Self {
        RhoGrid {
            lo: -0.99,
            hi: 0.99,
            step: 0.01,
        }
    }
}

impl RhoGrid {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.lo > -1.0 && self.hi < 1.0 && self.lo <= self.hi) {
            v.push(format!("rho grid [{}, {}] must lie inside (-1, 1)", self.lo, self.hi));
        }
        if !(self.step > 0.0) {
            v.push(format!("rho grid step must be > 0, got {}", self.step));
        }
        v
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| ((self.lo + k as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Census lag order p.
    pub p: usize,
    pub rho_grid: RhoGrid,
    /// Move from the best grid point to the exact minimizer of the
    /// (quadratic) profiled RSS inside the grid interval.
    pub refine: bool,
    /// Drop columns that are linear combinations of earlier ones instead
    /// of failing; their coefficients are reported as zero.
    pub drop_aliased: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            p: 1,
            rho_grid: RhoGrid::default(),
            refine: true,
            drop_aliased: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefStat {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub t_value: Option<f64>,
    pub p_value: Option<f64>,
    /// Dropped as collinear with earlier columns.
    #[serde(default)]
    pub aliased: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub n_obs: usize,
    pub rss: f64,
    pub rss_at_zero: f64,
    pub r_squared: f64,
    pub morans_i: f64,
    pub coefficients: Vec<CoefStat>,
    /// RSS at every grid point.
    pub rho_profile: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialLagModel {
    pub rho: f64,
    pub beta0: f64,
    /// beta[t-1][m]: coefficient of factor m at lag t.
    pub beta: Vec<Vec<f64>>,
    pub intercept: f64,
    pub p: usize,
    pub factor_names: Vec<String>,
    pub rho_grid: RhoGrid,
    pub diagnostics: FitDiagnostics,
}

fn column_names(factors: &[String], p: usize) -> Vec<String> {
    let mut names = vec!["intercept".to_string(), "lambda_lag1".to_string()];
    for t in 1..=p {
        names.extend(factors.iter().map(|f| format!("{f}_lag{t}")));
    }
    names
}

/// Position of month `ym` in the tensor, or an error naming it.
fn tensor_month(x: &CensusTensor, ym: YearMonth) -> Result<usize> {
    x.month_pos(ym)
        .ok_or_else(|| Error::InvalidInput(format!("census tensor has no data for {ym}")))
}

struct Design {
    x: DMatrix<f64>,
    y0: DVector<f64>,
    y1: DVector<f64>,
}

fn assemble(lambda: &RateMatrix, x: &CensusTensor, w: &SpatialWeights, p: usize) -> Result<Design> {
    let (ni, nl, nm) = (lambda.n_atoms, lambda.n_months, x.n_factors());
    if x.n_atoms != ni || w.n != ni {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: rates {ni} atoms, census {} atoms, weights {}",
            x.n_atoms, w.n
        )));
    }
    let n = ni * (nl - p);
    let k = 2 + p * nm;
    let mut xm = DMatrix::zeros(n, k);
    let mut y0 = DVector::zeros(n);
    let mut y1 = DVector::zeros(n);
    let mut nulls = BTreeSet::new();
    for l in p..nl {
        let lam = lambda.column(l);
        let wl = w.mul(&lam);
        let pos: Vec<usize> = (1..=p)
            .map(|t| tensor_month(x, lambda.month(l - t)))
            .collect::<Result<_>>()?;
        for i in 0..ni {
            let r = (l - p) * ni + i;
            y0[r] = lam[i];
            y1[r] = wl[i];
            xm[(r, 0)] = 1.0;
            xm[(r, 1)] = lambda.get(i, l - 1);
            for (t, &lp) in pos.iter().enumerate() {
                for m in 0..nm {
                    let v = x.get(i, lp, m);
                    if v.is_nan() {
                        nulls.insert((i, m));
                    }
                    xm[(r, 2 + t * nm + m)] = v;
                }
            }
        }
    }
    if !nulls.is_empty() {
        let shown: Vec<String> = nulls
            .iter()
            .take(20)
            .map(|&(i, m)| format!("atom {i}/{}", x.factor_names[m]))
            .collect();
        let more = if nulls.len() > 20 {
            format!(" and {} more", nulls.len() - 20)
        } else {
            String::new()
        };
        return Err(Error::NullCensus(format!("{}{more}", shown.join(", "))));
    }
    Ok(Design { x: xm, y0, y1 })
}

/// Thin QR of a full-rank column subset.
struct Ols {
    x: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl Ols {
    fn new(x: DMatrix<f64>) -> Self {
        let qr = x.clone().qr();
        Ols { q: qr.q(), r: qr.r(), x }
    }

    /// Columns whose component orthogonal to the earlier ones is negligible.
    fn aliased(&self) -> Vec<usize> {
        (0..self.x.ncols())
            .filter(|&j| {
                let norm = self.x.column(j).norm();
                norm == 0.0 || self.r[(j, j)].abs() <= 1e-9 * norm
            })
            .collect()
    }

    fn coef(&self, y: &DVector<f64>) -> DVector<f64> {
        let qty = self.q.transpose() * y;
        self.r.solve_upper_triangular(&qty).expect("full-rank R")
    }

    fn residual(&self, y: &DVector<f64>) -> DVector<f64> {
        y - &self.x * self.coef(y)
    }

    /// diag((XᵀX)⁻¹).
    fn unscaled_variances(&self) -> Vec<f64> {
        let k = self.r.ncols();
        let rinv = self
            .r
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .expect("full-rank R");
        (0..k).map(|j| rinv.row(j).norm_squared()).collect()
    }
}

/// Fits the model on rates `lambda` (atoms × months) with census tensor `x`.
pub fn fit(lambda: &RateMatrix, x: &CensusTensor, w: &SpatialWeights, opts: &FitOptions) -> Result<SpatialLagModel> {
    let p = opts.p;
    if p == 0 {
        return Err(Error::InvalidInput("lag order p must be at least 1".into()));
    }
    if lambda.n_months < p + 2 {
        return Err(Error::InvalidInput(format!(
            "need at least {} months for lag order {p}, have {}",
            p + 2,
            lambda.n_months
        )));
    }
    let problems = opts.rho_grid.validate();
    if !problems.is_empty() {
        return Err(Error::InvalidInput(problems.join("; ")));
    }
    let names = column_names(&x.factor_names, p);
    let Design { x: xm, y0, y1 } = assemble(lambda, x, w, p)?;
    let n = xm.nrows();

    let full = Ols::new(xm.clone());
    let aliased = full.aliased();
    let (ols, kept): (Ols, Vec<usize>) = if aliased.is_empty() {
        (full, (0..xm.ncols()).collect())
    } else if opts.drop_aliased {
        let kept: Vec<usize> = (0..xm.ncols()).filter(|j| !aliased.contains(j)).collect();
        if kept.is_empty() {
            return Err(Error::RankDeficient(names));
        }
        (Ols::new(xm.select_columns(&kept)), kept)
    } else {
        return Err(Error::RankDeficient(aliased.iter().map(|&j| names[j].clone()).collect()));
    };
    if n <= kept.len() {
        return Err(Error::InvalidInput(format!(
            "{n} observations cannot identify {} coefficients",
            kept.len()
        )));
    }

    // RSS(ρ) = a − 2bρ + cρ²
    let e0 = ols.residual(&y0);
    let e1 = ols.residual(&y1);
    let (a, b, c) = (e0.norm_squared(), e0.dot(&e1), e1.norm_squared());
    let rss = |rho: f64| (a - 2.0 * b * rho + c * rho * rho).max(0.0);

    let grid = opts.rho_grid.points();
    let profile: Vec<(f64, f64)> = grid.iter().map(|&r| (r, rss(r))).collect();
    let scale = y0.norm_squared().max(y1.norm_squared()).max(f64::MIN_POSITIVE);
    let tie = 1e-12 * scale;
    let min_rss = profile.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let mut rho = profile
        .iter()
        .filter(|x| x.1 <= min_rss + tie)
        .map(|x| x.0)
        .min_by(|p, q| p.abs().total_cmp(&q.abs()))
        .expect("non-empty grid");
    // c ≈ 0 means Wλ lies in the regressor span and ρ is not identified.
    if opts.refine && c > 1e-12 * y1.norm_squared() {
        let v = (b / c).clamp(opts.rho_grid.lo, opts.rho_grid.hi);
        if rss(v) < rss(rho) - tie {
            rho = v;
        }
    }

    let y = &y0 - &y1 * rho;
    let coef_kept = ols.coef(&y);
    let resid = &y - &ols.x * &coef_kept;
    let rss_hat = resid.norm_squared();
    let mut coef = vec![0.0; names.len()];
    for (pos, &j) in kept.iter().enumerate() {
        coef[j] = coef_kept[pos];
    }

    let df = n as f64 - kept.len() as f64 - 1.0;
    let sigma2 = rss_hat / df;
    let vars = ols.unscaled_variances();
    let tdist = (df > 0.0).then(|| StudentsT::new(0.0, 1.0, df).ok()).flatten();
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(j, name)| match kept.iter().position(|&k| k == j) {
            Some(pos) => {
                let se = (sigma2 * vars[pos]).sqrt();
                let t = coef[j] / se;
                let finite = |v: f64| v.is_finite().then_some(v);
                CoefStat {
                    name: name.clone(),
                    estimate: coef[j],
                    std_error: finite(se),
                    t_value: finite(t),
                    p_value: tdist.as_ref().and_then(|d| finite(2.0 * (1.0 - d.cdf(t.abs())))),
                    aliased: false,
                }
            }
            None => CoefStat {
                name: name.clone(),
                estimate: 0.0,
                std_error: None,
                t_value: None,
                p_value: None,
                aliased: true,
            },
        })
        .collect();

    let mean = y0.mean();
    let tss: f64 = y0.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss_hat / tss } else { 1.0 };
    let morans_i = morans_i(resid.as_slice(), lambda.n_atoms, w);

    let nm = x.n_factors();
    let beta = (0..p).map(|t| coef[2 + t * nm..2 + (t + 1) * nm].to_vec()).collect();
    Ok(SpatialLagModel {
        rho,
        beta0: coef[1],
        beta,
        intercept: coef[0],
        p,
        factor_names: x.factor_names.clone(),
        rho_grid: opts.rho_grid,
        diagnostics: FitDiagnostics {
            n_obs: n,
            rss: rss_hat,
            rss_at_zero: rss(0.0),
            r_squared,
            morans_i,
            coefficients,
            rho_profile: profile,
        },
    })
}

/// Moran's I pooled over months; `resid` is stacked month by month.
pub fn morans_i(resid: &[f64], n_atoms: usize, w: &SpatialWeights) -> f64 {
    if n_atoms == 0 || resid.is_empty() {
        return 0.0;
    }
    let n_months = resid.len() / n_atoms;
    let mean = resid.iter().sum::<f64>() / resid.len() as f64;
    let z: Vec<f64> = resid.iter().map(|r| r - mean).collect();
    let denom: f64 = z.iter().map(|v| v * v).sum();
    let s0 = w.total_weight() * n_months as f64;
    if denom == 0.0 || s0 == 0.0 {
        return 0.0;
    }
    let num: f64 = z
        .chunks(n_atoms)
        .map(|zl| {
            let wz = w.mul(zl);
            zl.iter().zip(wz).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum();
    (resid.len() as f64 / s0) * num / denom
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorExtension {
    /// Least-squares line through the annual values.
    #[default]
    Linear,
    HoldLast,
}

/// Extends the tensor through `through`, one value per year, from the
/// annual means of the existing months.
pub fn extend_factors(x: &CensusTensor, through: YearMonth, mode: FactorExtension) -> CensusTensor {
    let last = x.first_month.offset(x.n_months as i64 - 1);
    if through <= last || x.n_months == 0 {
        return x.clone();
    }
    let years: Vec<i32> = (x.first_month.year..=last.year).collect();
    let n_months = (through.index() - x.first_month.index() + 1) as usize;
    let mut out = CensusTensor::zeros(x.n_atoms, x.first_month, n_months, x.factor_names.clone());
    for i in 0..x.n_atoms {
        for m in 0..x.n_factors() {
            let annual: Vec<(f64, f64)> = years
                .iter()
                .map(|&y| {
                    let vals: Vec<f64> = (0..x.n_months)
                        .filter(|&l| x.first_month.offset(l as i64).year == y)
                        .map(|l| x.get(i, l, m))
                        .collect();
                    (y as f64, vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect();
            let (slope, icpt) = match mode {
                FactorExtension::Linear if annual.len() >= 2 => {
                    let k = annual.len() as f64;
                    let mx = annual.iter().map(|a| a.0).sum::<f64>() / k;
                    let my = annual.iter().map(|a| a.1).sum::<f64>() / k;
                    let sxy: f64 = annual.iter().map(|a| (a.0 - mx) * (a.1 - my)).sum();
                    let sxx: f64 = annual.iter().map(|a| (a.0 - mx) * (a.0 - mx)).sum();
                    let s = sxy / sxx;
                    (s, my - s * mx)
                }
                _ => (0.0, annual.last().expect("at least one year").1),
            };
            for l in 0..n_months {
                let v = if l < x.n_months {
                    x.get(i, l, m)
                } else {
                    let y = x.first_month.offset(l as i64).year as f64;
                    if slope == 0.0 {
                        icpt
                    } else {
                        icpt + slope * y
                    }
                };
                out.set(i, l, m, v);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictOptions {
    pub horizon: usize,
    pub clamp_negative: bool,
    pub extension: FactorExtension,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            horizon: 12,
            clamp_negative: true,
            extension: FactorExtension::default(),
        }
    }
}

impl SpatialLagModel {
    /// c + β₀λ_prev + Σ_t β_tᵀX at lagged month positions `lags[t-1]`.
    fn rhs(&self, prev: &[f64], x: &CensusTensor, lags: &[usize]) -> Vec<f64> {
        (0..prev.len())
            .map(|i| {
                let mut v = self.intercept + self.beta0 * prev[i];
                for (t, &lp) in lags.iter().enumerate() {
                    for (m, b) in self.beta[t].iter().enumerate() {
                        if *b != 0.0 {
                            v += b * x.get(i, lp, m);
                        }
                    }
                }
                v
            })
            .collect()
    }

    fn lag_positions(&self, x: &CensusTensor, month: YearMonth) -> Result<Vec<usize>> {
        (1..=self.p).map(|t| tensor_month(x, month.offset(-(t as i64)))).collect()
    }

    /// Unclamped prediction for month position `l` of `history` from the
    /// observed λ_{ℓ−1}.
    pub fn one_step(&self, history: &RateMatrix, x: &CensusTensor, w: &SpatialWeights, l: usize) -> Result<Vec<f64>> {
        if l == 0 || l >= history.n_months {
            return Err(Error::InvalidInput(format!("month position {l} has no predecessor in history")));
        }
        let lags = self.lag_positions(x, history.month(l))?;
        let b = self.rhs(&history.column(l - 1), x, &lags);
        w.solve_lag(self.rho, &b)
    }
}

/// Iterates the fitted equation for `opts.horizon` months after the last
/// month of `history`.
pub fn predict(
    model: &SpatialLagModel,
    history: &RateMatrix,
    x: &CensusTensor,
    w: &SpatialWeights,
    opts: &PredictOptions,
) -> Result<RateSurface> {
    if history.n_months == 0 {
        return Err(Error::InvalidInput("empty history".into()));
    }
    if x.factor_names != model.factor_names {
        return Err(Error::InvalidInput("census factors differ from the fitted model".into()));
    }
    let start = history.month(history.n_months - 1).offset(1);
    let through = start.offset(opts.horizon as i64 - 2);
    let xe = extend_factors(x, through, opts.extension);
    let mut out = RateMatrix::zeros(history.n_atoms, start, opts.horizon);
    let mut prev = history.column(history.n_months - 1);
    for h in 0..opts.horizon {
        let month = start.offset(h as i64);
        let lags = model.lag_positions(&xe, month)?;
        let b = model.rhs(&prev, &xe, &lags);
        let mut next = w.solve_lag(model.rho, &b)?;
        if opts.clamp_negative {
            for v in &mut next {
                *v = v.max(0.0);
            }
        }
        if let Some(bad) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular(format!("non-finite forecast at atom {bad}, month {month}")));
        }
        out.set_column(h, &next);
        prev = next;
    }
    Ok(out)
}

/// ŵ = λ̂·τ.
pub fn forecast_workload(rates: &RateSurface, tau_hours: f64) -> RateMatrix {
    rates.scaled(tau_hours)
}
