//! Parametric curve families and nonlinear least-squares fitting.
//!
//! Four families are supported: a quartic polynomial, a two-term sigmoid sum,
//! a two-component Gaussian mixture, and a degree-2/2 rational. Fits run on an
//! internally rescaled abscissa (x mapped affinely to [0, 1] over the fit
//! range) for conditioning; returned coefficients are mapped back to the
//! caller's x units.

pub mod solver;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use solver::{levenberg_marquardt, LeastSquaresProblem, LmOptions};

/// Denominator magnitudes below this raise [`Error::Pole`].
pub const POLE_EPS: f64 = 1e-12;

/// The four curve families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFamily {
    /// a₀ + a₁x + a₂x² + a₃x³ + a₄x⁴
    Polynomial4,
    /// b₁/(1+exp(−b₂(x−b₃))) + b₄/(1+exp(−b₅(x−b₆)))
    SigmoidSum,
    /// c₁·exp(−(x−c₂)²/(2c₃²)) + c₄·exp(−(x−c₅)²/(2c₆²))
    GaussianMixture,
    /// (d₁x² + d₂x + d₃)/(d₄x² + d₅x + 1)
    Rational22,
}

impl FitFamily {
    /// Number of coefficients of the family.
    pub fn coefficient_len(self) -> usize {
        match self {
            FitFamily::Polynomial4 => 5,
            FitFamily::SigmoidSum => 6,
            FitFamily::GaussianMixture => 6,
            FitFamily::Rational22 => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitFamily::Polynomial4 => "polynomial4",
            FitFamily::SigmoidSum => "sigmoid_sum",
            FitFamily::GaussianMixture => "gaussian_mixture",
            FitFamily::Rational22 => "rational22",
        }
    }

    pub const ALL: [FitFamily; 4] = [
        FitFamily::Polynomial4,
        FitFamily::SigmoidSum,
        FitFamily::GaussianMixture,
        FitFamily::Rational22,
    ];
}

impl std::str::FromStr for FitFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "polynomial4" | "poly4" | "poly" | "polynomial" => Ok(FitFamily::Polynomial4),
            "sigmoid_sum" | "sigmoid" | "sig" => Ok(FitFamily::SigmoidSum),
            "gaussian_mixture" | "gaussian" | "gauss" => Ok(FitFamily::GaussianMixture),
            "rational22" | "rational" | "rat" => Ok(FitFamily::Rational22),
            other => Err(Error::Domain(format!(
                "unknown fit family '{other}' (expected polynomial4, sigmoid_sum, \
                 gaussian_mixture, or rational22)"
            ))),
        }
    }
}

/// A fitted (or hand-built) curve model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub family: FitFamily,
    pub coefficients: Vec<f64>,
}

impl FitModel {
    pub fn new(family: FitFamily, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != family.coefficient_len() {
            return Err(Error::Domain(format!(
                "{} expects {} coefficients, got {}",
                family.name(),
                family.coefficient_len(),
                coefficients.len()
            )));
        }
        Ok(FitModel { family, coefficients })
    }

    /// Evaluates the model at `x`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        evaluate_family(self.family, &self.coefficients, x)
    }

    /// Evaluates the model over `xs`.
    pub fn evaluate_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.evaluate(x)).collect()
    }
}

/// Evaluates `m` at `x` (free-function form of [`FitModel::evaluate`]).
pub fn evaluate(m: &FitModel, x: f64) -> Result<f64> {
    m.evaluate(x)
}

/// Numerically stable logistic function.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn evaluate_family(family: FitFamily, c: &[f64], x: f64) -> Result<f64> {
    debug_assert_eq!(c.len(), family.coefficient_len());
    match family {
        FitFamily::Polynomial4 => {
            Ok(c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * c[4]))))
        }
        FitFamily::SigmoidSum => {
            Ok(c[0] * sigmoid(c[1] * (x - c[2])) + c[3] * sigmoid(c[4] * (x - c[5])))
        }
        FitFamily::GaussianMixture => {
            Ok(gauss_term(c[0], c[1], c[2], x) + gauss_term(c[3], c[4], c[5], x))
        }
        FitFamily::Rational22 => {
            let den = c[3] * x * x + c[4] * x + 1.0;
            if den.abs() < POLE_EPS {
                return Err(Error::Pole(x));
            }
            Ok((c[0] * x * x + c[1] * x + c[2]) / den)
        }
    }
}

/// One Gaussian component; a zero width is treated as the degenerate limit
/// that vanishes (almost everywhere) rather than dividing by zero.
fn gauss_term(amp: f64, center: f64, width: f64, x: f64) -> f64 {
    if width == 0.0 {
        return 0.0;
    }
    let z = (x - center) / width;
    amp * (-0.5 * z * z).exp()
}

/// Analytic jacobian of the model over `xs`: one row per point, one column
/// per coefficient.
pub fn jacobian(m: &FitModel, xs: &[f64]) -> Result<DMatrix<f64>> {
    let c = &m.coefficients;
    let mut out = DMatrix::zeros(xs.len(), m.family.coefficient_len());
    for (row, &x) in xs.iter().enumerate() {
        match m.family {
            FitFamily::Polynomial4 => {
                let mut p = 1.0;
                for col in 0..5 {
                    out[(row, col)] = p;
                    p *= x;
                }
            }
            FitFamily::SigmoidSum => {
                for (col0, off) in [(0usize, 0usize), (3, 3)] {
                    let (amp, rate, center) = (c[off], c[off + 1], c[off + 2]);
                    let s = sigmoid(rate * (x - center));
                    let d = s * (1.0 - s);
                    out[(row, col0)] = s;
                    out[(row, col0 + 1)] = amp * d * (x - center);
                    out[(row, col0 + 2)] = -amp * d * rate;
                }
            }
            FitFamily::GaussianMixture => {
                for (col0, off) in [(0usize, 0usize), (3, 3)] {
                    let (amp, center, width) = (c[off], c[off + 1], c[off + 2]);
                    if width == 0.0 {
                        continue; // degenerate component contributes nothing
                    }
                    let z = (x - center) / width;
                    let e = (-0.5 * z * z).exp();
                    out[(row, col0)] = e;
                    if amp != 0.0 {
                        out[(row, col0 + 1)] = amp * e * (x - center) / (width * width);
                        out[(row, col0 + 2)] =
                            amp * e * (x - center) * (x - center) / (width * width * width);
                    }
                }
            }
            FitFamily::Rational22 => {
                let den = c[3] * x * x + c[4] * x + 1.0;
                if den.abs() < POLE_EPS {
                    return Err(Error::Pole(x));
                }
                let num = c[0] * x * x + c[1] * x + c[2];
                out[(row, 0)] = x * x / den;
                out[(row, 1)] = x / den;
                out[(row, 2)] = 1.0 / den;
                out[(row, 3)] = -num * x * x / (den * den);
                out[(row, 4)] = -num * x / (den * den);
            }
        }
    }
    Ok(out)
}

/// Fit-quality metrics.
///
/// `r_squared` is `None` when the data is constant (zero total sum of
/// squares), where the statistic is undefined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitQuality {
    pub rmse: f64,
    pub r_squared: Option<f64>,
    pub linearity_error_pct: f64,
}

/// RMSE, R², and linearity error (max |residual| as a percentage of
/// `full_scale`) of predictions `y_hats` against observations `ys`.
pub fn fit_metrics(ys: &[f64], y_hats: &[f64], full_scale: f64) -> Result<FitQuality> {
    if ys.len() != y_hats.len() {
        return Err(Error::LengthMismatch(ys.len(), y_hats.len()));
    }
    if ys.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 samples, got {}",
            ys.len()
        )));
    }
    if !(full_scale > 0.0) {
        return Err(Error::Domain(format!(
            "full_scale must be > 0, got {full_scale}"
        )));
    }
    if !ys.iter().chain(y_hats).all(|v| v.is_finite()) {
        return Err(Error::Domain("non-finite value in metric input".into()));
    }
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut max_abs = 0.0f64;
    for (&y, &yh) in ys.iter().zip(y_hats) {
        let r = yh - y;
        ss_res += r * r;
        ss_tot += (y - mean) * (y - mean);
        max_abs = max_abs.max(r.abs());
    }
    let r_squared = if ss_tot == 0.0 { None } else { Some(1.0 - ss_res / ss_tot) };
    Ok(FitQuality {
        rmse: (ss_res / n).sqrt(),
        r_squared,
        linearity_error_pct: 100.0 * max_abs / full_scale,
    })
}

/// Outcome summary of a nonlinear fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub rmse: f64,
    pub r_squared: Option<f64>,
    pub linearity_error_pct: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Options for [`fit_nls`].
#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Full scale used for the linearity-error percentage; defaults to the
    /// span of `ys`.
    pub full_scale: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { lm: LmOptions::default(), full_scale: None }
    }
}

/// Affine abscissa transform u = (x − offset) / span used internally.
#[derive(Clone, Copy, Debug)]
struct XScale {
    offset: f64,
    span: f64,
}

impl XScale {
    fn forward(&self, x: f64) -> f64 {
        (x - self.offset) / self.span
    }
}

/// Maps coefficients expressed in the scaled variable u back to the raw
/// variable x, where x = offset + span·u.
fn unscale_coeffs(family: FitFamily, c: &[f64], sc: &XScale) -> Result<Vec<f64>> {
    let (a, s) = (sc.offset, sc.span);
    match family {
        FitFamily::Polynomial4 => {
            // p(u) = Σ c_i u^i with u = (x-a)/s  ->  q(x) = Σ c_i ((x-a)/s)^i
            let mut out = vec![0.0; 5];
            for (i, &ci) in c.iter().enumerate() {
                let si = s.powi(i as i32);
                for j in 0..=i {
                    out[j] += ci * binomial(i, j) * (-a).powi((i - j) as i32) / si;
                }
            }
            Ok(out)
        }
        FitFamily::SigmoidSum => Ok(vec![
            c[0],
            c[1] / s,
            a + s * c[2],
            c[3],
            c[4] / s,
            a + s * c[5],
        ]),
        FitFamily::GaussianMixture => Ok(vec![
            c[0],
            a + s * c[1],
            s * c[2],
            c[3],
            a + s * c[4],
            s * c[5],
        ]),
        FitFamily::Rational22 => {
            // substitute u = (x-a)/s into N(u)/D(u), then renormalize the
            // denominator's constant term to 1
            let s2 = s * s;
            let n2 = c[0] / s2;
            let n1 = c[1] / s - 2.0 * a * c[0] / s2;
            let n0 = c[0] * a * a / s2 - c[1] * a / s + c[2];
            let e2 = c[3] / s2;
            let e1 = c[4] / s - 2.0 * a * c[3] / s2;
            let e0 = c[3] * a * a / s2 - c[4] * a / s + 1.0;
            if e0.abs() < POLE_EPS {
                return Err(Error::Model(
                    "rational denominator vanishes at x = 0; cannot renormalize to canonical form"
                        .into(),
                ));
            }
            Ok(vec![n2 / e0, n1 / e0, n0 / e0, e2 / e0, e1 / e0])
        }
    }
}

/// Inverse of [`unscale_coeffs`]: maps raw-x coefficients into the scaled
/// variable u.
fn scale_coeffs(family: FitFamily, c: &[f64], sc: &XScale) -> Result<Vec<f64>> {
    let (a, s) = (sc.offset, sc.span);
    match family {
        FitFamily::Polynomial4 => {
            // q(x) = Σ c_i x^i with x = a + s u
            let mut out = vec![0.0; 5];
            for (i, &ci) in c.iter().enumerate() {
                for j in 0..=i {
                    out[j] += ci * binomial(i, j) * a.powi((i - j) as i32) * s.powi(j as i32);
                }
            }
            Ok(out)
        }
        FitFamily::SigmoidSum => Ok(vec![
            c[0],
            c[1] * s,
            (c[2] - a) / s,
            c[3],
            c[4] * s,
            (c[5] - a) / s,
        ]),
        FitFamily::GaussianMixture => Ok(vec![
            c[0],
            (c[1] - a) / s,
            c[2] / s,
            c[3],
            (c[4] - a) / s,
            c[5] / s,
        ]),
        FitFamily::Rational22 => {
            let n2 = c[0] * s * s;
            let n1 = 2.0 * a * c[0] * s + c[1] * s;
            let n0 = c[0] * a * a + c[1] * a + c[2];
            let e2 = c[3] * s * s;
            let e1 = 2.0 * a * c[3] * s + c[4] * s;
            let e0 = c[3] * a * a + c[4] * a + 1.0;
            if e0.abs() < POLE_EPS {
                return Err(Error::Model(
                    "rational denominator vanishes at the scaled origin; cannot renormalize".into(),
                ));
            }
            Ok(vec![n2 / e0, n1 / e0, n0 / e0, e2 / e0, e1 / e0])
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    // n <= 4 here; a direct product is exact
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Linear least squares via SVD.
fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone()
        .svd(true, true)
        .solve(b, 1e-12)
        .map_err(|e| Error::Model(format!("least-squares solve failed: {e}")))
}

/// Linearly interpolated quantile (values need not be sorted).
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Deterministic, derivative-free seeding in the scaled domain:
/// the polynomial by direct linear LS; the rational by LS on its linearized
/// form y·(d₄u² + d₅u + 1) = d₁u² + d₂u + d₃; sigmoid/Gaussian from the data
/// range (amplitudes = span/2, centers at the 1/3 and 2/3 x-quantiles, rate
/// 10 and width 1/4 of the unit scaled range).
fn seed(family: FitFamily, us: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let n = us.len();
    match family {
        FitFamily::Polynomial4 => {
            let mut v = DMatrix::zeros(n, 5);
            for (i, &u) in us.iter().enumerate() {
                let mut p = 1.0;
                for j in 0..5 {
                    v[(i, j)] = p;
                    p *= u;
                }
            }
            Ok(least_squares(&v, &DVector::from_column_slice(ys))?.iter().copied().collect())
        }
        FitFamily::Rational22 => {
            let mut m = DMatrix::zeros(n, 5);
            for (i, (&u, &y)) in us.iter().zip(ys).enumerate() {
                m[(i, 0)] = u * u;
                m[(i, 1)] = u;
                m[(i, 2)] = 1.0;
                m[(i, 3)] = -y * u * u;
                m[(i, 4)] = -y * u;
            }
            Ok(least_squares(&m, &DVector::from_column_slice(ys))?.iter().copied().collect())
        }
        FitFamily::SigmoidSum | FitFamily::GaussianMixture => {
            let (ymin, ymax) = min_max(ys);
            let half_span = (ymax - ymin) / 2.0;
            let q13 = quantile(us, 1.0 / 3.0);
            let q23 = quantile(us, 2.0 / 3.0);
            Ok(if family == FitFamily::SigmoidSum {
                vec![half_span, 10.0, q13, half_span, 10.0, q23]
            } else {
                vec![half_span, q13, 0.25, half_span, q23, 0.25]
            })
        }
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// True when d₄u² + d₅u + 1 has a real root inside [lo, hi].
fn rational_pole_in(d4: f64, d5: f64, lo: f64, hi: f64) -> bool {
    const TINY: f64 = 1e-300;
    if d4.abs() < TINY {
        if d5.abs() < TINY {
            return false;
        }
        let root = -1.0 / d5;
        return (lo..=hi).contains(&root);
    }
    let disc = d5 * d5 - 4.0 * d4;
    if disc < 0.0 {
        return false;
    }
    let sq = disc.sqrt();
    let r1 = (-d5 - sq) / (2.0 * d4);
    let r2 = (-d5 + sq) / (2.0 * d4);
    (lo..=hi).contains(&r1) || (lo..=hi).contains(&r2)
}

struct CurveProblem<'a> {
    family: FitFamily,
    us: &'a [f64],
    ys: &'a [f64],
}

impl LeastSquaresProblem for CurveProblem<'_> {
    fn residual_len(&self) -> usize {
        self.us.len()
    }
    fn param_len(&self) -> usize {
        self.family.coefficient_len()
    }
    fn residuals(&self, params: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let c = params.as_slice();
        for (i, (&u, &y)) in self.us.iter().zip(self.ys).enumerate() {
            out[i] = evaluate_family(self.family, c, u)? - y;
        }
        Ok(())
    }
    fn jacobian(&self, params: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        let m = FitModel { family: self.family, coefficients: params.as_slice().to_vec() };
        out.copy_from(&jacobian(&m, self.us)?);
        Ok(())
    }
}

/// Fits `family` to (`xs`, `ys`) by damped least squares.
///
/// `init`, when given, is interpreted in raw x units (the same
/// parameterization the returned model uses); otherwise the deterministic
/// seeding described on [`seed`] applies. A fitted rational whose denominator
/// develops a real root inside the data range is rejected and refit once from
/// a pole-free reseed; if the pole persists the fit fails.
pub fn fit_nls(
    family: FitFamily,
    xs: &[f64],
    ys: &[f64],
    init: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<(FitModel, FitReport)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < family.coefficient_len() {
        return Err(Error::DegenerateData(format!(
            "need at least {} points for {}, got {}",
            family.coefficient_len(),
            family.name(),
            xs.len()
        )));
    }
    if !xs.iter().chain(ys).all(|v| v.is_finite()) {
        return Err(Error::Domain("non-finite value in fit input".into()));
    }
    let (xmin, xmax) = min_max(xs);
    if xmax <= xmin {
        return Err(Error::DegenerateData("all x values identical".into()));
    }
    let sc = XScale { offset: xmin, span: xmax - xmin };
    let us: Vec<f64> = xs.iter().map(|&x| sc.forward(x)).collect();

    let seed_scaled = match init {
        Some(c) => {
            if c.len() != family.coefficient_len() {
                return Err(Error::Domain(format!(
                    "init must have {} coefficients for {}, got {}",
                    family.coefficient_len(),
                    family.name(),
                    c.len()
                )));
            }
            if !c.iter().all(|v| v.is_finite()) {
                return Err(Error::Domain("non-finite init coefficient".into()));
            }
            scale_coeffs(family, c, &sc)?
        }
        None => seed(family, &us, ys)?,
    };

    let problem = CurveProblem { family, us: &us, ys };
    let mut outcome = match levenberg_marquardt(
        &problem,
        DVector::from_column_slice(&seed_scaled),
        &opts.lm,
    ) {
        Ok(o) => o,
        // A poisoned rational seed (pole inside the data range) surfaces as a
        // non-finite start; retry from the pole-free fallback below.
        Err(Error::NonFiniteResidual | Error::Pole(_)) if family == FitFamily::Rational22 => {
            rational_fallback(&problem, &us, ys, &opts.lm)?
        }
        Err(e) => return Err(e),
    };

    if family == FitFamily::Rational22 {
        let c = outcome.params.as_slice();
        if rational_pole_in(c[3], c[4], 0.0, 1.0) {
            outcome = rational_fallback(&problem, &us, ys, &opts.lm)?;
            let c = outcome.params.as_slice();
            if rational_pole_in(c[3], c[4], 0.0, 1.0) {
                return Err(Error::Model(
                    "rational fit keeps a pole inside the data range".into(),
                ));
            }
        }
    }

    let scaled = FitModel {
        family,
        coefficients: outcome.params.as_slice().to_vec(),
    };
    let y_hats = us
        .iter()
        .map(|&u| scaled.evaluate(u))
        .collect::<Result<Vec<f64>>>()?;
    let (ymin, ymax) = min_max(ys);
    let full_scale = opts.full_scale.unwrap_or(if ymax > ymin { ymax - ymin } else { 1.0 });
    let quality = fit_metrics(ys, &y_hats, full_scale)?;

    let model = FitModel {
        family,
        coefficients: unscale_coeffs(family, &scaled.coefficients, &sc)?,
    };
    Ok((
        model,
        FitReport {
            rmse: quality.rmse,
            r_squared: quality.r_squared,
            linearity_error_pct: quality.linearity_error_pct,
            iterations: outcome.iterations,
            converged: outcome.converged,
        },
    ))
}

/// Pole-free rational reseed: plain quadratic numerator by linear LS with the
/// denominator pinned to 1.
fn rational_fallback(
    problem: &CurveProblem<'_>,
    us: &[f64],
    ys: &[f64],
    lm: &LmOptions,
) -> Result<solver::LmOutcome> {
    let mut v = DMatrix::zeros(us.len(), 3);
    for (i, &u) in us.iter().enumerate() {
        v[(i, 0)] = u * u;
        v[(i, 1)] = u;
        v[(i, 2)] = 1.0;
    }
    let num = least_squares(&v, &DVector::from_column_slice(ys))?;
    let init = DVector::from_column_slice(&[num[0], num[1], num[2], 0.0, 0.0]);
    levenberg_marquardt(problem, init, lm)
}
