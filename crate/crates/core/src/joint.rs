//! Truncated joint distribution h(i, j) = P(X = i, Y = j) of one claim pair.
//!
//! A [`JointMatrix`] covers `0 ≤ i ≤ K_X`, `0 ≤ j ≤ K_Y`. Each window is wide enough
//! that the pair-sum pmf `s_k` and the column `h(k, 0)` are exact (to working precision)
//! for every `k ≤ exact_through()`, and at least wide enough that each marginal's
//! omitted tail is below `trunc_eps` when the marginal is light-tailed.

use rug::{Float, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RuinError};
use crate::marginal::{MarginalDist, MarginalSpec};
use crate::precision::{decimal_float, decimal_rational, MeanValue, Precision};

pub const DEFAULT_TRUNC_EPS: f64 = 1e-15;

/// Rectangle masses more negative than this are a precision failure, not rounding.
pub const NEGATIVE_MASS_TOLERANCE: f64 = 1e-30;

/// Light-tailed windows chosen by `trunc_eps` never exceed this.
const MAX_LIGHT_WINDOW: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DependenceSpec {
    /// Rows indexed by X, columns by Y.
    Explicit {
        matrix: Vec<Vec<f64>>,
    },
    Product {
        x: MarginalSpec,
        y: MarginalSpec,
    },
    BivariatePoisson {
        lambda1: f64,
        lambda2: f64,
        lambda: f64,
    },
    Clayton {
        theta: f64,
        x: MarginalSpec,
        y: MarginalSpec,
    },
}

impl DependenceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DependenceSpec::Explicit { matrix } => {
                explicit_total(matrix)?;
            }
            DependenceSpec::Product { x, y } => {
                x.validate()?;
                y.validate()?;
            }
            DependenceSpec::BivariatePoisson {
                lambda1,
                lambda2,
                lambda,
            } => {
                if !(lambda1.is_finite() && lambda2.is_finite() && *lambda1 > 0.0 && *lambda2 > 0.0)
                {
                    return Err(RuinError::Parameter(format!(
                        "bivariate Poisson rates must be positive, got {lambda1} and {lambda2}"
                    )));
                }
                if !(lambda.is_finite() && *lambda >= 0.0 && *lambda < lambda1.min(*lambda2)) {
                    return Err(RuinError::Parameter(format!(
                        "bivariate Poisson covariance must lie in [0, min(λ1, λ2)), got {lambda}"
                    )));
                }
            }
            DependenceSpec::Clayton { theta, x, y } => {
                check_theta(*theta)?;
                x.validate()?;
                y.validate()?;
            }
        }
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta < -1.0 || theta == 0.0 {
        return Err(RuinError::Parameter(format!(
            "Clayton θ must lie in [-1, ∞) \\ {{0}}, got {theta}; use a product spec for independence"
        )));
    }
    Ok(())
}

fn explicit_total(matrix: &[Vec<f64>]) -> Result<Rational> {
    if matrix.is_empty() || matrix.iter().all(|r| r.is_empty()) {
        return Err(RuinError::InvalidMatrix("explicit matrix is empty".into()));
    }
    let mut total = Rational::new();
    for (i, row) in matrix.iter().enumerate() {
        for (j, &h) in row.iter().enumerate() {
            if !(h.is_finite() && h >= 0.0) {
                return Err(RuinError::InvalidMatrix(format!(
                    "entry ({i}, {j}) is {h}, expected a nonnegative number"
                )));
            }
            total += decimal_rational(h)?;
        }
    }
    let lower = Rational::from(1) - Rational::from((1, 10_000_000_000u64));
    if total > 1 || total < lower {
        return Err(RuinError::InvalidMatrix(format!(
            "explicit matrix has total mass {}, expected within [1 - 1e-10, 1]",
            total.to_f64()
        )));
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub precision: Precision,
    /// Target bound on each light-tailed marginal's omitted tail.
    pub trunc_eps: f64,
    /// Index through which `s_k` and `h(k, 0)` must be exact.
    pub min_window: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            precision: Precision::default(),
            trunc_eps: DEFAULT_TRUNC_EPS,
            min_window: 0,
        }
    }
}

impl BuildOptions {
    pub fn with_window(precision: Precision, min_window: usize) -> Self {
        BuildOptions {
            precision,
            min_window,
            ..BuildOptions::default()
        }
    }
}

/// Window for one marginal and whether the mass beyond it is below working precision.
fn marginal_window(dist: &MarginalDist, opts: &BuildOptions) -> (usize, bool) {
    let prec = opts.precision;
    let by_eps = if dist.is_light_tailed() {
        dist.truncation_index(&prec.float(opts.trunc_eps))
            .min(MAX_LIGHT_WINDOW)
    } else {
        0
    };
    let negligible_from = dist.truncation_index(&prec.negligible());
    let window = by_eps.max(opts.min_window.min(negligible_from));
    (window, window >= negligible_from)
}

/// Pearson correlation of a joint matrix, or a marker when a variance is infinite
/// (or zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    Defined(f64),
    Undefined,
}

impl std::fmt::Display for Correlation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Correlation::Defined(r) => write!(f, "{r:.4}"),
            Correlation::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JointMatrix {
    prec: Precision,
    entries: Vec<Vec<Float>>,
    tail_mass: Float,
    mean_x: MeanValue,
    mean_y: MeanValue,
    x: Vec<Float>,
    y: Vec<Float>,
    s: Vec<Float>,
    exact_through: usize,
    finite_variance: bool,
}

impl JointMatrix {
    pub fn build(spec: &DependenceSpec, opts: &BuildOptions) -> Result<JointMatrix> {
        spec.validate()?;
        match spec {
            DependenceSpec::Explicit { matrix } => from_explicit(matrix, opts.precision),
            DependenceSpec::Product { x, y } => build_product(x, y, opts),
            DependenceSpec::BivariatePoisson {
                lambda1,
                lambda2,
                lambda,
            } => build_bivariate_poisson(*lambda1, *lambda2, *lambda, opts),
            DependenceSpec::Clayton { theta, x, y } => build_clayton_coupled(*theta, x, y, opts),
        }
    }

    fn assemble(
        entries: Vec<Vec<Float>>,
        prec: Precision,
        mean_x: MeanValue,
        mean_y: MeanValue,
        exact_through: usize,
        finite_variance: bool,
    ) -> JointMatrix {
        let kx = entries.len() - 1;
        let ky = entries[0].len() - 1;
        let mut x = vec![prec.zero(); kx + 1];
        let mut y = vec![prec.zero(); ky + 1];
        let mut s = vec![prec.zero(); kx + ky + 1];
        let mut total = prec.zero();
        for (i, row) in entries.iter().enumerate() {
            for (j, h) in row.iter().enumerate() {
                x[i] += h;
                y[j] += h;
                s[i + j] += h;
                total += h;
            }
        }
        let tail_mass = Float::with_val(prec.bits(), 1 - &total).max(&prec.zero());
        JointMatrix {
            prec,
            entries,
            tail_mass,
            mean_x,
            mean_y,
            x,
            y,
            s,
            exact_through,
            finite_variance,
        }
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    /// Largest row index K_X.
    pub fn kx(&self) -> usize {
        self.entries.len() - 1
    }

    /// Largest column index K_Y.
    pub fn ky(&self) -> usize {
        self.entries[0].len() - 1
    }

    /// h(i, j); zero outside the window.
    pub fn entry(&self, i: usize, j: usize) -> Float {
        self.entries
            .get(i)
            .and_then(|row| row.get(j))
            .cloned()
            .unwrap_or_else(|| self.prec.zero())
    }

    pub fn rows(&self) -> &[Vec<Float>] {
        &self.entries
    }

    /// Omitted probability mass, 1 - Σ h(i, j).
    pub fn tail_mass(&self) -> &Float {
        &self.tail_mass
    }

    pub fn mean_x(&self) -> &MeanValue {
        &self.mean_x
    }

    pub fn mean_y(&self) -> &MeanValue {
        &self.mean_y
    }

    /// E S = E X + E Y from the marginal closed forms.
    pub fn expected_sum(&self) -> MeanValue {
        &self.mean_x + &self.mean_y
    }

    /// x_k = P(X = k) over the window.
    pub fn x(&self, k: usize) -> Float {
        self.x.get(k).cloned().unwrap_or_else(|| self.prec.zero())
    }

    /// y_k = P(Y = k) over the window.
    pub fn y(&self, k: usize) -> Float {
        self.y.get(k).cloned().unwrap_or_else(|| self.prec.zero())
    }

    /// s_k = P(X + Y = k).
    pub fn s(&self, k: usize) -> Float {
        self.s.get(k).cloned().unwrap_or_else(|| self.prec.zero())
    }

    /// h(k, 0).
    pub fn h_col0(&self, k: usize) -> Float {
        self.entry(k, 0)
    }

    /// `s_k`, `h(k, 0)`, `x_k` and `y_k` are exact for every k up to this index.
    pub fn exact_through(&self) -> usize {
        self.exact_through
    }

    pub fn require_exact_through(&self, required: usize) -> Result<()> {
        if required > self.exact_through {
            return Err(RuinError::WindowTooSmall {
                required,
                available: self.exact_through,
            });
        }
        Ok(())
    }

    pub fn has_finite_variance(&self) -> bool {
        self.finite_variance
    }
}

/// The pair-sum pmf s_0, ..., s_{K_X + K_Y}.
pub fn sum_pmf(m: &JointMatrix) -> &[Float] {
    &m.s
}

/// Cov(X, Y) / (σ_X σ_Y) from moments over the truncation window.
pub fn pearson_correlation(m: &JointMatrix) -> Correlation {
    if !m.finite_variance {
        return Correlation::Undefined;
    }
    let bits = m.prec.bits();
    let mut ex = m.prec.zero();
    let mut ey = m.prec.zero();
    let mut exx = m.prec.zero();
    let mut eyy = m.prec.zero();
    let mut exy = m.prec.zero();
    for (i, row) in m.entries.iter().enumerate() {
        for (j, h) in row.iter().enumerate() {
            if h.is_zero() {
                continue;
            }
            ex += Float::with_val(bits, h * i as u64);
            ey += Float::with_val(bits, h * j as u64);
            exx += Float::with_val(bits, h * (i * i) as u64);
            eyy += Float::with_val(bits, h * (j * j) as u64);
            exy += Float::with_val(bits, h * (i * j) as u64);
        }
    }
    let cov = exy - Float::with_val(bits, &ex * &ey);
    let var_x = exx - Float::with_val(bits, ex.square_ref());
    let var_y = eyy - Float::with_val(bits, ey.square_ref());
    if var_x <= 0 || var_y <= 0 {
        return Correlation::Undefined;
    }
    let r = cov / (var_x * var_y).sqrt();
    Correlation::Defined(r.to_f64())
}

pub fn from_explicit(matrix: &[Vec<f64>], prec: Precision) -> Result<JointMatrix> {
    explicit_total(matrix)?;
    let kx = matrix.len() - 1;
    let ky = matrix.iter().map(|r| r.len()).max().unwrap_or(1).max(1) - 1;
    let mut entries = vec![vec![prec.zero(); ky + 1]; kx + 1];
    let mut mean_x = Rational::new();
    let mut mean_y = Rational::new();
    for (i, row) in matrix.iter().enumerate() {
        for (j, &h) in row.iter().enumerate() {
            let exact = decimal_rational(h)?;
            entries[i][j] = Float::with_val(prec.bits(), &exact);
            mean_x += &exact * Rational::from(i);
            mean_y += exact * Rational::from(j);
        }
    }
    Ok(JointMatrix::assemble(
        entries,
        prec,
        MeanValue::Exact(mean_x),
        MeanValue::Exact(mean_y),
        usize::MAX,
        true,
    ))
}

fn marginal_pair(
    x: &MarginalSpec,
    y: &MarginalSpec,
    opts: &BuildOptions,
) -> Result<(MarginalDist, MarginalDist, usize, usize, usize)> {
    let dx = MarginalDist::new(x, opts.precision)?;
    let dy = MarginalDist::new(y, opts.precision)?;
    let (kx, x_done) = marginal_window(&dx, opts);
    let (ky, y_done) = marginal_window(&dy, opts);
    let exact_x = if x_done { usize::MAX } else { kx };
    let exact_y = if y_done { usize::MAX } else { ky };
    Ok((dx, dy, kx, ky, exact_x.min(exact_y)))
}

pub fn build_product(
    x: &MarginalSpec,
    y: &MarginalSpec,
    opts: &BuildOptions,
) -> Result<JointMatrix> {
    let (dx, dy, kx, ky, exact) = marginal_pair(x, y, opts)?;
    let px = dx.pmf_table(kx + 1);
    let py = dy.pmf_table(ky + 1);
    let bits = opts.precision.bits();
    let entries = px
        .iter()
        .map(|a| py.iter().map(|b| Float::with_val(bits, a * b)).collect())
        .collect();
    Ok(JointMatrix::assemble(
        entries,
        opts.precision,
        dx.mean().clone(),
        dy.mean().clone(),
        exact,
        x.has_finite_variance() && y.has_finite_variance(),
    ))
}

/// P(X=k, Y=l) = e^{-(λ1+λ2-λ)} Σ_{i ≤ min(k,l)} (λ1-λ)^{k-i} (λ2-λ)^{l-i} λ^i / ((k-i)! (l-i)! i!).
pub fn build_bivariate_poisson(
    lambda1: f64,
    lambda2: f64,
    lambda: f64,
    opts: &BuildOptions,
) -> Result<JointMatrix> {
    DependenceSpec::BivariatePoisson {
        lambda1,
        lambda2,
        lambda,
    }
    .validate()?;
    let prec = opts.precision;
    let bits = prec.bits();
    let (_, _, kx, ky, exact) = marginal_pair(
        &MarginalSpec::Poisson { rate: lambda1 },
        &MarginalSpec::Poisson { rate: lambda2 },
        opts,
    )?;

    let l1 = decimal_float(lambda1, prec)?;
    let l2 = decimal_float(lambda2, prec)?;
    let l = decimal_float(lambda, prec)?;
    let a = Float::with_val(bits, &l1 - &l);
    let b = Float::with_val(bits, &l2 - &l);

    // rate^n / n!
    let scaled_powers = |rate: &Float, len: usize| -> Vec<Float> {
        let mut out = Vec::with_capacity(len);
        let mut t = prec.one();
        for n in 0..len {
            if n > 0 {
                t *= rate;
                t /= n as u32;
            }
            out.push(t.clone());
        }
        out
    };
    let pa = scaled_powers(&a, kx + 1);
    let pb = scaled_powers(&b, ky + 1);
    let pc = scaled_powers(&l, kx.min(ky) + 1);
    let norm = Float::with_val(bits, -(Float::with_val(bits, &a + &b) + &l)).exp();

    let mut entries = Vec::with_capacity(kx + 1);
    for k in 0..=kx {
        let mut row = Vec::with_capacity(ky + 1);
        for m in 0..=ky {
            let mut acc = prec.zero();
            for i in 0..=k.min(m) {
                acc += Float::with_val(bits, &pa[k - i] * &pb[m - i]) * &pc[i];
            }
            row.push(acc * &norm);
        }
        entries.push(row);
    }
    Ok(JointMatrix::assemble(
        entries,
        prec,
        MeanValue::Exact(decimal_rational(lambda1)?),
        MeanValue::Exact(decimal_rational(lambda2)?),
        exact,
        true,
    ))
}

/// One margin of the Clayton copula in additive form:
/// θ > 0 stores u^{-θ} - 1, θ < 0 stores u^{|θ|} - 1; `None` marks u = 0.
fn clayton_transform(u: &Float, theta: &Float) -> Option<Float> {
    if u.is_zero() {
        return None;
    }
    let bits = u.prec();
    let log_u = Float::with_val(bits, u.ln_ref());
    Some(Float::with_val(bits, -(theta * log_u)).exp_m1())
}

fn clayton_combine(a: Option<&Float>, b: Option<&Float>, theta: &Float, bits: u32) -> Float {
    let (Some(a), Some(b)) = (a, b) else {
        return Float::new(bits);
    };
    let t = Float::with_val(bits, a + b);
    if theta.is_sign_positive() {
        // (1 + t)^{-1/θ}
        let log = t.ln_1p();
        Float::with_val(bits, -(log / theta)).exp()
    } else {
        // max(1 + t, 0)^{1/|θ|}
        let v = t + 1u32;
        if v <= 0 {
            return Float::new(bits);
        }
        let log = v.ln();
        Float::with_val(bits, -(log / theta)).exp()
    }
}

/// Clayton copula C(u₁, u₂; θ) = max{u₁^{-θ} + u₂^{-θ} - 1, 0}^{-1/θ}, at the precision of `u1`.
///
/// Powers are combined as `ln_1p(expm1(-θ ln u₁) + expm1(-θ ln u₂))` so that large θ
/// neither overflows nor cancels near u = 1.
pub fn clayton_cdf(u1: &Float, u2: &Float, theta: f64) -> Result<Float> {
    check_theta(theta)?;
    let bits = u1.prec().max(u2.prec());
    for u in [u1, u2] {
        if !(*u >= 0 && *u <= 1) {
            return Err(RuinError::Parameter(format!(
                "copula arguments must lie in [0, 1], got {}",
                u.to_f64()
            )));
        }
    }
    let theta = Float::with_val(bits, &decimal_rational(theta)?);
    let a = clayton_transform(u1, &theta);
    let b = clayton_transform(u2, &theta);
    Ok(clayton_combine(a.as_ref(), b.as_ref(), &theta, bits))
}

/// Zeroes a negative rectangle mass no larger in magnitude than `tolerance`; anything more
/// negative means the working precision could not resolve the cdf differences.
fn clamp_rounding(h: Float, tolerance: &Float, i: usize, j: usize) -> Result<Float> {
    if !h.is_sign_negative() || h.is_zero() {
        return Ok(h);
    }
    if Float::with_val(h.prec(), -&h) > *tolerance {
        return Err(RuinError::Precision(format!(
            "Clayton rectangle mass h({i}, {j}) = {:e} is negative at {} bits",
            h.to_f64(),
            h.prec()
        )));
    }
    Ok(Float::new(h.prec()))
}

/// Rectangle coupling of two discrete marginals through the Clayton copula:
/// h(i, j) = C(F_X(i), F_Y(j)) - C(F_X(i-1), F_Y(j)) - C(F_X(i), F_Y(j-1)) + C(F_X(i-1), F_Y(j-1)).
pub fn build_clayton_coupled(
    theta: f64,
    x: &MarginalSpec,
    y: &MarginalSpec,
    opts: &BuildOptions,
) -> Result<JointMatrix> {
    check_theta(theta)?;
    let prec = opts.precision;
    let bits = prec.bits();
    let (dx, dy, kx, ky, exact) = marginal_pair(x, y, opts)?;
    let theta_f = decimal_float(theta, prec)?;

    let fx = dx.cdf_table(kx + 1);
    let fy = dy.cdf_table(ky + 1);
    // Index 0 is the F(-1) = 0 boundary.
    let tx: Vec<Option<Float>> = std::iter::once(None)
        .chain(fx.iter().map(|u| clayton_transform(u, &theta_f)))
        .collect();
    let ty: Vec<Option<Float>> = std::iter::once(None)
        .chain(fy.iter().map(|u| clayton_transform(u, &theta_f)))
        .collect();
    let grid: Vec<Vec<Float>> = tx
        .iter()
        .map(|a| {
            ty.iter()
                .map(|b| clayton_combine(a.as_ref(), b.as_ref(), &theta_f, bits))
                .collect()
        })
        .collect();

    let tolerance = prec.float(NEGATIVE_MASS_TOLERANCE);
    let mut entries = Vec::with_capacity(kx + 1);
    for i in 0..=kx {
        let mut row = Vec::with_capacity(ky + 1);
        for j in 0..=ky {
            let mut h = Float::with_val(bits, &grid[i + 1][j + 1] - &grid[i][j + 1]);
            h -= &grid[i + 1][j];
            h += &grid[i][j];
            let h = clamp_rounding(h, &tolerance, i, j)?;
            row.push(h);
        }
        entries.push(row);
    }
    Ok(JointMatrix::assemble(
        entries,
        prec,
        dx.mean().clone(),
        dy.mean().clone(),
        exact,
        x.has_finite_variance() && y.has_finite_variance(),
    ))
}
