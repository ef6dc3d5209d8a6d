//! Ultimate ruin probabilities ψ(u) = P(T_u < ∞) for the bi-seasonal risk model.
//!
//! The surplus after n periods is `u + n - (Z_1 + ... + Z_n)` where claim pairs
//! `(Z_{2k-1}, Z_{2k})` are i.i.d. copies of `(X, Y)`; ruin is the first n ≥ 1 at which
//! the surplus is ≤ 0. Everything here works with the survival probability φ = 1 - ψ.
//!
//! Under the net profit condition E S < 2 (S = X + Y) with `s_0 > 0`, φ(0) is the limit
//! `(2 - E S) lim (b_{n+1} - b_n) / (a_n - a_{n+1})` of two auxiliary recursions and
//! `φ(u) = a_u φ(0) + b_u (2 - E S)`. With `s_0 = 0` the table follows from a forward
//! recursion seeded by the identity `2 - E S = y_0 φ(1) + φ(0)`. When E S ≥ 2 the answer
//! is closed-form.

use std::cmp::Ordering;
use std::fmt;

use rug::Float;
use serde::Serialize;

use crate::error::{Result, RuinError};
use crate::joint::{BuildOptions, DependenceSpec, JointMatrix, DEFAULT_TRUNC_EPS};
use crate::precision::{MeanValue, Precision};

pub const DEFAULT_HORIZON: usize = 20;
pub const DEFAULT_ES_TOLERANCE: f64 = 1e-30;
pub const DEFAULT_CLAMP_SLACK: f64 = 1e-10;

/// Position of a model in the case analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    /// E S < 2, s_0 > 0.
    NetProfitS0Pos,
    /// E S < 2, s_0 = 0, x_0 > 0, y_0 = 0.
    NetProfitS0ZeroX0Pos,
    /// E S < 2, s_0 = 0, x_0 = 0, y_0 > 0.
    NetProfitS0ZeroY0Pos,
    /// E S < 2, s_0 = 0, x_0 > 0, y_0 > 0.
    NetProfitS0ZeroBothPos,
    /// E S > 2.
    Deficit,
    /// E S = 2, s_2 < 1.
    BoundaryS2Lt1,
    /// E S = 2, s_2 = 1, h(2, 0) = 0.
    BoundaryS2Eq1H20Zero,
    /// E S = 2, s_2 = 1, h(2, 0) > 0.
    BoundaryS2Eq1H20Pos,
}

impl ModelClass {
    pub fn is_net_profit(self) -> bool {
        matches!(
            self,
            ModelClass::NetProfitS0Pos
                | ModelClass::NetProfitS0ZeroX0Pos
                | ModelClass::NetProfitS0ZeroY0Pos
                | ModelClass::NetProfitS0ZeroBothPos
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelClass::NetProfitS0Pos => "net_profit_s0_pos",
            ModelClass::NetProfitS0ZeroX0Pos => "net_profit_s0_zero_x0_pos",
            ModelClass::NetProfitS0ZeroY0Pos => "net_profit_s0_zero_y0_pos",
            ModelClass::NetProfitS0ZeroBothPos => "net_profit_s0_zero_both_pos",
            ModelClass::Deficit => "deficit",
            ModelClass::BoundaryS2Lt1 => "boundary_s2_lt1",
            ModelClass::BoundaryS2Eq1H20Zero => "boundary_s2_eq1_h20_zero",
            ModelClass::BoundaryS2Eq1H20Pos => "boundary_s2_eq1_h20_pos",
        }
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    /// N in the ratio estimator; Δ compares N with N + 1.
    pub horizon: usize,
    pub precision: Precision,
    pub trunc_eps: f64,
    /// Band around E S = 2 used when the mean is not exactly representable.
    pub es_tolerance: f64,
    /// φ may leave [0, 1] (and ψ may increase) by at most this much before the run aborts.
    pub clamp_slack: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            horizon: DEFAULT_HORIZON,
            precision: Precision::default(),
            trunc_eps: DEFAULT_TRUNC_EPS,
            es_tolerance: DEFAULT_ES_TOLERANCE,
            clamp_slack: DEFAULT_CLAMP_SLACK,
        }
    }
}

impl EngineOptions {
    /// Matrix options whose window covers a table through `u_max`.
    pub fn build_options(&self, u_max: usize) -> BuildOptions {
        BuildOptions {
            precision: self.precision,
            trunc_eps: self.trunc_eps,
            min_window: required_window(u_max, self.horizon),
        }
    }
}

/// Largest index of `s_k` / `h(k, 0)` a table through `u_max` at horizon N touches.
pub fn required_window(u_max: usize, horizon: usize) -> usize {
    u_max.max(horizon + 2) + 1
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub class: ModelClass,
    pub expected_sum: MeanValue,
    pub warnings: Vec<String>,
}

pub fn classify(m: &JointMatrix) -> Result<Classification> {
    classify_with(m, DEFAULT_ES_TOLERANCE)
}

pub fn classify_with(m: &JointMatrix, es_tolerance: f64) -> Result<Classification> {
    let prec = m.precision();
    let tol = prec.float(es_tolerance);
    let es = m.expected_sum();
    let mut warnings = Vec::new();
    let class = match es.compare_with(2, &tol) {
        Ordering::Less => {
            if m.s(0) > 0 {
                ModelClass::NetProfitS0Pos
            } else {
                match (m.x(0) > 0, m.y(0) > 0) {
                    (true, false) => ModelClass::NetProfitS0ZeroX0Pos,
                    (false, true) => ModelClass::NetProfitS0ZeroY0Pos,
                    (true, true) => ModelClass::NetProfitS0ZeroBothPos,
                    (false, false) => {
                        return Err(RuinError::Contradiction(
                            "x_0 = y_0 = 0 forces S ≥ 2, yet E S < 2".into(),
                        ))
                    }
                }
            }
        }
        Ordering::Greater => ModelClass::Deficit,
        Ordering::Equal => {
            if !es.is_exact() {
                warnings.push(format!(
                    "E S = {} is within {es_tolerance:e} of 2 but not exactly representable; \
                     treated as the boundary case",
                    es
                ));
            }
            let gap = Float::with_val(prec.bits(), m.s(2) - 1u32).abs();
            if gap <= tol {
                if m.h_col0(2) > 0 {
                    ModelClass::BoundaryS2Eq1H20Pos
                } else {
                    ModelClass::BoundaryS2Eq1H20Zero
                }
            } else {
                ModelClass::BoundaryS2Lt1
            }
        }
    };
    Ok(Classification {
        class,
        expected_sum: es,
        warnings,
    })
}

/// The auxiliary sequences a_n, b_n, n = 0..=horizon + 2, with a_0 = 1, b_0 = 0,
/// a_1 = -1/y_0, b_1 = 1/y_0.
#[derive(Debug, Clone)]
pub struct ABSequences {
    pub a: Vec<Float>,
    pub b: Vec<Float>,
    pub horizon: usize,
}

impl ABSequences {
    /// |s_0 x_n - (x_{n-2} - Σ_{i=1}^{n-1} s_i x_{n-i} + x_1 h(n-1, 0))| for x = a, b and
    /// n ≥ 2, the larger of the two per n.
    pub fn recursion_residuals(&self, m: &JointMatrix) -> Vec<Float> {
        let bits = m.precision().bits();
        let s0 = m.s(0);
        let residual = |seq: &[Float], n: usize| {
            let mut rhs = seq[n - 2].clone();
            for i in 1..n {
                rhs -= Float::with_val(bits, &m.s(i) * &seq[n - i]);
            }
            rhs += Float::with_val(bits, &seq[1] * &m.h_col0(n - 1));
            (Float::with_val(bits, &s0 * &seq[n]) - rhs).abs()
        };
        (2..self.a.len())
            .map(|n| residual(&self.a, n).max(&residual(&self.b, n)))
            .collect()
    }
}

/// Sequences through index `horizon + 2`.
pub fn ab_sequences(m: &JointMatrix, horizon: usize) -> Result<ABSequences> {
    let mut seq = ab_sequences_through(m, horizon + 2)?;
    seq.horizon = horizon;
    Ok(seq)
}

fn ab_sequences_through(m: &JointMatrix, last: usize) -> Result<ABSequences> {
    let found = classify(m)?.class;
    if found != ModelClass::NetProfitS0Pos {
        return Err(RuinError::WrongClass {
            expected: ModelClass::NetProfitS0Pos.name(),
            found,
        });
    }
    m.require_exact_through(last)?;
    let prec = m.precision();
    let bits = prec.bits();
    let s: Vec<Float> = (0..=last).map(|k| m.s(k)).collect();
    let h0: Vec<Float> = (0..=last).map(|k| m.h_col0(k)).collect();
    let y0 = m.y(0);
    let limit = prec.one() << (bits / 2);

    let a1 = -Float::with_val(bits, y0.recip_ref());
    let b1 = Float::with_val(bits, y0.recip_ref());
    let mut a = vec![prec.one(), a1];
    let mut b = vec![prec.zero(), b1];
    for n in 2..=last {
        let step = |seq: &[Float]| {
            let mut acc = seq[n - 2].clone();
            for i in 1..n {
                acc -= Float::with_val(bits, &s[i] * &seq[n - i]);
            }
            acc += Float::with_val(bits, &seq[1] * &h0[n - 1]);
            acc / &s[0]
        };
        let an = step(&a);
        let bn = step(&b);
        if Float::with_val(bits, an.abs_ref()) > limit
            || Float::with_val(bits, bn.abs_ref()) > limit
        {
            return Err(RuinError::Precision(format!(
                "|a_{n}| or |b_{n}| exceeds 2^{} (s_0 = {:e})",
                bits / 2,
                s[0].to_f64()
            )));
        }
        a.push(an);
        b.push(bn);
    }
    Ok(ABSequences {
        a,
        b,
        horizon: last.saturating_sub(2),
    })
}

#[derive(Debug, Clone)]
pub struct Phi0Estimate {
    pub phi0: Float,
    pub psi0: Float,
    /// |ψ_N(0) - ψ_{N+1}(0)|.
    pub delta: Float,
    pub horizon: usize,
}

/// φ_N(0) = (2 - E S)(b_{N+1} - b_N) / (a_N - a_{N+1}) and Δ against N + 1.
pub fn phi0_estimate(seq: &ABSequences, es: &Float) -> Result<Phi0Estimate> {
    phi0_estimate_at(seq, es, seq.horizon)
}

/// As [`phi0_estimate`], at any horizon the sequences reach (`horizon + 2 < len`).
pub fn phi0_estimate_at(seq: &ABSequences, es: &Float, horizon: usize) -> Result<Phi0Estimate> {
    if horizon < 2 {
        return Err(RuinError::Parameter(format!(
            "horizon N must be at least 2, got {horizon}"
        )));
    }
    if horizon + 2 >= seq.a.len() {
        return Err(RuinError::Parameter(format!(
            "sequences end at index {}, horizon {horizon} needs {}",
            seq.a.len() - 1,
            horizon + 2
        )));
    }
    let bits = es.prec();
    let drift = Float::with_val(bits, 2u32 - es);
    let phi_at = |n: usize| -> Result<Float> {
        let den = Float::with_val(bits, &seq.a[n] - &seq.a[n + 1]);
        if den.is_zero() {
            return Err(RuinError::DegenerateRatio { horizon: n });
        }
        let num = Float::with_val(bits, &seq.b[n + 1] - &seq.b[n]);
        Ok(Float::with_val(bits, &drift * &num) / den)
    };
    let phi0 = phi_at(horizon)?;
    let next = phi_at(horizon + 1)?;
    let delta = Float::with_val(bits, &phi0 - &next).abs();
    let psi0 = Float::with_val(bits, 1u32 - &phi0);
    Ok(Phi0Estimate {
        phi0,
        psi0,
        delta,
        horizon,
    })
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// Residual of φ(u) = Σ_{k=0}^{u+1} s_k φ(u+2-k) - h(u+1, 0) φ(1), u = 0..=u_max - 2.
    pub p1_residuals: Vec<Float>,
    pub max_p1_residual: Float,
    /// |2 - E S - y_0 φ(1) - φ(0)|; only for net-profit models.
    pub p5_residual: Option<Float>,
}

#[derive(Debug, Clone)]
pub struct RuinTable {
    /// ψ(0), ..., ψ(u_max).
    pub psi: Vec<Float>,
    /// Error bound on ψ(0); zero for the closed-form and forward-recursion branches.
    pub delta: Float,
    pub model_class: ModelClass,
    pub horizon: usize,
    pub expected_sum: MeanValue,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

impl RuinTable {
    pub fn u_max(&self) -> usize {
        self.psi.len() - 1
    }

    pub fn phi(&self, u: usize) -> Float {
        let p = &self.psi[u];
        Float::with_val(p.prec(), 1u32 - p)
    }

    pub fn psi_f64(&self) -> Vec<f64> {
        self.psi.iter().map(Float::to_f64).collect()
    }
}

pub fn survival_table(m: &JointMatrix, u_max: usize, horizon: usize) -> Result<RuinTable> {
    let opts = EngineOptions {
        horizon,
        precision: m.precision(),
        ..EngineOptions::default()
    };
    survival_table_with(m, u_max, &opts)
}

pub fn survival_table_with(
    m: &JointMatrix,
    u_max: usize,
    opts: &EngineOptions,
) -> Result<RuinTable> {
    let prec = m.precision();
    let bits = prec.bits();
    let Classification {
        class,
        expected_sum,
        mut warnings,
    } = classify_with(m, opts.es_tolerance)?;
    let es = expected_sum.to_float(prec);
    let drift = Float::with_val(bits, 2u32 - &es);
    let len = u_max + 1;
    let constant = |head: &[u32], rest: u32| -> Vec<Float> {
        (0..len)
            .map(|u| prec.float(head.get(u).copied().unwrap_or(rest)))
            .collect()
    };

    let mut delta = prec.zero();
    let phi: Vec<Float> = match class {
        ModelClass::NetProfitS0Pos => {
            let seq = ab_sequences_through(m, u_max.max(opts.horizon + 2))?;
            let est = phi0_estimate_at(&seq, &es, opts.horizon)?;
            delta = est.delta.clone();
            (0..len)
                .map(|u| {
                    Float::with_val(bits, &seq.a[u] * &est.phi0)
                        + Float::with_val(bits, &seq.b[u] * &drift)
                })
                .collect()
        }
        ModelClass::NetProfitS0ZeroX0Pos
        | ModelClass::NetProfitS0ZeroY0Pos
        | ModelClass::NetProfitS0ZeroBothPos => s0_zero_branch(m, class, &drift, len)?,
        ModelClass::Deficit | ModelClass::BoundaryS2Lt1 => constant(&[], 0),
        ModelClass::BoundaryS2Eq1H20Zero => constant(&[0], 1),
        ModelClass::BoundaryS2Eq1H20Pos => constant(&[0, 0], 1),
    };

    let slack = prec.float(opts.clamp_slack);
    let mut psi = Vec::with_capacity(len);
    for (u, value) in phi.into_iter().enumerate() {
        let lower = Float::with_val(bits, -&slack);
        let upper = Float::with_val(bits, 1u32 + &slack);
        if value < lower || value > upper {
            return Err(RuinError::Precision(format!(
                "φ({u}) = {} lies outside [0, 1] beyond the {:e} slack; \
                 the truncation window or precision is too small",
                value.to_f64(),
                opts.clamp_slack
            )));
        }
        let clamped = value.clamp(&prec.zero(), &prec.one());
        psi.push(Float::with_val(bits, 1u32 - &clamped));
    }
    for u in 1..psi.len() {
        if Float::with_val(bits, &psi[u] - &psi[u - 1]) > slack {
            return Err(RuinError::Precision(format!(
                "ψ increases from u = {} to u = {u} ({} -> {})",
                u - 1,
                psi[u - 1].to_f64(),
                psi[u].to_f64()
            )));
        }
    }

    let mut table = RuinTable {
        psi,
        delta,
        model_class: class,
        horizon: opts.horizon,
        expected_sum,
        diagnostics: Diagnostics {
            p1_residuals: Vec::new(),
            max_p1_residual: prec.zero(),
            p5_residual: None,
        },
        warnings: Vec::new(),
    };
    table.diagnostics = verify_identities(m, &table)?;
    table.warnings.append(&mut warnings);
    Ok(table)
}

/// Forward recursion for s_0 = 0, from the basic identity at u - 1:
/// φ(u) = (φ(u-1) - Σ_{k=2}^{u} s_k φ(u+1-k) + h(u, 0) φ(1)) / s_1, u ≥ 2.
fn s0_zero_branch(
    m: &JointMatrix,
    class: ModelClass,
    drift: &Float,
    len: usize,
) -> Result<Vec<Float>> {
    let prec = m.precision();
    let bits = prec.bits();
    m.require_exact_through(len)?;
    let s1 = m.s(1);
    if s1.is_zero() {
        return Err(RuinError::Contradiction(
            "s_1 = 0 with s_0 = 0 and E S < 2".into(),
        ));
    }
    let y0 = m.y(0);
    let (phi0, phi1) = match class {
        ModelClass::NetProfitS0ZeroX0Pos => {
            let phi0 = drift.clone();
            let phi1 = Float::with_val(bits, &phi0 / &s1);
            (phi0, phi1)
        }
        ModelClass::NetProfitS0ZeroY0Pos => (prec.zero(), Float::with_val(bits, drift / &y0)),
        _ => {
            // φ(0) = h(0,1) φ(1) from the basic identity at u = 0, then 2 - E S = y_0 φ(1) + φ(0).
            let h01 = m.entry(0, 1);
            let phi1 = Float::with_val(bits, drift / Float::with_val(bits, &y0 + &h01));
            (Float::with_val(bits, &h01 * &phi1), phi1)
        }
    };
    let mut phi = vec![phi0, phi1];
    for u in 2..len {
        let mut acc = phi[u - 1].clone();
        for k in 2..=u {
            acc -= Float::with_val(bits, &m.s(k) * &phi[u + 1 - k]);
        }
        acc += Float::with_val(bits, &m.h_col0(u) * &phi[1]);
        phi.push(acc / &s1);
    }
    phi.truncate(len);
    Ok(phi)
}

/// Re-substitutes the table into the basic recursion and, for net-profit models, the
/// identity 2 - E S = y_0 φ(1) + φ(0).
pub fn verify_identities(m: &JointMatrix, t: &RuinTable) -> Result<Diagnostics> {
    let prec = m.precision();
    let bits = prec.bits();
    let u_max = t.u_max();
    if u_max >= 2 {
        m.require_exact_through(u_max)?;
    }
    let phi: Vec<Float> = (0..=u_max).map(|u| t.phi(u)).collect();
    let mut p1_residuals = Vec::new();
    for u in 0..u_max.saturating_sub(1) {
        let mut rhs = prec.zero();
        for k in 0..=u + 1 {
            rhs += Float::with_val(bits, &m.s(k) * &phi[u + 2 - k]);
        }
        rhs -= Float::with_val(bits, &m.h_col0(u + 1) * &phi[1]);
        p1_residuals.push(Float::with_val(bits, &phi[u] - &rhs).abs());
    }
    let max_p1_residual =
        p1_residuals
            .iter()
            .fold(prec.zero(), |acc, r| if *r > acc { r.clone() } else { acc });
    let p5_residual = if t.model_class.is_net_profit() && u_max >= 1 {
        let es = t.expected_sum.to_float(prec);
        let mut r = Float::with_val(bits, 2u32 - &es);
        r -= Float::with_val(bits, &m.y(0) * &phi[1]);
        r -= &phi[0];
        Some(r.abs())
    } else {
        None
    };
    Ok(Diagnostics {
        p1_residuals,
        max_p1_residual,
        p5_residual,
    })
}

/// A built model and its ruin table.
#[derive(Debug, Clone)]
pub struct Solution {
    pub matrix: JointMatrix,
    pub table: RuinTable,
}

/// Builds the joint matrix with a window sized for `u_max` and computes ψ(0..=u_max).
pub fn solve(spec: &DependenceSpec, u_max: usize, opts: &EngineOptions) -> Result<Solution> {
    let matrix = JointMatrix::build(spec, &opts.build_options(u_max))?;
    let table = survival_table_with(&matrix, u_max, opts)?;
    Ok(Solution { matrix, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::from_explicit;
    use crate::marginal::MarginalSpec;

    fn explicit(rows: &[&[f64]]) -> JointMatrix {
        let m: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        from_explicit(&m, Precision::default()).unwrap()
    }

    fn example1(lambda: f64) -> DependenceSpec {
        DependenceSpec::BivariatePoisson {
            lambda1: 0.3,
            lambda2: 1.4,
            lambda,
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&explicit(&[&[1.0]])).unwrap().class,
            ModelClass::NetProfitS0Pos
        );
        assert_eq!(
            classify(&explicit(&[&[0.0, 0.0], &[0.0, 1.0]]))
                .unwrap()
                .class,
            ModelClass::BoundaryS2Eq1H20Zero
        );
        assert_eq!(
            classify(&explicit(&[&[0.0], &[0.0], &[1.0]]))
                .unwrap()
                .class,
            ModelClass::BoundaryS2Eq1H20Pos
        );
        assert_eq!(
            classify(&explicit(&[&[0.0, 0.0, 0.5], &[0.0, 0.0], &[0.5]]))
                .unwrap()
                .class,
            ModelClass::BoundaryS2Eq1H20Pos
        );
        // E S = 2 with s_2 < 1.
        assert_eq!(
            classify(&explicit(&[&[0.5, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 0.5]]))
                .unwrap()
                .class,
            ModelClass::BoundaryS2Lt1
        );
        assert_eq!(
            classify(&explicit(&[&[0.0, 0.0, 1.0], &[0.0]]))
                .unwrap()
                .class,
            ModelClass::BoundaryS2Eq1H20Zero
        );
        assert_eq!(
            classify(&explicit(&[&[0.0, 0.0, 0.0, 1.0]])).unwrap().class,
            ModelClass::Deficit
        );
        // s_0 = 0 branches.
        assert_eq!(
            classify(&explicit(&[&[0.0, 1.0]])).unwrap().class,
            ModelClass::NetProfitS0ZeroX0Pos
        );
        assert_eq!(
            classify(&explicit(&[&[0.0], &[1.0]])).unwrap().class,
            ModelClass::NetProfitS0ZeroY0Pos
        );
        assert_eq!(
            classify(&explicit(&[&[0.0, 0.5], &[0.5]])).unwrap().class,
            ModelClass::NetProfitS0ZeroBothPos
        );
    }

    #[test]
    fn classify_uses_exact_decimal_means() {
        // E X = 0.3, E Y = 1.7 as decimals: exactly on the boundary.
        let spec = DependenceSpec::Product {
            x: MarginalSpec::Poisson { rate: 0.3 },
            y: MarginalSpec::Poisson { rate: 1.7 },
        };
        let m = JointMatrix::build(&spec, &BuildOptions::with_window(Precision::default(), 10))
            .unwrap();
        let c = classify(&m).unwrap();
        assert_eq!(c.class, ModelClass::BoundaryS2Lt1);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn zero_claims_sequences_alternate() {
        let m = explicit(&[&[1.0]]);
        let seq = ab_sequences(&m, 20).unwrap();
        for n in 0..seq.a.len() {
            let (a, b) = if n % 2 == 0 { (1, 0) } else { (-1, 1) };
            assert_eq!(seq.a[n], a, "a_{n}");
            assert_eq!(seq.b[n], b, "b_{n}");
        }
        let est = phi0_estimate(&seq, &Precision::default().zero()).unwrap();
        assert_eq!(est.phi0, 1);
        assert!(est.delta.is_zero());
    }

    #[test]
    fn ab_sequences_seed_and_residuals() {
        let opts = EngineOptions::default();
        let m = JointMatrix::build(&example1(0.01), &opts.build_options(12)).unwrap();
        let seq = ab_sequences(&m, 20).unwrap();
        let y0 = m.y(0);
        assert_eq!(seq.a[1], -Float::with_val(256, y0.recip_ref()));
        assert_eq!(seq.b[1], Float::with_val(256, y0.recip_ref()));
        assert_eq!(seq.a.len(), 23);
        for r in seq.recursion_residuals(&m) {
            assert!(r < 1e-50, "residual {}", r.to_f64());
        }
    }

    #[test]
    fn ab_sequences_reject_other_classes() {
        let m = explicit(&[&[0.0, 1.0]]);
        assert!(matches!(
            ab_sequences(&m, 20),
            Err(RuinError::WrongClass { .. })
        ));
    }

    #[test]
    fn phi0_estimate_requires_horizon() {
        let m = explicit(&[&[1.0]]);
        let seq = ab_sequences(&m, 20).unwrap();
        let zero = Precision::default().zero();
        assert!(phi0_estimate_at(&seq, &zero, 1).is_err());
        assert!(phi0_estimate_at(&seq, &zero, 21).is_err());
    }

    #[test]
    fn degenerate_ratio_is_reported() {
        let prec = Precision::default();
        let seq = ABSequences {
            a: vec![prec.one(); 5],
            b: vec![prec.zero(); 5],
            horizon: 2,
        };
        assert!(matches!(
            phi0_estimate(&seq, &prec.zero()),
            Err(RuinError::DegenerateRatio { horizon: 2 })
        ));
    }

    #[test]
    fn precision_exhaustion_is_reported() {
        // Tiny s_0 makes a_n grow like s_0^-n.
        let low = from_explicit(
            &[vec![1e-6, 0.3], vec![0.4, 0.299999]],
            Precision::new(64).unwrap(),
        )
        .unwrap();
        let r = survival_table(&low, 12, 20);
        assert!(matches!(r, Err(RuinError::Precision(_))), "{r:?}");
    }

    #[test]
    fn theorem_two_tables() {
        let t = survival_table(&explicit(&[&[0.0, 0.0], &[0.0, 1.0]]), 6, 20).unwrap();
        assert_eq!(t.psi_f64(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let t = survival_table(&explicit(&[&[0.0], &[0.0], &[1.0]]), 6, 20).unwrap();
        assert_eq!(t.psi_f64(), vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let t = survival_table(&explicit(&[&[0.0, 0.0, 0.0, 1.0]]), 6, 20).unwrap();
        assert!(t.psi_f64().iter().all(|&p| p == 1.0));
        let t = survival_table(
            &explicit(&[&[0.5, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 0.5]]),
            6,
            20,
        )
        .unwrap();
        assert!(t.psi_f64().iter().all(|&p| p == 1.0));
        assert!(t.diagnostics.p5_residual.is_none());
    }

    #[test]
    fn zero_claims_table_through_ratio_pipeline() {
        let t = survival_table(&explicit(&[&[1.0]]), 12, 20).unwrap();
        assert_eq!(t.model_class, ModelClass::NetProfitS0Pos);
        assert!(t.psi.iter().all(|p| p.is_zero()));
        assert!(t.diagnostics.max_p1_residual.is_zero());
        assert!(t.diagnostics.p5_residual.as_ref().unwrap().is_zero());
    }

    #[test]
    fn s0_zero_branches_satisfy_identities() {
        let models: [&[&[f64]]; 4] = [
            &[&[0.0, 0.6, 0.2], &[0.0, 0.2]],
            &[&[0.0], &[0.5, 0.1], &[0.3, 0.1]],
            &[&[0.0, 0.4, 0.1], &[0.3, 0.1], &[0.1]],
            &[&[0.0, 0.0, 0.2], &[0.5, 0.1], &[0.2]],
        ];
        for rows in models {
            let m = explicit(rows);
            let t = survival_table(&m, 10, 20).unwrap();
            assert!(t.model_class.is_net_profit());
            assert_ne!(t.model_class, ModelClass::NetProfitS0Pos);
            assert!(t.diagnostics.max_p1_residual < 1e-60, "{rows:?}");
            assert!(*t.diagnostics.p5_residual.as_ref().unwrap() < 1e-60);
        }
    }

    #[test]
    fn example_one_phi0_and_delta() {
        let opts = EngineOptions::default();
        let sol = solve(&example1(0.15), 12, &opts).unwrap();
        assert!((sol.table.psi[0].to_f64() - 0.7921).abs() < 5e-5);
        assert!(sol.table.delta < 1e-10);
        assert!(sol.table.diagnostics.max_p1_residual < 1e-9);
    }

    #[test]
    fn window_errors_surface() {
        let m = JointMatrix::build(
            &DependenceSpec::Product {
                x: MarginalSpec::Poisson { rate: 0.2 },
                y: MarginalSpec::ShiftedZeta { exponent: 2.3 },
            },
            &BuildOptions::with_window(Precision::default(), 10),
        )
        .unwrap();
        assert!(matches!(
            survival_table(&m, 12, 20),
            Err(RuinError::WindowTooSmall { .. })
        ));
    }
}
