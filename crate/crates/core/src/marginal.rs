//! Nonnegative integer-valued claim distributions.

use rug::ops::Pow;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RuinError};
use crate::precision::{decimal_float, decimal_rational, MeanValue, Precision};

/// Relative accuracy targeted by the power-sum tails (and hence ζ): 2^-80 ≈ 8.3e-25.
const POWER_TAIL_REL_BITS: i32 = 80;

/// Truncation indices beyond this are reported as unbounded.
const UNBOUNDED_INDEX: f64 = 1e15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum MarginalSpec {
    Poisson {
        rate: f64,
    },
    /// P(Y = m) = (m+1)^-exponent / ζ(exponent), m = 0, 1, 2, ...
    ShiftedZeta {
        exponent: f64,
    },
    Finite {
        pmf: Vec<f64>,
    },
}

impl MarginalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            MarginalSpec::Poisson { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(RuinError::Parameter(format!(
                        "Poisson rate must be positive, got {rate}"
                    )));
                }
            }
            MarginalSpec::ShiftedZeta { exponent } => {
                if !(exponent.is_finite() && *exponent > 1.0) {
                    return Err(RuinError::Parameter(format!(
                        "shifted-Zeta exponent must exceed 1, got {exponent}"
                    )));
                }
            }
            MarginalSpec::Finite { pmf } => {
                if pmf.is_empty() {
                    return Err(RuinError::Parameter("finite pmf is empty".into()));
                }
                let mut total = Rational::new();
                for (k, &p) in pmf.iter().enumerate() {
                    if !(p.is_finite() && p >= 0.0) {
                        return Err(RuinError::Parameter(format!(
                            "finite pmf entry {k} is {p}, expected a nonnegative number"
                        )));
                    }
                    total += decimal_rational(p)?;
                }
                let gap = (total - Rational::from(1)).abs();
                if gap > (1, 1_000_000_000_000u64) {
                    return Err(RuinError::Parameter(format!(
                        "finite pmf sums to 1 + {}, outside 1e-12",
                        gap.to_f64()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether the distribution has a finite second moment.
    pub fn has_finite_variance(&self) -> bool {
        match self {
            MarginalSpec::ShiftedZeta { exponent } => *exponent > 3.0,
            _ => true,
        }
    }
}

/// e^-rate · rate^k / k!, evaluated in log space.
pub fn poisson_pmf(rate: f64, k: u64, prec: Precision) -> Result<Float> {
    MarginalSpec::Poisson { rate }.validate()?;
    let rate = decimal_float(rate, prec)?;
    Ok(poisson_pmf_log_space(&rate, k, prec))
}

fn poisson_pmf_log_space(rate: &Float, k: u64, prec: Precision) -> Float {
    let bits = prec.bits();
    let mut log_p = Float::with_val(bits, rate.ln_ref()) * k;
    log_p -= rate;
    log_p -= Float::with_val(bits, k + 1).ln_gamma();
    log_p.exp()
}

/// Σ_{n ≥ start} n^-s for s > 1: direct summation up to M, then the Euler–Maclaurin
/// tail through the B₄ term. M is the smallest index at which the first omitted (B₆)
/// term falls below 2^-80 of the leading summand.
fn power_tail(s: &Float, start: u64, prec: Precision) -> Float {
    let bits = prec.bits();
    let sf = s.to_f64();
    let b6_coeff = sf * (sf + 1.0) * (sf + 2.0) * (sf + 3.0) * (sf + 4.0) / 30240.0;
    let rel = POWER_TAIL_REL_BITS as f64 * std::f64::consts::LN_2;
    let log_m = (b6_coeff.ln() + rel + sf * (start as f64).ln()) / (sf + 5.0);
    let m = (log_m.exp().ceil() as u64).max(start).max(2);

    let neg_s = Float::with_val(bits, -s);
    let mut sum = Float::new(bits);
    for n in start..m {
        sum += Float::with_val(bits, n).pow(&neg_s);
    }

    let m_f = Float::with_val(bits, m);
    let m_pow_neg_s = Float::with_val(bits, (&m_f).pow(&neg_s));
    let s_minus_1 = Float::with_val(bits, s - 1u32);
    // M^{1-s}/(s-1)
    sum += Float::with_val(bits, &m_pow_neg_s * &m_f) / &s_minus_1;
    // M^{-s}/2
    sum += Float::with_val(bits, &m_pow_neg_s >> 1u32);
    // B₂: s M^{-s-1} / 12
    let m_inv = Float::with_val(bits, m_f.recip_ref());
    let term1 = Float::with_val(bits, &m_pow_neg_s * &m_inv) * s / 12u32;
    sum += &term1;
    // B₄: -s(s+1)(s+2) M^{-s-3} / 720
    let m_inv2 = Float::with_val(bits, m_inv.square_ref());
    let rising = Float::with_val(bits, s + 1u32) * Float::with_val(bits, s + 2u32);
    let term2 = term1 * rising * m_inv2 / 60u32;
    sum -= term2;
    sum
}

/// Riemann zeta function for real s > 1.
pub fn riemann_zeta(s: f64, prec: Precision) -> Result<Float> {
    if !(s.is_finite() && s > 1.0) {
        return Err(RuinError::Parameter(format!(
            "zeta argument must exceed 1, got {s}"
        )));
    }
    let s = decimal_float(s, prec)?;
    Ok(power_tail(&s, 1, prec))
}

/// (m+1)^-exponent / ζ(exponent).
pub fn shifted_zeta_pmf(exponent: f64, m: u64, prec: Precision) -> Result<Float> {
    let zeta = riemann_zeta(exponent, prec)?;
    let s = decimal_float(exponent, prec)?;
    let term = Float::with_val(prec.bits(), m + 1).pow(-s);
    Ok(term / zeta)
}

/// Closed-form mean. Never derived from a truncated table.
pub fn exact_mean(spec: &MarginalSpec, prec: Precision) -> Result<MeanValue> {
    spec.validate()?;
    match spec {
        MarginalSpec::Poisson { rate } => Ok(MeanValue::Exact(decimal_rational(*rate)?)),
        MarginalSpec::ShiftedZeta { exponent } => {
            if *exponent <= 2.0 {
                return Err(RuinError::InfiniteMean(format!(
                    "shifted-Zeta({exponent}) has infinite mean; exponent must exceed 2"
                )));
            }
            let s = decimal_float(*exponent, prec)?;
            let s_minus_1 = Float::with_val(prec.bits(), &s - 1u32);
            let zeta_s = power_tail(&s, 1, prec);
            let zeta_s1 = power_tail(&s_minus_1, 1, prec);
            Ok(MeanValue::Approx(zeta_s1 / zeta_s - 1u32))
        }
        MarginalSpec::Finite { pmf } => {
            let mut mean = Rational::new();
            for (k, &p) in pmf.iter().enumerate() {
                mean += decimal_rational(p)? * Rational::from(k);
            }
            Ok(MeanValue::Exact(mean))
        }
    }
}

#[derive(Debug, Clone)]
enum Law {
    Poisson { rate: Float },
    ShiftedZeta { exponent: Float, zeta: Float },
    Finite { pmf: Vec<Float> },
}

const DIRECT_CDF_LIMIT: usize = 100_000;

/// A validated marginal with its normalizing constants and exact mean.
#[derive(Debug, Clone)]
pub struct MarginalDist {
    spec: MarginalSpec,
    prec: Precision,
    law: Law,
    mean: MeanValue,
}

impl MarginalDist {
    pub fn new(spec: &MarginalSpec, prec: Precision) -> Result<Self> {
        let mean = exact_mean(spec, prec)?;
        let law = match spec {
            MarginalSpec::Poisson { rate } => Law::Poisson {
                rate: decimal_float(*rate, prec)?,
            },
            MarginalSpec::ShiftedZeta { exponent } => {
                let exponent_f = decimal_float(*exponent, prec)?;
                let zeta = power_tail(&exponent_f, 1, prec);
                Law::ShiftedZeta {
                    exponent: exponent_f,
                    zeta,
                }
            }
            MarginalSpec::Finite { pmf } => Law::Finite {
                pmf: pmf
                    .iter()
                    .map(|&p| decimal_float(p, prec))
                    .collect::<Result<_>>()?,
            },
        };
        Ok(MarginalDist {
            spec: spec.clone(),
            prec,
            law,
            mean,
        })
    }

    pub fn spec(&self) -> &MarginalSpec {
        &self.spec
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    pub fn mean(&self) -> &MeanValue {
        &self.mean
    }

    pub fn pmf(&self, k: usize) -> Float {
        let bits = self.prec.bits();
        match &self.law {
            Law::Poisson { rate } => poisson_pmf_log_space(rate, k as u64, self.prec),
            Law::ShiftedZeta { exponent, zeta } => {
                let neg = Float::with_val(bits, -exponent);
                Float::with_val(bits, k + 1).pow(&neg) / zeta
            }
            Law::Finite { pmf } => pmf.get(k).cloned().unwrap_or_else(|| self.prec.zero()),
        }
    }

    /// pmf(0), ..., pmf(len - 1).
    pub fn pmf_table(&self, len: usize) -> Vec<Float> {
        let bits = self.prec.bits();
        match &self.law {
            Law::Poisson { rate } => {
                let mut out = Vec::with_capacity(len);
                let mut p = Float::with_val(bits, -rate).exp();
                for k in 0..len {
                    if k > 0 {
                        p *= rate;
                        p /= k as u32;
                    }
                    out.push(p.clone());
                }
                out
            }
            _ => (0..len).map(|k| self.pmf(k)).collect(),
        }
    }

    /// F(0), ..., F(len - 1).
    pub fn cdf_table(&self, len: usize) -> Vec<Float> {
        let mut acc = self.prec.zero();
        self.pmf_table(len)
            .into_iter()
            .map(|p| {
                acc += p;
                acc.clone()
            })
            .collect()
    }

    /// F(k). Beyond `DIRECT_CDF_LIMIT` a heavy tail is summed in closed form as 1 - P(X > k).
    pub fn cdf(&self, k: usize) -> Float {
        if matches!(self.law, Law::ShiftedZeta { .. }) && k > DIRECT_CDF_LIMIT {
            let tail = self.tail_mass(k);
            return Float::with_val(self.prec.bits(), 1u32 - &tail);
        }
        self.cdf_table(k + 1)
            .pop()
            .expect("table has k + 1 entries")
    }

    /// P(X > k), accurate to working precision (ζ-normalized laws: to about 2^-80 relative).
    pub fn tail_mass(&self, k: usize) -> Float {
        let bits = self.prec.bits();
        match &self.law {
            Law::Poisson { rate } => {
                // p_{k+1} (1 + r/(k+2) + r²/((k+2)(k+3)) + ...)
                let lead = poisson_pmf_log_space(rate, k as u64 + 1, self.prec);
                let mut term = self.prec.one();
                let mut factor_sum = self.prec.zero();
                let stop = self.prec.negligible();
                let mut j = k as u64 + 2;
                loop {
                    factor_sum += &term;
                    term *= rate;
                    term /= j;
                    j += 1;
                    if j as f64 > rate.to_f64() && term < Float::with_val(bits, &factor_sum * &stop)
                    {
                        break;
                    }
                }
                lead * factor_sum
            }
            Law::ShiftedZeta { exponent, zeta } => {
                power_tail(exponent, k as u64 + 2, self.prec) / zeta
            }
            Law::Finite { pmf } => {
                let mut t = self.prec.zero();
                for p in pmf.iter().skip(k + 1) {
                    t += p;
                }
                t
            }
        }
    }

    /// Smallest K with P(X > K) < eps; `usize::MAX` when that index is astronomically large.
    pub fn truncation_index(&self, eps: &Float) -> usize {
        match &self.law {
            Law::Poisson { .. } => {
                let mut k = 0;
                while self.tail_mass(k) >= *eps {
                    k += 1;
                }
                k
            }
            Law::ShiftedZeta { exponent, zeta } => {
                // tail(K) ≈ (K + 1.5)^{1-s} / ((s-1) ζ(s))
                let s = exponent.to_f64();
                let log_guess =
                    -((s - 1.0).ln() + zeta.to_f64().ln() + eps.to_f64().ln()) / (s - 1.0);
                let guess = log_guess.exp() - 1.5;
                if !guess.is_finite() || guess > UNBOUNDED_INDEX {
                    return usize::MAX;
                }
                let mut k = guess.max(0.0) as usize;
                while k > 0 && self.tail_mass(k - 1) < *eps {
                    k -= 1;
                }
                while self.tail_mass(k) >= *eps {
                    k += 1;
                }
                k
            }
            Law::Finite { pmf } => {
                let mut k = 0;
                while k + 1 < pmf.len() && self.tail_mass(k) >= *eps {
                    k += 1;
                }
                k
            }
        }
    }

    /// Support is finite or the tail dies out within working precision.
    pub fn is_light_tailed(&self) -> bool {
        !matches!(self.law, Law::ShiftedZeta { .. })
    }
}

#[cfg(test)]
mod tests {
    use rug::float::Constant;

    use super::*;

    fn p256() -> Precision {
        Precision::default()
    }

    fn close(a: &Float, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol
    }

    #[test]
    fn poisson_pmf_examples() {
        let p = poisson_pmf(0.3, 0, p256()).unwrap();
        assert!(close(&p, (-0.3f64).exp(), 1e-15));
        let p = poisson_pmf(1.4, 1, p256()).unwrap();
        assert!(close(&p, 1.4 * (-1.4f64).exp(), 1e-15));
        assert!((0.740818 - poisson_pmf(0.3, 0, p256()).unwrap().to_f64()).abs() < 1e-6);
        assert!((0.345236 - poisson_pmf(1.4, 1, p256()).unwrap().to_f64()).abs() < 1e-6);
    }

    #[test]
    fn poisson_pmf_large_k_against_exact_rational() {
        // (3/10)^50 / 50! as an exact rational, times e^{-3/10} at 512 bits.
        let bits = 512;
        let ratio =
            Rational::from((3, 10)).pow(50u32) / rug::Integer::from(rug::Integer::factorial(50));
        let exp_neg = Float::with_val(bits, &Rational::from((-3, 10))).exp();
        let exact = Float::with_val(bits, &ratio) * exp_neg;
        let got = poisson_pmf(0.3, 50, p256()).unwrap();
        let rel = Float::with_val(bits, &got - &exact) / &exact;
        assert!(
            rel.to_f64().abs() < 1e-12,
            "relative error {}",
            rel.to_f64()
        );
        assert!(poisson_pmf(0.0, 1, p256()).is_err());
        assert!(poisson_pmf(-1.0, 1, p256()).is_err());
    }

    #[test]
    fn zeta_classical_values() {
        let bits = 256;
        let pi = Float::with_val(bits, Constant::Pi);
        let z2 = riemann_zeta(2.0, p256()).unwrap();
        let want2 = Float::with_val(bits, pi.square_ref()) / 6u32;
        let rel2 = Float::with_val(bits, &z2 - &want2) / &want2;
        assert!(
            rel2.to_f64().abs() <= 1e-18,
            "zeta(2) rel err {}",
            rel2.to_f64()
        );

        let z4 = riemann_zeta(4.0, p256()).unwrap();
        let want4 = Float::with_val(bits, pi.pow(4u32)) / 90u32;
        let rel4 = Float::with_val(bits, &z4 - &want4) / &want4;
        assert!(
            rel4.to_f64().abs() <= 1e-20,
            "zeta(4) rel err {}",
            rel4.to_f64()
        );

        assert!(riemann_zeta(1.0, p256()).is_err());
        assert!(riemann_zeta(0.5, p256()).is_err());
    }

    /// Plain summation with a midpoint integral tail, independent of the Euler–Maclaurin path:
    /// Σ_{n<M} n^-s + ∫_{M-1/2}^∞ x^-s dx, error about s M^{-s-1} / 24.
    fn zeta_plain_midpoint(s: f64, terms: u64, bits: u32) -> Float {
        let s_f = Float::with_val(bits, &decimal_rational(s).unwrap());
        let mut sum = Float::new(bits);
        for n in 1..terms {
            sum += Float::with_val(bits, n).pow(Float::with_val(bits, -&s_f));
        }
        let edge = Float::with_val(bits, terms) - Float::with_val(bits, 0.5);
        let s_minus_1 = Float::with_val(bits, &s_f - 1u32);
        sum + edge.pow(Float::with_val(bits, -&s_minus_1)) / s_minus_1
    }

    #[test]
    fn zeta_dual_method_at_2_3() {
        let em = riemann_zeta(2.3, p256()).unwrap();
        let plain = zeta_plain_midpoint(2.3, 100_000, 256);
        let diff = Float::with_val(256, &em - &plain).abs().to_f64();
        assert!(diff < 1e-15, "methods disagree by {diff}");
        assert!((em.to_f64() - 1.4324).abs() < 1e-4);
    }

    #[test]
    fn shifted_zeta_pmf_examples() {
        let z = riemann_zeta(2.3, p256()).unwrap().to_f64();
        let p0 = shifted_zeta_pmf(2.3, 0, p256()).unwrap().to_f64();
        assert!((p0 - 1.0 / z).abs() < 1e-15);
        let p1 = shifted_zeta_pmf(2.3, 1, p256()).unwrap().to_f64();
        assert!((p1 - 2f64.powf(-2.3) / z).abs() < 1e-15);
        assert!(shifted_zeta_pmf(1.0, 0, p256()).is_err());
    }

    #[test]
    fn shifted_zeta_sums_to_one_with_tail_bound() {
        // f64 summation over m = 0..10^6 plus the integral bound of the remainder.
        let s = 2.3f64;
        let z = riemann_zeta(s, p256()).unwrap().to_f64();
        let big_m = 1_000_000u64;
        let mut sum = 0.0f64;
        for m in (0..=big_m).rev() {
            sum += ((m + 1) as f64).powf(-s);
        }
        sum /= z;
        let tail_upper = ((big_m + 1) as f64).powf(1.0 - s) / ((s - 1.0) * z);
        assert!(sum <= 1.0 + 1e-6 && sum + tail_upper >= 1.0 - 1e-6);
        assert!((sum + tail_upper - 1.0).abs() < 1e-6);
    }

    #[test]
    fn exact_mean_examples() {
        let prec = p256();
        let m = exact_mean(&MarginalSpec::Poisson { rate: 0.3 }, prec).unwrap();
        assert_eq!(m, MeanValue::Exact(Rational::from((3, 10))));
        let m = exact_mean(&MarginalSpec::ShiftedZeta { exponent: 2.3 }, prec).unwrap();
        assert!(!m.is_exact());
        assert!((m.to_f64() - 1.74497).abs() < 1e-5, "mean {}", m.to_f64());
        let m = exact_mean(
            &MarginalSpec::Finite {
                pmf: vec![0.5, 0.5],
            },
            prec,
        )
        .unwrap();
        assert_eq!(m, MeanValue::Exact(Rational::from((1, 2))));
        let err = exact_mean(&MarginalSpec::ShiftedZeta { exponent: 2.0 }, prec);
        assert!(matches!(err, Err(RuinError::InfiniteMean(_))));
    }

    #[test]
    fn shifted_zeta_mean_within_summation_bracket() {
        // Σ_{m≤M} m pmf(m) plus lower/upper integral bounds on Σ_{m>M} m (m+1)^-s.
        let s = 2.3f64;
        let prec = p256();
        let z = riemann_zeta(s, prec).unwrap().to_f64();
        let big_m = 1_000_000u64;
        let mut head = 0.0f64;
        for m in (1..=big_m).rev() {
            head += m as f64 * ((m + 1) as f64).powf(-s);
        }
        let upper_tail = ((big_m + 1) as f64).powf(2.0 - s) / (s - 2.0);
        let lower_tail = ((big_m + 2) as f64).powf(2.0 - s) / (s - 2.0)
            - ((big_m + 1) as f64).powf(1.0 - s) / (s - 1.0);
        let lo = (head + lower_tail) / z;
        let hi = (head + upper_tail) / z;
        let mean = exact_mean(&MarginalSpec::ShiftedZeta { exponent: s }, prec)
            .unwrap()
            .to_f64();
        assert!(
            lo - 1e-9 <= mean && mean <= hi + 1e-9,
            "{lo} <= {mean} <= {hi}"
        );
    }

    fn all_specs() -> Vec<MarginalSpec> {
        vec![
            MarginalSpec::Poisson { rate: 0.3 },
            MarginalSpec::Poisson { rate: 1.4 },
            MarginalSpec::Poisson { rate: 7.5 },
            MarginalSpec::ShiftedZeta { exponent: 2.3 },
            MarginalSpec::ShiftedZeta { exponent: 4.5 },
            MarginalSpec::Finite {
                pmf: vec![0.25, 0.0, 0.5, 0.25],
            },
        ]
    }

    #[test]
    fn truncation_index_captures_mass() {
        let prec = p256();
        for spec in all_specs() {
            let dist = MarginalDist::new(&spec, prec).unwrap();
            for eps in [1e-6, 1e-9, 1e-12] {
                let eps_f = prec.float(eps);
                let k = dist.truncation_index(&eps_f);
                if k == usize::MAX {
                    continue;
                }
                let head = dist.cdf(k);
                assert!(head.to_f64() >= 1.0 - eps, "{spec:?} eps={eps} K={k}");
                let total = Float::with_val(256, &head + &dist.tail_mass(k));
                assert!(total.to_f64() >= 1.0 - 2.0 * eps);
                if k > 0 {
                    assert!(
                        dist.tail_mass(k - 1) >= eps_f,
                        "{spec:?}: K={k} is not minimal"
                    );
                }
            }
        }
    }

    #[test]
    fn head_plus_tail_is_one() {
        let prec = p256();
        for spec in all_specs() {
            let dist = MarginalDist::new(&spec, prec).unwrap();
            for k in [0usize, 1, 5, 30] {
                let total = Float::with_val(256, &dist.cdf(k) + &dist.tail_mass(k));
                assert!(
                    (total.to_f64() - 1.0).abs() <= 1e-12,
                    "{spec:?} k={k}: {}",
                    total.to_f64()
                );
            }
        }
    }

    #[test]
    fn cdf_is_running_sum_of_pmf() {
        let prec = p256();
        for spec in all_specs() {
            let dist = MarginalDist::new(&spec, prec).unwrap();
            let cdf = dist.cdf_table(20);
            let mut acc = prec.zero();
            for (k, c) in cdf.iter().enumerate() {
                let p = dist.pmf(k);
                assert!(p >= 0);
                acc += &p;
                assert!(Float::with_val(256, &acc - c).abs() < 1e-60);
                if k > 0 {
                    assert!(*c >= cdf[k - 1]);
                }
            }
        }
    }

    #[test]
    fn iterative_poisson_table_matches_log_space() {
        let prec = p256();
        let dist = MarginalDist::new(&MarginalSpec::Poisson { rate: 1.4 }, prec).unwrap();
        for (k, p) in dist.pmf_table(60).iter().enumerate() {
            let direct = dist.pmf(k);
            let rel = Float::with_val(256, p - &direct) / &direct;
            assert!(rel.to_f64().abs() < 1e-60);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(MarginalSpec::Poisson { rate: 0.0 }.validate().is_err());
        assert!(MarginalSpec::ShiftedZeta { exponent: 1.0 }
            .validate()
            .is_err());
        assert!(MarginalSpec::Finite {
            pmf: vec![0.5, 0.4]
        }
        .validate()
        .is_err());
        assert!(MarginalSpec::Finite {
            pmf: vec![1.5, -0.5]
        }
        .validate()
        .is_err());
        assert!(MarginalSpec::Finite {
            pmf: vec![0.1, 0.2, 0.7]
        }
        .validate()
        .is_ok());
        assert!(MarginalDist::new(&MarginalSpec::ShiftedZeta { exponent: 1.5 }, p256()).is_err());
    }
}
