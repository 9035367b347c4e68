//! Continued-fraction fast path for `m = n = 1`.
//!
//! For `eps < 1/2` every primitive solution of `|q theta - p| |q| <= eps` is a
//! convergent, so the qualifying pairs are the convergents with small enough
//! error and, without the gcd condition, their multiples `g (p, q)` with
//! `g^2 err <= eps`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::enumerate::{order_stream, ApproximateStream, EnumConfig, Member, Mode, StreamOrdering};
use crate::error::{Error, Result};
use crate::types::{Approximate, Precision, Setup, Target};

/// Partial quotients of a rational number.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFraction {
    quotients: Vec<BigInt>,
    /// complete quotients `alpha_l`, `alpha_0 = theta`
    complete: Vec<f64>,
}

impl ContinuedFraction {
    pub fn from_ratio(num: &BigInt, den: &BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidParams("zero denominator".into()));
        }
        let (mut a, mut b) = if den.is_negative() {
            (-num.clone(), -den.clone())
        } else {
            (num.clone(), den.clone())
        };
        let mut quotients = Vec::new();
        loop {
            let (q, r) = a.div_mod_floor(&b);
            quotients.push(q);
            if r.is_zero() {
                break;
            }
            a = b;
            b = r;
        }
        let mut complete = vec![0.0; quotients.len()];
        let last = quotients.len() - 1;
        complete[last] = quotient_f64(&quotients[last]);
        for l in (0..last).rev() {
            complete[l] = quotient_f64(&quotients[l]) + 1.0 / complete[l + 1];
        }
        Ok(ContinuedFraction {
            quotients,
            complete,
        })
    }

    pub fn from_rational(v: &BigRational) -> Result<Self> {
        ContinuedFraction::from_ratio(v.numer(), v.denom())
    }

    pub fn quotients(&self) -> &[BigInt] {
        &self.quotients
    }

    /// Number of convergents (the last one equals the number itself).
    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotients.is_empty()
    }

    /// Walks the convergents `h_l / k_l` while `log k_l <= t`.
    pub fn convergents(&self, t: f64, moduli: &[u64]) -> Vec<Convergent> {
        let mut out = Vec::new();
        let mut exact: Option<[i128; 4]> = Some([1, 0, 0, 1]); // h_{l-1}, h_{l-2}, k_{l-1}, k_{l-2}
        let mut res: Vec<[u64; 4]> = moduli.iter().map(|&n| [1 % n, 0, 0, 1 % n]).collect();
        let mut log_k = f64::NEG_INFINITY;
        let mut ratio = 0.0; // k_{l-1} / k_l
        for (l, a) in self.quotients.iter().enumerate() {
            let af = quotient_f64(a);
            if l == 0 {
                log_k = 0.0;
                ratio = 0.0;
            } else {
                log_k += (af + ratio).ln();
                ratio = 1.0 / (af + ratio);
            }
            if log_k > t {
                break;
            }
            exact = exact.and_then(|[h1, h2, k1, k2]| {
                let ai = a.to_i128()?;
                let h = ai.checked_mul(h1)?.checked_add(h2)?;
                let k = ai.checked_mul(k1)?.checked_add(k2)?;
                Some([h, h1, k, k1])
            });
            let residues = res
                .iter_mut()
                .zip(moduli)
                .map(|(s, &n)| {
                    let am = a.mod_floor(&BigInt::from(n)).to_u64().unwrap();
                    let h = (mulmod(am, s[0], n) + s[1]) % n;
                    let k = (mulmod(am, s[2], n) + s[3]) % n;
                    *s = [h, s[0], k, s[2]];
                    (h, k)
                })
                .collect();
            let alpha_next = self.complete.get(l + 1).copied().unwrap_or(f64::INFINITY);
            out.push(Convergent {
                index: l,
                log_k,
                prev_ratio: ratio,
                alpha_next,
                exact: exact.map(|[h, _, k, _]| (h, k)),
                residues,
            });
        }
        out
    }
}

fn mulmod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn quotient_f64(a: &BigInt) -> f64 {
    a.to_f64().unwrap_or(f64::INFINITY)
}

/// One convergent `h_l / k_l` with the floating data needed downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct Convergent {
    pub index: usize,
    pub log_k: f64,
    /// `k_{l-1} / k_l`
    pub prev_ratio: f64,
    /// complete quotient `alpha_{l+1}`, infinite at the last convergent
    pub alpha_next: f64,
    /// `(h_l, k_l)` while they fit in i128
    pub exact: Option<(i128, i128)>,
    /// `(h_l mod N, k_l mod N)` per modulus
    pub residues: Vec<(u64, u64)>,
}

impl Convergent {
    /// `k_l |k_l theta - h_l| = 1 / (alpha_{l+1} + k_{l-1}/k_l)`.
    pub fn error(&self) -> f64 {
        1.0 / (self.alpha_next + self.prev_ratio)
    }

    /// `log |k_l theta - h_l|`.
    pub fn log_abs_residual(&self) -> f64 {
        self.error().ln() - self.log_k
    }

    /// Sign of `k_l theta - h_l`, which alternates as `(-1)^l`.
    pub fn residual_sign(&self) -> i8 {
        if self.index.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha_next.is_infinite()
    }
}

/// A qualifying pair `g (-h_l, k_l)` with `q > 0`, kept in logarithmic form so
/// heights far beyond i64 stay usable.
#[derive(Clone, Debug, PartialEq)]
pub struct CfApproximate {
    pub index: usize,
    pub multiplier: u64,
    /// sign of `p + theta q`
    pub residual_sign: i8,
    pub log_abs_residual: f64,
    pub log_height: f64,
    pub error: f64,
    pub prev_ratio: f64,
    /// `(p mod N, q mod N)` per modulus
    pub residues: Vec<(u64, u64)>,
    pub exact: Option<(i128, i128)>,
}

impl CfApproximate {
    pub fn is_primitive(&self) -> bool {
        self.multiplier == 1
    }
}

/// Checks `m = n = 1`, `eps < 1/2`, `eta < 1/2`.
pub fn check_cf_setup(setup: &Setup) -> Result<()> {
    let dec = &setup.dec;
    if dec.m() != 1 || dec.n() != 1 {
        return Err(Error::Precondition(
            "the continued-fraction path needs m = n = 1".into(),
        ));
    }
    if setup.params.epsilon >= 0.5 {
        return Err(Error::Precondition(
            "the continued-fraction path needs eps < 1/2".into(),
        ));
    }
    if setup.params.etas[0] >= 0.5 {
        return Err(Error::Precondition(
            "the continued-fraction path needs eta < 1/2".into(),
        ));
    }
    Ok(())
}

fn exact_theta(target: &Target) -> Result<&BigRational> {
    match (target.precision(), target.exact()) {
        (Precision::Rational { .. }, Some(v)) if v.len() == 1 => Ok(&v[0]),
        _ => Err(Error::Precondition(
            "the continued-fraction path needs a 1x1 big-rational target".into(),
        )),
    }
}

/// Denominator bit length required for height `e^t`.
pub fn required_bits(t: f64) -> u64 {
    (4.0 * t / std::f64::consts::LN_2).ceil() as u64
}

fn check_bits(theta: &BigRational, t: f64) -> Result<()> {
    let bits = theta.denom().bits();
    if bits < required_bits(t) {
        return Err(Error::PrecisionEnvelope {
            precision: format!("rational:{bits}"),
            max_t: Precision::cf_envelope(bits),
            requested: t,
        });
    }
    Ok(())
}

/// Qualifying pairs with `q > 0` up to height `e^t`, in convergent order.
/// The rational is taken as exact; no bit-length rule is applied.
pub fn cf_approximates(
    cf: &ContinuedFraction,
    setup: &Setup,
    t: f64,
    mode: Mode,
    divisor: u64,
) -> Result<Vec<CfApproximate>> {
    check_cf_setup(setup)?;
    let eps = setup.params.epsilon;
    let eta = setup.params.etas[0];
    let moduli = &setup.params.congruence_moduli;
    let mut out = Vec::new();
    for c in cf.convergents(t, moduli) {
        let err = c.error();
        let log_r = c.log_abs_residual();
        let mults: Vec<u64> = match mode {
            Mode::Epsilon => vec![1],
            Mode::EpsilonStar => {
                // g^2 err <= eps, g |r| <= eta, g k <= e^t
                let by_err = if err > 0.0 { (eps / err).sqrt() } else { f64::INFINITY };
                let by_eta = (eta.ln() - log_r).exp();
                let by_height = (t - c.log_k).exp();
                let gmax = by_err.min(by_eta).min(by_height).floor().min(1e7) as u64;
                (1..=gmax)
                    .filter(|g| g % divisor == 0)
                    .collect()
            }
        };
        for g in mults {
            let gf = g as f64;
            let error = gf * gf * err;
            let log_abs_residual = log_r + gf.ln();
            let log_height = c.log_k + gf.ln();
            if error > eps || log_abs_residual > eta.ln() || log_height > t {
                continue;
            }
            if let Some((_, k)) = c.exact {
                if (k as f64) * gf > t.exp() {
                    continue;
                }
            }
            let residues = c
                .residues
                .iter()
                .zip(moduli)
                .map(|(&(h, k), &n)| {
                    let gm = g % n;
                    ((n - mulmod(gm, h, n)) % n, mulmod(gm, k, n))
                })
                .collect();
            out.push(CfApproximate {
                index: c.index,
                multiplier: g,
                residual_sign: c.residual_sign(),
                log_abs_residual,
                log_height,
                error,
                prev_ratio: c.prev_ratio,
                residues,
                exact: c.exact,
            });
        }
    }
    Ok(out)
}

fn to_member(a: &CfApproximate) -> Result<Option<Member>> {
    let (h, k) = a
        .exact
        .ok_or_else(|| Error::Overflow("convergent exceeds i128".into()))?;
    let g = a.multiplier as i128;
    let p = (-h)
        .checked_mul(g)
        .and_then(|x| i64::try_from(x).ok())
        .ok_or_else(|| Error::Overflow("p exceeds i64".into()))?;
    let q = k
        .checked_mul(g)
        .and_then(|x| i64::try_from(x).ok())
        .ok_or_else(|| Error::Overflow("q exceeds i64".into()))?;
    if a.log_abs_residual == f64::NEG_INFINITY {
        return Ok(None);
    }
    let r = a.residual_sign as f64 * a.log_abs_residual.exp();
    let height = q as f64;
    Ok(Some(Member {
        approx: Approximate {
            p: vec![p],
            q: vec![q],
            primitive: a.multiplier == 1,
            height,
        },
        residual: vec![r],
        block_norms: vec![r.abs(), height],
        error: a.error,
    }))
}

fn stream_from(approx: &[CfApproximate], setup: &Setup, ordering: StreamOrdering) -> Result<ApproximateStream> {
    let mut members = Vec::new();
    let mut degenerate = Vec::new();
    for a in approx {
        match to_member(a)? {
            Some(m) => {
                members.push(m.negated());
                members.push(m);
            }
            None => {
                let (h, k) = a.exact.unwrap();
                let g = a.multiplier as i128;
                let p = i64::try_from(-h * g).map_err(|_| Error::Overflow("p".into()))?;
                let q = i64::try_from(k * g).map_err(|_| Error::Overflow("q".into()))?;
                let m = Member {
                    approx: Approximate {
                        p: vec![p],
                        q: vec![q],
                        primitive: a.multiplier == 1,
                        height: q as f64,
                    },
                    residual: vec![0.0],
                    block_norms: vec![0.0, q as f64],
                    error: 0.0,
                };
                degenerate.push(m.negated());
                degenerate.push(m);
            }
        }
    }
    let stream = ApproximateStream {
        members,
        degenerate,
        ordering: StreamOrdering::IncreasingQ,
    };
    let mut stream = order_stream(stream, StreamOrdering::IncreasingQ, 2, 1);
    stream
        .degenerate
        .sort_by(|a, b| a.approx.height.total_cmp(&b.approx.height).then_with(|| (&a.approx.q, &a.approx.p).cmp(&(&b.approx.q, &b.approx.p))));
    Ok(order_stream(stream, ordering, setup.params.shape_index, 1))
}

/// Fast-path enumeration; same output set as `enumerate_direct` where both
/// apply. Requires a big-rational target whose denominator has at least
/// `4 T / ln 2` bits.
pub fn enumerate_cf(target: &Target, setup: &Setup, cfg: &EnumConfig) -> Result<ApproximateStream> {
    cfg.validate()?;
    check_cf_setup(setup)?;
    target.check_shape(&setup.dec)?;
    let theta = exact_theta(target)?;
    check_bits(theta, cfg.t)?;
    let cf = ContinuedFraction::from_rational(theta)?;
    let approx = cf_approximates(&cf, setup, cfg.t, cfg.mode, cfg.divisor)?;
    stream_from(&approx, setup, cfg.ordering)
}

/// Treats `theta` as the exact rational it is, with no bit-length rule; the
/// expansion terminates and the last convergent is degenerate.
pub fn enumerate_cf_exact(theta: &BigRational, setup: &Setup, cfg: &EnumConfig) -> Result<ApproximateStream> {
    cfg.validate()?;
    check_cf_setup(setup)?;
    let cf = ContinuedFraction::from_rational(theta)?;
    let approx = cf_approximates(&cf, setup, cfg.t, cfg.mode, cfg.divisor)?;
    stream_from(&approx, setup, cfg.ordering)
}

/// Qualifying pairs of a big-rational target in logarithmic form, after the
/// bit-length check.
pub fn cf_approximates_checked(target: &Target, setup: &Setup, t: f64, mode: Mode, divisor: u64) -> Result<Vec<CfApproximate>> {
    check_cf_setup(setup)?;
    let theta = exact_theta(target)?;
    check_bits(theta, t)?;
    let cf = ContinuedFraction::from_rational(theta)?;
    cf_approximates(&cf, setup, t, mode, divisor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Decomposition;
    use num_traits::One;

    fn fib(n: usize) -> (BigInt, BigInt) {
        let (mut a, mut b) = (BigInt::zero(), BigInt::one());
        for _ in 0..n {
            let c = &a + &b;
            a = b;
            b = c;
        }
        (a, b)
    }

    #[test]
    fn quotients_of_simple_rationals() {
        let cf = ContinuedFraction::from_ratio(&BigInt::from(1), &BigInt::from(3)).unwrap();
        assert_eq!(cf.quotients(), &[BigInt::from(0), BigInt::from(3)]);
        let cf = ContinuedFraction::from_ratio(&BigInt::from(-7), &BigInt::from(2)).unwrap();
        assert_eq!(cf.quotients(), &[BigInt::from(-4), BigInt::from(2)]);
        let conv = cf.convergents(10.0, &[]);
        assert_eq!(conv.last().unwrap().exact, Some((-7, 2)));
    }

    #[test]
    fn one_third_terminates() {
        let setup = Setup::simple(Decomposition::scalar(), 0.4, 0.4).unwrap();
        let theta = BigRational::new(BigInt::from(1), BigInt::from(3));
        let stream = enumerate_cf_exact(&theta, &setup, &EnumConfig::new(10.0, Mode::Epsilon)).unwrap();
        // (0, 1) has error 1/3; (-1, 3) is exact and degenerate
        let got: Vec<(i64, i64)> = stream.approximates().map(|a| (a.p[0], a.q[0])).collect();
        assert_eq!(got, vec![(0, -1), (0, 1)]);
        assert_eq!(stream.degenerate.len(), 2);
    }

    #[test]
    fn golden_like_stream_is_empty_below_the_limit() {
        let (a, b) = fib(301);
        let theta = BigRational::new(a, b);
        let target = Target::from_rationals(1, 1, vec![theta]).unwrap();
        let setup = Setup::simple(Decomposition::scalar(), 0.4, 0.3).unwrap();
        let stream = enumerate_cf(&target, &setup, &EnumConfig::new(30.0, Mode::Epsilon)).unwrap();
        assert!(stream.is_empty());
        // the error of the golden convergents tends to 1/sqrt 5
        let cf = ContinuedFraction::from_rational(&target.exact().unwrap()[0]).unwrap();
        let conv = cf.convergents(30.0, &[]);
        let last = conv.last().unwrap();
        assert!((last.error() - 1.0 / 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn bit_rule_is_enforced() {
        let target = Target::random(1, 1, Precision::Rational { bits: 64 }, 1);
        let setup = Setup::simple(Decomposition::scalar(), 0.4, 0.4).unwrap();
        assert!(enumerate_cf(&target, &setup, &EnumConfig::new(11.2, Mode::Epsilon)).is_ok());
        let err = enumerate_cf(&target, &setup, &EnumConfig::new(12.0, Mode::Epsilon)).unwrap_err();
        assert!(matches!(err, Error::PrecisionEnvelope { .. }));
        let wide = Setup::simple(Decomposition::scalar(), 0.5, 0.4).unwrap();
        assert!(matches!(
            enumerate_cf(&target, &wide, &EnumConfig::new(5.0, Mode::Epsilon)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn convergent_residues_and_ratios() {
        // 13/21 = [0; 1, 1, 1, 1, 1, 2]
        let cf = ContinuedFraction::from_ratio(&BigInt::from(13), &BigInt::from(21)).unwrap();
        let conv = cf.convergents(10.0, &[5, 7]);
        for c in &conv {
            let (h, k) = c.exact.unwrap();
            assert_eq!(c.residues[0], (h.rem_euclid(5) as u64, k.rem_euclid(5) as u64));
            assert_eq!(c.residues[1], (h.rem_euclid(7) as u64, k.rem_euclid(7) as u64));
            assert!((c.log_k - (k as f64).ln()).abs() < 1e-12);
            if c.index > 0 {
                let (_, kp) = conv[c.index - 1].exact.unwrap();
                assert!((c.prev_ratio - kp as f64 / k as f64).abs() < 1e-15);
            }
            if !c.is_degenerate() {
                let r = k as f64 * 13.0 / 21.0 - h as f64;
                assert!((c.error() - (k as f64 * r).abs()).abs() < 1e-12);
                assert_eq!(r.signum() as i8, c.residual_sign());
            }
        }
    }
}
