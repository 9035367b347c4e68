//! Domain types shared by every module.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::ddouble::DoubleDouble;
use crate::error::{Error, Result};

/// Block structure `m = m_1 + ... + m_k`, `n = n_1 + ... + n_r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    m_parts: Vec<usize>,
    n_parts: Vec<usize>,
}

impl Decomposition {
    pub fn new(m_parts: Vec<usize>, n_parts: Vec<usize>) -> Result<Self> {
        if m_parts.is_empty() || n_parts.is_empty() {
            return Err(Error::InvalidDecomposition(
                "need k >= 1 and r >= 1 blocks".into(),
            ));
        }
        if m_parts.iter().chain(&n_parts).any(|&x| x == 0) {
            return Err(Error::InvalidDecomposition(
                "every block size must be >= 1".into(),
            ));
        }
        Ok(Decomposition { m_parts, n_parts })
    }

    /// `m = n = 1`, the classical one-dimensional setting.
    pub fn scalar() -> Self {
        Decomposition {
            m_parts: vec![1],
            n_parts: vec![1],
        }
    }

    pub fn m_parts(&self) -> &[usize] {
        &self.m_parts
    }
    pub fn n_parts(&self) -> &[usize] {
        &self.n_parts
    }
    pub fn m(&self) -> usize {
        self.m_parts.iter().sum()
    }
    pub fn n(&self) -> usize {
        self.n_parts.iter().sum()
    }
    pub fn d(&self) -> usize {
        self.m() + self.n()
    }
    pub fn k(&self) -> usize {
        self.m_parts.len()
    }
    pub fn r(&self) -> usize {
        self.n_parts.len()
    }
    /// Rank `k + r - 1` of the diagonal flow.
    pub fn flow_rank(&self) -> usize {
        self.k() + self.r() - 1
    }

    /// Sizes of all `k + r` blocks of a vector in `R^d`, p-blocks first.
    pub fn all_parts(&self) -> Vec<usize> {
        self.m_parts.iter().chain(&self.n_parts).copied().collect()
    }

    /// `(offset, len)` of each of the `k + r` blocks inside `R^d`.
    pub fn block_ranges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.k() + self.r());
        let mut off = 0;
        for len in self.all_parts() {
            out.push((off, len));
            off += len;
        }
        out
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join("+")
        };
        write!(f, "m={} n={}", join(&self.m_parts), join(&self.n_parts))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Sup,
    Euclidean,
    Taxicab,
}

impl std::str::FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sup" | "max" | "linf" => Ok(NormKind::Sup),
            "euclidean" | "l2" => Ok(NormKind::Euclidean),
            "taxicab" | "l1" => Ok(NormKind::Taxicab),
            other => Err(Error::InvalidParams(format!("unknown norm kind {other:?}"))),
        }
    }
}

/// One norm kind per block, `k + r` entries, p-blocks first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormSpec {
    kinds: Vec<NormKind>,
}

impl NormSpec {
    pub fn uniform(kind: NormKind, dec: &Decomposition) -> Self {
        NormSpec {
            kinds: vec![kind; dec.k() + dec.r()],
        }
    }

    pub fn new(kinds: Vec<NormKind>, dec: &Decomposition) -> Result<Self> {
        if kinds.len() != dec.k() + dec.r() {
            return Err(Error::DimensionMismatch {
                expected: dec.k() + dec.r(),
                got: kinds.len(),
            });
        }
        Ok(NormSpec { kinds })
    }

    pub fn kinds(&self) -> &[NormKind] {
        &self.kinds
    }
    pub fn block(&self, b: usize) -> NormKind {
        self.kinds[b]
    }
}

/// `epsilon`, the window radii `eta_i`, the shape index `j` (1-based) and the
/// congruence moduli of interest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub epsilon: f64,
    pub etas: Vec<f64>,
    pub shape_index: usize,
    pub congruence_moduli: Vec<u64>,
}

impl Params {
    pub fn new(epsilon: f64, etas: Vec<f64>, shape_index: usize) -> Self {
        Params {
            epsilon,
            etas,
            shape_index,
            congruence_moduli: Vec::new(),
        }
    }

    pub fn with_moduli(mut self, moduli: Vec<u64>) -> Self {
        self.congruence_moduli = moduli;
        self
    }
}

/// A validated bundle of decomposition, norms and parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub dec: Decomposition,
    pub norms: NormSpec,
    pub params: Params,
}

impl Setup {
    pub fn new(dec: Decomposition, norms: NormSpec, params: Params) -> Result<Self> {
        if !(params.epsilon > 0.0) || !params.epsilon.is_finite() {
            return Err(Error::InvalidParams("epsilon must be positive".into()));
        }
        if params.etas.len() != dec.k() {
            return Err(Error::InvalidParams(format!(
                "expected {} eta values, got {}",
                dec.k(),
                params.etas.len()
            )));
        }
        if params.etas.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParams("every eta must be positive".into()));
        }
        if params.shape_index < 1 || params.shape_index > dec.d() {
            return Err(Error::InvalidParams(format!(
                "shape index must lie in [1, {}]",
                dec.d()
            )));
        }
        if params.congruence_moduli.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParams("congruence moduli must be >= 2".into()));
        }
        if norms.kinds().len() != dec.k() + dec.r() {
            return Err(Error::DimensionMismatch {
                expected: dec.k() + dec.r(),
                got: norms.kinds().len(),
            });
        }
        Ok(Setup { dec, norms, params })
    }

    /// Sup norms everywhere, the same `eta` on every block and `j = d`.
    pub fn simple(dec: Decomposition, epsilon: f64, eta: f64) -> Result<Self> {
        let norms = NormSpec::uniform(NormKind::Sup, &dec);
        let params = Params::new(epsilon, vec![eta; dec.k()], dec.d());
        Setup::new(dec, norms, params)
    }

    pub fn with_moduli(mut self, moduli: Vec<u64>) -> Result<Self> {
        self.params.congruence_moduli = moduli;
        Setup::new(self.dec, self.norms, self.params)
    }
}

/// Storage precision of a target matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Precision {
    /// 53-bit floats; the stored f64 value is the matrix entry.
    Standard,
    /// ~106-bit double-double values.
    DoubleDouble,
    /// Exact rationals whose denominator has at least `bits` bits.
    Rational { bits: u32 },
}

impl Precision {
    pub fn mantissa_bits(&self) -> u32 {
        match self {
            Precision::Standard => 53,
            Precision::DoubleDouble => 106,
            Precision::Rational { bits } => *bits,
        }
    }

    /// Largest `T` for which the direct scan is validated.
    ///
    /// The smallest residual that still decides membership scales like
    /// `e^{-T n / min m_i}` while `theta q` scales like `e^T`, so the stored
    /// precision must cover `e^{T (1 + n / min m_i)}`. The scan evaluates in
    /// double-double with `|q| < 2^53`, which caps the rational path at the
    /// double-double envelope.
    pub fn direct_envelope(&self, dec: &Decomposition) -> f64 {
        let min_m = *dec.m_parts().iter().min().unwrap() as f64;
        let growth = 1.0 + dec.n() as f64 / min_m;
        let ln2 = std::f64::consts::LN_2;
        let arithmetic_cap = 53.0 * ln2;
        let bits = match self {
            Precision::Standard => 53.0,
            Precision::DoubleDouble | Precision::Rational { .. } => 106.0,
        };
        (bits * ln2 / growth).min(arithmetic_cap)
    }

    /// Largest `T` the continued-fraction path accepts: the denominator must
    /// carry at least `4 T / ln 2` bits.
    pub fn cf_envelope(denominator_bits: u64) -> f64 {
        denominator_bits as f64 * std::f64::consts::LN_2 / 4.0
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Standard => write!(f, "standard"),
            Precision::DoubleDouble => write!(f, "double-double"),
            Precision::Rational { bits } => write!(f, "rational:{bits}"),
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "standard" | "f64" | "53" => Ok(Precision::Standard),
            "double-double" | "dd" | "106" => Ok(Precision::DoubleDouble),
            _ => {
                if let Some(bits) = s.strip_prefix("rational:") {
                    let bits = bits
                        .parse::<u32>()
                        .map_err(|e| Error::InvalidParams(format!("rational bits: {e}")))?;
                    if bits < 8 {
                        return Err(Error::InvalidParams("rational bits must be >= 8".into()));
                    }
                    Ok(Precision::Rational { bits })
                } else {
                    Err(Error::InvalidParams(format!("unknown precision {s:?}")))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    Explicit,
    Seeded { seed: u64 },
}

/// The matrix `theta` (m rows, n columns) with its precision metadata.
#[derive(Clone, Debug)]
pub struct Target {
    rows: usize,
    cols: usize,
    entries: Vec<DoubleDouble>,
    exact: Option<Vec<BigRational>>,
    precision: Precision,
    provenance: Provenance,
}

impl Target {
    /// Explicit f64 entries in row-major order.
    pub fn from_f64(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("theta entries must be finite".into()));
        }
        Ok(Target {
            rows,
            cols,
            entries: values.iter().map(|&v| DoubleDouble::from_f64(v)).collect(),
            exact: None,
            precision: Precision::Standard,
            provenance: Provenance::Explicit,
        })
    }

    /// Explicit rational entries in row-major order. The precision tag records
    /// the smallest denominator bit length.
    pub fn from_rationals(rows: usize, cols: usize, values: Vec<BigRational>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        let bits = values
            .iter()
            .map(|v| v.denom().bits())
            .min()
            .unwrap_or(0)
            .min(u32::MAX as u64) as u32;
        let entries = values.iter().map(rational_to_dd).collect();
        Ok(Target {
            rows,
            cols,
            entries,
            exact: Some(values),
            precision: Precision::Rational { bits },
            provenance: Provenance::Explicit,
        })
    }

    /// Entries drawn i.i.d. uniform on (0, 1) from a seeded ChaCha stream.
    pub fn random(rows: usize, cols: usize, precision: Precision, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rows * cols;
        let mut entries = Vec::with_capacity(count);
        let mut exact = None;
        match precision {
            Precision::Standard => {
                for _ in 0..count {
                    entries.push(DoubleDouble::from_f64(open_unit_53(&mut rng)));
                }
            }
            Precision::DoubleDouble => {
                for _ in 0..count {
                    let a = (rng.gen::<u64>() >> 11) as f64;
                    let b = (rng.gen::<u64>() >> 11) as f64 + 0.5;
                    let hi = a * 2f64.powi(-53);
                    let lo = b * 2f64.powi(-106);
                    let mut v = DoubleDouble::new(hi, lo);
                    if v.hi == 0.0 {
                        v = DoubleDouble::new(2f64.powi(-60), 0.0);
                    }
                    entries.push(v);
                }
            }
            Precision::Rational { bits } => {
                let den = BigInt::one() << bits as usize;
                let mut values = Vec::with_capacity(count);
                for _ in 0..count {
                    let mut num = random_biguint(&mut rng, bits);
                    num.set_bit(0, true);
                    let v = BigRational::new(BigInt::from(num), den.clone());
                    entries.push(rational_to_dd(&v));
                    values.push(v);
                }
                exact = Some(values);
            }
        }
        Target {
            rows,
            cols,
            entries,
            exact,
            precision,
            provenance: Provenance::Seeded { seed },
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn precision(&self) -> Precision {
        self.precision
    }
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
    pub fn entry(&self, row: usize, col: usize) -> DoubleDouble {
        self.entries[row * self.cols + col]
    }
    pub fn entries(&self) -> &[DoubleDouble] {
        &self.entries
    }
    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }
    pub fn entries_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.to_f64()).collect()
    }

    pub fn check_shape(&self, dec: &Decomposition) -> Result<()> {
        if self.rows != dec.m() || self.cols != dec.n() {
            return Err(Error::DimensionMismatch {
                expected: dec.m() * dec.n(),
                got: self.rows * self.cols,
            });
        }
        Ok(())
    }

    /// Validated direct-scan envelope for this target.
    pub fn direct_envelope(&self, dec: &Decomposition) -> f64 {
        self.precision.direct_envelope(dec)
    }

    pub fn check_direct_envelope(&self, dec: &Decomposition, t: f64) -> Result<()> {
        let max_t = self.direct_envelope(dec);
        if t > max_t {
            return Err(Error::PrecisionEnvelope {
                precision: self.precision.to_string(),
                max_t,
                requested: t,
            });
        }
        Ok(())
    }

    /// `p + theta q` in double-double arithmetic.
    pub fn residual_dd(&self, p: &[i64], q: &[i64]) -> Vec<DoubleDouble> {
        (0..self.rows)
            .map(|i| {
                let mut acc = DoubleDouble::from_f64(p[i] as f64);
                for (j, &qj) in q.iter().enumerate() {
                    acc = acc + self.entry(i, j).mul_int(qj);
                }
                acc
            })
            .collect()
    }

    pub fn residual(&self, p: &[i64], q: &[i64]) -> Vec<f64> {
        self.residual_dd(p, q).into_iter().map(|x| x.to_f64()).collect()
    }
}

/// Uniform integer in `[0, 2^bits)` built from little-endian random words.
fn random_biguint<R: Rng>(rng: &mut R, bits: u32) -> BigUint {
    let words = (bits as usize).div_ceil(64);
    let mut bytes = Vec::with_capacity(words * 8);
    for _ in 0..words {
        bytes.extend_from_slice(&rng.gen::<u64>().to_le_bytes());
    }
    let num = BigUint::from_bytes_le(&bytes);
    let excess = words * 64 - bits as usize;
    num >> excess
}

fn open_unit_53<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let k = rng.gen::<u64>() >> 11;
        if k != 0 {
            return k as f64 * 2f64.powi(-53);
        }
    }
}

/// Nearest double-double to a rational.
pub fn rational_to_dd(v: &BigRational) -> DoubleDouble {
    let hi = ratio_to_f64(v.numer(), v.denom());
    if !hi.is_finite() || hi == 0.0 {
        return DoubleDouble::from_f64(hi);
    }
    let hi_exact = BigRational::from_float(hi).expect("finite");
    let rest = v - hi_exact;
    let lo = ratio_to_f64(rest.numer(), rest.denom());
    DoubleDouble::new(hi, lo)
}

/// `num / den` rounded to f64 with ~60 bits of intermediate precision.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let neg = num.is_negative() != den.is_negative();
    let a = num.abs();
    let b = den.abs();
    let shift = a.bits() as i64 - b.bits() as i64 - 64;
    // scale so that the integer quotient carries 64+ significant bits
    let (qa, qb) = if shift > 0 {
        (a.clone(), b << shift as usize)
    } else {
        (a << (-shift) as usize, b.clone())
    };
    let quot = qa / qb;
    let f = quot.to_f64().unwrap_or(f64::INFINITY);
    let v = f * 2f64.powf(shift as f64);
    if neg {
        -v
    } else {
        v
    }
}

/// One candidate `(p, q)` together with its primitivity and height `||q||`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Approximate {
    pub p: Vec<i64>,
    pub q: Vec<i64>,
    pub primitive: bool,
    pub height: f64,
}

impl Approximate {
    pub fn negated(&self) -> Approximate {
        Approximate {
            p: self.p.iter().map(|x| -x).collect(),
            q: self.q.iter().map(|x| -x).collect(),
            primitive: self.primitive,
            height: self.height,
        }
    }

    /// Concatenated integer vector `(p, q)` in `Z^d`.
    pub fn coords(&self) -> Vec<i64> {
        self.p.iter().chain(&self.q).copied().collect()
    }
}
