//! Closed-form constants, predicted counts and the limiting marginals with
//! their samplers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::enumerate::Mode;
use crate::error::{Error, Result};
use crate::norms::{block_norm, gcd_all};
use crate::types::{Decomposition, NormKind, NormSpec, Setup};

/// `sum_{x in {0,1}^r} (-1)^{r - |x|} (sum n_j x_j)^{k+r-1}`, evaluated as the
/// iterated forward difference `prod_j (E^{n_j} - 1) x^{k+r-1}` at zero.
pub fn c_constant(n_parts: &[usize], k: usize) -> i128 {
    let deg = k + n_parts.len() - 1;
    // coefficients of the polynomial, lowest degree first
    let mut poly = vec![0i128; deg + 1];
    poly[deg] = 1;
    for &nj in n_parts {
        let shifted = shift_poly(&poly, nj as i128);
        for (a, b) in poly.iter_mut().zip(shifted) {
            *a = b - *a;
        }
    }
    poly[0]
}

/// Coefficients of `f(x + h)`.
fn shift_poly(poly: &[i128], h: i128) -> Vec<i128> {
    let n = poly.len();
    let mut out = vec![0i128; n];
    for (deg, &c) in poly.iter().enumerate() {
        if c == 0 {
            continue;
        }
        // c (x + h)^deg
        let mut binom = 1i128;
        let mut hp = 1i128;
        for i in (0..=deg).rev() {
            out[i] += c * binom * hp;
            let step = deg - i;
            binom = binom * (deg - step) as i128 / (step + 1) as i128;
            hp *= h;
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// Lebesgue measure of the polytope of flow times `J^T`.
pub fn jt_volume(t: f64, dec: &Decomposition) -> f64 {
    let rank = dec.flow_rank();
    let c = c_constant(dec.n_parts(), dec.k()) as f64;
    let m_prod: f64 = dec.m_parts().iter().map(|&x| x as f64).product();
    let r = dec.r();
    let n_prod: f64 = dec.n_parts()[..r - 1].iter().map(|&x| x as f64).product();
    t.powi(rank as i32) * c / (m_prod * n_prod * factorial(rank))
}

/// `true` iff `x` lies in `J^T`: nonnegative coordinates, the `t`-part at
/// most `T`, and `0 <= sum m_i s_i - sum n_j t_j <= n_r T`.
pub fn in_jt(x: &[f64], t: f64, dec: &Decomposition) -> bool {
    let k = dec.k();
    let r = dec.r();
    if x.iter().any(|&v| v < 0.0) || x[k..].iter().any(|&v| v > t) {
        return false;
    }
    let s: f64 = x[..k].iter().zip(dec.m_parts()).map(|(a, &m)| a * m as f64).sum();
    let tt: f64 = x[k..].iter().zip(dec.n_parts()).map(|(a, &n)| a * n as f64).sum();
    let bal = s - tt;
    bal >= 0.0 && bal <= dec.n_parts()[r - 1] as f64 * t
}

/// Bounding box of `J^T`, one `(lo, hi)` per coordinate.
pub fn jt_bounding_box(t: f64, dec: &Decomposition) -> Vec<(f64, f64)> {
    let k = dec.k();
    let n: f64 = dec.n() as f64;
    let mut out = Vec::with_capacity(dec.flow_rank());
    for &mi in dec.m_parts() {
        out.push((0.0, n * t / mi as f64));
    }
    for _ in 0..dec.r() - 1 {
        out.push((0.0, t));
    }
    debug_assert_eq!(out.len(), k + dec.r() - 1);
    out
}

/// Volume of the unit ball of one block norm in `R^l`.
pub fn block_ball_volume(kind: NormKind, l: usize) -> f64 {
    match kind {
        NormKind::Sup => 2f64.powi(l as i32),
        NormKind::Taxicab => 2f64.powi(l as i32) / factorial(l),
        NormKind::Euclidean => {
            let (mut even, mut odd) = (1.0, 2.0);
            for i in 2..=l {
                if i % 2 == 0 {
                    even *= 2.0 * std::f64::consts::PI / i as f64;
                } else {
                    odd *= 2.0 * std::f64::consts::PI / i as f64;
                }
            }
            if l.is_multiple_of(2) {
                even
            } else {
                odd
            }
        }
    }
}

/// Volume of the unit ball of the max-of-blocks norm on `R^d`.
pub fn ball_volume(dec: &Decomposition, norms: &NormSpec) -> f64 {
    dec.all_parts()
        .iter()
        .zip(norms.kinds())
        .map(|(&l, &kind)| block_ball_volume(kind, l))
        .product()
}

/// Riemann zeta at an integer `d >= 2`: partial sum plus Euler-Maclaurin tail.
pub fn zeta(d: u32) -> f64 {
    assert!(d >= 2, "zeta needs d >= 2");
    let s = d as f64;
    let n = 64u32;
    // sum in increasing magnitude for accuracy
    let partial: f64 = (1..n).rev().map(|i| (i as f64).powf(-s)).sum();
    let nf = n as f64;
    let tail = nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s) + s / 12.0 * nf.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * nf.powf(-s - 3.0)
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * nf.powf(-s - 5.0);
    partial + tail
}

/// Prime factorisation by trial division.
pub fn factorize(mut t: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= t {
        if t.is_multiple_of(p) {
            let mut e = 0;
            while t.is_multiple_of(p) {
                t /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if t > 1 {
        out.push((t, 1));
    }
    out
}

/// `N_{t,d}`: residue vectors in `(Z/t)^d` with no common factor with `t`.
pub fn primitive_count_mod(t: u64, d: u32) -> u128 {
    factorize(t)
        .into_iter()
        .map(|(p, s)| {
            let p = p as u128;
            p.pow(d * s) - p.pow(d * (s - 1))
        })
        .product()
}

/// Leading term `leading_constant * T^exponent` of a count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub leading_constant: f64,
    pub exponent: u32,
    pub description: String,
}

impl Prediction {
    pub fn at(&self, t: f64) -> f64 {
        self.leading_constant * t.powi(self.exponent as i32)
    }
}

/// Predicted number of approximates with `||q|| <= e^T`, both signs counted.
pub fn predicted_count(setup: &Setup, mode: Mode, s: u64) -> Result<Prediction> {
    if s < 1 {
        return Err(Error::InvalidParams("divisor s must be >= 1".into()));
    }
    let dec = &setup.dec;
    let rank = dec.flow_rank();
    let d = dec.d() as u32;
    let base = ball_volume(dec, &setup.norms) * c_constant(dec.n_parts(), dec.k()) as f64
        / factorial(rank);
    let eps = setup.params.epsilon;
    let (constant, description) = match mode {
        Mode::EpsilonStar => (
            eps / (s as f64).powi(d as i32) * base,
            format!("approximates without gcd condition, s = {s} divides gcd(p, q)"),
        ),
        Mode::Epsilon => (
            eps * base / zeta(d),
            "primitive approximates".to_string(),
        ),
    };
    Ok(Prediction {
        leading_constant: constant,
        exponent: rank as u32,
        description,
    })
}

/// Mean number of primitive points of a random unimodular lattice in a set
/// of volume `vol`.
pub fn siegel_primitive_mean(vol: f64, d: usize) -> f64 {
    vol / zeta(d as u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "component")]
pub enum Component {
    SphereBlock { block: usize },
    Error,
    Congruence { modulus: u64 },
    Torus,
}

/// Limiting law of one packet component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "law")]
pub enum MarginalSpec {
    /// `{+1, -1}` with equal mass
    Signs,
    /// cone measure on the unit sphere of a block norm in `R^dim`, `dim >= 2`
    Cone { dim: usize, kind: NormKind },
    Uniform { lo: f64, hi: f64 },
    /// uniform on residue vectors in `(Z/modulus)^d` coprime to the modulus
    PrimitiveClasses { modulus: u64, d: usize },
}

impl MarginalSpec {
    /// CDF of a scalar law.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            MarginalSpec::Uniform { lo, hi } => Ok(((x - lo) / (hi - lo)).clamp(0.0, 1.0)),
            MarginalSpec::Signs => Ok(if x < -1.0 {
                0.0
            } else if x < 1.0 {
                0.5
            } else {
                1.0
            }),
            _ => Err(Error::InvalidParams("law has no scalar CDF".into())),
        }
    }

    /// The classes of a congruence law in lexicographic order.
    pub fn classes(&self) -> Result<Vec<Vec<u64>>> {
        match self {
            MarginalSpec::PrimitiveClasses { modulus, d } => Ok(primitive_classes(*modulus, *d)),
            MarginalSpec::Signs => Ok(vec![vec![0], vec![1]]),
            _ => Err(Error::InvalidParams("law is not discrete".into())),
        }
    }
}

/// Residue vectors mod `t` whose gcd with `t` is 1, lexicographic.
pub fn primitive_classes(t: u64, d: usize) -> Vec<Vec<u64>> {
    let total = (t as usize).pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut v = vec![0u64; d];
            for c in (0..d).rev() {
                v[c] = (idx % t as usize) as u64;
                idx /= t as usize;
            }
            v
        })
        .filter(|v| {
            let mut ints: Vec<i64> = v.iter().map(|&x| x as i64).collect();
            ints.push(t as i64);
            gcd_all(&ints) == 1
        })
        .collect()
}

pub fn marginal_target(component: Component, setup: &Setup) -> Result<MarginalSpec> {
    let dec = &setup.dec;
    match component {
        Component::SphereBlock { block } => {
            let parts = dec.all_parts();
            let dim = *parts
                .get(block)
                .ok_or_else(|| Error::InvalidParams(format!("no block {block}")))?;
            if dim == 1 {
                Ok(MarginalSpec::Signs)
            } else {
                Ok(MarginalSpec::Cone {
                    dim,
                    kind: setup.norms.block(block),
                })
            }
        }
        Component::Error => Ok(MarginalSpec::Uniform {
            lo: 0.0,
            hi: setup.params.epsilon,
        }),
        Component::Congruence { modulus } => {
            if modulus < 2 {
                return Err(Error::InvalidParams("modulus must be >= 2".into()));
            }
            Ok(MarginalSpec::PrimitiveClasses {
                modulus,
                d: dec.d(),
            })
        }
        Component::Torus => {
            if dec.d() != 2 {
                return Err(Error::InvalidParams(
                    "the torus chart exists only for d = 2".into(),
                ));
            }
            Ok(MarginalSpec::Uniform { lo: 0.0, hi: 1.0 })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sample {
    Scalar(f64),
    Vector(Vec<f64>),
    Class(Vec<u64>),
}

/// One draw from `spec`; the cone measure is the radial projection of a
/// uniform point of the unit ball, drawn by rejection from the cube.
pub fn sample_marginal<R: Rng + ?Sized>(spec: &MarginalSpec, rng: &mut R) -> Sample {
    match spec {
        MarginalSpec::Signs => Sample::Scalar(if rng.gen::<bool>() { 1.0 } else { -1.0 }),
        MarginalSpec::Uniform { lo, hi } => Sample::Scalar(lo + (hi - lo) * rng.gen::<f64>()),
        MarginalSpec::Cone { dim, kind } => loop {
            let v: Vec<f64> = (0..*dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = block_norm(&v, *kind);
            if r > 0.0 && r <= 1.0 {
                break Sample::Vector(v.iter().map(|x| x / r).collect());
            }
        },
        MarginalSpec::PrimitiveClasses { modulus, d } => loop {
            let v: Vec<u64> = (0..*d).map(|_| rng.gen_range(0..*modulus)).collect();
            let mut ints: Vec<i64> = v.iter().map(|&x| x as i64).collect();
            ints.push(*modulus as i64);
            if gcd_all(&ints) == 1 {
                break Sample::Class(v);
            }
        },
    }
}
