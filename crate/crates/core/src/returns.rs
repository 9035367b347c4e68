//! Return times of the one-parameter cross-section (`k = r = 1`) and the
//! shifted sequences `||q_{l+s}||^{n/m} (p_l + theta q_l)`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;

use crate::cf::CfApproximate;
use crate::enumerate::Member;
use crate::error::{Error, Result};
use crate::packet::{torus_beta_convergent, Packet};
use crate::stats::ks_two_sample;
use crate::types::Setup;

/// Minimum length accepted by [`empirical_stability`].
pub const MIN_STABILITY_LEN: usize = 200;

/// One cross-section visit in logarithmic form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    /// `t = -log ||p + theta q||`
    pub time: f64,
    /// `log ||q||`
    pub log_height: f64,
    /// `(p + theta q) / ||p + theta q||`
    pub direction: Vec<f64>,
    pub error: f64,
    pub residues: BTreeMap<u64, Vec<u64>>,
    pub beta: Option<f64>,
    /// `(p, q)` when it fits in i64
    pub coords: Option<Vec<i64>>,
}

fn check_one_parameter(setup: &Setup) -> Result<()> {
    if setup.dec.k() != 1 || setup.dec.r() != 1 {
        return Err(Error::Precondition("return series need k = r = 1".into()));
    }
    Ok(())
}

impl Visit {
    pub fn from_packet(member: &Member, packet: &Packet) -> Visit {
        Visit {
            time: -member.block_norms[0].ln(),
            log_height: member.block_norms[1].ln(),
            direction: packet.proj[0].clone(),
            error: member.error,
            residues: packet.residues.clone(),
            beta: packet.torus.map(|t| t.beta),
            coords: Some(member.approx.coords()),
        }
    }

    /// Visit of a continued-fraction pair; `beta` is only attached to
    /// primitive pairs.
    pub fn from_cf(a: &CfApproximate, moduli: &[u64]) -> Visit {
        let residues = moduli
            .iter()
            .zip(&a.residues)
            .map(|(&n, &(p, q))| (n, vec![p, q]))
            .collect();
        let coords = a.exact.and_then(|(h, k)| {
            let g = a.multiplier as i128;
            let p = i64::try_from(-h * g).ok()?;
            let q = i64::try_from(k * g).ok()?;
            Some(vec![p, q])
        });
        Visit {
            time: -a.log_abs_residual,
            log_height: a.log_height,
            direction: vec![a.residual_sign as f64],
            error: a.error,
            residues,
            beta: a
                .is_primitive()
                .then(|| torus_beta_convergent(a.index, a.prev_ratio).beta),
            coords,
        }
    }
}

/// Residue pattern mod `modulus`; `None` entries match anything.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueCell {
    pub modulus: u64,
    pub pattern: Vec<Option<u64>>,
}

/// Product of an error interval, a sign cell of the `p`-direction, a residue
/// pattern and a `beta` interval. Intervals are half-open `[lo, hi)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub error: Option<(f64, f64)>,
    pub signs: Option<Vec<i8>>,
    pub residue: Option<ResidueCell>,
    pub beta: Option<(f64, f64)>,
}

impl Constraint {
    pub fn all() -> Self {
        Constraint::default()
    }

    pub fn matches(&self, v: &Visit) -> bool {
        let within = |x: f64, (lo, hi): (f64, f64)| x >= lo && x < hi;
        if let Some(iv) = self.error {
            if !within(v.error, iv) {
                return false;
            }
        }
        if let Some(signs) = &self.signs {
            let ok = signs.len() == v.direction.len()
                && signs
                    .iter()
                    .zip(&v.direction)
                    .all(|(&s, &x)| (s > 0 && x > 0.0) || (s < 0 && x < 0.0) || (s == 0 && x == 0.0));
            if !ok {
                return false;
            }
        }
        if let Some(cell) = &self.residue {
            let Some(res) = v.residues.get(&cell.modulus) else {
                return false;
            };
            if res.len() != cell.pattern.len()
                || res.iter().zip(&cell.pattern).any(|(r, p)| p.is_some_and(|p| p != *r))
            {
                return false;
            }
        }
        if let Some(iv) = self.beta {
            match v.beta {
                Some(b) if within(b, iv) => {}
                _ => return false,
            }
        }
        true
    }
}

fn parse_interval(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("interval `{s}` must be lo:hi")))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("bad number `{x}`: {e}")))
    };
    Ok((parse(lo)?, parse(hi)?))
}

/// `error=lo:hi;signs=+-;residue=N:a,*;beta=lo:hi`; the empty string and
/// `all` match everything.
impl FromStr for Constraint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut c = Constraint::all();
        let s = s.trim();
        if s.is_empty() || s == "all" {
            return Ok(c);
        }
        for item in s.split(';').map(str::trim).filter(|x| !x.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("constraint item `{item}` must be key=value")))?;
            match key.trim() {
                "error" => c.error = Some(parse_interval(value)?),
                "beta" => c.beta = Some(parse_interval(value)?),
                "signs" => {
                    c.signs = Some(
                        value
                            .trim()
                            .chars()
                            .map(|ch| match ch {
                                '+' => Ok(1),
                                '-' => Ok(-1),
                                '0' => Ok(0),
                                _ => Err(Error::Config(format!("bad sign `{ch}`"))),
                            })
                            .collect::<Result<_>>()?,
                    )
                }
                "residue" => {
                    let (n, pat) = value
                        .split_once(':')
                        .ok_or_else(|| Error::Config("residue must be N:a,b".into()))?;
                    let modulus = n
                        .trim()
                        .parse()
                        .map_err(|e| Error::Config(format!("bad modulus `{n}`: {e}")))?;
                    let pattern = pat
                        .split(',')
                        .map(|x| match x.trim() {
                            "*" => Ok(None),
                            v => v
                                .parse()
                                .map(Some)
                                .map_err(|e| Error::Config(format!("bad residue `{v}`: {e}"))),
                        })
                        .collect::<Result<_>>()?;
                    c.residue = Some(ResidueCell { modulus, pattern });
                }
                other => return Err(Error::Config(format!("unknown constraint key `{other}`"))),
            }
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    /// every visit, by increasing time
    pub visits: Vec<Visit>,
    pub mask: Vec<bool>,
    /// positions of the constrained visits in `visits`
    pub constrained: Vec<usize>,
    /// return times between consecutive constrained visits
    pub gaps: Vec<f64>,
    /// positions `i` with `visits[i].time == visits[i + 1].time`
    pub ties: Vec<usize>,
    /// exponent `n / m` of the theorem sequences
    pub exponent: f64,
}

impl ReturnSeries {
    /// Number of constrained visits.
    pub fn len(&self) -> usize {
        self.constrained.len()
    }
    pub fn is_empty(&self) -> bool {
        self.constrained.is_empty()
    }
    pub fn times(&self) -> Vec<f64> {
        self.constrained.iter().map(|&i| self.visits[i].time).collect()
    }
}

/// Sorts visits by time, masks them and records return times within the
/// constrained subsequence. Equal times are listed in `ties`.
pub fn build_return_series(mut visits: Vec<Visit>, setup: &Setup, constraint: &Constraint) -> Result<ReturnSeries> {
    check_one_parameter(setup)?;
    visits.sort_by(|a, b| a.time.total_cmp(&b.time));
    let ties = visits
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].time == w[1].time)
        .map(|(i, _)| i)
        .collect();
    let mask: Vec<bool> = visits.iter().map(|v| constraint.matches(v)).collect();
    let constrained: Vec<usize> = (0..visits.len()).filter(|&i| mask[i]).collect();
    let gaps = constrained
        .windows(2)
        .map(|w| visits[w[1]].time - visits[w[0]].time)
        .collect();
    Ok(ReturnSeries {
        visits,
        mask,
        constrained,
        gaps,
        ties,
        exponent: setup.dec.n() as f64 / setup.dec.m() as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WSequence {
    pub s: usize,
    /// positions in the series' visit list
    pub indices: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl WSequence {
    /// First coordinate of every value.
    pub fn scalars(&self) -> Vec<f64> {
        self.values.iter().map(|v| v[0]).collect()
    }
}

/// `w_l = ||q_{l+s}||^{n/m} (p_l + theta q_l)` over the constrained
/// subsequence, with the shift counted inside it. Computed as
/// `Error_l^{1/m} (||q_{l+s}|| / ||q_l||)^{n/m} u_l`, so at `s = 0` the
/// length of `w_l` is `Error_l^{1/m}` to rounding (exactly for `m = 1`).
pub fn w_sequence(series: &ReturnSeries, s: usize) -> WSequence {
    let c = &series.constrained;
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for i in 0..c.len().saturating_sub(s) {
        let v = &series.visits[c[i]];
        let ahead = &series.visits[c[i + s]];
        let m = v.direction.len();
        let base = if m == 1 { v.error } else { v.error.powf(1.0 / m as f64) };
        let scale = if s == 0 {
            base
        } else {
            base * (series.exponent * (ahead.log_height - v.log_height)).exp()
        };
        indices.push(c[i]);
        values.push(v.direction.iter().map(|u| scale * u).collect());
    }
    WSequence { s, indices, values }
}

/// Two-sample KS distance between the first and second halves.
pub fn empirical_stability(sequence: &[f64]) -> Result<f64> {
    if sequence.len() < MIN_STABILITY_LEN {
        return Err(Error::InsufficientData(format!(
            "stability needs at least {MIN_STABILITY_LEN} values, got {}",
            sequence.len()
        )));
    }
    let half = sequence.len() / 2;
    ks_two_sample(&sequence[..half], &sequence[half..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{cf_approximates, ContinuedFraction};
    use crate::enumerate::{enumerate_direct, order_stream, EnumConfig, Mode, StreamOrdering};
    use crate::packet::build_packet;
    use crate::types::{Decomposition, Target};
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_visits(seed: u64, t: f64) -> (Vec<Visit>, Setup) {
        let target = Target::random(1, 1, crate::Precision::Standard, seed);
        let setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45).unwrap().with_moduli(vec![2]).unwrap();
        let stream = enumerate_direct(&target, &setup, &EnumConfig::new(t, Mode::Epsilon)).unwrap();
        let stream = order_stream(stream, StreamOrdering::DecreasingErrorBlock, 2, 1);
        let visits = stream
            .members
            .iter()
            .map(|m| Visit::from_packet(m, &build_packet(&target, &m.approx.p, &m.approx.q, &setup).unwrap()))
            .collect();
        (visits, setup)
    }

    #[test]
    fn trivial_constraint_masks_everything() {
        let (visits, setup) = direct_visits(5, 10.0);
        let n = visits.len();
        let series = build_return_series(visits, &setup, &Constraint::all()).unwrap();
        assert_eq!(series.len(), n);
        assert!(series.mask.iter().all(|&b| b));
        assert!(series.gaps.iter().all(|g| *g > 0.0 && g.is_finite()));
        let times = series.times();
        let total: f64 = series.gaps.iter().sum();
        assert!((total - (times[n - 1] - times[0])).abs() < 1e-9);
    }

    #[test]
    fn empty_input() {
        let setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45).unwrap();
        let series = build_return_series(Vec::new(), &setup, &Constraint::all()).unwrap();
        assert!(series.is_empty());
        assert!(w_sequence(&series, 0).values.is_empty());
    }

    #[test]
    fn shift_zero_reproduces_the_error() {
        let (visits, setup) = direct_visits(9, 12.0);
        let series = build_return_series(visits, &setup, &Constraint::all()).unwrap();
        let w = w_sequence(&series, 0);
        for (i, v) in w.indices.iter().zip(&w.values) {
            assert_eq!(v[0].abs(), series.visits[*i].error);
        }
        let far = w_sequence(&series, series.len() + 3);
        assert!(far.values.is_empty());
    }

    #[test]
    fn shift_matches_direct_formula() {
        let (visits, setup) = direct_visits(11, 12.0);
        let series = build_return_series(visits, &setup, &Constraint::all()).unwrap();
        let w = w_sequence(&series, 2);
        for (pos, (i, v)) in w.indices.iter().zip(&w.values).enumerate() {
            let ahead = &series.visits[series.constrained[pos + 2]];
            let here = &series.visits[*i];
            let q_ahead = ahead.coords.as_ref().unwrap()[1].abs() as f64;
            let expected = q_ahead * here.direction[0] * (-here.time).exp();
            assert!((v[0] - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn constraint_parsing_and_matching() {
        let c: Constraint = "error=0:0.2;signs=+;residue=2:*,1;beta=0:0.5".parse().unwrap();
        let mut v = Visit {
            time: 1.0,
            log_height: 1.0,
            direction: vec![1.0],
            error: 0.1,
            residues: BTreeMap::from([(2, vec![0, 1])]),
            beta: Some(0.25),
            coords: None,
        };
        assert!(c.matches(&v));
        v.residues.insert(2, vec![1, 0]);
        assert!(!c.matches(&v));
        assert!("residue=2".parse::<Constraint>().is_err());
        assert_eq!("all".parse::<Constraint>().unwrap(), Constraint::all());
    }

    #[test]
    fn cf_visits_have_residues_and_beta() {
        let setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45).unwrap().with_moduli(vec![2]).unwrap();
        let cf = ContinuedFraction::from_ratio(&BigInt::from(833_u32), &BigInt::from(1292_u32)).unwrap();
        let approx = cf_approximates(&cf, &setup, 7.0, Mode::Epsilon, 1).unwrap();
        for a in &approx {
            let v = Visit::from_cf(a, &setup.params.congruence_moduli);
            let c = v.coords.clone().unwrap();
            assert_eq!(v.residues[&2], vec![c[0].rem_euclid(2) as u64, c[1].rem_euclid(2) as u64]);
            assert!(v.beta.is_some());
        }
    }

    #[test]
    fn stability_examples() {
        let x: Vec<f64> = (0..400).map(|i| (i % 200) as f64).collect();
        assert_eq!(empirical_stability(&x).unwrap(), 0.0);
        assert!(empirical_stability(&x[..100]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..5000).map(|_| rng.gen()).collect();
        assert!(empirical_stability(&u).unwrap() < 0.05);
        let drift: Vec<f64> = (0..5000)
            .map(|i| rng.gen::<f64>() + if i >= 2500 { 0.2887 } else { 0.0 })
            .collect();
        assert!(empirical_stability(&drift).unwrap() > 0.2);
    }
}
