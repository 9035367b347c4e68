//! Direct enumeration of epsilon-approximates up to height `e^T`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering as CmpOrdering;

use crate::ddouble::{DoubleDouble, SplitMultiplier};
use crate::error::{Error, Result};
use crate::norms::{block_norm, gcd_all, int_block_norms};
use crate::types::{Approximate, Decomposition, NormKind, Setup, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Primitive pairs only.
    Epsilon,
    /// No gcd condition; optionally `s | gcd(p, q)`.
    EpsilonStar,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epsilon" | "eps" => Ok(Mode::Epsilon),
            "epsilon-star" | "epsilon_star" | "eps-star" | "star" => Ok(Mode::EpsilonStar),
            other => Err(Error::InvalidParams(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamOrdering {
    IncreasingQ,
    DecreasingErrorBlock,
}

impl std::str::FromStr for StreamOrdering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "increasing-q" | "by_increasing_q_norm" | "q" => Ok(StreamOrdering::IncreasingQ),
            "decreasing-error-block" | "by_decreasing_error_block" | "error-block" => {
                Ok(StreamOrdering::DecreasingErrorBlock)
            }
            other => Err(Error::InvalidParams(format!("unknown ordering {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumConfig {
    pub t: f64,
    pub mode: Mode,
    pub divisor: u64,
    pub ordering: StreamOrdering,
    /// Number of consecutive values of `q_1` per work item.
    pub chunk_size: usize,
    /// 0 means the rayon default.
    pub workers: usize,
}

impl EnumConfig {
    pub fn new(t: f64, mode: Mode) -> Self {
        EnumConfig {
            t,
            mode,
            divisor: 1,
            ordering: StreamOrdering::IncreasingQ,
            chunk_size: 1 << 16,
            workers: 0,
        }
    }

    pub fn with_divisor(mut self, s: u64) -> Self {
        self.divisor = s;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidParams("T must be positive".into()));
        }
        if self.divisor < 1 {
            return Err(Error::InvalidParams("divisor s must be >= 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidParams("chunk size must be >= 1".into()));
        }
        Ok(())
    }
}

/// One stream entry: the pair plus the quantities the membership test saw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub approx: Approximate,
    /// `p + theta q`.
    pub residual: Vec<f64>,
    /// Norms of the `k + r` blocks of `(p + theta q, q)`.
    pub block_norms: Vec<f64>,
    /// `prod ||rho_i||^{m_i} prod max(1, ||rho'_j||)^{n_j}`.
    pub error: f64,
}

impl Member {
    pub fn negated(&self) -> Member {
        Member {
            approx: self.approx.negated(),
            residual: self.residual.iter().map(|x| -x).collect(),
            block_norms: self.block_norms.clone(),
            error: self.error,
        }
    }

    /// `||p + theta q||`, the max over the p-blocks.
    pub fn error_block(&self, k: usize) -> f64 {
        self.block_norms[..k].iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Coordinate `j` (1-based) of `(p + theta q, q)`.
    pub fn coordinate(&self, j: usize) -> f64 {
        let m = self.residual.len();
        if j <= m {
            self.residual[j - 1]
        } else {
            self.approx.q[j - m - 1] as f64
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.block_norms.contains(&0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximateStream {
    pub members: Vec<Member>,
    /// Qualifying pairs with a zero block, kept out of `members`.
    pub degenerate: Vec<Member>,
    pub ordering: StreamOrdering,
}

impl ApproximateStream {
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn approximates(&self) -> impl Iterator<Item = &Approximate> {
        self.members.iter().map(|m| &m.approx)
    }

    /// Members with height at most `e^t`.
    pub fn truncated(&self, t: f64) -> ApproximateStream {
        let h = t.exp();
        let keep = |m: &&Member| m.approx.height <= h;
        ApproximateStream {
            members: self.members.iter().filter(keep).cloned().collect(),
            degenerate: self.degenerate.iter().filter(keep).cloned().collect(),
            ordering: self.ordering,
        }
    }
}

/// Outcome of a single membership test.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub qualifies: bool,
    pub block_norms: Vec<f64>,
    pub error: f64,
    pub residual: Vec<f64>,
    pub gcd: u64,
}

fn q_factor(q_norms: &[f64], n_parts: &[usize]) -> f64 {
    q_norms
        .iter()
        .zip(n_parts)
        .map(|(&x, &nj)| x.max(1.0).powi(nj as i32))
        .product()
}

fn p_factor(p_norms: &[f64], m_parts: &[usize]) -> f64 {
    p_norms
        .iter()
        .zip(m_parts)
        .map(|(&x, &mi)| x.powi(mi as i32))
        .product()
}

/// Membership of `(p, q)` under `mode`, before any divisor filter.
pub fn check_approximate(
    target: &Target,
    p: &[i64],
    q: &[i64],
    setup: &Setup,
    mode: Mode,
) -> Result<Check> {
    let dec = &setup.dec;
    target.check_shape(dec)?;
    if p.len() != dec.m() || q.len() != dec.n() {
        return Err(Error::DimensionMismatch {
            expected: dec.d(),
            got: p.len() + q.len(),
        });
    }
    let kinds = setup.norms.kinds();
    let q_norms = int_block_norms(q, dec.n_parts(), &kinds[dec.k()..]);
    let height = q_norms.iter().fold(0.0f64, |a, &b| a.max(b));
    if height > 1.0 {
        target.check_direct_envelope(dec, height.ln())?;
    }
    let residual = target.residual(p, q);
    let p_norms = crate::norms::block_norms(&residual, dec.m_parts(), &kinds[..dec.k()]);
    let error = p_factor(&p_norms, dec.m_parts()) * q_factor(&q_norms, dec.n_parts());
    let in_window = p_norms
        .iter()
        .zip(&setup.params.etas)
        .all(|(x, eta)| x <= eta);
    let coords: Vec<i64> = p.iter().chain(q).copied().collect();
    let gcd = gcd_all(&coords);
    let gcd_ok = match mode {
        Mode::Epsilon => gcd == 1,
        Mode::EpsilonStar => gcd > 0,
    };
    let mut block_norms = p_norms;
    block_norms.extend(q_norms);
    Ok(Check {
        qualifies: in_window && error <= setup.params.epsilon && gcd_ok,
        block_norms,
        error,
        residual,
        gcd,
    })
}

/// `true` iff `(p, q)` is a primitive epsilon-approximate.
pub fn is_epsilon_approximate(target: &Target, p: &[i64], q: &[i64], setup: &Setup) -> Result<bool> {
    Ok(check_approximate(target, p, q, setup, Mode::Epsilon)?.qualifies)
}

/// Row data for the hot loop.
struct Scanner<'a> {
    dec: &'a Decomposition,
    kinds: Vec<NormKind>,
    etas: Vec<f64>,
    epsilon: f64,
    mode: Mode,
    divisor: u64,
    height: f64,
    qmax: i64,
    /// `theta[row][col]`, pre-split.
    theta: Vec<Vec<SplitMultiplier>>,
    /// block index of every p-row
    row_block: Vec<usize>,
}

#[derive(Default)]
struct ChunkOut {
    members: Vec<Member>,
    degenerate: Vec<Member>,
}

impl<'a> Scanner<'a> {
    fn new(target: &Target, setup: &'a Setup, cfg: &EnumConfig) -> Self {
        let dec = &setup.dec;
        let height = cfg.t.exp();
        let theta = (0..dec.m())
            .map(|i| {
                (0..dec.n())
                    .map(|j| SplitMultiplier::new(target.entry(i, j)))
                    .collect()
            })
            .collect();
        let row_block = dec
            .m_parts()
            .iter()
            .enumerate()
            .flat_map(|(b, &len)| std::iter::repeat_n(b, len))
            .collect();
        Scanner {
            dec,
            kinds: setup.norms.kinds().to_vec(),
            etas: setup.params.etas.clone(),
            epsilon: setup.params.epsilon,
            mode: cfg.mode,
            divisor: cfg.divisor,
            height,
            qmax: height.floor() as i64,
            theta,
            row_block,
        }
    }

    fn gcd_ok(&self, gcd: u64) -> bool {
        match self.mode {
            Mode::Epsilon => gcd == 1,
            Mode::EpsilonStar => gcd > 0 && gcd.is_multiple_of(self.divisor),
        }
    }

    /// Scans every `q` with first coordinate in `range` whose first nonzero
    /// coordinate is positive; `q = 0` is handled by `scan_zero`.
    fn scan(&self, range: std::ops::Range<i64>) -> ChunkOut {
        let n = self.dec.n();
        let m = self.dec.m();
        let k = self.dec.k();
        let mut out = ChunkOut::default();
        let mut q = vec![0i64; n];
        let mut cands: Vec<Vec<(i64, DoubleDouble)>> = vec![Vec::with_capacity(8); m];
        let mut idx = vec![0usize; m];
        let mut p = vec![0i64; m];
        let mut resid = vec![0.0f64; m];
        let single_p_block = k == 1;
        for q1 in range {
            q[0] = q1;
            for v in q.iter_mut().skip(1) {
                *v = -self.qmax;
            }
            loop {
                let first_nonzero = q.iter().find(|&&x| x != 0).copied().unwrap_or(0);
                if first_nonzero > 0 {
                    self.visit_q(
                        &q,
                        single_p_block,
                        &mut cands,
                        &mut idx,
                        &mut p,
                        &mut resid,
                        &mut out,
                    );
                }
                // odometer over coordinates 2..n
                let mut c = n;
                loop {
                    if c <= 1 {
                        break;
                    }
                    c -= 1;
                    if q[c] < self.qmax {
                        q[c] += 1;
                        for v in q.iter_mut().skip(c + 1) {
                            *v = -self.qmax;
                        }
                        c = usize::MAX;
                        break;
                    }
                }
                if c != usize::MAX {
                    break;
                }
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn visit_q(
        &self,
        q: &[i64],
        single_p_block: bool,
        cands: &mut [Vec<(i64, DoubleDouble)>],
        idx: &mut [usize],
        p: &mut [i64],
        resid: &mut [f64],
        out: &mut ChunkOut,
    ) {
        let dec = self.dec;
        let k = dec.k();
        let q_norms = int_block_norms(q, dec.n_parts(), &self.kinds[k..]);
        let height = q_norms.iter().fold(0.0f64, |a, &b| a.max(b));
        if height > self.height {
            return;
        }
        let qf = q_factor(&q_norms, dec.n_parts());
        let budget = self.epsilon / qf;
        for (row, list) in cands.iter_mut().enumerate() {
            list.clear();
            let b = self.row_block[row];
            let mut radius = self.etas[b];
            if single_p_block {
                radius = radius.min(budget.powf(1.0 / dec.m_parts()[0] as f64));
            }
            let mut y = DoubleDouble::ZERO;
            for (mult, &qj) in self.theta[row].iter().zip(q) {
                if qj != 0 {
                    y = y + mult.mul_int(qj);
                }
            }
            let centre = -y.hi;
            let slack = 1e-9 * (1.0 + centre.abs());
            let lo = (centre - radius - slack).ceil() as i64;
            let hi = (centre + radius + slack).floor() as i64;
            for pc in lo..=hi {
                let r = y.add_int(pc);
                if r.to_f64().abs() <= radius {
                    list.push((pc, r));
                }
            }
            if list.is_empty() {
                return;
            }
        }
        // Cartesian product over the per-row candidates
        idx.iter_mut().for_each(|x| *x = 0);
        loop {
            for (row, list) in cands.iter().enumerate() {
                let (pc, r) = list[idx[row]];
                p[row] = pc;
                resid[row] = r.to_f64();
            }
            self.emit(p, q, resid, &q_norms, height, out);
            let mut row = cands.len();
            let mut advanced = false;
            while row > 0 {
                row -= 1;
                if idx[row] + 1 < cands[row].len() {
                    idx[row] += 1;
                    idx[row + 1..].iter_mut().for_each(|x| *x = 0);
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }

    fn emit(
        &self,
        p: &[i64],
        q: &[i64],
        resid: &[f64],
        q_norms: &[f64],
        height: f64,
        out: &mut ChunkOut,
    ) {
        let dec = self.dec;
        let k = dec.k();
        let mut block_norms = Vec::with_capacity(k + dec.r());
        let mut off = 0;
        for (b, &len) in dec.m_parts().iter().enumerate() {
            let nb = block_norm(&resid[off..off + len], self.kinds[b]);
            if nb > self.etas[b] {
                return;
            }
            block_norms.push(nb);
            off += len;
        }
        let error = p_factor(&block_norms, dec.m_parts()) * q_factor(q_norms, dec.n_parts());
        if error > self.epsilon {
            return;
        }
        let coords: Vec<i64> = p.iter().chain(q).copied().collect();
        let gcd = gcd_all(&coords);
        if !self.gcd_ok(gcd) {
            return;
        }
        block_norms.extend_from_slice(q_norms);
        let member = Member {
            approx: Approximate {
                p: p.to_vec(),
                q: q.to_vec(),
                primitive: gcd == 1,
                height,
            },
            residual: resid.to_vec(),
            block_norms,
            error,
        };
        let target = if member.is_degenerate() {
            &mut out.degenerate
        } else {
            &mut out.members
        };
        let neg = member.negated();
        target.push(member);
        target.push(neg);
    }

    /// `q = 0`: every qualifying `p` is degenerate.
    fn scan_zero(&self) -> ChunkOut {
        let dec = self.dec;
        let m = dec.m();
        let n = dec.n();
        let mut out = ChunkOut::default();
        let bounds: Vec<i64> = (0..m)
            .map(|row| self.etas[self.row_block[row]].floor() as i64)
            .collect();
        let mut p: Vec<i64> = bounds.iter().map(|b| -b).collect();
        let q = vec![0i64; n];
        let q_norms = vec![0.0; dec.r()];
        loop {
            if p.iter().any(|&x| x != 0) {
                let resid: Vec<f64> = p.iter().map(|&x| x as f64).collect();
                let mut tmp = ChunkOut::default();
                self.emit(&p, &q, &resid, &q_norms, 0.0, &mut tmp);
                // emit pushes both signs; the scan visits both anyway
                if let Some(first) = tmp.degenerate.into_iter().next() {
                    out.degenerate.push(first);
                }
            }
            let mut c = m;
            let mut advanced = false;
            while c > 0 {
                c -= 1;
                if p[c] < bounds[c] {
                    p[c] += 1;
                    for (v, b) in p.iter_mut().zip(&bounds).skip(c + 1) {
                        *v = -b;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
        out
    }
}

/// All qualifying `(p, q)` with `||q|| <= e^T`, ordered per `cfg.ordering`
/// (the shape index used by the decreasing-error ordering is
/// `setup.params.shape_index`).
pub fn enumerate_direct(target: &Target, setup: &Setup, cfg: &EnumConfig) -> Result<ApproximateStream> {
    cfg.validate()?;
    let dec = &setup.dec;
    target.check_shape(dec)?;
    target.check_direct_envelope(dec, cfg.t)?;
    let height = cfg.t.exp();
    let theta_max = target
        .entries_f64()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    let eta_max = setup.params.etas.iter().fold(0.0f64, |a, &b| a.max(b));
    let p_bound = theta_max * height * dec.n() as f64 + eta_max + 2.0;
    if p_bound >= 2f64.powi(53) || height >= 2f64.powi(53) {
        return Err(Error::Overflow(format!(
            "coordinates up to {p_bound:.3e} exceed exact f64 integer range"
        )));
    }
    let scanner = Scanner::new(target, setup, cfg);
    let qmax = scanner.qmax;
    let chunk = cfg.chunk_size as i64;
    let ranges: Vec<std::ops::Range<i64>> = (0..=qmax)
        .step_by(cfg.chunk_size)
        .map(|a| a..(a + chunk).min(qmax + 1))
        .collect();
    let run = || -> Vec<ChunkOut> { ranges.par_iter().map(|r| scanner.scan(r.clone())).collect() };
    let chunks = if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
        pool.install(run)
    } else {
        run()
    };
    let mut members = Vec::new();
    let mut degenerate = scanner.scan_zero().degenerate;
    for c in chunks {
        members.extend(c.members);
        degenerate.extend(c.degenerate);
    }
    let mut stream = ApproximateStream {
        members,
        degenerate,
        ordering: StreamOrdering::IncreasingQ,
    };
    sort_members(&mut stream.degenerate, StreamOrdering::IncreasingQ, dec.k());
    stream = order_stream(stream, cfg.ordering, setup.params.shape_index, dec.k());
    Ok(stream)
}

fn lex(a: &[i64], b: &[i64]) -> CmpOrdering {
    a.cmp(b)
}

fn tie_break(a: &Member, b: &Member) -> CmpOrdering {
    lex(&a.approx.q, &b.approx.q).then_with(|| lex(&a.approx.p, &b.approx.p))
}

fn sort_members(members: &mut [Member], ordering: StreamOrdering, k: usize) {
    match ordering {
        StreamOrdering::IncreasingQ => members.sort_by(|a, b| {
            a.approx
                .height
                .total_cmp(&b.approx.height)
                .then_with(|| tie_break(a, b))
        }),
        StreamOrdering::DecreasingErrorBlock => members.sort_by(|a, b| {
            b.error_block(k)
                .total_cmp(&a.error_block(k))
                .then_with(|| tie_break(a, b))
        }),
    }
}

/// Re-sorts a stream. The decreasing-error ordering keeps one member of each
/// `+-` pair, the one whose coordinate `shape_index` of `(p + theta q, q)` is
/// positive; members with that coordinate zero are dropped.
pub fn order_stream(
    mut stream: ApproximateStream,
    ordering: StreamOrdering,
    shape_index: usize,
    k: usize,
) -> ApproximateStream {
    if ordering == StreamOrdering::DecreasingErrorBlock {
        stream.members.retain(|m| m.coordinate(shape_index) > 0.0);
    }
    sort_members(&mut stream.members, ordering, k);
    stream.ordering = ordering;
    stream
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 0.61803398875;

    fn golden_setup() -> (Target, Setup) {
        let target = Target::from_f64(1, 1, &[GOLDEN]).unwrap();
        let setup = Setup::simple(Decomposition::scalar(), 0.5, 0.4).unwrap();
        (target, setup)
    }

    fn pairs(stream: &ApproximateStream) -> Vec<(i64, i64)> {
        stream
            .approximates()
            .map(|a| (a.p[0], a.q[0]))
            .collect()
    }

    #[test]
    fn membership_examples() {
        let (target, setup) = golden_setup();
        let c = check_approximate(&target, &[-8], &[13], &setup, Mode::Epsilon).unwrap();
        assert!(c.qualifies);
        assert!((c.residual[0] - 0.0344419).abs() < 1e-6);
        assert!((c.error - 0.4477448).abs() < 1e-6);
        let c = check_approximate(&target, &[-1], &[2], &setup, Mode::Epsilon).unwrap();
        assert!(c.qualifies);
        assert!((c.error - 0.4721360).abs() < 1e-6);
        assert!(!is_epsilon_approximate(&target, &[1], &[1], &setup).unwrap());
    }

    #[test]
    fn golden_stream_t4() {
        let (target, setup) = golden_setup();
        let stream = enumerate_direct(&target, &setup, &EnumConfig::new(4.0, Mode::Epsilon)).unwrap();
        let mut expected = Vec::new();
        for (p, q) in [(-1, 1), (-1, 2), (-2, 3), (-3, 5), (-5, 8), (-8, 13), (-13, 21), (-21, 34)] {
            expected.push((p, q));
            expected.push((-p, -q));
        }
        let mut got = pairs(&stream);
        got.sort();
        expected.sort();
        assert_eq!(got, expected);
        // increasing |q| with lexicographic tie-break on (q, p)
        assert_eq!(&pairs(&stream)[..4], &[(1, -1), (-1, 1), (1, -2), (-1, 2)]);
    }

    #[test]
    fn golden_star_s2_is_empty() {
        let (target, setup) = golden_setup();
        let cfg = EnumConfig::new(4.0, Mode::EpsilonStar).with_divisor(2);
        assert!(enumerate_direct(&target, &setup, &cfg).unwrap().is_empty());
    }

    #[test]
    fn empty_range() {
        // only q = +-1 fits below e^0.5, and theta = 0.45 is 0.45 away from Z
        let target = Target::from_f64(1, 1, &[0.45]).unwrap();
        let setup = Setup::simple(Decomposition::scalar(), 0.5, 0.4).unwrap();
        let stream = enumerate_direct(&target, &setup, &EnumConfig::new(0.5, Mode::Epsilon)).unwrap();
        assert!(stream.is_empty());
    }

    #[test]
    fn decreasing_error_keeps_positive_q() {
        let (target, setup) = golden_setup();
        let stream = enumerate_direct(&target, &setup, &EnumConfig::new(4.0, Mode::Epsilon)).unwrap();
        let ordered = order_stream(stream, StreamOrdering::DecreasingErrorBlock, 2, 1);
        assert_eq!(ordered.len(), 8);
        assert!(ordered.approximates().all(|a| a.q[0] > 0));
        assert!(pairs(&ordered).contains(&(-8, 13)));
        let errs: Vec<f64> = ordered.members.iter().map(|m| m.error_block(1)).collect();
        assert!(errs.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn envelope_is_enforced() {
        let (target, setup) = golden_setup();
        let err = enumerate_direct(&target, &setup, &EnumConfig::new(20.0, Mode::Epsilon)).unwrap_err();
        assert!(matches!(err, Error::PrecisionEnvelope { .. }));
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let target = Target::random(1, 1, crate::Precision::Standard, 5);
        let setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45).unwrap();
        let a = enumerate_direct(&target, &setup, &EnumConfig::new(11.0, Mode::EpsilonStar).with_workers(1).with_chunk_size(97)).unwrap();
        let b = enumerate_direct(&target, &setup, &EnumConfig::new(11.0, Mode::EpsilonStar).with_workers(3).with_chunk_size(4096)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rational_theta_reports_degenerate_members() {
        let target = Target::from_f64(1, 1, &[0.5]).unwrap();
        let setup = Setup::simple(Decomposition::scalar(), 0.5, 0.4).unwrap();
        let stream = enumerate_direct(&target, &setup, &EnumConfig::new(3.0, Mode::Epsilon)).unwrap();
        assert!(stream.degenerate.iter().any(|m| m.approx.p == vec![-1] && m.approx.q == vec![2]));
        assert!(stream.members.iter().all(|m| !m.is_degenerate()));
    }
}
