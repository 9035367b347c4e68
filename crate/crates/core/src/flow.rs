//! The diagonal flow `a_(s,t)`, lattice points in boxes, visit times of the
//! cross-section and Birkhoff averages over `J^T`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::enumerate::Member;
use crate::error::{Error, Result};
use crate::linalg::{lll, LatticeView, Matrix};
use crate::measure::{in_jt, jt_bounding_box};
use crate::norms::{block_norms, gcd_all};
use crate::types::{Approximate, Decomposition, Setup, Target};

const EXP_GUARD: f64 = 700.0;
const CELL_BUDGET: f64 = 1e6;
/// Tolerance of the cross-section membership test.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// `(s_1..s_k, t_1..t_{r-1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTime {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
}

impl FlowTime {
    pub fn new(s: Vec<f64>, t: Vec<f64>, dec: &Decomposition) -> Result<Self> {
        if s.len() != dec.k() || t.len() + 1 != dec.r() {
            return Err(Error::DimensionMismatch {
                expected: dec.flow_rank(),
                got: s.len() + t.len(),
            });
        }
        Ok(FlowTime { s, t })
    }

    pub fn zero(dec: &Decomposition) -> Self {
        FlowTime {
            s: vec![0.0; dec.k()],
            t: vec![0.0; dec.r() - 1],
        }
    }

    /// Splits a point of `R^{k+r-1}`.
    pub fn from_components(x: &[f64], dec: &Decomposition) -> Result<Self> {
        if x.len() != dec.flow_rank() {
            return Err(Error::DimensionMismatch {
                expected: dec.flow_rank(),
                got: x.len(),
            });
        }
        Ok(FlowTime {
            s: x[..dec.k()].to_vec(),
            t: x[dec.k()..].to_vec(),
        })
    }

    pub fn components(&self) -> Vec<f64> {
        self.s.iter().chain(&self.t).copied().collect()
    }

    /// `(sum n_j t_j - sum m_i s_i) / n_r`.
    pub fn last_exponent(&self, dec: &Decomposition) -> f64 {
        let tt: f64 = self.t.iter().zip(dec.n_parts()).map(|(t, &n)| t * n as f64).sum();
        let ss: f64 = self.s.iter().zip(dec.m_parts()).map(|(s, &m)| s * m as f64).sum();
        (tt - ss) / *dec.n_parts().last().unwrap() as f64
    }

    pub fn add(&self, other: &FlowTime) -> FlowTime {
        FlowTime {
            s: self.s.iter().zip(&other.s).map(|(a, b)| a + b).collect(),
            t: self.t.iter().zip(&other.t).map(|(a, b)| a + b).collect(),
        }
    }

    /// Log of the diagonal entry of `a_(s,t)` for every coordinate of `R^d`.
    pub fn log_diagonal(&self, dec: &Decomposition) -> Result<Vec<f64>> {
        let last = self.last_exponent(dec);
        if let Some(&bad) = self
            .components()
            .iter()
            .chain(std::iter::once(&last))
            .find(|x| !(x.abs() <= EXP_GUARD))
        {
            return Err(Error::FlowOverflow(bad));
        }
        let mut out = Vec::with_capacity(dec.d());
        for (&s, &len) in self.s.iter().zip(dec.m_parts()) {
            out.extend(std::iter::repeat_n(s, len));
        }
        let r = dec.r();
        for (j, &len) in dec.n_parts().iter().enumerate() {
            let e = if j + 1 < r { -self.t[j] } else { last };
            out.extend(std::iter::repeat_n(e, len));
        }
        Ok(out)
    }
}

/// `a_(s,t) B`.
pub fn flow_apply(time: &FlowTime, basis: &Matrix, dec: &Decomposition) -> Result<Matrix> {
    if basis.dim() != dec.d() {
        return Err(Error::DimensionMismatch {
            expected: dec.d(),
            got: basis.dim(),
        });
    }
    let diag = time.log_diagonal(dec)?;
    let mut out = basis.clone();
    for (i, e) in diag.iter().enumerate() {
        let f = e.exp();
        for j in 0..dec.d() {
            out[(i, j)] *= f;
        }
    }
    Ok(out)
}

/// `a Lambda_theta` with `Lambda_theta = {(p + theta q, q)}`, evaluated
/// through the double-double residual so flowed points keep full accuracy.
pub struct FlowedThetaLattice<'a> {
    target: &'a Target,
    m: usize,
    scale: Vec<f64>,
}

impl<'a> FlowedThetaLattice<'a> {
    pub fn new(target: &'a Target, time: &FlowTime, dec: &Decomposition) -> Result<Self> {
        target.check_shape(dec)?;
        let scale = time.log_diagonal(dec)?.iter().map(|e| e.exp()).collect();
        Ok(FlowedThetaLattice {
            target,
            m: dec.m(),
            scale,
        })
    }
}

impl LatticeView for FlowedThetaLattice<'_> {
    fn dim(&self) -> usize {
        self.scale.len()
    }
    fn point(&self, z: &[i64]) -> Vec<f64> {
        let (p, q) = z.split_at(self.m);
        self.target
            .residual(p, q)
            .into_iter()
            .chain(q.iter().map(|&x| x as f64))
            .zip(&self.scale)
            .map(|(x, s)| x * s)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    /// coefficients in the lattice's own basis
    pub coeffs: Vec<i64>,
    pub point: Vec<f64>,
}

/// All lattice points inside the closed box `prod [lo_i, hi_i]`.
pub fn lattice_points_in_box(view: &dyn LatticeView, bounds: &[(f64, f64)]) -> Result<Vec<LatticePoint>> {
    let d = view.dim();
    if bounds.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bounds.len(),
        });
    }
    if bounds.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite())) {
        return Err(Error::InvalidParams("box must be bounded".into()));
    }
    if bounds.iter().any(|(lo, hi)| lo > hi) {
        return Ok(Vec::new());
    }
    let red = lll(view, 0.99)?;
    let b = red.matrix();
    let inv = b.inverse()?;
    let mut ranges = Vec::with_capacity(d);
    let mut cells = 1.0f64;
    for j in 0..d {
        let (mut lo, mut hi) = (0.0, 0.0);
        for (i, &(blo, bhi)) in bounds.iter().enumerate() {
            let a = inv[(j, i)] * blo;
            let c = inv[(j, i)] * bhi;
            lo += a.min(c);
            hi += a.max(c);
        }
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        let lo = (lo - slack).ceil();
        let hi = (hi + slack).floor();
        if hi < lo {
            return Ok(Vec::new());
        }
        cells *= hi - lo + 1.0;
        ranges.push((lo as i64, hi as i64));
    }
    if cells > CELL_BUDGET {
        return Err(Error::CellBudget {
            cells,
            budget: CELL_BUDGET,
        });
    }
    let inside = |v: &[f64], slack: f64| {
        v.iter()
            .zip(bounds)
            .all(|(x, (lo, hi))| *x >= lo - slack && *x <= hi + slack)
    };
    let mut out = Vec::new();
    let mut c: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let approx = b.mul_int_vec(&c);
        if inside(&approx, 1e-7) {
            let coeffs = red.lift(&c)?;
            let point = view.point(&coeffs);
            if inside(&point, 0.0) {
                out.push(LatticePoint { coeffs, point });
            }
        }
        let mut idx = d;
        let mut advanced = false;
        while idx > 0 {
            idx -= 1;
            if c[idx] < ranges[idx].1 {
                c[idx] += 1;
                for (v, r) in c.iter_mut().zip(&ranges).skip(idx + 1) {
                    *v = r.0;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    out.sort_by(|a, b| a.coeffs.cmp(&b.coeffs));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitRecord {
    pub time: FlowTime,
    pub source: Approximate,
    pub verified: bool,
    /// largest deviation seen by the membership test
    pub residual: f64,
}

/// Flow time sending `(p + theta q, q)` to unit norm in the first `k + r - 1`
/// blocks, with the membership test of the flowed vector against `L_eps`.
pub fn visit_record(member: &Member, setup: &Setup) -> Result<VisitRecord> {
    let dec = &setup.dec;
    let k = dec.k();
    let r = dec.r();
    let norms = &member.block_norms;
    if let Some(block) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::Degenerate { block });
    }
    let s: Vec<f64> = norms[..k].iter().map(|x| -x.ln()).collect();
    let t: Vec<f64> = norms[k..k + r - 1].iter().map(|x| x.ln()).collect();
    let time = FlowTime { s, t };
    let diag = time.log_diagonal(dec)?;
    let flowed: Vec<f64> = member
        .residual
        .iter()
        .copied()
        .chain(member.approx.q.iter().map(|&x| x as f64))
        .zip(&diag)
        .map(|(x, e)| x * e.exp())
        .collect();
    let fnorms = block_norms(&flowed, &dec.all_parts(), setup.norms.kinds());
    let mut residual = 0.0f64;
    for &x in &fnorms[..k + r - 1] {
        residual = residual.max((x - 1.0).abs());
    }
    let n_r = *dec.n_parts().last().unwrap() as i32;
    let last = fnorms[k + r - 1].powi(n_r);
    let excess = (last - setup.params.epsilon).max(0.0);
    residual = residual.max(excess);
    Ok(VisitRecord {
        time,
        source: member.approx.clone(),
        verified: residual <= MEMBERSHIP_TOL,
        residual,
    })
}

/// Visit records of every non-degenerate member, in stream order.
pub fn visit_times(members: &[Member], setup: &Setup) -> Result<Vec<VisitRecord>> {
    members
        .iter()
        .filter(|m| !m.is_degenerate())
        .map(|m| visit_record(m, setup))
        .collect()
}

/// Comparison of visit records against the stream they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    /// stream members inside the eta window and height range
    pub members: usize,
    pub verified: usize,
    pub distinct_times: usize,
    /// time classes not made of exactly one `+-` pair
    pub collisions: usize,
    pub max_residual: f64,
}

impl Correspondence {
    pub fn is_exact(&self) -> bool {
        self.verified == self.members
            && self.collisions == 0
            && 2 * self.distinct_times == self.members
            && self.max_residual < MEMBERSHIP_TOL
    }
}

/// Groups records by the bit pattern of their flow times.
pub fn correspondence(records: &[VisitRecord], setup: &Setup, t_max: f64) -> Correspondence {
    let etas = &setup.params.etas;
    let selected: Vec<&VisitRecord> = records
        .iter()
        .filter(|r| {
            r.time.s.iter().zip(etas).all(|(s, eta)| *s > -eta.ln()) && r.source.height.ln() <= t_max
        })
        .collect();
    let mut groups: BTreeMap<Vec<u64>, Vec<&Approximate>> = BTreeMap::new();
    for r in &selected {
        let key = r.time.components().iter().map(|x| x.to_bits()).collect();
        groups.entry(key).or_default().push(&r.source);
    }
    let collisions = groups
        .values()
        .filter(|g| !(g.len() == 2 && g[0].negated().coords() == g[1].coords()))
        .count();
    Correspondence {
        members: selected.len(),
        verified: selected.iter().filter(|r| r.verified).count(),
        distinct_times: groups.len(),
        collisions,
        max_residual: selected.iter().map(|r| r.residual).fold(0.0, f64::max),
    }
}

/// Number of `+-` pairs of `a_t Lambda_theta` lying in `L_eps`.
pub fn pairs_in_section(target: &Target, time: &FlowTime, setup: &Setup) -> Result<usize> {
    let dec = &setup.dec;
    let view = FlowedThetaLattice::new(target, time, dec)?;
    let n_r = *dec.n_parts().last().unwrap();
    let last_radius = setup.params.epsilon.powf(1.0 / n_r as f64) + MEMBERSHIP_TOL;
    let mut bounds = vec![(-1.0 - MEMBERSHIP_TOL, 1.0 + MEMBERSHIP_TOL); dec.d()];
    for b in &mut bounds[dec.d() - n_r..] {
        *b = (-last_radius, last_radius);
    }
    let points = lattice_points_in_box(&view, &bounds)?;
    let parts = dec.all_parts();
    let nb = parts.len();
    let count = points
        .iter()
        .filter(|lp| {
            let norms = block_norms(&lp.point, &parts, setup.norms.kinds());
            norms[..nb - 1].iter().all(|x| (x - 1.0).abs() <= MEMBERSHIP_TOL)
                && norms[nb - 1].powi(n_r as i32) <= setup.params.epsilon + MEMBERSHIP_TOL
        })
        .count();
    Ok(count / 2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffAverage {
    pub t: f64,
    pub grid_step: f64,
    pub nodes: usize,
    pub offset: Vec<f64>,
    pub average: f64,
}

/// Grid step giving at least `min_nodes` nodes inside `J^T`.
pub fn default_grid_step(t: f64, dec: &Decomposition, min_nodes: usize) -> f64 {
    let vol = crate::measure::jt_volume(t, dec);
    let rank = dec.flow_rank() as f64;
    // the J^T volume per node, shrunk to absorb boundary losses
    0.8 * (vol / min_nodes as f64).powf(1.0 / rank)
}

/// Number of primitive lattice points of `view` in the box `w`.
pub fn primitive_count(view: &dyn LatticeView, w: &[(f64, f64)]) -> Result<usize> {
    Ok(lattice_points_in_box(view, w)?
        .iter()
        .filter(|lp| gcd_all(&lp.coeffs) == 1)
        .count())
}

/// Riemann-sum average over `J^T` of the primitive-point count of
/// `a_x Lambda_theta` in `w`, on a grid of step `grid_step` shifted by a
/// seeded random offset.
pub fn birkhoff_average(
    target: &Target,
    w: &[(f64, f64)],
    dec: &Decomposition,
    t: f64,
    grid_step: f64,
    seed: u64,
) -> Result<BirkhoffAverage> {
    if !(t > 0.0) || !(grid_step > 0.0) {
        return Err(Error::InvalidParams("T and the grid step must be positive".into()));
    }
    let bbox = jt_bounding_box(t, dec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: Vec<f64> = bbox.iter().map(|_| grid_step * rng.gen::<f64>()).collect();
    let counts: Vec<usize> = bbox
        .iter()
        .zip(&offset)
        .map(|((lo, hi), o)| (((hi - lo - o) / grid_step).floor() + 1.0).max(0.0) as usize)
        .collect();
    let mut nodes = Vec::new();
    let mut idx = vec![0usize; bbox.len()];
    'outer: loop {
        let x: Vec<f64> = idx
            .iter()
            .zip(&bbox)
            .zip(&offset)
            .map(|((&i, (lo, _)), o)| lo + o + i as f64 * grid_step)
            .collect();
        if in_jt(&x, t, dec) {
            nodes.push(x);
        }
        let mut c = idx.len();
        while c > 0 {
            c -= 1;
            if idx[c] + 1 < counts[c] {
                idx[c] += 1;
                idx[c + 1..].iter_mut().for_each(|v| *v = 0);
                continue 'outer;
            }
        }
        break;
    }
    if nodes.len() < 1000 {
        return Err(Error::InvalidParams(format!(
            "grid step {grid_step} gives only {} nodes in J^T; need at least 1000",
            nodes.len()
        )));
    }
    let values: Vec<usize> = nodes
        .par_iter()
        .map(|x| {
            let time = FlowTime::from_components(x, dec)?;
            let view = FlowedThetaLattice::new(target, &time, dec)?;
            primitive_count(&view, w)
        })
        .collect::<Result<_>>()?;
    let average = values.iter().sum::<usize>() as f64 / values.len() as f64;
    Ok(BirkhoffAverage {
        t,
        grid_step,
        nodes: nodes.len(),
        offset,
        average,
    })
}

/// Mean over targets of the primitive count of `a_time Lambda_theta` in `w`.
pub fn ensemble_mean(targets: &[Target], w: &[(f64, f64)], dec: &Decomposition, time: &FlowTime) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    let counts: Vec<usize> = targets
        .par_iter()
        .map(|t| {
            let view = FlowedThetaLattice::new(t, time, dec)?;
            primitive_count(&view, w)
        })
        .collect::<Result<_>>()?;
    Ok(counts.iter().sum::<usize>() as f64 / counts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_direct, EnumConfig, Mode};
    use crate::types::Precision;
    use proptest::prelude::*;

    #[test]
    fn flow_examples() {
        let dec = Decomposition::scalar();
        let b = Matrix::from_rows(&[vec![1.0, 0.3], vec![0.2, 1.5]]).unwrap();
        assert_eq!(flow_apply(&FlowTime::zero(&dec), &b, &dec).unwrap(), b);
        let time = FlowTime::new(vec![0.7], vec![], &dec).unwrap();
        let a = flow_apply(&time, &Matrix::identity(2), &dec).unwrap();
        assert!((a[(0, 0)] - 0.7f64.exp()).abs() < 1e-15);
        assert!((a[(1, 1)] - (-0.7f64).exp()).abs() < 1e-15);
        let big = FlowTime::new(vec![800.0], vec![], &dec).unwrap();
        assert!(matches!(flow_apply(&big, &b, &dec), Err(Error::FlowOverflow(_))));
    }

    #[test]
    fn box_examples() {
        let z2 = Matrix::identity(2);
        assert_eq!(lattice_points_in_box(&z2, &[(-1.5, 1.5), (-1.5, 1.5)]).unwrap().len(), 9);
        assert!(lattice_points_in_box(&z2, &[(0.2, 0.8), (0.2, 0.8)]).unwrap().is_empty());
        assert_eq!(lattice_points_in_box(&z2, &[(-1.0, 1.0), (0.0, 0.0)]).unwrap().len(), 3);
    }

    #[test]
    fn golden_visit() {
        let target = Target::from_f64(1, 1, &[0.61803398875]).unwrap();
        let setup = Setup::simple(Decomposition::scalar(), 0.5, 0.4).unwrap();
        let stream = enumerate_direct(&target, &setup, &EnumConfig::new(4.0, Mode::Epsilon)).unwrap();
        let m = stream.members.iter().find(|m| m.approx.p == vec![-8]).unwrap();
        let rec = visit_record(m, &setup).unwrap();
        assert!((rec.time.s[0] - 3.3685).abs() < 1e-4);
        assert!(rec.verified);
        let records = visit_times(&stream.members, &setup).unwrap();
        let c = correspondence(&records, &setup, 4.0);
        assert!(c.is_exact(), "{c:?}");
        assert_eq!(pairs_in_section(&target, &rec.time, &setup).unwrap(), 1);
    }

    #[test]
    fn birkhoff_with_empty_window_is_zero() {
        let target = Target::random(1, 1, Precision::Standard, 3);
        let dec = Decomposition::scalar();
        let step = default_grid_step(6.0, &dec, 1000);
        let avg = birkhoff_average(&target, &[(0.2, 0.1), (0.0, 1.0)], &dec, 6.0, step, 1).unwrap();
        assert_eq!(avg.average, 0.0);
        assert!(avg.nodes >= 1000);
    }

    proptest! {
        #[test]
        fn determinant_is_preserved(entries in prop::collection::vec(-2.0f64..2.0, 9), s in prop::collection::vec(-5.0f64..5.0, 2)) {
            let dec = Decomposition::new(vec![1, 1], vec![1]).unwrap();
            let b = Matrix::from_rows(&[entries[0..3].to_vec(), entries[3..6].to_vec(), entries[6..9].to_vec()]).unwrap();
            let time = FlowTime::new(s, vec![], &dec).unwrap();
            let a = flow_apply(&time, &b, &dec).unwrap();
            prop_assert!((a.det().abs() - b.det().abs()).abs() < 1e-12 * (1.0 + b.det().abs()) * 1e3);
        }

        #[test]
        fn flow_is_additive(s1 in -3.0f64..3.0, s2 in -3.0f64..3.0, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
            let dec = Decomposition::new(vec![1], vec![1, 1]).unwrap();
            let b = Matrix::from_rows(&[vec![1.0, 0.3, -0.2], vec![0.1, 0.9, 0.4], vec![0.0, 0.5, 1.1]]).unwrap();
            let x = FlowTime::new(vec![s1], vec![t1], &dec).unwrap();
            let y = FlowTime::new(vec![s2], vec![t2], &dec).unwrap();
            let lhs = flow_apply(&x.add(&y), &b, &dec).unwrap();
            let rhs = flow_apply(&x, &flow_apply(&y, &b, &dec).unwrap(), &dec).unwrap();
            let scale = lhs.row_major().iter().fold(1.0f64, |a, v| a.max(v.abs()));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10 * scale);
        }

        #[test]
        fn box_count_matches_coefficient_brute_force(a in -3i64..3, c in -3i64..3, r in 1.0f64..4.0) {
            let base = Matrix::from_columns(&[vec![1.1, 0.2], vec![-0.3, 0.85]]).unwrap();
            let cols: Vec<Vec<f64>> = [[1 + a * c, c], [a, 1]]
                .iter()
                .map(|u| base.mul_int_vec(&[u[0], u[1]]))
                .collect();
            let b = Matrix::from_columns(&cols).unwrap();
            let w = [(-r, r), (-r, r)];
            let fast = lattice_points_in_box(&b, &w).unwrap().len();
            let bound = 60i64;
            let mut brute = 0;
            for x in -bound..=bound {
                for y in -bound..=bound {
                    let v = b.mul_int_vec(&[x, y]);
                    if v.iter().all(|t| t.abs() <= r) {
                        brute += 1;
                    }
                }
            }
            prop_assert_eq!(fast, brute);
        }
    }
}
