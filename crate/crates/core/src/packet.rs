//! The data packet of an approximate: error term, block directions,
//! congruence residues and the shape lattice.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::enumerate::Member;
use crate::error::{Error, Result};
use crate::linalg::{lll, Matrix};
use crate::norms::{block_norms, int_block_norms};
use crate::types::{Decomposition, Setup, Target};

/// A point of `E_2`, the unimodular planar lattices containing `e_2`,
/// through the chart `Z (1, beta) + Z e_2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusCoordinate {
    pub beta: f64,
}

impl TorusCoordinate {
    pub fn new(beta: f64) -> Self {
        let mut b = beta.rem_euclid(1.0);
        if b >= 1.0 {
            b = 0.0;
        }
        TorusCoordinate { beta: b }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub error: f64,
    /// one unit vector per block, p-blocks first
    pub proj: Vec<Vec<f64>>,
    pub residues: BTreeMap<u64, Vec<u64>>,
    /// row-major `d x d`, columns form a basis of the shape lattice
    pub shape_basis: Vec<f64>,
    pub shape_index: usize,
    /// `d = 2` only
    pub torus: Option<TorusCoordinate>,
    /// Euclidean length of the shortest LLL basis vector, `d >= 3`
    pub shortest_vector: Option<f64>,
}

impl Packet {
    pub fn proj_flat(&self) -> Vec<f64> {
        self.proj.concat()
    }
}

/// Block norms of `(p + theta q, q)`; fails if any block is zero.
fn nondegenerate_norms(target: &Target, p: &[i64], q: &[i64], setup: &Setup) -> Result<(Vec<f64>, Vec<f64>)> {
    let dec = &setup.dec;
    target.check_shape(dec)?;
    if p.len() != dec.m() || q.len() != dec.n() {
        return Err(Error::DimensionMismatch {
            expected: dec.d(),
            got: p.len() + q.len(),
        });
    }
    let kinds = setup.norms.kinds();
    let residual = target.residual(p, q);
    let mut norms = block_norms(&residual, dec.m_parts(), &kinds[..dec.k()]);
    norms.extend(int_block_norms(q, dec.n_parts(), &kinds[dec.k()..]));
    if let Some(block) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::Degenerate { block });
    }
    Ok((residual, norms))
}

fn product_error(norms: &[f64], dec: &Decomposition) -> f64 {
    norms
        .iter()
        .zip(dec.all_parts())
        .map(|(&x, len)| x.powi(len as i32))
        .product()
}

/// `prod ||rho_i(p + theta q)||^{m_i} prod ||rho'_j(q)||^{n_j}`.
pub fn error_term(target: &Target, p: &[i64], q: &[i64], setup: &Setup) -> Result<f64> {
    let (_, norms) = nondegenerate_norms(target, p, q, setup)?;
    Ok(product_error(&norms, &setup.dec))
}

fn normalised_blocks(residual: &[f64], q: &[i64], norms: &[f64], dec: &Decomposition) -> Vec<Vec<f64>> {
    let full: Vec<f64> = residual
        .iter()
        .copied()
        .chain(q.iter().map(|&x| x as f64))
        .collect();
    dec.block_ranges()
        .iter()
        .zip(norms)
        .map(|(&(off, len), &nb)| full[off..off + len].iter().map(|x| x / nb).collect())
        .collect()
}

/// Block-wise unit vectors of `(p + theta q, q)`.
pub fn proj(target: &Target, p: &[i64], q: &[i64], setup: &Setup) -> Result<Vec<Vec<f64>>> {
    let (residual, norms) = nondegenerate_norms(target, p, q, setup)?;
    Ok(normalised_blocks(&residual, q, &norms, &setup.dec))
}

/// `(p, q)` reduced coordinate-wise into `[0, N)` for every modulus.
pub fn residues(p: &[i64], q: &[i64], moduli: &[u64]) -> BTreeMap<u64, Vec<u64>> {
    moduli
        .iter()
        .map(|&n| {
            let v = p
                .iter()
                .chain(q)
                .map(|&x| (x as i128).rem_euclid(n as i128) as u64)
                .collect();
            (n, v)
        })
        .collect()
}

/// `D U(theta)` with `U = [[I, theta], [0, I]]` and `D` the inverse block
/// norms; maps `(p, q)` to the flattened projection.
pub fn lattice_lambda_theta(target: &Target, p: &[i64], q: &[i64], setup: &Setup) -> Result<Matrix> {
    let (_, norms) = nondegenerate_norms(target, p, q, setup)?;
    Ok(lambda_theta_from_norms(target, &norms, &setup.dec))
}

fn lambda_theta_from_norms(target: &Target, norms: &[f64], dec: &Decomposition) -> Matrix {
    let d = dec.d();
    let m = dec.m();
    let mut scale = vec![0.0; d];
    for (&(off, len), &nb) in dec.block_ranges().iter().zip(norms) {
        for s in &mut scale[off..off + len] {
            *s = 1.0 / nb;
        }
    }
    let mut b = Matrix::zeros(d);
    for i in 0..d {
        b[(i, i)] = scale[i];
    }
    for i in 0..m {
        for j in 0..dec.n() {
            b[(i, m + j)] = scale[i] * target.entry(i, j).to_f64();
        }
    }
    b
}

/// The matrix fixing the complement of `e_j` up to the scalar
/// `c = (gamma |x_j|)^{1/(d-1)}` and sending `x` to `sign(x_j) e_j`; its
/// determinant is `c^{d-1} / |x_j| = gamma`.
pub fn a_j_matrix(x: &[f64], gamma: f64, j: usize) -> Result<Matrix> {
    let d = x.len();
    if j < 1 || j > d {
        return Err(Error::InvalidParams(format!("index {j} outside [1, {d}]")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParams("gamma must be positive".into()));
    }
    let jj = j - 1;
    let xj = x[jj];
    if xj == 0.0 {
        return Err(Error::ShapeUndefined { index: j });
    }
    if d == 1 {
        return Ok(Matrix::diagonal(&[1.0 / xj]));
    }
    let c = (gamma * xj.abs()).powf(1.0 / (d - 1) as f64);
    let mut a = Matrix::zeros(d);
    for i in 0..d {
        if i == jj {
            a[(i, jj)] = 1.0 / xj.abs();
        } else {
            a[(i, i)] = c;
            a[(i, jj)] = -c * x[i] / xj;
        }
    }
    Ok(a)
}

/// `A_j(Proj, Error) Lambda_theta(p, q)`, unimodular and containing `+-e_j`.
pub fn shape_lambda_j(target: &Target, p: &[i64], q: &[i64], setup: &Setup) -> Result<Matrix> {
    let dec = &setup.dec;
    let (residual, norms) = nondegenerate_norms(target, p, q, setup)?;
    let j = setup.params.shape_index;
    let x: Vec<f64> = normalised_blocks(&residual, q, &norms, dec).concat();
    let a = a_j_matrix(&x, product_error(&norms, dec), j)?;
    let lam = lambda_theta_from_norms(target, &norms, dec);
    Ok(&a * &lam)
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a.signum() * a, a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Reads `beta` off a `d = 2` basis containing `e_2`.
pub fn torus_coordinate(basis: &Matrix) -> Result<TorusCoordinate> {
    if basis.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: basis.dim(),
        });
    }
    let z = basis.solve(&[0.0, 1.0])?;
    let zr: Vec<f64> = z.iter().map(|x| x.round()).collect();
    let off = z
        .iter()
        .zip(&zr)
        .fold(0.0f64, |a, (x, r)| a.max((x - r).abs() / (1.0 + r.abs()).sqrt()));
    if off > 1e-6 || zr.iter().any(|x| x.abs() > 2f64.powi(62)) {
        return Err(Error::MembershipSolve(format!(
            "e_2 coefficients {z:?} are not integral"
        )));
    }
    let (z1, z2) = (zr[0] as i128, zr[1] as i128);
    let (g, a, b) = ext_gcd(z1, z2);
    if g != 1 {
        return Err(Error::MembershipSolve(format!(
            "e_2 is not primitive (gcd {g})"
        )));
    }
    // z1 y2 - z2 y1 = 1 with y = (-b, a)
    let y = [-b as f64, a as f64];
    let u = basis[(0, 0)] * y[0] + basis[(0, 1)] * y[1];
    let w = basis[(1, 0)] * y[0] + basis[(1, 1)] * y[1];
    Ok(TorusCoordinate::new(w * u.signum()))
}

/// `beta` of the shape lattice of `(p, q)` for `d = 2`, `j = 2`, computed from
/// the integers alone: with `(p, q)` normalised to `q > 0`, `beta = b / q`
/// where `q a - p b = 1`.
pub fn torus_beta_exact(p: i64, q: i64) -> Result<TorusCoordinate> {
    if q == 0 {
        return Err(Error::Degenerate { block: 1 });
    }
    let (p, q) = if q < 0 { (-(p as i128), -(q as i128)) } else { (p as i128, q as i128) };
    let (g, _, y) = ext_gcd(q, -p);
    if g != 1 {
        return Err(Error::Precondition("(p, q) must be primitive".into()));
    }
    Ok(TorusCoordinate::new(y.rem_euclid(q) as f64 / q as f64))
}

/// `beta` for the convergent `(-h_l, k_l)`: `(-1)^{l-1} k_{l-1} / k_l mod 1`.
pub fn torus_beta_convergent(index: usize, prev_ratio: f64) -> TorusCoordinate {
    if index == 0 {
        return TorusCoordinate::new(0.0);
    }
    let sign = if index % 2 == 1 { 1.0 } else { -1.0 };
    TorusCoordinate::new(sign * prev_ratio)
}

/// Full packet of one pair; degenerate and shape-undefined pairs fail.
pub fn build_packet(target: &Target, p: &[i64], q: &[i64], setup: &Setup) -> Result<Packet> {
    let dec = &setup.dec;
    let (residual, norms) = nondegenerate_norms(target, p, q, setup)?;
    let error = product_error(&norms, dec);
    let proj = normalised_blocks(&residual, q, &norms, dec);
    let j = setup.params.shape_index;
    let x: Vec<f64> = proj.concat();
    let a = a_j_matrix(&x, error, j)?;
    let shape = &a * &lambda_theta_from_norms(target, &norms, dec);
    let torus = if dec.d() == 2 {
        if j == 2 {
            Some(torus_beta_exact(p[0], q[0])?)
        } else {
            Some(torus_coordinate(&shape.reverse_rows())?)
        }
    } else {
        None
    };
    let shortest_vector = if dec.d() >= 3 {
        lll(&shape, 0.99).ok().map(|red| {
            red.basis
                .iter()
                .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
        })
    } else {
        None
    };
    Ok(Packet {
        error,
        proj,
        residues: residues(p, q, &setup.params.congruence_moduli),
        shape_basis: shape.row_major().to_vec(),
        shape_index: j,
        torus,
        shortest_vector,
    })
}

/// Packets of every member that admits one, plus the number skipped because
/// the shape is undefined.
pub fn stream_packets(target: &Target, members: &[Member], setup: &Setup) -> Result<(Vec<(usize, Packet)>, usize)> {
    let mut out = Vec::with_capacity(members.len());
    let mut skipped = 0;
    for (i, m) in members.iter().enumerate() {
        match build_packet(target, &m.approx.p, &m.approx.q, setup) {
            Ok(pk) => out.push((i, pk)),
            Err(Error::ShapeUndefined { .. }) | Err(Error::Degenerate { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((out, skipped))
}
