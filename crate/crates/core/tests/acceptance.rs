//! Acceptance run: one PASS/FAIL line per criterion, checked against oracles
//! written here rather than the library's own helpers.
//!
//! Criteria 1, 2 and 6 are exact and make the run exit non-zero when they
//! fail. The others are finite-T statistical checks and are only reported.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use eapprox::cf::enumerate_cf;
use eapprox::enumerate::{enumerate_direct, ApproximateStream, EnumConfig, Mode};
use eapprox::experiments::{birkhoff_experiment, cf_betas, cf_pairs, packet_sample};
use eapprox::flow::{pairs_in_section, visit_record};
use eapprox::measure::{c_constant, jt_volume, primitive_count_mod, zeta};
use eapprox::returns::{build_return_series, w_sequence, Constraint, Visit};
use eapprox::{Decomposition, Precision, Setup, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

const ZETA3: f64 = 1.202_056_903_159_594_3;
const TWO53: f64 = 9_007_199_254_740_992.0;

fn seeds(count: u64) -> Vec<u64> {
    (1..=count).collect()
}

fn dec(m: &[usize], n: &[usize]) -> Decomposition {
    Decomposition::new(m.to_vec(), n.to_vec()).expect("valid decomposition")
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn gcd_vec(v: &[i64]) -> i128 {
    v.iter().fold(0, |g, &x| gcd(g, x as i128))
}

fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    let mut x: Vec<f64> = samples.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).max((i + 1) as f64 / n - v))
        .fold(0.0, f64::max)
}

fn ks_two(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn chi2(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

/// Upper 1% points of the chi-square distribution.
fn chi2_99(dof: usize) -> f64 {
    match dof {
        3 => 11.345,
        6 => 16.812,
        25 => 44.314,
        _ => panic!("no table entry for {dof} degrees of freedom"),
    }
}

fn coord_set(stream: &ApproximateStream) -> BTreeSet<Vec<i64>> {
    stream
        .members
        .iter()
        .chain(&stream.degenerate)
        .map(|m| m.approx.coords())
        .collect()
}

// ------------------------------------------------------------- criterion 1

fn alternating_sum(n_parts: &[usize], k: usize) -> i128 {
    let r = n_parts.len();
    let mut total = 0i128;
    for x in 0..(1usize << r) {
        let mut sum = 0i128;
        let mut ones = 0;
        for (j, &nj) in n_parts.iter().enumerate() {
            if x >> j & 1 == 1 {
                sum += nj as i128;
                ones += 1;
            }
        }
        let term = sum.pow((k + r - 1) as u32);
        total += if (r - ones).is_multiple_of(2) { term } else { -term };
    }
    total
}

fn compositions(r: usize, max: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for head in 1..=max {
        for mut tail in compositions(r - 1, max) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn residue_count(t: u64, d: u32) -> u128 {
    let mut count = 0;
    for idx in 0..t.pow(d) {
        let mut x = idx;
        let mut g = t as i128;
        for _ in 0..d {
            g = gcd(g, (x % t) as i128);
            x /= t;
        }
        count += (g == 1) as u128;
    }
    count
}

/// Rejection sampling of the flow-time polytope from its defining
/// inequalities.
fn polytope_mc(t: f64, m: &[usize], n: &[usize], samples: usize, seed: u64) -> f64 {
    let (k, r) = (m.len(), n.len());
    let ntot: usize = n.iter().sum();
    let hi: Vec<f64> = m
        .iter()
        .map(|&mi| ntot as f64 * t / mi as f64)
        .chain(std::iter::repeat_n(t, r - 1))
        .collect();
    let vol: f64 = hi.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let mut x = vec![0.0; hi.len()];
    for _ in 0..samples {
        for (xi, h) in x.iter_mut().zip(&hi) {
            *xi = rng.gen::<f64>() * h;
        }
        let a: f64 = x[..k].iter().zip(m).map(|(v, &w)| v * w as f64).sum();
        let b: f64 = x[k..].iter().zip(n).map(|(v, &w)| v * w as f64).sum();
        hits += (a - b >= 0.0 && a - b <= n[r - 1] as f64 * t) as usize;
    }
    vol * hits as f64 / samples as f64
}

fn criterion_1() -> Outcome {
    let mut c_cases = 0;
    let mut c_bad = Vec::new();
    for k in 1..=4 {
        for r in 1..=3 {
            for n in compositions(r, 4) {
                c_cases += 1;
                if c_constant(&n, k) != alternating_sum(&n, k) {
                    c_bad.push((k, n));
                }
            }
        }
    }
    let mut n_cases = 0;
    let mut n_bad = Vec::new();
    for d in 1..=4u32 {
        for t in 2..=30u64 {
            n_cases += 1;
            if primitive_count_mod(t, d) != residue_count(t, d) {
                n_bad.push((t, d));
            }
        }
    }
    let decs: [(&[usize], &[usize]); 5] = [(&[1], &[1]), (&[2], &[3]), (&[1], &[1, 1]), (&[1, 1], &[1]), (&[1, 2], &[2, 1])];
    let mut worst_mc = 0.0f64;
    for (i, (m, n)) in decs.iter().enumerate() {
        let t = 3.0;
        let exact = jt_volume(t, &dec(m, n));
        let mc = polytope_mc(t, m, n, 1_000_000, 100 + i as u64);
        worst_mc = worst_mc.max((mc - exact).abs() / exact);
    }
    let z = ((zeta(2) - PI * PI / 6.0) / (PI * PI / 6.0))
        .abs()
        .max(((zeta(4) - PI.powi(4) / 90.0) / (PI.powi(4) / 90.0)).abs());
    let ok = c_bad.is_empty() && n_bad.is_empty() && worst_mc < 0.01 && z < 1e-12;
    Ok((
        ok,
        format!(
            "c_constant {}/{c_cases} match, N_(t,d) {}/{n_cases} match, J^T Monte Carlo worst rel. error {worst_mc:.4} (< 0.01), zeta rel. error {z:.1e} (< 1e-12)",
            c_cases - c_bad.len(),
            n_cases - n_bad.len()
        ),
    ))
}

// ------------------------------------------------------------- criterion 2

/// Steps `v` through the box `ranges` in lexicographic order; `false` once
/// it wraps around.
fn advance(v: &mut [i64], ranges: &[(i64, i64)]) -> bool {
    for (x, &(lo, hi)) in v.iter_mut().zip(ranges).rev() {
        if *x < hi {
            *x += 1;
            return true;
        }
        *x = lo;
    }
    false
}

/// Exact brute force for targets with entries `a / 2^53`: every `q` in the
/// box, every `p` whose residual block norms are within the window, compared
/// in 128-bit integers. Sup norms throughout.
fn exact_oracle(target: &Target, dc: &Decomposition, eps: f64, eta: f64, t: f64, mode: Mode, s: i128) -> BTreeSet<Vec<i64>> {
    let (m, n) = (dc.m(), dc.n());
    let a: Vec<i128> = target
        .entries_f64()
        .iter()
        .map(|&x| {
            let v = x * TWO53;
            assert_eq!(v.fract(), 0.0, "entry is not a multiple of 2^-53");
            v as i128
        })
        .collect();
    let unit = 1i128 << 53;
    let window = (eta * TWO53).floor() as i128;
    let eps_scaled = eps * TWO53;
    assert_eq!(eps_scaled.fract(), 0.0);
    let bound = (eps_scaled as i128) * unit.pow(m as u32 - 1);
    let qmax = t.exp().floor() as i64;
    let block_max = |v: &[i128], parts: &[usize]| -> Vec<i128> {
        let mut out = Vec::new();
        let mut at = 0;
        for &len in parts {
            out.push(v[at..at + len].iter().map(|x| x.abs()).max().unwrap());
            at += len;
        }
        out
    };
    let mut found = BTreeSet::new();
    let mut q = vec![-qmax; n];
    loop {
        let qi: Vec<i128> = q.iter().map(|&x| x as i128).collect();
        let q_norms = block_max(&qi, dc.n_parts());
        let shifts: Vec<i128> = (0..m).map(|i| (0..n).map(|j| a[i * n + j] * qi[j]).sum()).collect();
        // p_i * 2^53 + shift_i within [-window, window]
        let ranges: Vec<(i64, i64)> = shifts
            .iter()
            .map(|&sh| {
                let lo = (-window - sh).div_euclid(unit) + ((-window - sh).rem_euclid(unit) != 0) as i128;
                let hi = (window - sh).div_euclid(unit);
                (lo as i64, hi as i64)
            })
            .collect();
        if ranges.iter().all(|(lo, hi)| lo <= hi) {
            let mut p: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            loop {
                let x: Vec<i128> = p.iter().zip(&shifts).map(|(&pi, sh)| pi as i128 * unit + sh).collect();
                let p_norms = block_max(&x, dc.m_parts());
                let mut err: i128 = p_norms.iter().zip(dc.m_parts()).map(|(v, &mi)| v.pow(mi as u32)).product();
                for (v, &nj) in q_norms.iter().zip(dc.n_parts()) {
                    err *= (*v).max(1).pow(nj as u32);
                }
                let coords: Vec<i64> = p.iter().chain(&q).copied().collect();
                let g = gcd_vec(&coords);
                let gcd_ok = match mode {
                    Mode::Epsilon => g == 1,
                    Mode::EpsilonStar => g > 0 && g % s == 0,
                };
                if gcd_ok && err <= bound {
                    found.insert(coords);
                }
                if !advance(&mut p, &ranges) {
                    break;
                }
            }
        }
        if !advance(&mut q, &vec![(-qmax, qmax); n]) {
            break;
        }
    }
    found
}

fn criterion_2() -> Outcome {
    let cases = [(dec(&[1], &[1]), 12.0), (dec(&[1, 1], &[1]), 12.0), (dec(&[1], &[2]), 6.0)];
    let modes = [(Mode::Epsilon, 1u64), (Mode::EpsilonStar, 1), (Mode::EpsilonStar, 2)];
    let (eps, eta) = (0.5, 0.4);
    let mut compared = 0;
    let mut mismatches = Vec::new();
    let mut members = 0usize;
    for (dc, t) in &cases {
        let setup = Setup::simple(dc.clone(), eps, eta).map_err(|e| e.to_string())?;
        for seed in seeds(10) {
            let target = Target::random(dc.m(), dc.n(), Precision::Standard, seed);
            for &(mode, s) in &modes {
                let cfg = EnumConfig::new(*t, mode).with_divisor(s);
                let got = coord_set(&enumerate_direct(&target, &setup, &cfg).map_err(|e| e.to_string())?);
                let want = exact_oracle(&target, dc, eps, eta, *t, mode, s as i128);
                compared += 1;
                members += want.len();
                if got != want {
                    mismatches.push(format!("d={} seed {seed} {mode:?}/s={s}", dc.d()));
                }
            }
        }
    }
    let cf_setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45).map_err(|e| e.to_string())?;
    let mut cf_compared = 0;
    for seed in seeds(10) {
        let target = Target::random(1, 1, Precision::Rational { bits: 512 }, seed);
        for mode in [Mode::Epsilon, Mode::EpsilonStar] {
            let cfg = EnumConfig::new(16.0, mode);
            let cf = coord_set(&enumerate_cf(&target, &cf_setup, &cfg).map_err(|e| e.to_string())?);
            let direct = coord_set(&enumerate_direct(&target, &cf_setup, &cfg).map_err(|e| e.to_string())?);
            cf_compared += 1;
            if cf != direct || cf.is_empty() {
                mismatches.push(format!("cf seed {seed} {mode:?}"));
            }
        }
    }
    Ok((
        mismatches.is_empty(),
        format!(
            "{compared} direct-vs-exact comparisons ({members} oracle members), {cf_compared} cf-vs-direct at T=16; mismatches: {}",
            if mismatches.is_empty() { "none".to_string() } else { mismatches.join(", ") }
        ),
    ))
}

// ------------------------------------------------------- criteria 3 and 4

fn mean_count(streams: &[ApproximateStream], t: f64, accept: impl Fn(i128) -> bool) -> f64 {
    let h = t.exp();
    let total: usize = streams
        .iter()
        .map(|st| {
            st.members
                .iter()
                .filter(|m| m.approx.height <= h && accept(gcd_vec(&m.approx.coords())))
                .count()
        })
        .sum();
    total as f64 / streams.len() as f64
}

fn run_streams(dc: &Decomposition, t: f64, mode: Mode, count: u64) -> Result<Vec<ApproximateStream>, String> {
    let setup = Setup::simple(dc.clone(), 0.5, 0.4).map_err(|e| e.to_string())?;
    seeds(count)
        .into_iter()
        .map(|seed| {
            let target = Target::random(dc.m(), dc.n(), Precision::Standard, seed);
            enumerate_direct(&target, &setup, &EnumConfig::new(t, mode)).map_err(|e| e.to_string())
        })
        .collect()
}

fn criterion_3(d2: &[ApproximateStream]) -> Outcome {
    let eps = 0.5;
    let ts = [10.0, 12.0, 14.0, 16.0, 18.0];
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [1i128, 2] {
        let counts: Vec<f64> = ts.iter().map(|&t| mean_count(d2, t, |g| g % s == 0)).collect();
        let c = ts.iter().zip(&counts).map(|(t, d)| t * d).sum::<f64>() / ts.iter().map(|t| t * t).sum::<f64>();
        let predicted = 4.0 * eps / (s * s) as f64;
        let rel = (c - predicted).abs() / predicted;
        ok &= rel < 0.15;
        parts.push(format!("s={s}: coefficient {c:.4} vs {predicted:.4} (rel. {rel:.3} < 0.15)"));
    }
    Ok((ok, parts.join("; ")))
}

fn primitive_share(streams: &[ApproximateStream], t: f64) -> (f64, usize) {
    let h = t.exp();
    let (mut prim, mut all) = (0usize, 0usize);
    for st in streams {
        for m in st.members.iter().filter(|m| m.approx.height <= h) {
            all += 1;
            prim += (gcd_vec(&m.approx.coords()) == 1) as usize;
        }
    }
    (prim as f64 / all as f64, all)
}

fn criterion_4(d2: &[ApproximateStream]) -> Outcome {
    let (f2, n2) = primitive_share(d2, 18.0);
    let d3 = run_streams(&dec(&[1, 1], &[1]), 14.0, Mode::EpsilonStar, 20)?;
    let (f3, n3) = primitive_share(&d3, 14.0);
    let z2 = 6.0 / (PI * PI);
    let z3 = 1.0 / ZETA3;
    let ok = (f2 - z2).abs() <= 0.03 && (f3 - z3).abs() <= 0.04;
    Ok((
        ok,
        format!("d=2 T=18: {f2:.4} vs {z2:.4} +- 0.03 (n={n2}); d=3 T=14: {f3:.4} vs {z3:.4} +- 0.04 (n={n3})"),
    ))
}

// ------------------------------------------------------------- criterion 5

fn criterion_5() -> Outcome {
    let t = 14.0;
    let streams = run_streams(&dec(&[1, 1], &[1]), t, Mode::Epsilon, 10)?;
    let mean = streams.iter().map(|s| s.members.len()).sum::<usize>() as f64 / streams.len() as f64;
    let predicted = 0.5 * 8.0 * t * t / (2.0 * ZETA3);
    let rel = (mean - predicted).abs() / predicted;
    Ok((rel < 0.2, format!("mean D#(14) {mean:.2} vs {predicted:.2} (rel. {rel:.3} < 0.2)")))
}

// ------------------------------------------------------------- criterion 6

fn exact_residuals(target: &Target, p: &[i64], q: &[i64]) -> Vec<f64> {
    let n = q.len();
    let a: Vec<i128> = target.entries_f64().iter().map(|&x| (x * TWO53) as i128).collect();
    p.iter()
        .enumerate()
        .map(|(i, &pi)| {
            let x: i128 = pi as i128 * (1 << 53) + (0..n).map(|j| a[i * n + j] * q[j] as i128).sum::<i128>();
            x as f64 / TWO53
        })
        .collect()
}

/// Lattice points of the flowed `d = 2` lattice with `|x| = 1` and `|y| <= eps`,
/// found by scanning every admissible `q`. The target is `a / 2^53`.
fn section_pairs_d2(a: i128, s: f64, eps: f64) -> usize {
    let qmax = (eps * s.exp()).floor() as i64;
    let shrink = (-s).exp();
    let theta = a as f64 / TWO53;
    let mut count = 0;
    for q in -qmax..=qmax {
        let centre = -theta * q as f64;
        let lo = (centre - shrink).round() as i64;
        let hi = (centre + shrink).round() as i64;
        for p in lo..=hi {
            let x = (p as i128 * (1 << 53) + a * q as i128) as f64 / TWO53 * s.exp();
            if (x.abs() - 1.0).abs() < 1e-9 && (q as f64 * shrink).abs() <= eps * (1.0 + 1e-9) {
                count += 1;
            }
        }
    }
    count / 2
}

fn criterion_6() -> Outcome {
    let t = 12.0;
    let (eps, eta) = (0.5, 0.4);
    let mut members = 0;
    let mut problems = Vec::new();
    let mut worst = 0.0f64;
    let mut brute = 0;
    for dc in [Decomposition::scalar(), dec(&[1, 1], &[1])] {
        let setup = Setup::simple(dc.clone(), eps, eta).map_err(|e| e.to_string())?;
        for seed in seeds(10) {
            let target = Target::random(dc.m(), dc.n(), Precision::Standard, seed);
            let stream = enumerate_direct(&target, &setup, &EnumConfig::new(t, Mode::Epsilon)).map_err(|e| e.to_string())?;
            // +- class -> time bit patterns seen for it
            let mut classes: BTreeMap<Vec<i64>, BTreeSet<Vec<u64>>> = BTreeMap::new();
            let mut times: BTreeMap<Vec<u64>, BTreeSet<Vec<i64>>> = BTreeMap::new();
            for m in &stream.members {
                members += 1;
                let rec = visit_record(m, &setup).map_err(|e| e.to_string())?;
                let (p, q) = (&m.approx.p, &m.approx.q);
                let x = exact_residuals(&target, p, q);
                let own: Vec<f64> = x.iter().map(|v| -v.abs().ln()).collect();
                if !rec.verified || own.iter().zip(&setup.params.etas).any(|(s, e)| *s < -e.ln()) {
                    problems.push(format!("seed {seed} {:?} not verified", m.approx.coords()));
                }
                if rec.time.s.iter().zip(&own).any(|(a, b)| (a - b).abs() > 1e-9) || !rec.time.t.is_empty() {
                    problems.push(format!("seed {seed} {:?} time differs", m.approx.coords()));
                }
                let on_sphere = rec.time.s.iter().zip(&x).map(|(s, v)| (s.exp() * v.abs() - 1.0).abs()).fold(0.0, f64::max);
                let last = (-rec.time.s.iter().sum::<f64>()).exp() * q[0].abs() as f64;
                worst = worst.max(on_sphere).max((last - eps).max(0.0));
                let sign = if q[0] < 0 { -1 } else { 1 };
                let class: Vec<i64> = m.approx.coords().iter().map(|c| c * sign).collect();
                let bits: Vec<u64> = rec.time.s.iter().map(|v| v.to_bits()).collect();
                classes.entry(class.clone()).or_default().insert(bits.clone());
                times.entry(bits).or_default().insert(class);
                if pairs_in_section(&target, &rec.time, &setup).map_err(|e| e.to_string())? != 1 {
                    problems.push(format!("seed {seed} {:?} section count", m.approx.coords()));
                }
                if dc.d() == 2 && rec.time.s[0] <= 11.0 && q[0] > 0 {
                    brute += 1;
                    if section_pairs_d2((target.entries_f64()[0] * TWO53) as i128, rec.time.s[0], eps) != 1 {
                        problems.push(format!("seed {seed} {:?} brute section count", m.approx.coords()));
                    }
                }
            }
            let two_to_one = classes.values().all(|t| t.len() == 1) && times.values().all(|c| c.len() == 1);
            if !two_to_one || stream.members.len() != 2 * classes.len() {
                problems.push(format!("d={} seed {seed} not two-to-one", dc.d()));
            }
        }
    }
    let ok = problems.is_empty() && worst < 1e-9;
    Ok((
        ok,
        format!(
            "{members} members, {brute} sections re-counted by scan, max membership residual {worst:.1e} (< 1e-9); problems: {}",
            if problems.is_empty() { "none".to_string() } else { problems[..problems.len().min(5)].join(", ") }
        ),
    ))
}

// ------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let eps = 0.25;
    let setup = Setup::simple(dec(&[1, 1], &[1]), eps, 0.7)
        .and_then(|s| s.with_moduli(vec![2, 3]))
        .map_err(|e| e.to_string())?;
    let sample = packet_sample(&setup, 16.0, &seeds(50)).map_err(|e| e.to_string())?;
    let n = sample.errors.len();
    let ks = ks_uniform(&sample.errors, 0.0, eps);
    let mut signs = [0u64; 4];
    for &c in &sample.sign_classes {
        signs[c] += 1;
    }
    let sign_chi = chi2(&signs);
    let mut ok = n >= 3000 && ks < 0.05 && sign_chi < chi2_99(3);
    let mut parts = vec![
        format!("n={n} (>= 3000)"),
        format!("error KS {ks:.4} (< 0.05)"),
        format!("sign chi2 {sign_chi:.2} (< {:.3})", chi2_99(3)),
    ];
    for modulus in [2u64, 3] {
        let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
        for a in 0..modulus {
            for b in 0..modulus {
                for c in 0..modulus {
                    if (a, b, c) != (0, 0, 0) {
                        counts.insert(vec![a, b, c], 0);
                    }
                }
            }
        }
        let mut stray = 0;
        for r in &sample.residues[&modulus] {
            match counts.get_mut(r) {
                Some(c) => *c += 1,
                None => stray += 1,
            }
        }
        let counts: Vec<u64> = counts.into_values().collect();
        let stat = chi2(&counts);
        let crit = chi2_99(counts.len() - 1);
        ok &= stat < crit && stray == 0;
        parts.push(format!("mod {modulus} chi2 {stat:.2} (< {crit:.3})"));
    }
    Ok((ok, parts.join(", ")))
}

// ------------------------------------------------------------- criterion 8

fn inverse_mod(a: i128, m: i128) -> Option<i128> {
    let (mut r0, mut r1, mut s0, mut s1) = (a.rem_euclid(m), m, 1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m))
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn criterion_8() -> Outcome {
    let setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45).map_err(|e| e.to_string())?;
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut collect = |seed: u64, bits: u32| -> Result<Vec<f64>, String> {
        let pairs = cf_pairs(&setup, bits, seed).map_err(|e| e.to_string())?;
        let betas = cf_betas(&pairs);
        for (a, &b) in pairs.iter().zip(&betas) {
            if let Some((h, k)) = a.exact {
                if k >= 2 && a.multiplier == 1 {
                    let own = inverse_mod(h, k).ok_or("convergent not coprime")? as f64 / k as f64;
                    worst = worst.max(circular_gap(own, b));
                    checked += 1;
                }
            }
        }
        Ok(betas)
    };
    let mut pooled = Vec::new();
    for seed in seeds(50) {
        pooled.extend(collect(seed, 512)?);
    }
    let single = collect(0, 1 << 17)?;
    let ks_pooled = ks_uniform(&pooled, 0.0, 1.0);
    let ks_single = ks_uniform(&single, 0.0, 1.0);
    let ok = pooled.len() >= 2000 && ks_pooled < 0.07 && single.len() >= 5000 && ks_single < 0.05 && worst < 1e-9;
    Ok((
        ok,
        format!(
            "pooled 512-bit n={} KS {ks_pooled:.4} (< 0.07); single 2^17-bit theta n={} KS {ks_single:.4} (< 0.05); {checked} betas match modular inverse (max gap {worst:.1e})",
            pooled.len(),
            single.len()
        ),
    ))
}

// ------------------------------------------------------------- criterion 9

fn criterion_9() -> Outcome {
    let radius = 10.0;
    let ensemble: Vec<u64> = (1001..=1200).collect();
    let o = birkhoff_experiment(14.0, radius, 1, &ensemble, 6.0).map_err(|e| e.to_string())?;
    let stability = (o.full - o.half).abs() / o.full;
    let identity = (o.ensemble - o.full).abs() / o.full;
    let siegel = (2.0 * radius).powi(2) * 6.0 / (PI * PI);
    Ok((
        stability < 0.05 && identity < 0.10,
        format!(
            "avg(14) {:.2}, avg(7) {:.2}, stability {stability:.4} (< 0.05); ensemble {:.2}, identity {identity:.4} (< 0.10); vol(W)/zeta(2) {siegel:.2}",
            o.full, o.half, o.ensemble
        ),
    ))
}

// ------------------------------------------------------------ criterion 10

fn criterion_10() -> Outcome {
    let setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45)
        .and_then(|s| s.with_moduli(vec![2]))
        .map_err(|e| e.to_string())?;
    let pairs = cf_pairs(&setup, 1 << 17, 0).map_err(|e| e.to_string())?;
    let visits: Vec<Visit> = pairs.iter().map(|a| Visit::from_cf(a, &[2])).collect();
    let constraint: Constraint = "residue=2:*,1".parse().map_err(|e: eapprox::Error| e.to_string())?;
    let series = build_return_series(visits, &setup, &constraint).map_err(|e| e.to_string())?;

    let mut odd: Vec<_> = pairs.iter().filter(|a| a.residues[0].1 == 1).collect();
    odd.sort_by(|a, b| b.log_abs_residual.total_cmp(&a.log_abs_residual));
    let mut ok = odd.len() >= 5000 && series.len() == odd.len();
    let mut parts = vec![format!("constrained n={} (>= 5000)", odd.len())];
    let mut worst = 0.0f64;
    for s in 0..=2 {
        let own: Vec<f64> = (0..odd.len() - s)
            .map(|l| odd[l].residual_sign as f64 * (odd[l + s].log_height + odd[l].log_abs_residual).exp())
            .collect();
        let lib = w_sequence(&series, s);
        let lib_w = lib.scalars();
        if lib_w.len() != own.len() {
            ok = false;
        }
        for (a, b) in own.iter().zip(&lib_w) {
            worst = worst.max((a - b).abs() / a.abs());
        }
        let half = own.len() / 2;
        let ks = ks_two(&own[..half], &own[half..]);
        ok &= ks < 0.05;
        parts.push(format!("s={s} halves KS {ks:.4}"));
        if s == 0 {
            let exact = lib.indices.iter().zip(&lib.values).all(|(&i, v)| v[0].abs() == series.visits[i].error);
            ok &= exact;
            parts.push(format!("|w| = error exactly: {exact}"));
        }
    }
    ok &= worst < 1e-9;
    parts.push(format!("w agrees with direct evaluation to {worst:.1e}"));
    Ok((ok, parts.join(", ")))
}

// -------------------------------------------------------------------- main

struct Line {
    id: u32,
    title: &'static str,
    gating: bool,
    limit: Option<f64>,
}

fn report(line: &Line, outcome: Outcome, secs: f64) -> bool {
    let (pass, detail) = match outcome {
        Ok((pass, detail)) => (pass, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = line.limit.is_none_or(|l| secs < l);
    let pass = pass && in_time;
    let limit = line.limit.map_or(String::new(), |l| format!(" (limit {l:.0} s)"));
    println!(
        "{} criterion {}: {}: {detail}; {secs:.1} s{limit}",
        if pass { "PASS" } else { "FAIL" },
        line.id,
        line.title
    );
    pass || !line.gating
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |id: u32| wanted.is_empty() || wanted.contains(&id);
    let mut gating_ok = true;
    let lines = [
        Line { id: 1, title: "constants", gating: true, limit: Some(10.0) },
        Line { id: 2, title: "enumerator oracle equality", gating: true, limit: Some(120.0) },
        Line { id: 3, title: "counting law", gating: false, limit: Some(300.0) },
        Line { id: 4, title: "coprime fraction", gating: false, limit: Some(600.0) },
        Line { id: 5, title: "multiplicative count", gating: false, limit: Some(300.0) },
        Line { id: 6, title: "cross-section correspondence", gating: true, limit: None },
        Line { id: 7, title: "packet equidistribution", gating: false, limit: Some(900.0) },
        Line { id: 8, title: "shape marginal", gating: false, limit: None },
        Line { id: 9, title: "Birkhoff averages", gating: false, limit: Some(600.0) },
        Line { id: 10, title: "return-time sequences", gating: false, limit: None },
    ];
    let mut d2: Option<(Result<Vec<ApproximateStream>, String>, f64)> = None;
    for line in &lines {
        if !run(line.id) {
            continue;
        }
        let (outcome, secs) = match line.id {
            1 => timed(criterion_1),
            2 => timed(criterion_2),
            3 | 4 => {
                let (streams, shared) = d2.get_or_insert_with(|| timed(|| run_streams(&Decomposition::scalar(), 18.0, Mode::EpsilonStar, 20)));
                let shared = *shared;
                match streams {
                    Err(e) => (Err(e.clone()), shared),
                    Ok(st) if line.id == 3 => {
                        let (o, s) = timed(|| criterion_3(st));
                        (o, s + shared)
                    }
                    Ok(st) => {
                        let (o, s) = timed(|| criterion_4(st));
                        (o, s + shared)
                    }
                }
            }
            5 => timed(criterion_5),
            6 => timed(criterion_6),
            7 => timed(criterion_7),
            8 => timed(criterion_8),
            9 => timed(criterion_9),
            _ => timed(criterion_10),
        };
        gating_ok &= report(line, outcome, secs);
    }
    if gating_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
