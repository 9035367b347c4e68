//! Verification suites. Each measures one family of predictions on seeded
//! random targets and turns the measurement into fixed-threshold reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::cf::{cf_approximates_checked, enumerate_cf, CfApproximate};
use crate::config::RunConfig;
use crate::enumerate::{check_approximate, enumerate_direct, order_stream, ApproximateStream, EnumConfig, Mode, StreamOrdering};
use crate::error::{Error, Result};
use crate::flow::{birkhoff_average, correspondence, default_grid_step, ensemble_mean, pairs_in_section, visit_times, FlowTime};
use crate::measure::{c_constant, in_jt, jt_bounding_box, jt_volume, predicted_count, primitive_classes, primitive_count_mod, siegel_primitive_mean, zeta};
use crate::norms::gcd_all;
use crate::packet::{stream_packets, torus_beta_convergent};
use crate::returns::{build_return_series, empirical_stability, w_sequence, Constraint, Visit};
use crate::stats::{chi_square_critical, chi_square_uniform, fit_power_law, ks_statistic, PowerFit, TestReport};
use crate::types::{Decomposition, Precision, Setup, Target};

/// Suite names accepted by [`run_suite`].
pub const SUITES: &[&str] = &[
    "constants",
    "oracle",
    "counting",
    "coprime",
    "multiplicative",
    "cross-section",
    "equidistribution",
    "shape",
    "birkhoff",
    "returns",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub experiment: String,
    pub reports: Vec<TestReport>,
}

impl Suite {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }
}

/// Seeds `base + 1 ..= base + count`.
pub fn seed_range(base: u64, count: usize) -> Vec<u64> {
    (1..=count as u64).map(|i| base + i).collect()
}

fn dec(m: &[usize], n: &[usize]) -> Decomposition {
    Decomposition::new(m.to_vec(), n.to_vec()).expect("static decomposition")
}

/// Largest `T` a big-rational target of `bits` bits supports on the
/// continued-fraction path.
pub fn cf_horizon(bits: u32) -> f64 {
    Precision::cf_envelope(bits as u64) * (1.0 - 1e-9)
}

// ---------------------------------------------------------------- constants

/// The alternating sum over `x in {0,1}^r` written out term by term.
pub fn c_constant_subset_sum(n_parts: &[usize], k: usize) -> i128 {
    let r = n_parts.len();
    let deg = (k + r - 1) as u32;
    (0u32..1 << r)
        .map(|mask| {
            let sum: i128 = (0..r).filter(|j| mask >> j & 1 == 1).map(|j| n_parts[j] as i128).sum();
            let sign = if (r as u32 - mask.count_ones()).is_multiple_of(2) { 1 } else { -1 };
            sign * sum.pow(deg)
        })
        .sum()
}

/// Residue vectors mod `t` of length `d` sharing no factor with `t`, counted
/// one by one.
pub fn primitive_count_brute(t: u64, d: u32) -> u128 {
    let total = t.pow(d);
    (0..total)
        .filter(|&idx| {
            let mut x = idx;
            let mut g = t;
            for _ in 0..d {
                g = num_integer::gcd(g, x % t);
                x /= t;
            }
            g == 1
        })
        .count() as u128
}

/// Uniform sampling of the bounding box.
pub fn jt_volume_monte_carlo(t: f64, dec: &Decomposition, samples: usize, seed: u64) -> f64 {
    let bbox = jt_bounding_box(t, dec);
    let box_vol: f64 = bbox.iter().map(|(lo, hi)| hi - lo).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; bbox.len()];
    let mut hits = 0usize;
    for _ in 0..samples {
        for (xi, (lo, hi)) in x.iter_mut().zip(&bbox) {
            *xi = lo + (hi - lo) * rng.gen::<f64>();
        }
        hits += in_jt(&x, t, dec) as usize;
    }
    box_vol * hits as f64 / samples as f64
}

pub fn constants_suite(samples: usize, seed: u64) -> Vec<TestReport> {
    let mut reports = Vec::new();
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for k in 1..=4 {
        for r in 1..=3u32 {
            for code in 0..4usize.pow(r) {
                let n: Vec<usize> = (0..r).map(|j| code / 4usize.pow(j) % 4 + 1).collect();
                cases += 1;
                if c_constant(&n, k) != c_constant_subset_sum(&n, k) {
                    mismatches.push(format!("k={k} n={n:?}"));
                }
            }
        }
    }
    let mut r = TestReport::exact("c_constant", mismatches.is_empty(), cases, "alternating subset sum");
    if !mismatches.is_empty() {
        r = r.with_note(mismatches.join("; "));
    }
    reports.push(r);

    let mut cases = 0;
    let mut ok = true;
    for t in 1..=30u64 {
        for d in 1..=4u32 {
            cases += 1;
            ok &= primitive_count_mod(t, d) == primitive_count_brute(t, d);
        }
    }
    reports.push(TestReport::exact("primitive_residue_count", ok, cases, "brute-force count, t <= 30, d <= 4"));

    let decs = [
        dec(&[1], &[1]),
        dec(&[1, 1], &[1]),
        dec(&[2], &[1, 1]),
        dec(&[1, 1], &[1, 2]),
        dec(&[1, 2, 1], &[2]),
        dec(&[1], &[1, 1, 1]),
    ];
    let worst = decs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let exact = jt_volume(3.0, d);
            (jt_volume_monte_carlo(3.0, d, samples, seed + i as u64) - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    reports.push(
        TestReport::new("jt_volume", worst, 0.01, samples * decs.len(), "Monte Carlo volume, relative error")
            .with_seeds(vec![seed]),
    );

    let pi = std::f64::consts::PI;
    let z = ((zeta(2) - pi * pi / 6.0) / (pi * pi / 6.0))
        .abs()
        .max(((zeta(4) - pi.powi(4) / 90.0) / (pi.powi(4) / 90.0)).abs());
    reports.push(TestReport::new("zeta", z, 1e-12, 2, "pi^2/6 and pi^4/90, relative error"));
    reports
}

// ------------------------------------------------------------------- oracle

/// Every qualifying `(p, q)` with `||q|| <= e^T`, found by testing all
/// integer points of a window around `-theta q` for every `q` in the box.
pub fn naive_enumerate(target: &Target, setup: &Setup, t: f64, mode: Mode, divisor: u64) -> Result<Vec<Vec<i64>>> {
    let dec = &setup.dec;
    let (m, n) = (dec.m(), dec.n());
    let h = t.exp();
    let qmax = h.floor() as i64;
    let reach = setup.params.etas.iter().fold(0.0f64, |a, &b| a.max(b)).ceil() as i64 + 1;
    let theta = target.entries_f64();
    let mut out = Vec::new();
    let mut q = vec![-qmax; n];
    loop {
        let centers: Vec<i64> = (0..m)
            .map(|i| {
                let v: f64 = (0..n).map(|j| theta[i * n + j] * q[j] as f64).sum();
                (-v).round() as i64
            })
            .collect();
        let mut off = vec![-reach; m];
        loop {
            let p: Vec<i64> = centers.iter().zip(&off).map(|(c, o)| c + o).collect();
            let c = check_approximate(target, &p, &q, setup, mode)?;
            let coords: Vec<i64> = p.iter().chain(&q).copied().collect();
            let height = crate::norms::int_block_norms(&q, dec.n_parts(), &setup.norms.kinds()[dec.k()..])
                .into_iter()
                .fold(0.0f64, f64::max);
            if c.qualifies && height <= h && gcd_all(&coords).is_multiple_of(divisor) {
                out.push(coords);
            }
            if !odometer(&mut off, -reach, reach) {
                break;
            }
        }
        if !odometer(&mut q, -qmax, qmax) {
            break;
        }
    }
    out.sort();
    Ok(out)
}

fn odometer(v: &mut [i64], lo: i64, hi: i64) -> bool {
    for x in v.iter_mut().rev() {
        if *x < hi {
            *x += 1;
            return true;
        }
        *x = lo;
    }
    false
}

/// All qualifying coordinates of a stream, degenerate ones included.
pub fn stream_coords(stream: &ApproximateStream) -> Vec<Vec<i64>> {
    let mut v: Vec<Vec<i64>> = stream
        .members
        .iter()
        .chain(&stream.degenerate)
        .map(|m| m.approx.coords())
        .collect();
    v.sort();
    v
}

#[derive(Clone, Debug)]
pub struct OracleCase {
    pub dec: Decomposition,
    pub t: f64,
}

pub fn oracle_suite(seeds: &[u64], cases: &[OracleCase], cf_t: f64) -> Result<Vec<TestReport>> {
    let mut reports = Vec::new();
    for case in cases {
        let setup = Setup::simple(case.dec.clone(), 0.5, 0.4)?;
        let mut ok = true;
        let mut total = 0;
        for &seed in seeds {
            let target = Target::random(case.dec.m(), case.dec.n(), Precision::Standard, seed);
            for (mode, s) in [(Mode::Epsilon, 1), (Mode::EpsilonStar, 1), (Mode::EpsilonStar, 2)] {
                let cfg = EnumConfig::new(case.t, mode).with_divisor(s);
                let fast = stream_coords(&enumerate_direct(&target, &setup, &cfg)?);
                let slow = naive_enumerate(&target, &setup, case.t, mode, s)?;
                total += slow.len();
                ok &= fast == slow;
            }
        }
        reports.push(
            TestReport::exact(
                format!("direct_vs_brute_force m={:?} n={:?} T={}", case.dec.m_parts(), case.dec.n_parts(), case.t),
                ok,
                total,
                "identical qualifying sets",
            )
            .with_seeds(seeds.to_vec()),
        );
    }
    let setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45)?;
    let mut ok = true;
    let mut total = 0;
    for &seed in seeds {
        let target = Target::random(1, 1, Precision::Rational { bits: 512 }, seed);
        for mode in [Mode::Epsilon, Mode::EpsilonStar] {
            let cfg = EnumConfig::new(cf_t, mode);
            let a = stream_coords(&enumerate_cf(&target, &setup, &cfg)?);
            let b = stream_coords(&enumerate_direct(&target, &setup, &cfg)?);
            total += a.len();
            ok &= a == b;
        }
    }
    reports.push(
        TestReport::exact(format!("cf_vs_direct T={cf_t}"), ok, total, "identical qualifying sets")
            .with_seeds(seeds.to_vec()),
    );
    Ok(reports)
}

// ----------------------------------------------------------------- counting

/// One direct enumeration per seed.
pub fn streams(dec: &Decomposition, eps: f64, eta: f64, t: f64, mode: Mode, seeds: &[u64]) -> Result<Vec<ApproximateStream>> {
    let setup = Setup::simple(dec.clone(), eps, eta)?;
    seeds
        .iter()
        .map(|&seed| {
            let target = Target::random(dec.m(), dec.n(), Precision::Standard, seed);
            enumerate_direct(&target, &setup, &EnumConfig::new(t, mode))
        })
        .collect()
}

/// Mean number of members with height at most `e^T` and `s | gcd`.
pub fn mean_counts(streams: &[ApproximateStream], t_list: &[f64], s: u64) -> Vec<f64> {
    t_list
        .iter()
        .map(|&t| {
            let h = t.exp();
            let total: usize = streams
                .iter()
                .map(|st| {
                    st.members
                        .iter()
                        .filter(|m| m.approx.height <= h && gcd_all(&m.approx.coords()).is_multiple_of(s))
                        .count()
                })
                .sum();
            total as f64 / streams.len() as f64
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountCurve {
    pub s: u64,
    pub t_list: Vec<f64>,
    pub mean_counts: Vec<f64>,
    pub fit: PowerFit,
    pub predicted: f64,
}

pub fn count_curve(streams: &[ApproximateStream], setup: &Setup, t_list: &[f64], s: u64) -> Result<CountCurve> {
    let counts = mean_counts(streams, t_list, s);
    let pred = predicted_count(setup, Mode::EpsilonStar, s)?;
    let points: Vec<(f64, f64)> = t_list.iter().copied().zip(counts.iter().copied()).collect();
    Ok(CountCurve {
        s,
        t_list: t_list.to_vec(),
        mean_counts: counts,
        fit: fit_power_law(&points, pred.exponent as f64)?,
        predicted: pred.leading_constant,
    })
}

pub fn counting_reports(curves: &[CountCurve], tolerance: f64, seeds: &[u64]) -> Vec<TestReport> {
    curves
        .iter()
        .map(|c| {
            TestReport::new(
                format!("counting s={}", c.s),
                (c.fit.coefficient - c.predicted).abs() / c.predicted,
                tolerance,
                seeds.len(),
                format!("fitted coefficient vs {:.6}", c.predicted),
            )
            .with_seeds(seeds.to_vec())
            .with_note(format!(
                "coefficient {:.6}, residual {:.4}, counts {:?}",
                c.fit.coefficient, c.fit.relative_residual, c.mean_counts
            ))
        })
        .collect()
}

/// Share of primitive members among those with height at most `e^T`.
pub fn primitive_fraction(streams: &[ApproximateStream], t: f64) -> (f64, usize) {
    let h = t.exp();
    let (mut prim, mut all) = (0usize, 0usize);
    for m in streams.iter().flat_map(|s| &s.members) {
        if m.approx.height <= h {
            all += 1;
            prim += m.approx.primitive as usize;
        }
    }
    (prim as f64 / all.max(1) as f64, all)
}

pub fn coprime_report(streams: &[ApproximateStream], t: f64, d: usize, tolerance: f64, seeds: &[u64]) -> TestReport {
    let (frac, n) = primitive_fraction(streams, t);
    let target = 1.0 / zeta(d as u32);
    TestReport::new(
        format!("coprime_fraction d={d} T={t}"),
        (frac - target).abs(),
        tolerance,
        n,
        format!("1/zeta({d}) = {target:.4}"),
    )
    .with_seeds(seeds.to_vec())
    .with_note(format!("fraction {frac:.4}"))
}

pub fn multiplicative_report(streams: &[ApproximateStream], setup: &Setup, t: f64, tolerance: f64, seeds: &[u64]) -> Result<TestReport> {
    let mean = mean_counts(streams, &[t], 1)[0];
    let pred = predicted_count(setup, Mode::Epsilon, 1)?.at(t);
    Ok(TestReport::new(
        format!("multiplicative_count T={t}"),
        (mean - pred).abs() / pred,
        tolerance,
        seeds.len(),
        format!("predicted {pred:.3}"),
    )
    .with_seeds(seeds.to_vec())
    .with_note(format!("mean count {mean:.3}")))
}

// ------------------------------------------------------------ cross-section

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionOutcome {
    pub seed: u64,
    pub members: usize,
    pub exact: bool,
    /// verified records whose flowed lattice holds exactly one pair in `L_eps`
    pub contained: usize,
    pub verified: usize,
    pub max_residual: f64,
}

pub fn cross_section_case(dec: &Decomposition, eps: f64, eta: f64, t: f64, seed: u64) -> Result<SectionOutcome> {
    let setup = Setup::simple(dec.clone(), eps, eta)?;
    let target = Target::random(dec.m(), dec.n(), Precision::Standard, seed);
    let stream = enumerate_direct(&target, &setup, &EnumConfig::new(t, Mode::Epsilon))?;
    let records = visit_times(&stream.members, &setup)?;
    let c = correspondence(&records, &setup, t);
    let mut contained = 0;
    for r in records.iter().filter(|r| r.verified) {
        contained += (pairs_in_section(&target, &r.time, &setup)? == 1) as usize;
    }
    Ok(SectionOutcome {
        seed,
        members: c.members,
        exact: c.is_exact(),
        contained,
        verified: c.verified,
        max_residual: c.max_residual,
    })
}

pub fn cross_section_suite(decs: &[Decomposition], seeds: &[u64], t: f64) -> Result<Vec<TestReport>> {
    let mut reports = Vec::new();
    for d in decs {
        let outcomes: Vec<SectionOutcome> = seeds
            .iter()
            .map(|&s| cross_section_case(d, 0.5, 0.4, t, s))
            .collect::<Result<_>>()?;
        let ok = outcomes.iter().all(|o| o.exact && o.contained == o.verified);
        let members = outcomes.iter().map(|o| o.members).sum();
        let worst = outcomes.iter().map(|o| o.max_residual).fold(0.0, f64::max);
        reports.push(
            TestReport::exact(
                format!("cross_section m={:?} n={:?} T={t}", d.m_parts(), d.n_parts()),
                ok,
                members,
                "two-to-one onto +- pairs, no collisions, one pair per section",
            )
            .with_seeds(seeds.to_vec())
            .with_note(format!("max membership residual {worst:e}")),
        );
    }
    Ok(reports)
}

// --------------------------------------------------------- equidistribution

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketSample {
    pub errors: Vec<f64>,
    /// sign pattern of the first coordinate of every `p`-block, as a bitmask
    pub sign_classes: Vec<usize>,
    pub residues: BTreeMap<u64, Vec<Vec<u64>>>,
    pub betas: Vec<f64>,
}

/// Packets of the `j`-positive representatives, pooled over seeds.
pub fn packet_sample(setup: &Setup, t: f64, seeds: &[u64]) -> Result<PacketSample> {
    let dec = &setup.dec;
    let k = dec.k();
    let mut out = PacketSample::default();
    for &seed in seeds {
        let target = Target::random(dec.m(), dec.n(), Precision::Standard, seed);
        let stream = enumerate_direct(&target, setup, &EnumConfig::new(t, Mode::Epsilon))?;
        let stream = order_stream(stream, StreamOrdering::DecreasingErrorBlock, setup.params.shape_index, k);
        let (packets, _) = stream_packets(&target, &stream.members, setup)?;
        for (_, p) in packets {
            out.errors.push(p.error);
            out.sign_classes.push(
                p.proj[..k]
                    .iter()
                    .enumerate()
                    .map(|(i, b)| ((b[0] < 0.0) as usize) << i)
                    .sum(),
            );
            for (n, r) in p.residues {
                out.residues.entry(n).or_default().push(r);
            }
            if let Some(b) = p.torus {
                out.betas.push(b.beta);
            }
        }
    }
    Ok(out)
}

fn class_counts(values: &[Vec<u64>], classes: &[Vec<u64>]) -> Vec<u64> {
    let index: BTreeMap<&Vec<u64>, usize> = classes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut counts = vec![0u64; classes.len()];
    for v in values {
        if let Some(&i) = index.get(v) {
            counts[i] += 1;
        }
    }
    counts
}

pub fn chi_square_report(name: &str, counts: &[u64], alpha: f64) -> Result<TestReport> {
    let (stat, dof) = chi_square_uniform(counts)?;
    Ok(TestReport::new(
        name,
        stat,
        chi_square_critical(dof, alpha),
        counts.iter().sum::<u64>() as usize,
        format!("uniform over {} classes, {}% level", counts.len(), 100.0 * (1.0 - alpha)),
    ))
}

pub fn equidistribution_reports(sample: &PacketSample, setup: &Setup, min_packets: usize, ks_threshold: f64, alpha: f64, seeds: &[u64]) -> Result<Vec<TestReport>> {
    let n = sample.errors.len();
    let eps = setup.params.epsilon;
    let mut reports = vec![TestReport::exact(
        format!("packet_count >= {min_packets}"),
        n >= min_packets,
        n,
        "sample size",
    )];
    reports.push(TestReport::new(
        "error_ks",
        ks_statistic(&sample.errors, |x| (x / eps).clamp(0.0, 1.0))?,
        ks_threshold,
        n,
        format!("uniform(0, {eps})"),
    ));
    let k = setup.dec.k();
    let mut signs = vec![0u64; 1 << k];
    for &c in &sample.sign_classes {
        signs[c] += 1;
    }
    reports.push(chi_square_report("proj_signs", &signs, alpha)?);
    for (modulus, values) in &sample.residues {
        let classes = primitive_classes(*modulus, setup.dec.d());
        reports.push(chi_square_report(
            &format!("residues mod {modulus}"),
            &class_counts(values, &classes),
            alpha,
        )?);
    }
    Ok(reports.into_iter().map(|r| r.with_seeds(seeds.to_vec())).collect())
}

// -------------------------------------------------------------------- shape

/// Qualifying continued-fraction pairs of a seeded `bits`-bit rational at the
/// largest supported `T`.
pub fn cf_pairs(setup: &Setup, bits: u32, seed: u64) -> Result<Vec<CfApproximate>> {
    let target = Target::random(1, 1, Precision::Rational { bits }, seed);
    cf_approximates_checked(&target, setup, cf_horizon(bits), Mode::Epsilon, 1)
}

pub fn cf_betas(pairs: &[CfApproximate]) -> Vec<f64> {
    pairs
        .iter()
        .map(|a| torus_beta_convergent(a.index, a.prev_ratio).beta)
        .collect()
}

pub fn beta_report(name: &str, betas: &[f64], min_count: usize, threshold: f64, seeds: &[u64]) -> Result<Vec<TestReport>> {
    Ok(vec![
        TestReport::exact(format!("{name} count >= {min_count}"), betas.len() >= min_count, betas.len(), "sample size"),
        TestReport::new(format!("{name} ks"), ks_statistic(betas, |x| x.clamp(0.0, 1.0))?, threshold, betas.len(), "uniform[0, 1)")
            .with_seeds(seeds.to_vec()),
    ])
}

// ----------------------------------------------------------------- birkhoff

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffOutcome {
    pub full: f64,
    pub half: f64,
    pub ensemble: f64,
    pub siegel: f64,
}

/// The box `[-radius, radius]^d`.
pub fn centred_box(radius: f64, d: usize) -> Vec<(f64, f64)> {
    vec![(-radius, radius); d]
}

pub fn birkhoff_experiment(t: f64, radius: f64, seed: u64, ensemble: &[u64], flow_time: f64) -> Result<BirkhoffOutcome> {
    let dec = Decomposition::scalar();
    let w = centred_box(radius, 2);
    let target = Target::random(1, 1, Precision::Standard, seed);
    let full = birkhoff_average(&target, &w, &dec, t, default_grid_step(t, &dec, 1000), seed)?;
    let half = birkhoff_average(&target, &w, &dec, t / 2.0, default_grid_step(t / 2.0, &dec, 1000), seed)?;
    let targets: Vec<Target> = ensemble
        .iter()
        .map(|&s| Target::random(1, 1, Precision::Standard, s))
        .collect();
    let time = FlowTime::new(vec![flow_time], vec![], &dec)?;
    Ok(BirkhoffOutcome {
        full: full.average,
        half: half.average,
        ensemble: ensemble_mean(&targets, &w, &dec, &time)?,
        siegel: siegel_primitive_mean((2.0 * radius).powi(2), 2),
    })
}

pub fn birkhoff_reports(o: &BirkhoffOutcome, stability: f64, identity: f64, seed: u64, ensemble: &[u64]) -> Vec<TestReport> {
    vec![
        TestReport::new("birkhoff_stability", (o.full - o.half).abs() / o.full, stability, 1, "|avg(T) - avg(T/2)| / avg(T)")
            .with_seeds(vec![seed])
            .with_note(format!("avg(T) {:.4}, avg(T/2) {:.4}, Siegel mean {:.4}", o.full, o.half, o.siegel)),
        TestReport::new("ensemble_identity", (o.ensemble - o.full).abs() / o.full, identity, ensemble.len(), "ensemble mean vs avg(T)")
            .with_seeds(ensemble.to_vec())
            .with_note(format!("ensemble {:.4}, Siegel mean {:.4}", o.ensemble, o.siegel)),
    ]
}

// ------------------------------------------------------------------ returns

pub fn returns_reports(pairs: &[CfApproximate], setup: &Setup, constraint: &Constraint, min_count: usize, threshold: f64, seed: u64) -> Result<Vec<TestReport>> {
    let visits: Vec<Visit> = pairs
        .iter()
        .map(|a| Visit::from_cf(a, &setup.params.congruence_moduli))
        .collect();
    let series = build_return_series(visits, setup, constraint)?;
    let mut reports = vec![TestReport::exact(
        format!("constrained_count >= {min_count}"),
        series.len() >= min_count,
        series.len(),
        "sample size",
    )
    .with_note(format!("{} ties", series.ties.len()))];
    for s in 0..=2 {
        let w = w_sequence(&series, s);
        reports.push(
            TestReport::new(format!("stability s={s}"), empirical_stability(&w.scalars())?, threshold, w.values.len(), "KS between halves")
                .with_seeds(vec![seed]),
        );
        if s == 0 {
            let ok = w
                .indices
                .iter()
                .zip(&w.values)
                .all(|(&i, v)| v[0].abs() == series.visits[i].error);
            reports.push(TestReport::exact("shift_zero_identity", ok, w.values.len(), "|w_l| = error_l"));
        }
    }
    Ok(reports)
}

// ------------------------------------------------------------------ driver

fn tagged(cfg: &RunConfig) -> Result<(u64, usize)> {
    Ok((cfg.seed()?, cfg.parsed_or("theta_seeds", 0)?))
}

fn or_count(count: usize, default: usize) -> usize {
    if count == 0 {
        default
    } else {
        count
    }
}

/// Runs a suite, reading overrides (`theta_seeds`, `T`, `T_list`, `W`, ...)
/// from `cfg`. Defaults are the acceptance settings.
pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Suite> {
    let (base, count) = tagged(cfg)?;
    let reports = match name {
        "constants" => constants_suite(1_000_000, base),
        "oracle" => {
            let seeds = seed_range(base, or_count(count, 10));
            let cases = vec![
                OracleCase { dec: dec(&[1], &[1]), t: cfg.parsed_or("T", 12.0)? },
                OracleCase { dec: dec(&[1, 1], &[1]), t: 8.0 },
                OracleCase { dec: dec(&[1], &[2]), t: 5.0 },
            ];
            oracle_suite(&seeds, &cases, 16.0)?
        }
        "counting" | "coprime" => {
            let seeds = seed_range(base, or_count(count, 20));
            let t_list = cfg.list("T_list")?.unwrap_or_else(|| vec![10.0, 12.0, 14.0, 16.0, 18.0]);
            let t_max = t_list.iter().fold(0.0f64, |a, &b| a.max(b));
            let d2 = Decomposition::scalar();
            let setup = Setup::simple(d2.clone(), 0.5, 0.4)?;
            let st = streams(&d2, 0.5, 0.4, t_max, Mode::EpsilonStar, &seeds)?;
            if name == "counting" {
                let curves = [1, 2]
                    .iter()
                    .map(|&s| count_curve(&st, &setup, &t_list, s))
                    .collect::<Result<Vec<_>>>()?;
                counting_reports(&curves, cfg.parsed_or("tolerance", 0.15)?, &seeds)
            } else {
                let d3 = dec(&[1, 1], &[1]);
                let t3 = cfg.parsed_or("T", 14.0)?;
                let st3 = streams(&d3, 0.5, 0.4, t3, Mode::EpsilonStar, &seeds)?;
                vec![
                    coprime_report(&st, t_max, 2, 0.03, &seeds),
                    coprime_report(&st3, t3, 3, 0.04, &seeds),
                ]
            }
        }
        "multiplicative" => {
            let seeds = seed_range(base, or_count(count, 10));
            let d3 = dec(&[1, 1], &[1]);
            let t = cfg.parsed_or("T", 14.0)?;
            let setup = Setup::simple(d3.clone(), 0.5, 0.4)?;
            let st = streams(&d3, 0.5, 0.4, t, Mode::Epsilon, &seeds)?;
            vec![multiplicative_report(&st, &setup, t, cfg.parsed_or("tolerance", 0.2)?, &seeds)?]
        }
        "cross-section" => {
            let seeds = match cfg.parsed::<u64>("theta_seed")? {
                Some(s) => vec![s],
                None => seed_range(base, or_count(count, 10)),
            };
            cross_section_suite(&[Decomposition::scalar(), dec(&[1, 1], &[1])], &seeds, cfg.parsed_or("T", 12.0)?)?
        }
        "equidistribution" => {
            let seeds = seed_range(base, or_count(count, 50));
            let setup = Setup::simple(dec(&[1, 1], &[1]), 0.25, 0.7)?.with_moduli(vec![2, 3])?;
            let sample = packet_sample(&setup, cfg.parsed_or("T", 16.0)?, &seeds)?;
            equidistribution_reports(&sample, &setup, 3000, cfg.parsed_or("ks_threshold", 0.05)?, cfg.parsed_or("chi_alpha", 0.01)?, &seeds)?
        }
        "shape" => {
            let seeds = seed_range(base, or_count(count, 50));
            let setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45)?;
            let mut pooled = Vec::new();
            for &s in &seeds {
                pooled.extend(cf_betas(&cf_pairs(&setup, 512, s)?));
            }
            let mut reports = beta_report("beta_pooled", &pooled, 2000, 0.07, &seeds)?;
            let single = cf_betas(&cf_pairs(&setup, 1 << 17, base)?);
            reports.extend(beta_report("beta_single_theta", &single, 5000, 0.05, &[base])?);
            reports
        }
        "birkhoff" => {
            let t = cfg.parsed_or("T", 14.0)?;
            let radius = cfg.parsed_or("W", 10.0)?;
            let ensemble = seed_range(base + 1000, or_count(count, 200));
            let o = birkhoff_experiment(t, radius, base + 1, &ensemble, cfg.parsed_or("flow_time", 6.0)?)?;
            birkhoff_reports(&o, 0.05, 0.10, base + 1, &ensemble)
        }
        "returns" => {
            let setup = Setup::simple(Decomposition::scalar(), 0.45, 0.45)?.with_moduli(vec![2])?;
            let constraint: Constraint = cfg.get("constraint").unwrap_or("residue=2:*,1").parse()?;
            let pairs = cf_pairs(&setup, 1 << 17, base)?;
            returns_reports(&pairs, &setup, &constraint, 5000, cfg.parsed_or("ks_threshold", 0.05)?, base)?
        }
        other => return Err(Error::UnknownExperiment(other.to_string())),
    };
    Ok(Suite {
        experiment: name.to_string(),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_sum_examples() {
        assert_eq!(c_constant_subset_sum(&[1], 1), 1);
        assert_eq!(c_constant_subset_sum(&[1, 1], 1), 2);
        assert_eq!(c_constant_subset_sum(&[2, 3], 2), 125 - 8 - 27);
    }

    #[test]
    fn brute_counts() {
        assert_eq!(primitive_count_brute(2, 2), 3);
        assert_eq!(primitive_count_brute(6, 1), 2);
        assert_eq!(primitive_count_brute(1, 3), 1);
    }

    #[test]
    fn naive_matches_golden() {
        let target = Target::from_f64(1, 1, &[0.61803398875]).unwrap();
        let setup = Setup::simple(Decomposition::scalar(), 0.5, 0.4).unwrap();
        let v = naive_enumerate(&target, &setup, 4.0, Mode::Epsilon, 1).unwrap();
        assert_eq!(v.len(), 16);
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", &RunConfig::new()), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn constants_suite_passes() {
        assert!(constants_suite(200_000, 1).iter().all(|r| r.passed));
    }
}
