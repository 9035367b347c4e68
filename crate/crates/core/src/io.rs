//! CSV tables and versioned JSON documents.

use serde::Serialize;
use std::fmt::Write as _;

use crate::enumerate::ApproximateStream;
use crate::error::Result;
use crate::flow::VisitRecord;
use crate::packet::Packet;
use crate::returns::{w_sequence, ReturnSeries};
use crate::types::{Decomposition, Setup};

/// A JSON document carrying its schema tag, the config hash and the seed.
#[derive(Clone, Debug, Serialize)]
pub struct Document<T: Serialize> {
    pub schema: &'static str,
    pub config_hash: String,
    pub seed: u64,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Document<T> {
    pub fn new(schema: &'static str, config_hash: impl Into<String>, seed: u64, body: T) -> Self {
        Document {
            schema,
            config_hash: config_hash.into(),
            seed,
            body,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let row: Vec<String> = cells.into_iter().collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

/// `p_1..p_m, q_1..q_n, error, height`, one row per member.
pub fn stream_csv(stream: &ApproximateStream, dec: &Decomposition) -> String {
    let mut out = String::new();
    push_row(
        &mut out,
        numbered("p", dec.m())
            .chain(numbered("q", dec.n()))
            .chain(["error".to_string(), "height".to_string()]),
    );
    for m in &stream.members {
        push_row(
            &mut out,
            m.approx
                .coords()
                .iter()
                .map(i64::to_string)
                .chain([m.error.to_string(), m.approx.height.to_string()]),
        );
    }
    out
}

/// Header of [`packets_csv`].
pub fn packet_header(setup: &Setup) -> Vec<String> {
    let d = setup.dec.d();
    let mut h: Vec<String> = ["member".to_string(), "error".to_string()]
        .into_iter()
        .chain(numbered("proj", d))
        .collect();
    for n in &setup.params.congruence_moduli {
        h.extend(numbered(&format!("res{n}"), d));
    }
    if d == 2 {
        h.push("beta".into());
    } else {
        h.extend(numbered("shape", d * d));
    }
    h
}

/// Error, flattened directions, residues per modulus, then `beta` (`d = 2`)
/// or the row-major shape basis.
pub fn packets_csv(packets: &[(usize, Packet)], setup: &Setup) -> String {
    let mut out = String::new();
    push_row(&mut out, packet_header(setup));
    for (idx, p) in packets {
        let mut row = vec![idx.to_string(), p.error.to_string()];
        row.extend(p.proj_flat().iter().map(f64::to_string));
        for n in &setup.params.congruence_moduli {
            row.extend(p.residues[n].iter().map(u64::to_string));
        }
        match p.torus {
            Some(t) if setup.dec.d() == 2 => row.push(t.beta.to_string()),
            _ => row.extend(p.shape_basis.iter().map(f64::to_string)),
        }
        push_row(&mut out, row);
    }
    out
}

/// Flow-time components, `p`, `q` and the membership verdict.
pub fn visits_csv(records: &[VisitRecord], dec: &Decomposition) -> String {
    let mut out = String::new();
    push_row(
        &mut out,
        numbered("s", dec.k())
            .chain(numbered("t", dec.r() - 1))
            .chain(numbered("p", dec.m()))
            .chain(numbered("q", dec.n()))
            .chain(["verified".to_string()]),
    );
    for r in records {
        push_row(
            &mut out,
            r.time
                .components()
                .iter()
                .map(f64::to_string)
                .chain(r.source.coords().iter().map(i64::to_string))
                .chain([r.verified.to_string()]),
        );
    }
    out
}

/// One row per visit: index, time, gap to the next visit, mask, error and
/// the components of `w_l` at shift `s` (blank where undefined).
pub fn series_csv(series: &ReturnSeries, s: usize) -> String {
    let m = series.visits.first().map_or(1, |v| v.direction.len());
    let seq = w_sequence(series, s);
    let mut w: Vec<Option<&Vec<f64>>> = vec![None; series.visits.len()];
    for (i, v) in seq.indices.iter().zip(&seq.values) {
        w[*i] = Some(v);
    }
    let mut out = String::new();
    push_row(
        &mut out,
        ["l", "t", "tau", "mask", "error"]
            .into_iter()
            .map(String::from)
            .chain(numbered("w", m)),
    );
    for (l, v) in series.visits.iter().enumerate() {
        let tau = series
            .visits
            .get(l + 1)
            .map_or(String::new(), |next| (next.time - v.time).to_string());
        let mut row = vec![
            l.to_string(),
            v.time.to_string(),
            tau,
            series.mask[l].to_string(),
            v.error.to_string(),
        ];
        match w[l] {
            Some(vals) => row.extend(vals.iter().map(f64::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), m)),
        }
        push_row(&mut out, row);
    }
    out
}

/// `x,y,series` rows for external plotting.
pub fn plot_csv(points: &[(String, f64, f64)]) -> String {
    let mut out = String::from("x,y,series\n");
    for (name, x, y) in points {
        let _ = writeln!(out, "{x},{y},{name}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_direct, EnumConfig, Mode};
    use crate::packet::stream_packets;
    use crate::types::Target;

    #[test]
    fn golden_csv() {
        let target = Target::from_f64(1, 1, &[0.61803398875]).unwrap();
        let setup = Setup::simple(Decomposition::scalar(), 0.5, 0.4).unwrap();
        let stream = enumerate_direct(&target, &setup, &EnumConfig::new(4.0, Mode::Epsilon)).unwrap();
        let csv = stream_csv(&stream, &setup.dec);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("p_1,q_1,error,height"));
        assert_eq!(lines.count(), stream.len());
        assert_eq!(csv, stream_csv(&stream, &setup.dec));
    }

    #[test]
    fn empty_packets_are_header_only() {
        let setup = Setup::simple(Decomposition::scalar(), 0.5, 0.4).unwrap().with_moduli(vec![3]).unwrap();
        let target = Target::from_f64(1, 1, &[0.3]).unwrap();
        let (packets, _) = stream_packets(&target, &[], &setup).unwrap();
        assert_eq!(packets_csv(&packets, &setup), "member,error,proj_1,proj_2,res3_1,res3_2,beta\n");
    }

    #[test]
    fn document_flattens_body() {
        #[derive(Serialize)]
        struct Body {
            value: u32,
        }
        let doc = Document::new("report-v1", "abc", 4, Body { value: 2 });
        let v: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
        assert_eq!(v["schema"], "report-v1");
        assert_eq!(v["seed"], 4);
        assert_eq!(v["value"], 2);
    }
}
