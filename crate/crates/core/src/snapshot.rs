//! Plain-text snapshots of fields, jets and spinors.
//!
//! Values are written with 17 significant digits (`{:.16e}`), so a round trip
//! is bit-exact. Points are in row-major order (last axis fastest) and all
//! components of one point are written together, in component order.
//!
//! ```text
//! EFIELD v1 kind=grid n=3 N=16 rank=sym-2-cov
//! EJET v1 K=4 lambda=3
//! ESPIN v1 kind=frame n=3 N=1 dim=2 structure=…
//! ```
//!
//! Frame charts add `structure=c,c,…` (the `c^k_ij`, row-major); grids with
//! non-default periods add `periods=L,L,…`.

use std::f64::consts::PI;
use std::str::SplitWhitespace;
use std::sync::Arc;

use num_complex::Complex64;

use crate::chart::{Chart, ChartKind};
use crate::clifford::spinor_dim;
use crate::error::{Error, Result};
use crate::field::{Field, Rank, ScalarField};
use crate::jets::JetSeries;
use crate::spinor::SpinorField;

fn number(x: f64) -> String {
    format!("{x:.16e}")
}

/// `kind=… n=… N=…` followed by `extra`, then any chart-specific tokens.
fn chart_header(chart: &Chart, extra: &str) -> String {
    let n = chart.dim();
    let mut s = format!("kind={} n={n} N={}{extra}", chart.kind_tag(), chart.points_per_axis());
    match chart.kind() {
        ChartKind::PeriodicGrid { periods, .. } => {
            if periods.iter().any(|&l| l != 2.0 * PI) {
                let list: Vec<String> = periods.iter().map(|l| l.to_string()).collect();
                s.push_str(&format!(" periods={}", list.join(",")));
            }
        }
        ChartKind::LeftInvariantFrame { structure } => {
            let list: Vec<String> = structure.iter().map(|c| c.to_string()).collect();
            s.push_str(&format!(" structure={}", list.join(",")));
        }
    }
    s
}

struct Header {
    magic: String,
    pairs: Vec<(String, String)>,
}

impl Header {
    fn parse(line: &str, magic: &str) -> Result<Self> {
        let mut tokens = line.split_whitespace();
        let found = tokens.next().unwrap_or_default();
        if found != magic {
            return Err(Error::Parse(format!("expected {magic} header, found {found:?}")));
        }
        let version = tokens.next().unwrap_or_default();
        if version != "v1" {
            return Err(Error::Parse(format!("unsupported {magic} version {version:?}")));
        }
        let pairs = tokens
            .map(|t| {
                t.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Parse(format!("malformed header token {t:?}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            magic: magic.to_string(),
            pairs,
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("{} header lacks {key}=", self.magic)))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| Error::Parse(format!("{key}={v:?} is not a non-negative integer")))
    }

    fn chart(&self, n: usize) -> Result<Chart> {
        let points = self.usize("N")?;
        match self.require("kind")? {
            "grid" => match self.get("periods") {
                Some(list) => Chart::grid_with_periods(n, points, parse_list(list)?),
                None => Chart::grid(n, points),
            },
            "frame" => {
                if points != 1 {
                    return Err(Error::Parse(format!("frame charts have N=1, found N={points}")));
                }
                Chart::frame(n, parse_list(self.require("structure")?)?)
            }
            other => Err(Error::Parse(format!("unknown chart kind {other:?}"))),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_number).collect()
}

fn parse_number(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("invalid number {s:?}")))
}

fn take_numbers(tokens: &mut SplitWhitespace<'_>, count: usize) -> Result<Vec<f64>> {
    (0..count)
        .map(|i| {
            let t = tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {count} values, found {i}")))?;
            parse_number(t)
        })
        .collect()
}

/// Splits off the first line and returns `(header, rest)`.
fn split_header(text: &str) -> (&str, &str) {
    match text.split_once('\n') {
        Some((h, rest)) => (h.trim_end_matches('\r'), rest),
        None => (text, ""),
    }
}

pub fn field_to_string(field: &Field) -> String {
    let chart = field.chart();
    let rank = format!(" rank={}", field.rank().tag());
    let mut s = format!("EFIELD v1 {}\n", chart_header(chart, &rank));
    let comps = field.components();
    for p in 0..chart.num_points() {
        let line: Vec<String> = comps.iter().map(|c| number(c.value(p))).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

fn parse_field(header: &str, body: &mut SplitWhitespace<'_>) -> Result<Field> {
    let h = Header::parse(header, "EFIELD")?;
    let n = h.usize("n")?;
    let rank = Rank::from_tag(h.require("rank")?)?;
    let chart = Arc::new(h.chart(n)?);
    let per_point = rank.num_components(n);
    let points = chart.num_points();
    let mut comps = vec![Vec::with_capacity(points); per_point];
    for _ in 0..points {
        for (c, v) in comps.iter_mut().zip(take_numbers(body, per_point)?) {
            c.push(v);
        }
    }
    let comps = comps
        .into_iter()
        .map(|v| ScalarField::new(chart.clone(), v))
        .collect::<Result<Vec<_>>>()?;
    Field::new(&chart, rank, comps)
}

pub fn field_from_str(text: &str) -> Result<Field> {
    let (header, rest) = split_header(text);
    let mut body = rest.split_whitespace();
    let field = parse_field(header, &mut body)?;
    if body.next().is_some() {
        return Err(Error::Parse("trailing data after field values".into()));
    }
    Ok(field)
}

pub fn jet_to_string(jet: &JetSeries) -> String {
    let mut s = format!("EJET v1 K={} lambda={}\n", jet.order(), jet.lambda());
    for c in jet.coefficients() {
        s.push_str(&field_to_string(c));
    }
    s
}

pub fn jet_from_str(text: &str) -> Result<JetSeries> {
    let mut lines = text.lines();
    let h = Header::parse(lines.next().unwrap_or_default(), "EJET")?;
    let k = h.usize("K")?;
    let lambda = parse_number(h.require("lambda")?)?;
    let mut coeffs = Vec::with_capacity(k + 1);
    let rest: Vec<&str> = lines.collect();
    let mut i = 0;
    while coeffs.len() < k + 1 {
        let header = rest
            .get(i)
            .ok_or_else(|| Error::Parse(format!("jet has {} of {} coefficient blocks", coeffs.len(), k + 1)))?;
        let probe = Header::parse(header, "EFIELD")?;
        let n = probe.usize("n")?;
        let lines_per_block = probe.chart(n)?.num_points();
        let block = rest
            .get(i + 1..i + 1 + lines_per_block)
            .ok_or_else(|| Error::Parse("truncated jet coefficient block".into()))?
            .join("\n");
        let mut body = block.split_whitespace();
        coeffs.push(parse_field(header, &mut body)?);
        if body.next().is_some() {
            return Err(Error::Parse("malformed jet coefficient block".into()));
        }
        i += 1 + lines_per_block;
    }
    if rest[i..].iter().any(|l| !l.trim().is_empty()) {
        return Err(Error::Parse("trailing data after jet".into()));
    }
    JetSeries::new(coeffs, lambda)
}

pub fn spinor_to_string(psi: &SpinorField) -> String {
    let chart = psi.chart();
    let dim = format!(" dim={}", psi.dim());
    let mut s = format!("ESPIN v1 {}\n", chart_header(chart, &dim));
    for p in 0..chart.num_points() {
        let v = psi.at(p);
        let line: Vec<String> = v.iter().flat_map(|z| [number(z.re), number(z.im)]).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn spinor_from_str(text: &str) -> Result<SpinorField> {
    let (header, rest) = split_header(text);
    let h = Header::parse(header, "ESPIN")?;
    let n = h.usize("n")?;
    let dim = h.usize("dim")?;
    if dim != spinor_dim(n) && dim != spinor_dim(n + 1) {
        return Err(Error::Parse(format!("dim={dim} is not a spinor dimension for n={n}")));
    }
    let chart = Arc::new(h.chart(n)?);
    let points = chart.num_points();
    let mut body = rest.split_whitespace();
    let mut comps = vec![Vec::with_capacity(points); dim];
    for _ in 0..points {
        let v = take_numbers(&mut body, 2 * dim)?;
        for (k, c) in comps.iter_mut().enumerate() {
            c.push(Complex64::new(v[2 * k], v[2 * k + 1]));
        }
    }
    if body.next().is_some() {
        return Err(Error::Parse("trailing data after spinor values".into()));
    }
    SpinorField::new(chart, comps)
}

pub fn read_field(path: impl AsRef<std::path::Path>) -> Result<Field> {
    field_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_field(path: impl AsRef<std::path::Path>, field: &Field) -> Result<()> {
    Ok(std::fs::write(path, field_to_string(field))?)
}

pub fn read_spinor(path: impl AsRef<std::path::Path>) -> Result<SpinorField> {
    spinor_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_spinor(path: impl AsRef<std::path::Path>, psi: &SpinorField) -> Result<()> {
    Ok(std::fs::write(path, spinor_to_string(psi))?)
}

pub fn read_jet(path: impl AsRef<std::path::Path>) -> Result<JetSeries> {
    jet_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_jet(path: impl AsRef<std::path::Path>, jet: &JetSeries) -> Result<()> {
    Ok(std::fs::write(path, jet_to_string(jet))?)
}
