//! JSON-lines files for k-sets, spread lists and classification runs.
//!
//! A k-set file is a header record followed by one record per member:
//!
//! ```text
//! {"record":"kset","schema":1,"kind":"pg","n":3,"p":2,"e":1,"modulus":[0,1],"k":1,"count":7}
//! {"record":"member","matrix":[[1,0,0,0],[0,0,1,0]]}
//! ```
//!
//! Matrix entries are field-element labels (base-p digits of the polynomial
//! coefficients, lowest degree first). Affine members give the direction
//! rows in `matrix` and a point of the flat in `point`. A member may also
//! be given by its subspace ID as `{"record":"member","id":12}`. Blank lines
//! and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clset::KSet;
use crate::field::{Elem, Field};
use crate::geometry::{Geometry, Kind, Subspace};
use crate::search::ClassificationRun;
use crate::spreads::{Spread, SpreadList};

pub const SCHEMA: u32 = 1;

/// A malformed input file; `line` is 1-based, 0 for whole-file problems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for FormatError {}

fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError { line, message: message.into() }
}

/// Geometry and dimension shared by every header record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub record: String,
    pub schema: u32,
    pub kind: Kind,
    pub n: usize,
    pub p: u32,
    pub e: u32,
    pub modulus: Vec<Elem>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustive: Option<bool>,
}

impl Header {
    pub fn new(record: &str, g: Geometry, k: usize) -> Header {
        let f = g.field();
        Header {
            record: record.into(),
            schema: SCHEMA,
            kind: g.kind(),
            n: g.n(),
            p: f.characteristic(),
            e: f.degree(),
            modulus: f.modulus().to_vec(),
            k,
            count: None,
            exhaustive: None,
        }
    }

    fn geometry(&self, line: usize) -> Result<Geometry, FormatError> {
        if self.schema != SCHEMA {
            return Err(err(line, format!("unsupported schema {} (expected {SCHEMA})", self.schema)));
        }
        let f = Field::get(self.p, self.e).map_err(|e| err(line, e.to_string()))?;
        if f.modulus() != self.modulus.as_slice() {
            return Err(err(line, format!("modulus {:?} differs from the built-in {:?}", self.modulus, f.modulus())));
        }
        if self.n < 2 {
            return Err(err(line, "n must be at least 2"));
        }
        let g = Geometry::new(self.kind, self.n, f).map_err(|e| err(line, e.to_string()))?;
        if self.k >= self.n {
            return Err(err(line, format!("k = {} must be below n = {}", self.k, self.n)));
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Member {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<Elem>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    point: Option<Vec<Elem>>,
}

impl Member {
    fn of(s: &Subspace) -> Member {
        let b = s.basis();
        let matrix = (0..b.rows).map(|i| b.row(i).to_vec()).collect();
        Member { id: None, matrix: Some(matrix), point: s.representative().map(<[Elem]>::to_vec) }
    }

    fn resolve(&self, g: Geometry, k: usize, line: usize) -> Result<u32, FormatError> {
        let table = g.table(k).map_err(|e| err(line, e.to_string()))?;
        if let Some(id) = self.id {
            if self.matrix.is_some() || self.point.is_some() {
                return Err(err(line, "give either an id or a matrix, not both"));
            }
            if id as usize >= table.len() {
                return Err(err(line, format!("id {id} out of range ({} {k}-subspaces)", table.len())));
            }
            return Ok(id);
        }
        let rows = self.matrix.as_ref().ok_or_else(|| err(line, "member needs \"matrix\" or \"id\""))?;
        let s = match (g.kind(), &self.point) {
            (Kind::Projective, None) => g.span_of(rows),
            (Kind::Projective, Some(_)) => return Err(err(line, "projective members take no \"point\"")),
            (Kind::Affine, Some(p)) => g.flat(p, rows),
            (Kind::Affine, None) => return Err(err(line, "affine members need a \"point\"")),
        }
        .map_err(|e| err(line, e.to_string()))?;
        if s.dim() != k {
            return Err(err(line, format!("member spans a {}-space, expected k = {k}", s.dim())));
        }
        Ok(table.id_of(&s).expect("canonical subspace is in the table"))
    }
}

/// Non-blank, non-comment lines with their 1-based numbers.
fn records(r: impl BufRead) -> Result<Vec<(usize, Value)>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| err(i + 1, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: Value = serde_json::from_str(t).map_err(|e| err(i + 1, format!("invalid JSON: {e}")))?;
        if !v.get("record").is_some_and(Value::is_string) {
            return Err(err(i + 1, "missing \"record\" field"));
        }
        out.push((i + 1, v));
    }
    Ok(out)
}

fn kind_of(v: &Value) -> &str {
    v["record"].as_str().unwrap_or("")
}

fn parse<T: for<'de> Deserialize<'de>>(line: usize, v: Value) -> Result<T, FormatError> {
    serde_json::from_value(v).map_err(|e| err(line, e.to_string()))
}

fn header(recs: &mut std::vec::IntoIter<(usize, Value)>, expect: &str) -> Result<(Header, Geometry), FormatError> {
    let (line, v) = recs.next().ok_or_else(|| err(0, "empty input"))?;
    if kind_of(&v) != expect {
        return Err(err(line, format!("expected a \"{expect}\" header, found \"{}\"", kind_of(&v))));
    }
    let h: Header = parse(line, v)?;
    let g = h.geometry(line)?;
    Ok((h, g))
}

pub fn read_kset(r: impl BufRead) -> Result<KSet, FormatError> {
    let mut recs = records(r)?.into_iter();
    let (h, g) = header(&mut recs, "kset")?;
    let mut ids = BTreeMap::new();
    for (line, v) in recs {
        if kind_of(&v) != "member" {
            return Err(err(line, format!("expected a \"member\" record, found \"{}\"", kind_of(&v))));
        }
        let id = parse::<Member>(line, v)?.resolve(g, h.k, line)?;
        if let Some(first) = ids.insert(id, line) {
            return Err(err(line, format!("member repeats the one on line {first}")));
        }
    }
    if let Some(c) = h.count.filter(|&c| c != ids.len()) {
        return Err(err(0, format!("header announces {c} members, found {}", ids.len())));
    }
    KSet::new(g, h.k, ids.into_keys()).map_err(|e| err(0, e.to_string()))
}

fn json_line<W: Write + ?Sized>(w: &mut W, v: &impl Serialize) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, v)?;
    writeln!(w)
}

fn member_records(g: Geometry, k: usize, ids: &[u32]) -> Vec<Member> {
    let table = g.table(k).expect("valid dimension");
    ids.iter().map(|&i| Member::of(table.get(i))).collect()
}

#[derive(Serialize)]
struct Tagged<'a, T> {
    record: &'a str,
    #[serde(flatten)]
    body: T,
}

pub fn write_kset<W: Write + ?Sized>(w: &mut W, l: &KSet) -> std::io::Result<()> {
    let mut h = Header::new("kset", l.geometry(), l.k());
    h.count = Some(l.len());
    json_line(w, &h)?;
    for m in member_records(l.geometry(), l.k(), l.members()) {
        json_line(w, &Tagged { record: "member", body: m })?;
    }
    Ok(())
}

pub fn kset_to_string(l: &KSet) -> String {
    let mut buf = Vec::new();
    write_kset(&mut buf, l).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[derive(Serialize, Deserialize)]
struct SpreadRecord {
    index: usize,
    members: Vec<Member>,
}

/// Spread list: a `spreads` header carrying `exhaustive` and `count`, then
/// one `spread` record per spread holding its members.
pub fn write_spreads<W: Write + ?Sized>(w: &mut W, g: Geometry, k: usize, list: &SpreadList) -> std::io::Result<()> {
    let mut h = Header::new("spreads", g, k);
    h.count = Some(list.spreads.len());
    h.exhaustive = Some(list.exhaustive);
    json_line(w, &h)?;
    for (index, s) in list.spreads.iter().enumerate() {
        let members = member_records(g, k, s.members());
        json_line(w, &Tagged { record: "spread", body: SpreadRecord { index, members } })?;
    }
    Ok(())
}

pub fn read_spreads(r: impl BufRead) -> Result<(Geometry, usize, SpreadList), FormatError> {
    let mut recs = records(r)?.into_iter();
    let (h, g) = header(&mut recs, "spreads")?;
    let mut spreads = Vec::new();
    for (line, v) in recs {
        if kind_of(&v) != "spread" {
            return Err(err(line, format!("expected a \"spread\" record, found \"{}\"", kind_of(&v))));
        }
        let rec: SpreadRecord = parse(line, v)?;
        let ids = rec.members.iter().map(|m| m.resolve(g, h.k, line)).collect::<Result<Vec<_>, _>>()?;
        let s = Spread::new(g, h.k, ids);
        s.validate().map_err(|d| err(line, format!("not a spread: {d:?}")))?;
        spreads.push(s);
    }
    if let Some(c) = h.count.filter(|&c| c != spreads.len()) {
        return Err(err(0, format!("header announces {c} spreads, found {}", spreads.len())));
    }
    Ok((g, h.k, SpreadList { spreads, exhaustive: h.exhaustive.unwrap_or(false) }))
}

/// Summary closing a classification stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: u32,
    pub found: usize,
    pub rank: usize,
    pub nodes: u64,
    pub budget: u64,
    pub exhaustive: bool,
    pub elapsed_ms: u128,
    /// Number of sets found per parameter value.
    pub parameters: BTreeMap<String, usize>,
}

impl RunSummary {
    pub fn of(run: &ClassificationRun) -> RunSummary {
        let mut parameters = BTreeMap::new();
        for l in &run.found {
            *parameters.entry(l.parameter().to_string()).or_insert(0) += 1;
        }
        RunSummary {
            schema: SCHEMA,
            found: run.found.len(),
            rank: run.rank(),
            nodes: run.nodes,
            budget: run.budget,
            exhaustive: run.exhaustive,
            elapsed_ms: run.elapsed.as_millis(),
            parameters,
        }
    }
}

#[derive(Serialize)]
struct SetRecord<'a> {
    index: usize,
    parameter: String,
    size: usize,
    ids: &'a [u32],
}

/// A `classification` header, one `set` record per found set (members as
/// subspace IDs) and a closing `summary` record.
pub fn write_run<W: Write + ?Sized>(w: &mut W, run: &ClassificationRun) -> std::io::Result<()> {
    json_line(w, &Header::new("classification", run.geometry, run.k))?;
    for (index, l) in run.found.iter().enumerate() {
        let body = SetRecord { index, parameter: l.parameter().to_string(), size: l.len(), ids: l.members() };
        json_line(w, &Tagged { record: "set", body })?;
    }
    json_line(w, &Tagged { record: "summary", body: RunSummary::of(run) })
}
