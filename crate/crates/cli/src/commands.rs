use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use clkit::clset::{default_spreads, ClsetError, KSet, Trivial, Verifier, VerifierReport};
use clkit::field::Field;
use clkit::format::{self, Header};
use clkit::gauss::gauss;
use clkit::geometry::{Geometry, Kind};
use clkit::identities::{self, IdentityError};
use clkit::incidence::row_space;
use clkit::search::{self, CrossMethod};
use clkit::spreads::{self, SpreadList};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;

use crate::args::{Command, Format, GeometryArgs, GeometryKind, IdentityCommand, Output, SpreadMode, TrivialKind};
use crate::{Outcome, UsageError};

/// Ranks up to this are classified without `--stretch`.
const ROUTINE_RANK: usize = 20;
const DEFAULT_BUDGET: u64 = 1_000_000_000;
/// Cross-validation enumerates every spread, so it is kept to small geometries.
const CROSS_VALIDATE_LIMIT: usize = 40;

pub fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Gauss { b, a, q } => {
            let v = gauss(b, a, q)?;
            println!("{}", json!({"record": "gauss", "b": b, "a": a, "q": q, "value": v.to_string()}));
            Ok(true)
        }
        Command::Enumerate { geometry, k, count_only, out } => enumerate(&geometry, k, count_only, &out),
        Command::Verify { input, spreads, seed, all_violations, format } => {
            verify(&input, spreads.as_deref(), seed, all_violations, format)
        }
        Command::Trivial { geometry, k, kind, point, hyperplane, complement, out } => {
            trivial(&geometry, k, kind, point, hyperplane, complement, &out)
        }
        Command::Restrict { input, frame, frame_dim, out } => {
            let l = read_kset(&input)?;
            let g = l.geometry();
            let table = g.table(frame_dim)?;
            if frame as usize >= table.len() {
                return Err(UsageError(format!("frame ID {frame} out of range ({} {frame_dim}-subspaces)", table.len())));
            }
            let r = l.restrict(table.get(frame))?;
            write_with(&out, |w| format::write_kset(w, &r))?;
            Ok(true)
        }
        Command::Closure { input, hyperplane, out } => {
            let l = read_kset(&input)?;
            let g = l.geometry();
            let r = match (g.kind(), hyperplane) {
                (Kind::Affine, None) => l.to_projective()?,
                (Kind::Affine, Some(_)) => return Err(UsageError("--hyperplane applies to projective input".into())),
                (Kind::Projective, h) => {
                    let table = g.table(g.n() - 1)?;
                    let h = match h {
                        Some(h) if h as usize >= table.len() => {
                            return Err(UsageError(format!("hyperplane ID {h} out of range ({})", table.len())))
                        }
                        Some(h) => table.get(h).clone(),
                        None => standard_hyperplane(g)?,
                    };
                    l.to_affine(&h)?
                }
            };
            write_with(&out, |w| format::write_kset(w, &r))?;
            Ok(true)
        }
        Command::Spread { geometry, k, mode, cap, count, seed, out } => {
            let g = geometry_of(&geometry)?;
            check_k(g, k)?;
            let list = match mode {
                SpreadMode::Constructed => SpreadList {
                    spreads: match g.kind() {
                        Kind::Projective => vec![spreads::desarguesian_spread(g, k)?],
                        Kind::Affine => spreads::all_parallel_spreads(g, k)?,
                    },
                    exhaustive: false,
                },
                SpreadMode::Enumerate => spreads::enumerate_spreads(g, k, cap.unwrap_or(usize::MAX))?,
                SpreadMode::Sample => {
                    SpreadList { spreads: spreads::sample_spreads(g, k, count, seed)?, exhaustive: false }
                }
            };
            write_with(&out, |w| format::write_spreads(w, g, k, &list))?;
            Ok(true)
        }
        Command::Identity { which } => identity(which),
        Command::Glue { input, t } => glue(&input, t),
        Command::Bounds { grid, format, out } => bounds(&grid, format, &out),
        Command::Classify { geometry, k, budget, stretch, cross_validate, seed, summary_only, out } => {
            classify(&geometry, k, budget, stretch, cross_validate, seed, summary_only, &out)
        }
    }
}

fn geometry_of(a: &GeometryArgs) -> Result<Geometry, UsageError> {
    let field = match (a.q, a.p) {
        (Some(q), _) => Field::of_order(q)?,
        (None, Some(p)) => Field::get(p, a.e)?,
        (None, None) => return Err(UsageError("give --q or --p".into())),
    };
    if a.n < 2 {
        return Err(UsageError("--n must be at least 2".into()));
    }
    let kind = match a.geometry {
        GeometryKind::Pg => Kind::Projective,
        GeometryKind::Ag => Kind::Affine,
    };
    Ok(Geometry::new(kind, a.n, field)?)
}

fn check_k(g: Geometry, k: usize) -> Result<(), UsageError> {
    if k >= g.n() {
        return Err(UsageError(format!("--k must be below n = {}", g.n())));
    }
    Ok(())
}

fn read_kset(path: &Path) -> Result<KSet, UsageError> {
    let f = File::open(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    format::read_kset(BufReader::new(f)).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn write_with(out: &Output, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), UsageError> {
    match &out.output {
        Some(p) => {
            let file = File::create(p).map_err(|e| UsageError(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn line(w: &mut dyn Write, v: &impl Serialize) -> io::Result<()> {
    serde_json::to_writer(&mut *w, v)?;
    writeln!(w)
}

/// The hyperplane x0 = 0.
fn standard_hyperplane(g: Geometry) -> Result<clkit::geometry::Subspace, UsageError> {
    let len = g.vector_len();
    let rows: Vec<Vec<u8>> = (1..len).map(|i| (0..len).map(|j| (i == j) as u8).collect()).collect();
    Ok(g.span_of(&rows)?)
}

fn enumerate(a: &GeometryArgs, k: usize, count_only: bool, out: &Output) -> Outcome {
    let g = geometry_of(a)?;
    if k > g.n() {
        return Err(UsageError(format!("--k must be at most n = {}", g.n())));
    }
    if count_only {
        println!("{}", json!({"record": "count", "k": k, "count": g.subspace_count(k).to_string()}));
        return Ok(true);
    }
    let table = g.table(k)?;
    write_with(out, |w| {
        let mut h = Header::new("subspaces", g, k);
        h.count = Some(table.len());
        line(w, &h)?;
        for (id, s) in table.items().iter().enumerate() {
            let b = s.basis();
            let matrix: Vec<&[u8]> = (0..b.rows).map(|i| b.row(i)).collect();
            match s.representative() {
                None => line(w, &json!({"record": "subspace", "id": id, "matrix": matrix}))?,
                Some(p) => line(w, &json!({"record": "subspace", "id": id, "matrix": matrix, "point": p}))?,
            }
        }
        Ok(())
    })?;
    Ok(true)
}

#[derive(Serialize)]
struct ReportRecord<'a> {
    record: &'static str,
    applicable: bool,
    #[serde(flatten)]
    report: &'a VerifierReport,
}

fn verify(input: &Path, spreads_file: Option<&Path>, seed: u64, all: bool, fmt: Format) -> Outcome {
    let l = read_kset(input)?;
    let g = l.geometry();
    let v = Verifier::new().all_violations(all);
    let mut results: Vec<(&'static str, Result<VerifierReport, String>)> = Vec::new();
    let skip = |e: ClsetError| -> Result<Result<VerifierReport, String>, UsageError> {
        match e {
            ClsetError::NotApplicable(why) => Ok(Err(why)),
            ClsetError::WrongKind(_) => Ok(Err("projective spaces only".into())),
            e => Err(e.into()),
        }
    };
    results.push(("row_space", Ok(v.row_space(&l)?)));
    results.push(("disjoint", v.disjoint(&l).map(Ok).or_else(skip)?));
    results.push(("meets", v.meets(&l).map(Ok).or_else(skip)?));
    let spread_report = match spreads_file {
        Some(p) => {
            let f = File::open(p).map_err(|e| UsageError(format!("{}: {e}", p.display())))?;
            let (sg, sk, list) =
                format::read_spreads(BufReader::new(f)).map_err(|e| UsageError(format!("{}: {e}", p.display())))?;
            if (sg, sk) != (g, l.k()) {
                return Err(UsageError(format!("spreads are for {sg} k={sk}, the set for {g} k={}", l.k())));
            }
            Ok(v.spreads(&l, &list)?)
        }
        None if spreads::has_spreads(g, l.k()) => Ok(v.spreads(&l, &default_spreads(g, l.k(), seed)?)?),
        None => Err(format!("{g} has no {}-spreads", l.k())),
    };
    results.push(("spreads", spread_report));

    let applicable: Vec<&VerifierReport> = results.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let passed = applicable.iter().all(|r| r.passed);
    let agree = applicable.iter().all(|r| r.passed == passed);
    match fmt {
        Format::Json => {
            let mut out = io::stdout().lock();
            for (name, r) in &results {
                match r {
                    Ok(report) => line(&mut out, &ReportRecord { record: "report", applicable: true, report })?,
                    Err(why) => line(
                        &mut out,
                        &json!({"record": "report", "definition": name, "applicable": false, "reason": why}),
                    )?,
                }
            }
            line(
                &mut out,
                &json!({
                    "record": "verdict",
                    "size": l.len(),
                    "parameter": l.parameter().to_string(),
                    "passed": passed,
                    "agree": agree,
                }),
            )?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout());
            w.write_record(["definition", "applicable", "passed", "witness", "exhaustive"])?;
            for (name, r) in &results {
                match r {
                    Ok(rep) => w.write_record([
                        name.to_string(),
                        "true".into(),
                        rep.passed.to_string(),
                        rep.witness.as_ref().map(|x| serde_json::to_string(x).unwrap()).unwrap_or_default(),
                        rep.exhaustive.map(|e| e.to_string()).unwrap_or_default(),
                    ])?,
                    Err(why) => w.write_record([*name, "false", "", why.as_str(), ""])?,
                }
            }
            w.flush()?;
        }
    }
    Ok(passed)
}

fn trivial(
    a: &GeometryArgs,
    k: usize,
    kind: TrivialKind,
    point: Option<u32>,
    hyperplane: Option<u32>,
    complement: bool,
    out: &Output,
) -> Outcome {
    let g = geometry_of(a)?;
    check_k(g, k)?;
    let need = |x: Option<u32>, flag: &str| x.ok_or_else(|| UsageError(format!("--{flag} is required")));
    let mut t = match kind {
        TrivialKind::Empty => Trivial::Empty,
        TrivialKind::Pencil => Trivial::Pencil(need(point, "point")?),
        TrivialKind::Hyperplane => Trivial::Hyperplane(need(hyperplane, "hyperplane")?),
        TrivialKind::Union => Trivial::Union(need(point, "point")?, need(hyperplane, "hyperplane")?),
    };
    if complement {
        t = Trivial::Complement(Box::new(t));
    }
    let l = KSet::trivial(g, k, &t)?;
    write_with(out, |w| format::write_kset(w, &l))?;
    Ok(true)
}

fn identity(which: IdentityCommand) -> Outcome {
    let mut out = io::stdout().lock();
    match which {
        IdentityCommand::PointSubspace { input, point, subspace, dim } => {
            let l = read_kset(&input)?;
            let table = l.geometry().table(dim)?;
            if subspace as usize >= table.len() {
                return Err(UsageError(format!("subspace ID {subspace} out of range ({})", table.len())));
            }
            let rep = identities::check_point_subspace_identity(&l, point, table.get(subspace)).map_err(usage)?;
            line(&mut out, &json!({"record": "identity", "report": rep}))?;
            Ok(rep.passed)
        }
        IdentityCommand::Restrictions { input, t, at } => {
            let l = read_kset(&input)?;
            let g = l.geometry();
            let count = g.table(l.k())?.len() as u32;
            let values: Vec<(u32, BigRational)> = match at {
                Some(id) if id >= count => return Err(UsageError(format!("ID {id} out of range ({count})"))),
                Some(id) => {
                    let v = match g.kind() {
                        Kind::Projective => identities::projective_parameter_from_restrictions(&l, id, t),
                        Kind::Affine => identities::affine_parameter_from_restrictions(&l, id, t),
                    };
                    vec![(id, v.map_err(usage)?)]
                }
                None => (0..count).zip(identities::parameters_from_restrictions(&l, t).map_err(usage)?).collect(),
            };
            let x = l.parameter();
            let mut ok = true;
            for (id, v) in values {
                ok &= v == x;
                line(
                    &mut out,
                    &json!({"record": "restriction_parameter", "id": id, "value": v.to_string(), "matches": v == x}),
                )?;
            }
            line(&mut out, &json!({"record": "verdict", "parameter": x.to_string(), "passed": ok}))?;
            Ok(ok)
        }
        IdentityCommand::Admissible { n, k, q, t, x } => {
            let a = identities::admissible_parameters(n, k, q, t).map_err(usage)?;
            let x = x.map(|s| s.parse::<BigRational>().map_err(|e| UsageError(format!("--x {s}: {e}")))).transpose()?;
            let admits = x.as_ref().map(|x| a.admits(x));
            line(
                &mut out,
                &json!({
                    "record": "admissible",
                    "denominator": a.denominator.to_string(),
                    "max": a.max.to_string(),
                    "x": x.map(|x| x.to_string()),
                    "admits": admits,
                }),
            )?;
            Ok(admits.unwrap_or(true))
        }
        IdentityCommand::Count { n, k, q } => {
            let c = identities::parameter_count(n, k, q).map_err(usage)?;
            line(&mut out, &json!({"record": "parameter_count", "n": n, "k": k, "q": q, "value": c.to_string()}))?;
            Ok(true)
        }
    }
}

/// Unmet hypotheses and bad arguments are usage errors; everything else
/// from the identities module is too, since inputs are validated there.
fn usage(e: IdentityError) -> UsageError {
    UsageError(e.to_string())
}

fn glue(input: &Path, t: usize) -> Outcome {
    let l = read_kset(input)?;
    let result = match l.geometry().kind() {
        Kind::Projective => identities::glue_projective(&l, t),
        Kind::Affine => identities::glue_affine(&l, t),
    };
    let row_space_passed = Verifier::new().row_space(&l)?.passed;
    let (record, glued_cl) = match result {
        Ok(outcome) => {
            let cl = outcome.is_cl();
            (json!({"record": "glue", "t": t, "result": outcome}), cl)
        }
        Err(IdentityError::RestrictionNotCl { id, dim }) => (
            json!({"record": "glue", "t": t, "result": {"outcome": "restriction_not_cl", "id": id, "dim": dim}}),
            false,
        ),
        Err(e) => return Err(usage(e)),
    };
    let agree = glued_cl == row_space_passed;
    let mut out = io::stdout().lock();
    line(&mut out, &record)?;
    line(
        &mut out,
        &json!({"record": "verdict", "cl": glued_cl, "row_space_passed": row_space_passed, "agree": agree}),
    )?;
    Ok(agree)
}

/// Parses `2,4..6` into `[2, 4, 5, 6]`.
fn parse_values(s: &str) -> Result<Vec<u64>, UsageError> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.is_empty()) {
        let num = |x: &str| x.trim().parse::<u64>().map_err(|_| UsageError(format!("bad grid value {x:?}")));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if a > b {
                    return Err(UsageError(format!("empty range {part}")));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err(UsageError(format!("no values in {s:?}")));
    }
    Ok(out)
}

fn parse_grid(tokens: &[String]) -> Result<(Vec<u64>, Vec<u64>, Vec<u64>), UsageError> {
    let (mut n, mut k, mut q) = (None, None, None);
    for tok in tokens.iter().flat_map(|t| t.split_whitespace()) {
        let (key, vals) = tok.split_once('=').ok_or_else(|| UsageError(format!("grid entry {tok:?} needs key=values")))?;
        let slot = match key {
            "n" => &mut n,
            "k" => &mut k,
            "q" => &mut q,
            _ => return Err(UsageError(format!("unknown grid key {key:?} (use n, k, q)"))),
        };
        *slot = Some(parse_values(vals)?);
    }
    let missing = |name: &str| UsageError(format!("grid needs {name}=..."));
    Ok((n.ok_or_else(|| missing("n"))?, k.ok_or_else(|| missing("k"))?, q.ok_or_else(|| missing("q"))?))
}

const BOUND_NAMES: [&str; 5] =
    ["projective_bound", "affine_bound", "window_bound", "small_parameter_max", "affine_line_bound"];

fn bounds(grid: &[String], fmt: Format, out: &Output) -> Outcome {
    let (ns, ks, qs) = parse_grid(grid)?;
    let rows = identities::bound_table(&ns, &ks, &qs).map_err(usage)?;
    write_with(out, |w| match fmt {
        Format::Json => {
            for r in &rows {
                line(w, &json!({"record": "bounds", "n": r.n, "k": r.k, "q": r.q, "bounds": r.reports}))?;
            }
            Ok(())
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(w);
            let mut head = vec!["n".to_string(), "k".into(), "q".into()];
            for b in BOUND_NAMES {
                head.extend([b.to_string(), format!("{b}_applicable"), format!("{b}_excluded")]);
            }
            c.write_record(&head)?;
            for r in &rows {
                let mut rec = vec![r.n.to_string(), r.k.to_string(), r.q.to_string()];
                for b in BOUND_NAMES {
                    match r.reports.iter().find(|x| x.name == b) {
                        Some(x) => rec.extend([
                            x.value.as_ref().map(|v| v.to_string()).unwrap_or_default(),
                            x.applicable.to_string(),
                            x.excluded.as_ref().map(|i| i.to_string()).unwrap_or_default(),
                        ]),
                        None => rec.extend([String::new(), "false".into(), String::new()]),
                    }
                }
                c.write_record(&rec)?;
            }
            c.flush()
        }
    })?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn classify(
    a: &GeometryArgs,
    k: usize,
    budget: Option<u64>,
    stretch: bool,
    cross_validate: bool,
    seed: u64,
    summary_only: bool,
    out: &Output,
) -> Outcome {
    let g = geometry_of(a)?;
    check_k(g, k)?;
    let rank = row_space(g, k)?.rank();
    if rank > ROUTINE_RANK && !stretch {
        return Err(UsageError(format!("incidence rank {rank} exceeds {ROUTINE_RANK}; pass --stretch and --budget")));
    }
    if stretch && budget.is_none() {
        return Err(UsageError("--stretch needs an explicit --budget".into()));
    }
    if cross_validate && g.table(k)?.len() > CROSS_VALIDATE_LIMIT {
        return Err(UsageError(format!("--cross-validate needs at most {CROSS_VALIDATE_LIMIT} {k}-subspaces")));
    }
    let budget = budget.unwrap_or(DEFAULT_BUDGET);
    let run = if stretch { search::classify_stretch(g, k, budget)? } else { search::classify(g, k, budget)? };
    write_with(out, |w| {
        if summary_only {
            line(w, &json!({"record": "summary", "summary": format::RunSummary::of(&run)}))
        } else {
            format::write_run(w, &run)
        }
    })?;
    if !cross_validate {
        return Ok(true);
    }
    if !run.exhaustive {
        return Err(UsageError("budget exhausted before the classification finished; nothing to cross-validate".into()));
    }
    let list = spreads::enumerate_spreads(g, k, usize::MAX)?;
    let cc = search::cross_validate(&run, &list, seed)?;
    let method = match cc.method {
        CrossMethod::BruteForce { subsets, matches } => json!({"brute_force": {"subsets": subsets, "matches": matches}}),
        CrossMethod::SpreadMeets { restarts, hits } => json!({"spread_meets": {"restarts": restarts, "hits": hits}}),
    };
    let witness = cc.witness.as_ref().map(|l| l.members().to_vec());
    line(
        &mut io::stdout().lock(),
        &json!({"record": "cross_validation", "spreads": list.spreads.len(), "method": method, "agreed": cc.agreed, "witness": witness}),
    )?;
    Ok(cc.agreed)
}
