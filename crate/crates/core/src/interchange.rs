//! Exchange files for external fault-tree tools: an XML document and a flat
//! CSV join of cut sets with event failure data. Both round-trip a short
//! list together with the failure data of its literals.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use quick_xml::events::{BytesDecl, BytesStart, Event};
use quick_xml::{Reader, Writer};
use thiserror::Error;

use crate::fmr::{ChannelLiteral, CutSet, Mode, ShortList, Target, Warning, WarningKind};
use crate::quant::database::ModelRow;
use crate::quant::{FailureDatabase, QuantError};

pub const XML_VERSION: &str = "1";
pub const CSV_HEADER: [&str; 7] = [
    "cutset_index",
    "event_id",
    "model",
    "p",
    "lambda_per_hour",
    "mttr_hours",
    "tau_hours",
];

#[derive(Debug, Error)]
pub enum InterchangeError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    MissingData(#[from] QuantError),
    #[error("XML: {0}")]
    Xml(String),
    #[error("CSV: {0}")]
    Csv(String),
}

fn xml_err(e: impl std::fmt::Display) -> InterchangeError {
    InterchangeError::Xml(e.to_string())
}

fn csv_err(e: impl std::fmt::Display) -> InterchangeError {
    InterchangeError::Csv(e.to_string())
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), InterchangeError> {
    let io = |source| InterchangeError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<String, InterchangeError> {
    std::fs::read_to_string(path).map_err(|source| InterchangeError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn used_data(sl: &ShortList, db: &FailureDatabase) -> Result<FailureDatabase, InterchangeError> {
    let ids = sl.event_sets().into_iter().flatten().collect::<Vec<_>>();
    Ok(db.restrict(ids.iter().map(String::as_str))?)
}

fn warning_kind(s: &str) -> Option<WarningKind> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
}

fn warning_kind_str(k: WarningKind) -> String {
    serde_json::to_value(k)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .expect("warning kinds serialize as strings")
}

// ---- XML ----

pub fn to_hiphops_xml(sl: &ShortList, db: &FailureDatabase) -> Result<String, InterchangeError> {
    let data = used_data(sl, db)?;
    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))
        .map_err(xml_err)?;
    w.write_event(Event::Start(BytesStart::new("FMRExport").with_attributes([("version", XML_VERSION)])))
        .map_err(xml_err)?;

    let mode = sl.target.mode.to_string();
    let mut target = BytesStart::new("Target").with_attributes([("net", sl.target.net.as_str()), ("mode", mode.as_str())]);
    if let Some(p) = &sl.profile {
        target.push_attribute(("profile", p.as_str()));
    }
    w.write_event(Event::Empty(target)).map_err(xml_err)?;

    w.write_event(Event::Start(BytesStart::new("Events"))).map_err(xml_err)?;
    for (id, m) in data.iter() {
        let row = ModelRow::from_model(m);
        let mut e = BytesStart::new("Event").with_attributes([("id", id), ("model", row.model.as_str())]);
        for (name, v) in [
            ("p", row.p),
            ("lambda", row.lambda_per_hour),
            ("mttr", row.mttr_hours),
            ("tau", row.tau_hours),
        ] {
            if let Some(v) = v {
                e.push_attribute((name, v.to_string().as_str()));
            }
        }
        w.write_event(Event::Empty(e)).map_err(xml_err)?;
    }
    w.write_event(Event::End(BytesStart::new("Events").to_end())).map_err(xml_err)?;

    w.write_event(Event::Start(BytesStart::new("CutSets"))).map_err(xml_err)?;
    for cs in &sl.cut_sets {
        if cs.is_empty() {
            w.write_event(Event::Empty(BytesStart::new("CutSet"))).map_err(xml_err)?;
            continue;
        }
        w.write_event(Event::Start(BytesStart::new("CutSet"))).map_err(xml_err)?;
        for id in cs.event_ids() {
            w.write_event(Event::Empty(BytesStart::new("Ref").with_attributes([("id", id.as_str())])))
                .map_err(xml_err)?;
        }
        w.write_event(Event::End(BytesStart::new("CutSet").to_end())).map_err(xml_err)?;
    }
    w.write_event(Event::End(BytesStart::new("CutSets").to_end())).map_err(xml_err)?;

    if !sl.warnings.is_empty() {
        w.write_event(Event::Start(BytesStart::new("Warnings"))).map_err(xml_err)?;
        for warn in &sl.warnings {
            let kind = warning_kind_str(warn.kind);
            let start = BytesStart::new("Warning")
                .with_attributes([("kind", kind.as_str()), ("condition", warn.condition.as_str())]);
            w.write_event(Event::Start(start)).map_err(xml_err)?;
            for i in &warn.cut_sets {
                let idx = i.to_string();
                w.write_event(Event::Empty(BytesStart::new("Member").with_attributes([("index", idx.as_str())])))
                    .map_err(xml_err)?;
            }
            w.write_event(Event::End(BytesStart::new("Warning").to_end())).map_err(xml_err)?;
        }
        w.write_event(Event::End(BytesStart::new("Warnings").to_end())).map_err(xml_err)?;
    }

    w.write_event(Event::End(BytesStart::new("FMRExport").to_end())).map_err(xml_err)?;
    let mut out = String::from_utf8(w.into_inner()).map_err(xml_err)?;
    out.push('\n');
    Ok(out)
}

fn attrs(e: &BytesStart) -> Result<BTreeMap<String, String>, InterchangeError> {
    e.attributes()
        .map(|a| {
            let a = a.map_err(xml_err)?;
            let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
            let value = a.unescape_value().map_err(xml_err)?.into_owned();
            Ok((key, value))
        })
        .collect()
}

fn need<'a>(a: &'a BTreeMap<String, String>, key: &str, elem: &str) -> Result<&'a str, InterchangeError> {
    a.get(key)
        .map(String::as_str)
        .ok_or_else(|| xml_err(format!("<{elem}> lacks attribute `{key}`")))
}

pub fn from_hiphops_xml(text: &str) -> Result<(ShortList, FailureDatabase), InterchangeError> {
    let mut r = Reader::from_str(text);
    r.config_mut().trim_text(true);
    let mut target: Option<Target> = None;
    let mut profile = None;
    let mut db = FailureDatabase::default();
    let mut cut_sets: Vec<CutSet> = Vec::new();
    let mut current: Option<Vec<ChannelLiteral>> = None;
    let mut warnings: Vec<Warning> = Vec::new();
    let mut in_warning = false;
    let mut version_seen = false;

    loop {
        let ev = r.read_event().map_err(xml_err)?;
        let (e, empty) = match &ev {
            Event::Start(e) => (e.clone(), false),
            Event::Empty(e) => (e.clone(), true),
            Event::End(e) => {
                match e.name().as_ref() {
                    b"CutSet" => {
                        let lits = current.take().ok_or_else(|| xml_err("unbalanced </CutSet>"))?;
                        cut_sets.push(CutSet::new(lits));
                    }
                    b"Warning" => in_warning = false,
                    _ => {}
                }
                continue;
            }
            Event::Eof => break,
            _ => continue,
        };
        let a = attrs(&e)?;
        match e.name().as_ref() {
            b"FMRExport" => {
                let v = need(&a, "version", "FMRExport")?;
                if v != XML_VERSION {
                    return Err(xml_err(format!("unsupported version {v}")));
                }
                version_seen = true;
            }
            b"Target" => {
                let mode: Mode = need(&a, "mode", "Target")?.parse().map_err(xml_err)?;
                target = Some(Target {
                    net: need(&a, "net", "Target")?.to_string(),
                    mode,
                });
                profile = a.get("profile").cloned();
            }
            b"Event" => {
                let id = need(&a, "id", "Event")?.to_string();
                let cell = |k: &str| a.get(k).map(String::as_str).unwrap_or("");
                let row = ModelRow::parse(&[cell("model"), cell("p"), cell("lambda"), cell("mttr"), cell("tau")])
                    .and_then(|r| r.to_model())
                    .map_err(|m| xml_err(format!("event {id}: {m}")))?;
                if db.insert(id.clone(), row).is_some() {
                    return Err(xml_err(format!("duplicate event {id}")));
                }
            }
            b"CutSet" => {
                if empty {
                    cut_sets.push(CutSet::new([]));
                } else {
                    current = Some(Vec::new());
                }
            }
            b"Ref" => {
                let id = need(&a, "id", "Ref")?;
                if db.get(id).is_none() {
                    return Err(xml_err(format!("reference to undeclared event {id}")));
                }
                let lit: ChannelLiteral = id.parse().map_err(xml_err)?;
                current
                    .as_mut()
                    .ok_or_else(|| xml_err("<Ref> outside <CutSet>"))?
                    .push(lit);
            }
            b"Warning" => {
                let kind = need(&a, "kind", "Warning")?;
                warnings.push(Warning {
                    kind: warning_kind(kind).ok_or_else(|| xml_err(format!("unknown warning kind {kind}")))?,
                    condition: need(&a, "condition", "Warning")?.to_string(),
                    cut_sets: Vec::new(),
                });
                in_warning = !empty;
            }
            b"Member" if in_warning => {
                let i: usize = need(&a, "index", "Member")?.parse().map_err(xml_err)?;
                warnings.last_mut().expect("inside a warning").cut_sets.push(i);
            }
            _ => {}
        }
    }
    if !version_seen {
        return Err(xml_err("missing <FMRExport version> root"));
    }
    let target = target.ok_or_else(|| xml_err("missing <Target>"))?;
    Ok((
        ShortList {
            target,
            profile,
            cut_sets,
            warnings,
        },
        db,
    ))
}

pub fn export_hiphops_xml(sl: &ShortList, db: &FailureDatabase, path: &Path) -> Result<(), InterchangeError> {
    write_atomic(path, to_hiphops_xml(sl, db)?.as_bytes())
}

pub fn import_hiphops_xml(path: &Path) -> Result<(ShortList, FailureDatabase), InterchangeError> {
    from_hiphops_xml(&read(path)?)
}

// ---- CSV ----

/// Rows of `cutset_index,event_id,model,…`, one per (cut set, event), with
/// the target, profile and warnings in leading `#` comment lines.
pub fn to_cft_csv(sl: &ShortList, db: &FailureDatabase) -> Result<String, InterchangeError> {
    let data = used_data(sl, db)?;
    let mut head = format!("# target: {}\n", sl.target);
    if let Some(p) = &sl.profile {
        head.push_str(&format!("# profile: {p}\n"));
    }
    for warn in &sl.warnings {
        let members: Vec<String> = warn.cut_sets.iter().map(|i| i.to_string()).collect();
        head.push_str(&format!(
            "# warning: {}|{}|{}\n",
            warning_kind_str(warn.kind),
            members.join(" "),
            warn.condition
        ));
    }
    let mut w = csv::Writer::from_writer(head.into_bytes());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for (i, cs) in sl.cut_sets.iter().enumerate() {
        let index = (i + 1).to_string();
        if cs.is_empty() {
            w.write_record([index.as_str(), "", "", "", "", "", ""]).map_err(csv_err)?;
        }
        for id in cs.event_ids() {
            let cells = ModelRow::from_model(data.get(&id).expect("restricted to used ids")).cells();
            let mut rec = vec![index.as_str(), id.as_str()];
            rec.extend(cells.iter().map(String::as_str));
            w.write_record(rec).map_err(csv_err)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

pub fn from_cft_csv(text: &str) -> Result<(ShortList, FailureDatabase), InterchangeError> {
    let mut target = None;
    let mut profile = None;
    let mut warnings = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        if let Some(t) = body.strip_prefix("target:") {
            let (net, mode) = t
                .trim()
                .rsplit_once('.')
                .ok_or_else(|| csv_err(format!("bad target line `{line}`")))?;
            target = Some(Target {
                net: net.to_string(),
                mode: mode.parse().map_err(csv_err)?,
            });
        } else if let Some(p) = body.strip_prefix("profile:") {
            profile = Some(p.trim().to_string());
        } else if let Some(wl) = body.strip_prefix("warning:") {
            let mut parts = wl.trim_start().splitn(3, '|');
            let (kind, members, condition) = (parts.next(), parts.next(), parts.next());
            let (Some(kind), Some(members), Some(condition)) = (kind, members, condition) else {
                return Err(csv_err(format!("bad warning line `{line}`")));
            };
            warnings.push(Warning {
                kind: warning_kind(kind).ok_or_else(|| csv_err(format!("unknown warning kind {kind}")))?,
                condition: condition.to_string(),
                cut_sets: members
                    .split_whitespace()
                    .map(|m| m.parse().map_err(csv_err))
                    .collect::<Result<_, _>>()?,
            });
        }
    }
    let target = target.ok_or_else(|| csv_err("missing `# target:` line"))?;

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(csv_err(format!("expected header `{}`", CSV_HEADER.join(","))));
    }
    let mut db = FailureDatabase::default();
    let mut groups: BTreeMap<usize, Vec<ChannelLiteral>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |m: String| csv_err(format!("line {line}: {m}"));
        let cells: Vec<&str> = rec.iter().collect();
        let index: usize = cells[0].parse().map_err(|_| bad(format!("bad cutset_index `{}`", cells[0])))?;
        let group = groups.entry(index).or_default();
        if cells[1].is_empty() {
            continue;
        }
        let id = cells[1];
        let model = ModelRow::parse(&cells[2..]).and_then(|r| r.to_model()).map_err(bad)?;
        match db.get(id) {
            Some(prev) if *prev != model => return Err(bad(format!("conflicting data for {id}"))),
            Some(_) => {}
            None => {
                db.insert(id, model);
            }
        }
        group.push(id.parse().map_err(|e| bad(format!("{e}")))?);
    }
    if groups.keys().copied().ne(1..=groups.len()) {
        return Err(csv_err("cut set indices must run 1..n"));
    }
    Ok((
        ShortList {
            target,
            profile,
            cut_sets: groups.into_values().map(CutSet::new).collect(),
            warnings,
        },
        db,
    ))
}

pub fn export_cft_csv(sl: &ShortList, db: &FailureDatabase, path: &Path) -> Result<(), InterchangeError> {
    write_atomic(path, to_cft_csv(sl, db)?.as_bytes())
}

pub fn import_cft_csv(path: &Path) -> Result<(ShortList, FailureDatabase), InterchangeError> {
    from_cft_csv(&read(path)?)
}
