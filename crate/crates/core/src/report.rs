//! Human-readable and JSON result reports. Numbers print in scientific
//! notation with three significant digits, so regenerated reports are
//! byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fbd::{serialize_program, Program};
use crate::fmr::ShortList;
use crate::quant::{
    quantify_shortlist, sif_pfd, top_measures, FailureDatabase, Measures, Method, QuantConfig, QuantError,
    TopMeasures,
};
use crate::system::{analyze_system, synthesize, SystemError, SystemModel, TopEvent};

/// `1.88E-03`.
pub fn sci3(x: f64) -> String {
    if x == 0.0 {
        return "0.00E+00".to_string();
    }
    let s = format!("{x:.2E}");
    let (mant, exp) = s.split_once('E').expect("E notation");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mant}E{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

/// SHA-256 of the canonical serialization, hex encoded.
pub fn program_hash(p: &Program) -> String {
    hex::encode(Sha256::digest(serialize_program(p).as_bytes()))
}

/// Top measures per method; `None` where a method does not apply (EXACT
/// beyond its event limit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measures: Option<Measures>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn all_methods(
    quantify: impl Fn(&QuantConfig) -> Result<TopMeasures, QuantError>,
    base: &QuantConfig,
) -> Result<(Vec<MethodResult>, Vec<Measures>), QuantError> {
    let mut per_set = Vec::new();
    let mut out = Vec::new();
    for method in Method::ALL {
        let cfg = QuantConfig { method, ..*base };
        match quantify(&cfg) {
            Ok(t) => {
                if method == Method::Ep {
                    per_set = t.cut_sets.clone();
                }
                out.push(MethodResult {
                    method,
                    measures: Some(Measures { q: t.q, w: t.w }),
                    note: None,
                });
            }
            Err(e @ QuantError::TooManyEvents { .. }) => out.push(MethodResult {
                method,
                measures: None,
                note: Some(e.to_string()),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok((out, per_set))
}

fn method_lines(out: &mut String, results: &[MethodResult]) {
    for r in results {
        match (&r.measures, &r.note) {
            (Some(m), _) => {
                let _ = writeln!(out, "  {:<6} Q = {}  W = {} /h", r.method.to_string().to_uppercase(), sci3(m.q), sci3(m.w));
            }
            (None, note) => {
                let _ = writeln!(
                    out,
                    "  {:<6} n/a ({})",
                    r.method.to_string().to_uppercase(),
                    note.as_deref().unwrap_or("not computed")
                );
            }
        }
    }
}

fn cut_set_table(out: &mut String, rows: &[(String, Measures)]) {
    let width = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(7).max(7);
    let _ = writeln!(out, "  {:>3}  {:<width$}  {:<8}  {:<8}", "no", "cut set", "Q", "W /h");
    for (i, (cs, m)) in rows.iter().enumerate() {
        let _ = writeln!(out, "  {:>3}  {:<width$}  {}  {}", i + 1, cs, sci3(m.q), sci3(m.w));
    }
}

/// Short list of one program target with its quantification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub program: String,
    pub program_hash: String,
    pub short_list: ShortList,
    pub risk_time_hours: f64,
    pub cut_set_measures: Vec<Measures>,
    pub top: Vec<MethodResult>,
}

impl AnalysisReport {
    pub fn build(p: &Program, sl: &ShortList, db: &FailureDatabase, cfg: &QuantConfig) -> Result<Self, QuantError> {
        let (top, cut_set_measures) = all_methods(|c| quantify_shortlist(sl, db, c), cfg)?;
        Ok(AnalysisReport {
            program: p.name.clone().unwrap_or_else(|| "unnamed".into()),
            program_hash: program_hash(p),
            short_list: sl.clone(),
            risk_time_hours: cfg.risk_time,
            cut_set_measures,
            top,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let sl = &self.short_list;
        let mut out = String::new();
        let _ = writeln!(out, "program: {} (sha256 {})", self.program, self.program_hash);
        let _ = write!(out, "target: {}", sl.target);
        if let Some(p) = &sl.profile {
            let _ = write!(out, " under profile {p}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "risk time: {} h", self.risk_time_hours);
        let _ = writeln!(out, "cut sets: {}", sl.cut_sets.len());
        let rows: Vec<(String, Measures)> = sl
            .cut_sets
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mark = if sl.is_flagged(i) { " (!)" } else { "" };
                (format!("{c}{mark}"), self.cut_set_measures[i])
            })
            .collect();
        cut_set_table(&mut out, &rows);
        let _ = writeln!(out, "top event:");
        method_lines(&mut out, &self.top);
        if sl.warnings.is_empty() {
            let _ = writeln!(out, "warnings: none");
        } else {
            let _ = writeln!(out, "warnings:");
            for w in &sl.warnings {
                let idx: Vec<String> = w.cut_sets.iter().map(|i| (i + 1).to_string()).collect();
                let kind = serde_json::to_value(w.kind).ok();
                let kind = kind.as_ref().and_then(|k| k.as_str()).unwrap_or("warning");
                let _ = writeln!(out, "  {kind}: {} (cut sets {})", w.condition, idx.join(", "));
            }
        }
        out
    }
}

/// One top event of a system model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopReport {
    pub top: String,
    pub cut_sets: Vec<Vec<String>>,
    pub cut_set_measures: Vec<Measures>,
    pub top_measures: Vec<MethodResult>,
    /// EP measures of the cut sets lying wholly within each subsystem;
    /// cut sets spanning several fall under `mixed`.
    pub subsystems: BTreeMap<String, Measures>,
    /// Sum of the subsystem unavailabilities.
    pub pfd_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub model: String,
    pub risk_time_hours: f64,
    pub tops: Vec<TopReport>,
}

impl SystemReport {
    pub fn build(
        m: &SystemModel,
        tops: &[TopEvent],
        db: &FailureDatabase,
        cfg: &QuantConfig,
    ) -> Result<Self, SystemError> {
        let subsystem_of = m.event_subsystems();
        let mut all_db = m.event_database();
        all_db.extend(db);
        let mut out = Vec::new();
        for top in tops {
            let cs = synthesize(m, top)?;
            let (top_measures_all, per_set) = all_methods(
                |c| analyze_system(m, top, db, c).map(|a| a.measures).map_err(|e| match e {
                    SystemError::Quant(q) => q,
                    other => QuantError::OutOfRange(other.to_string()),
                }),
                cfg,
            )?;
            let mut groups: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
            for c in &cs.cut_sets {
                let mut subs = c.iter().map(|e| subsystem_of.get(e).cloned().unwrap_or_else(|| "unassigned".into()));
                let first = subs.next().unwrap_or_else(|| "unassigned".into());
                let name = if subs.all(|s| s == first) { first } else { "mixed".to_string() };
                groups.entry(name).or_default().push(c.clone());
            }
            let ep = QuantConfig {
                method: Method::Ep,
                ..*cfg
            };
            let mut subsystems = BTreeMap::new();
            for (name, sets) in groups {
                let t = top_measures(&sets, &all_db, &ep)?;
                subsystems.insert(name, Measures { q: t.q, w: t.w });
            }
            let pfd_sum = sif_pfd(&subsystems.values().map(|m| m.q).collect::<Vec<_>>())?;
            out.push(TopReport {
                top: cs.top.clone(),
                cut_sets: cs.cut_sets,
                cut_set_measures: per_set,
                top_measures: top_measures_all,
                subsystems,
                pfd_sum,
            });
        }
        Ok(SystemReport {
            model: m.name.clone(),
            risk_time_hours: cfg.risk_time,
            tops: out,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "system: {}", self.model);
        let _ = writeln!(out, "risk time: {} h", self.risk_time_hours);
        for t in &self.tops {
            let _ = writeln!(out);
            let _ = writeln!(out, "top event {}: {} cut sets", t.top, t.cut_sets.len());
            let rows: Vec<(String, Measures)> = t
                .cut_sets
                .iter()
                .zip(&t.cut_set_measures)
                .map(|(c, m)| (c.join(" ∧ "), *m))
                .collect();
            cut_set_table(&mut out, &rows);
            let _ = writeln!(out, "subsystems (EP):");
            for (name, m) in &t.subsystems {
                let _ = writeln!(out, "  {name:<15} Q = {}  W = {} /h", sci3(m.q), sci3(m.w));
            }
            let _ = writeln!(out, "  {:<15} Q = {}", "sum", sci3(t.pfd_sum));
            let _ = writeln!(out, "top event:");
            method_lines(&mut out, &t.top_measures);
        }
        out
    }
}
