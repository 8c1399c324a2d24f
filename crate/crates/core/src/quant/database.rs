//! Failure data keyed by basic-event id, with a flat CSV form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{event_measures, FailureModel, Measures, QuantConfig, QuantError};

pub(crate) const DB_HEADER: [&str; 6] = [
    "event_id",
    "model",
    "p",
    "lambda_per_hour",
    "mttr_hours",
    "tau_hours",
];

#[derive(Debug, Error)]
pub enum DatabaseError {
    #[error("failure data line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("failure data: {0}")]
    Csv(#[from] csv::Error),
    #[error("failure data: duplicate event `{0}`")]
    Duplicate(String),
}

/// Basic-event failure models. Ids are channel literals such as `IW512:HI`
/// or component events such as `IR4.IRDU`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FailureDatabase {
    events: BTreeMap<String, FailureModel>,
}

/// One CSV row; unused parameters are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ModelRow {
    pub model: String,
    pub p: Option<f64>,
    pub lambda_per_hour: Option<f64>,
    pub mttr_hours: Option<f64>,
    pub tau_hours: Option<f64>,
}

impl ModelRow {
    pub fn from_model(m: &FailureModel) -> Self {
        let mut row = ModelRow {
            model: m.name().to_string(),
            p: None,
            lambda_per_hour: None,
            mttr_hours: None,
            tau_hours: None,
        };
        match *m {
            FailureModel::Fixed { p } => row.p = Some(p),
            FailureModel::Rate { lambda, mttr } => {
                row.lambda_per_hour = Some(lambda);
                row.mttr_hours = Some(mttr);
            }
            FailureModel::Dormant { lambda, tau } => {
                row.lambda_per_hour = Some(lambda);
                row.tau_hours = Some(tau);
            }
        }
        row
    }

    pub fn to_model(&self) -> Result<FailureModel, String> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| format!("{} needs {name}", self.model));
        let m = match self.model.trim() {
            "FIXED" => FailureModel::Fixed { p: need(self.p, "p")? },
            "RATE" => FailureModel::Rate {
                lambda: need(self.lambda_per_hour, "lambda_per_hour")?,
                mttr: need(self.mttr_hours, "mttr_hours")?,
            },
            "DORMANT" => FailureModel::Dormant {
                lambda: need(self.lambda_per_hour, "lambda_per_hour")?,
                tau: need(self.tau_hours, "tau_hours")?,
            },
            other => return Err(format!("unknown model `{other}`")),
        };
        m.validate()?;
        Ok(m)
    }

    /// Cells in header order after `event_id`, full precision.
    pub fn cells(&self) -> [String; 5] {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.model.clone(),
            num(self.p),
            num(self.lambda_per_hour),
            num(self.mttr_hours),
            num(self.tau_hours),
        ]
    }

    /// Parses the five model cells (trimmed; empty means absent).
    pub fn parse(cells: &[&str]) -> Result<Self, String> {
        let num = |s: &str, name: &str| -> Result<Option<f64>, String> {
            let s = s.trim();
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| format!("{name} `{s}` is not a number"))
            }
        };
        if cells.len() != 5 {
            return Err(format!("expected 5 model columns, got {}", cells.len()));
        }
        Ok(ModelRow {
            model: cells[0].trim().to_string(),
            p: num(cells[1], "p")?,
            lambda_per_hour: num(cells[2], "lambda_per_hour")?,
            mttr_hours: num(cells[3], "mttr_hours")?,
            tau_hours: num(cells[4], "tau_hours")?,
        })
    }
}

impl FailureDatabase {
    pub fn insert(&mut self, id: impl Into<String>, m: FailureModel) -> Option<FailureModel> {
        self.events.insert(id.into(), m)
    }

    pub fn get(&self, id: &str) -> Option<&FailureModel> {
        self.events.get(id)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FailureModel)> {
        self.events.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Adds every entry of `other`, replacing duplicates.
    pub fn extend(&mut self, other: &FailureDatabase) {
        for (k, v) in &other.events {
            self.events.insert(k.clone(), *v);
        }
    }

    /// The entries used by `ids`, or the first missing id.
    pub fn restrict<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<FailureDatabase, QuantError> {
        let mut out = FailureDatabase::default();
        for id in ids {
            let m = self.get(id).ok_or_else(|| QuantError::MissingData(id.to_string()))?;
            out.insert(id, *m);
        }
        Ok(out)
    }

    pub fn measures(&self, id: &str, cfg: &QuantConfig) -> Result<Measures, QuantError> {
        let m = self.get(id).ok_or_else(|| QuantError::MissingData(id.to_string()))?;
        m.validate().map_err(|message| QuantError::InvalidModel {
            event: id.to_string(),
            message,
        })?;
        Ok(event_measures(m, cfg))
    }

    pub fn from_csv(text: &str) -> Result<Self, DatabaseError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != DB_HEADER {
            return Err(DatabaseError::Row {
                line: 1,
                message: format!("expected header `{}`", DB_HEADER.join(",")),
            });
        }
        let mut db = FailureDatabase::default();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let cells: Vec<&str> = rec.iter().collect();
            let id = cells[0].to_string();
            let model = ModelRow::parse(&cells[1..])
                .and_then(|r| r.to_model())
                .map_err(|message| DatabaseError::Row { line, message })?;
            if db.insert(id.clone(), model).is_some() {
                return Err(DatabaseError::Duplicate(id));
            }
        }
        Ok(db)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(DB_HEADER).expect("in-memory write");
        for (id, m) in &self.events {
            let cells = ModelRow::from_model(m).cells();
            let mut rec = vec![id.as_str()];
            rec.extend(cells.iter().map(String::as_str));
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_lossless() {
        let mut db = FailureDatabase::default();
        db.insert("IW512:HEALTHY", FailureModel::Fixed { p: 0.999 });
        db.insert("IW512:FAULTY", FailureModel::Rate { lambda: 2.5e-7, mttr: 8.0 });
        db.insert("IW512:HI", FailureModel::Dormant { lambda: 1.0 / 3.0 * 1e-7, tau: 17520.0 });
        let text = db.to_csv();
        assert!(text.starts_with("event_id,model,p,lambda_per_hour,mttr_hours,tau_hours\n"));
        assert!(text.contains("IW512:HEALTHY,FIXED,0.999,,,\n"));
        assert_eq!(FailureDatabase::from_csv(&text).unwrap(), db);
    }

    #[test]
    fn bad_rows_are_rejected() {
        let head = "event_id,model,p,lambda_per_hour,mttr_hours,tau_hours\n";
        for row in ["A,FIXED,1.5,,,", "A,RATE,,1e-6,,", "A,WEIBULL,,,,", "A,DORMANT,,x,,1"] {
            let err = FailureDatabase::from_csv(&format!("{head}{row}\n")).unwrap_err();
            assert!(matches!(err, DatabaseError::Row { line: 2, .. }), "{row}: {err}");
        }
        assert!(matches!(
            FailureDatabase::from_csv(&format!("{head}A,FIXED,0.1,,,\nA,FIXED,0.2,,,\n")),
            Err(DatabaseError::Duplicate(_))
        ));
    }
}
