//! Tabulated series with estimator summaries, written as CSV or JSON.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableKind {
    /// Abscissa `q`, one column `tau_n` per level.
    Tau,
    /// Abscissa `n`, one column `log2 N_alpha(n)` per `α`.
    #[serde(rename = "n-alpha")]
    NAlpha,
    /// Abscissa `log2 x`, columns `log2 M(x)` and `log M / log x`.
    #[serde(rename = "m-of-x")]
    MOfX,
    /// Abscissa `n` (budget), columns `log2 γ_n` and the witness data.
    Gamma,
    /// Abscissa `n` (level), per-level estimator inputs.
    Levels,
    /// Abscissa `α`, columns `F̄(α)` and `F̲(α)`.
    #[serde(rename = "f-alpha")]
    FAlpha,
    /// Abscissa `q`, column `c(q)`.
    #[serde(rename = "c-shifted")]
    CShifted,
}

impl TableKind {
    pub fn name(&self) -> &'static str {
        match self {
            TableKind::Tau => "tau",
            TableKind::NAlpha => "n-alpha",
            TableKind::MOfX => "m-of-x",
            TableKind::Gamma => "gamma",
            TableKind::Levels => "levels",
            TableKind::FAlpha => "f-alpha",
            TableKind::CShifted => "c-shifted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(with = "serde_floats")]
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub kind: TableKind,
    pub abscissa: String,
    #[serde(with = "serde_floats")]
    pub abscissae: Vec<f64>,
    pub columns: Vec<Column>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    #[serde(default)]
    pub summary: BTreeMap<String, f64>,
}

impl SpectrumTable {
    pub fn new(kind: TableKind, abscissa: &str, abscissae: Vec<f64>) -> Self {
        SpectrumTable {
            kind,
            abscissa: abscissa.to_string(),
            abscissae,
            columns: Vec::new(),
            meta: BTreeMap::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.columns.push(Column {
            name: name.into(),
            values,
        });
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    /// Abscissae strictly increasing and every column the right length.
    pub fn validate(&self) -> Result<()> {
        if self.abscissae.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "{} table: abscissae must be strictly increasing",
                self.kind.name()
            )));
        }
        if let Some(c) = self
            .columns
            .iter()
            .find(|c| c.values.len() != self.abscissae.len())
        {
            return Err(Error::InvalidArgument(format!(
                "column {} has {} rows, expected {}",
                c.name,
                c.values.len(),
                self.abscissae.len()
            )));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.validate()?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.abscissa.clone()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for (i, x) in self.abscissae.iter().enumerate() {
            let mut row = vec![fmt_num(*x)];
            row.extend(self.columns.iter().map(|c| fmt_num(c.values[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: SpectrumTable = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }
}

/// Floats with non-finite values written as strings, since JSON has no infinities.
mod serde_floats {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let cells: Vec<Cell> = v
            .iter()
            .map(|&x| {
                if x.is_finite() {
                    Cell::Num(x)
                } else {
                    Cell::Text(super::fmt_num(x))
                }
            })
            .collect();
        cells.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let cells = Vec::<Cell>::deserialize(d)?;
        cells
            .into_iter()
            .map(|c| match c {
                Cell::Num(x) => Ok(x),
                Cell::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
            })
            .collect()
    }
}

/// Shortest round-tripping form; infinities as `-inf`/`inf`.
pub fn fmt_num(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = SpectrumTable::new(TableKind::Tau, "q", vec![0.0, 0.5, 1.0]);
        t.push_column("tau_1", vec![2.0, 1.0, f64::NEG_INFINITY]);
        let s = t.to_csv_string().unwrap();
        assert_eq!(s, "q,tau_1\n0,2\n0.5,1\n1,-inf\n");
    }

    #[test]
    fn rejects_unordered() {
        let t = SpectrumTable::new(TableKind::Gamma, "n", vec![2.0, 2.0]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut t = SpectrumTable::new(TableKind::MOfX, "log2_x", vec![1.0, 2.0]);
        t.push_column("log2_m", vec![f64::NEG_INFINITY, 2.0]);
        t.summary.insert("slope".into(), 1.0);
        assert_eq!(SpectrumTable::from_json(&t.to_json()).unwrap(), t);
    }
}
