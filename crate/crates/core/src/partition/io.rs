//! JSON form of a partition: grid, threshold and one record per cube.

use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeId, GridKind, GridScheme, Partition};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::rational::format_rational;

use super::adaptive::GoodPartitionResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeRecord {
    pub level: u32,
    pub coords: Vec<u64>,
    /// `log2 J(Q)`; `null` for zero.
    #[serde(default)]
    pub value_log2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionDoc {
    pub dim: usize,
    pub grid: String,
    /// Exact threshold when known, else `2^log2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_log2: Option<f64>,
    pub cubes: Vec<CubeRecord>,
}

pub fn grid_from_name(name: &str, dim: usize) -> Result<GridScheme> {
    match name {
        "classical" => Ok(GridScheme::classical(dim)),
        "interior" => Ok(GridScheme::interior(dim)),
        other => Err(Error::InvalidArgument(format!(
            "unknown grid scheme {other:?}"
        ))),
    }
}

impl PartitionDoc {
    pub fn from_partition(p: &Partition, values_log2: Option<&[f64]>) -> Result<Self> {
        if matches!(p.grid.kind(), GridKind::Predicate(_)) {
            return Err(Error::InvalidArgument(
                "predicate grids cannot be serialised".into(),
            ));
        }
        let cubes = p
            .cubes
            .iter()
            .enumerate()
            .map(|(i, q)| CubeRecord {
                level: q.level,
                coords: q.coords.clone(),
                value_log2: values_log2.map(|v| v[i]).filter(|v| v.is_finite()),
            })
            .collect();
        Ok(PartitionDoc {
            dim: p.grid.dim(),
            grid: p.grid.name().into(),
            threshold: None,
            threshold_log2: None,
            cubes,
        })
    }

    pub fn from_result<T: Real>(r: &GoodPartitionResult<T>) -> Result<Self> {
        let values: Vec<f64> = r
            .values_log2
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect();
        let mut doc = Self::from_partition(&r.partition, Some(&values))?;
        doc.threshold = r.threshold.exact.as_ref().map(format_rational);
        doc.threshold_log2 = r.threshold.log2.to_f64();
        Ok(doc)
    }

    pub fn to_partition(&self) -> Result<Partition> {
        let grid = grid_from_name(&self.grid, self.dim)?;
        let cubes = self
            .cubes
            .iter()
            .map(|c| {
                let q = CubeId::new(c.level, c.coords.clone())?;
                if q.dim() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: q.dim(),
                    });
                }
                Ok(q)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition::new(cubes, grid))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("partition serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::adaptive_partition;
    use crate::setfn::{Evaluator, SetFunctionSpec, Threshold};

    #[test]
    fn round_trip() {
        let e = Evaluator::<f64>::new(&SetFunctionSpec::dyadic(2, &["0.1", "0.2", "0.3", "0.4"]))
            .unwrap();
        let g = GridScheme::classical(2);
        let r = adaptive_partition(&e, &g, &Threshold::parse("1/50").unwrap()).unwrap();
        let doc = PartitionDoc::from_result(&r).unwrap();
        let back = PartitionDoc::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_partition().unwrap().cubes, r.partition.cubes);
        assert_eq!(doc.threshold.as_deref(), Some("1/50"));
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(
            PartitionDoc::from_json(r#"{"dim":1,"grid":"classical","cubes":[],"extra":1}"#)
                .is_err()
        );
        let doc = PartitionDoc::from_json(
            r#"{"dim":2,"grid":"classical","cubes":[{"level":1,"coords":[0]}]}"#,
        )
        .unwrap();
        assert!(doc.to_partition().is_err());
        let doc = PartitionDoc::from_json(r#"{"dim":1,"grid":"hex","cubes":[]}"#).unwrap();
        assert!(doc.to_partition().is_err());
    }
}
