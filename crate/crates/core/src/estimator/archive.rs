use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::KernelModel;
use crate::error::{Error, Result};
use crate::kendall::KernelMode;
use crate::ranking::{ItemUniverse, TiedRanking};

const FORMAT_TAG: &str = "rankdens-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredRanking {
    ranking: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<i32>>,
}

/// JSON form of a [`KernelModel`]. The estimator is memory-based, so the
/// archive is just the training data and kernel settings; loading re-fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    format: String,
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    bandwidth: f64,
    mode: KernelMode,
    training: Vec<StoredRanking>,
}

impl ModelArchive {
    pub fn from_model(model: &KernelModel) -> Result<Self> {
        let universe = model.universe();
        if let Some(labels) = universe.labels() {
            if let Some(bad) = labels
                .iter()
                .find(|l| l.contains(['|', ',', '≺']) || l.trim() != l.as_str() || l.is_empty())
            {
                return Err(Error::InvalidArgument(format!(
                    "label {bad:?} cannot be written in ranking notation"
                )));
            }
        }
        Ok(ModelArchive {
            format: FORMAT_TAG.to_string(),
            size: universe.size(),
            labels: universe.labels().map(<[String]>::to_vec),
            bandwidth: model.bandwidth(),
            mode: model.mode(),
            training: model
                .training()
                .iter()
                .map(|s| StoredRanking {
                    ranking: s.to_string(),
                    levels: s.levels().map(<[i32]>::to_vec),
                })
                .collect(),
        })
    }

    pub fn into_model(self) -> Result<KernelModel> {
        if self.format != FORMAT_TAG {
            return Err(Error::Parse(format!("unknown model format {:?}", self.format)));
        }
        let universe = match self.labels {
            Some(labels) => {
                if labels.len() != self.size {
                    return Err(Error::SizeMismatch(self.size, labels.len()));
                }
                ItemUniverse::with_labels(labels)?
            }
            None => ItemUniverse::new(self.size)?,
        };
        let training = self
            .training
            .into_iter()
            .map(|s| {
                let r = TiedRanking::parse(&s.ranking, &universe)?;
                match s.levels {
                    Some(lv) => TiedRanking::with_levels(&universe, r.groups().to_vec(), lv),
                    None => Ok(r),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        KernelModel::fit(training, self.bandwidth, self.mode)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("archive serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(model: &KernelModel, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, Self::from_model(model)?.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<KernelModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)?.into_model()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_estimates() {
        let u = ItemUniverse::with_labels(["a", "b", "c", "d"]).unwrap();
        let data = vec![
            TiedRanking::with_levels(&u, vec![vec![0, 2], vec![1]], vec![5, 2]).unwrap(),
            TiedRanking::parse("d | a", &u).unwrap(),
        ];
        let model = KernelModel::fit(data, 4.5, KernelMode::ExactSupport).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        ModelArchive::save(&model, &path).unwrap();
        let back = ModelArchive::load(&path).unwrap();
        assert_eq!(back.training(), model.training());
        assert_eq!(back.bandwidth(), 4.5);
        assert_eq!(back.mode(), KernelMode::ExactSupport);
        let e = TiedRanking::parse("b|c", &u).unwrap();
        assert_eq!(back.event_prob(&e).unwrap(), model.event_prob(&e).unwrap());
    }

    #[test]
    fn rejects_unknown_format_and_bad_labels() {
        let mut text = {
            let u = ItemUniverse::new(3).unwrap();
            let m = KernelModel::fit_default(vec![TiedRanking::parse("1|2", &u).unwrap()]).unwrap();
            ModelArchive::from_model(&m).unwrap().to_json()
        };
        text = text.replace(FORMAT_TAG, "other/9");
        assert!(ModelArchive::from_json(&text).unwrap().into_model().is_err());
        let u = ItemUniverse::with_labels(["x|y", "z"]).unwrap();
        let m = KernelModel::fit_default(vec![TiedRanking::chain(&u, &[0, 1]).unwrap()]).unwrap();
        assert!(ModelArchive::from_model(&m).is_err());
    }
}
