use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ObservationModel;
use crate::error::{param, Result};
use crate::rng::ChainRng;

/// `n` observations of length `obs_dim`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub model_id: String,
    pub obs_dim: usize,
    pub observations: Vec<f64>,
    pub theta_star: Vec<f64>,
    pub seed: u64,
}

/// Sidecar written next to an exported dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub model_id: String,
    pub theta_star: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

/// `n` i.i.d. draws from `π_θ★`, deterministic in `seed`.
pub fn sample_dataset<M: ObservationModel + ?Sized>(model: &M, theta_star: &[f64], n: usize, seed: u64) -> Result<Dataset> {
    if theta_star.len() != model.param_dim() {
        return param(format!(
            "theta_star has length {} but the model has dimension {}",
            theta_star.len(),
            model.param_dim()
        ));
    }
    let mut rng = ChainRng::new(seed);
    let observations = model.simulate(theta_star, n, &mut rng)?;
    Ok(Dataset {
        model_id: model.model_id().to_string(),
        obs_dim: model.obs_dim(),
        observations,
        theta_star: theta_star.to_vec(),
        seed,
    })
}

impl Dataset {
    /// A dataset from explicit rows, for user-supplied data.
    pub fn from_rows(model_id: &str, rows: &[Vec<f64>], theta_star: Vec<f64>, seed: u64) -> Result<Self> {
        let obs_dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != obs_dim) {
            return param("observation rows have inconsistent lengths");
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return param("observations must be finite");
        }
        Ok(Self {
            model_id: model_id.to_string(),
            obs_dim,
            observations: rows.concat(),
            theta_star,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len().checked_div(self.obs_dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.observations.chunks_exact(self.obs_dim.max(1))
    }

    /// Empirical mean of the observation rows.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut acc = crate::numeric::CompensatedSum::new(self.obs_dim);
        self.rows().for_each(|r| acc.add(r));
        acc.mean()
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            model_id: self.model_id.clone(),
            theta_star: self.theta_star.clone(),
            n: self.len(),
            seed: self.seed,
        }
    }

    /// Re-simulates from the manifest fields.
    pub fn regenerate<M: ObservationModel + ?Sized>(&self, model: &M) -> Result<Self> {
        if model.model_id() != self.model_id {
            return param(format!("dataset was generated by {}, not {}", self.model_id, model.model_id()));
        }
        sample_dataset(model, &self.theta_star, self.len(), self.seed)
    }

    /// Writes `path` (CSV with header `xi_0,…`) and `path` + `.json`.
    pub fn export(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record((0..self.obs_dim).map(|j| format!("xi_{j}")))?;
        for row in self.rows() {
            w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
        std::fs::write(sidecar(path), serde_json::to_vec_pretty(&self.manifest())?)?;
        Ok(())
    }

    pub fn import(path: &Path) -> Result<Self> {
        let manifest: DatasetManifest = serde_json::from_slice(&std::fs::read(sidecar(path))?)?;
        let mut r = csv::Reader::from_path(path)?;
        let obs_dim = r.headers()?.len();
        let mut observations = Vec::with_capacity(manifest.n * obs_dim);
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| crate::Error::Parameter(format!("invalid number {field:?} in dataset")))?;
                if !v.is_finite() {
                    return param("observations must be finite");
                }
                observations.push(v);
            }
        }
        let ds = Self {
            model_id: manifest.model_id,
            obs_dim,
            observations,
            theta_star: manifest.theta_star,
            seed: manifest.seed,
        };
        if ds.len() != manifest.n {
            return param(format!("sidecar declares n = {} but the file has {} rows", manifest.n, ds.len()));
        }
        Ok(ds)
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{GaussianLocationModel, LogisticModel, PPowerLocationModel};

    #[test]
    fn gaussian_reproducible_and_centered() {
        let m = GaussianLocationModel::new(1, 1.0).unwrap();
        let a = sample_dataset(&m, &[0.0], 3, 42).unwrap();
        let b = sample_dataset(&m, &[0.0], 3, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let big = sample_dataset(&m, &[0.0], 1_000_000, 1).unwrap();
        assert!(big.mean_row()[0].abs() < 4e-3);
    }

    #[test]
    fn shifted_gaussian_mean_within_four_se() {
        let m = GaussianLocationModel::new(1, 1.0).unwrap();
        let ds = sample_dataset(&m, &[5.0], 100_000, 7).unwrap();
        assert!((ds.mean_row()[0] - 5.0).abs() < 4.0 * (1.0f64 / 100_000.0).sqrt());
    }

    #[test]
    fn symmetric_logistic_labels() {
        let m = LogisticModel::new(2, 0.0, vec![vec![1.0, 0.0]]).unwrap();
        let n = 10_000;
        let ds = sample_dataset(&m, &[0.0, 0.0], n, 3).unwrap();
        let pos = ds.rows().filter(|r| r[2] > 0.0).count() as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((pos / n as f64 - 0.5).abs() <= 3.0 * se);
    }

    #[test]
    fn p_power_has_no_simulator() {
        let m = PPowerLocationModel::new(1, 0.75).unwrap();
        assert!(matches!(sample_dataset(&m, &[0.0], 3, 1), Err(crate::Error::Capability(_))));
    }

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let m = LogisticModel::new(2, 0.5, vec![vec![1.0, -0.25], vec![0.3, 2.0]]).unwrap();
        let ds = sample_dataset(&m, &[0.4, -1.0], 17, 9).unwrap();
        ds.export(&path).unwrap();
        let back = Dataset::import(&path).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.regenerate(&m).unwrap(), ds);
    }
}
