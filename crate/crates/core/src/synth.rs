//! Seeded synthetic datasets for tests, benches and demos.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};

/// Isotropic Gaussian blobs around `centers`, `n_per_class` points each.
/// Rows are grouped by class.
pub fn gaussian_blobs(centers: &Array2<f64>, n_per_class: usize, std: f64, seed: u64) -> Result<(Array2<f64>, Vec<usize>)> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::invalid(format!("blob std must be finite and non-negative, got {std}")));
    }
    let (k, d) = centers.dim();
    let noise = Normal::new(0.0, std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((k * n_per_class, d));
    let mut labels = Vec::with_capacity(k * n_per_class);
    for c in 0..k {
        for i in 0..n_per_class {
            let mut row = x.row_mut(c * n_per_class + i);
            for (v, &m) in row.iter_mut().zip(centers.row(c)) {
                *v = m + noise.sample(&mut rng);
            }
            labels.push(c);
        }
    }
    Ok((x, labels))
}

/// `k` well separated blobs in `d` dimensions with unit noise; centers are
/// drawn uniformly in a cube of side `spread`.
pub fn random_blobs(k: usize, n_per_class: usize, d: usize, spread: f64, seed: u64) -> Result<(Array2<f64>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let centers = Array2::from_shape_fn((k, d), |_| rng.random_range(-spread / 2.0..=spread / 2.0));
    gaussian_blobs(&centers, n_per_class, 1.0, seed)
}

/// Parameters of the complementary-views generator.
///
/// View `j` places the classes at scaled one-hot centers, except that class
/// `j + 1` shares the center of class `j`. Each view alone therefore confuses
/// one pair of classes, while every pair is separated in some other view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementaryBlobs {
    pub n_classes: usize,
    pub n_per_class: usize,
    pub view_dims: Vec<usize>,
    pub separation: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for ComplementaryBlobs {
    fn default() -> Self {
        ComplementaryBlobs {
            n_classes: 4,
            n_per_class: 50,
            view_dims: vec![8, 10, 12],
            separation: 8.0,
            noise: 1.0,
            seed: 7,
        }
    }
}

impl ComplementaryBlobs {
    pub fn validate(&self) -> Result<()> {
        let v = self.view_dims.len();
        if v == 0 || self.n_classes < 2 || self.n_per_class == 0 {
            return Err(Error::invalid("need at least one view, two classes and one sample per class"));
        }
        if v + 1 > self.n_classes {
            return Err(Error::invalid(format!(
                "{v} views need at least {} classes to collapse distinct pairs",
                v + 1
            )));
        }
        if let Some(&d) = self.view_dims.iter().find(|&&d| d < self.n_classes) {
            return Err(Error::invalid(format!("view dimension {d} is below the class count {}", self.n_classes)));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<MultiViewDataset> {
        self.validate()?;
        let k = self.n_classes;
        let mut views = Vec::with_capacity(self.view_dims.len());
        let mut labels = Vec::new();
        for (j, &d) in self.view_dims.iter().enumerate() {
            let centers = Array2::from_shape_fn((k, d), |(c, a)| {
                let c = if c == j + 1 { j } else { c };
                if a == c {
                    self.separation
                } else {
                    0.0
                }
            });
            let (x, y) = gaussian_blobs(&centers, self.n_per_class, self.noise, self.seed.wrapping_add(j as u64 * 1009))?;
            labels = y;
            views.push(ViewMatrix::new(x, format!("synthetic{j}"), "blobs")?);
        }
        MultiViewDataset::new(views, Some(labels), None)
    }
}
