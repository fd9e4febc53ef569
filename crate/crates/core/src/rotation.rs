//! Random-rotation feature augmentation for the axis-aligned baseline.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tree::Schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationSpec {
    /// Number of rotated copies.
    pub r: usize,
    pub seed: u64,
}

/// Haar-distributed rotation: QR of a Gaussian matrix with the signs of R's
/// diagonal pushed into Q, then one column flipped if needed so det = +1.
pub fn random_rotation<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(p, p, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if p > 0 && q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Rotations and the training ranges of the rotated columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomRotation {
    rotations: Vec<DMatrix<f64>>,
    ranges: Vec<(f64, f64)>,
}

impl RandomRotation {
    /// Draws `spec.r` rotations and records the rotated training ranges.
    pub fn fit<T: Real>(spec: &RotationSpec, train: &DesignMatrix<T>) -> Result<Self> {
        if spec.r == 0 {
            return Err(Error::Config("at least one rotation is required".into()));
        }
        let p = train.schema().p_cont;
        if p == 0 {
            return Err(Error::Config("rotations need continuous predictors".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let rotations = (0..spec.r).map(|_| random_rotation(p, &mut rng)).collect();
        Self::with_rotations(rotations, train)
    }

    /// Uses the given rotations (for example the identity) instead of random ones.
    pub fn with_rotations<T: Real>(rotations: Vec<DMatrix<f64>>, train: &DesignMatrix<T>) -> Result<Self> {
        let mut this = Self {
            rotations,
            ranges: Vec::new(),
        };
        let rotated = this.rotate(train)?;
        let width = this.width();
        this.ranges = (0..width)
            .map(|j| {
                (0..train.n()).map(|i| rotated[i * width + j]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
            })
            .collect();
        Ok(this)
    }

    pub fn rotations(&self) -> &[DMatrix<f64>] {
        &self.rotations
    }

    fn width(&self) -> usize {
        self.rotations.iter().map(|q| q.ncols()).sum()
    }

    /// Row-major `[X Q_1, ..., X Q_R]`.
    fn rotate<T: Real>(&self, design: &DesignMatrix<T>) -> Result<Vec<f64>> {
        let p = design.schema().p_cont;
        if self.rotations.iter().any(|q| q.nrows() != p) {
            return Err(Error::Input(format!("rotations expect {p} continuous predictors")));
        }
        let x = DMatrix::from_row_iterator(design.n(), p, design.continuous_block().iter().map(|v| v.as_f64()));
        let mut out = Vec::with_capacity(design.n() * self.width());
        let blocks: Vec<DMatrix<f64>> = self.rotations.iter().map(|q| &x * q).collect();
        for i in 0..design.n() {
            for b in &blocks {
                out.extend(b.row(i).iter().copied());
            }
        }
        Ok(out)
    }

    /// Rotated continuous block rescaled to `[-1, 1]` with the training
    /// ranges; the categorical block passes through unchanged.
    pub fn transform<T: Real>(&self, design: &DesignMatrix<T>) -> Result<DesignMatrix<T>> {
        let rotated = self.rotate(design)?;
        let width = self.width();
        let cont = rotated
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let (lo, hi) = self.ranges[k % width];
                T::lit(if hi > lo { 2.0 * (v - lo) / (hi - lo) - 1.0 } else { 0.0 })
            })
            .collect();
        let schema = Schema::new(width, design.schema().level_counts.clone());
        DesignMatrix::new(schema, cont, design.categorical_block().to_vec())
    }
}
