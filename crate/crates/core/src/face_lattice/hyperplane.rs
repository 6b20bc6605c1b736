use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The affine hyperplane `{x : normal·x + offset = 0}`.
///
/// The positive side is where `normal·x + offset > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if !normal.iter().any(|a| a.abs() > 0.0) {
            return Err(Error::DegenerateHyperplane);
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offset
    }

    /// Same hyperplane with the sides swapped.
    pub fn flipped(&self) -> Self {
        Self {
            normal: self.normal.iter().map(|a| -a).collect(),
            offset: -self.offset,
        }
    }
}
