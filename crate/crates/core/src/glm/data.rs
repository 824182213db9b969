use nalgebra::{DMatrix, DVector};

use super::Family;
use crate::error::{Error, Result};

/// One GLM problem: response, design, offsets and prior weights.
///
/// For the binomial family `y` holds proportions and `weights` the trial
/// counts, so `y·weights` are the successes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub weights: DVector<f64>,
}

impl ModelData {
    /// Validates shapes, finiteness, positive weights and full column rank.
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, offset: Option<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        let p = x.ncols();
        if x.nrows() != n {
            return Err(Error::Design(format!("design has {} rows but y has {n}", x.nrows())));
        }
        if p == 0 {
            return Err(Error::Design("design has no columns".into()));
        }
        if n < p {
            return Err(Error::Design(format!("n = {n} < p = {p}")));
        }
        let offset = offset.unwrap_or_else(|| vec![0.0; n]);
        let weights = weights.unwrap_or_else(|| vec![1.0; n]);
        if offset.len() != n || weights.len() != n {
            return Err(Error::Design("offset/weights length differs from y".into()));
        }
        if y.iter().chain(&offset).chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite value in y, X or offset".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Domain("prior weights must be positive".into()));
        }
        let rank = numeric_rank(&x);
        if rank < p {
            return Err(Error::Design(format!("design matrix has rank {rank} < {p}")));
        }
        Ok(Self { y: DVector::from_vec(y), x, offset: DVector::from_vec(offset), weights: DVector::from_vec(weights) })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Family-specific response checks.
    pub fn check_family(&self, family: Family) -> Result<()> {
        for (i, (&y, &a)) in self.y.iter().zip(self.weights.iter()).enumerate() {
            let ok = match family {
                Family::Gaussian => true,
                Family::Poisson => y >= 0.0 && y.fract() == 0.0,
                Family::Binomial => {
                    let k = y * a;
                    (0.0..=1.0).contains(&y) && (k - k.round()).abs() < 1e-8
                }
                Family::Gamma => y > 0.0,
            };
            if !ok {
                return Err(Error::Domain(format!("row {i}: y = {y} invalid for {} family", family.name())));
            }
        }
        Ok(())
    }

    /// A copy with a different response vector.
    pub fn with_response(&self, y: Vec<f64>) -> Self {
        Self { y: DVector::from_vec(y), ..self.clone() }
    }
}

/// Column rank from singular values relative to the largest.
pub(crate) fn numeric_rank(x: &DMatrix<f64>) -> usize {
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    let tol = max * 1e-10 * x.nrows().max(x.ncols()) as f64;
    sv.iter().filter(|&&s| s > tol).count()
}
