//! Finite surrogates for `t → ∞` and `x′ → x`.

use serde::{Deserialize, Serialize};

use crate::coupling::tail_indices;
use crate::error::{Error, Result};
use crate::markov::MonteCarlo;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitGridSpec {
    /// Strictly increasing evaluation times.
    pub t_grid: Vec<f64>,
    /// Upper share of `t_grid` standing in for `t → ∞`.
    pub tail_fraction: f64,
    /// Strictly decreasing radii standing in for `x′ → x`.
    pub probe_radii: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl LimitGridSpec {
    pub fn new(t_grid: Vec<f64>, probe_radii: Vec<f64>, samples: usize, seed: u64) -> Result<Self> {
        let g = LimitGridSpec {
            t_grid,
            tail_fraction: 0.5,
            probe_radii,
            samples,
            seed,
        };
        g.validate()?;
        Ok(g)
    }

    /// Integer times `1..=n`.
    pub fn steps(n: usize, probe_radii: Vec<f64>, samples: usize, seed: u64) -> Result<Self> {
        Self::new((1..=n).map(|k| k as f64).collect(), probe_radii, samples, seed)
    }

    pub fn with_tail_fraction(mut self, tail_fraction: f64) -> Result<Self> {
        self.tail_fraction = tail_fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::grid("grid.t_grid", "must not be empty"));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::grid("grid.t_grid", format!("time {t} is not a finite nonnegative number")));
        }
        if let Some(w) = self.t_grid.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::grid("grid.t_grid", format!("not strictly increasing at {} → {}", w[0], w[1])));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::grid("grid.tail_fraction", format!("{} is outside (0, 1]", self.tail_fraction)));
        }
        if let Some(r) = self.probe_radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::grid("grid.probe_radii", format!("radius {r} must be positive")));
        }
        if let Some(w) = self.probe_radii.windows(2).find(|w| w[1] >= w[0]) {
            return Err(Error::grid("grid.probe_radii", format!("not strictly decreasing at {} → {}", w[0], w[1])));
        }
        if self.samples < 2 {
            return Err(Error::grid("grid.samples", "need at least 2"));
        }
        Ok(())
    }

    pub fn tail_range(&self) -> std::ops::Range<usize> {
        tail_indices(self.t_grid.len(), self.tail_fraction)
    }

    pub fn tail_times(&self) -> &[f64] {
        &self.t_grid[self.tail_range()]
    }

    pub fn mc(&self) -> MonteCarlo {
        MonteCarlo::new(self.samples, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_fields() {
        let err = LimitGridSpec::new(vec![1.0, 1.0], vec![], 10, 0).unwrap_err();
        assert!(err.to_string().contains("grid.t_grid"));
        let err = LimitGridSpec::new(vec![1.0], vec![1.0, 2.0], 10, 0).unwrap_err();
        assert!(err.to_string().contains("grid.probe_radii"));
        let err = LimitGridSpec::new(vec![1.0], vec![], 10, 0).unwrap().with_tail_fraction(0.0).unwrap_err();
        assert!(err.to_string().contains("tail_fraction"));
    }

    #[test]
    fn tail_is_upper_half() {
        let g = LimitGridSpec::steps(10, vec![], 10, 0).unwrap();
        assert_eq!(g.tail_times(), &[6.0, 7.0, 8.0, 9.0, 10.0]);
    }
}
