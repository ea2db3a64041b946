use num_complex::Complex64;

use super::MomentumGrid;
use crate::error::{Error, Result};

/// Tolerance on `|θ_0|² + ∫|Θ_0|² dk = 1`.
pub const NORM_TOL: f64 = 1e-8;

/// Continuum part of the initial state, sampled on the momentum grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Continuum {
    Zero,
    /// `Θ_0(-k) = Θ_0(k)`; samples at the positive nodes.
    Even(Vec<Complex64>),
    /// Samples at `+k_i` and `-k_i`.
    General {
        positive: Vec<Complex64>,
        negative: Vec<Complex64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub theta0: Complex64,
    pub continuum: Continuum,
}

impl InitialState {
    /// The particle starts in the bound state.
    pub fn bound() -> Self {
        InitialState {
            theta0: Complex64::new(1.0, 0.0),
            continuum: Continuum::Zero,
        }
    }

    pub fn is_even(&self) -> bool {
        !matches!(self.continuum, Continuum::General { .. })
    }

    /// `|θ_0|² + ∫_{-∞}^{∞} |Θ_0|² dk` on the grid.
    pub fn norm_sqr(&self, kgrid: &MomentumGrid) -> f64 {
        let weighted = |v: &[Complex64]| -> f64 {
            v.iter()
                .zip(&kgrid.weights)
                .map(|(a, w)| w * a.norm_sqr())
                .sum()
        };
        self.theta0.norm_sqr()
            + match &self.continuum {
                Continuum::Zero => 0.0,
                Continuum::Even(v) => 2.0 * weighted(v),
                Continuum::General { positive, negative } => {
                    weighted(positive) + weighted(negative)
                }
            }
    }

    pub fn validate(&self, kgrid: &MomentumGrid) -> Result<()> {
        let n = kgrid.len();
        let lengths_ok = match &self.continuum {
            Continuum::Zero => true,
            Continuum::Even(v) => v.len() == n,
            Continuum::General { positive, negative } => positive.len() == n && negative.len() == n,
        };
        if !lengths_ok {
            return Err(Error::Validation(format!(
                "continuum samples do not match the {n}-node momentum grid"
            )));
        }
        let norm = self.norm_sqr(kgrid);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!(
                "initial state has norm² {norm}, expected 1"
            )));
        }
        Ok(())
    }

    /// `Θ_0(k) + Θ_0(-k)` at the positive nodes, `None` for an empty continuum.
    pub fn even_part(&self) -> Option<Vec<Complex64>> {
        match &self.continuum {
            Continuum::Zero => None,
            Continuum::Even(v) => Some(v.iter().map(|a| 2.0 * a).collect()),
            Continuum::General { positive, negative } => {
                Some(positive.iter().zip(negative).map(|(a, b)| a + b).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_state_is_normalized() {
        let g = MomentumGrid::default();
        assert!(InitialState::bound().validate(&g).is_ok());
    }

    #[test]
    fn unnormalized_is_rejected() {
        let g = MomentumGrid::default();
        let s = InitialState {
            theta0: Complex64::new(0.9, 0.0),
            continuum: Continuum::Zero,
        };
        assert!(matches!(s.validate(&g), Err(Error::Validation(_))));
        let wrong_len = InitialState {
            theta0: Complex64::new(1.0, 0.0),
            continuum: Continuum::Even(vec![]),
        };
        assert!(wrong_len.validate(&g).is_err());
    }
}
