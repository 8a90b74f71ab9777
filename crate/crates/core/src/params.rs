//! Problem instance `-Δu = |x|^α u^p` on the unit ball of R^N.

use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};

/// Critical exponent `(N + 2 + 2α) / (N - 2)` above which no positive solution exists.
pub fn critical_exponent(n: usize, alpha: f64) -> Result<f64> {
    check_dimension(n)?;
    // alpha = 0 is the Lane-Emden limit; it is accepted here so the Sobolev
    // exponent can be recovered, but not by `HenonParams`.
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(HenonError::InvalidWeight(alpha));
    }
    let nf = n as f64;
    Ok((nf + 2.0 + 2.0 * alpha) / (nf - 2.0))
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 {
        return Err(HenonError::InvalidDimension(n));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenonParams {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub p_alpha: f64,
    /// Emden-Fowler parameter `(2(N-1) + α) / (N - 2)`.
    pub kappa: f64,
    /// `1 / ((N - 2)(N + α))`, the constant of the limit profile.
    pub c_alpha: f64,
}

impl HenonParams {
    /// Builds an instance without restricting `p`; the IVP is meaningful for
    /// any `p > 1`, including supercritical values.
    pub fn new(n: usize, alpha: f64, p: f64) -> Result<Self> {
        check_dimension(n)?;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(HenonError::InvalidWeight(alpha));
        }
        let p_alpha = critical_exponent(n, alpha)?;
        if !(p > 1.0) || !p.is_finite() {
            return Err(HenonError::InvalidExponent { p, p_alpha });
        }
        if alpha > 1.0 {
            log::warn!(
                "alpha = {alpha} > 1: the two-valued Morse index picture is only established for alpha in (0, 1]"
            );
        }
        let nf = n as f64;
        Ok(Self {
            n,
            alpha,
            p,
            p_alpha,
            kappa: (2.0 * (nf - 1.0) + alpha) / (nf - 2.0),
            c_alpha: 1.0 / ((nf - 2.0) * (nf + alpha)),
        })
    }

    /// Same as [`HenonParams::new`] but additionally requires `p < p_alpha`.
    pub fn subcritical(n: usize, alpha: f64, p: f64) -> Result<Self> {
        let params = Self::new(n, alpha, p)?;
        if p >= params.p_alpha {
            return Err(HenonError::InvalidExponent { p, p_alpha: params.p_alpha });
        }
        Ok(params)
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.n, self.alpha, p)
    }

    pub fn is_subcritical(&self) -> bool {
        self.p > 1.0 && self.p < self.p_alpha
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_exponent_values() {
        assert_eq!(critical_exponent(3, 1.0).unwrap(), 7.0);
        assert_eq!(critical_exponent(4, 0.0).unwrap(), 3.0);
        assert_eq!(critical_exponent(3, 2.0).unwrap(), 9.0);
    }

    #[test]
    fn critical_exponent_errors() {
        assert!(matches!(critical_exponent(2, 1.0), Err(HenonError::InvalidDimension(2))));
        assert!(matches!(critical_exponent(3, -0.5), Err(HenonError::InvalidWeight(_))));
        assert!(matches!(HenonParams::new(3, 0.0, 2.0), Err(HenonError::InvalidWeight(_))));
        assert!(matches!(HenonParams::new(3, 1.0, 1.0), Err(HenonError::InvalidExponent { .. })));
        assert!(HenonParams::subcritical(3, 1.0, 7.0).is_err());
    }

    #[test]
    fn derived_constants() {
        let prm = HenonParams::new(3, 1.0, 2.0).unwrap();
        assert_eq!(prm.kappa, 5.0);
        assert_eq!(prm.c_alpha, 0.25);
        for n in 3..9 {
            for &a in &[0.1, 0.5, 1.0, 3.0] {
                let prm = HenonParams::new(n, a, 1.5).unwrap();
                assert!(prm.kappa > 2.0);
                assert!(prm.c_alpha > 0.0);
            }
        }
    }
}
