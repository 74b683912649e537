use crate::error::{Error, Result};

/// Numeric tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    /// Probability mass allowed to fall outside a truncated distribution.
    pub tail_tol: f64,
    /// Agreement required between the POVM route and the derivative oracle.
    pub oracle_tol: f64,
    /// Scalars within this band of zero are not counted as sign violations.
    pub zero_band: f64,
    /// Hard cap on the largest pair index of a truncated state.
    pub j_cap: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tail_tol: 1e-9,
            oracle_tol: 1e-10,
            zero_band: 1e-12,
            j_cap: 200,
        }
    }
}

impl Config {
    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn with_j_cap(mut self, j_cap: usize) -> Self {
        self.j_cap = j_cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0 && self.tail_tol <= 1e-3) {
            return Err(Error::domain(format!(
                "tail_tol must lie in (0, 1e-3], got {}",
                self.tail_tol
            )));
        }
        if !(self.oracle_tol > 0.0) || !(self.zero_band >= 0.0) {
            return Err(Error::domain("tolerances must be positive"));
        }
        if self.j_cap == 0 {
            return Err(Error::domain("j_cap must be at least 1"));
        }
        Ok(())
    }
}
