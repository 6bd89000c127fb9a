//! Run configuration: every tunable constant, grid and cap in one place.
//!
//! Loaded from TOML; missing keys take the defaults below. Key names for
//! the absolute constants keep their conventional capitalisation
//! (`C_regular`, `C_k`, ...).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{ORACLE_SIZE_CAP, TRANSFORM_SIZE_CAP};

/// How the almost-periodicity search finds translates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsMode {
    Sampled,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// Number of equispaced λ values in [1/2, 1) for regular dilates.
    pub lambda_points: usize,
    /// η grid is ±{1, ..., eta_steps} / (eta_steps · C · d).
    pub eta_steps: usize,
    /// ρ values in (0, 1] used to measure dimension.
    pub dimension_grid: Vec<f64>,
    /// Length of the descending dyadic grids used for ρ', ρ'' searches.
    pub rho_halvings: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            lambda_points: 64,
            eta_steps: 8,
            dimension_grid: (0..=24).map(|j| 2f64.powf(-(j as f64) / 4.0)).collect(),
            rho_halvings: 16,
        }
    }
}

impl Grids {
    pub fn lambda_grid(&self) -> Vec<f64> {
        let n = self.lambda_points.max(1);
        (0..n).map(|i| 0.5 + 0.5 * i as f64 / n as f64).collect()
    }

    /// Descending dyadic grid `start, start/2, ...`.
    pub fn dyadic(&self, start: f64) -> Vec<f64> {
        (0..=self.rho_halvings)
            .map(|j| start * 0.5f64.powi(j as i32))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub transform: usize,
    pub oracle: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            transform: TRANSFORM_SIZE_CAP,
            oracle: ORACLE_SIZE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Regularity constant for Bohr sets.
    #[serde(rename = "C_regular")]
    pub c_regular: f64,
    /// Density-increment constant of the main iteration.
    pub c_main: f64,
    /// Threshold on λ that stops the Katz-Koester iteration.
    pub c1_kk: f64,
    /// Required energy increment per unit ν.
    pub c_inc: f64,
    /// ρ' ≤ c_rho · ν α / d is the energy-increment width condition (reported).
    pub c_rho: f64,
    /// Sample-count constant: k = ⌈C_k ε⁻² p⌉.
    #[serde(rename = "C_k")]
    pub c_k: f64,
    /// Main iteration must finish within C_steps · log(2/α) steps.
    #[serde(rename = "C_steps")]
    pub c_steps: f64,
    /// Katz-Koester iteration must finish within ⌈C_iter / α⌉ steps.
    #[serde(rename = "C_iter")]
    pub c_iter: f64,
    #[serde(rename = "C_chang")]
    pub c_chang: f64,
    /// Exponent constant in the reported almost-periodicity bound (2K)^{-C ε⁻² p}.
    #[serde(rename = "C_cs")]
    pub c_cs: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Random disc-valued ω tested per dissociation candidate.
    pub omega_trials: usize,
    /// All sign patterns are tested while |Λ| is at most this.
    pub sign_pattern_limit: usize,
    /// Greedy dissociation scans at most this many spectrum elements.
    pub entropy_max_candidates: usize,
    /// Tuple draws before the sampled translate search gives up.
    pub cs_draws: usize,
    pub cs_mode: CsMode,
    pub max_steps: usize,
    pub kk_max_steps: usize,
    pub grids: Grids,
    pub caps: Caps,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            c_regular: 64.0,
            c_main: 1.0 / 8.0,
            c1_kk: 1.0 / 4.0,
            c_inc: 1.0 / 16.0,
            c_rho: 1.0 / 32.0,
            c_k: 16.0,
            c_steps: 16.0,
            c_iter: 8.0,
            c_chang: 8.0,
            c_cs: 1.0,
            tolerance: 1e-9,
            seed: 0,
            omega_trials: 32,
            sign_pattern_limit: 12,
            entropy_max_candidates: 64,
            cs_draws: 4,
            cs_mode: CsMode::Exhaustive,
            max_steps: 64,
            kk_max_steps: 256,
            grids: Grids::default(),
            caps: Caps::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("C_regular", self.c_regular),
            ("c_main", self.c_main),
            ("c1_kk", self.c1_kk),
            ("c_inc", self.c_inc),
            ("c_rho", self.c_rho),
            ("C_k", self.c_k),
            ("C_steps", self.c_steps),
            ("C_iter", self.c_iter),
            ("C_chang", self.c_chang),
            ("C_cs", self.c_cs),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-3) {
            return Err(Error::Config(format!(
                "tolerance must lie in (0, 1e-3], got {}",
                self.tolerance
            )));
        }
        if self.grids.dimension_grid.is_empty()
            || self
                .grids
                .dimension_grid
                .iter()
                .any(|&r| !(r > 0.0 && r <= 1.0))
        {
            return Err(Error::Config("dimension_grid must be a nonempty subset of (0, 1]".into()));
        }
        if self.grids.lambda_points == 0 || self.grids.eta_steps == 0 {
            return Err(Error::Config("grid sizes must be positive".into()));
        }
        if self.omega_trials == 0 || self.cs_draws == 0 || self.max_steps == 0 {
            return Err(Error::Config("trial and step counts must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        let g = Grids::default();
        let lg = g.lambda_grid();
        assert_eq!(lg.len(), 64);
        assert_eq!(lg[0], 0.5);
        assert!(lg.iter().all(|&l| (0.5..1.0).contains(&l)));
    }

    #[test]
    fn bad_values_rejected() {
        let mut c = RunConfig::default();
        c.tolerance = 0.1;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.c_main = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip_uses_conventional_names() {
        let s = serde_json::to_string(&RunConfig::default()).unwrap();
        assert!(s.contains("\"C_regular\":64.0"));
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, RunConfig::default());
        let partial: RunConfig = serde_json::from_str("{\"c_main\":0.25}").unwrap();
        assert_eq!(partial.c_main, 0.25);
        assert_eq!(partial.c_regular, 64.0);
    }
}
