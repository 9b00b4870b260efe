use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::DerivativeMode;

/// Numerical thresholds used across the engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub pd_tol: f64,
    pub frame_tol: f64,
    /// Relative to the largest singular value of the pushforward.
    pub rank_tol: f64,
    pub align_tol: f64,
    pub sub_tol: f64,
    pub curv_tol: f64,
    pub oneill_tol: f64,
    pub inv_tol: f64,
    pub opt_tol: f64,
    pub struct_tol: f64,
    pub fit_tol: f64,
    pub xcheck_tol: f64,
    pub eq_tol: f64,
    pub gap_tol: f64,
    pub lemma_tol: f64,
    /// Largest admissible jump of the horizontal projector across a stencil.
    pub frame_jump: f64,
}

impl Tolerances {
    pub fn for_mode(mode: DerivativeMode) -> Self {
        let analytic = mode == DerivativeMode::Analytic;
        Tolerances {
            pd_tol: 1e-10,
            frame_tol: 1e-9,
            rank_tol: 1e-9,
            align_tol: 1e-10,
            sub_tol: 1e-8,
            curv_tol: if analytic { 1e-10 } else { 1e-6 },
            oneill_tol: if analytic { 1e-7 } else { 1e-5 },
            inv_tol: 1e-6,
            opt_tol: 1e-6,
            struct_tol: 1e-8,
            fit_tol: if analytic { 1e-7 } else { 1e-4 },
            xcheck_tol: 1e-5,
            eq_tol: 1e-6,
            gap_tol: 1e-7,
            lemma_tol: 1e-9,
            frame_jump: 0.1,
        }
    }

    /// Override a single tolerance by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance `{name}` must be positive, got {value}"
            )));
        }
        let slot = match name {
            "pd_tol" => &mut self.pd_tol,
            "frame_tol" => &mut self.frame_tol,
            "rank_tol" => &mut self.rank_tol,
            "align_tol" => &mut self.align_tol,
            "sub_tol" => &mut self.sub_tol,
            "curv_tol" => &mut self.curv_tol,
            "oneill_tol" => &mut self.oneill_tol,
            "inv_tol" => &mut self.inv_tol,
            "opt_tol" => &mut self.opt_tol,
            "struct_tol" => &mut self.struct_tol,
            "fit_tol" => &mut self.fit_tol,
            "xcheck_tol" => &mut self.xcheck_tol,
            "eq_tol" => &mut self.eq_tol,
            "gap_tol" => &mut self.gap_tol,
            "lemma_tol" => &mut self.lemma_tol,
            "frame_jump" => &mut self.frame_jump,
            _ => return Err(Error::InvalidArgument(format!("unknown tolerance `{name}`"))),
        };
        *slot = value;
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::for_mode(DerivativeMode::Analytic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_defaults() {
        let a = Tolerances::for_mode(DerivativeMode::Analytic);
        let d = Tolerances::for_mode(DerivativeMode::CentralDifference);
        assert_eq!(a.curv_tol, 1e-10);
        assert_eq!(d.curv_tol, 1e-6);
        assert_eq!(d.fit_tol, 1e-4);
        assert_eq!(a.eq_tol, d.eq_tol);
    }

    #[test]
    fn override_by_name() {
        let mut t = Tolerances::default();
        t.set("eq_tol", 1e-5).unwrap();
        assert_eq!(t.eq_tol, 1e-5);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("gap_tol", -1.0).is_err());
    }
}
