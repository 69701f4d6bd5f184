//! Partial and full colorings of matrix families.
//!
//! A partial fractional coloring is a point x ∈ [−1,1]ⁿ with a constant
//! fraction of coordinates at ±1 and ‖Σ xᵢAᵢ‖ ≤ Δ. We find one by solving
//!
//!   max ⟨x, g⟩   s.t.   ‖Σ xᵢAᵢ‖ ≤ Δ,  x ∈ [−1,1]ⁿ
//!
//! for uniformly random sign vectors g, retrying until enough coordinates
//! land on the boundary of the box. Full colorings compose partial rounds,
//! shrinking each still-fractional coordinate's matrix by its remaining
//! headroom, and finish small tails exhaustively.

mod driver;
mod solver;

pub use driver::{
    extract_dual_witness, full_coloring, partial_coloring, DualWitness, FullColoring,
    PartialOutcome, RoundRecord,
};
pub use solver::solve_partial_program;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{spectral_norm, MatrixFamily};

/// A point of the box with its integrality mask and recomputed discrepancy.
#[derive(Debug, Clone)]
pub struct Coloring {
    pub x: Vec<f64>,
    pub integral_mask: Vec<bool>,
    /// ‖Σ xᵢAᵢ‖, recomputed from `x` at construction.
    pub discrepancy: f64,
    /// The Δ bound this coloring was solved against.
    pub delta_used: f64,
    /// False when the solver ran out of its iteration budget before reaching
    /// stationarity; the coloring is still feasible.
    pub converged: bool,
}

impl Coloring {
    /// Clamp `x` into the box, recompute the discrepancy, and derive the
    /// integrality mask at the given tolerance.
    pub fn new(
        family: &MatrixFamily,
        x: Vec<f64>,
        delta_used: f64,
        int_tol: f64,
        converged: bool,
    ) -> Result<Self> {
        if x.len() != family.len() {
            return Err(Error::ShapeError(format!(
                "coloring has {} coordinates, family has {}",
                x.len(),
                family.len()
            )));
        }
        let x: Vec<f64> = x.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let integral_mask = x.iter().map(|v| v.abs() >= 1.0 - int_tol).collect();
        let discrepancy = spectral_norm(&family.weighted_sum(&x)?)?;
        Ok(Coloring {
            x,
            integral_mask,
            discrepancy,
            delta_used,
            converged,
        })
    }

    pub fn integral_count(&self) -> usize {
        self.integral_mask.iter().filter(|&&b| b).count()
    }

    pub fn integral_fraction(&self) -> f64 {
        self.integral_count() as f64 / self.x.len() as f64
    }
}

/// Solver and retry-loop parameters.
///
/// `beta` is the inverse temperature of the smoothed spectral norm; when
/// unset it defaults to log(4d) / (0.01 Δ) at solve time, which keeps the
/// smoothing gap below one percent of Δ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveParams {
    /// Multiplier C in the Δ formula.
    pub c_delta: f64,
    /// Required integral fraction per partial coloring.
    pub eps_frac: f64,
    /// |xᵢ| ≥ 1 − int_tol counts as integral.
    pub int_tol: f64,
    /// Relative feasibility slack.
    pub feas_tol: f64,
    pub beta: Option<f64>,
    pub max_iters: usize,
    /// Retry budget for the partial-coloring loop; defaults to 10n.
    pub max_retries: Option<usize>,
    /// Projected-gradient stationarity threshold (scaled by √n).
    pub stall_tol: f64,
    /// Full-coloring rounds with at most this many survivors are finished by
    /// exhaustive search.
    pub n_min: usize,
    pub seed: u64,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            c_delta: 8.0,
            eps_frac: 0.05,
            int_tol: 1e-4,
            feas_tol: 1e-6,
            beta: None,
            max_iters: 5000,
            max_retries: None,
            stall_tol: 1e-6,
            n_min: 12,
            seed: 0,
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_frac > 0.0 && self.eps_frac < 1.0) {
            return Err(Error::ConfigError(format!(
                "eps_frac must lie in (0, 1), got {}",
                self.eps_frac
            )));
        }
        for (name, v) in [
            ("c_delta", self.c_delta),
            ("int_tol", self.int_tol),
            ("feas_tol", self.feas_tol),
            ("stall_tol", self.stall_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::ConfigError(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return Err(Error::ConfigError(format!("beta must be positive, got {b}")));
            }
        }
        Ok(())
    }

    pub fn retries_for(&self, n: usize) -> usize {
        self.max_retries.unwrap_or(10 * n.max(1))
    }
}

/// Target discrepancy Δ = C ‖Σ Aᵢ²‖^{1/2} √(1 + log₊(Tr Σ Aᵢ² / (√n ‖Σ Aᵢ²‖))).
///
/// The log argument is the stable rank of Σ Aᵢ² over √n; when it drops below
/// one the log is clamped at zero, leaving the bare C ‖Σ Aᵢ²‖^{1/2} √1 term.
pub fn delta_target(family: &MatrixFamily, c: f64) -> Result<f64> {
    let norm = family.spectral_norm_of_sum();
    if norm <= 0.0 {
        return Err(Error::DegenerateFamily(
            "Σ Aᵢ² has zero spectral norm".into(),
        ));
    }
    let n = family.len() as f64;
    let log_arg = family.trace_of_sum() / (n.sqrt() * norm);
    Ok(c * norm.sqrt() * (1.0 + log_arg.ln().max(0.0)).sqrt())
}

/// ‖Σ xᵢAᵢ‖ for an arbitrary weight vector.
pub fn evaluate_discrepancy(family: &MatrixFamily, x: &[f64]) -> Result<f64> {
    spectral_norm(&family.weighted_sum(x)?)
}

/// Exhaustive minimum of ‖Σ sᵢAᵢ‖ over s ∈ {±1}ⁿ, by Gray-code enumeration.
/// Guarded to n ≤ 24.
pub fn exhaustive_minimum(family: &MatrixFamily) -> Result<(f64, Vec<f64>)> {
    let n = family.len();
    if n > 24 {
        return Err(Error::SizeError(format!(
            "exhaustive search over 2^{n} sign patterns refused"
        )));
    }
    let mut signs = vec![1.0; n];
    let mut m = family.weighted_sum(&signs)?;
    let mut best = spectral_norm(&m)?;
    let mut best_signs = signs.clone();
    let total: u64 = 1 << n;
    for k in 1..total {
        // Gray code: flip the sign at the lowest set bit of k
        let flip = k.trailing_zeros() as usize;
        signs[flip] = -signs[flip];
        m.axpy(2.0 * signs[flip], family.matrix(flip));
        let norm = spectral_norm(&m)?;
        if norm < best {
            best = norm;
            best_signs = signs.clone();
        }
    }
    Ok((best, best_signs))
}

/// Serialized coloring artifact, including the per-round trace for full
/// colorings (a single round entry for plain partial colorings).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColoringRecord {
    pub x: Vec<f64>,
    pub integral_mask: Vec<bool>,
    pub discrepancy: f64,
    pub delta_used: f64,
    pub rounds: Vec<RoundRecord>,
}

impl ColoringRecord {
    pub fn from_partial(outcome: &PartialOutcome) -> Self {
        ColoringRecord {
            x: outcome.coloring.x.clone(),
            integral_mask: outcome.coloring.integral_mask.clone(),
            discrepancy: outcome.coloring.discrepancy,
            delta_used: outcome.coloring.delta_used,
            rounds: vec![RoundRecord {
                n_remaining: outcome.coloring.x.len(),
                delta: outcome.coloring.delta_used,
                retries: outcome.retries,
            }],
        }
    }

    pub fn from_full(full: &FullColoring) -> Self {
        ColoringRecord {
            x: full.signs.clone(),
            integral_mask: vec![true; full.signs.len()],
            discrepancy: full.discrepancy,
            delta_used: full.delta_used,
            rounds: full.rounds.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("coloring serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{gen_family, FamilyKind, SymMatrix};

    fn basis_family(n: usize, d: usize) -> MatrixFamily {
        let mats = (0..n)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i % d] = 1.0;
                SymMatrix::diag(&e)
            })
            .collect();
        MatrixFamily::new(mats).unwrap()
    }

    #[test]
    fn delta_target_clamps_small_stable_rank() {
        // n copies of e₁e₁ᵀ: ‖Σ‖ = n, Tr = n, log argument 1/√n < 1
        let n = 9;
        let mats = vec![SymMatrix::outer(&[1.0, 0.0, 0.0]); n];
        let fam = MatrixFamily::new(mats).unwrap();
        let c = 2.0;
        let expect = c * (n as f64).sqrt();
        assert!((delta_target(&fam, c).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn delta_target_identity_family() {
        // n = d, all Aᵢ = I: ‖Σ‖ = n, Tr = n², log argument √n
        let n = 16;
        let fam = MatrixFamily::new(vec![SymMatrix::identity(n); n]).unwrap();
        let c = 3.0;
        let expect = c * (n as f64).sqrt() * (1.0 + 0.5 * (n as f64).ln()).sqrt();
        assert!((delta_target(&fam, c).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn delta_target_is_one_homogeneous() {
        let fam = gen_family(FamilyKind::GaussianUnit, 6, 8, 5).unwrap();
        let doubled = fam.scaled(2.0).unwrap();
        let a = delta_target(&fam, 8.0).unwrap();
        let b = delta_target(&doubled, 8.0).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-9 * b);
    }

    #[test]
    fn delta_target_rejects_zero_family() {
        let fam = MatrixFamily::new(vec![SymMatrix::zeros(3); 2]).unwrap();
        assert!(matches!(
            delta_target(&fam, 8.0),
            Err(Error::DegenerateFamily(_))
        ));
    }

    #[test]
    fn discrepancy_of_zero_weights_is_zero() {
        let fam = gen_family(FamilyKind::GaussianUnit, 4, 4, 0).unwrap();
        assert_eq!(evaluate_discrepancy(&fam, &[0.0; 4]).unwrap(), 0.0);
        assert!(evaluate_discrepancy(&fam, &[0.0; 3]).is_err());
    }

    #[test]
    fn hadamard_all_ones_discrepancy() {
        // signs all +1 sum the rows of H₄; column sums are (4, 0, 0, 0)
        let fam = gen_family(FamilyKind::HadamardRows, 4, 4, 0).unwrap();
        let disc = evaluate_discrepancy(&fam, &[1.0; 4]).unwrap();
        assert!((disc - 4.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_exhaustive_minimum_is_sqrt_n() {
        let fam = gen_family(FamilyKind::HadamardRows, 4, 4, 0).unwrap();
        let (best, signs) = exhaustive_minimum(&fam).unwrap();
        assert!((best - 2.0).abs() < 1e-10);
        assert!((evaluate_discrepancy(&fam, &signs).unwrap() - best).abs() < 1e-10);
    }

    #[test]
    fn scale_covariance_of_discrepancy() {
        let fam = gen_family(FamilyKind::GaussianUnit, 5, 6, 2).unwrap();
        let scaled = fam.scaled(3.0).unwrap();
        let x = [0.3, -1.0, 0.7, 0.2, -0.5];
        let a = evaluate_discrepancy(&fam, &x).unwrap();
        let b = evaluate_discrepancy(&scaled, &x).unwrap();
        assert!((b - 3.0 * a).abs() <= 1e-9 * b.max(1.0));
    }

    #[test]
    fn coloring_clamps_and_masks() {
        let fam = basis_family(3, 3);
        let c = Coloring::new(&fam, vec![1.0 + 1e-13, -0.99995, 0.3], 1.0, 1e-4, true).unwrap();
        assert_eq!(c.x[0], 1.0);
        assert_eq!(c.integral_mask, vec![true, true, false]);
        assert_eq!(c.integral_count(), 2);
        // discrepancy recomputed from clamped x: max(|1|, |−0.99995|, |0.3|)
        assert!((c.discrepancy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        let mut p = SolveParams::default();
        assert!(p.validate().is_ok());
        p.eps_frac = 1.5;
        assert!(p.validate().is_err());
        p.eps_frac = 0.05;
        p.feas_tol = 0.0;
        assert!(p.validate().is_err());
    }
}
