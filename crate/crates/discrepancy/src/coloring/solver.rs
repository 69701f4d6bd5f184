//! First-order solver for max ⟨x, g⟩ over the box under ‖Σ xᵢAᵢ‖ ≤ Δ.
//!
//! The spectral norm is smoothed through the symmetric log-sum-exp
//!
//!   φ_β(x) = (1/β) log( Tr e^{βM} + Tr e^{−βM} ),   M = Σ xᵢAᵢ,
//!
//! which satisfies ‖M‖ ≤ φ_β(x) ≤ ‖M‖ + log(2d)/β and is convex with
//! gradient ∂φ/∂xᵢ = ⟨W, Aᵢ⟩ for the Gibbs weighting W of M's eigenbasis.
//! The constraint enters as an exact hinge penalty ρ·(φ_β − Δ)₊ whose weight
//! is escalated until the iterate sits inside the feasible slack; a final
//! scalar shrink x ← min(1, Δ/‖M‖)·x makes feasibility unconditional.

use crate::coloring::{Coloring, SolveParams};
use crate::error::{Error, Result};
use crate::matcore::{eig_sym, spectral_norm, MatrixFamily, SymMatrix};

struct Smoothed {
    value: f64,
    /// Gibbs gradient matrix; ∂φ/∂xᵢ = ⟨grad, Aᵢ⟩.
    grad: SymMatrix,
}

/// φ_β and its matrix gradient at M, shift-stabilized so β‖M‖ up to ~700
/// over the working range never overflows.
fn smoothed_norm(m: &SymMatrix, beta: f64) -> Result<Smoothed> {
    let spec = eig_sym(m)?;
    let peak = spec
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let mut z = 0.0;
    let weights: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|&l| {
            let wp = (beta * (l - peak)).exp();
            let wm = (beta * (-l - peak)).exp();
            z += wp + wm;
            wp - wm
        })
        .collect();
    let value = peak + z.ln() / beta;
    let normalized: Vec<f64> = weights.iter().map(|v| v / z).collect();
    let grad = spec.apply_weights(&normalized);
    Ok(Smoothed { value, grad })
}

struct Objective<'a> {
    family: &'a MatrixFamily,
    g: &'a [f64],
    delta: f64,
    beta: f64,
    rho: f64,
}

impl Objective<'_> {
    /// Value and gradient of F(x) = ⟨x,g⟩ − ρ(φ_β(x) − Δ)₊.
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let m = self.family.weighted_sum(x)?;
        let sm = smoothed_norm(&m, self.beta)?;
        let dot: f64 = x.iter().zip(self.g).map(|(a, b)| a * b).sum();
        let overshoot = sm.value - self.delta;
        if overshoot <= 0.0 {
            return Ok((dot, self.g.to_vec()));
        }
        let grad = self
            .family
            .matrices()
            .iter()
            .zip(self.g)
            .map(|(a, &gi)| gi - self.rho * sm.grad.inner(a))
            .collect();
        Ok((dot - self.rho * overshoot, grad))
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let m = self.family.weighted_sum(x)?;
        let sm = smoothed_norm(&m, self.beta)?;
        let dot: f64 = x.iter().zip(self.g).map(|(a, b)| a * b).sum();
        Ok(dot - self.rho * (sm.value - self.delta).max(0.0))
    }
}

fn clamp_box(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(-1.0, 1.0);
    }
}

struct InnerResult {
    stationary: bool,
    iters_used: usize,
}

/// Projected gradient with momentum and adaptive restart. Monotone by
/// construction: a momentum step that fails the line search falls back to a
/// plain projected step from the incumbent.
fn ascend(
    x: &mut Vec<f64>,
    obj: &Objective,
    max_iters: usize,
    stall_tol: f64,
) -> Result<InnerResult> {
    let n = x.len();
    let stall = stall_tol * (n as f64).sqrt().max(1.0);
    let mut step = 1.0;
    let mut momentum = 0.0f64;
    let mut prev = x.clone();
    let (mut fx, mut grad) = obj.eval(x)?;

    for iter in 0..max_iters {
        // extrapolated point
        let y: Vec<f64> = x
            .iter()
            .zip(&prev)
            .map(|(&a, &b)| a + momentum * (a - b))
            .collect();
        let (_, gy) = if momentum > 0.0 { obj.eval(&y)? } else { (fx, grad.clone()) };

        // stationarity probe at the incumbent
        let mut probe: Vec<f64> = x.iter().zip(&grad).map(|(a, d)| a + d).collect();
        clamp_box(&mut probe);
        let pg: f64 = probe
            .iter()
            .zip(x.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if pg <= stall {
            return Ok(InnerResult {
                stationary: true,
                iters_used: iter,
            });
        }

        // backtracking line search from the extrapolated point
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand: Vec<f64> = y.iter().zip(&gy).map(|(a, d)| a + step * d).collect();
            clamp_box(&mut cand);
            let fc = obj.value(&cand)?;
            let move_sq: f64 = cand
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if fc >= fx + 0.25 / step * move_sq - 1e-15 * fx.abs().max(1.0) {
                prev = std::mem::replace(x, cand);
                let (fc2, gc) = obj.eval(x)?;
                fx = fc2;
                grad = gc;
                momentum = (momentum + 0.4).min(0.9);
                step *= 1.25;
                accepted = true;
                break;
            }
            step *= 0.5;
            if momentum > 0.0 {
                // restart: halve aggression and retry from the incumbent
                momentum = 0.0;
                break;
            }
        }
        if !accepted && momentum == 0.0 && step < 1e-18 {
            // no ascent direction at any step length: numerically stationary
            return Ok(InnerResult {
                stationary: true,
                iters_used: iter,
            });
        }
    }
    Ok(InnerResult {
        stationary: false,
        iters_used: max_iters,
    })
}

/// Maximize ⟨x, g⟩ over partial colorings with discrepancy at most Δ.
///
/// The returned coloring is always feasible within (1 + feas_tol)·Δ; when
/// the iteration budget runs out first it carries `converged = false` with
/// the best feasible iterate found.
pub fn solve_partial_program(
    family: &MatrixFamily,
    g: &[f64],
    delta: f64,
    params: &SolveParams,
) -> Result<Coloring> {
    params.validate()?;
    if !(delta > 0.0) {
        return Err(Error::ConfigError(format!("delta must be positive, got {delta}")));
    }
    if g.len() != family.len() {
        return Err(Error::ShapeError(format!(
            "sign vector has length {}, family has {}",
            g.len(),
            family.len()
        )));
    }
    if g.iter().any(|v| v.abs() != 1.0) {
        return Err(Error::ConfigError("entries of g must be ±1".into()));
    }

    let n = family.len();
    let d = family.dim();
    let beta = params
        .beta
        .unwrap_or_else(|| ((4 * d) as f64).ln() / (0.01 * delta));

    // warm start: scaled-down g is feasible and objective-aligned
    let norm_g = spectral_norm(&family.weighted_sum(g)?)?;
    let t0 = if norm_g > delta { delta / norm_g } else { 1.0 };
    let mut x: Vec<f64> = g.iter().map(|&v| v * t0).collect();

    // exact-penalty escalation: ρ beyond n/Δ dominates any constraint
    // multiplier for this program
    let rho_cap = (2.0 * n as f64 / delta).max(4.0);
    let mut rho = 2.0f64.min(rho_cap);
    let mut budget = params.max_iters;
    let mut stationary = false;

    loop {
        let obj = Objective {
            family,
            g,
            delta,
            beta,
            rho,
        };
        let res = ascend(&mut x, &obj, budget, params.stall_tol)?;
        budget = budget.saturating_sub(res.iters_used.max(1));
        let norm = spectral_norm(&family.weighted_sum(&x)?)?;
        if norm <= delta * (1.0 + 10.0 * params.feas_tol) {
            stationary = res.stationary;
            break;
        }
        if rho >= rho_cap || budget == 0 {
            break;
        }
        rho = (rho * 4.0).min(rho_cap);
    }

    // unconditional feasibility: scalar shrink toward the origin
    let norm = spectral_norm(&family.weighted_sum(&x)?)?;
    if norm > delta {
        let t = delta / norm;
        for v in &mut x {
            *v *= t;
        }
    }
    Coloring::new(family, x, delta, params.int_tol, stationary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{gen_family, FamilyKind};

    fn params() -> SolveParams {
        SolveParams::default()
    }

    #[test]
    fn one_matrix_hits_the_spectral_bound() {
        // ‖A‖ = 1, Δ = 1/2: the analytic optimum is x = Δ
        let fam = MatrixFamily::new(vec![SymMatrix::diag(&[1.0, -0.3])]).unwrap();
        let c = solve_partial_program(&fam, &[1.0], 0.5, &params()).unwrap();
        assert!((c.x[0] - 0.5).abs() < 0.01, "x = {}", c.x[0]);
        assert!(c.discrepancy <= 0.5 * (1.0 + 1e-6));
    }

    #[test]
    fn slack_bound_returns_the_corner() {
        let fam = gen_family(FamilyKind::GaussianUnit, 6, 4, 1).unwrap();
        let g = [1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        // Δ ≥ n max ‖Aᵢ‖ makes the box optimum feasible
        let c = solve_partial_program(&fam, &g, 6.5, &params()).unwrap();
        for (xi, gi) in c.x.iter().zip(&g) {
            assert!((xi - gi).abs() < 1e-9, "x = {:?}", c.x);
        }
        assert!(c.converged);
    }

    #[test]
    fn separable_diagonal_case_reaches_g() {
        // Aᵢ = eᵢeᵢᵀ, Δ = 1: coordinates decouple and every |xᵢ| ≤ 1 works
        let n = 5;
        let mats = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                SymMatrix::diag(&e)
            })
            .collect();
        let fam = MatrixFamily::new(mats).unwrap();
        let g = [1.0, -1.0, -1.0, 1.0, -1.0];
        let c = solve_partial_program(&fam, &g, 1.0, &params()).unwrap();
        for (xi, gi) in c.x.iter().zip(&g) {
            assert!((xi - gi).abs() < 0.05, "x = {:?}", c.x);
        }
        assert!(c.discrepancy <= 1.0 + 1e-6);
    }

    #[test]
    fn sign_flip_symmetry_of_the_objective() {
        let fam = gen_family(FamilyKind::GaussianUnit, 8, 8, 3).unwrap();
        let delta = 0.8 * delta_for(&fam);
        let g: Vec<f64> = (0..8).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let a = solve_partial_program(&fam, &g, delta, &params()).unwrap();
        let b = solve_partial_program(&fam, &neg, delta, &params()).unwrap();
        let va: f64 = a.x.iter().zip(&g).map(|(x, s)| x * s).sum();
        let vb: f64 = b.x.iter().zip(&neg).map(|(x, s)| x * s).sum();
        assert!((va - vb).abs() <= 1e-3 * va.abs().max(1.0), "va={va} vb={vb}");
        // negating a's point is feasible for the same bound
        let flipped: Vec<f64> = a.x.iter().map(|v| -v).collect();
        let norm = crate::coloring::evaluate_discrepancy(&fam, &flipped).unwrap();
        assert!(norm <= delta * (1.0 + 1e-6));
    }

    fn delta_for(fam: &MatrixFamily) -> f64 {
        crate::coloring::delta_target(fam, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let fam = gen_family(FamilyKind::GaussianUnit, 3, 3, 0).unwrap();
        assert!(solve_partial_program(&fam, &[1.0, 1.0, 1.0], 0.0, &params()).is_err());
        assert!(solve_partial_program(&fam, &[1.0, 0.5, 1.0], 1.0, &params()).is_err());
        assert!(solve_partial_program(&fam, &[1.0, 1.0], 1.0, &params()).is_err());
    }
}
