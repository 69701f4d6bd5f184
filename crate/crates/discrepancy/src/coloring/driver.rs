//! Retry loop, iterative full coloring, and approximate dual witnesses.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::{
    delta_target, solve_partial_program, Coloring, SolveParams,
};
use crate::error::{Error, Result};
use crate::matcore::{eig_sym, nuclear_norm, spectral_norm, MatrixFamily, SymMatrix};
use crate::rng::derived_rng;

/// A successful partial coloring together with the number of retries spent.
#[derive(Debug, Clone)]
pub struct PartialOutcome {
    pub coloring: Coloring,
    pub retries: usize,
}

/// One round of the full-coloring iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub n_remaining: usize,
    pub delta: f64,
    pub retries: usize,
}

/// Full ±1 coloring with its per-round trace.
#[derive(Debug, Clone)]
pub struct FullColoring {
    pub signs: Vec<f64>,
    pub discrepancy: f64,
    /// Δ of the first round, the headline target.
    pub delta_used: f64,
    pub rounds: Vec<RoundRecord>,
}

fn draw_signs(seed: u64, retry: u64, n: usize) -> Vec<f64> {
    let mut rng = derived_rng(seed, retry);
    (0..n)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Draw random sign objectives and solve until a coloring with at least
/// eps_frac·n near-integral coordinates appears. Near-integral coordinates
/// are clamped to exactly ±1 and feasibility is re-verified with 10× the
/// usual slack to absorb the clamp.
///
/// Retries use derived seeds indexed by retry number and are evaluated in
/// small parallel batches; the first success in retry order wins, so results
/// do not depend on thread count.
pub fn partial_coloring(family: &MatrixFamily, params: &SolveParams) -> Result<PartialOutcome> {
    params.validate()?;
    let n = family.len();
    let delta = delta_target(family, params.c_delta)?;
    partial_coloring_with_delta(family, delta, params, n)
}

/// As `partial_coloring` but against an explicit Δ.
pub fn partial_coloring_with_delta(
    family: &MatrixFamily,
    delta: f64,
    params: &SolveParams,
    retry_budget: usize,
) -> Result<PartialOutcome> {
    let n = family.len();
    let need = ((params.eps_frac * n as f64).ceil() as usize).max(1);
    let max_retries = retry_budget.min(params.retries_for(n)).max(1);

    let mut best: Option<Coloring> = None;
    const BATCH: usize = 8;
    let mut retry = 0usize;
    while retry < max_retries {
        let upper = (retry + BATCH).min(max_retries);
        let batch: Vec<Result<Coloring>> = (retry..upper)
            .into_par_iter()
            .map(|r| {
                let g = draw_signs(params.seed, r as u64, n);
                solve_partial_program(family, &g, delta, params)
            })
            .collect();
        for (offset, item) in batch.into_iter().enumerate() {
            let coloring = item?;
            if coloring.integral_count() >= need {
                let rounded = clamp_integral(family, &coloring, delta, params)?;
                if let Some(done) = rounded {
                    return Ok(PartialOutcome {
                        coloring: done,
                        retries: retry + offset + 1,
                    });
                }
            }
            let better = match &best {
                Some(b) => coloring.integral_count() > b.integral_count(),
                None => true,
            };
            if better {
                best = Some(coloring);
            }
        }
        retry = upper;
    }

    let best = best.expect("at least one retry ran");
    Err(Error::RetriesExhausted {
        retries: max_retries,
        best_fraction: best.integral_fraction(),
        best: Box::new(best),
    })
}

/// Clamp near-integral coordinates to ±1; None when the clamp pushed the
/// discrepancy outside the widened slack (the caller then keeps retrying).
fn clamp_integral(
    family: &MatrixFamily,
    coloring: &Coloring,
    delta: f64,
    params: &SolveParams,
) -> Result<Option<Coloring>> {
    let x: Vec<f64> = coloring
        .x
        .iter()
        .zip(&coloring.integral_mask)
        .map(|(&v, &int)| if int { v.signum() } else { v })
        .collect();
    let rounded = Coloring::new(family, x, delta, params.int_tol, coloring.converged)?;
    if rounded.discrepancy <= delta * (1.0 + 10.0 * params.feas_tol) {
        Ok(Some(rounded))
    } else {
        Ok(None)
    }
}

/// Compose partial colorings into a full ±1 signing.
///
/// Each round solves the partial program for the family {σᵢ(1−|zᵢ|)·Aᵢ} of
/// still-fractional coordinates, where z is the accumulated coloring and
/// σᵢ = sign(zᵢ); a coordinate whose round value hits +1 lands exactly on
/// σᵢ and freezes. The returned partial coloring is negated when that
/// orientation freezes more coordinates, so every round retires at least
/// one. Once at most `n_min` coordinates survive, the tail is finished by
/// exhaustive search over its sign patterns.
pub fn full_coloring(family: &MatrixFamily, params: &SolveParams) -> Result<FullColoring> {
    params.validate()?;
    let n = family.len();
    let mut z = vec![0.0f64; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut rounds = Vec::new();
    let mut delta_used = 0.0;

    while active.len() > params.n_min {
        let round_index = rounds.len();
        let weights: Vec<f64> = active
            .iter()
            .map(|&i| anchor_sign(z[i]) * (1.0 - z[i].abs()))
            .collect();
        let sub: Vec<SymMatrix> = active
            .iter()
            .zip(&weights)
            .map(|(&i, &w)| family.matrix(i).scaled(w))
            .collect();
        let sub_family = MatrixFamily::new(sub)?;

        if sub_family.spectral_norm_of_sum() <= 0.0 {
            // every remaining matrix is zero: any signs are free
            for &i in &active {
                z[i] = anchor_sign(z[i]);
            }
            rounds.push(RoundRecord {
                n_remaining: active.len(),
                delta: 0.0,
                retries: 0,
            });
            active.clear();
            break;
        }

        let delta = delta_target(&sub_family, params.c_delta)?;
        if round_index == 0 {
            delta_used = delta;
        }
        let mut round_params = params.clone();
        round_params.seed = params.seed.wrapping_add(0x9e37_79b9).wrapping_mul(round_index as u64 + 1);
        let outcome = partial_coloring_with_delta(&sub_family, delta, &round_params, usize::MAX)
            .map_err(|e| Error::FullColoringFailed {
                round: round_index,
                partial: z.clone(),
                source: Box::new(e),
            })?;

        let mut y = outcome.coloring.x.clone();
        // orient so that at least half the integral coordinates sit at +1,
        // which is where composition lands exactly on ±1
        let plus = y.iter().filter(|&&v| v >= 1.0).count();
        let minus = y.iter().filter(|&&v| v <= -1.0).count();
        if minus > plus {
            for v in &mut y {
                *v = -*v;
            }
        }

        let mut next_active = Vec::with_capacity(active.len());
        for ((&i, &w), &yi) in active.iter().zip(&weights).zip(&y) {
            z[i] = (z[i] + w * yi).clamp(-1.0, 1.0);
            if z[i].abs() < 1.0 {
                next_active.push(i);
            }
        }
        rounds.push(RoundRecord {
            n_remaining: active.len(),
            delta,
            retries: outcome.retries,
        });
        if next_active.len() >= active.len() {
            // no coordinate froze; the orientation guarantee makes this
            // unreachable unless the solver returned no integral point at all
            return Err(Error::FullColoringFailed {
                round: round_index,
                partial: z,
                source: Box::new(Error::ConfigError(
                    "round froze no coordinate".into(),
                )),
            });
        }
        active = next_active;
    }

    if !active.is_empty() {
        // endgame: exact search over the surviving coordinates
        let fixed: Vec<usize> = (0..n).filter(|i| !active.contains(i)).collect();
        let mut base = SymMatrix::zeros(family.dim());
        for &i in &fixed {
            base.axpy(z[i], family.matrix(i));
        }
        let best = exhaustive_tail(family, &base, &active)?;
        for (&i, &s) in active.iter().zip(&best) {
            z[i] = s;
        }
        rounds.push(RoundRecord {
            n_remaining: active.len(),
            delta: 0.0,
            retries: 0,
        });
    }

    let discrepancy = spectral_norm(&family.weighted_sum(&z)?)?;
    if delta_used == 0.0 {
        delta_used = discrepancy;
    }
    debug_assert!(z.iter().all(|v| v.abs() == 1.0));
    Ok(FullColoring {
        signs: z,
        discrepancy,
        delta_used,
        rounds,
    })
}

fn anchor_sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Min over sign patterns of ‖base + Σ sᵢ A_{active[i]}‖, Gray-code order.
fn exhaustive_tail(
    family: &MatrixFamily,
    base: &SymMatrix,
    active: &[usize],
) -> Result<Vec<f64>> {
    let k = active.len();
    assert!(k <= 24, "endgame tail too large");
    let mut signs = vec![1.0f64; k];
    let mut m = base.clone();
    for &i in active {
        m.axpy(1.0, family.matrix(i));
    }
    let mut best = spectral_norm(&m)?;
    let mut best_signs = signs.clone();
    for code in 1u64..(1 << k) {
        let flip = code.trailing_zeros() as usize;
        signs[flip] = -signs[flip];
        m.axpy(2.0 * signs[flip], family.matrix(active[flip]));
        let norm = spectral_norm(&m)?;
        if norm < best {
            best = norm;
            best_signs = signs.clone();
        }
    }
    Ok(best_signs)
}

/// Near-maximizer of ⟨Y, M⟩ over the nuclear-norm ball, M = Σ xᵢAᵢ.
#[derive(Debug, Clone)]
pub struct DualWitness {
    pub y: SymMatrix,
    /// ⟨Y, Aᵢ⟩ per index.
    pub per_index: Vec<f64>,
    /// Fraction of nonzero coordinates whose ⟨Y, Aᵢ⟩ sign matches sign(xᵢ).
    pub alignment: f64,
    /// ⟨Y, M⟩; at least ‖M‖ − log(2d)/β.
    pub objective: f64,
}

/// Gibbs witness for the spectral norm of M = Σ xᵢAᵢ: the softmax weighting
/// W of the eigenvalues of diag(M, −M) mapped back as Y = W₊ − W₋. Y has
/// nuclear norm at most 1 and ⟨Y, M⟩ ≥ ‖M‖ − log(2d)/β.
pub fn extract_dual_witness(
    family: &MatrixFamily,
    x: &Coloring,
    delta: f64,
    beta: f64,
) -> Result<DualWitness> {
    if beta <= 0.0 {
        return Err(Error::ConfigError(format!("beta must be positive, got {beta}")));
    }
    if x.discrepancy > delta * (1.0 + 1e-6) {
        return Err(Error::InfeasibleInput(format!(
            "coloring has discrepancy {} beyond delta {delta}",
            x.discrepancy
        )));
    }
    let m = family.weighted_sum(&x.x)?;
    let spec = eig_sym(&m)?;
    let peak = spec
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let mut z = 0.0;
    let raw: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|&l| {
            let wp = (beta * (l - peak)).exp();
            let wm = (beta * (-l - peak)).exp();
            z += wp + wm;
            wp - wm
        })
        .collect();
    let weights: Vec<f64> = raw.iter().map(|v| v / z).collect();
    let y = spec.apply_weights(&weights);

    debug_assert!(nuclear_norm(&y)? <= 1.0 + 1e-6);
    let per_index: Vec<f64> = family.matrices().iter().map(|a| y.inner(a)).collect();
    let objective = y.inner(&m);
    let mut aligned = 0usize;
    let mut counted = 0usize;
    for (v, xi) in per_index.iter().zip(&x.x) {
        if *xi != 0.0 {
            counted += 1;
            if v.signum() == xi.signum() {
                aligned += 1;
            }
        }
    }
    let alignment = if counted == 0 {
        0.0
    } else {
        aligned as f64 / counted as f64
    };
    Ok(DualWitness {
        y,
        per_index,
        alignment,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::evaluate_discrepancy;
    use crate::matcore::{gen_family, FamilyKind};

    #[test]
    fn two_identical_rank_ones_cancel() {
        let d = 2;
        let mats = vec![SymMatrix::outer(&[1.0, 0.0]); 2];
        let fam = MatrixFamily::new(mats).unwrap();
        let mut params = SolveParams::default();
        let mut saw_cancellation = false;
        for seed in 0..6 {
            params.seed = seed;
            let out = partial_coloring_with_delta(&fam, 0.1, &params, 20).unwrap();
            assert!(out.coloring.discrepancy <= 0.1 * (1.0 + 1e-5));
            let c = &out.coloring;
            if c.integral_count() == 2 {
                // brute force over sign pairs: only (1,−1) and (−1,1) fit Δ=0.1
                assert!((c.x[0] + c.x[1]).abs() < 1e-9, "x = {:?}", c.x);
                saw_cancellation = true;
            }
        }
        assert!(saw_cancellation, "no run produced the cancelling signing");
        let _ = d;
    }

    #[test]
    fn zero_family_colors_in_one_try() {
        let fam = MatrixFamily::new(vec![SymMatrix::zeros(3); 4]).unwrap();
        let params = SolveParams::default();
        let out = partial_coloring_with_delta(&fam, 1.0, &params, 10).unwrap();
        assert_eq!(out.retries, 1);
        assert_eq!(out.coloring.integral_count(), 4);
        assert_eq!(out.coloring.discrepancy, 0.0);
    }

    #[test]
    fn retries_exhausted_carries_best_attempt() {
        // identity family: ‖Σ xᵢ I‖ = |Σ xᵢ|; Δ = 0.05 with eps 0.9 needs
        // nearly all coordinates at ±1 while the sum stays near zero:
        // impossible for odd n, so the loop must exhaust
        let fam = MatrixFamily::new(vec![SymMatrix::identity(2); 3]).unwrap();
        let mut params = SolveParams::default();
        params.eps_frac = 0.9;
        params.max_retries = Some(5);
        let err = partial_coloring_with_delta(&fam, 0.05, &params, 5).unwrap_err();
        match err {
            Error::RetriesExhausted {
                retries, best, ..
            } => {
                assert_eq!(retries, 5);
                assert!(best.discrepancy <= 0.05 * (1.0 + 1e-5));
            }
            other => panic!("expected RetriesExhausted, got {other}"),
        }
    }

    #[test]
    fn full_coloring_single_matrix() {
        let fam = MatrixFamily::new(vec![SymMatrix::diag(&[0.7, -0.2])]).unwrap();
        let full = full_coloring(&fam, &SolveParams::default()).unwrap();
        assert_eq!(full.signs.len(), 1);
        assert!(full.signs[0].abs() == 1.0);
        assert!((full.discrepancy - 0.7).abs() < 1e-10);
    }

    #[test]
    fn full_coloring_even_count_of_equal_matrices() {
        // n even, all Aᵢ equal: alternating signs reach zero, and the
        // endgame search finds it exactly
        let a = SymMatrix::diag(&[0.9, -0.4, 0.1]);
        let fam = MatrixFamily::new(vec![a.clone(); 6]).unwrap();
        let full = full_coloring(&fam, &SolveParams::default()).unwrap();
        assert!(full.discrepancy <= 1e-9, "disc = {}", full.discrepancy);
    }

    #[test]
    fn full_coloring_is_exactly_signed_and_accounted() {
        let fam = gen_family(FamilyKind::ModerateRank { rank: 4 }, 16, 16, 11).unwrap();
        let mut params = SolveParams::default();
        params.seed = 1;
        let full = full_coloring(&fam, &params).unwrap();
        assert!(full.signs.iter().all(|v| v.abs() == 1.0));
        let recomputed = evaluate_discrepancy(&fam, &full.signs).unwrap();
        assert!((full.discrepancy - recomputed).abs() <= 1e-8 * recomputed.max(1.0));
        // survivors strictly decrease across solver rounds
        for w in full.rounds.windows(2) {
            assert!(w[1].n_remaining < w[0].n_remaining);
        }
        let bound = ((16f64).ln() / (1.0 / (1.0 - params.eps_frac / 2.0)).ln()).ceil() as usize + 1;
        assert!(full.rounds.len() <= bound.max(2));
    }

    #[test]
    fn dual_witness_on_signed_diagonal() {
        // M = diag(1, −1, 0): the Gibbs witness tends to ½(e₁e₁ᵀ − e₂e₂ᵀ)
        let fam = MatrixFamily::new(vec![SymMatrix::diag(&[1.0, -1.0, 0.0])]).unwrap();
        let coloring = Coloring::new(&fam, vec![1.0], 1.0, 1e-4, true).unwrap();
        let beta = 60.0;
        let w = extract_dual_witness(&fam, &coloring, 1.0, beta).unwrap();
        // closed form on the diagonal: weights (e^β−e^{−β})/Z, Z = 2(e^β+e^{−β}+1)
        let z = 2.0 * ((beta.exp()) + (-beta).exp() + 1.0);
        let expect = (beta.exp() - (-beta).exp()) / z;
        assert!((w.y.get(0, 0) - expect).abs() < 1e-12);
        assert!((w.y.get(1, 1) + expect).abs() < 1e-12);
        assert!(w.y.get(2, 2).abs() < 1e-12);
        let d = 3.0f64;
        assert!(w.objective >= 1.0 - (2.0 * d).ln() / beta);
        assert!(nuclear_norm(&w.y).unwrap() <= 1.0 + 1e-6);
    }

    #[test]
    fn dual_witness_zero_sum() {
        let fam = MatrixFamily::new(vec![SymMatrix::zeros(2)]).unwrap();
        let coloring = Coloring::new(&fam, vec![0.7], 1.0, 1e-4, true).unwrap();
        let w = extract_dual_witness(&fam, &coloring, 1.0, 10.0).unwrap();
        assert_eq!(w.objective, 0.0);
        // bound 0 ≥ −log(2d)/β holds trivially
        assert!(w.objective >= -(4.0f64).ln() / 10.0);
        assert!(extract_dual_witness(&fam, &coloring, 1.0, 0.0).is_err());
    }

    #[test]
    fn dual_witness_bound_on_random_instance() {
        let fam = gen_family(FamilyKind::GaussianUnit, 6, 8, 4).unwrap();
        let x: Vec<f64> = (0..6).map(|i| if i % 2 == 0 { 0.8 } else { -0.6 }).collect();
        let coloring = Coloring::new(&fam, x, 10.0, 1e-4, true).unwrap();
        let m = fam.weighted_sum(&coloring.x).unwrap();
        let norm = spectral_norm(&m).unwrap();
        for beta in [5.0, 20.0, 80.0] {
            let w = extract_dual_witness(&fam, &coloring, 10.0, beta).unwrap();
            assert!(
                w.objective >= norm - (16.0f64).ln() / beta - 1e-9,
                "beta={beta}: {} vs {}",
                w.objective,
                norm
            );
        }
    }
}
