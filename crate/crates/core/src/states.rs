//! Initial and target states: Fock superpositions, truncated coherent and
//! cat states, the ideal controlled-phase output and the entangled coherent
//! state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CVector, HilbertSpace, Level, QState, C64, ONE, ZERO};

/// Coherent amplitudes `e^{−|α|²/2} α^n/√n!` for `n < dim`, unnormalised.
fn coherent_coefficients(alpha: C64, dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        v[n] = c;
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentSpec {
    pub alpha: C64,
    pub dim: usize,
}

/// Single-resonator state with the probability lost to truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorState {
    pub amplitudes: CVector,
    /// `1 − Σ_{n<dim} |c_n|²` before renormalisation.
    pub leakage: f64,
}

/// Truncated coherent state, renormalised.
pub fn coherent_state(spec: CoherentSpec) -> Result<FactorState> {
    if spec.dim < 2 {
        return Err(Error::DimensionTooSmall(spec.dim));
    }
    let v = coherent_coefficients(spec.alpha, spec.dim);
    let kept = v.norm_squared();
    Ok(FactorState {
        leakage: (1.0 - kept).max(0.0),
        amplitudes: v.unscale(kept.sqrt()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// `|α⟩ ± |−α⟩`, renormalised. The opposite-parity amplitudes are exactly zero.
pub fn cat_state(alpha: C64, parity: Parity, dim: usize) -> Result<FactorState> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    if parity == Parity::Odd && alpha == ZERO {
        return Err(Error::InvalidState("odd cat state with alpha = 0 is the null vector".into()));
    }
    let full = coherent_coefficients(alpha, dim);
    let keep = |n: usize| match parity {
        Parity::Even => n % 2 == 0,
        Parity::Odd => n % 2 == 1,
    };
    let v = CVector::from_iterator(
        dim,
        full.iter().enumerate().map(|(n, &c)| if keep(n) { c } else { ZERO }),
    );
    // Weight of the untruncated parity component.
    let s = alpha.norm_sqr();
    let total = match parity {
        Parity::Even => (-s).exp() * s.cosh(),
        Parity::Odd => (-s).exp() * s.sinh(),
    };
    let kept = v.norm_squared();
    Ok(FactorState {
        leakage: ((total - kept) / total).max(0.0),
        amplitudes: v.unscale(kept.sqrt()),
    })
}

fn ground() -> CVector {
    CVector::from_vec(vec![ONE, ZERO, ZERO])
}

fn qubit(dim: usize, c0: C64, c1: C64) -> CVector {
    let mut v = CVector::zeros(dim);
    v[0] = c0;
    v[1] = c1;
    v
}

fn check_qubit(name: &str, c0: C64, c1: C64) -> Result<()> {
    let n = c0.norm_sqr() + c1.norm_sqr();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("{name} amplitudes have norm² {n}, expected 1")));
    }
    Ok(())
}

/// `(α|0⟩ + β|1⟩)_a (γ|0⟩ + δ|1⟩)_b ⊗ |g⟩`.
pub fn gate_input(space: HilbertSpace, alpha: C64, beta: C64, gamma: C64, delta: C64) -> Result<QState> {
    check_qubit("resonator a", alpha, beta)?;
    check_qubit("resonator b", gamma, delta)?;
    QState::product(
        space,
        &ground(),
        &qubit(space.dim_a(), alpha, beta),
        &qubit(space.dim_b(), gamma, delta),
    )
}

/// Controlled-phase output `αγ|00⟩ + αδ|01⟩ + βγ|10⟩ − βδ|11⟩` with the qutrit in `|g⟩`.
pub fn ideal_gate_output(space: HilbertSpace, alpha: C64, beta: C64, gamma: C64, delta: C64) -> Result<QState> {
    check_qubit("resonator a", alpha, beta)?;
    check_qubit("resonator b", gamma, delta)?;
    let mut v = CVector::zeros(space.total());
    v[space.index(Level::G, 0, 0)] = alpha * gamma;
    v[space.index(Level::G, 0, 1)] = alpha * delta;
    v[space.index(Level::G, 1, 0)] = beta * gamma;
    v[space.index(Level::G, 1, 1)] = -beta * delta;
    QState::pure(space, v)
}

/// `|α_a⟩|β_b⟩ ⊗ |g⟩` with each coherent factor truncated and renormalised.
/// Returns the state and the larger of the two factor leakages.
pub fn coherent_input(space: HilbertSpace, alpha_a: C64, beta_b: C64) -> Result<(QState, f64)> {
    let a = coherent_state(CoherentSpec {
        alpha: alpha_a,
        dim: space.dim_a(),
    })?;
    let b = coherent_state(CoherentSpec {
        alpha: beta_b,
        dim: space.dim_b(),
    })?;
    let leak = a.leakage.max(b.leakage);
    Ok((QState::product(space, &ground(), &a.amplitudes, &b.amplitudes)?, leak))
}

/// Parameters of the entangled-coherent-state target. `chi`, `g` and
/// `delta_a` may use any common frequency unit; only `g²/(χ δ_a)` enters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatTarget {
    pub alpha_a: C64,
    pub beta_b: C64,
    pub chi: f64,
    pub g: f64,
    pub delta_a: f64,
}

impl CatTarget {
    /// `β_a = α_a·exp[i g²π/(χ δ_a)]`.
    pub fn beta_a(&self) -> C64 {
        self.alpha_a * C64::from_polar(1.0, self.g * self.g * std::f64::consts::PI / (self.chi * self.delta_a))
    }
}

/// Target `½(|β_a⟩|β_b⟩ + |−β_a⟩|β_b⟩ + |β_a⟩|−β_b⟩ − |−β_a⟩|−β_b⟩) ⊗ |g⟩`.
///
/// Each coherent expansion keeps its first `terms` Fock amplitudes (all of
/// them up to the space dimension when `None`); the sum is renormalised.
pub fn ideal_cat_output(space: HilbertSpace, target: &CatTarget, terms: Option<usize>) -> Result<QState> {
    if !(target.chi > 0.0) {
        return Err(Error::InvalidParams("cat target needs chi > 0".into()));
    }
    let beta_a = target.beta_a();
    let trunc = |alpha: C64, dim: usize| {
        let mut v = coherent_coefficients(alpha, dim);
        if let Some(m) = terms {
            for n in m.min(dim)..dim {
                v[n] = ZERO;
            }
        }
        v
    };
    let (da, db) = (space.dim_a(), space.dim_b());
    let ap = trunc(beta_a, da);
    let am = trunc(-beta_a, da);
    let bp = trunc(target.beta_b, db);
    let bm = trunc(-target.beta_b, db);
    let g = ground();
    let joint = g.kronecker(&(ap.kronecker(&bp) + am.kronecker(&bp) + ap.kronecker(&bm) - am.kronecker(&bm)));
    QState::pure_normalized(space, joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{number, CMatrix};

    fn overlap(a: &CVector, b: &CVector) -> f64 {
        a.dotc(b).norm()
    }

    #[test]
    fn vacuum_for_zero_amplitude() {
        let s = coherent_state(CoherentSpec {
            alpha: ZERO,
            dim: 5,
        })
        .unwrap();
        assert_eq!(s.amplitudes[0], ONE);
        assert_eq!(s.leakage, 0.0);
    }

    #[test]
    fn mean_photon_number_of_small_coherent_state() {
        let s = coherent_state(CoherentSpec {
            alpha: C64::new(0.5, 0.0),
            dim: 12,
        })
        .unwrap();
        assert!((s.amplitudes.norm_squared() - 1.0).abs() < 1e-14);
        let n = number(12).unwrap();
        let mean = s.amplitudes.dotc(&(&n * &s.amplitudes)).re;
        // Direct sum Σ n|c_n|² of the untruncated expansion is exactly |α|².
        assert!((mean - 0.25).abs() < 1e-10, "{mean}");
        assert!(s.leakage < 1e-10);
    }

    #[test]
    fn cat_parity_is_exact() {
        let even = cat_state(C64::new(0.5, 0.0), Parity::Even, 10).unwrap();
        for n in (1..10).step_by(2) {
            assert_eq!(even.amplitudes[n], ZERO);
        }
        let odd = cat_state(C64::new(0.5, 0.3), Parity::Odd, 10).unwrap();
        for n in (0..10).step_by(2) {
            assert_eq!(odd.amplitudes[n], ZERO);
        }
        assert_eq!(even.amplitudes.dotc(&odd.amplitudes), ZERO);
        assert!(cat_state(ZERO, Parity::Odd, 4).is_err());
    }

    #[test]
    fn odd_cat_matches_coherent_difference() {
        let alpha = C64::new(1.0, 0.0);
        let plus = coherent_coefficients(alpha, 12);
        let minus = coherent_coefficients(-alpha, 12);
        let diff = &plus - &minus;
        let diff = diff.unscale(diff.norm());
        let odd = cat_state(alpha, Parity::Odd, 12).unwrap();
        assert!((overlap(&diff, &odd.amplitudes) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gate_target_for_uniform_input() {
        let s = HilbertSpace::new(4, 4).unwrap();
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let out = ideal_gate_output(s, h, h, h, h).unwrap();
        let v = out.as_pure().unwrap();
        assert!((v[s.index(Level::G, 0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((v[s.index(Level::G, 0, 1)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((v[s.index(Level::G, 1, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((v[s.index(Level::G, 1, 1)] + C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gate_truth_table_rows() {
        let s = HilbertSpace::new(3, 3).unwrap();
        let out = ideal_gate_output(s, ONE, ZERO, ONE, ZERO).unwrap();
        assert_eq!(out, QState::basis(s, Level::G, 0, 0));
        let out = ideal_gate_output(s, ZERO, ONE, ZERO, ONE).unwrap();
        assert_eq!(out.as_pure().unwrap()[s.index(Level::G, 1, 1)], -ONE);
        assert!(ideal_gate_output(s, ONE, ONE, ONE, ZERO).is_err());
    }

    fn phase_operator_cat(space: HilbertSpace, t: &CatTarget) -> CVector {
        // exp(iχ n_a n_b π/χ) = (−1)^{n_a n_b}, then exp(i (g²/δ_a) n_a π/χ).
        let a = coherent_coefficients(t.alpha_a, space.dim_a());
        let b = coherent_coefficients(t.beta_b, space.dim_b());
        let phase_a = t.g * t.g / t.delta_a * std::f64::consts::PI / t.chi;
        let mut v = CVector::zeros(space.total());
        for na in 0..space.dim_a() {
            for nb in 0..space.dim_b() {
                let sign = if (na * nb) % 2 == 0 { 1.0 } else { -1.0 };
                v[space.index(Level::G, na, nb)] =
                    a[na] * b[nb] * sign * C64::from_polar(1.0, phase_a * na as f64);
            }
        }
        v.unscale(v.norm())
    }

    #[test]
    fn cat_target_matches_phase_operator_construction() {
        let s = HilbertSpace::new(14, 14).unwrap();
        let t = CatTarget {
            alpha_a: C64::new(0.5, 0.0),
            beta_b: C64::new(1.0, 0.0),
            chi: 0.817,
            g: 150.0,
            delta_a: -1000.0,
        };
        let closed = ideal_cat_output(s, &t, None).unwrap();
        let oracle = phase_operator_cat(s, &t);
        assert!((overlap(closed.as_pure().unwrap(), &oracle) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cat_target_vacuum_limit() {
        let s = HilbertSpace::new(8, 10).unwrap();
        let t = CatTarget {
            alpha_a: ZERO,
            beta_b: C64::new(1.0, 0.0),
            chi: 1.0,
            g: 1.0,
            delta_a: -10.0,
        };
        let out = ideal_cat_output(s, &t, None).unwrap();
        let (reference, _) = coherent_input(s, ZERO, C64::new(1.0, 0.0)).unwrap();
        assert!((overlap(out.as_pure().unwrap(), reference.as_pure().unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_target_at_quoted_amplitudes_builds() {
        let s = HilbertSpace::new(10, 10).unwrap();
        let t = CatTarget {
            alpha_a: C64::new(0.5, 0.0),
            beta_b: C64::new(1.0, 0.0),
            chi: 0.817,
            g: 150.0,
            delta_a: -1000.0,
        };
        for m in 4..=7 {
            let out = ideal_cat_output(s, &t, Some(m)).unwrap();
            assert!((out.weight() - 1.0).abs() < 1e-12);
            let v = out.as_pure().unwrap();
            for na in 0..10 {
                for nb in 0..10 {
                    if na >= m || nb >= m {
                        assert_eq!(v[s.index(Level::G, na, nb)], ZERO);
                    }
                }
            }
        }
    }

    #[test]
    fn coherent_input_is_unit_norm_product() {
        let s = HilbertSpace::new(6, 7).unwrap();
        let (psi, leak) = coherent_input(s, C64::new(0.5, 0.0), C64::new(0.0, 1.0)).unwrap();
        assert!((psi.weight() - 1.0).abs() < 1e-12);
        assert!(leak > 0.0 && leak < 1e-3);
        let rho: CMatrix = psi.to_density_matrix();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }
}
