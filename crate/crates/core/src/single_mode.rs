// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! One-mode synthesis from four elementary teleportation steps
//! `M(κ₄)M(κ₃)M(κ₂)M(κ₁)`, and the homodyne settings realizing each step.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::grid_then_golden;
use crate::symplectic::{elementary_step_2x2, SymplecticMap};

/// Below this magnitude a denominator or numerator counts as zero.
pub(crate) const ZERO_TOL: f64 = 1e-12;
/// Free-parameter grid shared by the κ₁ and θ₀ selectors.
pub(crate) const SEARCH_RANGE: (f64, f64) = (-20.0, 20.0);
pub(crate) const SEARCH_POINTS: usize = 401;
/// Grid points this close to a pole are skipped.
pub(crate) const POLE_EXCLUSION: f64 = 1e-6;
/// Relative reconstruction budget of an accepted decomposition.
pub(crate) const RECONSTRUCTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FourStepParams {
    /// `(κ₁, κ₂, κ₃, κ₄)` in application order.
    pub kappas: [f64; 4],
    pub free_param: f64,
    pub noise_proxy: f64,
}

impl FourStepParams {
    pub fn from_kappas(kappas: [f64; 4]) -> Self {
        Self { kappas, free_param: kappas[0], noise_proxy: noise_proxy(&kappas) }
    }

    /// `M(κ₄)M(κ₃)M(κ₂)M(κ₁)`.
    pub fn reconstruct(&self) -> SymplecticMap {
        SymplecticMap::from_2x2(step_product(&self.kappas))
    }
}

pub(crate) fn step_product(kappas: &[f64]) -> Matrix2<f64> {
    kappas.iter().fold(Matrix2::identity(), |acc, &k| elementary_step_2x2(k) * acc)
}

/// Homodyne of `g(x̂ sin θ + p̂ cos θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneSetting {
    pub theta: f64,
    pub gain: f64,
}

/// `Σ (1 + κᵢ²)`, the sum of squared homodyne gains.
pub fn noise_proxy(kappas: &[f64]) -> f64 {
    kappas.iter().map(|k| 1.0 + k * k).sum()
}

pub fn homodyne_setting(kappa: f64) -> HomodyneSetting {
    HomodyneSetting { theta: kappa.atan(), gain: kappa.hypot(1.0) }
}

fn scale(m: &Matrix2<f64>) -> f64 {
    m.amax().max(1.0)
}

fn solve_kappas(target: &Matrix2<f64>, kappa1: f64) -> Result<[f64; 4]> {
    let (a, b, c, d) = (target[(0, 0)], target[(0, 1)], target[(1, 0)], target[(1, 1)]);
    let kappa3 = c - d * kappa1;
    let num2 = 1.0 - d;
    let num4 = 1.0 - a + b * kappa1;
    let kappas = if kappa3.abs() < ZERO_TOL {
        if num2.abs() < ZERO_TOL && num4.abs() < ZERO_TOL {
            [kappa1, 0.0, 0.0, 0.0]
        } else {
            return Err(Error::SingularParameter(format!(
                "kappa1 = {kappa1} makes kappa3 vanish with nonzero numerators"
            )));
        }
    } else {
        [kappa1, num2 / kappa3, kappa3, num4 / kappa3]
    };
    let residual = (step_product(&kappas) - target).amax();
    if !(residual <= RECONSTRUCTION_TOL * scale(target)) {
        return Err(Error::SingularParameter(format!(
            "kappa1 = {kappa1} is too close to a pole (reconstruction residual {residual:.3e})"
        )));
    }
    Ok(kappas)
}

/// Solves `M(κ₄)M(κ₃)M(κ₂)M(κ₁) = target`, choosing κ₁ by
/// [`select_free_kappa1`] when not given.
pub fn decompose_four_step(target: &SymplecticMap, kappa1: Option<f64>) -> Result<FourStepParams> {
    let m = target.as_2x2()?;
    let kappa1 = match kappa1 {
        Some(k) if !k.is_finite() => return Err(Error::Domain(format!("kappa1 = {k} is not finite"))),
        Some(k) => k,
        None => select_free_kappa1(target)?,
    };
    Ok(FourStepParams::from_kappas(solve_kappas(&m, kappa1)?))
}

/// κ₁ minimizing [`noise_proxy`] over a 401-point grid on `[−20, 20]`,
/// refined by golden-section search. Points within `1e-6` of the pole
/// `κ₃ = 0` are excluded unless the numerators vanish there.
pub fn select_free_kappa1(target: &SymplecticMap) -> Result<f64> {
    let m = target.as_2x2()?;
    let (c, d) = (m[(1, 0)], m[(1, 1)]);
    let pole = (d.abs() >= ZERO_TOL).then(|| c / d);
    let pole_allowed = pole.is_some_and(|p| solve_kappas(&m, p).is_ok());
    let objective = |k1: f64| {
        if let Some(p) = pole {
            if (k1 - p).abs() < POLE_EXCLUSION && !pole_allowed {
                return None;
            }
        }
        solve_kappas(&m, k1).ok().map(|ks| noise_proxy(&ks))
    };
    let (lo, hi) = SEARCH_RANGE;
    let mut best = grid_then_golden(objective, lo, hi, SEARCH_POINTS);
    if let (Some(p), true) = (pole, pole_allowed) {
        if let Ok(ks) = solve_kappas(&m, p) {
            let v = noise_proxy(&ks);
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some((p, v));
            }
        }
    }
    best.map(|(k, _)| k).ok_or_else(|| Error::Numerical("no feasible kappa1 on the search grid".into()))
}

/// Whether three steps `M(κ₃)M(κ₂)M(κ₁)` can realize the target:
/// false exactly when `d = 0` and `b ≠ 1`.
pub fn three_step_reachable(target: &SymplecticMap) -> Result<bool> {
    let (_, b, _, d) = target.entries_2x2()?;
    Ok(!(d.abs() < ZERO_TOL && (b - 1.0).abs() > ZERO_TOL))
}

/// `target = R(φ₁)·S(ξ)·R(φ₂)` with `ξ ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsrParams {
    pub phi1: f64,
    pub xi: f64,
    pub phi2: f64,
}

pub fn rsr_decompose(target: &SymplecticMap) -> Result<RsrParams> {
    let m = target.as_2x2()?;
    let svd = m.svd(true, true);
    let (mut u, mut vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("2x2 SVD failed".into())),
    };
    let (mut s0, mut s1) = (svd.singular_values[0], svd.singular_values[1]);
    if s0 < s1 {
        std::mem::swap(&mut s0, &mut s1);
        u.swap_columns(0, 1);
        vt.swap_rows(0, 1);
    }
    if u.determinant() < 0.0 {
        u.column_mut(1).neg_mut();
        vt.row_mut(1).neg_mut();
    }
    let mut phi1 = u[(1, 0)].atan2(u[(0, 0)]);
    let mut phi2 = vt[(1, 0)].atan2(vt[(0, 0)]);
    // R(φ₁+π) S R(φ₂+π) = R(φ₁) S R(φ₂); keep φ₁ in (−π/2, π/2].
    if phi1 <= -std::f64::consts::FRAC_PI_2 || phi1 > std::f64::consts::FRAC_PI_2 {
        phi1 = normalize_angle(phi1 + std::f64::consts::PI);
        phi2 = normalize_angle(phi2 + std::f64::consts::PI);
    }
    let xi = if s0 >= 1.0 { (0.5 * (s0 / s1).ln()).max(0.0) } else { 0.0 };
    if xi == 0.0 {
        phi2 = normalize_angle(phi2 + phi1);
        phi1 = 0.0;
    }
    Ok(RsrParams { phi1, xi, phi2 })
}

/// Maps an angle into `(−π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

/// Maps an angle into `(−π/2, π/2]`; homodyne angles are defined modulo π.
pub fn normalize_half_angle(theta: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{elementary_step, fourier, random_symplectic, rotation, squeeze};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, LN_2};

    fn oracle_product(kappas: [f64; 4]) -> SymplecticMap {
        kappas.iter().fold(SymplecticMap::identity(1), |acc, &k| elementary_step(k).compose(&acc).unwrap())
    }

    #[test]
    fn identity_gives_zero_kappas() {
        let p = decompose_four_step(&SymplecticMap::identity(1), None).unwrap();
        assert_eq!(p.kappas, [0.0; 4]);
        assert_eq!(p.noise_proxy, 4.0);
    }

    #[test]
    fn fourier_with_zero_kappa1() {
        let p = decompose_four_step(&fourier(), Some(0.0)).unwrap();
        assert_eq!(p.kappas, [0.0, 1.0, 1.0, 1.0]);
        assert!(oracle_product(p.kappas).max_abs_diff(&fourier()) < 1e-15);
    }

    #[test]
    fn squeezer_with_unit_kappa1() {
        let target = squeeze(LN_2);
        let p = decompose_four_step(&target, Some(1.0)).unwrap();
        assert_abs_diff_eq!(p.kappas[1], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.kappas[2], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.kappas[3], 2.0, epsilon = 1e-15);
        assert!(oracle_product(p.kappas).max_abs_diff(&target) < 1e-12);
    }

    #[test]
    fn singular_kappa1_is_rejected() {
        // F has d = 0, so κ₃ = c = 1 for every κ₁; use diag(2, 1/2) whose pole is κ₁ = 0.
        let err = decompose_four_step(&squeeze(LN_2), Some(0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularParameter(_)));
    }

    #[test]
    fn selector_examples() {
        assert_eq!(select_free_kappa1(&SymplecticMap::identity(1)).unwrap(), 0.0);
        let k = select_free_kappa1(&fourier()).unwrap();
        let best = decompose_four_step(&fourier(), Some(k)).unwrap().noise_proxy;
        assert!(best <= 7.0);
        assert_abs_diff_eq!(k, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(best, 6.5, epsilon = 1e-10);
        assert_eq!(k, select_free_kappa1(&fourier()).unwrap());
    }

    #[test]
    fn reachability_examples() {
        assert!(three_step_reachable(&SymplecticMap::identity(1)).unwrap());
        assert!(!three_step_reachable(&fourier()).unwrap());
        assert!(three_step_reachable(&squeeze(LN_2)).unwrap());
    }

    #[test]
    fn squeezer_reachable_on_three_step_grid() {
        let target = squeeze(LN_2).as_2x2().unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| -10.0 + 0.05 * i as f64).collect();
        let best = grid
            .iter()
            .flat_map(|&k1| grid.iter().map(move |&k2| (k1, k2)))
            .map(|(k1, k2)| {
                // Best κ₃ for fixed (κ₁, κ₂) is found on the grid as well.
                grid.iter().map(|&k3| (step_product(&[k1, k2, k3]) - target).amax()).fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-3, "best grid residual {best}");
    }

    #[test]
    fn homodyne_setting_examples() {
        let s = homodyne_setting(0.0);
        assert_eq!((s.theta, s.gain), (0.0, 1.0));
        let s = homodyne_setting(1.0);
        assert_abs_diff_eq!(s.theta, FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(s.gain, 2f64.sqrt(), epsilon = 1e-15);
        for i in 0..100 {
            let kappa = -25.0 + 0.5 * i as f64 + 0.013 * i as f64;
            let s = homodyne_setting(kappa);
            assert!((s.gain * s.theta.sin() - kappa).abs() < 1e-14 * kappa.abs().max(1.0));
            assert!((s.gain * s.theta.cos() - 1.0).abs() < 1e-14);
            assert!((s.theta.tan() - kappa).abs() < 1e-12 * kappa.abs().max(1.0));
        }
    }

    fn rsr_product(p: RsrParams) -> SymplecticMap {
        rotation(p.phi1).compose(&squeeze(p.xi)).unwrap().compose(&rotation(p.phi2)).unwrap()
    }

    #[test]
    fn rsr_examples() {
        let p = rsr_decompose(&SymplecticMap::identity(1)).unwrap();
        assert_eq!(p.xi, 0.0);
        assert!(rsr_product(p).max_abs_diff(&SymplecticMap::identity(1)) < 1e-12);

        let p = rsr_decompose(&squeeze(0.7)).unwrap();
        assert_abs_diff_eq!(p.phi1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.xi, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phi2, 0.0, epsilon = 1e-12);

        for seed in 0..200 {
            let t = random_symplectic(1, seed).unwrap();
            let p = rsr_decompose(&t).unwrap();
            assert!(p.xi >= 0.0);
            assert!(rsr_product(p).max_abs_diff(&t) < 1e-10);
            // Singular values of the 2x2 matrix are e^{±ξ}.
            let sv = t.as_2x2().unwrap().singular_values();
            assert_abs_diff_eq!(sv.max().ln(), p.xi, epsilon = 1e-10);
        }
    }

    #[test]
    fn angle_normalization() {
        use std::f64::consts::{FRAC_PI_2, PI};
        assert_eq!(normalize_angle(PI), PI);
        assert_abs_diff_eq!(normalize_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI / 2.0), -FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(normalize_half_angle(FRAC_PI_2), FRAC_PI_2);
        assert_abs_diff_eq!(normalize_half_angle(-FRAC_PI_2), FRAC_PI_2, epsilon = 1e-15);
    }
}
