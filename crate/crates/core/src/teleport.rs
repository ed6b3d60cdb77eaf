// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Teleportation-based input coupling through a Bell measurement, and the
//! universal one-mode gate built from it plus two elementary steps.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::grid_then_golden;
use crate::single_mode::{
    normalize_angle, step_product, POLE_EXCLUSION, RECONSTRUCTION_TOL, SEARCH_POINTS, SEARCH_RANGE, ZERO_TOL,
};
use crate::symplectic::{rotation, squeeze, SymplecticMap};

/// `|cos θ₋|` below this loses the input state.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Homodyne angles of the two Bell-measurement detectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TelepAngles {
    pub theta0: f64,
    pub theta1: f64,
}

impl TelepAngles {
    /// Both angles are normalized into `(−π, π]`.
    pub fn new(theta0: f64, theta1: f64) -> Self {
        Self { theta0: normalize_angle(theta0), theta1: normalize_angle(theta1) }
    }

    pub fn from_plus_minus(theta_plus: f64, theta_minus: f64) -> Self {
        Self::new(0.5 * (theta_plus + theta_minus), 0.5 * (theta_plus - theta_minus))
    }

    pub fn theta_plus(&self) -> f64 {
        self.theta0 + self.theta1
    }

    pub fn theta_minus(&self) -> f64 {
        self.theta0 - self.theta1
    }

    pub fn is_canonical(&self) -> bool {
        self.theta_minus().cos() > 0.0
    }

    /// Shifts `θ₊` and `θ₋` by π when `cos θ₋ < 0`; the transfer matrix is
    /// unchanged.
    pub fn canonicalize(&self) -> Result<Self> {
        check_degeneracy(self.theta_minus())?;
        if self.is_canonical() {
            Ok(*self)
        } else {
            Ok(Self::new(self.theta0 + std::f64::consts::PI, self.theta1))
        }
    }

    pub fn transfer(&self) -> Result<SymplecticMap> {
        mtel(self.theta_plus(), self.theta_minus())
    }
}

fn check_degeneracy(theta_minus: f64) -> Result<f64> {
    let c = theta_minus.cos();
    if c.abs() < DEGENERACY_TOL {
        return Err(Error::DegenerateMeasurement(c.abs()));
    }
    Ok(c)
}

pub(crate) fn mtel_2x2(theta_plus: f64, theta_minus: f64) -> Result<Matrix2<f64>> {
    let cm = check_degeneracy(theta_minus)?;
    let (sp, cp) = theta_plus.sin_cos();
    let sm = theta_minus.sin();
    Ok(Matrix2::new(cp, sm + sp, sm - sp, cp) / cm)
}

/// Transfer matrix of teleportation with detector angles `θ₀ ± θ₁ = θ±`:
/// `(1/cos θ₋)·((cos θ₊, sin θ₋ + sin θ₊), (sin θ₋ − sin θ₊, cos θ₊))`.
pub fn mtel(theta_plus: f64, theta_minus: f64) -> Result<SymplecticMap> {
    Ok(SymplecticMap::from_2x2(mtel_2x2(theta_plus, theta_minus)?))
}

/// `mtel = R(outer)·S(squeeze)·R(inner)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtelFactors {
    pub outer: f64,
    pub squeeze: f64,
    pub inner: f64,
}

impl MtelFactors {
    pub fn compose(&self) -> SymplecticMap {
        rotation(self.outer)
            .compose(&squeeze(self.squeeze))
            .and_then(|m| m.compose(&rotation(self.inner)))
            .expect("one-mode factors")
    }
}

/// Squeezing along the diagonal sandwiched by rotations:
/// `R(−θ₊/2 + π/4)·S(r)·R(−θ₊/2 − π/4)` with `tanh r = sin θ₋`.
pub fn mtel_factored(theta_plus: f64, theta_minus: f64) -> Result<MtelFactors> {
    check_degeneracy(theta_minus)?;
    use std::f64::consts::FRAC_PI_4;
    Ok(MtelFactors {
        outer: -0.5 * theta_plus + FRAC_PI_4,
        squeeze: theta_minus.sin().atanh(),
        inner: -0.5 * theta_plus - FRAC_PI_4,
    })
}

/// `M(κ₄)·M(κ₃)·mtel(θ₊, θ₋)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TelepPlusTwoParams {
    pub angles: TelepAngles,
    pub kappa3: f64,
    pub kappa4: f64,
    pub free_param: f64,
    pub noise_proxy: f64,
}

impl TelepPlusTwoParams {
    pub fn reconstruct(&self) -> Result<SymplecticMap> {
        Ok(SymplecticMap::from_2x2(self.reconstruct_2x2()?))
    }

    fn reconstruct_2x2(&self) -> Result<Matrix2<f64>> {
        let t = mtel_2x2(self.angles.theta_plus(), self.angles.theta_minus())?;
        Ok(step_product(&[self.kappa3, self.kappa4]) * t)
    }
}

/// Gains squared of the two Bell detectors plus both steps.
pub fn telep_noise_proxy(angles: &TelepAngles, kappa3: f64, kappa4: f64) -> f64 {
    let c = angles.theta_minus().cos();
    2.0 / (c * c) + (1.0 + kappa3 * kappa3) + (1.0 + kappa4 * kappa4)
}

/// Solves for the given `u = cot θ₀`.
fn solve_telep(m: &Matrix2<f64>, u: f64) -> Result<TelepPlusTwoParams> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let num1 = 1.0 - d;
    let den1 = 2.0 * c - (1.0 + d) * u;
    // cot θ₁ = num1 / den1; the 0/0 case admits any θ₁ and π/2 is taken.
    let theta1 =
        if num1.abs() < ZERO_TOL && den1.abs() < ZERO_TOL { std::f64::consts::FRAC_PI_2 } else { den1.atan2(num1) };
    let den4 = c - d * u;
    let num4 = 1.0 - a + b * u;
    let kappa4 = if den4.abs() >= ZERO_TOL {
        num4 / den4
    } else if num4.abs() < ZERO_TOL {
        0.0
    } else {
        return Err(Error::SingularParameter(format!("cot(theta0) = {u} makes the kappa4 denominator vanish")));
    };
    let kappa3 = c - (1.0 + d) * u;
    let theta0 = 1f64.atan2(u);
    let angles = TelepAngles::new(theta0, theta1).canonicalize()?;
    let params = TelepPlusTwoParams {
        angles,
        kappa3,
        kappa4,
        free_param: angles.theta0,
        noise_proxy: telep_noise_proxy(&angles, kappa3, kappa4),
    };
    let residual = (params.reconstruct_2x2()? - m).amax();
    if !(residual <= RECONSTRUCTION_TOL * m.amax().max(1.0)) {
        return Err(Error::SingularParameter(format!(
            "cot(theta0) = {u} is too close to a pole (reconstruction residual {residual:.3e})"
        )));
    }
    Ok(params)
}

/// Solves `M(κ₄)M(κ₃)mtel = target`. Without `theta0`, `cot θ₀` is chosen
/// on a 401-point grid over `[−20, 20]` with golden-section refinement,
/// minimizing [`telep_noise_proxy`].
pub fn decompose_telep_plus_two(target: &SymplecticMap, theta0: Option<f64>) -> Result<TelepPlusTwoParams> {
    let m = target.as_2x2()?;
    if let Some(t) = theta0 {
        let s = t.sin();
        if !t.is_finite() || s.abs() < ZERO_TOL {
            return Err(Error::SingularParameter(format!("theta0 = {t} has no finite cotangent")));
        }
        return solve_telep(&m, t.cos() / s);
    }
    let (c, d) = (m[(1, 0)], m[(1, 1)]);
    let pole = (d.abs() >= ZERO_TOL).then(|| c / d);
    let pole_params = pole.and_then(|p| solve_telep(&m, p).ok());
    let objective = |u: f64| {
        if pole_params.is_none() && pole.is_some_and(|p| (u - p).abs() < POLE_EXCLUSION) {
            return None;
        }
        solve_telep(&m, u).ok().map(|p| p.noise_proxy)
    };
    let (lo, hi) = SEARCH_RANGE;
    let best = grid_then_golden(objective, lo, hi, SEARCH_POINTS).map(|(u, _)| solve_telep(&m, u)).transpose()?;
    match (best, pole_params) {
        (Some(b), Some(p)) => Ok(if p.noise_proxy < b.noise_proxy { p } else { b }),
        (Some(b), None) => Ok(b),
        (None, Some(p)) => Ok(p),
        (None, None) => Err(Error::Numerical("no feasible theta0 on the search grid".into())),
    }
}

/// Balanced Bell-measurement beam splitter on modes `(0, 1)`:
/// `x₀' = (x₀ − p₁)/√2`, `x₁' = (x₁ − p₀)/√2`, `p₀' = (p₀ + x₁)/√2`,
/// `p₁' = (p₁ + x₀)/√2`.
pub fn bell_splitter_relations() -> SymplecticMap {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        h, 0.0, 0.0, -h,
        0.0, h, -h, 0.0,
        0.0, h, h, 0.0,
        h, 0.0, 0.0, h,
    ]);
    SymplecticMap::from_parts(m)
}
