//! Spread rate `S = R0 (1 + φW + φS)` in the outward-normal direction.
//!
//! Closures used here:
//!
//! * wind factor `φW = c · min(e, max(0, u·n))^b`
//! * slope factor `φS = d · max(0, ∇z·n)²`
//!
//! The functions are generic over [`Real`] so the network loss can
//! differentiate through the dependence of `n` on the level-set gradient.

use crate::ad::Real;
use crate::scenario::{FuelParameters, ScenarioConfig};

/// Below this gradient norm the front normal is undefined and `S = R0`.
pub const EPS_GRAD: f64 = 1e-8;

/// Unit outward normal `∇ψ/‖∇ψ‖`, or `None` when `‖∇ψ‖ < EPS_GRAD`.
pub fn outward_normal(grad: [f64; 2]) -> Option<[f64; 2]> {
    let mag = grad[0].hypot(grad[1]);
    (mag >= EPS_GRAD).then(|| [grad[0] / mag, grad[1] / mag])
}

pub fn wind_factor<T: Real>(wind: [f64; 2], normal: [T; 2], fuel: &FuelParameters) -> T {
    let un = normal[0] * wind[0] + normal[1] * wind[1];
    let clamped = un.max_const(0.0).min_const(fuel.wind_cap);
    if clamped.value() <= 0.0 {
        return clamped.constant(0.0);
    }
    clamped.powf(fuel.wind_exp) * fuel.wind_coeff
}

pub fn slope_factor<T: Real>(grad_z: [f64; 2], normal: [T; 2], fuel: &FuelParameters) -> T {
    let s = (normal[0] * grad_z[0] + normal[1] * grad_z[1]).max_const(0.0);
    s.square() * fuel.slope_coeff
}

pub fn spread_rate<T: Real>(fuel: &FuelParameters, phi_w: T, phi_s: T) -> T {
    (phi_w + phi_s + 1.0) * fuel.r0
}

/// Position-dependent inputs of the spread rate: wind vector (m/s) and
/// terrain gradient (m/m) at a physical point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpreadInputs {
    pub wind: [f64; 2],
    pub slope: [f64; 2],
}

impl SpreadInputs {
    pub fn at(scenario: &ScenarioConfig, t: f64, x: f64, y: f64) -> Self {
        Self {
            wind: scenario.wind.at(x, y, t),
            slope: scenario.terrain.gradient(x, y),
        }
    }

    pub fn is_uniform_zero(&self) -> bool {
        self.wind == [0.0, 0.0] && self.slope == [0.0, 0.0]
    }
}

/// Physical spread rate for a front whose outward normal points along
/// `grad` (any positive multiple of `∇ψ` in isotropic coordinates).
pub fn normal_spread<T: Real>(fuel: &FuelParameters, inputs: &SpreadInputs, grad: [T; 2]) -> T {
    let mag = (grad[0].square() + grad[1].square()).sqrt();
    if !(mag.value() >= EPS_GRAD) {
        return grad[0].constant(fuel.r0);
    }
    let n = [grad[0] / mag, grad[1] / mag];
    let phi_w = wind_factor(inputs.wind, n, fuel);
    let phi_s = slope_factor(inputs.slope, n, fuel);
    spread_rate(fuel, phi_w, phi_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fuel(r0: f64, c: f64, b: f64, e: f64, d: f64) -> FuelParameters {
        FuelParameters {
            r0,
            wind_coeff: c,
            wind_exp: b,
            wind_cap: e,
            slope_coeff: d,
            burn_time: 60.0,
            category: 0,
        }
    }

    #[test]
    fn wind_factor_cases() {
        let f = fuel(0.1, 1.0, 1.0, f64::INFINITY, 0.0);
        assert_eq!(wind_factor([2.0, 0.0], [1.0, 0.0], &f), 2.0);
        assert_eq!(wind_factor([-2.0, 0.5], [1.0, 0.0], &f), 0.0);
        let capped = fuel(0.1, 1.0, 1.0, 3.0, 0.0);
        assert_eq!(wind_factor([10.0, 0.0], [1.0, 0.0], &capped), 3.0);
    }

    #[test]
    fn slope_factor_cases() {
        let f = fuel(0.1, 0.0, 1.0, 1.0, 5.0);
        assert_eq!(slope_factor([0.0, 0.0], [0.6, 0.8], &f), 0.0);
        assert!((slope_factor([0.1, 0.0], [1.0, 0.0], &f) - 0.05).abs() < 1e-15);
        assert_eq!(slope_factor([-0.3, 0.0], [1.0, 0.0], &f), 0.0);
    }

    #[test]
    fn spread_rate_cases() {
        assert_eq!(spread_rate(&fuel(0.3, 0.0, 1.0, 1.0, 0.0), 0.0, 0.0), 0.3);
        assert_eq!(spread_rate(&fuel(0.5, 0.0, 1.0, 1.0, 0.0), 2.0, 0.0), 1.5);
        assert_eq!(spread_rate(&fuel(0.0, 0.0, 1.0, 1.0, 0.0), 7.0, 3.0), 0.0);
    }

    #[test]
    fn flat_gradient_falls_back_to_r0() {
        let f = fuel(0.25, 2.0, 1.5, 5.0, 3.0);
        let inputs = SpreadInputs { wind: [4.0, 1.0], slope: [0.2, 0.0] };
        assert_eq!(normal_spread(&f, &inputs, [1e-10, 0.0]), 0.25);
        assert!(outward_normal([0.0, 1e-9]).is_none());
        assert_eq!(outward_normal([3.0, 4.0]), Some([0.6, 0.8]));
    }

    proptest! {
        #[test]
        fn spread_nondecreasing_in_normal_wind_and_slope(
            w1 in -10.0..10.0f64, dw in 0.0..5.0f64,
            s1 in -1.0..1.0f64, ds in 0.0..1.0f64,
            b in 0.5..3.0f64,
        ) {
            let f = fuel(0.2, 0.7, b, 6.0, 4.0);
            let n = [1.0, 0.0];
            let lo = spread_rate(&f, wind_factor([w1, 0.0], n, &f), slope_factor([s1, 0.0], n, &f));
            let hi = spread_rate(&f, wind_factor([w1 + dw, 0.0], n, &f), slope_factor([s1 + ds, 0.0], n, &f));
            prop_assert!(hi >= lo);
            prop_assert!(lo >= f.r0);
        }

        #[test]
        fn wind_factor_is_rotation_invariant(
            wx in -8.0..8.0f64, wy in -8.0..8.0f64,
            phi in 0.0..std::f64::consts::TAU, theta in 0.0..std::f64::consts::TAU,
        ) {
            let f = fuel(0.1, 0.9, 1.7, 20.0, 0.0);
            let n = [phi.cos(), phi.sin()];
            let (c, s) = (theta.cos(), theta.sin());
            let rot = |v: [f64; 2]| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
            let a = wind_factor([wx, wy], n, &f);
            let b = wind_factor(rot([wx, wy]), rot(n), &f);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
