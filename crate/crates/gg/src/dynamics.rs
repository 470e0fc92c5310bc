//! Autonomous Hamiltonian systems on the unit sphere and their flows.
//!
//! The area form is normalized to total area one, so the Hamiltonian
//! vector field of a function `H` is `X_H(p) = 4 pi (grad H x p)`: scaling
//! the standard area form of the unit sphere (total `4 pi`) down to one
//! scales the vector field up by the same factor. With this convention the
//! height field `H(p) = s (p . axis)` generates rotation about `axis` with
//! angular velocity `4 pi s`, counterclockwise seen from the axis tip.
//!
//! Flows are integrated with fixed-step classical Runge-Kutta and per-step
//! renormalization back to the sphere. The renormalization correction is a
//! cheap local error proxy; a step that needs more than [`RENORM_LIMIT`]
//! of it is rejected as too large for the field's speed.

use crate::sphere::{tangent_basis, SphericalCap, SpherePoint};
use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Default integrator step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Largest tolerated per-step renormalization correction `| |p| - 1 |`.
pub const RENORM_LIMIT: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("renormalization correction {correction:.3e} exceeds {RENORM_LIMIT:.0e}; \
             reduce the integrator step")]
    StepSizeTooLarge { correction: f64 },
    #[error("flow time {0} outside [-1, 1]")]
    TimeOutOfRange(f64),
    #[error("operation needs a system with a declared support cap")]
    NoSupportCap,
    #[error("composition needs matching factor and exponent counts: {factors} vs {exponents}")]
    LengthMismatch { factors: usize, exponents: usize },
    #[error("composition needs at least one factor")]
    EmptyComposition,
}

/// A closed-form autonomous Hamiltonian, optionally supported in a cap.
///
/// Outside a declared support cap the field vanishes identically (not just
/// approximately), so the flow is the exact identity there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianSystem {
    /// `H(p) = value`; generates the identity.
    Constant { value: f64 },
    /// `H(p) = scale * (p . axis)`; generates rigid rotation about `axis`
    /// with angular velocity `4 pi * scale`.
    Height { axis: SpherePoint, scale: f64 },
    /// Radial bump `H(p) = strength * (1 - (r / r0)^2)^3` inside the cap
    /// (`r` the geodesic distance to the cap center, `r0` its half-angle),
    /// zero outside. Generates a differential rotation about the center:
    /// each cap-radius circle turns rigidly.
    Twist { cap: SphericalCap, strength: f64 },
}

impl HamiltonianSystem {
    /// Disc twist supported in `cap`.
    pub fn twist_map(cap: SphericalCap, strength: f64) -> HamiltonianSystem {
        assert!(strength != 0.0, "twist strength must be nonzero");
        HamiltonianSystem::Twist { cap, strength }
    }

    /// The support cap, when the field vanishes outside one.
    pub fn support(&self) -> Option<&SphericalCap> {
        match self {
            HamiltonianSystem::Twist { cap, .. } => Some(cap),
            _ => None,
        }
    }

    /// Value of the Hamiltonian at `p`.
    pub fn value(&self, p: &SpherePoint) -> f64 {
        match self {
            HamiltonianSystem::Constant { value } => *value,
            HamiltonianSystem::Height { axis, scale } => scale * p.dot(axis),
            HamiltonianSystem::Twist { cap, strength } => {
                let r = cap.center().angle_to(p);
                let r0 = cap.half_angle();
                if r >= r0 {
                    0.0
                } else {
                    let u = 1.0 - (r / r0) * (r / r0);
                    strength * u * u * u
                }
            }
        }
    }

    /// Hamiltonian vector field `X_H(p) = 4 pi (grad H x p)`.
    ///
    /// Returns the exact zero vector wherever the Hamiltonian is locally
    /// constant, in particular everywhere outside a support cap.
    pub fn vector_field(&self, p: &SpherePoint) -> Vector3<f64> {
        match self {
            HamiltonianSystem::Constant { .. } => Vector3::zeros(),
            HamiltonianSystem::Height { axis, scale } => {
                4.0 * PI * scale * axis.vec().cross(&p.vec())
            }
            HamiltonianSystem::Twist { cap, strength } => {
                let u = cap.center();
                let r = u.angle_to(p);
                let r0 = cap.half_angle();
                if r >= r0 {
                    return Vector3::zeros();
                }
                // Angular velocity of the cap-radius circle through p:
                // Omega(r) = 24 pi s r (1 - (r/r0)^2)^2 / (r0^2 sin r),
                // extended by continuity to Omega(0) = 24 pi s / r0^2.
                let w = 1.0 - (r / r0) * (r / r0);
                let r_over_sin = if r < 1e-8 { 1.0 } else { r / r.sin() };
                let omega = 24.0 * PI * strength * w * w * r_over_sin / (r0 * r0);
                omega * u.vec().cross(&p.vec())
            }
        }
    }

    /// Time-`t` flow map applied to `p`, integrated with step `step`.
    ///
    /// Negative `t` integrates the reversed field. Points where every
    /// integrator stage sees an exactly zero field are returned bitwise
    /// unchanged.
    pub fn flow(
        &self,
        t: f64,
        p: &SpherePoint,
        step: f64,
    ) -> Result<SpherePoint, DynamicsError> {
        assert!(step > 0.0, "integrator step must be positive");
        if !(-1.0..=1.0).contains(&t) {
            return Err(DynamicsError::TimeOutOfRange(t));
        }
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        let mut remaining = t.abs();
        let mut x = p.vec();
        let mut moved = false;
        while remaining > 0.0 {
            let h = step.min(remaining) * sign;
            let k1 = self.field_at(&x);
            let k2 = self.field_at(&(x + (h / 2.0) * k1));
            let k3 = self.field_at(&(x + (h / 2.0) * k2));
            let k4 = self.field_at(&(x + h * k3));
            let dx = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if dx != Vector3::zeros() {
                moved = true;
                x += dx;
                let norm = x.norm();
                let correction = (norm - 1.0).abs();
                if correction > RENORM_LIMIT {
                    return Err(DynamicsError::StepSizeTooLarge { correction });
                }
                x /= norm;
            }
            remaining -= step.min(remaining);
        }
        // A trajectory the field never touched stays bitwise identical.
        if moved {
            Ok(SpherePoint::new(x))
        } else {
            Ok(*p)
        }
    }

    fn field_at(&self, x: &Vector3<f64>) -> Vector3<f64> {
        // Integrator stages may leave the sphere slightly; evaluate on the
        // radial projection so the field stays tangent to the nearby sphere.
        let n = x.norm();
        self.vector_field(&SpherePoint::new(*x / n))
    }

    /// The same twist transported to a cap of area `epsilon * area` about
    /// the same center, with strength scaled by `epsilon`.
    ///
    /// The strength factor matches the conformal shrinking of the disc:
    /// pulling the Hamiltonian back through an area-`epsilon` rescaling
    /// multiplies it by `epsilon`, which keeps the rotation-angle profile
    /// over the normalized cap radius fixed up to curvature corrections.
    pub fn rescale_support(&self, epsilon: f64) -> Result<HamiltonianSystem, DynamicsError> {
        assert!(
            epsilon > 0.0 && epsilon <= 1.0,
            "rescale factor must lie in (0, 1], got {epsilon}"
        );
        match self {
            HamiltonianSystem::Twist { cap, strength } => Ok(HamiltonianSystem::Twist {
                cap: SphericalCap::new(cap.center(), epsilon * cap.area()),
                strength: epsilon * strength,
            }),
            _ => Err(DynamicsError::NoSupportCap),
        }
    }

    /// Conjugated system `H o R^{-1}`: the model family is closed under
    /// rotation, so this is exact, not numerical.
    pub fn conjugate_by_rotation(&self, rot: &Rotation3<f64>) -> HamiltonianSystem {
        match self {
            HamiltonianSystem::Constant { value } => {
                HamiltonianSystem::Constant { value: *value }
            }
            HamiltonianSystem::Height { axis, scale } => HamiltonianSystem::Height {
                axis: SpherePoint::new(rot * axis.vec()),
                scale: *scale,
            },
            HamiltonianSystem::Twist { cap, strength } => HamiltonianSystem::Twist {
                cap: SphericalCap::new(SpherePoint::new(rot * cap.center().vec()), cap.area()),
                strength: *strength,
            },
        }
    }
}

/// Strength making the time-1 twist rotate the circle at normalized cap
/// radius `rho` by `angle` radians.
///
/// Inverts `Omega(rho r0) = angle` for the twist profile; `rho` must lie
/// strictly inside `(0, 1)` where the profile is nondegenerate.
pub fn twist_strength_for_rotation(cap: &SphericalCap, rho: f64, angle: f64) -> f64 {
    assert!(rho > 0.0 && rho < 1.0, "normalized radius must lie in (0, 1)");
    assert!(angle != 0.0, "target angle must be nonzero");
    let r0 = cap.half_angle();
    let w = 1.0 - rho * rho;
    angle * r0 * (rho * r0).sin() / (24.0 * PI * rho * w * w)
}

/// Time-ordered composition `f_1^{k_1} ... f_m^{k_m}` as a concatenated
/// isotopy: each unit power is traversed on its own equal share of [0, 1],
/// negative powers along the reversed flow.
#[derive(Debug, Clone)]
pub struct DiffeoTrace {
    factors: Vec<(HamiltonianSystem, i64)>,
    /// Expanded unit traversals: factor index and direction.
    legs: Vec<(usize, i8)>,
    step: f64,
}

/// Builds the trace of `systems[0]^{exponents[0]} ... ` with integrator
/// step `step`. Zero exponents are dropped; an all-zero word yields the
/// identity trace.
pub fn compose(
    systems: &[HamiltonianSystem],
    exponents: &[i64],
    step: f64,
) -> Result<DiffeoTrace, DynamicsError> {
    if systems.is_empty() {
        return Err(DynamicsError::EmptyComposition);
    }
    if systems.len() != exponents.len() {
        return Err(DynamicsError::LengthMismatch {
            factors: systems.len(),
            exponents: exponents.len(),
        });
    }
    let mut factors = Vec::new();
    let mut legs = Vec::new();
    for (sys, &k) in systems.iter().zip(exponents) {
        if k == 0 {
            continue;
        }
        let idx = factors.len();
        factors.push((sys.clone(), k));
        let dir = if k > 0 { 1i8 } else { -1i8 };
        for _ in 0..k.unsigned_abs() {
            legs.push((idx, dir));
        }
    }
    Ok(DiffeoTrace { factors, legs, step })
}

impl DiffeoTrace {
    /// The retained (factor, exponent) pairs, zero exponents dropped.
    pub fn factors(&self) -> &[(HamiltonianSystem, i64)] {
        &self.factors
    }

    /// Number of unit-time traversals in the concatenated isotopy.
    pub fn leg_count(&self) -> usize {
        self.legs.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// The `p`-th power: the whole leg sequence traversed `p` times.
    /// `p = 0` yields the identity trace.
    pub fn power(&self, p: u32) -> DiffeoTrace {
        let mut legs = Vec::with_capacity(self.legs.len() * p as usize);
        for _ in 0..p {
            legs.extend_from_slice(&self.legs);
        }
        DiffeoTrace {
            factors: self.factors.clone(),
            legs,
            step: self.step,
        }
    }

    /// The inverse isotopy: legs in reverse order, each run backwards.
    pub fn inverse(&self) -> DiffeoTrace {
        let legs = self.legs.iter().rev().map(|&(i, d)| (i, -d)).collect();
        DiffeoTrace {
            factors: self.factors.clone(),
            legs,
            step: self.step,
        }
    }

    /// Concatenation: this isotopy first, then `other`. The finer of the
    /// two integrator steps is kept.
    pub fn then(&self, other: &DiffeoTrace) -> DiffeoTrace {
        let mut factors = self.factors.clone();
        let offset = factors.len();
        factors.extend(other.factors.iter().cloned());
        let mut legs = self.legs.clone();
        legs.extend(other.legs.iter().map(|&(i, d)| (i + offset, d)));
        DiffeoTrace {
            factors,
            legs,
            step: self.step.min(other.step),
        }
    }

    /// Applies [`HamiltonianSystem::rescale_support`] to every factor;
    /// fails when any factor has no support cap.
    pub fn rescale_support(&self, epsilon: f64) -> Result<DiffeoTrace, DynamicsError> {
        let mut factors = Vec::with_capacity(self.factors.len());
        for (sys, k) in &self.factors {
            factors.push((sys.rescale_support(epsilon)?, *k));
        }
        Ok(DiffeoTrace {
            factors,
            legs: self.legs.clone(),
            step: self.step,
        })
    }

    /// Distinct support caps across the factors, in factor order. Empty
    /// when no factor is compactly supported.
    pub fn support_caps(&self) -> Vec<SphericalCap> {
        let mut caps: Vec<SphericalCap> = Vec::new();
        for (sys, _) in &self.factors {
            if let Some(cap) = sys.support() {
                if !caps.iter().any(|c| c == cap) {
                    caps.push(*cap);
                }
            }
        }
        caps
    }

    /// Isotopy position at normalized time `t` in [0, 1] starting from `p`.
    /// `t = 0` returns `p` bitwise.
    pub fn eval(&self, p: &SpherePoint, t: f64) -> Result<SpherePoint, DynamicsError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(DynamicsError::TimeOutOfRange(t));
        }
        let m = self.legs.len();
        if m == 0 {
            return Ok(*p);
        }
        let s = t * m as f64;
        let full = (s.floor() as usize).min(m - 1);
        let partial = s - full as f64;
        let mut x = *p;
        for &(idx, dir) in &self.legs[..full] {
            x = self.factors[idx].0.flow(dir as f64, &x, self.step)?;
        }
        if partial > 0.0 {
            let (idx, dir) = self.legs[full];
            x = self.factors[idx].0.flow(dir as f64 * partial, &x, self.step)?;
        }
        Ok(x)
    }

    /// Time-1 map applied to `p`.
    pub fn time_one(&self, p: &SpherePoint) -> Result<SpherePoint, DynamicsError> {
        let mut x = *p;
        for &(idx, dir) in &self.legs {
            x = self.factors[idx].0.flow(dir as f64, &x, self.step)?;
        }
        Ok(x)
    }

    /// Trajectory sampled on a uniform grid of `samples_per_leg` points per
    /// unit traversal, plus the endpoints. Purely incremental: one flow
    /// integration over [0, 1] total.
    ///
    /// The grid is `(t, position)` with `t` global in [0, 1]; the first
    /// entry is `(0, p)` bitwise.
    pub fn trajectory(
        &self,
        p: &SpherePoint,
        samples_per_leg: usize,
    ) -> Result<Vec<(f64, SpherePoint)>, DynamicsError> {
        assert!(samples_per_leg >= 1, "need at least one sample per leg");
        let m = self.legs.len();
        let mut out = Vec::with_capacity(m * samples_per_leg + 1);
        let mut x = *p;
        out.push((0.0, x));
        let du = 1.0 / samples_per_leg as f64;
        for (j, &(idx, dir)) in self.legs.iter().enumerate() {
            let sys = &self.factors[idx].0;
            for i in 0..samples_per_leg {
                x = sys.flow(dir as f64 * du, &x, self.step)?;
                let t = (j as f64 + (i + 1) as f64 * du) / m as f64;
                out.push((t, x));
            }
        }
        Ok(out)
    }
}

/// `|log det DF|` of a sphere map at `p` by central differences of
/// half-width `delta` in a tangent frame; the determinant is taken of the
/// differential projected to the tangent planes at `p` and `F(p)`.
pub fn area_distortion<F>(map: F, p: &SpherePoint, delta: f64) -> f64
where
    F: Fn(&SpherePoint) -> SpherePoint,
{
    let (e1, e2) = tangent_basis(p);
    let fp = map(p);
    let (f1, f2) = tangent_basis(&fp);
    let push = |dir: &Vector3<f64>| {
        let plus = map(&SpherePoint::new(p.vec() + delta * dir));
        let minus = map(&SpherePoint::new(p.vec() - delta * dir));
        (plus.vec() - minus.vec()) / (2.0 * delta)
    };
    let c1 = push(&e1);
    let c2 = push(&e2);
    let det = c1.dot(&f1) * c2.dot(&f2) - c1.dot(&f2) * c2.dot(&f1);
    det.abs().ln().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::uniform_point;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_cap() -> SphericalCap {
        SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), 0.1)
    }

    #[test]
    fn constant_hamiltonian_is_stationary() {
        let sys = HamiltonianSystem::Constant { value: 2.5 };
        let p = SpherePoint::from_coords(0.3, -0.4, 0.86);
        assert_eq!(sys.vector_field(&p), Vector3::zeros());
        let q = sys.flow(1.0, &p, DEFAULT_STEP).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn height_flow_matches_rotation_closed_form() {
        // H = s (p . axis) rotates about axis by 4 pi s t.
        let axis = SpherePoint::from_coords(0.1, -0.5, 2.0);
        let scale = 0.23;
        let sys = HamiltonianSystem::Height { axis, scale };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let p = uniform_point(&mut rng);
            for t in [0.0, 0.17, 0.5, 1.0] {
                let got = sys.flow(t, &p, DEFAULT_STEP).unwrap();
                let rot = Rotation3::from_axis_angle(
                    &nalgebra::Unit::new_normalize(axis.vec()),
                    4.0 * PI * scale * t,
                );
                let want = rot * p.vec();
                assert!(
                    (got.vec() - want).norm() < 1e-8,
                    "t={t}: drift {}",
                    (got.vec() - want).norm()
                );
            }
        }
    }

    #[test]
    fn flow_at_time_zero_is_bitwise_identity() {
        let sys = HamiltonianSystem::twist_map(test_cap(), 0.03);
        let p = SpherePoint::from_coords(0.1, 0.2, 0.97);
        assert_eq!(sys.flow(0.0, &p, DEFAULT_STEP).unwrap(), p);
    }

    #[test]
    fn field_is_orthogonal_to_gradient_direction() {
        // Energy conservation at the level of the field: X_H . grad H = 0.
        // For both model families the gradient is parallel to a fixed axis
        // (the rotation axis or the cap center), so test against that.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let twist = HamiltonianSystem::twist_map(test_cap(), 0.05);
        let height = HamiltonianSystem::Height {
            axis: SpherePoint::from_coords(1.0, 1.0, 0.5),
            scale: 1.3,
        };
        for _ in 0..50 {
            let p = uniform_point(&mut rng);
            let xt = twist.vector_field(&p);
            let xh = height.vector_field(&p);
            assert!(xt.dot(&test_cap().center().vec()).abs() < 1e-12);
            if let HamiltonianSystem::Height { axis, .. } = &height {
                assert!(xh.dot(&axis.vec()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn twist_conserves_energy_along_trajectories() {
        let sys = HamiltonianSystem::twist_map(test_cap(), 0.04);
        let p = SpherePoint::from_coords(0.25, 0.1, 0.96);
        let h0 = sys.value(&p);
        for t in [0.2, 0.6, 1.0] {
            let q = sys.flow(t, &p, DEFAULT_STEP).unwrap();
            assert!((sys.value(&q) - h0).abs() < 1e-8);
            // Halved step agrees, so the drift is not step-size luck.
            let q2 = sys.flow(t, &p, DEFAULT_STEP / 2.0).unwrap();
            assert!((sys.value(&q2) - h0).abs() < 1e-8);
            assert!(q.chordal_distance(&q2) < 1e-8);
        }
    }

    #[test]
    fn twist_fixes_center_and_exterior_bitwise() {
        let cap = test_cap();
        let sys = HamiltonianSystem::twist_map(cap, 0.05);
        let center = cap.center();
        assert_eq!(sys.flow(1.0, &center, DEFAULT_STEP).unwrap(), center);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut outside = 0;
        for _ in 0..200 {
            let p = uniform_point(&mut rng);
            if !cap.contains(&p) {
                outside += 1;
                assert_eq!(sys.vector_field(&p), Vector3::zeros());
                assert_eq!(sys.flow(1.0, &p, DEFAULT_STEP).unwrap(), p);
            }
        }
        assert!(outside > 100, "sampler should land mostly outside a 0.1 cap");
    }

    #[test]
    fn twist_preserves_cap_radius() {
        let cap = test_cap();
        let sys = HamiltonianSystem::twist_map(cap, 0.05);
        let r0 = cap.half_angle();
        for frac in [0.2, 0.5, 0.8] {
            let r = frac * r0;
            let p = SpherePoint::from_coords(r.sin(), 0.0, r.cos());
            let q = sys.flow(1.0, &p, DEFAULT_STEP).unwrap();
            assert!((cap.center().angle_to(&q) - r).abs() < 1e-8);
        }
    }

    #[test]
    fn flow_reverses_to_start() {
        let sys = HamiltonianSystem::twist_map(test_cap(), 0.05);
        let p = SpherePoint::from_coords(0.2, -0.15, 0.97);
        let fwd = sys.flow(1.0, &p, DEFAULT_STEP).unwrap();
        let back = sys.flow(-1.0, &fwd, DEFAULT_STEP).unwrap();
        assert!(back.chordal_distance(&p) < 1e-8);
    }

    #[test]
    fn flows_preserve_area_at_probe_points() {
        let twist = HamiltonianSystem::twist_map(test_cap(), 0.04);
        let height = HamiltonianSystem::Height {
            axis: SpherePoint::from_coords(0.3, 0.2, 1.0),
            scale: 0.4,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for sys in [twist, height] {
            for _ in 0..50 {
                let p = uniform_point(&mut rng);
                let d = area_distortion(
                    |q| sys.flow(1.0, q, DEFAULT_STEP).unwrap(),
                    &p,
                    1e-4,
                );
                assert!(d < 1e-4, "area distortion {d} at {p:?}");
            }
        }
    }

    #[test]
    fn oversized_field_reports_step_error() {
        // At s = 20 the mid-cap angular speed is in the thousands, so a
        // 1e-3 step turns by a couple of radians and the renormalization
        // correction blows past the limit.
        let sys = HamiltonianSystem::twist_map(test_cap(), 20.0);
        let p = SpherePoint::from_coords(0.31, 0.0, 0.95);
        let err = sys.flow(1.0, &p, DEFAULT_STEP).unwrap_err();
        assert!(matches!(err, DynamicsError::StepSizeTooLarge { .. }));
    }

    #[test]
    fn rescale_support_shrinks_cap_and_strength() {
        let sys = HamiltonianSystem::twist_map(test_cap(), 0.04);
        assert_eq!(sys.rescale_support(1.0).unwrap(), sys);
        let small = sys.rescale_support(0.25).unwrap();
        match &small {
            HamiltonianSystem::Twist { cap, strength } => {
                assert_abs_diff_eq!(cap.area(), 0.025);
                assert_abs_diff_eq!(*strength, 0.01);
                assert_eq!(cap.center(), test_cap().center());
            }
            _ => unreachable!(),
        }
        // Moving fraction matches the shrunken area: membership sampling.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 20_000;
        let moved = (0..trials)
            .filter(|_| {
                let p = uniform_point(&mut rng);
                small.vector_field(&p) != Vector3::zeros()
            })
            .count();
        let frac = moved as f64 / trials as f64;
        // 3 sigma for a 0.025 Bernoulli at 20k trials is about 0.0033.
        assert!((frac - 0.025).abs() < 0.004, "moving fraction {frac}");
        let err = HamiltonianSystem::Constant { value: 0.0 }.rescale_support(0.5);
        assert_eq!(err, Err(DynamicsError::NoSupportCap));
    }

    #[test]
    fn rescaled_twist_keeps_rotation_profile() {
        // The rotation angle at matched normalized radius should be close
        // to the original for small caps: same profile, epsilon strength.
        let cap = SphericalCap::new(SpherePoint::north(), 0.05);
        let sys = HamiltonianSystem::twist_map(cap, 0.2);
        let small = sys.rescale_support(0.3).unwrap();
        let angle = |s: &HamiltonianSystem, rho: f64| {
            let c = s.support().unwrap();
            let r = rho * c.half_angle();
            let p = SpherePoint::from_coords(r.sin(), 0.0, r.cos());
            let x = s.vector_field(&p);
            // Angular speed about the center axis.
            x.norm() / r.sin()
        };
        for rho in [0.3, 0.6, 0.9] {
            let a = angle(&sys, rho);
            let b = angle(&small, rho);
            assert!((a - b).abs() / a.abs() < 0.02, "rho={rho}: {a} vs {b}");
        }
    }

    #[test]
    fn conjugation_by_rotation_commutes_with_flow() {
        let sys = HamiltonianSystem::twist_map(
            SphericalCap::new(SpherePoint::from_coords(0.3, 0.2, 0.93), 0.08),
            0.02,
        );
        let rot = Rotation3::from_euler_angles(0.4, -1.1, 0.7);
        let conj = sys.conjugate_by_rotation(&rot);
        assert_eq!(
            sys.conjugate_by_rotation(&Rotation3::identity()),
            sys.clone()
        );
        let moved_center = conj.support().unwrap().center();
        assert!(
            (moved_center.vec() - rot * sys.support().unwrap().center().vec()).norm() < 1e-15
        );
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let p = uniform_point(&mut rng);
            let lhs = conj
                .flow(1.0, &SpherePoint::new(rot * p.vec()), DEFAULT_STEP)
                .unwrap();
            let rhs = rot * sys.flow(1.0, &p, DEFAULT_STEP).unwrap().vec();
            assert!((lhs.vec() - rhs).norm() < 1e-8);
        }
    }

    #[test]
    fn compose_single_factor_matches_flow() {
        let sys = HamiltonianSystem::twist_map(test_cap(), 0.04);
        let tr = compose(std::slice::from_ref(&sys), &[1], DEFAULT_STEP).unwrap();
        let p = SpherePoint::from_coords(0.2, 0.05, 0.98);
        let via_trace = tr.time_one(&p).unwrap();
        let via_flow = sys.flow(1.0, &p, DEFAULT_STEP).unwrap();
        assert_eq!(via_trace, via_flow);
        assert_eq!(tr.eval(&p, 0.0).unwrap(), p);
        let mid_trace = tr.eval(&p, 0.5).unwrap();
        let mid_flow = sys.flow(0.5, &p, DEFAULT_STEP).unwrap();
        assert!(mid_trace.chordal_distance(&mid_flow) < 1e-12);
    }

    #[test]
    fn compose_drops_zero_exponents() {
        let a = HamiltonianSystem::twist_map(test_cap(), 0.4);
        let b = HamiltonianSystem::Constant { value: 1.0 };
        let tr = compose(&[a, b], &[0, 0], DEFAULT_STEP).unwrap();
        assert_eq!(tr.leg_count(), 0);
        let p = SpherePoint::from_coords(0.2, 0.05, 0.98);
        assert_eq!(tr.time_one(&p).unwrap(), p);
        assert_eq!(tr.eval(&p, 0.7).unwrap(), p);
        assert!(matches!(
            compose(&[], &[], DEFAULT_STEP),
            Err(DynamicsError::EmptyComposition)
        ));
    }

    #[test]
    fn disjointly_supported_factors_commute() {
        let a = HamiltonianSystem::twist_map(
            SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), 0.06),
            0.02,
        );
        let b = HamiltonianSystem::twist_map(
            SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, -1.0), 0.06),
            -0.03,
        );
        let ab = compose(&[a.clone(), b.clone()], &[2, 1], DEFAULT_STEP).unwrap();
        let ba = compose(&[b, a], &[1, 2], DEFAULT_STEP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let p = uniform_point(&mut rng);
            let x = ab.time_one(&p).unwrap();
            let y = ba.time_one(&p).unwrap();
            assert!(x.chordal_distance(&y) < 1e-8);
        }
    }

    #[test]
    fn negative_exponent_inverts_the_factor() {
        let sys = HamiltonianSystem::twist_map(test_cap(), 0.04);
        let tr = compose(&[sys.clone(), sys], &[1, -1], DEFAULT_STEP).unwrap();
        assert_eq!(tr.leg_count(), 2);
        let p = SpherePoint::from_coords(0.15, -0.1, 0.98);
        let back = tr.time_one(&p).unwrap();
        assert!(back.chordal_distance(&p) < 1e-8);
    }

    #[test]
    fn trajectory_grid_is_monotone_and_consistent() {
        let sys = HamiltonianSystem::twist_map(test_cap(), 0.04);
        let tr = compose(std::slice::from_ref(&sys), &[2], DEFAULT_STEP).unwrap();
        let p = SpherePoint::from_coords(0.2, 0.0, 0.98);
        let path = tr.trajectory(&p, 8).unwrap();
        assert_eq!(path.len(), 17);
        assert_eq!(path[0], (0.0, p));
        assert!((path.last().unwrap().0 - 1.0).abs() < 1e-12);
        for w in path.windows(2) {
            assert!(w[1].0 > w[0].0);
        }
        // Grid samples agree with direct eval at matching times.
        for &(t, q) in &path[1..] {
            let direct = tr.eval(&p, t).unwrap();
            assert!(direct.chordal_distance(&q) < 1e-9);
        }
    }

    #[test]
    fn twist_strength_hits_requested_rotation_angle() {
        let cap = test_cap();
        let rho = 0.5;
        let target = 1.5;
        let s = twist_strength_for_rotation(&cap, rho, target);
        let sys = HamiltonianSystem::twist_map(cap, s);
        let r = rho * cap.half_angle();
        let p = SpherePoint::from_coords(r.sin(), 0.0, r.cos());
        let q = sys.flow(1.0, &p, DEFAULT_STEP).unwrap();
        // Signed angle about the z axis.
        let turned = q.vec().y.atan2(q.vec().x);
        assert!((turned - target).abs() < 1e-6, "turned {turned}");
    }

    #[test]
    fn power_repeats_the_leg_sequence() {
        let a = HamiltonianSystem::twist_map(
            SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), 0.1),
            0.02,
        );
        let b = HamiltonianSystem::twist_map(
            SphericalCap::new(SpherePoint::from_coords(1.0, 0.0, 0.0), 0.1),
            -0.03,
        );
        let f = compose(&[a, b], &[2, -1], DEFAULT_STEP).unwrap();
        let f3 = f.power(3);
        assert_eq!(f3.leg_count(), 3 * f.leg_count());
        assert_eq!(f.power(0).leg_count(), 0);
        let p = SpherePoint::from_coords(0.1, 0.05, 0.99);
        let mut q = p;
        for _ in 0..3 {
            q = f.time_one(&q).unwrap();
        }
        // Identical flow operations in identical order: exact agreement.
        assert_eq!(f3.time_one(&p).unwrap(), q);
    }

    #[test]
    fn inverse_undoes_the_isotopy() {
        let a = HamiltonianSystem::twist_map(
            SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), 0.15),
            0.04,
        );
        let b = HamiltonianSystem::twist_map(
            SphericalCap::new(SpherePoint::from_coords(0.0, 1.0, 0.0), 0.08),
            0.01,
        );
        let f = compose(&[a, b], &[1, 2], DEFAULT_STEP).unwrap();
        let p = SpherePoint::from_coords(0.2, 0.1, 0.97);
        let back = f.inverse().time_one(&f.time_one(&p).unwrap()).unwrap();
        assert!(back.chordal_distance(&p) < 1e-8);
    }

    #[test]
    fn then_matches_sequential_application() {
        let a = HamiltonianSystem::twist_map(
            SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), 0.12),
            0.03,
        );
        let b = HamiltonianSystem::Height {
            axis: SpherePoint::from_coords(0.0, 1.0, 0.0),
            scale: 0.01,
        };
        let f = compose(std::slice::from_ref(&a), &[1], DEFAULT_STEP).unwrap();
        let g = compose(std::slice::from_ref(&b), &[1], DEFAULT_STEP).unwrap();
        let fg = f.then(&g);
        assert_eq!(fg.leg_count(), 2);
        let p = SpherePoint::from_coords(0.3, -0.2, 0.93);
        let seq = g.time_one(&f.time_one(&p).unwrap()).unwrap();
        assert_eq!(fg.time_one(&p).unwrap(), seq);
    }

    #[test]
    fn trace_rescale_and_support_caps() {
        let cap = SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), 0.1);
        let a = HamiltonianSystem::twist_map(cap, 0.02);
        let f = compose(&[a.clone(), a], &[1, -2], DEFAULT_STEP).unwrap();
        // The same cap twice collapses to one entry.
        assert_eq!(f.support_caps(), vec![cap]);
        let half = f.rescale_support(0.5).unwrap();
        let caps = half.support_caps();
        assert_eq!(caps.len(), 1);
        assert!((caps[0].area() - 0.05).abs() < 1e-15);
        assert_eq!(half.leg_count(), f.leg_count());
        // A factor without a cap poisons the rescale.
        let with_height = f.then(
            &compose(
                &[HamiltonianSystem::Height {
                    axis: SpherePoint::from_coords(1.0, 0.0, 0.0),
                    scale: 1.0,
                }],
                &[1],
                DEFAULT_STEP,
            )
            .unwrap(),
        );
        assert_eq!(
            with_height.rescale_support(0.5).unwrap_err(),
            DynamicsError::NoSupportCap
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn short_twist_flows_conserve_energy_and_radius(
            seed in 0u64..1000,
            area in 0.02f64..0.3,
            strength in 0.002f64..0.02,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cap = SphericalCap::new(uniform_point(&mut rng), area);
            let sys = HamiltonianSystem::twist_map(cap, strength);
            let p = uniform_point(&mut rng);
            let q = sys.flow(0.1, &p, DEFAULT_STEP).unwrap();
            prop_assert!((sys.value(&q) - sys.value(&p)).abs() < 1e-8);
            prop_assert!((cap.center().angle_to(&q) - cap.center().angle_to(&p)).abs() < 1e-8);
        }
    }
}
