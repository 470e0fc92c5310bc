//! Geometry, measure and sampling on the unit 2-sphere.
//!
//! Total area is normalized to one: every `area` in this crate is a fraction
//! of the whole sphere. Points are unit 3-vectors kept normalized to 1e-12
//! by construction.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `1 + <a,b>` below which a pair counts as antipodal.
pub const DELTA_ANTIPODAL: f64 = 1e-9;

/// Default minimum chordal separation enforced when sampling configurations.
pub const DELTA_COLLISION: f64 = 1e-6;

/// Resampling budget for collision rejection in [`uniform_sample`].
const SAMPLE_RETRY_CAP: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("points are antipodal within tolerance; geodesic is not unique")]
    AntipodalPair,
    #[error("point coincides with the projection pole")]
    AtPole,
    #[error("could not draw {n} points separated by {min_sep} in {cap} attempts")]
    CollisionRetry { n: usize, min_sep: f64, cap: usize },
}

/// A point on the unit sphere. The stored vector is renormalized on
/// construction, so its Euclidean norm is 1 within 1e-12.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct SpherePoint(Vector3<f64>);

impl From<[f64; 3]> for SpherePoint {
    fn from(c: [f64; 3]) -> Self {
        SpherePoint::new(Vector3::new(c[0], c[1], c[2]))
    }
}

impl From<SpherePoint> for [f64; 3] {
    fn from(p: SpherePoint) -> Self {
        [p.0.x, p.0.y, p.0.z]
    }
}

impl SpherePoint {
    /// Normalizes `v` onto the sphere. Panics on the zero vector.
    pub fn new(v: Vector3<f64>) -> Self {
        let n = v.norm();
        assert!(n > 0.0, "cannot normalize the zero vector onto the sphere");
        SpherePoint(v / n)
    }

    pub fn from_coords(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z))
    }

    pub fn north() -> Self {
        SpherePoint(Vector3::new(0.0, 0.0, 1.0))
    }

    pub fn vec(&self) -> Vector3<f64> {
        self.0
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.0.dot(&other.0)
    }

    /// Geodesic (angular) distance in [0, pi].
    pub fn angle_to(&self, other: &SpherePoint) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }

    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        (self.0 - other.0).norm()
    }

    pub fn antipode(&self) -> SpherePoint {
        SpherePoint(-self.0)
    }

    pub fn is_antipodal_to(&self, other: &SpherePoint) -> bool {
        1.0 + self.dot(other) < DELTA_ANTIPODAL
    }
}

/// An ordered tuple of pairwise distinct sphere points (a point of the
/// configuration space of n-tuples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigTuple {
    points: Vec<SpherePoint>,
}

impl ConfigTuple {
    /// Requires all pairwise chordal distances strictly above `min_sep`.
    pub fn new(points: Vec<SpherePoint>, min_sep: f64) -> Result<Self, GeomError> {
        assert!(!points.is_empty(), "configuration tuple must be nonempty");
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i].chordal_distance(&points[j]) <= min_sep {
                    return Err(GeomError::CollisionRetry {
                        n: points.len(),
                        min_sep,
                        cap: 0,
                    });
                }
            }
        }
        Ok(ConfigTuple { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &SpherePoint {
        &self.points[i]
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn min_pairwise_chordal(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                best = best.min(self.points[i].chordal_distance(&self.points[j]));
            }
        }
        best
    }
}

/// Draws one area-uniform point: the z-coordinate of a uniform point on the
/// sphere is uniform on [-1, 1].
pub fn uniform_point<R: Rng>(rng: &mut R) -> SpherePoint {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    SpherePoint::new(Vector3::new(r * phi.cos(), r * phi.sin(), z))
}

/// Draws `n` independent area-uniform points, resampling the whole tuple
/// whenever any pair comes closer than `min_sep` (chordal).
pub fn uniform_sample<R: Rng>(rng: &mut R, n: usize, min_sep: f64) -> Result<ConfigTuple, GeomError> {
    assert!(n >= 1);
    'outer: for _ in 0..SAMPLE_RETRY_CAP {
        let points: Vec<SpherePoint> = (0..n).map(|_| uniform_point(rng)).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                if points[i].chordal_distance(&points[j]) <= min_sep {
                    continue 'outer;
                }
            }
        }
        return Ok(ConfigTuple { points });
    }
    Err(GeomError::CollisionRetry {
        n,
        min_sep,
        cap: SAMPLE_RETRY_CAP,
    })
}

/// Minimizing great-circle arc between two non-antipodal points,
/// parametrized at constant speed over [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct GeodesicArc {
    a: SpherePoint,
    b: SpherePoint,
    angle: f64,
}

impl GeodesicArc {
    pub fn new(a: SpherePoint, b: SpherePoint) -> Result<Self, GeomError> {
        if a.is_antipodal_to(&b) {
            return Err(GeomError::AntipodalPair);
        }
        Ok(GeodesicArc {
            a,
            b,
            angle: a.angle_to(&b),
        })
    }

    /// Arc length, equal to the spherical angle between the endpoints.
    pub fn length(&self) -> f64 {
        self.angle
    }

    pub fn start(&self) -> SpherePoint {
        self.a
    }

    pub fn end(&self) -> SpherePoint {
        self.b
    }

    /// Constant-speed evaluation; `eval(0) = a`, `eval(1) = b`.
    pub fn eval(&self, t: f64) -> SpherePoint {
        slerp(&self.a, &self.b, t)
    }

    /// The same arc traversed backwards.
    pub fn reversed(&self) -> GeodesicArc {
        GeodesicArc {
            a: self.b,
            b: self.a,
            angle: self.angle,
        }
    }
}

/// Spherical linear interpolation. For nearly coincident endpoints falls
/// back to normalized linear interpolation.
pub fn slerp(a: &SpherePoint, b: &SpherePoint, t: f64) -> SpherePoint {
    let theta = a.angle_to(b);
    if theta < 1e-9 {
        let v = a.vec().lerp(&b.vec(), t);
        return SpherePoint::new(v);
    }
    let s = theta.sin();
    let v = (((1.0 - t) * theta).sin() / s) * a.vec() + ((t * theta).sin() / s) * b.vec();
    SpherePoint::new(v)
}

/// Image of `p` under stereographic projection from `pole`.
///
/// Convention: the image plane passes through the origin orthogonal to
/// `pole`, so the equator of `pole` maps to the unit circle and `-pole`
/// maps to the origin. Coordinates are taken in the right-handed tangent
/// basis of [`tangent_basis`], which is a deterministic function of `pole`.
pub fn stereo_project(p: &SpherePoint, pole: &SpherePoint) -> Result<PlanarPoint, GeomError> {
    let c = p.dot(pole);
    if 1.0 - c < DELTA_ANTIPODAL {
        return Err(GeomError::AtPole);
    }
    let (e1, e2) = tangent_basis(pole);
    let q = (p.vec() - c * pole.vec()) / (1.0 - c);
    Ok(PlanarPoint {
        x: q.dot(&e1),
        y: q.dot(&e2),
    })
}

/// A point of the projection plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Deterministic right-handed orthonormal basis (e1, e2) of the plane
/// orthogonal to `pole`: e1 x e2 = pole.
pub fn tangent_basis(pole: &SpherePoint) -> (Vector3<f64>, Vector3<f64>) {
    let v = pole.vec();
    // seed with the coordinate axis least aligned with the pole
    let ax = v.x.abs();
    let ay = v.y.abs();
    let az = v.z.abs();
    let k = if ax <= ay && ax <= az {
        Vector3::new(1.0, 0.0, 0.0)
    } else if ay <= az {
        Vector3::new(0.0, 1.0, 0.0)
    } else {
        Vector3::new(0.0, 0.0, 1.0)
    };
    let e1 = k.cross(&v).normalize();
    let e2 = v.cross(&e1);
    (e1, e2)
}

/// Geodesic cap of a prescribed normalized area.
///
/// The half-angle theta satisfies `area = (1 - cos theta) / 2`, which is the
/// cap's fraction of total sphere area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCap {
    center: SpherePoint,
    area: f64,
}

impl SphericalCap {
    /// `area` is a fraction of the whole sphere, strictly between 0 and 1.
    pub fn new(center: SpherePoint, area: f64) -> Self {
        assert!(
            area > 0.0 && area < 1.0,
            "cap area must lie strictly between 0 and 1, got {area}"
        );
        SphericalCap { center, area }
    }

    pub fn center(&self) -> SpherePoint {
        self.center
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Geodesic radius (half-angle) of the cap.
    pub fn half_angle(&self) -> f64 {
        (1.0 - 2.0 * self.area).clamp(-1.0, 1.0).acos()
    }

    pub fn contains(&self, p: &SpherePoint) -> bool {
        self.center.angle_to(p) <= self.half_angle()
    }

    /// Signed geodesic distance to the cap boundary: positive inside,
    /// negative outside.
    pub fn boundary_distance(&self, p: &SpherePoint) -> f64 {
        self.half_angle() - self.center.angle_to(p)
    }

    /// The complementary cap around the antipode.
    pub fn complement(&self) -> SphericalCap {
        SphericalCap {
            center: self.center.antipode(),
            area: 1.0 - self.area,
        }
    }

    /// Geodesic gap between two caps (negative if they overlap).
    pub fn gap_to(&self, other: &SphericalCap) -> f64 {
        self.center.angle_to(&other.center) - self.half_angle() - other.half_angle()
    }

    /// Draws a point area-uniformly from the cap: the cosine of the polar
    /// angle is uniform on [cos(half angle), 1] around the center.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> SpherePoint {
        let c: f64 = rng.random_range(self.half_angle().cos()..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - c * c).max(0.0).sqrt();
        let (e1, e2) = tangent_basis(&self.center);
        SpherePoint::new(c * self.center.vec() + s * (phi.cos() * e1 + phi.sin() * e2))
    }
}

/// Quasi-uniform deterministic point set (golden-angle spiral); used for cap
/// placement and pole selection.
pub fn fibonacci_points(count: usize) -> Vec<SpherePoint> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..count)
        .map(|i| {
            let z = if count == 1 {
                0.0
            } else {
                1.0 - 2.0 * (i as f64 + 0.5) / count as f64
            };
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            SpherePoint::new(Vector3::new(r * phi.cos(), r * phi.sin(), z))
        })
        .collect()
}
