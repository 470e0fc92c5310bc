//! From sphere dynamics to braid words: closed loops in configuration
//! space and crossing extraction.
//!
//! For a time-1 map given as a [`DiffeoTrace`] and tuples `x` (moving) and
//! `z` (base), each strand traverses three segments reparametrized to
//! thirds of [0, 1]: the geodesic from `z_i` to `x_i`, the isotopy
//! trajectory from `x_i` to `f(x_i)`, and the geodesic from `f(x_i)` back
//! to `z_i`. Running all strands simultaneously gives a based loop in the
//! configuration space of the sphere, hence a pure braid.
//!
//! The braid word is read off a stereographic projection: strands are
//! ordered by the first planar coordinate, and each adjacent-rank swap
//! emits one letter. Sign convention: the letter is positive when the
//! strand coming from the lower rank passes in front, where "front" means
//! the larger second planar coordinate at the crossing instant. With the
//! default pole (antipode of the support cap center), a positive twist of
//! two nearby points yields positive letters.

use crate::braid::BraidWord;
use crate::dynamics::{DiffeoTrace, DynamicsError};
use crate::sphere::{
    stereo_project, ConfigTuple, GeodesicArc, GeomError, SpherePoint, DELTA_COLLISION,
};
use std::fmt::Write as _;
use thiserror::Error;

/// Polyline resolution of the isotopy trajectory, per unit traversal.
pub const MIDDLE_SAMPLES_PER_LEG: usize = 128;

/// Bisection-refinement depth before a crossing counts as unresolved.
pub const MAX_REFINE_DEPTH: usize = 6;

/// Chordal clearance required between any loop point and the pole.
pub const DELTA_POLE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("moving tuple has {x} points but base tuple has {z}")]
    TupleMismatch { x: usize, z: usize },
    #[error("strand {strand}: base and endpoint are antipodal; resample")]
    AntipodalPair { strand: usize },
    #[error("strands {i} and {j} pass within {dist:.2e} of each other at time {time:.4}")]
    DegenerateConfig { i: usize, j: usize, time: f64, dist: f64 },
    #[error("strand {strand} passes within {dist:.2e} of the projection pole")]
    PoleTooClose { strand: usize, dist: f64 },
    #[error("crossing near time {time:.6} not resolved at refinement depth {MAX_REFINE_DEPTH}")]
    UnresolvedCrossing { time: f64 },
}

/// The `n` simultaneous three-segment loops for one scene.
///
/// The middle segments are stored as dense polylines (one flow integration
/// each); loop positions between polyline vertices are interpolated along
/// great circles, so every strand is a continuous piecewise-geodesic loop
/// and crossing detection acts on exactly this system.
#[derive(Debug, Clone)]
pub struct LoopSystem {
    base: ConfigTuple,
    moving: ConfigTuple,
    alpha: Vec<GeodesicArc>,
    middle: Vec<Vec<(f64, SpherePoint)>>,
    beta: Vec<GeodesicArc>,
}

/// Builds the loop system of `f` for moving tuple `x` over base tuple `z`.
///
/// Fails with [`TraceError::AntipodalPair`] when a geodesic segment is not
/// unique and with [`TraceError::DegenerateConfig`] when two loops pass
/// within [`DELTA_COLLISION`] of each other at a sampled common time; both
/// are measure-zero in `x` and resolved by resampling.
pub fn build_loops(
    f: &DiffeoTrace,
    x: &ConfigTuple,
    z: &ConfigTuple,
) -> Result<LoopSystem, TraceError> {
    if x.len() != z.len() {
        return Err(TraceError::TupleMismatch { x: x.len(), z: z.len() });
    }
    let n = x.len();
    assert!(n >= 2, "braiding needs at least two strands");

    let mut alpha = Vec::with_capacity(n);
    let mut middle = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for i in 0..n {
        let xi = *x.point(i);
        let zi = *z.point(i);
        let path = f.trajectory(&xi, MIDDLE_SAMPLES_PER_LEG)?;
        let fxi = path.last().unwrap().1;
        let a = GeodesicArc::new(zi, xi).map_err(|e| antipodal(e, i))?;
        let b = GeodesicArc::new(fxi, zi).map_err(|e| antipodal(e, i))?;
        alpha.push(a);
        middle.push(path);
        beta.push(b);
    }

    let loops = LoopSystem {
        base: z.clone(),
        moving: x.clone(),
        alpha,
        middle,
        beta,
    };

    // Pairwise clearance scan over a common grid covering every polyline
    // vertex. Geodesic segments are smooth, so vertex resolution suffices
    // to flag near-collisions.
    for &t in &loops.scan_grid() {
        let pts: Vec<SpherePoint> = (0..n).map(|i| loops.position(i, t)).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = pts[i].chordal_distance(&pts[j]);
                if d < DELTA_COLLISION {
                    return Err(TraceError::DegenerateConfig { i, j, time: t, dist: d });
                }
            }
        }
    }
    Ok(loops)
}

fn antipodal(e: GeomError, strand: usize) -> TraceError {
    debug_assert_eq!(e, GeomError::AntipodalPair);
    TraceError::AntipodalPair { strand }
}

impl LoopSystem {
    pub fn strands(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &ConfigTuple {
        &self.base
    }

    pub fn moving(&self) -> &ConfigTuple {
        &self.moving
    }

    /// Endpoints `f(x_i)` of the isotopy segments.
    pub fn endpoints(&self) -> Vec<SpherePoint> {
        self.middle.iter().map(|m| m.last().unwrap().1).collect()
    }

    /// Loop `i` at global time `t` in [0, 1]; thirds reparametrization.
    /// The value at `t = 0` and `t = 1` is the base point bitwise.
    pub fn position(&self, i: usize, t: f64) -> SpherePoint {
        if t <= 0.0 || t >= 1.0 {
            return *self.base.point(i);
        }
        let s = 3.0 * t;
        if s <= 1.0 {
            self.alpha[i].eval(s)
        } else if s <= 2.0 {
            self.middle_at(i, s - 1.0)
        } else {
            self.beta[i].eval(s - 2.0)
        }
    }

    fn middle_at(&self, i: usize, s: f64) -> SpherePoint {
        let path = &self.middle[i];
        if path.len() == 1 {
            return path[0].1;
        }
        let k = path.partition_point(|&(u, _)| u <= s);
        if k == 0 {
            return path[0].1;
        }
        if k == path.len() {
            return path[path.len() - 1].1;
        }
        let (t0, p0) = path[k - 1];
        let (t1, p1) = path[k];
        let u = (s - t0) / (t1 - t0);
        crate::sphere::slerp(&p0, &p1, u)
    }

    /// Sampling grid aligned with the polyline vertices (at least one
    /// point per vertex in every segment), for clearance and pole scans.
    fn scan_grid(&self) -> Vec<f64> {
        let verts = self.middle.iter().map(Vec::len).max().unwrap_or(1);
        let per_third = verts.max(64);
        let mut grid = Vec::with_capacity(3 * per_third + 1);
        for k in 0..=(3 * per_third) {
            grid.push(k as f64 / (3 * per_third) as f64);
        }
        grid
    }

    /// Debug dump of strand `i`: CSV lines `t,x,y,z` on a uniform grid of
    /// `samples + 1` times.
    pub fn scene_csv(&self, i: usize, samples: usize) -> String {
        assert!(samples >= 1);
        let mut out = String::from("t,x,y,z\n");
        for k in 0..=samples {
            let t = k as f64 / samples as f64;
            let p = self.position(i, t);
            let v = p.vec();
            writeln!(out, "{t},{},{},{}", v.x, v.y, v.z).unwrap();
        }
        out
    }
}

/// One detected strand crossing. `first` and `second` are loop indices
/// (0-based, in tuple order) with `first` at the lower rank just before
/// the crossing; `sign` is the emitted letter sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEvent {
    pub time: f64,
    pub first: usize,
    pub second: usize,
    pub sign: i8,
}

/// Braid strand index (1-based) of each loop: the rank of its base point
/// by first planar coordinate under projection from `pole`. Crossing
/// letters act on these ranks, so forgetting a subset of loops means
/// keeping the complement's ranks.
pub fn braid_positions(loops: &LoopSystem, pole: &SpherePoint) -> Result<Vec<usize>, TraceError> {
    let n = loops.strands();
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        let p = stereo_project(loops.base.point(i), pole)
            .map_err(|_| TraceError::PoleTooClose { strand: i, dist: 0.0 })?;
        u.push(p.x);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| u[a].partial_cmp(&u[b]).expect("finite coordinates"));
    let mut rank = vec![0usize; n];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = r + 1;
    }
    Ok(rank)
}

/// Reads the pure braid word off the loop system by stereographic
/// projection from `pole`, scanning `time_steps` uniform intervals with
/// adaptive bisection inside any interval whose rank order changes by
/// more than one adjacent swap.
///
/// The result is freely reduced. Extraction asserts purity: a loop system
/// always returns every strand to its own base point.
pub fn extract_braid(
    loops: &LoopSystem,
    pole: &SpherePoint,
    time_steps: usize,
) -> Result<BraidWord, TraceError> {
    Ok(scan_crossings(loops, pole, time_steps)?.1.reduced())
}

/// The time-ordered crossing events behind [`extract_braid`], for callers
/// that need to know which loops crossed and when.
pub fn extract_crossings(
    loops: &LoopSystem,
    pole: &SpherePoint,
    time_steps: usize,
) -> Result<Vec<CrossingEvent>, TraceError> {
    Ok(scan_crossings(loops, pole, time_steps)?.0)
}

fn scan_crossings(
    loops: &LoopSystem,
    pole: &SpherePoint,
    time_steps: usize,
) -> Result<(Vec<CrossingEvent>, BraidWord), TraceError> {
    assert!(time_steps >= 1, "need at least one time step");
    let n = loops.strands();

    // Clearance scan: projection is only trustworthy away from the pole.
    for &t in &loops.scan_grid() {
        for i in 0..n {
            let d = loops.position(i, t).chordal_distance(pole);
            if d < DELTA_POLE {
                return Err(TraceError::PoleTooClose { strand: i, dist: d });
            }
        }
    }

    let planar = |i: usize, t: f64| {
        // The pole clearance scan makes projection failures unreachable.
        stereo_project(&loops.position(i, t), pole).expect("loop point at the pole")
    };
    let order_at = |t: f64| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            planar(a, t)
                .x
                .partial_cmp(&planar(b, t).x)
                .expect("planar coordinates are finite")
        });
        idx
    };

    let mut order = order_at(0.0);
    let start_order = order.clone();
    let mut letters: Vec<i32> = Vec::new();
    let mut events: Vec<CrossingEvent> = Vec::new();
    for k in 0..time_steps {
        let t0 = k as f64 / time_steps as f64;
        let t1 = (k + 1) as f64 / time_steps as f64;
        resolve_interval(&planar, &order_at, t0, t1, &mut order, &mut letters, &mut events, 0)?;
    }
    assert_eq!(order, start_order, "loops must restore the strand order");
    debug_assert!(events.windows(2).all(|w| w[0].time < w[1].time));

    let word = BraidWord::new(n, letters).expect("emitted letters are in range");
    assert!(word.is_pure(), "extracted braid must be pure");
    Ok((events, word))
}

/// Processes one time interval: emits the letter when the order changes
/// by exactly one adjacent swap, recurses on anything more complicated.
#[allow(clippy::too_many_arguments)]
fn resolve_interval<P, O>(
    planar: &P,
    order_at: &O,
    t0: f64,
    t1: f64,
    order: &mut Vec<usize>,
    letters: &mut Vec<i32>,
    events: &mut Vec<CrossingEvent>,
    depth: usize,
) -> Result<(), TraceError>
where
    P: Fn(usize, f64) -> crate::sphere::PlanarPoint,
    O: Fn(f64) -> Vec<usize>,
{
    let target = order_at(t1);
    if target == *order {
        return Ok(());
    }
    if let Some(r) = single_adjacent_swap(order, &target) {
        let a = order[r];
        let b = order[r + 1];
        // u_a - u_b goes from negative to positive across the crossing.
        let du = |t: f64| planar(a, t).x - planar(b, t).x;
        if du(t0) < 0.0 && du(t1) > 0.0 {
            let mut lo = t0;
            let mut hi = t1;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if du(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tau = 0.5 * (lo + hi);
            let dv = planar(a, tau).y - planar(b, tau).y;
            // 1e-9 sits far above bisection noise yet flags genuine
            // near-tangencies whose over/under sign is meaningless.
            if dv.abs() < 1e-9 {
                return Err(TraceError::UnresolvedCrossing { time: tau });
            }
            let g = (r + 1) as i32;
            let sign = if dv > 0.0 { 1i8 } else { -1i8 };
            letters.push(i32::from(sign) * g);
            events.push(CrossingEvent { time: tau, first: a, second: b, sign });
            order.swap(r, r + 1);
            return Ok(());
        }
        // Sign pattern inconsistent with a clean single crossing (for
        // example a tangency near a sample time): fall through to refine.
    }
    if depth >= MAX_REFINE_DEPTH {
        return Err(TraceError::UnresolvedCrossing { time: 0.5 * (t0 + t1) });
    }
    let mid = 0.5 * (t0 + t1);
    resolve_interval(planar, order_at, t0, mid, order, letters, events, depth + 1)?;
    resolve_interval(planar, order_at, mid, t1, order, letters, events, depth + 1)
}

/// When `b` is `a` with exactly the ranks `(r, r + 1)` exchanged, returns
/// `Some(r)`.
fn single_adjacent_swap(a: &[usize], b: &[usize]) -> Option<usize> {
    let n = a.len();
    let mut first = None;
    for i in 0..n {
        if a[i] != b[i] {
            first = Some(i);
            break;
        }
    }
    let r = first?;
    if r + 1 < n && a[r] == b[r + 1] && a[r + 1] == b[r] && a[r + 2..] == b[r + 2..] {
        Some(r)
    } else {
        None
    }
}

/// Extraction grid fine enough for `legs` unit traversals: one interval
/// per polyline vertex, floor 384.
pub fn suggested_time_steps(legs: usize) -> usize {
    (3 * legs * MIDDLE_SAMPLES_PER_LEG).max(384)
}

/// Projection point far from the dynamics. A single support cap gives the
/// antipode of its center; several caps give the candidate direction with
/// the best worst-case clearance to all of them; free systems get the
/// south pole.
pub fn default_pole(f: &DiffeoTrace) -> SpherePoint {
    let caps = f.support_caps();
    match caps.len() {
        0 => SpherePoint::from_coords(0.0, 0.0, -1.0),
        1 => caps[0].center().antipode(),
        _ => {
            let mut candidates = crate::sphere::fibonacci_points(128);
            candidates.extend(caps.iter().map(|c| c.center().antipode()));
            let clearance = |p: &SpherePoint| {
                caps.iter()
                    .map(|c| -c.boundary_distance(p))
                    .fold(f64::INFINITY, f64::min)
            };
            candidates
                .into_iter()
                .max_by(|a, b| clearance(a).partial_cmp(&clearance(b)).unwrap())
                .unwrap()
        }
    }
}

/// One-call wrapper: build loops, extract, and retry extraction with a
/// doubled grid when a crossing stays unresolved (bounded retries).
/// Degenerate configurations still fail; the caller owns resampling `x`.
pub fn gamma(
    f: &DiffeoTrace,
    x: &ConfigTuple,
    z: &ConfigTuple,
    pole: &SpherePoint,
    time_steps: usize,
) -> Result<BraidWord, TraceError> {
    let loops = build_loops(f, x, z)?;
    let mut steps = time_steps;
    for _ in 0..3 {
        match extract_braid(&loops, pole, steps) {
            Err(TraceError::UnresolvedCrossing { .. }) => steps *= 2,
            other => return other,
        }
    }
    extract_braid(&loops, pole, steps)
}
