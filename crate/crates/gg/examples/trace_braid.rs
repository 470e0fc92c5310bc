//! From isotopy to braid word: trace configuration loops through a twist
//! and read off the crossings.

use gg::dynamics::{compose, twist_strength_for_rotation, HamiltonianSystem, DEFAULT_STEP};
use gg::sphere::{ConfigTuple, SpherePoint, SphericalCap, DELTA_COLLISION};
use gg::trace::{build_loops, default_pole, extract_braid, gamma, suggested_time_steps};
use std::f64::consts::TAU;

fn cap_point(cap: &SphericalCap, rho: f64, angle: f64) -> SpherePoint {
    let r = rho * cap.half_angle();
    let (s, c) = (r.sin(), r.cos());
    SpherePoint::from_coords(s * angle.cos(), s * angle.sin(), c)
}

fn main() {
    let cap = SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), 0.1);
    let strength = twist_strength_for_rotation(&cap, 0.25, TAU);
    let f = compose(&[HamiltonianSystem::twist_map(cap, strength)], &[1], DEFAULT_STEP).unwrap();

    // Two marked points inside the cap plus the basepoint tuple they are
    // joined to; one full twist braids them into sigma_1^2.
    let x = ConfigTuple::new(
        vec![cap_point(&cap, 0.15, 0.0), cap_point(&cap, 0.3, 3.14)],
        DELTA_COLLISION,
    )
    .unwrap();
    let z = ConfigTuple::new(
        vec![
            SpherePoint::from_coords(1.0, 0.0, 0.0),
            SpherePoint::from_coords(0.0, 1.0, 0.0),
        ],
        DELTA_COLLISION,
    )
    .unwrap();

    let pole = default_pole(&f);
    println!("projection pole  {:?}", pole.vec());

    let loops = build_loops(&f, &x, &z).unwrap();
    let steps = suggested_time_steps(f.leg_count());
    let word = extract_braid(&loops, &pole, steps).unwrap();
    println!("extracted word   {}", word.to_text());
    println!("exponent sum     {}", word.exponent_sum());
    println!("pure             {}", word.is_pure());

    let squared = gamma(&f.power(2), &x, &z, &pole, suggested_time_steps(2)).unwrap();
    println!("squared isotopy  {}", squared.to_text());

    // First few rows of the plottable scene for strand 1.
    let csv = loops.scene_csv(0, 6);
    println!();
    println!("{csv}");
}
