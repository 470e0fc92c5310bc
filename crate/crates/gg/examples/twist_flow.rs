//! Hamiltonian twist flows: construction from a target rotation angle,
//! conservation diagnostics, and the isotopy algebra.

use gg::dynamics::{
    area_distortion, compose, twist_strength_for_rotation, HamiltonianSystem, DEFAULT_STEP,
};
use gg::sphere::{uniform_point, SpherePoint, SphericalCap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn main() {
    let cap = SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), 0.1);
    let strength = twist_strength_for_rotation(&cap, 0.25, TAU);
    let sys = HamiltonianSystem::twist_map(cap, strength);
    println!("twist strength for one full turn at quarter radius: {strength:.4}");

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_energy = 0.0f64;
    let mut worst_area = 0.0f64;
    let mut worst_reverse = 0.0f64;
    for _ in 0..50 {
        let p = uniform_point(&mut rng);
        let h0 = sys.value(&p);
        let mut x = p;
        for _ in 0..10 {
            x = sys.flow(0.1, &x, DEFAULT_STEP).unwrap();
            worst_energy = worst_energy.max((sys.value(&x) - h0).abs());
        }
        let back = sys.flow(-1.0, &x, DEFAULT_STEP).unwrap();
        worst_reverse = worst_reverse.max(back.chordal_distance(&p));
        let log_det = area_distortion(
            |q| sys.flow(1.0, q, DEFAULT_STEP).unwrap(),
            &p,
            1e-5,
        );
        worst_area = worst_area.max(log_det.exp() - 1.0);
    }
    println!("worst energy drift along trajectories   {worst_energy:.2e}");
    println!("worst forward-backward mismatch         {worst_reverse:.2e}");
    println!("worst |det DF - 1| at probes            {worst_area:.2e}");

    let f = compose(&[sys], &[1], DEFAULT_STEP).unwrap();
    let g = f.power(2);
    let p = SpherePoint::from_coords(0.3, 0.1, 0.95);
    println!();
    println!("p            {:?}", p.vec());
    println!("f(p)         {:?}", f.time_one(&p).unwrap().vec());
    println!("f^2(p)       {:?}", g.time_one(&p).unwrap().vec());
    println!(
        "f^-1(f(p))   {:?}",
        f.inverse()
            .time_one(&f.time_one(&p).unwrap())
            .unwrap()
            .vec()
    );
    println!("support caps {:?}", f.support_caps().len());
}
