//! Link signatures of braid closures, homogenization along a power
//! schedule, and empirical defect sampling.

use gg::braid::BraidWord;
use gg::quasimorphism::{
    empirical_defect, homogenize, random_word, QuasimorphismSpec, DEFAULT_POWER_SCHEDULE,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let sig = QuasimorphismSpec::Signature;

    // Closure of (sigma_1)^3 on two strands is the trefoil.
    let trefoil = BraidWord::from_text("2; 1 1 1").unwrap();
    println!("signature(trefoil)        {}", sig.evaluate(&trefoil).unwrap());

    // Closure of (sigma_1 sigma_2^-1)^2 is the figure-eight knot.
    let fig8 = BraidWord::from_text("3; 1 -2 1 -2").unwrap();
    println!("signature(figure eight)   {}", sig.evaluate(&fig8).unwrap());

    let report = homogenize(&sig, &trefoil, &DEFAULT_POWER_SCHEDULE).unwrap();
    println!();
    println!("homogenized signature of the trefoil braid");
    for (p, raw) in report.powers.iter().zip(&report.raw) {
        println!("  power {p:>2}  q/p = {raw:.4}");
    }
    println!("  extrapolated  {:.4}", report.value);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let defect = empirical_defect(&sig, 300, || {
        (random_word(&mut rng, 3, 10), random_word(&mut rng, 3, 10))
    })
    .unwrap();
    println!();
    println!("sampled signature defect lower bound (3 strands): {defect}");

    let es = QuasimorphismSpec::ExponentSum;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let defect_es = empirical_defect(&es, 300, || {
        (random_word(&mut rng, 3, 10), random_word(&mut rng, 3, 10))
    })
    .unwrap();
    println!("exponent sum defect (a homomorphism): {defect_es}");
}
