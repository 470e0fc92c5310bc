//! Two-sided norm certificate for a lattice of disjointly supported
//! twists: measured lower bounds against the letter-count upper bound.

use gg::bounds::{build_embedding, full_certificate, measure_generator_rows};
use gg::dynamics::DEFAULT_STEP;
use gg::quasimorphism::QuasimorphismSpec;

fn main() {
    // Two caps of area 0.2 on golden-spiral centers, each filled with a
    // rotated copy of the same positive twist. Generous caps keep the
    // Monte Carlo matrix visibly nonzero at modest sample counts.
    let spec = build_embedding(2, 0.2, 1.0, DEFAULT_STEP)
        .unwrap()
        .with_quasimorphisms(vec![
            QuasimorphismSpec::Signature,
            QuasimorphismSpec::ExponentSum,
        ]);
    println!(
        "embedding: m = {}, min gap = {:.4}",
        spec.m(),
        spec.margin().unwrap()
    );

    // The full functional-by-generator matrix; every estimate shares the
    // seed, so rows are comparable through common random numbers.
    let rows = measure_generator_rows(&spec, 3, 200, &[1, 2], 100, 71).unwrap();
    for row in &rows {
        let values: Vec<String> = row
            .on_generators
            .iter()
            .map(|e| format!("{:+.4} ({:.4})", e.value, e.stderr))
            .collect();
        println!(
            "row {:<13} [{}]  defect >= {}",
            row.quasimorphism,
            values.join(", "),
            row.defect_lower_bound
        );
    }

    let k = vec![3, -2];
    let cert = full_certificate(&spec, &k, &rows).unwrap();
    println!();
    println!(
        "k = {:?}: {:.4} <= norm <= {}",
        cert.k,
        cert.lower.unwrap(),
        cert.upper.unwrap()
    );
    println!(
        "aggregated bound {:.4} through normalized defect {:.4}",
        cert.aggregated_bound.unwrap(),
        cert.normalized_defect.unwrap()
    );
    for c in &cert.per_generator {
        match c.bound {
            // A sampled defect of zero marks a homomorphism row: there is
            // no quotient bound, the predicted value is the exact content.
            None => println!(
                "row {:<13} homomorphism, predicted value {:+.4}",
                c.quasimorphism, c.predicted_value
            ),
            Some(b) => println!(
                "row {:<13} quotient bound {:.4} from predicted value {:+.4}",
                c.quasimorphism, b, c.predicted_value
            ),
        }
    }
    println!("witness: {}", cert.factorization_witness.join(", "));

    // Both sides are exactly linear in k, so doubling the vector doubles
    // the certificate without re-measuring anything.
    let doubled = full_certificate(&spec, &[6, -4], &rows).unwrap();
    assert_eq!(doubled.lower.unwrap(), 2.0 * cert.lower.unwrap());
    assert_eq!(doubled.upper.unwrap(), 2.0 * cert.upper.unwrap());
    println!("doubling k doubles both bounds exactly");
}
