//! Entropy estimates from coordinate growth, and the reducibility
//! heuristic that backs the truncated estimator.

use gg::braid::{braid_entropy_estimate, is_probably_reducible, BraidWord, DEFAULT_ENTROPY_ITERS};

fn main() {
    // The lowest-entropy pseudo-Anosov 3-braid; its entropy is the log
    // of the golden ratio squared, about 0.9624.
    let psi = BraidWord::from_text("3; 1 -2").unwrap();
    let h = braid_entropy_estimate(&psi, DEFAULT_ENTROPY_ITERS);
    println!("entropy(1 -2)      {h:.6}");

    // A single generator only grows coordinates polynomially.
    let low = BraidWord::from_text("3; 1").unwrap();
    let h_low = braid_entropy_estimate(&low, DEFAULT_ENTROPY_ITERS);
    println!("entropy(1)         {h_low:.6}");

    // Confined crossings flag as reducible no matter the exponents.
    let confined = BraidWord::from_text("5; 1 1 1 -2 1 2 2").unwrap();
    let report = is_probably_reducible(&confined, DEFAULT_ENTROPY_ITERS);
    println!();
    println!("confined word      {}", confined.to_text());
    println!("flagged            {}", report.flagged);
    println!("reason             {:?}", report.reason);

    let psi_report = is_probably_reducible(&psi, DEFAULT_ENTROPY_ITERS);
    println!();
    println!("pseudo-Anosov flagged  {}", psi_report.flagged);
    println!("entropy estimate       {:?}", psi_report.entropy_estimate);
}
