//! Braid word algebra: construction, free reduction, permutations,
//! exponent sums, pairwise linking, and strand deletion.

use gg::braid::BraidWord;

fn main() {
    let w = BraidWord::from_text("4; 1 -2 2 3 1 -1").unwrap();
    println!("word          {}", w.to_text());
    println!("reduced       {}", w.reduced().to_text());
    println!("permutation   {}", w.permutation().to_cycles_string());
    println!("exponent sum  {}", w.exponent_sum());
    println!("pure          {}", w.is_pure());

    let pure = BraidWord::from_text("3; 1 1 2 2").unwrap();
    println!();
    println!("pure word     {}", pure.to_text());
    for (i, j) in [(1, 2), (1, 3), (2, 3)] {
        println!(
            "linking {i},{j}   {}",
            pure.linking_number(i, j).unwrap()
        );
    }

    // Deleting the strand that carries no crossings leaves the rest intact.
    let kept = pure.delete_strands(&[1, 2]);
    println!();
    println!("keep strands 1,2 of {}", pure.to_text());
    println!("sub-braid     {}", kept.reduced().to_text());

    let inv = pure.compose(&pure.inverse()).unwrap();
    println!("w * w^-1 reduces to {:?}", inv.reduced().letters());
}
