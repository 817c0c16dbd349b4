//! The three scalarizers on a few objective vectors, and weight derivation.

use vmplace::objectives::{derive_ws_weights, Scalarizer};

fn main() -> vmplace::error::Result<()> {
    let vectors = [
        [0.10, 0.20, 0.30, 0.40],
        [0.50, 0.00, 0.00, 0.00],
        [0.25, 0.25, 0.25, 0.25],
        [0.90, 0.10, 0.10, 0.10],
    ];
    let methods = [Scalarizer::ws([0.25; 4]), Scalarizer::Euclidean, Scalarizer::Chebyshev];
    println!("{:<28}{:>8}{:>8}{:>8}", "f", "ws", "ed", "cd");
    for v in &vectors {
        print!("{:<28}", format!("{v:?}"));
        for m in &methods {
            print!("{:>8.4}", m.scalarize(v)?);
        }
        println!();
    }
    // equalize the average contribution of each objective
    let w = derive_ws_weights(&vectors)?;
    println!("derived weights: {w:.4?}");
    Ok(())
}
