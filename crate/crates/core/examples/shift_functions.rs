//! Tabulate KL, Jaccard and novelty over a coarse (delta, tau) grid.

use geoval::shiftfns::{classify, jaccard, kl, novelty};
use geoval::simulate::ShiftSpec;

fn main() -> geoval::Result<()> {
    println!("delta,tau,config,kl,jaccard,novelty");
    for i in 0..=4 {
        for j in 1..=4 {
            let s = ShiftSpec::new(i as f64 * 0.25, j as f64 * 0.25)?;
            println!(
                "{:.2},{:.2},{},{:.4},{:.4},{:.4}",
                s.delta(),
                s.tau(),
                classify(s),
                kl(s),
                jaccard(s),
                novelty(s)
            );
        }
    }
    Ok(())
}
