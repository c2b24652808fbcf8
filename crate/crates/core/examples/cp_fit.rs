//! Fitting a CP model by gradient descent.

use tnkit::decomp::{cp_fit_gd, CpFitOptions, CpForm};
use tnkit::random::uniform_tensor;

fn main() -> tnkit::Result<()> {
    let truth = CpForm::new((0..3).map(|n| uniform_tensor(&[4, 2], -1.0, 1.0, 100 + n)).collect())?;
    let t = truth.reconstruct();
    let fit = cp_fit_gd(&t, 2, &CpFitOptions::default())?;
    let rel = fit.loss() / t.norm().powi(2);
    println!(
        "rank-2 fit of a 4x4x4 rank-2 tensor: {} iterations, converged {}, relative loss {rel:.3e}",
        fit.iterations, fit.converged
    );
    for (k, l) in fit.losses.iter().enumerate().filter(|(k, _)| k % 1000 == 0) {
        println!("  iter {k:5}: loss {l:.3e}");
    }
    Ok(())
}
