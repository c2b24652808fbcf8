//! Higher-order SVD and multilinear rank.

use tnkit::decomp::{hosvd, multilinear_rank, HosvdRanks, TuckerForm};
use tnkit::random::uniform_tensor;

fn main() -> tnkit::Result<()> {
    let planted = TuckerForm::new(
        uniform_tensor(&[2, 3, 2], -1.0, 1.0, 1),
        vec![
            uniform_tensor(&[4, 2], -1.0, 1.0, 2),
            uniform_tensor(&[5, 3], -1.0, 1.0, 3),
            uniform_tensor(&[4, 2], -1.0, 1.0, 4),
        ],
    )?;
    let t = planted.reconstruct();
    println!("multilinear rank {:?}", multilinear_rank(&t)?);

    let exact = hosvd(&t, &HosvdRanks::Exact)?;
    println!(
        "exact HOSVD: ranks {:?}, ‖core‖ = {:.6}, ‖T‖ = {:.6}, rel error {:.1e}",
        exact.form.ranks(),
        exact.form.core().norm(),
        t.norm(),
        exact.form.reconstruct().rel_error(&t)?
    );

    let noisy = t.add(&uniform_tensor(&[4, 5, 4], -1e-3, 1e-3, 5))?;
    for tol in [1e-6, 1e-2] {
        let h = hosvd(&noisy, &HosvdRanks::Tolerance(tol))?;
        println!(
            "tol {tol:.0e}: ranks {:?}, discarded {:?}, rel error {:.2e}",
            h.form.ranks(),
            h.discarded.iter().map(|d| format!("{:.1e}", d.max(0.0))).collect::<Vec<_>>(),
            h.form.reconstruct().rel_error(&noisy)?
        );
    }
    Ok(())
}
