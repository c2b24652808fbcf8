//! Tensor trains: decomposition, canonical forms, rounding and ALS.

use tnkit::tt::{tt_add, tt_als_fit, tt_canonicalize, tt_inner, tt_norm, tt_reconstruct, tt_round, tt_svd, TT};

fn main() -> tnkit::Result<()> {
    let planted = TT::random(&[4, 4, 4, 4], &[2, 3, 2], 7)?;
    let dense = tt_reconstruct(&planted);

    let tt = tt_svd(&dense, None, 1e-12)?;
    println!(
        "TT-SVD ranks {:?}, storage {} vs {} dense, rel error {:.1e}",
        tt.ranks(),
        tt.storage(),
        dense.len(),
        tt_reconstruct(&tt).rel_error(&dense)?
    );

    let c = tt_canonicalize(&tt, 3)?;
    println!("center 3: ‖core 3‖ = {:.8}, ‖T‖ = {:.8}", c.cores()[2].norm(), tt_norm(&tt));

    let doubled = tt_add(&planted, &planted)?;
    let rounded = tt_round(&doubled, None, 1e-10)?;
    println!("T + T has ranks {:?}; rounded back to {:?}", doubled.ranks(), rounded.ranks());
    println!("⟨T, T⟩ = {:.8} = ‖T‖²", tt_inner(&planted, &planted)?);

    let als = tt_als_fit(&dense, &[2, 3, 2], 3, 0)?;
    for (k, l) in als.losses.iter().enumerate().step_by(4) {
        println!("  ALS update {k:2}: loss {l:.3e}");
    }
    Ok(())
}
