//! Matrix product operators acting on tensor trains.

use tnkit::ops::{kronecker, matmul};
use tnkit::random::uniform_tensor;
use tnkit::tt::{mpo_from_dense, mpo_matvec, tt_reconstruct, tt_round, TT};

fn main() -> tnkit::Result<()> {
    let a = uniform_tensor(&[2, 3], -1.0, 1.0, 1);
    let b = uniform_tensor(&[3, 2], -1.0, 1.0, 2);
    let k = kronecker(&a, &b)?;
    let op = mpo_from_dense(&k, &[2, 3], &[3, 2], 0.0)?;
    println!("A⊗B as an MPO has ranks {:?}", op.ranks());

    let m = uniform_tensor(&[8, 8], -1.0, 1.0, 3);
    let op = mpo_from_dense(&m, &[2, 2, 2], &[2, 2, 2], 0.0)?;
    let v = TT::random(&[2, 2, 2], &[2, 2], 4)?;
    let y = mpo_matvec(&op, &v)?;
    let yd = tt_reconstruct(&y).into_reshape(&[8, 1])?;
    let expect = matmul(&m, &tt_reconstruct(&v).into_reshape(&[8, 1])?)?;
    println!(
        "operator ranks {:?} times vector ranks {:?} gives {:?}; error {:.1e}",
        op.ranks(),
        v.ranks(),
        y.ranks(),
        yd.max_abs_diff(&expect)?
    );
    println!("after rounding: {:?}", tt_round(&y, None, 1e-12)?.ranks());
    Ok(())
}
