//! Products and identities on dense tensors.

use tnkit::ops::{
    khatri_rao, kronecker, matmul, mode_n_matrix_product, outer, trace, transpose, unfold, vectorize,
};
use tnkit::random::uniform_tensor;
use tnkit::Tensor;

fn main() -> tnkit::Result<()> {
    let a = uniform_tensor(&[3, 4], -1.0, 1.0, 1);
    let x = uniform_tensor(&[4, 2], -1.0, 1.0, 2);
    let b = uniform_tensor(&[2, 5], -1.0, 1.0, 3);

    // vec(AXB) = (A ⊗ Bᵀ) vec(X) for row-major vectorization
    let lhs = vectorize(&matmul(&matmul(&a, &x)?, &b)?);
    let k = kronecker(&a, &transpose(&b)?)?;
    let rhs = matmul(&k, &vectorize(&x).into_reshape(&[8, 1])?)?.into_reshape(&[15])?;
    println!("vec(AXB) vs (A⊗Bᵀ)vec(X): max diff {:.2e}", lhs.max_abs_diff(&rhs)?);

    let s = uniform_tensor(&[3, 3], -1.0, 1.0, 4);
    let t = uniform_tensor(&[2, 2], -1.0, 1.0, 5);
    println!(
        "tr(S⊗T) = {:.6}, tr(S)tr(T) = {:.6}",
        trace(&kronecker(&s, &t)?)?,
        trace(&s)? * trace(&t)?
    );

    let kr = khatri_rao(&uniform_tensor(&[3, 2], -1.0, 1.0, 6), &uniform_tensor(&[4, 2], -1.0, 1.0, 7))?;
    println!("Khatri-Rao of 3x2 and 4x2: {:?}", kr.shape());

    // a Tucker-style product and its mode-1 unfolding
    let core = uniform_tensor(&[2, 2, 2], -1.0, 1.0, 8);
    let u: Vec<Tensor> = (0..3).map(|n| uniform_tensor(&[3, 2], -1.0, 1.0, 9 + n)).collect();
    let mut y = core.clone();
    for (n, m) in u.iter().enumerate() {
        y = mode_n_matrix_product(&y, m, n + 1)?;
    }
    let rhs = matmul(&matmul(&u[0], &unfold(&core, 1)?)?, &transpose(&kronecker(&u[1], &u[2])?)?)?;
    println!("Y_(1) vs U1 G_(1) (U2⊗U3)ᵀ: max diff {:.2e}", unfold(&y, 1)?.max_abs_diff(&rhs)?);

    let v = Tensor::vector(&[1.0, 2.0]);
    println!("‖v∘v∘v‖ = {} = ‖v‖³", outer(&outer(&v, &v), &v).norm());
    Ok(())
}
