//! Gradients by removing a node from the network.

use tnkit::grad::{finite_diff_jacobian, jacobian_wrt_node, loss_gradient, mpo_layer_grad, NetworkSum};
use tnkit::random::uniform_tensor;
use tnkit::tt::Mpo;
use tnkit::{Bindings, NetworkSpec, Tensor};

fn main() -> tnkit::Result<()> {
    let mut b = Bindings::new();
    b.insert("A".into(), uniform_tensor(&[3, 3], -1.0, 1.0, 1));
    b.insert("x".into(), Tensor::vector(&[1.0, -1.0, 0.5]));
    let net = NetworkSpec::parse("x[i] A[i,j] x[j] -> []")?.bind(&b)?;

    let jac = jacobian_wrt_node(&net, "x")?;
    println!("∂(xᵀAx)/∂x has {} summands", jac.summands().len());
    let g = jac.contract()?;
    let fd = finite_diff_jacobian(&net, "x", 1e-6)?;
    println!("gradient {:?}\nfinite differences {:?}", g.data(), fd.data());
    println!("∂(xᵀAx)/∂A = x∘x: {:?}", loss_gradient(&net, "A")?.data());

    // ‖XW − Y‖² expanded into three networks
    b.insert("X".into(), uniform_tensor(&[5, 3], -1.0, 1.0, 2));
    b.insert("W".into(), uniform_tensor(&[3, 2], -1.0, 1.0, 3));
    b.insert("Y".into(), uniform_tensor(&[5, 2], -1.0, 1.0, 4));
    let loss = NetworkSum::new()
        .parse_term(1.0, "X[a,i] W[i,j] X[a,k] W[k,j] -> []")?
        .parse_term(-2.0, "X[a,i] W[i,j] Y[a,j] -> []")?
        .parse_term(1.0, "Y[a,j] Y[a,j] -> []")?;
    println!("least squares loss {:.6}, gradient {:?}", loss.value(&b)?, loss.gradient(&b, "W")?.shape());

    let w = Mpo::new(vec![
        uniform_tensor(&[1, 2, 2, 3], -1.0, 1.0, 5),
        uniform_tensor(&[3, 3, 2, 1], -1.0, 1.0, 6),
    ])?;
    let g = mpo_layer_grad(&w, &uniform_tensor(&[4], -1.0, 1.0, 7), &uniform_tensor(&[6], -1.0, 1.0, 8), 2)?;
    println!("MPO layer gradient for core 2: shape {:?}", g.shape());
    Ok(())
}
