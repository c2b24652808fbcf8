//! Binding and contracting a network written in the text grammar.

use tnkit::ops::matmul;
use tnkit::random::uniform_tensor;
use tnkit::{Bindings, NetworkSpec};

fn main() -> tnkit::Result<()> {
    let spec = NetworkSpec::parse(
        "# a matrix chain followed by a trace
         A[i,j] B[j,k] C[k,l] D[l,i] -> []",
    )?;
    let mut b = Bindings::new();
    for (k, (name, shape)) in [("A", [6, 40]), ("B", [40, 3]), ("C", [3, 50]), ("D", [50, 6])].into_iter().enumerate() {
        b.insert(name.to_string(), uniform_tensor(&shape, -1.0, 1.0, k as u64));
    }
    let net = spec.bind(&b)?;
    let plan = net.contraction_order();
    let cost = net.plan_cost(&plan)?;
    println!("{spec}");
    println!("greedy plan {plan:?}: {} flops, peak {} entries", cost.flops, cost.peak_size);
    let value = net.contract()?.as_scalar()?;
    let dense = matmul(&matmul(&matmul(&b["A"], &b["B"])?, &b["C"])?, &b["D"])?;
    println!("network {value:.10}, dense trace {:.10}", tnkit::ops::trace(&dense)?);

    // a label shared by three legs is a hyperedge: Σ_i A_ij B_ik C_il
    let hyper = NetworkSpec::parse("P[i,j] Q[i,k] R[i,l] -> [j,k,l]")?;
    let mut hb = Bindings::new();
    for (k, name) in ["P", "Q", "R"].into_iter().enumerate() {
        hb.insert(name.to_string(), uniform_tensor(&[4, 2], -1.0, 1.0, 10 + k as u64));
    }
    let lowered = hyper.bind(&hb)?;
    println!(
        "hyperedge network has {} nodes after lowering, output shape {:?}",
        lowered.nodes().len(),
        lowered.output_shape()
    );

    // the same tensor may occur more than once
    let quad = NetworkSpec::parse("x[i] M[i,j] x[j] -> []")?;
    let mut qb = Bindings::new();
    qb.insert("x".into(), tnkit::Tensor::vector(&[1.0, 2.0]));
    qb.insert("M".into(), tnkit::Tensor::matrix(2, 2, &[1.0, 0.0, 0.0, 3.0])?);
    println!("xᵀMx = {}", quad.bind(&qb)?.contract()?.as_scalar()?);
    Ok(())
}
