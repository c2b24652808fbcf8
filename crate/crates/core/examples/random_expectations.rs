//! Monte Carlo checks of Gaussian expectation identities.

use tnkit::random::{mc_expectation, verify_identity, Identity, RandomSpec, IDENTITY_NAMES};
use tnkit::Tensor;

fn main() -> tnkit::Result<()> {
    let cases: Vec<(&str, Vec<usize>)> = vec![
        ("gram-mean", vec![3, 2]),
        ("prod-norm", vec![3, 2, 2]),
        ("gram-outer2", vec![3, 2]),
        ("ab-outer2", vec![2, 2, 2]),
        ("trace-quartic", vec![2, 2, 3]),
        ("chain-example", vec![2; 8]),
    ];
    println!("catalog: {}", IDENTITY_NAMES.join(", "));
    for (name, dims) in cases {
        let r = verify_identity(&Identity::from_name(name, &dims)?, 50_000, 0)?;
        println!("{name:14} {dims:?}: max |z| {:.2}, passed {}", r.max_abs_z, r.passed());
    }

    let sigma = Tensor::matrix(2, 2, &[2.0, 0.6, 0.6, 1.0])?;
    let r = verify_identity(&Identity::Isserlis4 { sigma }, 50_000, 1)?;
    println!("E[a⁴] entry (0,0,0,0): estimate {:.3}, exact {}", r.estimate.data()[0], r.analytic.data()[0]);

    // any network with Gaussian and fixed nodes
    let spec = RandomSpec::parse("A[i,j] v[j] A[i,k] v[k] -> []")?
        .gaussian("A", &[4, 3])?
        .fixed("v", Tensor::vector(&[1.0, 2.0, 2.0]))?;
    let e = mc_expectation(&spec, 50_000, 2)?;
    println!("E‖Av‖² ≈ {:.3} ± {:.3} (exact 4·‖v‖² = 36)", e.mean.as_scalar()?, e.stderr.as_scalar()?);
    Ok(())
}
