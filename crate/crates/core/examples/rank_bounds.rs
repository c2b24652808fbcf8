//! Upper bounds on matricization ranks from cuts in the network graph.

use tnkit::linalg::numerical_rank;
use tnkit::ops::matricize;
use tnkit::random::uniform_tensor;
use tnkit::{Bindings, ModeSet, NetworkSpec};

fn main() -> tnkit::Result<()> {
    let spec = NetworkSpec::parse("T[d1,r1,r2,r3] A[r1,r2,r3,r4] B[r4,r5] S[r5,d2] -> [d1,d2]")?;
    let shapes: [(&str, &[usize]); 4] = [
        ("T", &[12, 2, 2, 2]),
        ("A", &[2, 2, 2, 6]),
        ("B", &[6, 3]),
        ("S", &[3, 12]),
    ];
    let b: Bindings = shapes
        .iter()
        .enumerate()
        .map(|(k, (n, s))| (n.to_string(), uniform_tensor(s, -1.0, 1.0, k as u64)))
        .collect();
    let net = spec.bind(&b)?;
    for (side, what) in [
        ([true, false, false, false], "around T"),
        ([true, true, false, false], "between A and B"),
        ([true, true, true, false], "between B and S"),
    ] {
        println!("cut {what}: weight {}", net.cut_weight(&side));
    }
    let cut = net.rank_bound(&["d1"])?;
    let rank = numerical_rank(&matricize(&net.contract()?, &ModeSet::single(1)?)?)?;
    println!("min cut {} (row side {:?}), numerical rank {rank}", cut.bound, cut.row_side);
    Ok(())
}
