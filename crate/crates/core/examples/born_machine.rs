//! A Born machine: probabilities proportional to squared train entries.

use tnkit::prob::BornMachine;
use tnkit::tt::TT;
use tnkit::ModeSet;

fn main() -> tnkit::Result<()> {
    let born = BornMachine::new(TT::random(&[2, 3, 2, 4], &[3, 4, 3], 11)?);
    println!("ζ = {:.6}", born.zeta());
    println!("P(0,1,1,2) = {:.6}", born.prob(&[0, 1, 1, 2])?);

    let m = born.marginal(&ModeSet::new(&[1, 4])?)?;
    println!("marginal over modes 1 and 4: {:?}, total {:.12}", m.tensor().shape(), m.tensor().sum());

    let c = born.conditional(&[(2, 0)])?;
    println!("P(x1, x3, x4 | x2 = 0) sums to {:.12}", c.tensor().sum());
    let m1 = c.marginal(&ModeSet::single(1)?)?;
    println!("and its first-mode marginal is {:?}", m1.tensor().data());
    Ok(())
}
