//! Reading and writing the text formats used by the `tnk` tool.

use tnkit::io::{network_to_string, tensor_from_str, tensor_to_string, tt_from_str, tt_to_string};
use tnkit::tt::TT;
use tnkit::{NetworkSpec, Tensor};

fn main() -> tnkit::Result<()> {
    let t = Tensor::matrix(2, 2, &[0.1, 1.0 / 3.0, -2.5, 1e-300])?;
    let text = tensor_to_string(&t);
    print!("{text}");
    assert_eq!(tensor_from_str(&text)?, t);

    let tt = TT::random(&[2, 2], &[1], 3)?;
    let text = tt_to_string(&tt);
    print!("{text}");
    assert_eq!(tt_to_string(&tt_from_str(&text)?), text);

    let spec = NetworkSpec::parse("# comments are dropped\nA[i,j]   B[j,k]\n  -> [i,k]")?;
    print!("{}", network_to_string(&spec));
    Ok(())
}
