//! Plain-text file formats.
//!
//! ```text
//! TEN 1            TT 1               MPO 1
//! 2 3              2                  1
//! <values>         CORE 1 1 4 2       CORE 1 1 2 3 1
//!                  <values>           <values>
//!                  CORE 2 2 4 1
//!                  <values>
//! ```
//!
//! Values are written one per line in row-major order with 17 significant
//! digits, which round-trips every finite `f64`. An order-0 tensor has an
//! empty shape line. Network files hold the text grammar of
//! [`NetworkSpec`]; `#` starts a comment.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::tensor::Tensor;
use crate::tt::{Mpo, TT};

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

fn push_values(out: &mut String, values: &[f64]) {
    for v in values {
        out.push_str(&format!("{v:.16e}\n"));
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn tensor_to_string(t: &Tensor) -> String {
    let mut out = format!("TEN 1\n{}\n", join(t.shape()));
    push_values(&mut out, t.data());
    out
}

pub fn tt_to_string(t: &TT) -> String {
    let mut out = format!("TT 1\n{}\n", t.order());
    for (k, c) in t.cores().iter().enumerate() {
        out.push_str(&format!("CORE {} {}\n", k + 1, join(c.shape())));
        push_values(&mut out, c.data());
    }
    out
}

pub fn mpo_to_string(m: &Mpo) -> String {
    let mut out = format!("MPO 1\n{}\n", m.order());
    for (k, c) in m.cores().iter().enumerate() {
        out.push_str(&format!("CORE {} {}\n", k + 1, join(c.shape())));
        push_values(&mut out, c.data());
    }
    out
}

/// Canonical network file: the single-line form followed by a newline.
pub fn network_to_string(spec: &NetworkSpec) -> String {
    format!("{spec}\n")
}

/// Line-oriented reader that tracks line numbers for diagnostics.
struct Lines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            lines: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l.trim())
            }
            None => format_err(format!("unexpected end of file, expected {what}")),
        }
    }

    fn err<T>(&self, msg: impl AsRef<str>) -> Result<T> {
        format_err(format!("line {}: {}", self.last, msg.as_ref()))
    }

    fn header(&mut self, magic: &str) -> Result<()> {
        let l = self.next("header")?;
        if l != format!("{magic} 1") {
            return self.err(format!("expected `{magic} 1`, found `{l}`"));
        }
        Ok(())
    }

    fn usizes(&mut self, what: &str) -> Result<Vec<usize>> {
        let l = self.next(what)?;
        l.split_whitespace()
            .map(|w| w.parse::<usize>().or_else(|_| self.err(format!("bad {what} entry `{w}`"))))
            .collect()
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let l = self.next("values")?;
            for w in l.split_whitespace() {
                let v: f64 = w.parse().or_else(|_| self.err(format!("bad value `{w}`")))?;
                if !v.is_finite() {
                    return self.err(format!("non-finite value `{w}`"));
                }
                out.push(v);
            }
        }
        if out.len() != n {
            return self.err(format!("expected {n} values, found {}", out.len()));
        }
        Ok(out)
    }

    fn finish(mut self) -> Result<()> {
        match self.lines.find(|(_, l)| !l.trim().is_empty()) {
            Some((i, _)) => format_err(format!("line {}: trailing content", i + 1)),
            None => Ok(()),
        }
    }

    fn cores(&mut self, order: usize) -> Result<Vec<Tensor>> {
        let count = self.usizes("site count")?;
        if count.len() != 1 || count[0] == 0 {
            return self.err("expected a positive site count");
        }
        let mut cores = Vec::with_capacity(count[0]);
        for k in 1..=count[0] {
            let l = self.next("core header")?;
            let words: Vec<&str> = l.split_whitespace().collect();
            if words.len() != order + 2 || words[0] != "CORE" || words[1] != k.to_string() {
                return self.err(format!("expected `CORE {k}` with {order} dimensions, found `{l}`"));
            }
            let shape: Vec<usize> = words[2..]
                .iter()
                .map(|w| w.parse::<usize>().or_else(|_| self.err(format!("bad dimension `{w}`"))))
                .collect::<Result<_>>()?;
            let data = self.values(shape.iter().product())?;
            cores.push(Tensor::new(shape, data)?);
        }
        Ok(cores)
    }
}

pub fn tensor_from_str(text: &str) -> Result<Tensor> {
    let mut r = Lines::new(text);
    r.header("TEN")?;
    let shape = r.usizes("shape")?;
    let data = r.values(shape.iter().product())?;
    r.finish()?;
    Tensor::new(shape, data)
}

pub fn tt_from_str(text: &str) -> Result<TT> {
    let mut r = Lines::new(text);
    r.header("TT")?;
    let cores = r.cores(3)?;
    r.finish()?;
    TT::new(cores)
}

pub fn mpo_from_str(text: &str) -> Result<Mpo> {
    let mut r = Lines::new(text);
    r.header("MPO")?;
    let cores = r.cores(4)?;
    r.finish()?;
    Mpo::new(cores)
}

pub fn network_from_str(text: &str) -> Result<NetworkSpec> {
    NetworkSpec::parse(text)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Writes `text` to `path`.
pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn load_tensor(path: &Path) -> Result<Tensor> {
    tensor_from_str(&read(path)?).map_err(|e| with_path(path, e))
}

pub fn load_tt(path: &Path) -> Result<TT> {
    tt_from_str(&read(path)?).map_err(|e| with_path(path, e))
}

pub fn load_mpo(path: &Path) -> Result<Mpo> {
    mpo_from_str(&read(path)?).map_err(|e| with_path(path, e))
}

pub fn load_network(path: &Path) -> Result<NetworkSpec> {
    network_from_str(&read(path)?).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::uniform_tensor;

    #[test]
    fn tensor_text_layout() {
        let t = Tensor::matrix(1, 2, &[0.5, -3.0]).unwrap();
        assert_eq!(
            tensor_to_string(&t),
            "TEN 1\n1 2\n5.0000000000000000e-1\n-3.0000000000000000e0\n"
        );
        assert_eq!(tensor_to_string(&Tensor::scalar(1.0)), "TEN 1\n\n1.0000000000000000e0\n");
    }

    #[test]
    fn round_trips_are_exact() {
        let t = uniform_tensor(&[2, 3, 2], -1e3, 1e3, 4).map(|v| v * 1.000_000_000_1);
        let s = tensor_to_string(&t);
        let back = tensor_from_str(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(tensor_to_string(&back), s);
        let s0 = tensor_to_string(&Tensor::scalar(f64::MIN_POSITIVE));
        assert_eq!(tensor_to_string(&tensor_from_str(&s0).unwrap()), s0);

        let tt = TT::random(&[2, 3, 2], &[2, 2], 5).unwrap();
        let s = tt_to_string(&tt);
        assert_eq!(tt_to_string(&tt_from_str(&s).unwrap()), s);

        let m = Mpo::identity(&[2, 3]).unwrap();
        let s = mpo_to_string(&m);
        assert_eq!(mpo_from_str(&s).unwrap(), m);
        assert_eq!(mpo_to_string(&mpo_from_str(&s).unwrap()), s);

        let n = network_to_string(&NetworkSpec::parse("# chain\nA[i,j]  B[j,k]\n-> [i,k]").unwrap());
        assert_eq!(n, "A[i,j] B[j,k] -> [i,k]\n");
        assert_eq!(network_to_string(&network_from_str(&n).unwrap()), n);
    }

    #[test]
    fn loose_whitespace_is_accepted() {
        let t = tensor_from_str("TEN 1\n2\n1 2\n\n").unwrap();
        assert_eq!(t, Tensor::vector(&[1., 2.]));
    }

    #[test]
    fn malformed_files_are_rejected() {
        for bad in [
            "",
            "TEN 2\n1\n0\n",
            "TEN 1\n2\n1\n",
            "TEN 1\n1\n1\n2\n",
            "TEN 1\n1\nNaN\n",
            "TEN 1\n1\ninf\n",
            "TEN 1\nx\n1\n",
        ] {
            assert!(tensor_from_str(bad).is_err(), "{bad:?}");
        }
        assert!(tt_from_str("TT 1\n1\nCORE 1 1 2 2\n0\n0\n0\n0\n").is_err());
        assert!(tt_from_str("TT 1\n1\nCORE 2 1 2 1\n0\n0\n").is_err());
        assert!(mpo_from_str("MPO 1\n1\nCORE 1 1 2 1\n0\n0\n").is_err());
        match tensor_from_str("TEN 1\n2\n1\nq\n") {
            Err(Error::Format(m)) => assert!(m.contains("line 4")),
            other => panic!("{other:?}"),
        }
    }
}
