//! CP and Tucker decompositions.

mod cp;
mod tucker;

pub use cp::{cp_fit_gd, cp_fit_gd_from, cp_gradient, cp_loss, CpFit, CpFitOptions, CpForm};
pub use tucker::{hosvd, multilinear_rank, Hosvd, HosvdRanks, TuckerForm};
