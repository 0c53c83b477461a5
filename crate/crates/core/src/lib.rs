//! Construction and analysis of quasi-cyclic spatially-coupled (QC-SC) LDPC codes.
//!
//! The crate covers distribution design by gradient descent, followed by partitioning and lifting
//! optimization:
//!
//! - [`model`]: code parameters, partitioning/lifting matrices, edge distributions.
//! - [`laurent`]: sparse Laurent polynomials whose constant terms encode activation
//!   probabilities of cycles and other objects.
//! - [`grade`]: probability metrics, their gradients and the gradient-descent distributor.
//! - [`topology`]: enumeration of cycle candidates and paths, cycle conditions and exact
//!   counting in the protograph and in the lifted Tanner graph.
//! - [`ao`]: semi-greedy partitioning optimizers, an exhaustive oracle and a lifting optimizer.
//!
//! Everything here is `no_std` (with `alloc`); file formats and the command-line driver live in
//! the companion `scgrade` crate.

#![no_std]
// Index loops over small fixed-size walks read closer to the cycle notation than iterators.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod ao;
pub mod grade;
pub mod laurent;
pub mod model;
pub mod topology;

pub(crate) mod math {
    /// Binomial coefficient as a float (exact for the small arguments used here).
    pub fn binom(n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        let k = k.min(n - k);
        let mut acc = 1.0f64;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        libm::round(acc)
    }

    /// Falling factorial n (n-1) ... (n-k+1).
    pub fn falling(n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64)
    }
}
