//! Approximation algorithms for deleting a minimum number of soft
//! equations from a system of two-variable linear equations over `Z_m`.
//!
//! The solver splits `Z_m` into prime-power components, reduces every
//! component to homogeneous "simple" instances by iterative compression,
//! and then peels one base-`p` digit at a time: a cut in a graph over the
//! digit classes fixes the class of every variable, after which the
//! instance is rewritten over `Z_{p^(n-1)}`. Each component returns at most
//! `2k` deletions, for `2ω(m)k` overall.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod branch;
pub mod classgraph;
pub mod linsolve;
pub mod modring;
pub mod oracle;
pub mod shadow;
pub mod simplify;
pub mod solver;
pub mod system;
