//! Entropy, covering certificates and bounded-orbit constructions for
//! linear cocycles over subshifts of finite type.
//!
//! The crate is organized around a pipeline: symbolic dynamics for the
//! base subshift (`sft`), locally constant cocycles and their products
//! (`cocycle`), certified covering conditions in matrix groups
//! (`covering`), the branching-tree construction that produces fiberwise
//! bounded orbits with an entropy lower bound (`branching`), the
//! forbidden-cylinder upper-bound mechanism and non-rigidity gallery
//! (`rigidity`), and the covering-inducing perturbation plus the
//! end-to-end pipeline (`perturb`). The `cli` module exposes all of it
//! as subcommands.

pub mod branching;
pub mod cli;
pub mod cocycle;
pub mod covering;
pub mod cocycle_cover;
pub mod fixtures;
pub mod mat;
pub mod perturb;
pub mod report;
pub mod rigidity;
pub mod sft;
