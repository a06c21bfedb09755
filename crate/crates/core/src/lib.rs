//! Numerical lab for Bell tests in real versus complex quantum theory.
//!
//! - [`qmat`]: dense real/complex matrices, density matrices, channels.
//! - [`bellnet`]: the tripartite network Bell functional, strategies, see-saw.
//! - [`measures`]: distance to separable/product states, two-rebit entanglement of formation.
//! - [`realsim`]: real-Hilbert-space simulation with an entangled reference frame.
//! - [`hierarchy`]: moment-matrix SDP relaxation under bounded source correlations.

pub mod qmat;
pub mod bellnet;
pub mod measures;
pub mod realsim;
pub mod hierarchy;
