//! Fixed-mapping compilation and noise-aware training of binary-weight
//! quantum neurons.
//!
//! The pipeline for one weight vector `w` is: build the sign-flip circuit
//! ([`qnn::circ_of_weights`]), route it onto a device with the interleaved
//! chain layout ([`mapper::compile`]), attach a noise model to the physical
//! gates ([`noise::bind`]) and simulate ([`sim`]). Because every weight block
//! leaves the layout where it found it, errors land on the same physical
//! qubits for every `w`, which is what lets [`trainer`] search for weights
//! that tolerate them.
//!
//! Bit order: qubit 0 is the most significant bit of basis-state indices.

pub mod bench;
pub mod circuit;
pub mod mapper;
pub mod noise;
pub mod qnn;
pub mod sim;
pub mod topology;
pub mod trainer;
