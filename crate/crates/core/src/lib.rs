//! Multi-resonant germs: resonance structure, normal forms, parabolic
//! shadows and numerical dynamics near attracting directions.

pub mod document;
pub mod dynamics;
pub mod jets;
pub mod lattice;
pub mod multi_index;
pub mod normalform;
pub mod numeric;
pub mod pipeline;
pub mod resonance;
pub mod shadow;
