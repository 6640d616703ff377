//! Recurrent neurons written as small functional programs.
//!
//! A neuron is a transition function over four internal states and an
//! output. Programs are parsed from an SML subset ([`dsl`]), lowered to a
//! register bytecode with an implicit weight layout ([`compiler`]), executed
//! and differentiated over whole layers ([`tensor`], [`model`]), trained with
//! ADAM ([`trainer`]) and evolved under staged screening with a
//! complexity/loss Pareto front ([`evolve`]).

pub mod dsl;
pub mod compiler;
pub mod zoo;
pub mod rng;
pub mod tensor;
pub mod model;
pub mod data;
pub mod trainer;
pub mod evolve;
pub mod stats;
