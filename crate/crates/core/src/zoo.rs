//! Bundled neuron programs.

use crate::dsl::{parse, DslError, NeuronProgram};

/// `(name, description, source)` for every bundled neuron.
pub const ZOO: [(&str, &str, &str); 10] = [
    ("lstm", "LSTM with peepholes", include_str!("../../../corpus/lstm.arn")),
    ("pendulum-small", "small double pendulum neuron", include_str!("../../../corpus/pendulum-small.arn")),
    ("rnn-min", "stateless relu RNN", include_str!("../../../corpus/rnn-min.arn")),
    ("a1-3w", "best neuron for 3W", include_str!("../../../corpus/a1-3w.arn")),
    ("a2-crop", "best neuron for Crop", include_str!("../../../corpus/a2-crop.arn")),
    ("a3-pendulum", "best neuron for double pendulum", include_str!("../../../corpus/a3-pendulum.arn")),
    ("a4-fordb", "best neuron for FordB", include_str!("../../../corpus/a4-fordb.arn")),
    ("a5-wingbeat", "best neuron for insect wingbeat", include_str!("../../../corpus/a5-wingbeat.arn")),
    ("a6-lsst", "best neuron for LSST", include_str!("../../../corpus/a6-lsst.arn")),
    ("a7-wisdm", "best neuron for WISDM", include_str!("../../../corpus/a7-wisdm.arn")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    ZOO.iter().map(|(n, _, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    ZOO.iter().find(|(n, _, _)| *n == name).map(|(_, _, s)| *s)
}

pub fn program(name: &str) -> Option<Result<NeuronProgram, DslError>> {
    source(name).map(parse)
}
