//! Window-based IEEE 802.1Qbv gate control list synthesis.
//!
//! The pipeline: model the network and streams (`netmodel`), encode the
//! scheduling constraints into a solver-agnostic IR (`encoder`), hand them
//! to an external SMT solver and decode the model (`smtlib`), re-check the
//! result with an independent arithmetic checker (`validator`), and replay
//! it in a discrete-event gate simulator (`simulator`).

pub mod encoder;
pub mod netmodel;
pub mod pipeline;
pub mod schedule;
pub mod simulator;
pub mod smtlib;
pub mod validator;

pub use encoder::{encode, Encoder, EncoderConfig};
pub use netmodel::{
    build_port_models, hyperperiod, unroll_streams, EdgeSpec, FrameInstance, FrameKey, Link,
    LinkId, Nanos, Network, PortModel, Stream, StreamId, TopologyDescription, VertexId,
};
pub use schedule::{ArithmeticMode, ObjectiveKind, OrderingMode, PortSchedule, Schedule, Window};
