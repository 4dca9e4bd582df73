//! Poisson structures on moduli of flat connections over ciliated fat graphs,
//! with the Ruijsenaars leaf as a worked example.

pub mod cli;
pub mod connection;
pub mod error;
pub mod lie;
pub mod observable;
pub mod poisson;
pub mod ribbon_graph;
pub mod ruijsenaars;
pub mod spin_network;
pub mod suites;

/// Complex `f64` matrix used above the generic algebra layer.
pub type CMat = lie::CMat<f64>;
pub type RMatrix = lie::RMatrix<f64>;
pub type AlgebraBasis = lie::AlgebraBasis<f64>;
pub type CasimirTensor = lie::CasimirTensor<f64>;

pub use connection::{gauge_act, move_map, GaugeElement, GraphConnection, Move, MoveMap};
pub use lie::Flavor;
pub use ribbon_graph::{named_graph, CiliatedFatGraph, NamedGraph, SurfaceData};
