//! Exact reachable-set computation for feed-forward ReLU networks.
//!
//! Polytopes are carried as face lattices (vertices plus every face with its
//! containment links), so splitting by a neuron hyperplane never requires a
//! conversion between halfspace and vertex representations. Each reachable
//! piece is a [`TransformTuple`]: an input-space linear region together with
//! the affine map that sends it to the current layer.
//!
//! ```
//! use lattice_reach::{box_lattice, reach, Activation, Layer, Network, ReachConfig};
//! use nalgebra::{DMatrix, DVector};
//!
//! let layer = Layer::new(DMatrix::identity(2, 2), DVector::zeros(2), Activation::Relu).unwrap();
//! let net = Network::new(vec![layer], None).unwrap();
//! let input = box_lattice(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
//! let result = reach(&net, &input, &ReachConfig::default()).unwrap();
//! assert_eq!(result.stats.region_count, 4);
//! ```

pub mod error;
pub mod face_lattice;
pub mod lp;
pub mod network;
pub mod oracle;
pub mod reach;
pub mod verify;

pub use error::{Error, ParseError, Result};
pub use face_lattice::{box_lattice, FaceLattice, Hyperplane, SplitOutcome, SplitResult, VertexClassification};
pub use network::{Activation, Layer, Network, Normalization};
pub use reach::{reach, ReachConfig, ReachResult, ReachStats, Sign, Strategy, TransformTuple};
pub use verify::{
    builtin_property, check_property, extract_unsafe_inputs, Halfspace, Property, Status, UnsafeSet, Verdict,
};
