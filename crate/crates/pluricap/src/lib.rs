//! Desk-scale machinery for suspensions of holomorphic flows: exact
//! weighted-degree combinatorics, quasi-homogeneous polynomial algebra,
//! sparseness classification of sampled suspensions, Chebyshev-type
//! estimates of extremal functions and capacities, and convergence
//! regions for formal series of quasi-homogeneous blocks.

pub mod error;
pub mod extremal;
pub mod qhpoly;
pub mod schema;
pub mod series;
pub mod suspension;
pub mod weights;

pub use error::Error;
pub use qhpoly::MixedPolynomial;
pub use suspension::SampledSet;

pub use weights::{Lambda, MultiIndex, WeightedDegree};
