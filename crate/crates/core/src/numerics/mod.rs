//! Numerical building blocks: quadrature, ODE integration, root finding and
//! winding numbers.

pub mod dual;
pub mod quadrature;
pub mod rk;
pub mod roots;
pub mod winding;

pub use dual::Dual;
pub use quadrature::{integrate_segment, integrate_segment_nodes, QuadratureError, QuadratureSpec, SegmentNode};
pub use rk::{RkError, RkSpec};
pub use roots::{newton, NewtonError, NewtonOptions};
pub use winding::{winding, winding_refined, WindingError};
