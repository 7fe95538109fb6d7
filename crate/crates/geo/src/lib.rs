//! Planar spatial and temporal values for the query engine.
//!
//! The crate holds the value types stored in relations (points, lines,
//! regions, moving points), the predicates the plan language exposes, a
//! static STR-packed R-tree and the event-driven continuous k-nearest-neighbor
//! sweep over moving points.
//!
//! Coordinates are planar dataset units; time is integer milliseconds since
//! the dataset epoch.

pub mod error;
pub mod geometry;
pub mod knn;
pub mod predicates;
pub mod rtree;
pub mod temporal;
pub mod text;

pub use error::GeoError;
pub use geometry::{Geometry, Line, Point, Rect, Region};
pub use knn::{knearest_sweep, NearestInterval};
pub use predicates::{contains, distance, geometry_distance, intersects, operand_distance, Operand};
pub use rtree::RTree;
pub use temporal::{Instant, MovingPoint, Period, UnitPoint};
