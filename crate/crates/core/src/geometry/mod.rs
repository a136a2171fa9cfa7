//! Polygonal set algebra and the sets `G0`, `V` of the uniqueness argument.

pub mod boolean;
pub mod classify;
pub mod lemmas;
pub mod polygon;
pub mod sets;
pub mod shapes;

pub use boolean::{boolean_op, difference, intersection, union, BooleanOp};
pub use classify::{classify_boundary, BoundaryClassification, EdgeClassification, EdgeTag};
pub use lemmas::{check_appendix_lemmas, LemmaCheck, LemmaInstance, LemmaReport};
pub use polygon::{BBox, BoundarySource, Edge, Point, Polygon, PolygonalSet, Provenance, Vec2, EPS_GEOM_REL};
pub use sets::{check_obstacle, compute_g0, compute_v};
pub use shapes::{disk, rectangle, regular_polygon, star_polygon, DEFAULT_CIRCLE_SEGMENTS};
