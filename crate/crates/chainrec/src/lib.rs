//! Set-oriented analysis of finitely generated semigroups of planar maps.
//!
//! The toolkit approximates chain recurrent sets, chain components,
//! attractors and basins of attraction for the semigroup generated by a
//! finite list of polynomial maps acting on a compact region of the plane.
//! The region is covered by a uniform box grid; all continuous-space sets are
//! reported as outer approximations by cell sets, so a computed set never
//! drops a genuine member at the grid's resolution.
//!
//! The main pieces:
//!
//! * [`expr`] — a small text DSL for generator maps, evaluable exactly on
//!   points and rigorously on boxes via outward-rounded interval arithmetic.
//! * [`grid`] — box grids, cell-set algebra, metric fattening, Hausdorff
//!   distance, and the CSV/PGM artifact formats.
//! * [`words`] — semigroup elements as words over the generator list.
//! * [`chain`] — step graphs, chain reachability, the chain recurrent set,
//!   chain components, and transitivity tests.
//! * [`attractor`] — trapping-region certificates, attractors, omega-limit
//!   cells, basins, and the recurrence/attractor duality report.
//! * [`finite`] — exact counterparts of all of the above on finite state
//!   spaces, used as ground truth by the test suites.
//! * [`scenario`] — scenario files, artifact persistence, and the pipelines
//!   behind the command-line interface.

pub mod attractor;
pub mod chain;
pub mod expr;
pub mod finite;
pub mod grid;
pub mod interval;
pub mod scenario;
pub mod words;

pub use expr::{eval_box, eval_point, parse_map_expr, MapExpr};
pub use grid::{cover_ball, cover_predicate, BoxSet, Cell, Grid, Membership};
pub use interval::IntervalBox2;
pub use words::{apply_word, check_abelian_sampled, enumerate_words, word_box_image, GeneratorSystem, Word};
