//! Topological functional optimization on 2D scalar fields.
//!
//! The pipeline computes lower-star persistence of pixel grids with
//! dot-to-pixel pairings, differentiates thresholded Wasserstein norms of the
//! diagrams, and pulls the gradients back to pixels. Smeared descent replaces
//! the exact topological gradient with the gradient on a randomly perturbed,
//! randomly pooled copy of the field at every step, mixed through Adam.

pub mod backprop;
pub mod cubical;
pub mod error;
pub mod field;
pub mod functional;
pub mod persistence;
pub mod reference;
pub mod smear;
pub mod transfer;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use persistence::{Dot, PersistenceDiagram};
