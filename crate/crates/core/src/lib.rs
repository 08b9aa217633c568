//! Simple intersection representations of planar triangulations by
//! homothetic copies of the right triangle with corners `(0,0)`, `(0,1)`,
//! `(1,0)`.
//!
//! The pipeline decomposes a triangulation along its separating triangles,
//! builds a contact representation of every 4-connected piece, removes the
//! points shared by three triangles, and nests each child piece inside the
//! gap left by its separating triangle. Everything downstream of the float
//! solver is exact rational arithmetic, and [`verify`] certifies the result
//! independently of how it was produced.

pub mod assemble;
pub mod geometry;
pub mod perturb;
pub mod planar;
pub mod solver;
pub mod verify;
