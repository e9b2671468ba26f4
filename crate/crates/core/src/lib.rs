//! Margolis homology of comodules over the dual Steenrod algebra at p = 2,
//! and the Tate and homotopy fixed point spectral sequence pages for
//! `THH(y(n))`, with their truncations and `Q_m` actions.

pub mod acceptance;
pub mod algebra;
pub mod f2linalg;
pub mod margolis;
pub mod oracles;
pub mod sseq;
pub mod steenrod;
