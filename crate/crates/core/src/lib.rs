//! Numerical toolkit for weighted logarithmic Sobolev inequalities on ℝ^d
//! with power-law weights |x|^{-β}, |x|^{-γ}: classification of the (β, γ)
//! plane into symmetry and symmetry-breaking regions, closed-form constants,
//! weighted quadrature, deficit functionals, the radial instability
//! eigenproblem, carré-du-champ identities, weighted Fokker-Planck /
//! Ornstein-Uhlenbeck flows, the subcritical interpolation bridge at p → 1,
//! and a variational deficit search.

pub mod carre_du_champ;
pub mod ckn;
pub mod constants;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod numerics;
pub mod params;
pub mod quadrature;
pub mod search;
pub mod spectral;

pub use error::{Result, WlsError};
pub use params::{classify, derive, DerivedParams, ProblemParams, Region};
