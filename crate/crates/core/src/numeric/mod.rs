//! Dense linear algebra and forward-mode differentiation.

mod derive;
mod dual;
mod eigen;
mod matrix;
mod scalar;

pub use derive::{
    derive, gradient, hessian, jacobian, jvp, partial_jacobian, second_partial, seed, seed_axis,
    ScalarField, VectorField,
};
pub use dual::Dual;
pub use eigen::{eigenvalues, symmetric_eigenvalues, ComplexEigenSet, SYMMETRY_TOLERANCE};
pub use matrix::{
    scaled_det, solve_linear, weighted_gram_schmidt, Lu, Matrix, RANK_TOLERANCE, SINGULAR_PIVOT,
};
pub use scalar::Scalar;
