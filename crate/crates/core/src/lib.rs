//! Variable-exponent Lebesgue spaces on boxes: Luxemburg norms, weight
//! constants over dyadic cube families, and weight factorization.
//!
//! Everything is generic over the scalar type (`f32` or `f64`); the aliases
//! at the crate root fix `f64`.

pub mod error;
pub mod exponent;
pub mod factorize;
pub mod field;
pub mod geometry;
pub mod norms;
pub mod sampling;
pub mod scalar;
pub mod weights;

pub use error::{Error, Result};
pub use exponent::{
    check_class, check_pair, conjugate, estimate_lh_constants, harmonic_mean, ClassReport, Evidence,
    ExponentPairSpec, LhConstants, PairReport, VariableExponent, EPS_CLASS, EPS_ID,
};
pub use factorize::{
    affine_constants, eta_bound, factor_exponents, factor_weight, factorize_full_range,
    factorize_limited_range, phi_exponent, phi_forward, phi_inverse, phi_inverse_exponent,
    weight_power_transform, FactorizationInput, FactorizationResult, FactorizeOptions, Residuals,
    SplitDiagnostic, TransformedSystem,
};
pub use field::{parse_field, pointwise, FieldExpr, Operand, PointwiseOp, ScalarField};
pub use geometry::{
    enumerate_dyadic, integrate, Cube, CubeFamily, DomainBox, FamilyCube, QuadratureGrid, QuadratureRule,
};
pub use norms::{
    char_norm_ratio, check_holder, check_homogeneity, luxemburg_norm, modular, weighted_norm, Discrepancy,
    HolderReport, ModularKernel, NormOptions, NormResult, RatioReport,
};
pub use sampling::SamplingPlan;
pub use scalar::Real;
pub use weights::{
    apq_constant, depth_scan, duality_swap, limited_constant, relative_change, rhi_probe, scaling_transform,
    scan_grid, CubeRecord, CubeStatus, DepthPoint, RhiReport, WeightConstantReport,
};

pub type Field = ScalarField<f64>;
pub type Exponent = VariableExponent<f64>;
pub type Domain = DomainBox<f64>;
pub type Box1 = Cube<f64>;
pub type Family = CubeFamily<f64>;
pub type Grid = QuadratureGrid<f64>;
pub type Norm = NormResult<f64>;
pub type PairSpec = ExponentPairSpec<f64>;
pub type Report = WeightConstantReport<f64>;
pub type Factorization = FactorizationResult<f64>;
