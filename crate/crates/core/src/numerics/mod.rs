//! Special functions and seeded random variate generation.
//!
//! Gamma variates are parameterized by (shape, rate) everywhere in this crate:
//! `Ga(j, θ)` has density `θ^j y^(j-1) e^(-θy) / Γ(j)` and mean `j / θ`.

mod random;
mod special;

pub use random::{
    categorical_in_place, sample_categorical, sample_dirichlet, sample_gamma, sample_log_gamma,
    sample_normal, sample_uniform_open, RngStream,
};
pub use special::{
    log_gamma, log_pochhammer, log_sum_exp, normal_cdf, normal_sf, reg_gamma_cdf, reg_gamma_sf,
    LnIntTable,
};
