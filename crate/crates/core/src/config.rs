//! Shared numeric tolerances and capacity limits.
//!
//! All tolerances are absolute and measured in the Frobenius norm unless a
//! function documents otherwise. States are normalized or O(1) in every
//! shipped experiment, so absolute and relative views coincide up to small
//! constants.

/// Global tolerance / capacity configuration shared by all modules.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Target accuracy of the dense matrix exponential.
    pub tol_exp: f64,
    /// Full-row-rank threshold on the smallest singular value.
    pub rank_tol: f64,
    /// Constraint-consistency threshold ‖C x0‖ for accepting initial data.
    pub consistency_tol: f64,
    /// Data with ‖C x0‖ between `consistency_tol` and this bound is projected
    /// onto ker(C); anything larger is rejected.
    pub project_tol: f64,
    /// Moment-matching verification threshold |⟨l|(θF)^k|r⟩ − 1|.
    pub moment_tol: f64,
    /// Gaussian-ancilla moment verification threshold (relative).
    pub gauss_tol: f64,
    /// Dense dimension cap for assembled operators.
    pub dim_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_exp: 1e-12,
            rank_tol: 1e-10,
            consistency_tol: 1e-10,
            project_tol: 1e-6,
            moment_tol: 1e-8,
            gauss_tol: 1e-10,
            dim_cap: 4096,
        }
    }
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        tol_exp: 1e-12,
        rank_tol: 1e-10,
        consistency_tol: 1e-10,
        project_tol: 1e-6,
        moment_tol: 1e-8,
        gauss_tol: 1e-10,
        dim_cap: 4096,
    };
}
