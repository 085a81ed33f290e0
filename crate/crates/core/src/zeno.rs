//! Two algorithmic readings of the projected evolution.
//!
//! The repeated-projection product (P e^{−itĤ/N} P)^N converges to
//! e^{−itPĤP}P at first order in 1/N. The constraint projector itself can be
//! produced by an even polynomial filter of the singular values of the
//! constraint operator: a shifted-Chebyshev gap amplifier with p(0) = 1 and
//! |p| ≤ ε on the singular band [γ/α, 1], of degree O((α/γ)·log(1/ε)).
//! Applied classically through an exact SVD, the filter reproduces the
//! operator a singular-value-transform circuit would block-encode.

use crate::error::{Error, Result};
use crate::matrix::{self, CMat, CVec, C64};

use crate::dilation::DilatedSystem;

/// Parameters of the polynomial projector filter.
#[derive(Debug, Clone, Copy)]
pub struct PolyProjectorSpec {
    /// Normalization, ≥ σ_max of the target operator.
    pub alpha: f64,
    /// Lower bound on the nonzero singular values.
    pub gamma: f64,
    /// Target operator error.
    pub eps: f64,
    /// Chebyshev degree q fixed by [`poly_projector_degree`].
    pub degree: usize,
}

impl PolyProjectorSpec {
    pub fn new(alpha: f64, gamma: f64, eps: f64) -> Result<Self> {
        let degree = poly_projector_degree(alpha, gamma, eps)?;
        Ok(Self {
            alpha,
            gamma,
            eps,
            degree,
        })
    }
}

/// Repeated-projection product (P e^{−itĤ/N} P)^N Ψ0.
pub fn zeno_product(sys: &DilatedSystem, t: f64, n: usize) -> Result<CVec> {
    if n == 0 {
        return Err(Error::Parameter("zeno product needs N >= 1".into()));
    }
    if t < 0.0 {
        return Err(Error::Parameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let step = sys.hhat.scale(C64::new(0.0, -t / n as f64));
    let e = matrix::matexp(&step)?;
    let mut w = sys.p.matvec(&sys.psi0);
    for _ in 0..n {
        w = sys.p.matvec(&e.matvec(&w));
    }
    Ok(w)
}

/// Fixed filter degree q = ceil((α/γ)·ln(2/ε)) + 1.
///
/// The constant is this artifact's deterministic choice; it overshoots the
/// minimal degree by roughly a factor of two, so the achieved band error is
/// of order ε² rather than ε.
pub fn poly_projector_degree(alpha: f64, gamma: f64, eps: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= alpha) {
        return Err(Error::Parameter(format!(
            "need 0 < gamma <= alpha, got gamma = {gamma}, alpha = {alpha}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("need 0 < eps < 1, got {eps}")));
    }
    Ok(((alpha / gamma) * (2.0 / eps).ln()).ceil() as usize + 1)
}

/// log(cosh x) without overflow for large x.
fn log_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}

/// Chebyshev T_q at v: plain value on [−1, 1], sign and log magnitude outside.
enum Cheb {
    Plain(f64),
    Log { sign: f64, log: f64 },
}

fn cheb(q: usize, v: f64) -> Cheb {
    if v.abs() <= 1.0 {
        Cheb::Plain((q as f64 * v.acos()).cos())
    } else {
        let sign = if v < 0.0 && q % 2 == 1 { -1.0 } else { 1.0 };
        Cheb::Log {
            sign,
            log: log_cosh(q as f64 * v.abs().acosh()),
        }
    }
}

/// Even filter polynomial p(x) = T_q(s(x²)) / T_q(s(0)) with the affine map
/// s sending [(γ/α)², 1] to [−1, 1]. p(0) = 1 exactly (the two Chebyshev
/// evaluations coincide); |p| ≤ ε on [γ/α, 1] for the fixed degree.
///
/// γ = α collapses the band to the single point {1}; the normalized gap is
/// clamped just below 1 so the map stays finite (the filter only sharpens).
pub fn filter_value(spec: &PolyProjectorSpec, x: f64) -> f64 {
    let gt2 = (spec.gamma / spec.alpha).min(1.0 - 1e-9).powi(2);
    let s = |y: f64| (2.0 * y - (1.0 + gt2)) / (1.0 - gt2);
    let q = spec.degree;
    let den = cheb(q, s(0.0));
    let num = cheb(q, s(x * x));
    match (num, den) {
        (Cheb::Plain(a), Cheb::Plain(b)) => a / b,
        (Cheb::Plain(a), Cheb::Log { sign, log }) => a * sign * (-log).exp(),
        (Cheb::Log { sign: sa, log: la }, Cheb::Log { sign: sb, log: lb }) => {
            sa * sb * (la - lb).exp()
        }
        (Cheb::Log { sign, log }, Cheb::Plain(b)) => sign * log.exp() / b,
    }
}

/// Apply the filter to the singular values of a constraint operator:
/// returns Σ_j p(σ_j/α)|v_j⟩⟨v_j| over all right singular directions,
/// an ε-approximation of the orthogonal projector onto ker(C).
///
/// Singular values must lie in {0} ∪ [γ, α]; anything inside the gap is
/// reported as a violation.
pub fn poly_projector_apply(c: &CMat, spec: &PolyProjectorSpec) -> Result<CMat> {
    let n = c.cols();
    if c.rows() == 0 {
        return Ok(CMat::identity(n));
    }
    let (_, sigma, vt) = matrix::svd(c)?;
    let zero_tol = spec.alpha * 1e-10;
    for &s in &sigma {
        let above_zero = s > zero_tol;
        let below_band = s < spec.gamma * (1.0 - 1e-9);
        let above_band = s > spec.alpha * (1.0 + 1e-9);
        if (above_zero && below_band) || above_band {
            return Err(Error::GapViolation {
                sigma: s,
                gamma: spec.gamma,
                alpha: spec.alpha,
            });
        }
    }
    // I − Σ_{σ_j > 0} (1 − p(σ_j/α)) v_j v_j†; null directions keep p(0) = 1.
    let weights: Vec<f64> = sigma
        .iter()
        .map(|&s| {
            if s > zero_tol {
                1.0 - filter_value(spec, (s / spec.alpha).min(1.0))
            } else {
                0.0
            }
        })
        .collect();
    let wvt = CMat::from_fn(vt.rows(), n, |i, j| vt[(i, j)] * C64::new(weights[i], 0.0));
    Ok(CMat::identity(n).sub(&vt.adjoint().mul(&wvt)))
}

/// Smallest degree whose band maximum on [γ/α, 1] (dense grid) reaches ε.
/// Used to measure the empirical degree law against the fixed formula.
pub fn minimal_filter_degree(kappa: f64, eps: f64, grid: usize) -> Result<usize> {
    if kappa < 1.0 {
        return Err(Error::Parameter(format!("kappa must be >= 1, got {kappa}")));
    }
    let cap = 4 * poly_projector_degree(kappa, 1.0, eps)?;
    for q in 1..=cap {
        let spec = PolyProjectorSpec {
            alpha: kappa,
            gamma: 1.0,
            eps,
            degree: q,
        };
        let gt = 1.0 / kappa;
        let mut max_p: f64 = 0.0;
        for i in 0..=grid {
            let x = gt + (1.0 - gt) * i as f64 / grid as f64;
            max_p = max_p.max(filter_value(&spec, x).abs());
        }
        if max_p <= eps {
            return Ok(q);
        }
    }
    Err(Error::Numerical(format!(
        "no degree up to {cap} reaches eps = {eps} at kappa = {kappa}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dae::{self, ConstrainedDae};
    use crate::dilation;
    use crate::matrix::{ONE, ZERO};

    #[test]
    fn degree_formula_fixed_points() {
        // gap equals norm: small constant degree
        let q = poly_projector_degree(1.0, 1.0, 1e-6).unwrap();
        assert_eq!(q, (2e6f64.ln()).ceil() as usize + 1);

        // halving eps grows the degree by at most (α/γ) ln2 + 1
        let q1 = poly_projector_degree(3.0, 1.0, 1e-4).unwrap();
        let q2 = poly_projector_degree(3.0, 1.0, 5e-5).unwrap();
        assert!(q2 >= q1 && (q2 - q1) as f64 <= 3.0 * 2.0f64.ln() + 1.0);

        // ladder-constraint case: alpha = √2, gamma = 1, eps = 1e-8
        let q3 = poly_projector_degree(2.0f64.sqrt(), 1.0, 1e-8).unwrap();
        assert!(q3 <= 29, "q = {q3}");

        assert!(poly_projector_degree(1.0, 2.0, 1e-6).is_err());
        assert!(poly_projector_degree(1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn filter_is_one_at_zero_and_small_on_band() {
        for (kappa, eps) in [(2.0, 1e-3), (8.0, 1e-6), (22.0, 1e-9)] {
            let spec = PolyProjectorSpec::new(kappa, 1.0, eps).unwrap();
            assert_eq!(filter_value(&spec, 0.0), 1.0, "p(0) must be exactly 1");
            let gt = 1.0 / kappa;
            let mut max_p: f64 = 0.0;
            for i in 0..10_000 {
                let x = gt + (1.0 - gt) * i as f64 / 9_999.0;
                max_p = max_p.max(filter_value(&spec, x).abs());
            }
            assert!(max_p <= eps, "kappa {kappa} eps {eps}: band max {max_p}");
        }
    }

    #[test]
    fn projector_filter_on_axis_constraint() {
        let c = CMat::from_real(1, 2, &[1.0, 0.0]).unwrap();
        let spec = PolyProjectorSpec::new(1.0, 1.0, 1e-6).unwrap();
        let p = poly_projector_apply(&c, &spec).unwrap();
        let exact = CMat::diag(&[ZERO, ONE]);
        assert!(p.sub(&exact).fro_norm() <= 1e-6);
    }

    #[test]
    fn zero_operator_filters_to_identity() {
        let c = CMat::zeros(2, 4);
        let spec = PolyProjectorSpec::new(1.0, 0.5, 1e-6).unwrap();
        let p = poly_projector_apply(&c, &spec).unwrap();
        assert!(p.sub(&CMat::identity(4)).fro_norm() == 0.0);
    }

    #[test]
    fn projector_filter_matches_exact_projector_and_is_idempotent() {
        let dae = dae::random_dae(6, 2, 14).unwrap();
        let sv = matrix::singular_values(&dae.c).unwrap();
        let (alpha, gamma) = (sv[0] * (1.0 + 1e-12), sv.last().unwrap() * (1.0 - 1e-12));
        for eps in [1e-3, 1e-6, 1e-9] {
            let spec = PolyProjectorSpec::new(alpha, gamma, eps).unwrap();
            let p = poly_projector_apply(&dae.c, &spec).unwrap();
            let exact = matrix::null_projector(&dae.c, 1e-10).unwrap();
            let err = matrix::spectral_norm(&p.sub(&exact)).unwrap();
            assert!(err <= eps, "eps {eps}: err {err}");
            let idem = matrix::spectral_norm(&p.mul(&p).sub(&p)).unwrap();
            assert!(idem <= 3.0 * eps, "eps {eps}: idempotency defect {idem}");
        }
    }

    #[test]
    fn gap_violation_is_reported_with_offending_sigma() {
        let c = CMat::diag(&[C64::new(0.3, 0.0), C64::new(1.0, 0.0)]);
        let spec = PolyProjectorSpec::new(1.0, 0.8, 1e-6).unwrap();
        match poly_projector_apply(&c, &spec) {
            Err(Error::GapViolation { sigma, .. }) => {
                assert!((sigma - 0.3).abs() < 1e-12);
            }
            other => panic!("expected gap violation, got {other:?}"),
        }
    }

    #[test]
    fn minimal_degree_grows_linearly_in_condition_number() {
        let eps = 1e-6;
        let kappas = [2.0, 4.0, 8.0, 16.0];
        let degrees: Vec<f64> = kappas
            .iter()
            .map(|&k| minimal_filter_degree(k, eps, 2000).unwrap() as f64)
            .collect();
        // least-squares slope of q against kappa
        let n = kappas.len() as f64;
        let sx: f64 = kappas.iter().sum();
        let sy: f64 = degrees.iter().sum();
        let sxy: f64 = kappas.iter().zip(&degrees).map(|(x, y)| x * y).sum();
        let sxx: f64 = kappas.iter().map(|x| x * x).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let formula_coeff = (2.0 / eps).ln();
        let ratio = slope / formula_coeff;
        assert!(
            (0.5..=2.0).contains(&ratio),
            "slope {slope}, formula coefficient {formula_coeff}"
        );
    }

    #[test]
    fn zeno_product_trivial_cases() {
        // unconstrained: P = I, the product telescopes exactly
        let mut rng = crate::testutil::rng(3);
        let l = crate::testutil::random_cmat(&mut rng, 3, 3);
        let x0 = crate::testutil::random_cvec(&mut rng, 3).normalized();
        let dae = ConstrainedDae::new(l, CMat::zeros(0, 3), x0).unwrap();
        let anc = dilation::build_ancilla(4, 2).unwrap();
        let sys = dilation::build_dilated(&dae, &anc).unwrap();
        let direct = matrix::matexp(&sys.hhat.scale(C64::new(0.0, -0.8)))
            .unwrap()
            .matvec(&sys.psi0);
        for n in [1usize, 3, 7] {
            let w = zeno_product(&sys, 0.8, n).unwrap();
            assert!(w.sub(&direct).norm() < 1e-10, "N = {n}");
        }

        // t = 0 returns the initial state
        let dae2 = dae::random_dae(3, 1, 31).unwrap();
        let sys2 = dilation::build_dilated(&dae2, &anc).unwrap();
        let w0 = zeno_product(&sys2, 0.0, 5).unwrap();
        assert!(w0.sub(&sys2.psi0).norm() < 1e-12);

        assert!(zeno_product(&sys2, 1.0, 0).is_err());
    }

    #[test]
    fn zeno_product_error_halves_as_steps_double() {
        let dae = dae::random_dae(4, 2, 20).unwrap();
        let anc = dilation::build_ancilla(5, 2).unwrap();
        let sys = dilation::build_dilated(&dae, &anc).unwrap();
        let t = 1.0;
        let exact = dilation::evolve_dilated(&sys, t).unwrap();
        let mut prev: Option<f64> = None;
        for n in [32usize, 64, 128, 256] {
            let err = zeno_product(&sys, t, n).unwrap().sub(&exact).norm();
            if let Some(p) = prev {
                let ratio = p / err;
                assert!(
                    (1.6..=2.4).contains(&ratio),
                    "N = {n}: ratio {ratio} outside first-order window"
                );
            }
            prev = Some(err);
        }
    }

    #[test]
    fn zeno_error_bounded_by_fitted_first_order_constant() {
        let dae = dae::random_dae(4, 1, 47).unwrap();
        let anc = dilation::build_ancilla(5, 2).unwrap();
        let sys = dilation::build_dilated(&dae, &anc).unwrap();
        let t = 1.0;
        let hnorm = matrix::spectral_norm(&sys.hhat).unwrap();
        let exact = dilation::evolve_dilated(&sys, t).unwrap();
        let ns = [2usize, 4, 8, 16, 32, 64, 128, 256];
        let cs: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let err = zeno_product(&sys, t, n).unwrap().sub(&exact).norm();
                err * n as f64 / (t * t * hnorm * hnorm)
            })
            .collect();
        let cmax = cs.iter().cloned().fold(0.0, f64::max);
        let cmin = cs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(cmax / cmin <= 4.0, "first-order constant drifts: {cs:?}");
    }

    #[test]
    fn zeno_iterates_stay_in_constraint_subspace() {
        let dae = dae::random_dae(4, 2, 90).unwrap();
        let anc = dilation::build_ancilla(5, 2).unwrap();
        let sys = dilation::build_dilated(&dae, &anc).unwrap();
        let w = zeno_product(&sys, 0.7, 16).unwrap();
        assert!(sys.d.matvec(&w).norm() <= 1e-10);
        assert!(w.norm() <= sys.psi0.norm() + 1e-12);
    }
}
