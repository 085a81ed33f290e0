//! Constrained autonomous linear DAEs x' = Lx + C†λ, Cx = 0.
//!
//! Converts the semi-explicit and index-1 block presentations into that
//! shape, performs the Schur reduction x' = ΠLΠx on ker(C), and provides the
//! dense-exponential reference solution used as the oracle everywhere else.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{self, CMat, CVec, C64};

/// A constrained linear DAE: x' = Lx + C†λ, Cx = 0, x(0) = x0 ∈ ker(C).
///
/// The system is autonomous and homogeneous; time-dependent forcing has no
/// representation here.
#[derive(Debug, Clone)]
pub struct ConstrainedDae {
    /// State dimension.
    pub n: usize,
    /// Constraint count (m = 0 admits plain ODEs with Π = I).
    pub m: usize,
    /// Unconstrained generator, n×n.
    pub l: CMat,
    /// Constraint operator, m×n, full row rank.
    pub c: CMat,
    /// Consistent initial state.
    pub x0: CVec,
}

/// Schur-reduced evolution x' = ΠLΠ x on ker(C).
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    /// ΠLΠ.
    pub generator: CMat,
    /// Orthogonal projector Π onto ker(C).
    pub projector: CMat,
    pub x0: CVec,
}

/// Diagnostic output of [`validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Smallest singular value of C (None when m = 0).
    pub sigma_min: Option<f64>,
    /// ‖C x0‖.
    pub constraint_residual: f64,
    pub rank_ok: bool,
    pub consistent: bool,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.rank_ok && self.consistent
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "sigma_min(C) = {}",
            self.sigma_min
                .map(|s| format!("{s:.6e}"))
                .unwrap_or_else(|| "n/a (m = 0)".into())
        )?;
        writeln!(f, "|C x0|       = {:.6e}", self.constraint_residual)?;
        writeln!(
            f,
            "rank:        {}",
            if self.rank_ok { "pass" } else { "FAIL" }
        )?;
        write!(
            f,
            "consistency: {}",
            if self.consistent { "pass" } else { "FAIL" }
        )
    }
}

impl ConstrainedDae {
    /// Validating constructor with the default tolerances.
    ///
    /// Initial data with ‖Cx0‖ in (consistency_tol, project_tol] is projected
    /// onto ker(C); larger residuals are rejected.
    pub fn new(l: CMat, c: CMat, x0: CVec) -> Result<Self> {
        Self::with_tolerances(l, c, x0, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(l: CMat, c: CMat, x0: CVec, tols: &Tolerances) -> Result<Self> {
        let n = l.rows();
        if !l.is_square() {
            return Err(Error::Shape(format!(
                "generator must be square, got {}x{}",
                l.rows(),
                l.cols()
            )));
        }
        if c.cols() != n {
            return Err(Error::Shape(format!(
                "constraint has {} columns, state dimension is {n}",
                c.cols()
            )));
        }
        if x0.dim() != n {
            return Err(Error::Shape(format!(
                "initial state has dimension {}, expected {n}",
                x0.dim()
            )));
        }
        let m = c.rows();
        if m > 0 {
            let smin = matrix::singular_values(&c)?.last().copied().unwrap_or(0.0);
            if smin <= tols.rank_tol {
                return Err(Error::RankDeficient {
                    sigma: smin,
                    tol: tols.rank_tol,
                });
            }
        }
        let residual = c.matvec(&x0).norm();
        let x0 = if residual <= tols.consistency_tol {
            x0
        } else if residual <= tols.project_tol {
            let pi = matrix::null_projector(&c, tols.rank_tol)?;
            pi.matvec(&x0)
        } else {
            return Err(Error::Inconsistent(format!(
                "initial data violates the constraint: |C x0| = {residual:.3e} > {:.1e}",
                tols.project_tol
            )));
        };
        Ok(Self { n, m, l, c, x0 })
    }
}

/// Diagnostic check of the standing assumptions; never fails.
pub fn validate(dae: &ConstrainedDae) -> ValidationReport {
    let tols = Tolerances::DEFAULT;
    let sigma_min = if dae.m == 0 {
        None
    } else {
        matrix::singular_values(&dae.c)
            .ok()
            .and_then(|s| s.last().copied())
    };
    let rank_ok = dae.m == 0 || sigma_min.map(|s| s > tols.rank_tol).unwrap_or(false);
    let constraint_residual = dae.c.matvec(&dae.x0).norm();
    ValidationReport {
        sigma_min,
        constraint_residual,
        rank_ok,
        consistent: constraint_residual <= tols.consistency_tol,
    }
}

/// Rewrite the semi-explicit form x' = Lx + Gμ, Cx = 0 in the standard shape.
///
/// Requires Range(G) = Range(C†) and CG invertible; the multiplier change is
/// then nonsingular and the generator and constraint carry over unchanged.
pub fn from_semi_explicit(l: CMat, g: CMat, c: CMat, x0: CVec) -> Result<ConstrainedDae> {
    let tols = Tolerances::DEFAULT;
    if g.rows() != l.rows() || g.cols() != c.rows() {
        return Err(Error::Shape(format!(
            "multiplier map must be {}x{}, got {}x{}",
            l.rows(),
            c.rows(),
            g.rows(),
            g.cols()
        )));
    }
    if c.rows() > 0 {
        let smin = matrix::singular_values(&c)?.last().copied().unwrap_or(0.0);
        if smin <= tols.rank_tol {
            return Err(Error::RankDeficient {
                sigma: smin,
                tol: tols.rank_tol,
            });
        }
        let cg = c.mul(&g);
        let smin_cg = matrix::singular_values(&cg)?.last().copied().unwrap_or(0.0);
        if smin_cg <= tols.rank_tol {
            return Err(Error::Index(format!(
                "CG is singular (sigma_min = {smin_cg:.3e}); the multiplier cannot be absorbed"
            )));
        }
        // Range(G) = Range(C†)  ⇔  ΠG = 0 for the kernel projector Π.
        let pi = matrix::null_projector(&c, tols.rank_tol)?;
        let mismatch = pi.mul(&g).fro_norm();
        let scale = g.fro_norm().max(1.0);
        if mismatch > 1e-10 * scale {
            return Err(Error::Structure(format!(
                "Range(G) != Range(C†): |ΠG| = {mismatch:.3e}"
            )));
        }
    }
    ConstrainedDae::new(l, c, x0)
}

/// Rewrite an index-1 block system [I 0; 0 0] (x1,x2)' = [A11 A12; A21 A22] (x1,x2)
/// in the standard constrained shape.
///
/// With L = [A11, A12; −A22⁻¹A21A11, −A22⁻¹A21A12] and C = [A21, A22] the
/// multiplier vanishes identically, so CL = 0 is verified on the output.
pub fn from_index1(
    a11: &CMat,
    a12: &CMat,
    a21: &CMat,
    a22: &CMat,
    x0: CVec,
) -> Result<ConstrainedDae> {
    let tols = Tolerances::DEFAULT;
    let n1 = a11.rows();
    let n2 = a22.rows();
    if !a11.is_square()
        || !a22.is_square()
        || a12.rows() != n1
        || a12.cols() != n2
        || a21.rows() != n2
        || a21.cols() != n1
    {
        return Err(Error::Shape("inconsistent index-1 block dimensions".into()));
    }
    let smin = if n2 == 0 {
        f64::INFINITY
    } else {
        matrix::singular_values(a22)?.last().copied().unwrap_or(0.0)
    };
    if smin <= tols.rank_tol {
        return Err(Error::Index(format!(
            "A22 is singular (sigma_min = {smin:.3e}); the system is not index-1 in this presentation"
        )));
    }
    // lower blocks: −A22⁻¹ A21 A11 and −A22⁻¹ A21 A12
    let a21_a11 = a21.mul(a11);
    let a21_a12 = a21.mul(a12);
    let low1 = matrix::solve(a22, &a21_a11)?.scale(C64::new(-1.0, 0.0));
    let low2 = matrix::solve(a22, &a21_a12)?.scale(C64::new(-1.0, 0.0));
    let n = n1 + n2;
    let mut l = CMat::zeros(n, n);
    l.set_block(0, 0, a11);
    l.set_block(0, n1, a12);
    l.set_block(n1, 0, &low1);
    l.set_block(n1, n1, &low2);
    let mut c = CMat::zeros(n2, n);
    c.set_block(0, 0, a21);
    c.set_block(0, n1, a22);
    let cl = c.mul(&l).fro_norm();
    let scale = c.fro_norm().max(1.0) * l.fro_norm().max(1.0);
    if cl > 1e-10 * scale {
        return Err(Error::Structure(format!(
            "index-1 reduction left a nonzero multiplier: |CL| = {cl:.3e}"
        )));
    }
    ConstrainedDae::new(l, c, x0)
}

/// Schur reduction: eliminate the multiplier, leaving x' = ΠLΠ x.
pub fn schur_reduce(dae: &ConstrainedDae) -> Result<ReducedSystem> {
    let tols = Tolerances::DEFAULT;
    let projector = matrix::null_projector(&dae.c, tols.rank_tol)?;
    let generator = projector.mul(&dae.l).mul(&projector);
    Ok(ReducedSystem {
        generator,
        projector,
        x0: dae.x0.clone(),
    })
}

/// Reference solution x(t) = e^{ΠLΠ t} x0 by dense matrix exponential.
pub fn reference_solve(red: &ReducedSystem, t: f64) -> Result<CVec> {
    if t < 0.0 {
        return Err(Error::Parameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let e = matrix::matexp(&red.generator.scale(C64::new(t, 0.0)))?;
    Ok(e.matvec(&red.x0))
}

/// Lagrange multiplier λ = −(CC†)⁻¹ C L x keeping Lx + C†λ tangent to ker(C).
pub fn recover_multiplier(dae: &ConstrainedDae, x: &CVec) -> Result<CVec> {
    let tols = Tolerances::DEFAULT;
    if x.dim() != dae.n {
        return Err(Error::Shape(format!(
            "state has dimension {}, expected {}",
            x.dim(),
            dae.n
        )));
    }
    if dae.m == 0 {
        return Ok(CVec::zeros(0));
    }
    let residual = dae.c.matvec(x).norm();
    if residual > tols.consistency_tol * x.norm().max(1.0) {
        return Err(Error::Inconsistent(format!(
            "state is off the constraint manifold: |Cx| = {residual:.3e}"
        )));
    }
    let cct = dae.c.mul(&dae.c.adjoint());
    let clx = dae.c.matvec(&dae.l.matvec(x));
    let lam = matrix::solve_vec(&cct, &clx)?;
    Ok(lam.scale(C64::new(-1.0, 0.0)))
}

/// Seeded random test instance: L with unit spectral norm, full-row-rank C,
/// x0 the normalized kernel projection of a random vector.
pub fn random_dae(n: usize, m: usize, seed: u64) -> Result<ConstrainedDae> {
    assert!(m < n, "need m < n for a nontrivial kernel");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut l = CMat::from_fn(n, n, |_, _| C64::new(normal(), normal()));
    let nrm = matrix::spectral_norm(&l)?;
    l = l.scale(C64::new(1.0 / nrm, 0.0));
    let c = loop {
        let cand = CMat::from_fn(m, n, |_, _| C64::new(normal(), normal()));
        if m == 0 {
            break cand;
        }
        let smin = matrix::singular_values(&cand)?
            .last()
            .copied()
            .unwrap_or(0.0);
        if smin > 1e-3 {
            break cand;
        }
    };
    let z: Vec<Complex64> = (0..n).map(|_| C64::new(normal(), normal())).collect();
    let z = CVec::from_vec(z)?;
    let x0 = if m == 0 {
        z.normalized()
    } else {
        let pi = matrix::null_projector(&c, 1e-10)?;
        pi.matvec(&z).normalized()
    };
    ConstrainedDae::new(l, c, x0)
}
