//! Gaussian moment dilation of the heat semigroup and its quadrature form.
//!
//! A discretized variance-2 Gaussian state |g⟩ paired with the node
//! multiplication operator F satisfies ⟨g|F^{2m+1}|g⟩ = 0 and
//! ⟨g|F^{2m}|g⟩ = (2m)!/m!, hence ⟨g|e^{−iuF}|g⟩ = e^{−u²} and, for any
//! Hermitian B,
//!
//!   e^{−tB²} = (⟨g| ⊗ I) e^{−i√t F⊗B} (|g⟩ ⊗ I).
//!
//! Because F is diagonal in the node basis the dilated exponential is block
//! diagonal, and the readout is exactly the Gaussian-weighted superposition
//! Σ_j |g_j|² e^{−i√t q_j B}. Discretizing the same Gaussian integral with
//! Gauss–Hermite nodes instead gives the quadrature form
//! e^{−tB²} ≈ Σ_m c_m e^{−ik_m B} with positive weights summing to one. The
//! square-root Hamiltonian for the reduced Stokes generator is the projected
//! Dirac block operator B_h; its unitaries are first-order in G_h, which is
//! where the mesh-scaling advantage of the quadrature route comes from.

use nalgebra::DMatrix;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{self, CMat, CVec, C64};
use crate::stokes::StokesOperators;

/// Discretized Gaussian ancilla on a symmetric uniform grid.
#[derive(Debug, Clone)]
pub struct GaussianAncilla {
    /// Number of grid points (even).
    pub q_count: usize,
    /// Truncation radius.
    pub qmax: f64,
    /// Nodes, exactly symmetric about 0.
    pub nodes: Vec<f64>,
    /// Trapezoidal weights.
    pub weights: Vec<f64>,
    /// Normalized Gaussian amplitudes g_j = (4π)^{-1/4} e^{−q_j²/8} √w_j.
    pub g: CVec,
    /// Largest m with all even moments up to 2m verified to `gauss_tol`
    /// relative error.
    pub m_max: usize,
}

impl GaussianAncilla {
    /// Node multiplication operator as a dense diagonal matrix.
    pub fn node_operator(&self) -> CMat {
        CMat::diag(
            &self
                .nodes
                .iter()
                .map(|&q| C64::new(q, 0.0))
                .collect::<Vec<_>>(),
        )
    }

    /// ⟨g|F^k|g⟩, evaluated over symmetric node pairs so odd moments vanish
    /// exactly.
    pub fn moment(&self, k: usize) -> f64 {
        let half = self.q_count / 2;
        let mut acc = 0.0;
        for j in 0..half {
            let q = self.nodes[self.q_count - 1 - j];
            let w2 = self.g[j].norm_sqr();
            let pair = if k.is_multiple_of(2) {
                2.0 * q.powi(k as i32)
            } else {
                0.0
            };
            acc += w2 * pair;
        }
        acc
    }

    /// Characteristic function ⟨g|e^{−iuF}|g⟩ (real by symmetry).
    pub fn char_fn(&self, u: f64) -> f64 {
        let half = self.q_count / 2;
        let mut acc = 0.0;
        for j in 0..half {
            let q = self.nodes[self.q_count - 1 - j];
            acc += 2.0 * self.g[j].norm_sqr() * (u * q).cos();
        }
        acc
    }
}

/// Exact even moment (2m)!/m! of the variance-2 Gaussian.
pub fn gaussian_even_moment(m: usize) -> f64 {
    let mut v = 1.0;
    for k in m + 1..=2 * m {
        v *= k as f64;
    }
    v
}

/// Build the discretized Gaussian ancilla.
///
/// The grid must resolve the variance-2 tails: Q ≥ 16 even points on
/// [−qmax, qmax] with qmax ≥ 6. Verification is relative per moment; the
/// truncated tail beyond qmax dominates the error of high moments.
pub fn gaussian_ancilla(q_count: usize, qmax: f64) -> Result<GaussianAncilla> {
    if q_count < 16 || !q_count.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "node count must be even and >= 16, got {q_count}"
        )));
    }
    if qmax < 6.0 {
        return Err(Error::Parameter(format!(
            "truncation radius must be >= 6, got {qmax}"
        )));
    }
    let tols = Tolerances::DEFAULT;
    let step = 2.0 * qmax / (q_count - 1) as f64;
    // exact mirror symmetry: node j and node Q−1−j are bitwise negations
    let half = q_count / 2;
    let mut nodes = vec![0.0; q_count];
    for j in 0..half {
        let v = qmax - j as f64 * step;
        nodes[j] = -v;
        nodes[q_count - 1 - j] = v;
    }
    let mut weights = vec![step; q_count];
    weights[0] = step / 2.0;
    weights[q_count - 1] = step / 2.0;
    let amp = (4.0 * std::f64::consts::PI).powf(-0.25);
    let mut g: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&q, &w)| amp * (-q * q / 8.0).exp() * w.sqrt())
        .collect();
    let nrm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in g.iter_mut() {
        *x /= nrm;
    }
    let mut anc = GaussianAncilla {
        q_count,
        qmax,
        nodes,
        weights,
        g: CVec::from_real(&g),
        m_max: 0,
    };
    let mut m_max = 0;
    for m in 1..=16 {
        let got = anc.moment(2 * m);
        let want = gaussian_even_moment(m);
        if ((got - want) / want).abs() <= tols.gauss_tol {
            m_max = m;
        } else {
            break;
        }
    }
    anc.m_max = m_max;
    Ok(anc)
}

/// Heat kernel through the Gaussian dilation:
/// (⟨g| ⊗ I) e^{−i√t F⊗B} (|g⟩ ⊗ I) = Σ_j |g_j|² e^{−i√t q_j B}.
///
/// Returns the operator and its deviation from the independently computed
/// e^{−tB²} (spectral norm).
pub fn heat_via_dilation(b: &CMat, anc: &GaussianAncilla, t: f64) -> Result<(CMat, f64)> {
    if t < 0.0 {
        return Err(Error::Parameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    if !b.is_hermitian(1e-10 * (1.0 + b.fro_norm())) {
        return Err(Error::Structure(
            "heat dilation requires a Hermitian generator".into(),
        ));
    }
    let (lam, u) = matrix::hermitian_eigen(b)?;
    let st = t.sqrt();
    let half = anc.q_count / 2;
    let vals: Vec<C64> = lam
        .iter()
        .map(|&l| {
            let mut acc = 0.0;
            for j in 0..half {
                let q = anc.nodes[anc.q_count - 1 - j];
                acc += 2.0 * anc.g[j].norm_sqr() * (st * q * l).cos();
            }
            C64::new(acc, 0.0)
        })
        .collect();
    let op = u.mul(&CMat::diag(&vals)).mul(&u.adjoint());
    // independent oracle: dense Padé exponential of −tB²
    let b2 = b.mul(b).scale(C64::new(-t, 0.0));
    let oracle = matrix::matexp(&b2)?;
    let deviation = matrix::spectral_norm(&op.sub(&oracle))?;
    Ok((op, deviation))
}

/// Gauss–Hermite discretization of the Gaussian unitary superposition.
#[derive(Debug, Clone)]
pub struct LchsQuadrature {
    pub t: f64,
    /// Simulation times k_m = 2√t s_m.
    pub k: Vec<f64>,
    /// Positive weights, normalized to Σ c_m = 1.
    pub c: Vec<f64>,
    /// Largest Hamiltonian-simulation time in the rule.
    pub kmax: f64,
}

/// Gauss–Hermite nodes and weights for ∫ e^{−s²} f(s) ds via Golub–Welsch.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Parameter(
            "quadrature needs at least one node".into(),
        ));
    }
    let j = DMatrix::<f64>::from_fn(n, n, |r, c| {
        if r + 1 == c {
            (c as f64 / 2.0).sqrt()
        } else if c + 1 == r {
            (r as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = j
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Jacobi-matrix eigensolver failed".into()))?;
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let w = std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, i)].powi(2);
            (node, w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

/// Quadrature rule for e^{−tB²} = (1/√π) ∫ e^{−s²} e^{−i2√t sB} ds.
pub fn lchs_nodes(t: f64, mq: usize) -> Result<LchsQuadrature> {
    if t <= 0.0 {
        return Err(Error::Parameter(format!("time must be positive, got {t}")));
    }
    let (s, w) = gauss_hermite(mq)?;
    let st = 2.0 * t.sqrt();
    let k: Vec<f64> = s.iter().map(|&x| st * x).collect();
    let total: f64 = w.iter().sum();
    let c: Vec<f64> = w.iter().map(|&x| x / total).collect();
    let kmax = k.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(LchsQuadrature { t, k, c, kmax })
}

/// Σ_m c_m e^{−i k_m B} v — the quadrature route to e^{−tB²} v.
pub fn apply_lchs(b: &CMat, quad: &LchsQuadrature, v: &CVec) -> Result<CVec> {
    if !b.is_hermitian(1e-10 * (1.0 + b.fro_norm())) {
        return Err(Error::Structure(
            "quadrature route requires a Hermitian generator".into(),
        ));
    }
    if v.dim() != b.rows() {
        return Err(Error::Shape(format!(
            "vector has dimension {}, operator is {}x{}",
            v.dim(),
            b.rows(),
            b.cols()
        )));
    }
    let (lam, u) = matrix::hermitian_eigen(b)?;
    let coeff = u.adjoint().matvec(v);
    let mixed: Vec<C64> = lam
        .iter()
        .zip(coeff.data())
        .map(|(&l, co)| {
            let mut acc = C64::new(0.0, 0.0);
            for (km, cm) in quad.k.iter().zip(&quad.c) {
                acc += C64::new(*cm, 0.0) * C64::new(0.0, -km * l).exp();
            }
            co * acc
        })
        .collect();
    Ok(u.matvec(&CVec::from_vec(mixed)?))
}

/// Postselection factor χ = 1/‖e^{−tS_h} u‖ for the normalized projected
/// initial state u = Π_h u0 / ‖Π_h u0‖.
pub fn chi_factor(ops: &StokesOperators, u0: &CVec, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Parameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let proj = ops.pi_h.matvec(u0);
    let nrm = proj.norm();
    if nrm == 0.0 {
        return Err(Error::Parameter(
            "initial velocity has no divergence-free component".into(),
        ));
    }
    let unit = proj.scale(C64::new(1.0 / nrm, 0.0));
    let decayed = matrix::matexp(&ops.sh.scale(C64::new(-t, 0.0)))?.matvec(&unit);
    Ok(1.0 / decayed.norm())
}

/// Unprojected Dirac block operator 𝒟 = [[0, G†], [G, 0]].
pub fn dirac_operator(ops: &StokesOperators) -> CMat {
    let nv = ops.grid.nv();
    let ng = ops.gh.rows();
    let mut d = CMat::zeros(nv + ng, nv + ng);
    d.set_block(0, nv, &ops.gh.adjoint());
    d.set_block(nv, 0, &ops.gh);
    d
}

/// Lifted incompressibility projector 𝒫 = diag(Π_h, I).
pub fn lifted_projector(ops: &StokesOperators) -> CMat {
    let nv = ops.grid.nv();
    let ng = ops.gh.rows();
    let mut p = CMat::zeros(nv + ng, nv + ng);
    p.set_block(0, 0, &ops.pi_h);
    p.set_block(nv, nv, &CMat::identity(ng));
    p
}

/// Repeated-projection square-root product (𝒫 e^{−ik𝒟/r} 𝒫)^r, which
/// converges to e^{−ikB_h} 𝒫 as r → ∞.
pub fn zeno_dirac_product(ops: &StokesOperators, k: f64, r: usize) -> Result<CMat> {
    if r == 0 {
        return Err(Error::Parameter("product needs r >= 1".into()));
    }
    let d = dirac_operator(ops);
    let p = lifted_projector(ops);
    let e = matrix::matexp(&d.scale(C64::new(0.0, -k / r as f64)))?;
    let step = p.mul(&e).mul(&p);
    let mut acc = step.clone();
    for _ in 1..r {
        acc = acc.mul(&step);
    }
    Ok(acc)
}
