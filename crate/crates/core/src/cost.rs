//! Asymptotic query/gate-count calculator for the three simulation routes.
//!
//! Every big-O constant is set to 1 and every logarithm is natural; the
//! calculator's contract is scaling behavior, not absolute counts. Default
//! normalizations follow the measured 2D staggered-grid operator norms:
//! α_Ĥ = 8 h⁻², α_D = 4 h⁻¹, and a mesh-independent constraint gap γ = 1.
//!
//! Routes:
//! - direct projected simulation: optimal-simulation query count times
//!   (1 + 𝔭) for the polynomial projector of degree
//!   𝔭 = ceil((α_D/γ)·ln(α_Ĥ t/ε));
//! - square-root quadrature simulation: √t·h⁻¹(T_G + h⁻¹T_D) gates, with
//!   the postselected state-preparation variant χ·h⁻²·√t;
//! - classical time stepping: t·h^{−d−1} work (Δt ~ h, O(h^{−d}) per step).

use crate::error::{Error, Result};

/// Inputs for the cost formulas.
#[derive(Debug, Clone, Copy)]
pub struct CostInputs {
    /// Evolution time.
    pub t: f64,
    /// Target error.
    pub eps: f64,
    /// Mesh size.
    pub h: f64,
    /// Spatial dimension (2 or 3).
    pub d: u32,
    /// Dilated-Hamiltonian normalization (default 8 h⁻²).
    pub alpha_h: f64,
    /// Constraint normalization (default 4 h⁻¹).
    pub alpha_d: f64,
    /// Constraint gap (default 1).
    pub gamma: f64,
    /// Per-query gate cost of the Hamiltonian block-encoding.
    pub t_h: f64,
    /// Per-query gate cost of the gradient block-encoding.
    pub t_g: f64,
    /// Per-query gate cost of the divergence block-encoding.
    pub t_d: f64,
    /// Postselection factor for normalized state preparation.
    pub chi: f64,
}

impl CostInputs {
    /// Defaults for a given (t, ε, h, d).
    pub fn for_mesh(t: f64, eps: f64, h: f64, d: u32) -> Result<Self> {
        let inputs = Self {
            t,
            eps,
            h,
            d,
            alpha_h: 8.0 / (h * h),
            alpha_d: 4.0 / h,
            gamma: 1.0,
            t_h: 1.0,
            t_g: 1.0,
            t_d: 1.0,
            chi: 1.0,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        let positives = [
            self.t,
            self.eps,
            self.h,
            self.alpha_h,
            self.alpha_d,
            self.gamma,
            self.t_h,
            self.t_g,
            self.t_d,
            self.chi,
        ];
        if !positives.iter().all(|&v| v.is_finite() && v > 0.0) {
            return Err(Error::Parameter("all cost inputs must be positive".into()));
        }
        if self.eps >= 1.0 {
            return Err(Error::Parameter(format!(
                "target error must be below 1, got {}",
                self.eps
            )));
        }
        if self.d != 2 && self.d != 3 {
            return Err(Error::Parameter(format!(
                "spatial dimension must be 2 or 3, got {}",
                self.d
            )));
        }
        Ok(())
    }
}

/// Direct projected-simulation costs.
#[derive(Debug, Clone, Copy)]
pub struct DirectCost {
    pub queries: f64,
    pub gates: f64,
    /// Projector polynomial degree 𝔭.
    pub p_degree: u64,
}

/// Optimal-simulation query count dressed with the projector degree:
/// queries = (α_Ĥ t + ln(1/ε)/ln(e + ln(1/ε)/(α_Ĥ t)))·(1 + 𝔭),
/// gates  = (same base)·(T_Ĥ + 𝔭·T_D).
pub fn direct_cost(inputs: &CostInputs) -> Result<DirectCost> {
    inputs.validate()?;
    let x = inputs.alpha_h * inputs.t;
    let log_eps = (1.0 / inputs.eps).ln();
    let base = x + log_eps / (std::f64::consts::E + log_eps / x).ln();
    let p_raw = (inputs.alpha_d / inputs.gamma) * (x / inputs.eps).ln();
    let p = p_raw.ceil().max(0.0);
    Ok(DirectCost {
        queries: base * (1.0 + p),
        gates: base * (inputs.t_h + p * inputs.t_d),
        p_degree: p as u64,
    })
}

/// Square-root quadrature-simulation costs.
#[derive(Debug, Clone, Copy)]
pub struct GaussianZenoCost {
    /// Block-encoding gate cost √t·h⁻¹·(T_G + h⁻¹·T_D).
    pub gates: f64,
    /// Normalized state preparation χ·h⁻²·√t.
    pub prep_gates: f64,
}

pub fn gaussian_zeno_cost(inputs: &CostInputs) -> Result<GaussianZenoCost> {
    inputs.validate()?;
    let sqrt_t = inputs.t.sqrt();
    let inv_h = 1.0 / inputs.h;
    Ok(GaussianZenoCost {
        gates: sqrt_t * inv_h * (inputs.t_g + inv_h * inputs.t_d),
        prep_gates: inputs.chi * inv_h * inv_h * sqrt_t,
    })
}

/// Classical time-stepping work t·h^{−d−1}.
pub fn classical_cost(inputs: &CostInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(inputs.t * inputs.h.powi(-(inputs.d as i32) - 1))
}

/// One cell of the crossover table.
#[derive(Debug, Clone, Copy)]
pub struct CrossoverRow {
    pub h: f64,
    pub t: f64,
    pub eps: f64,
    pub d: u32,
    pub chi: f64,
    pub p_degree: u64,
    pub direct_queries: f64,
    pub direct_gates: f64,
    pub gz_gates: f64,
    pub gz_prep: f64,
    pub classical: f64,
    /// True where the quadrature-route gate count beats the classical work.
    pub quantum_wins: bool,
}

/// Tabulate all three costs over an (h, t) grid. This is a heuristic
/// evolution-stage comparison only: state preparation, measurement and data
/// access are deliberately not priced, except where χ scales the preparation
/// column.
pub fn crossover_report(
    h_values: &[f64],
    t_values: &[f64],
    eps: f64,
    d: u32,
    chi: f64,
) -> Result<Vec<CrossoverRow>> {
    if h_values.is_empty() || t_values.is_empty() {
        return Err(Error::Parameter("crossover ranges must be nonempty".into()));
    }
    let mut hs = h_values.to_vec();
    let mut ts = t_values.to_vec();
    hs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut rows = Vec::with_capacity(hs.len() * ts.len());
    for &h in &hs {
        for &t in &ts {
            let mut inputs = CostInputs::for_mesh(t, eps, h, d)?;
            inputs.chi = chi;
            let direct = direct_cost(&inputs)?;
            let gz = gaussian_zeno_cost(&inputs)?;
            let classical = classical_cost(&inputs)?;
            rows.push(CrossoverRow {
                h,
                t,
                eps,
                d,
                chi,
                p_degree: direct.p_degree,
                direct_queries: direct.queries,
                direct_gates: direct.gates,
                gz_gates: gz.gates,
                gz_prep: gz.prep_gates,
                classical,
                quantum_wins: gz.gates < classical,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_inputs() -> CostInputs {
        CostInputs {
            t: 1.0,
            eps: 0.5,
            h: 1.0,
            d: 2,
            alpha_h: 1.0,
            alpha_d: 1.0,
            gamma: 1.0,
            t_h: 1.0,
            t_g: 1.0,
            t_d: 1.0,
            chi: 1.0,
        }
    }

    #[test]
    fn unit_case_projector_degree() {
        // α_Ĥ t = 1, α_D/γ = 1, ε = 0.5: 𝔭 = ceil(ln 2) = 1
        let dc = direct_cost(&unit_inputs()).unwrap();
        assert_eq!(dc.p_degree, 1);
        assert!(dc.queries > 0.0 && dc.queries < 10.0);
    }

    #[test]
    fn degree_zero_reduces_to_bare_simulation_cost() {
        let mut inputs = unit_inputs();
        inputs.t = 0.25;
        inputs.eps = 0.5;
        // α_Ĥ t / ε = 0.5 < 1 drives the ceil to zero
        let dc = direct_cost(&inputs).unwrap();
        assert_eq!(dc.p_degree, 0);
        let x = inputs.alpha_h * inputs.t;
        let log_eps = (1.0 / inputs.eps).ln();
        let base = x + log_eps / (std::f64::consts::E + log_eps / x).ln();
        assert_abs_diff_eq!(dc.queries, base, epsilon = 1e-14);
        assert_abs_diff_eq!(dc.gates, base, epsilon = 1e-14);
    }

    #[test]
    fn doubling_time_asymptotically_doubles_queries() {
        // α_Ĥ t ≫ log(1/ε): the t-term dominates the base factor
        let a = CostInputs::for_mesh(64.0, 1e-6, 0.25, 2).unwrap();
        let b = CostInputs::for_mesh(128.0, 1e-6, 0.25, 2).unwrap();
        let qa = direct_cost(&a).unwrap().queries;
        let qb = direct_cost(&b).unwrap().queries;
        let ratio = qb / qa;
        assert!((1.95..=2.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn mesh_halving_ratios_match_scaling_laws() {
        let t = 1.0;
        let eps = 1e-6;
        let hs = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
        let mut prev: Option<(f64, f64, f64)> = None;
        for &h in &hs {
            let inputs = CostInputs::for_mesh(t, eps, h, 2).unwrap();
            let gd = direct_cost(&inputs).unwrap().gates;
            let gz = gaussian_zeno_cost(&inputs).unwrap().gates;
            let cl = classical_cost(&inputs).unwrap();
            if let Some((pd, pz, pc)) = prev {
                let rd = gd / pd;
                let rz = gz / pz;
                let rc = cl / pc;
                assert!((6.8..=9.2).contains(&rd), "direct ratio {rd}");
                assert!((3.6..=4.4).contains(&rz), "quadrature ratio {rz}");
                assert_abs_diff_eq!(rc, 8.0, epsilon = 1e-12);
            }
            prev = Some((gd, gz, cl));
        }
    }

    #[test]
    fn quadrature_route_time_and_unit_scalings() {
        let a = CostInputs::for_mesh(1.0, 1e-6, 0.125, 2).unwrap();
        let b = CostInputs::for_mesh(4.0, 1e-6, 0.125, 2).unwrap();
        let ga = gaussian_zeno_cost(&a).unwrap();
        let gb = gaussian_zeno_cost(&b).unwrap();
        assert_abs_diff_eq!(gb.gates / ga.gates, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gb.prep_gates / ga.prep_gates, 2.0, epsilon = 1e-12);

        // χ = 1, t = 1, h = 1 gives T_G + T_D
        let mut unit = unit_inputs();
        unit.t_g = 3.0;
        unit.t_d = 5.0;
        let g = gaussian_zeno_cost(&unit).unwrap();
        assert_abs_diff_eq!(g.gates, 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.prep_gates, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn classical_dimension_scalings() {
        for (d, factor) in [(2u32, 8.0), (3u32, 16.0)] {
            let a = CostInputs::for_mesh(1.0, 1e-6, 0.25, d).unwrap();
            let b = CostInputs::for_mesh(1.0, 1e-6, 0.125, d).unwrap();
            let ratio = classical_cost(&b).unwrap() / classical_cost(&a).unwrap();
            assert_abs_diff_eq!(ratio, factor, epsilon = 1e-12);
        }
        let a = CostInputs::for_mesh(1.0, 1e-6, 0.25, 2).unwrap();
        let b = CostInputs::for_mesh(2.0, 1e-6, 0.25, 2).unwrap();
        assert_abs_diff_eq!(
            classical_cost(&b).unwrap() / classical_cost(&a).unwrap(),
            2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn costs_are_monotone() {
        let base = CostInputs::for_mesh(1.0, 1e-6, 0.125, 2).unwrap();
        let dc0 = direct_cost(&base).unwrap();
        let gz0 = gaussian_zeno_cost(&base).unwrap();
        let cl0 = classical_cost(&base).unwrap();

        let mut longer = base;
        longer.t = 2.0;
        assert!(direct_cost(&longer).unwrap().queries > dc0.queries);
        assert!(gaussian_zeno_cost(&longer).unwrap().gates > gz0.gates);
        assert!(classical_cost(&longer).unwrap() > cl0);

        let finer = CostInputs::for_mesh(1.0, 1e-6, 0.0625, 2).unwrap();
        assert!(direct_cost(&finer).unwrap().gates > dc0.gates);
        assert!(gaussian_zeno_cost(&finer).unwrap().gates > gz0.gates);
        assert!(classical_cost(&finer).unwrap() > cl0);

        let mut sharper = base;
        sharper.eps = 1e-9;
        assert!(direct_cost(&sharper).unwrap().queries > dc0.queries);

        let mut amplified = base;
        amplified.chi = 3.0;
        assert!(gaussian_zeno_cost(&amplified).unwrap().prep_gates > gz0.prep_gates);
    }

    #[test]
    fn crossover_table_ratios_and_verdicts() {
        let hs = [0.125, 0.0625, 0.03125];
        let ts = [1.0, 4.0];
        let rows = crossover_report(&hs, &ts, 1e-6, 2, 1.0).unwrap();
        assert_eq!(rows.len(), 6);
        // fixed t, h halving: quantum/classical ratio halves
        let at_t1: Vec<&CrossoverRow> = rows.iter().filter(|r| r.t == 1.0).collect();
        for pair in at_t1.windows(2) {
            let r0 = pair[0].gz_gates / pair[0].classical;
            let r1 = pair[1].gz_gates / pair[1].classical;
            assert_abs_diff_eq!(r1 / r0, 0.5, epsilon = 0.05);
        }
        // fixed h, t quadrupling: ratio halves (∝ 1/√t)
        let at_h: Vec<&CrossoverRow> = rows.iter().filter(|r| r.h == 0.125).collect();
        let r0 = at_h[0].gz_gates / at_h[0].classical;
        let r1 = at_h[1].gz_gates / at_h[1].classical;
        assert_abs_diff_eq!(r1 / r0, 0.5, epsilon = 1e-12);
        // verdicts flip with χ only through the prep column; verify the
        // flag tracks the gate comparison
        for r in &rows {
            assert_eq!(r.quantum_wins, r.gz_gates < r.classical);
        }
        assert!(crossover_report(&[], &ts, 1e-6, 2, 1.0).is_err());
    }
}
