//! The Carleman weight family: logarithmic limiting weight phi, its
//! convexified variant, the eikonal companion psi (sphere distance to a fixed
//! direction), and the vanishing-at-T time factor eta, all with closed-form
//! derivatives.

use crate::error::{Error, Result};
use crate::geometry::SpaceTimeGrid;
use num_complex::Complex64;

/// Weight family (x0, omega, h, eps, T). `eta_exponent` is the power of h in
/// the time factor, 2/5 unless an experiment overrides it.
#[derive(Debug, Clone)]
pub struct CarlemanWeight {
    x0: Vec<f64>,
    omega: Vec<f64>,
    h: f64,
    eps: f64,
    t_final: f64,
    eta_exponent: f64,
}

/// Value, gradient, and Laplacian of a spatial weight at one point.
#[derive(Debug, Clone)]
pub struct SpatialEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub laplacian: f64,
}

impl CarlemanWeight {
    pub const DEFAULT_ETA_EXPONENT: f64 = 0.4;
    /// Alignment guard between omega and the observation directions.
    pub const ALIGNMENT_TOL: f64 = 1e-8;

    pub fn new(x0: Vec<f64>, omega: Vec<f64>, h: f64, eps: f64, t_final: f64) -> Result<Self> {
        Self::with_eta_exponent(x0, omega, h, eps, t_final, Self::DEFAULT_ETA_EXPONENT)
    }

    pub fn with_eta_exponent(
        x0: Vec<f64>,
        omega: Vec<f64>,
        h: f64,
        eps: f64,
        t_final: f64,
        eta_exponent: f64,
    ) -> Result<Self> {
        if x0.len() != omega.len() {
            return Err(Error::InvalidArgument(
                "x0 and omega must share the spatial dimension".into(),
            ));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps must be nonnegative, got {eps}"
            )));
        }
        if !(t_final > 0.0) {
            return Err(Error::InvalidArgument("T must be positive".into()));
        }
        if !(eta_exponent > 0.0) {
            return Err(Error::InvalidArgument("eta exponent must be positive".into()));
        }
        let norm = omega.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(Error::InvalidArgument("omega must be nonzero".into()));
        }
        let omega = omega.iter().map(|v| v / norm).collect();
        Ok(Self {
            x0,
            omega,
            h,
            eps,
            t_final,
            eta_exponent,
        })
    }

    /// Default direction for the cube fixture: e3 (e2 in the plane), nearly
    /// orthogonal to every observation direction from x0.
    pub fn default_for_grid(grid: &SpaceTimeGrid, h: f64, eps: f64) -> Result<Self> {
        let n = grid.dim();
        let mut omega = vec![0.0; n];
        omega[n - 1] = 1.0;
        let w = Self::new(
            grid.domain().x0().to_vec(),
            omega,
            h,
            eps,
            grid.domain().t_final(),
        )?;
        w.validate_on(grid)?;
        Ok(w)
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn t_final(&self) -> f64 {
        self.t_final
    }
    pub fn eta_exponent(&self) -> f64 {
        self.eta_exponent
    }
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::with_eta_exponent(
            self.x0.clone(),
            self.omega.clone(),
            h,
            self.eps,
            self.t_final,
            self.eta_exponent,
        )
    }

    /// 1 - |cos| between omega and the observation direction at x.
    pub fn direction_margin(&self, x: &[f64]) -> f64 {
        let (c, _) = self.cos_angle(x);
        1.0 - c.abs()
    }

    /// Checks that omega stays away from every observation direction and its
    /// antipode over the grid, so psi is smooth where it is evaluated.
    pub fn validate_on(&self, grid: &SpaceTimeGrid) -> Result<()> {
        let n = grid.dim();
        if n != self.dim() {
            return Err(Error::ShapeMismatch(
                "weight and grid dimensions differ".into(),
            ));
        }
        let mut x = [0.0f64; 3];
        let mut worst = f64::INFINITY;
        for s in 0..grid.n_space() {
            grid.node_coords(s, &mut x[..n]);
            worst = worst.min(self.direction_margin(&x[..n]));
        }
        if worst < Self::ALIGNMENT_TOL {
            return Err(Error::DegenerateDirection(format!(
                "omega within {worst:.3e} of an observation direction over the grid"
            )));
        }
        Ok(())
    }

    fn displacement(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let r: Vec<f64> = x.iter().zip(&self.x0).map(|(a, b)| a - b).collect();
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        (r, norm)
    }

    fn cos_angle(&self, x: &[f64]) -> (f64, f64) {
        let (r, norm) = self.displacement(x);
        let c = r
            .iter()
            .zip(&self.omega)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / norm;
        (c, norm)
    }

    /// phi = log|x - x0| with gradient (x - x0)/|x - x0|^2 and Laplacian
    /// (n - 2)/|x - x0|^2.
    pub fn phi(&self, x: &[f64]) -> SpatialEval {
        let n = self.dim();
        let (r, norm) = self.displacement(x);
        let r2 = norm * norm;
        SpatialEval {
            value: norm.ln(),
            gradient: r.iter().map(|v| v / r2).collect(),
            laplacian: (n as f64 - 2.0) / r2,
        }
    }

    /// Convexified weight phi_eps = phi + eps phi^2 / 2 with chain-rule
    /// derivatives.
    pub fn phi_eps(&self, x: &[f64]) -> SpatialEval {
        let base = self.phi(x);
        let e = self.eps;
        let factor = 1.0 + e * base.value;
        let grad2: f64 = base.gradient.iter().map(|v| v * v).sum();
        SpatialEval {
            value: base.value + 0.5 * e * base.value * base.value,
            gradient: base.gradient.iter().map(|v| v * factor).collect(),
            laplacian: factor * base.laplacian + e * grad2,
        }
    }

    /// psi = arccos(omega . (x - x0)/|x - x0|), the sphere distance between
    /// the observation direction and omega; same closed form in the plane.
    pub fn psi(&self, x: &[f64]) -> Result<SpatialEval> {
        let (c, norm) = self.cos_angle(x);
        if 1.0 - c.abs() < Self::ALIGNMENT_TOL {
            return Err(Error::DegenerateDirection(format!(
                "direction aligned with omega (|cos| = {})",
                c.abs()
            )));
        }
        let s = (1.0 - c * c).sqrt();
        let (r, _) = self.displacement(x);
        let u: Vec<f64> = r.iter().map(|v| v / norm).collect();
        // grad psi = -(omega - c u)/(|x - x0| sin psi).
        let gradient: Vec<f64> = self
            .omega
            .iter()
            .zip(&u)
            .map(|(w, ui)| -(w - c * ui) / (norm * s))
            .collect();
        // Laplacian of the polar angle about omega: (n - 2) cot(psi) / r^2.
        let laplacian = (self.dim() as f64 - 2.0) * (c / s) / (norm * norm);
        Ok(SpatialEval {
            value: c.acos(),
            gradient,
            laplacian,
        })
    }

    /// eta(t; h) = sin(h^kappa (T - t)^2) and its time derivative.
    pub fn eta(&self, t: f64) -> (f64, f64) {
        let scale = self.h.powf(self.eta_exponent);
        let tau = self.t_final - t;
        let arg = scale * tau * tau;
        (arg.sin(), -2.0 * scale * tau * arg.cos())
    }

    /// Complex phase z = phi + i psi.
    pub fn z(&self, x: &[f64]) -> Result<Complex64> {
        let phi = self.phi(x);
        let psi = self.psi(x)?;
        Ok(Complex64::new(phi.value, psi.value))
    }

    /// rho = grad(phi) + i grad(psi), the isotropic complex direction of the
    /// transport operator.
    pub fn rho(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let phi = self.phi(x);
        let psi = self.psi(x)?;
        Ok(phi
            .gradient
            .iter()
            .zip(&psi.gradient)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect())
    }

    /// Delta(phi) + i Delta(psi).
    pub fn laplacian_z(&self, x: &[f64]) -> Result<Complex64> {
        let phi = self.phi(x);
        let psi = self.psi(x)?;
        Ok(Complex64::new(phi.laplacian, psi.laplacian))
    }
}
