//! Sampled space-time fields, coefficient pairs (A, q), gauge functions and
//! the gauge action, the effective potential, and quadrature norms.

use crate::error::{Error, Result};
use crate::geometry::{self, BoundaryPartition, SpaceTimeGrid};
use crate::scalar::Scalar;
use num_complex::Complex64;
use std::sync::Arc;

/// Scalar field sampled on every (time level, space node) of a grid.
#[derive(Debug, Clone)]
pub struct ScalarField<T> {
    grid: Arc<SpaceTimeGrid>,
    values: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn zeros(grid: Arc<SpaceTimeGrid>) -> Self {
        let len = grid.n_levels() * grid.n_space();
        Self {
            grid,
            values: vec![T::ZERO; len],
        }
    }

    pub fn from_values(grid: Arc<SpaceTimeGrid>, values: Vec<T>) -> Result<Self> {
        let expect = grid.n_levels() * grid.n_space();
        if values.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "scalar field needs {expect} values, got {}",
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample a closure `(t, x) -> value` on every node.
    pub fn from_fn(grid: Arc<SpaceTimeGrid>, f: impl Fn(f64, &[f64]) -> T) -> Self {
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.n_levels() * grid.n_space());
        let mut x = [0.0f64; 3];
        for level in 0..grid.n_levels() {
            let t = grid.time(level);
            for s in 0..grid.n_space() {
                grid.node_coords(s, &mut x[..n]);
                values.push(f(t, &x[..n]));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }
    pub fn grid_arc(&self) -> Arc<SpaceTimeGrid> {
        self.grid.clone()
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, level: usize, s: usize) -> T {
        self.values[level * self.grid.n_space() + s]
    }
    #[inline]
    pub fn set(&mut self, level: usize, s: usize, v: T) {
        let n = self.grid.n_space();
        self.values[level * n + s] = v;
    }
    pub fn level(&self, level: usize) -> &[T] {
        let n = self.grid.n_space();
        &self.values[level * n..(level + 1) * n]
    }
    pub fn level_mut(&mut self, level: usize) -> &mut [T] {
        let n = self.grid.n_space();
        &mut self.values[level * n..(level + 1) * n]
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.zip(other, |a, b| a.scale(alpha) + b.scale(beta))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Promote a real field into the complex plane.
    pub fn to_complex(&self) -> ScalarField<Complex64> {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.to_complex()).collect(),
        }
    }
}

/// Vector field stored as per-axis scalar components.
#[derive(Debug, Clone)]
pub struct VectorField<T> {
    components: Vec<ScalarField<T>>,
}

impl<T: Scalar> VectorField<T> {
    pub fn new(components: Vec<ScalarField<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::ShapeMismatch("vector field needs components".into()));
        }
        for c in &components[1..] {
            components[0].same_grid(c)?;
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: Arc<SpaceTimeGrid>, arity: usize) -> Self {
        Self {
            components: (0..arity).map(|_| ScalarField::zeros(grid.clone())).collect(),
        }
    }

    pub fn from_fns(grid: Arc<SpaceTimeGrid>, fns: &[&dyn Fn(f64, &[f64]) -> T]) -> Self {
        Self {
            components: fns
                .iter()
                .map(|f| ScalarField::from_fn(grid.clone(), f))
                .collect(),
        }
    }

    pub fn grid_arc(&self) -> Arc<SpaceTimeGrid> {
        self.components[0].grid_arc()
    }
    pub fn arity(&self) -> usize {
        self.components.len()
    }
    pub fn component(&self, axis: usize) -> &ScalarField<T> {
        &self.components[axis]
    }
    pub fn component_mut(&mut self, axis: usize) -> &mut ScalarField<T> {
        &mut self.components[axis]
    }
    pub fn components(&self) -> &[ScalarField<T>] {
        &self.components
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.arity() != other.arity() {
            return Err(Error::ShapeMismatch("vector arity mismatch".into()));
        }
        Self::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect::<Result<_>>()?,
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.arity() != other.arity() {
            return Err(Error::ShapeMismatch("vector arity mismatch".into()));
        }
        Self::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect::<Result<_>>()?,
        )
    }

    /// Pointwise squared modulus |V|^2 as a real-valued field in `T`.
    pub fn abs2_field(&self) -> ScalarField<T> {
        let grid = self.grid_arc();
        let mut values = vec![T::ZERO; grid.n_levels() * grid.n_space()];
        for c in &self.components {
            for (v, &a) in values.iter_mut().zip(c.values()) {
                *v += T::from_re(a.abs2());
            }
        }
        ScalarField { grid, values }
    }

    /// Pointwise dot product with a scalar-field result.
    pub fn dot(&self, other: &Self) -> Result<ScalarField<T>> {
        if self.arity() != other.arity() {
            return Err(Error::ShapeMismatch("vector arity mismatch".into()));
        }
        let grid = self.grid_arc();
        let mut values = vec![T::ZERO; grid.n_levels() * grid.n_space()];
        for (a, b) in self.components.iter().zip(&other.components) {
            a.same_grid(b)?;
            for ((v, &x), &y) in values.iter_mut().zip(a.values()).zip(b.values()) {
                *v += x * y;
            }
        }
        Ok(ScalarField { grid, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }
}

/// Boundary trace sampled on (time level, facet).
#[derive(Debug, Clone)]
pub struct TraceField<T> {
    grid: Arc<SpaceTimeGrid>,
    partition: Arc<BoundaryPartition>,
    values: Vec<T>,
}

impl<T: Scalar> TraceField<T> {
    pub fn new(
        grid: Arc<SpaceTimeGrid>,
        partition: Arc<BoundaryPartition>,
        values: Vec<T>,
    ) -> Self {
        debug_assert_eq!(values.len(), grid.n_levels() * partition.facets().len());
        Self {
            grid,
            partition,
            values,
        }
    }

    pub fn zeros(grid: Arc<SpaceTimeGrid>, partition: Arc<BoundaryPartition>) -> Self {
        let len = grid.n_levels() * partition.facets().len();
        Self::new(grid, partition, vec![T::ZERO; len])
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }
    pub fn partition(&self) -> &Arc<BoundaryPartition> {
        &self.partition
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    #[inline]
    pub fn at(&self, level: usize, facet: usize) -> T {
        self.values[level * self.partition.facets().len() + facet]
    }
    #[inline]
    pub fn set(&mut self, level: usize, facet: usize, v: T) {
        let n = self.partition.facets().len();
        self.values[level * n + facet] = v;
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::ShapeMismatch("trace shapes differ".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            partition: self.partition.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    /// Surface-time L2 norm restricted by a facet filter.
    pub fn l2_restricted(&self, keep: impl Fn(&crate::geometry::Facet) -> bool) -> f64 {
        let facets = self.partition.facets();
        let mut acc = 0.0;
        for level in 0..self.grid.n_levels() {
            let wt = self.grid.time_weight(level);
            for (fi, facet) in facets.iter().enumerate() {
                if keep(facet) {
                    acc += wt * facet.area_weight * self.at(level, fi).abs2();
                }
            }
        }
        acc.sqrt()
    }

    pub fn l2(&self) -> f64 {
        self.l2_restricted(|_| true)
    }
}

// ---------------------------------------------------------------------------
// Coefficients and gauge functions
// ---------------------------------------------------------------------------

/// Bounds enforced as discrete surrogates of the function-space hypotheses
/// on (A, q).
#[derive(Debug, Clone, Copy)]
pub struct CoefficientBounds {
    /// Cap on max|A| and max|grad A| (finite W^{1,inf} surrogate).
    pub a_w1inf: f64,
    /// Cap on max|q|.
    pub q_linf: f64,
}

impl Default for CoefficientBounds {
    fn default() -> Self {
        Self {
            a_w1inf: 1e3,
            q_linf: 1e3,
        }
    }
}

/// Convection/density coefficient pair (A, q) with regularity surrogates.
#[derive(Debug, Clone)]
pub struct CoefficientPair {
    a: VectorField<f64>,
    q: ScalarField<f64>,
}

impl CoefficientPair {
    pub fn new(a: VectorField<f64>, q: ScalarField<f64>) -> Result<Self> {
        Self::with_bounds(a, q, CoefficientBounds::default())
    }

    pub fn with_bounds(
        a: VectorField<f64>,
        q: ScalarField<f64>,
        bounds: CoefficientBounds,
    ) -> Result<Self> {
        a.component(0).same_grid(&q)?;
        if a.arity() != q.grid().dim() {
            return Err(Error::ShapeMismatch(
                "convection field needs one component per spatial axis".into(),
            ));
        }
        for c in a.components() {
            if !c.all_finite() {
                return Err(Error::Numerical("non-finite entries in A".into()));
            }
        }
        if !q.all_finite() {
            return Err(Error::Numerical("non-finite entries in q".into()));
        }
        if a.max_abs() > bounds.a_w1inf {
            return Err(Error::Precondition(format!(
                "max|A| = {} exceeds the W^(1,inf) surrogate cap {}",
                a.max_abs(),
                bounds.a_w1inf
            )));
        }
        let grad_cap = a
            .components()
            .iter()
            .map(|c| geometry::grad(c).max_abs())
            .fold(0.0, f64::max);
        if grad_cap > bounds.a_w1inf {
            return Err(Error::Precondition(format!(
                "max|grad A| = {grad_cap} exceeds the W^(1,inf) surrogate cap {}",
                bounds.a_w1inf
            )));
        }
        if q.max_abs() > bounds.q_linf {
            return Err(Error::Precondition(format!(
                "max|q| = {} exceeds the L^inf surrogate cap {}",
                q.max_abs(),
                bounds.q_linf
            )));
        }
        Ok(Self { a, q })
    }

    pub fn zero(grid: Arc<SpaceTimeGrid>) -> Self {
        let n = grid.dim();
        Self {
            a: VectorField::zeros(grid.clone(), n),
            q: ScalarField::zeros(grid),
        }
    }

    pub fn grid_arc(&self) -> Arc<SpaceTimeGrid> {
        self.q.grid_arc()
    }
    pub fn a(&self) -> &VectorField<f64> {
        &self.a
    }
    pub fn q(&self) -> &ScalarField<f64> {
        &self.q
    }

    /// Max difference of A against another pair over lateral-boundary nodes.
    pub fn boundary_a_gap(&self, other: &Self) -> Result<f64> {
        self.q.same_grid(&other.q)?;
        let grid = self.grid_arc();
        let mut worst = 0.0f64;
        for level in 0..grid.n_levels() {
            for s in 0..grid.n_space() {
                if !grid.is_boundary(s) {
                    continue;
                }
                for axis in 0..grid.dim() {
                    let d = (self.a.component(axis).at(level, s)
                        - other.a.component(axis).at(level, s))
                    .abs();
                    worst = worst.max(d);
                }
            }
        }
        Ok(worst)
    }
}

/// Gauge function Psi with optional closed-form space gradient and time
/// derivative; stencils fill in when closures are absent.
pub struct GaugeFunction {
    psi: ScalarField<f64>,
    grad: VectorField<f64>,
    dt: ScalarField<f64>,
    /// True when derivatives came from closed forms rather than stencils.
    analytic: bool,
}

impl GaugeFunction {
    /// Boundary-vanishing tolerance of the W_0^{2,inf} surrogate.
    pub const BOUNDARY_TOL: f64 = 1e-8;

    pub fn from_closures(
        grid: Arc<SpaceTimeGrid>,
        psi: impl Fn(f64, &[f64]) -> f64,
        grad: &[&dyn Fn(f64, &[f64]) -> f64],
        dt: impl Fn(f64, &[f64]) -> f64,
    ) -> Result<Self> {
        let psi = ScalarField::from_fn(grid.clone(), psi);
        let grad = VectorField::from_fns(grid.clone(), grad);
        let dt = ScalarField::from_fn(grid, dt);
        let g = Self {
            psi,
            grad,
            dt,
            analytic: true,
        };
        g.check_boundary_vanishing()?;
        Ok(g)
    }

    pub fn from_field(psi: ScalarField<f64>) -> Result<Self> {
        let grad = geometry::grad(&psi);
        let dt = geometry::time_derivative(&psi);
        let g = Self {
            psi,
            grad,
            dt,
            analytic: false,
        };
        g.check_boundary_vanishing()?;
        Ok(g)
    }

    pub fn zero(grid: Arc<SpaceTimeGrid>) -> Self {
        Self {
            psi: ScalarField::zeros(grid.clone()),
            grad: VectorField::zeros(grid.clone(), grid.dim()),
            dt: ScalarField::zeros(grid),
            analytic: true,
        }
    }

    pub fn psi(&self) -> &ScalarField<f64> {
        &self.psi
    }
    pub fn grad(&self) -> &VectorField<f64> {
        &self.grad
    }
    pub fn dt(&self) -> &ScalarField<f64> {
        &self.dt
    }
    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    /// Negated gauge (group inverse).
    pub fn negated(&self) -> Self {
        Self {
            psi: self.psi.map(|v| -v),
            grad: VectorField::new(self.grad.components().iter().map(|c| c.map(|v| -v)).collect())
                .expect("same grids"),
            dt: self.dt.map(|v| -v),
            analytic: self.analytic,
        }
    }

    /// Max of |Psi|, |grad Psi|, |dt Psi| over lateral-boundary nodes.
    pub fn boundary_residual(&self) -> f64 {
        let grid = self.psi.grid_arc();
        let mut worst = 0.0f64;
        for level in 0..grid.n_levels() {
            for s in 0..grid.n_space() {
                if !grid.is_boundary(s) {
                    continue;
                }
                worst = worst.max(self.psi.at(level, s).abs());
                worst = worst.max(self.dt.at(level, s).abs());
                for axis in 0..grid.dim() {
                    worst = worst.max(self.grad.component(axis).at(level, s).abs());
                }
            }
        }
        worst
    }

    fn check_boundary_vanishing(&self) -> Result<()> {
        let r = self.boundary_residual();
        if r > Self::BOUNDARY_TOL {
            return Err(Error::Precondition(format!(
                "gauge function must vanish with first derivatives on the lateral boundary \
                 (max residual {r:.3e} > {:.1e})",
                Self::BOUNDARY_TOL
            )));
        }
        Ok(())
    }
}

/// Gauge action: (A, q) -> (A + grad Psi, q + dt Psi). The returned pair
/// matches the input on the lateral boundary.
pub fn apply_gauge(c: &CoefficientPair, psi: &GaugeFunction) -> Result<CoefficientPair> {
    psi.check_boundary_vanishing()?;
    c.q().same_grid(psi.psi())?;
    let a = c.a().add(psi.grad())?;
    let q = c.q().add(psi.dt())?;
    CoefficientPair::new(a, q)
}

/// Effective potential q~ = -div A - |A|^2 + q produced by expanding the
/// squared convection operator.
pub fn effective_potential(c: &CoefficientPair) -> ScalarField<f64> {
    let div = geometry::divergence(c.a());
    let a2 = c.a().abs2_field();
    let mut out = c.q().clone();
    for ((v, &d), &m) in out.values_mut().iter_mut().zip(div.values()).zip(a2.values()) {
        *v += -d - m;
    }
    out
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    /// Semiclassical first-order norm: sqrt(|h grad u|^2 + |u|^2) integrated
    /// over space-time.
    SemiclassicalH1 {
        h: f64,
    },
    Max,
}

/// Space-time trapezoid quadrature of |f|^2, square-rooted (or max norm).
pub fn norm<T: Scalar>(field: &ScalarField<T>, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Max => Ok(field.max_abs()),
        NormKind::L2 => Ok(weighted_l2(field, None)),
        NormKind::SemiclassicalH1 { h } => {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "semiclassical norm needs h > 0, got {h}"
                )));
            }
            let g = geometry::grad(field);
            let mut acc = weighted_l2(field, None).powi(2);
            for c in g.components() {
                acc += h * h * weighted_l2(c, None).powi(2);
            }
            Ok(acc.sqrt())
        }
    }
}

/// L2 over space-time with an optional extra pointwise weight.
pub fn weighted_l2<T: Scalar>(field: &ScalarField<T>, weight: Option<&ScalarField<f64>>) -> f64 {
    let grid = field.grid();
    let mut acc = 0.0;
    for level in 0..grid.n_levels() {
        let wt = grid.time_weight(level);
        for s in 0..grid.n_space() {
            let w = wt * grid.space_weight(s)
                * weight.map_or(1.0, |f| {
                    let v = f.at(level, s);
                    v * v
                });
            acc += w * field.at(level, s).abs2();
        }
    }
    acc.sqrt()
}

/// Space-time inner product (u, v) = integral of u * conj(v).
pub fn inner_product<T: Scalar>(u: &ScalarField<T>, v: &ScalarField<T>) -> Result<Complex64> {
    u.same_grid(v)?;
    let grid = u.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    for level in 0..grid.n_levels() {
        let wt = grid.time_weight(level);
        for s in 0..grid.n_space() {
            let w = wt * grid.space_weight(s);
            acc += u.at(level, s).to_complex() * v.at(level, s).to_complex().conj() * w;
        }
    }
    Ok(acc)
}

/// Spatial integral of a single time level.
pub fn integrate_level<T: Scalar>(field: &ScalarField<T>, level: usize) -> Complex64 {
    let grid = field.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    for s in 0..grid.n_space() {
        acc += field.at(level, s).to_complex() * grid.space_weight(s);
    }
    acc
}

/// Space-time integral of a field.
pub fn integrate<T: Scalar>(field: &ScalarField<T>) -> Complex64 {
    let grid = field.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    for level in 0..grid.n_levels() {
        acc += integrate_level(field, level) * grid.time_weight(level);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use std::f64::consts::PI;

    fn grid(nx: usize, nt: usize) -> Arc<SpaceTimeGrid> {
        Arc::new(SpaceTimeGrid::uniform(Domain::unit_cube_default(), nx, nt).unwrap())
    }

    fn sin2_gauge(grid: Arc<SpaceTimeGrid>) -> GaugeFunction {
        let profile = |x: &[f64]| {
            x.iter()
                .map(|&xi| (PI * xi).sin().powi(2))
                .product::<f64>()
        };
        let d_profile = |x: &[f64], axis: usize| {
            let mut p = 2.0 * PI * (PI * x[axis]).sin() * (PI * x[axis]).cos();
            for (b, &xb) in x.iter().enumerate() {
                if b != axis {
                    p *= (PI * xb).sin().powi(2);
                }
            }
            p
        };
        GaugeFunction::from_closures(
            grid,
            move |t, x| t * profile(x),
            &[
                &move |t: f64, x: &[f64]| t * d_profile(x, 0),
                &move |t: f64, x: &[f64]| t * d_profile(x, 1),
                &move |t: f64, x: &[f64]| t * d_profile(x, 2),
            ],
            move |_t, x| profile(x),
        )
        .unwrap()
    }

    #[test]
    fn identity_gauge_is_a_no_op() {
        let g = grid(6, 3);
        let c = CoefficientPair::zero(g.clone());
        let psi = GaugeFunction::zero(g);
        let out = apply_gauge(&c, &psi).unwrap();
        assert_eq!(out.a().component(0).values(), c.a().component(0).values());
        assert_eq!(out.q().values(), c.q().values());
    }

    #[test]
    fn gauge_action_shifts_a_and_q_and_preserves_boundary() {
        let g = grid(7, 4);
        let c = CoefficientPair::zero(g.clone());
        let psi = sin2_gauge(g.clone());
        let out = apply_gauge(&c, &psi).unwrap();
        assert!((out.boundary_a_gap(&c).unwrap()).abs() < 1e-12);
        // Interior values gained t * d(prod sin^2) and prod sin^2.
        let mid = g.n_space() / 2;
        let lvl = g.n_levels() - 1;
        assert!(out.a().component(0).at(lvl, mid).abs() > 0.0 || out.q().at(lvl, mid) > 0.0);
        assert!(
            (out.q().at(lvl, mid) - psi.dt().at(lvl, mid)).abs() < 1e-14,
            "q gains dt Psi"
        );
    }

    #[test]
    fn gauge_is_a_group_action() {
        let g = grid(6, 3);
        let base = CoefficientPair::new(
            VectorField::from_fns(
                g.clone(),
                &[
                    &|t: f64, x: &[f64]| 0.3 * x[1] + 0.1 * t,
                    &|_t: f64, x: &[f64]| 0.2 * x[2],
                    &|_t: f64, x: &[f64]| 0.1 * x[0],
                ],
            ),
            ScalarField::from_fn(g.clone(), |t, x| 0.5 * x[0] + t),
        )
        .unwrap();
        let psi = sin2_gauge(g);
        let there = apply_gauge(&base, &psi).unwrap();
        let back = apply_gauge(&there, &psi.negated()).unwrap();
        for axis in 0..3 {
            for (a, b) in back
                .a()
                .component(axis)
                .values()
                .iter()
                .zip(base.a().component(axis).values())
            {
                assert!((a - b).abs() < 1e-12);
            }
        }
        for (a, b) in back.q().values().iter().zip(base.q().values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_vanishing_gauge() {
        let g = grid(6, 3);
        let psi = ScalarField::from_fn(g, |_t, x| x[0]);
        assert!(GaugeFunction::from_field(psi).is_err());
    }

    #[test]
    fn curl_of_stencil_gauge_gradient_vanishes_identically() {
        // Discrete partial derivatives along distinct axes commute, so the
        // curl of a stencil gradient is exactly zero.
        let g = grid(6, 3);
        let psi = ScalarField::from_fn(g.clone(), |t, x| {
            (1.0 + t) * (PI * x[0]).sin() * (2.0 * x[1]).cos() * x[2].powi(2)
        });
        let grad = geometry::grad(&psi);
        for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let dadb = geometry::grad(grad.component(a));
            let dbda = geometry::grad(grad.component(b));
            for (u, v) in dadb.component(b).values().iter().zip(dbda.component(a).values()) {
                assert!((u - v).abs() < 1e-10, "curl component {a}{b}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn effective_potential_formula() {
        let g = grid(7, 3);
        // A = (x1, 0, 0), q = 0 -> q~ = -1 - x1^2.
        let c = CoefficientPair::new(
            VectorField::from_fns(
                g.clone(),
                &[
                    &|_t: f64, x: &[f64]| x[0],
                    &|_t: f64, _x: &[f64]| 0.0,
                    &|_t: f64, _x: &[f64]| 0.0,
                ],
            ),
            ScalarField::zeros(g.clone()),
        )
        .unwrap();
        let qt = effective_potential(&c);
        let mut xc = [0.0; 3];
        for s in 0..g.n_space() {
            g.node_coords(s, &mut xc);
            assert!((qt.at(0, s) - (-1.0 - xc[0] * xc[0])).abs() < 1e-10);
        }
        // A = 0 -> q~ = q.
        let c0 = CoefficientPair::new(
            VectorField::zeros(g.clone(), 3),
            ScalarField::from_fn(g.clone(), |t, x| t + x[1]),
        )
        .unwrap();
        let qt0 = effective_potential(&c0);
        for (a, b) in qt0.values().iter().zip(c0.q().values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn effective_potential_gauge_difference_identity() {
        // q~(A + G, q + psi_t) - q~(A, q) = -div G - 2 A.G - |G|^2 + psi_t,
        // exact when both sides use the same stencil gradient G.
        let g = grid(6, 4);
        let base = CoefficientPair::new(
            VectorField::from_fns(
                g.clone(),
                &[
                    &|_t: f64, x: &[f64]| 0.4 * x[1],
                    &|_t: f64, x: &[f64]| 0.3 * x[2],
                    &|t: f64, _x: &[f64]| 0.2 * t,
                ],
            ),
            ScalarField::from_fn(g.clone(), |t, x| 0.3 * t * x[0]),
        )
        .unwrap();
        let psi_field = ScalarField::from_fn(g.clone(), |t, x| {
            t * x
                .iter()
                .map(|&xi| (PI * xi).sin().powi(2))
                .product::<f64>()
        });
        let psi = GaugeFunction::from_field(psi_field).unwrap();
        let gauged = apply_gauge(&base, &psi).unwrap();
        let lhs = effective_potential(&gauged)
            .sub(&effective_potential(&base))
            .unwrap();
        let div_g = geometry::divergence(psi.grad());
        let a_dot_g = base.a().dot(psi.grad()).unwrap();
        let g2 = psi.grad().abs2_field();
        let mut rhs = psi.dt().clone();
        for (((v, &d), &ag), &gg) in rhs
            .values_mut()
            .iter_mut()
            .zip(div_g.values())
            .zip(a_dot_g.values())
            .zip(g2.values())
        {
            *v += -d - 2.0 * ag - gg;
        }
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn norms_on_reference_fields() {
        let g = grid(17, 8);
        let one = ScalarField::from_fn(g.clone(), |_, _| 1.0);
        assert!((norm(&one, NormKind::L2).unwrap() - 1.0).abs() < 1e-12);
        assert!(
            (norm(&one, NormKind::SemiclassicalH1 { h: 0.3 }).unwrap() - 1.0).abs() < 1e-10
        );
        assert!(norm(&one, NormKind::SemiclassicalH1 { h: 0.0 }).is_err());
        // L2 of sin(pi x1) over the unit cube and unit time: 1/sqrt(2).
        let f = ScalarField::from_fn(g.clone(), |_, x| (PI * x[0]).sin());
        let l2 = norm(&f, NormKind::L2).unwrap();
        assert!(
            (l2 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10,
            "got {l2}"
        );
        assert!((norm(&f, NormKind::Max).unwrap() - 1.0).abs() < 1e-12);
    }
}
