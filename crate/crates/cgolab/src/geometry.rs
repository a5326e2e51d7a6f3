//! Spatial domain, space-time grid, boundary facet classification relative to
//! the exterior point, and the discrete differential operators shared by all
//! other modules.
//!
//! The domain is an axis-aligned box; facet normals are axis vectors and a
//! corner/edge node is owned by a single face chosen by axis precedence
//! (x1 before x2 before x3). Surface quadrature is facet-based, so a node on
//! an edge contributes to every adjacent face with that face's trapezoid
//! weight.

use crate::error::{Error, Result};
use crate::fields::{ScalarField, TraceField, VectorField};
use crate::scalar::Scalar;
use std::sync::Arc;

/// Axis-aligned box domain with an exterior reference point and a final time.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x0: Vec<f64>,
    t_final: f64,
}

impl Domain {
    /// The reference point must lie strictly outside the closed box (the box
    /// is its own convex hull).
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, x0: Vec<f64>, t_final: f64) -> Result<Self> {
        let n = lo.len();
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidDomain(format!(
                "spatial dimension must be 2 or 3, got {n}"
            )));
        }
        if hi.len() != n || x0.len() != n {
            return Err(Error::InvalidDomain(
                "box extents and x0 must share the spatial dimension".into(),
            ));
        }
        for axis in 0..n {
            if !(hi[axis] > lo[axis]) {
                return Err(Error::InvalidDomain(format!(
                    "axis {axis}: upper extent {} must exceed lower extent {}",
                    hi[axis], lo[axis]
                )));
            }
        }
        if !(t_final > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        let inside = (0..n).all(|a| x0[a] >= lo[a] && x0[a] <= hi[a]);
        if inside {
            return Err(Error::InvalidDomain(format!(
                "x0 = {x0:?} must lie strictly outside the closed box"
            )));
        }
        Ok(Self {
            n,
            lo,
            hi,
            x0,
            t_final,
        })
    }

    /// Default laboratory fixture: unit cube, x0 = (-2, 0.5, 0.5), T = 1.
    pub fn unit_cube_default() -> Self {
        Self::new(
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
            vec![-2.0, 0.5, 0.5],
            1.0,
        )
        .expect("default fixture is valid")
    }

    /// Planar variant of the default fixture for fast tests.
    pub fn unit_square_default() -> Self {
        Self::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![-2.0, 0.5], 1.0)
            .expect("default fixture is valid")
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
    pub fn t_final(&self) -> f64 {
        self.t_final
    }
}

/// Tensor space-time grid: `nx[a]` nodes per spatial axis and `nt` time steps
/// of size `dt = T/nt`, i.e. `nt + 1` stored time levels `t_k = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    domain: Domain,
    nx: Vec<usize>,
    nt: usize,
    dx: Vec<f64>,
    dt: f64,
    strides: Vec<usize>,
    n_space: usize,
}

impl SpaceTimeGrid {
    pub fn new(domain: Domain, nx: Vec<usize>, nt: usize) -> Result<Self> {
        let n = domain.dim();
        if nx.len() != n {
            return Err(Error::InvalidGrid(format!(
                "expected {n} per-axis node counts, got {}",
                nx.len()
            )));
        }
        for (axis, &count) in nx.iter().enumerate() {
            if count < 5 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: second-order stencils need at least 5 nodes, got {count}"
                )));
            }
        }
        if nt < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 time steps, got {nt}"
            )));
        }
        let dx: Vec<f64> = (0..n)
            .map(|a| (domain.hi[a] - domain.lo[a]) / (nx[a] - 1) as f64)
            .collect();
        let dt = domain.t_final / nt as f64;
        // Row-major strides: the last axis is contiguous.
        let mut strides = vec![1usize; n];
        for a in (0..n.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * nx[a + 1];
        }
        let n_space = nx.iter().product();
        Ok(Self {
            domain,
            nx,
            nt,
            dx,
            dt,
            strides,
            n_space,
        })
    }

    /// Isotropic node count per axis.
    pub fn uniform(domain: Domain, nx: usize, nt: usize) -> Result<Self> {
        let n = domain.dim();
        Self::new(domain, vec![nx; n], nt)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
    pub fn nx(&self) -> &[usize] {
        &self.nx
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn dx(&self) -> &[f64] {
        &self.dx
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    /// Number of stored time levels (`nt + 1`).
    pub fn n_levels(&self) -> usize {
        self.nt + 1
    }
    pub fn n_space(&self) -> usize {
        self.n_space
    }
    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.dt
    }

    pub fn space_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.strides)
            .map(|(&i, &s)| i * s)
            .sum()
    }

    /// Per-axis indices of a flattened space index.
    pub fn decode(&self, mut s: usize, out: &mut [usize]) {
        for a in 0..self.dim() {
            out[a] = s / self.strides[a];
            s %= self.strides[a];
        }
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.domain.lo[axis] + i as f64 * self.dx[axis]
    }

    pub fn node_coords(&self, s: usize, out: &mut [f64]) {
        let mut idx = [0usize; 3];
        self.decode(s, &mut idx[..self.dim()]);
        for a in 0..self.dim() {
            out[a] = self.coord(a, idx[a]);
        }
    }

    pub fn is_boundary(&self, s: usize) -> bool {
        let mut idx = [0usize; 3];
        self.decode(s, &mut idx[..self.dim()]);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] == self.nx[a] - 1)
    }

    /// Trapezoid quadrature weight of a space node (product over axes).
    pub fn space_weight(&self, s: usize) -> f64 {
        let mut idx = [0usize; 3];
        self.decode(s, &mut idx[..self.dim()]);
        let mut w = 1.0;
        for a in 0..self.dim() {
            let edge = idx[a] == 0 || idx[a] == self.nx[a] - 1;
            w *= self.dx[a] * if edge { 0.5 } else { 1.0 };
        }
        w
    }

    /// Trapezoid quadrature weight of a time level.
    pub fn time_weight(&self, level: usize) -> f64 {
        let edge = level == 0 || level == self.nt;
        self.dt * if edge { 0.5 } else { 1.0 }
    }

    /// One refinement level: doubled spatial resolution and doubled time
    /// steps, preserving the dt/dx ratio so second-order convergence shows a
    /// clean factor four.
    pub fn refined(&self) -> Result<Self> {
        let nx: Vec<usize> = self.nx.iter().map(|&k| 2 * k - 1).collect();
        Self::new(self.domain.clone(), nx, 2 * self.nt)
    }
}

/// Which end of an axis a face sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Min,
    Max,
}

impl Side {
    pub fn normal_sign(self) -> f64 {
        match self {
            Side::Min => -1.0,
            Side::Max => 1.0,
        }
    }
}

/// One (face, node) incidence carrying the surface quadrature weight for that
/// face and the classification tags evaluated with the face normal.
#[derive(Debug, Clone)]
pub struct Facet {
    pub space_idx: usize,
    pub axis: usize,
    pub side: Side,
    /// Trapezoid surface weight on the owning face.
    pub area_weight: f64,
    /// grad(phi) . nu at the node with this facet's normal.
    pub dphi_nu: f64,
    /// (x - x0) . nu <= 0.
    pub front: bool,
    /// grad(phi) . nu >= epsilon0.
    pub plus_eps: bool,
}

impl Facet {
    pub fn normal(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[self.axis] = self.side.normal_sign();
    }
}

/// Node-level tags derived from the owning face (axis precedence).
#[derive(Debug, Clone, Copy)]
pub struct NodeTag {
    pub axis: usize,
    pub side: Side,
    pub front: bool,
    pub plus_eps: bool,
}

/// Classified lateral boundary: facet list for quadrature plus per-node tags.
#[derive(Debug, Clone)]
pub struct BoundaryPartition {
    epsilon0: f64,
    facets: Vec<Facet>,
    /// Indexed by space index; `None` for interior nodes.
    node_tags: Vec<Option<NodeTag>>,
    boundary_nodes: Vec<usize>,
}

impl BoundaryPartition {
    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }
    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }
    pub fn node_tag(&self, s: usize) -> Option<&NodeTag> {
        self.node_tags[s].as_ref()
    }

    /// Total measured area (sum of facet weights), used by sanity tests.
    pub fn total_area(&self) -> f64 {
        self.facets.iter().map(|f| f.area_weight).sum()
    }
}

/// Gradient of the logarithmic weight dotted with an axis normal:
/// grad(phi) = (x - x0)/|x - x0|^2.
fn dphi_dot_normal(x: &[f64], x0: &[f64], axis: usize, sign: f64) -> f64 {
    let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
    sign * (x[axis] - x0[axis]) / r2
}

/// Tags every boundary node front/back by the sign of (x - x0) . nu and
/// splits the boundary into the epsilon sets by grad(phi) . nu >= epsilon0.
/// With epsilon0 = 0 the epsilon split coincides with the back/front split
/// because grad(phi) . nu carries the sign of (x - x0) . nu.
pub fn classify_boundary(grid: &SpaceTimeGrid, epsilon0: f64) -> Result<BoundaryPartition> {
    if !(epsilon0 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon0 must be nonnegative, got {epsilon0}"
        )));
    }
    let n = grid.dim();
    let x0 = grid.domain().x0();
    let mut facets = Vec::new();
    let mut node_tags: Vec<Option<NodeTag>> = vec![None; grid.n_space()];
    let mut boundary_nodes = Vec::new();

    let mut idx = [0usize; 3];
    let mut x = [0.0f64; 3];
    for s in 0..grid.n_space() {
        grid.decode(s, &mut idx[..n]);
        grid.node_coords(s, &mut x[..n]);
        let mut owner: Option<(usize, Side)> = None;
        for axis in 0..n {
            let side = if idx[axis] == 0 {
                Some(Side::Min)
            } else if idx[axis] == grid.nx()[axis] - 1 {
                Some(Side::Max)
            } else {
                None
            };
            let Some(side) = side else { continue };
            if owner.is_none() {
                owner = Some((axis, side));
            }
            // Trapezoid weight over the in-face axes.
            let mut w = 1.0;
            for b in 0..n {
                if b == axis {
                    continue;
                }
                let edge = idx[b] == 0 || idx[b] == grid.nx()[b] - 1;
                w *= grid.dx()[b] * if edge { 0.5 } else { 1.0 };
            }
            let sign = side.normal_sign();
            let dphi_nu = dphi_dot_normal(&x[..n], x0, axis, sign);
            let xnu = sign * (x[axis] - x0[axis]);
            facets.push(Facet {
                space_idx: s,
                axis,
                side,
                area_weight: w,
                dphi_nu,
                front: xnu <= 0.0,
                plus_eps: dphi_nu >= epsilon0,
            });
        }
        if let Some((axis, side)) = owner {
            let sign = side.normal_sign();
            let dphi_nu = dphi_dot_normal(&x[..n], x0, axis, sign);
            let xnu = sign * (x[axis] - x0[axis]);
            node_tags[s] = Some(NodeTag {
                axis,
                side,
                front: xnu <= 0.0,
                plus_eps: dphi_nu >= epsilon0,
            });
            boundary_nodes.push(s);
        }
    }
    Ok(BoundaryPartition {
        epsilon0,
        facets,
        node_tags,
        boundary_nodes,
    })
}

/// Default epsilon0: 5% of the smallest positive grad(phi) . nu over facets,
/// which keeps the plus set equal to the back set on the default fixture.
pub fn default_epsilon0(grid: &SpaceTimeGrid) -> Result<f64> {
    let partition = classify_boundary(grid, 0.0)?;
    let min_pos = partition
        .facets()
        .iter()
        .map(|f| f.dphi_nu)
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min_pos.is_finite() {
        return Err(Error::InvalidDomain(
            "no facet with positive grad(phi) . nu; back set is empty".into(),
        ));
    }
    Ok(0.05 * min_pos)
}

// ---------------------------------------------------------------------------
// Discrete differential operators (second order, one-sided at boundaries).
// ---------------------------------------------------------------------------

/// First derivative along `axis` at per-axis index `i`, sampled through
/// `fetch` (grid-index offsets along the axis).
#[inline]
fn d1_line<T: Scalar>(fetch: impl Fn(isize) -> T, i: usize, len: usize, dx: f64) -> T {
    let inv = 1.0 / (2.0 * dx);
    if i == 0 {
        (fetch(0).scale(-3.0) + fetch(1).scale(4.0) - fetch(2)).scale(inv)
    } else if i == len - 1 {
        (fetch(0).scale(3.0) - fetch(-1).scale(4.0) + fetch(-2)).scale(inv)
    } else {
        (fetch(1) - fetch(-1)).scale(inv)
    }
}

/// Second derivative along one axis; one-sided four-point closure keeps
/// second order at the ends.
#[inline]
fn d2_line<T: Scalar>(fetch: impl Fn(isize) -> T, i: usize, len: usize, dx: f64) -> T {
    let inv = 1.0 / (dx * dx);
    if i == 0 {
        (fetch(0).scale(2.0) - fetch(1).scale(5.0) + fetch(2).scale(4.0) - fetch(3)).scale(inv)
    } else if i == len - 1 {
        (fetch(0).scale(2.0) - fetch(-1).scale(5.0) + fetch(-2).scale(4.0) - fetch(-3)).scale(inv)
    } else {
        (fetch(1) - fetch(0).scale(2.0) + fetch(-1)).scale(inv)
    }
}

/// Partial derivative along a spatial axis of one time level, written into
/// `out`.
pub(crate) fn diff_axis_level<T: Scalar>(
    grid: &SpaceTimeGrid,
    level: &[T],
    axis: usize,
    second: bool,
    out: &mut [T],
) {
    let n = grid.dim();
    let stride = grid.strides[axis] as isize;
    let len = grid.nx()[axis];
    let dx = grid.dx()[axis];
    let mut idx = [0usize; 3];
    for s in 0..grid.n_space() {
        grid.decode(s, &mut idx[..n]);
        let i = idx[axis];
        let fetch = |off: isize| level[(s as isize + off * stride) as usize];
        out[s] = if second {
            d2_line(fetch, i, len, dx)
        } else {
            d1_line(fetch, i, len, dx)
        };
    }
}

/// Gradient: central differences interior, one-sided second order at the
/// boundary; linear in the input.
pub fn grad<T: Scalar>(field: &ScalarField<T>) -> VectorField<T> {
    let grid = field.grid_arc();
    let n = grid.dim();
    let mut components = Vec::with_capacity(n);
    for axis in 0..n {
        let mut values = vec![T::ZERO; field.values().len()];
        for level in 0..grid.n_levels() {
            let (src, dst) = (field.level(level), level_slice_mut(&mut values, &grid, level));
            diff_axis_level(&grid, src, axis, false, dst);
        }
        components.push(ScalarField::from_values(grid.clone(), values).expect("shape by construction"));
    }
    VectorField::new(components).expect("components share the grid")
}

fn level_slice_mut<'a, T>(values: &'a mut [T], grid: &SpaceTimeGrid, level: usize) -> &'a mut [T] {
    let n = grid.n_space();
    &mut values[level * n..(level + 1) * n]
}

/// Laplacian with the same stencil orders as [`grad`].
pub fn laplacian<T: Scalar>(field: &ScalarField<T>) -> ScalarField<T> {
    let grid = field.grid_arc();
    let n = grid.dim();
    let mut values = vec![T::ZERO; field.values().len()];
    let mut tmp = vec![T::ZERO; grid.n_space()];
    for level in 0..grid.n_levels() {
        let src = field.level(level);
        let dst = level_slice_mut(&mut values, &grid, level);
        for axis in 0..n {
            diff_axis_level(&grid, src, axis, true, &mut tmp);
            for (d, t) in dst.iter_mut().zip(&tmp) {
                *d += *t;
            }
        }
    }
    ScalarField::from_values(grid, values).expect("shape by construction")
}

/// Divergence of a vector field.
pub fn divergence<T: Scalar>(field: &VectorField<T>) -> ScalarField<T> {
    let grid = field.grid_arc();
    let n = grid.dim();
    assert_eq!(field.arity(), n, "divergence needs one component per axis");
    let mut values = vec![T::ZERO; grid.n_levels() * grid.n_space()];
    let mut tmp = vec![T::ZERO; grid.n_space()];
    for level in 0..grid.n_levels() {
        let dst = level_slice_mut(&mut values, &grid, level);
        for axis in 0..n {
            diff_axis_level(&grid, field.component(axis).level(level), axis, false, &mut tmp);
            for (d, t) in dst.iter_mut().zip(&tmp) {
                *d += *t;
            }
        }
    }
    ScalarField::from_values(grid, values).expect("shape by construction")
}

/// Time derivative with the same stencil family along the level axis.
pub fn time_derivative<T: Scalar>(field: &ScalarField<T>) -> ScalarField<T> {
    let grid = field.grid_arc();
    let n_levels = grid.n_levels();
    let n_space = grid.n_space();
    let dt = grid.dt();
    let mut values = vec![T::ZERO; field.values().len()];
    let src = field.values();
    for level in 0..n_levels {
        for s in 0..n_space {
            let fetch = |off: isize| src[((level as isize + off) as usize) * n_space + s];
            values[level * n_space + s] = d1_line(fetch, level, n_levels, dt);
        }
    }
    ScalarField::from_values(grid, values).expect("shape by construction")
}

/// Outward normal derivative on boundary facets via a one-sided second-order
/// stencil along the facet normal.
pub fn normal_derivative<T: Scalar>(
    field: &ScalarField<T>,
    partition: &Arc<BoundaryPartition>,
) -> TraceField<T> {
    let grid = field.grid_arc();
    let n_facets = partition.facets().len();
    let mut values = vec![T::ZERO; grid.n_levels() * n_facets];
    for level in 0..grid.n_levels() {
        let src = field.level(level);
        for (fi, facet) in partition.facets().iter().enumerate() {
            let stride = grid.strides[facet.axis] as isize;
            let dx = grid.dx()[facet.axis];
            let s = facet.space_idx as isize;
            // Interior-pointing offset.
            let inward = match facet.side {
                Side::Min => stride,
                Side::Max => -stride,
            };
            let v = (src[s as usize].scale(3.0) - src[(s + inward) as usize].scale(4.0)
                + src[(s + 2 * inward) as usize])
            .scale(1.0 / (2.0 * dx));
            values[level * n_facets + fi] = v;
        }
    }
    TraceField::new(grid, partition.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;

    fn cube_grid(nx: usize, nt: usize) -> Arc<SpaceTimeGrid> {
        Arc::new(SpaceTimeGrid::uniform(Domain::unit_cube_default(), nx, nt).unwrap())
    }

    #[test]
    fn domain_rejects_interior_x0() {
        let err = Domain::new(
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
            vec![0.5, 0.5, 0.5],
            1.0,
        );
        assert!(err.is_err());
        // On the closed boundary counts as inside.
        let err = Domain::new(
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 0.5, 0.5],
            1.0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn domain_rejects_bad_extents_and_time() {
        assert!(Domain::new(vec![0.0, 0.0], vec![0.0, 1.0], vec![-2.0, 0.5], 1.0).is_err());
        assert!(Domain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![-2.0, 0.5], 0.0).is_err());
    }

    #[test]
    fn front_set_is_the_near_face_on_the_default_cube() {
        let grid = cube_grid(7, 4);
        let partition = classify_boundary(&grid, 0.0).unwrap();
        let mut idx = [0usize; 3];
        for facet in partition.facets() {
            grid.decode(facet.space_idx, &mut idx);
            let on_near_face = facet.axis == 0 && facet.side == Side::Min;
            assert_eq!(
                facet.front, on_near_face,
                "facet at {idx:?} axis {} side {:?}",
                facet.axis, facet.side
            );
            // With epsilon0 = 0 the epsilon split matches back/front.
            assert_eq!(facet.plus_eps, !facet.front);
        }
        // Examples from the face sign computations: {x1=0} front, {x1=1} and
        // {x2=0} back.
        let x = |s: usize| {
            let mut c = [0.0; 3];
            grid.node_coords(s, &mut c);
            c
        };
        for facet in partition.facets() {
            let c = x(facet.space_idx);
            if facet.axis == 0 && facet.side == Side::Min {
                assert!((c[0] - 0.0).abs() < 1e-14 && facet.front);
            }
            if facet.axis == 0 && facet.side == Side::Max {
                assert!((c[0] - 1.0).abs() < 1e-14 && !facet.front);
            }
            if facet.axis == 1 && facet.side == Side::Min {
                assert!(!facet.front, "(x - x0) . nu = 0.5 > 0 on {{x2=0}}");
            }
        }
    }

    #[test]
    fn epsilon_sets_nest_between_front_and_back() {
        let grid = cube_grid(9, 4);
        let eps0 = default_epsilon0(&grid).unwrap();
        assert!(eps0 > 0.0);
        let partition = classify_boundary(&grid, eps0).unwrap();
        for facet in partition.facets() {
            if facet.plus_eps {
                assert!(!facet.front, "plus set must sit inside the back set");
            }
            if facet.front {
                assert!(!facet.plus_eps, "front set must sit inside the minus set");
            }
        }
    }

    #[test]
    fn classify_rejects_negative_epsilon() {
        let grid = cube_grid(5, 2);
        assert!(classify_boundary(&grid, -0.1).is_err());
    }

    #[test]
    fn boundary_area_of_unit_cube() {
        let grid = cube_grid(9, 2);
        let partition = classify_boundary(&grid, 0.0).unwrap();
        assert!((partition.total_area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_exact_on_linear_and_quadratic_fields() {
        let grid = cube_grid(7, 3);
        let x1 = ScalarField::from_fn(grid.clone(), |_, x| x[0]);
        let g = grad(&x1);
        for a in 0..3 {
            for &v in g.component(a).values() {
                let expect = if a == 0 { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
        let sq = ScalarField::from_fn(grid.clone(), |_, x| x[0] * x[0]);
        let g = grad(&sq);
        let mut c = [0.0; 3];
        for s in 0..grid.n_space() {
            grid.node_coords(s, &mut c);
            assert!((g.component(0).values()[s] - 2.0 * c[0]).abs() < 1e-11);
        }
    }

    #[test]
    fn laplacian_and_divergence_exact_on_polynomials() {
        let grid = cube_grid(7, 3);
        let f = ScalarField::from_fn(grid.clone(), |_, x| x[0] * x[0] + x[1] * x[1]);
        let lap = laplacian(&f);
        for &v in lap.values() {
            assert!((v - 4.0).abs() < 1e-10);
        }
        let vf = VectorField::from_fns(
            grid.clone(),
            &[&|_, x: &[f64]| x[0], &|_, x: &[f64]| x[1], &|_, x: &[f64]| x[2]],
        );
        let div = divergence(&vf);
        for &v in div.values() {
            assert!((v - 3.0).abs() < 1e-11);
        }
    }

    #[test]
    fn normal_derivative_exact_on_linear_field() {
        let grid = cube_grid(6, 2);
        let partition = Arc::new(classify_boundary(&grid, 0.0).unwrap());
        let f = ScalarField::from_fn(grid.clone(), |_, x| x[0]);
        let tr = normal_derivative(&f, &partition);
        for (fi, facet) in partition.facets().iter().enumerate() {
            let expect = match (facet.axis, facet.side) {
                (0, Side::Max) => 1.0,
                (0, Side::Min) => -1.0,
                _ => 0.0,
            };
            assert!(
                (tr.values()[fi] - expect).abs() < 1e-12,
                "facet {fi}: got {}, expected {expect}",
                tr.values()[fi]
            );
        }
    }

    #[test]
    fn gradient_second_order_on_smooth_field() {
        let err = |nx: usize| {
            let grid = cube_grid(nx, 2);
            let f = ScalarField::from_fn(grid.clone(), |_, x| x[0].sin());
            let g = grad(&f);
            let mut c = [0.0; 3];
            let mut worst: f64 = 0.0;
            for s in 0..grid.n_space() {
                grid.node_coords(s, &mut c);
                worst = worst.max((g.component(0).values()[s] - c[0].cos()).abs());
            }
            worst
        };
        let coarse = err(9);
        let fine = err(17);
        let order = (coarse / fine).log2();
        println!("grad order on sin(x1): {order:.2}");
        assert!(order > 1.9, "observed order {order:.2}");
    }

    #[test]
    fn operators_are_linear() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let grid = cube_grid(6, 3);
        let u = ScalarField::from_fn(grid.clone(), |t, x| (x[0] + t) * x[1].sin());
        let v = ScalarField::from_fn(grid.clone(), |t, x| (x[2] - t) * (x[0] * 3.0).cos());
        let (alpha, beta): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let combo = u.linear_combination(alpha, &v, beta).unwrap();
        let lhs = laplacian(&combo);
        let rhs = laplacian(&u)
            .linear_combination(alpha, &laplacian(&v), beta)
            .unwrap();
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        let dt_lhs = time_derivative(&combo);
        let dt_rhs = time_derivative(&u)
            .linear_combination(alpha, &time_derivative(&v), beta)
            .unwrap();
        for (a, b) in dt_lhs.values().iter().zip(dt_rhs.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
