//! Structured node layouts over a [`Shape`] and node-valued fields.
//!
//! Nodes are stored first-coordinate-major: `idx = i * inner + j`, where
//! `inner` is `m_theta` on polar grids, `m_y + 1` on cartesian grids and 1 on
//! radial grids.
//!
//! On a disc the first radial node sits at half a spacing from the pole,
//! `r_i = (i + 1/2) h` with `h = r0 / (m + 1/2)`, so that `r_m = r0` is the
//! boundary node. Annuli use `r_i = r_in + i h`.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::field::SmoothField;
use crate::geometry::{LeafPoint, Shape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid size {0} is below the minimum of {1}")]
    TooCoarse(usize, usize),
    #[error("polar grids need an even number of angular nodes, got {0}")]
    OddAngular(usize),
    #[error("{kind} grids do not support {shape}")]
    UnsupportedShape { kind: &'static str, shape: &'static str },
    #[error("leaf dimension {0} is not supported by this grid")]
    Dimension(usize),
    #[error("field has {got} values, grid has {expected} nodes")]
    Length { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Radial,
    Polar,
    Cartesian,
}

impl GridKind {
    pub fn name(self) -> &'static str {
        match self {
            GridKind::Radial => "radial",
            GridKind::Polar => "polar",
            GridKind::Cartesian => "cartesian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    kind: GridKind,
    shape: Shape,
    dim: usize,
    first: Vec<f64>,
    second: Vec<f64>,
    h_first: f64,
    h_second: f64,
}

fn shape_name(shape: &Shape) -> &'static str {
    match shape {
        Shape::Disc { .. } => "discs",
        Shape::Annulus { .. } => "annuli",
        Shape::Rectangle { .. } => "rectangles",
    }
}

fn radial_nodes(shape: &Shape, m: usize, kind: GridKind) -> Result<(Vec<f64>, f64), GridError> {
    match *shape {
        Shape::Disc { r0 } => {
            let h = r0 / (m as f64 + 0.5);
            let mut r: Vec<f64> = (0..=m).map(|i| (i as f64 + 0.5) * h).collect();
            r[m] = r0;
            Ok((r, h))
        }
        Shape::Annulus { r_in, r_out } => {
            let h = (r_out - r_in) / m as f64;
            let mut r: Vec<f64> = (0..=m).map(|i| r_in + i as f64 * h).collect();
            r[m] = r_out;
            Ok((r, h))
        }
        Shape::Rectangle { .. } => Err(GridError::UnsupportedShape { kind: kind.name(), shape: shape_name(shape) }),
    }
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    /// Radially symmetric grid for a leaf of dimension `dim`.
    pub fn radial(shape: Shape, dim: usize, m: usize) -> Result<Self, GridError> {
        if m < Self::MIN_CELLS {
            return Err(GridError::TooCoarse(m, Self::MIN_CELLS));
        }
        if dim < 2 {
            return Err(GridError::Dimension(dim));
        }
        let (first, h) = radial_nodes(&shape, m, GridKind::Radial)?;
        Ok(Grid { kind: GridKind::Radial, shape, dim, first, second: vec![0.0], h_first: h, h_second: 0.0 })
    }

    /// `(m_r + 1) x m_theta` polar grid on a two-dimensional leaf.
    pub fn polar(shape: Shape, m_r: usize, m_theta: usize) -> Result<Self, GridError> {
        if m_r < Self::MIN_CELLS {
            return Err(GridError::TooCoarse(m_r, Self::MIN_CELLS));
        }
        if m_theta < 8 {
            return Err(GridError::TooCoarse(m_theta, 8));
        }
        if m_theta % 2 == 1 {
            return Err(GridError::OddAngular(m_theta));
        }
        let (first, h) = radial_nodes(&shape, m_r, GridKind::Polar)?;
        let dt = 2.0 * PI / m_theta as f64;
        let second = (0..m_theta).map(|j| j as f64 * dt).collect();
        Ok(Grid { kind: GridKind::Polar, shape, dim: 2, first, second, h_first: h, h_second: dt })
    }

    /// `(m_x + 1) x (m_y + 1)` node grid on a rectangle of the flat leaf.
    pub fn cartesian(shape: Shape, m_x: usize, m_y: usize) -> Result<Self, GridError> {
        let Shape::Rectangle { x0, x1, y0, y1 } = shape else {
            return Err(GridError::UnsupportedShape { kind: "cartesian", shape: shape_name(&shape) });
        };
        if m_x.min(m_y) < Self::MIN_CELLS {
            return Err(GridError::TooCoarse(m_x.min(m_y), Self::MIN_CELLS));
        }
        let (hx, hy) = ((x1 - x0) / m_x as f64, (y1 - y0) / m_y as f64);
        let mut first: Vec<f64> = (0..=m_x).map(|i| x0 + i as f64 * hx).collect();
        let mut second: Vec<f64> = (0..=m_y).map(|j| y0 + j as f64 * hy).collect();
        first[m_x] = x1;
        second[m_y] = y1;
        Ok(Grid { kind: GridKind::Cartesian, shape, dim: 2, first, second, h_first: hx, h_second: hy })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether the first radial node is staggered off the pole.
    pub fn has_pole(&self) -> bool {
        matches!(self.shape, Shape::Disc { .. })
    }

    pub fn n_first(&self) -> usize {
        self.first.len()
    }

    pub fn n_second(&self) -> usize {
        self.second.len()
    }

    pub fn len(&self) -> usize {
        self.first.len() * self.second.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell counts `(m_r or m_x, m_theta or m_y)`; the second entry is 0 on radial grids.
    pub fn cells(&self) -> (usize, usize) {
        let m = self.first.len() - 1;
        match self.kind {
            GridKind::Radial => (m, 0),
            GridKind::Polar => (m, self.second.len()),
            GridKind::Cartesian => (m, self.second.len() - 1),
        }
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.h_first, self.h_second)
    }

    /// Largest physical spacing, the `h` of convergence tables.
    pub fn h(&self) -> f64 {
        match self.kind {
            GridKind::Radial => self.h_first,
            GridKind::Polar => self.h_first.max(self.h_second * self.first[self.first.len() - 1]),
            GridKind::Cartesian => self.h_first.max(self.h_second),
        }
    }

    pub fn first_coords(&self) -> &[f64] {
        &self.first
    }

    pub fn second_coords(&self) -> &[f64] {
        &self.second
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.second.len() + j
    }

    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.second.len(), idx % self.second.len())
    }

    pub fn point(&self, idx: usize) -> LeafPoint {
        let (i, j) = self.split(idx);
        LeafPoint::new(self.first[i], self.second[j])
    }

    pub fn points(&self) -> impl Iterator<Item = LeafPoint> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.split(idx);
        let last = self.first.len() - 1;
        match self.kind {
            GridKind::Radial | GridKind::Polar => i == last || (!self.has_pole() && i == 0),
            GridKind::Cartesian => i == 0 || i == last || j == 0 || j == self.second.len() - 1,
        }
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_boundary(k)).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.is_boundary(k)).collect()
    }

    /// Values of `g` at every node.
    pub fn sample(&self, g: &dyn SmoothField) -> Vec<f64> {
        self.points().map(|p| g.value(p)).collect()
    }
}

/// Physical meaning of a [`ScalarField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldTag {
    Height,
    MeanCurvature,
    Slope,
    Residual,
    Other,
}

/// One value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    tag: FieldTag,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, tag: FieldTag) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length { got: values.len(), expected: grid.len() });
        }
        Ok(ScalarField { grid, values, tag })
    }

    pub fn constant(grid: Arc<Grid>, c: f64, tag: FieldTag) -> Self {
        let values = vec![c; grid.len()];
        ScalarField { grid, values, tag }
    }

    pub fn sample(grid: Arc<Grid>, g: &dyn SmoothField, tag: FieldTag) -> Self {
        let values = grid.sample(g);
        ScalarField { grid, values, tag }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other|` over all nodes.
    pub fn max_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_nodes_are_staggered() {
        let g = Grid::polar(Shape::disc(1.0).unwrap(), 8, 16).unwrap();
        let (h, dt) = g.spacing();
        assert!((g.first_coords()[0] - 0.5 * h).abs() < 1e-15);
        assert_eq!(*g.first_coords().last().unwrap(), 1.0);
        assert!((dt - PI / 8.0).abs() < 1e-15);
        assert_eq!(g.len(), 9 * 16);
        assert_eq!(g.boundary_nodes().len(), 16);
        assert!(g.first_coords().windows(2).all(|w| (w[1] - w[0] - h).abs() < 1e-14));
    }

    #[test]
    fn annulus_has_two_boundary_rings() {
        let g = Grid::radial(Shape::annulus(0.5, 1.5).unwrap(), 3, 10).unwrap();
        assert_eq!(g.boundary_nodes(), vec![0, 10]);
        assert_eq!(g.interior_nodes().len(), 9);
    }

    #[test]
    fn cartesian_boundary_is_the_frame() {
        let g = Grid::cartesian(Shape::rectangle(0.0, 1.0, 0.0, 2.0).unwrap(), 4, 8).unwrap();
        assert_eq!(g.len(), 5 * 9);
        assert_eq!(g.interior_nodes().len(), 3 * 7);
        let p = g.point(g.index(4, 8));
        assert_eq!((p.a, p.b), (1.0, 2.0));
    }

    #[test]
    fn rejects_bad_sizes() {
        let disc = Shape::disc(1.0).unwrap();
        assert!(Grid::radial(disc, 2, 3).is_err());
        assert!(Grid::polar(disc, 8, 9).is_err());
        assert!(Grid::polar(disc, 8, 6).is_err());
        assert!(Grid::cartesian(disc, 8, 8).is_err());
        assert!(Grid::radial(Shape::rectangle(0.0, 1.0, 0.0, 1.0).unwrap(), 2, 8).is_err());
    }

    #[test]
    fn field_length_is_checked() {
        let g = Arc::new(Grid::radial(Shape::disc(1.0).unwrap(), 2, 8).unwrap());
        assert!(ScalarField::new(g.clone(), vec![0.0; 3], FieldTag::Height).is_err());
        let f = ScalarField::constant(g, 2.0, FieldTag::Height);
        assert_eq!(f.max_abs(), 2.0);
    }
}
