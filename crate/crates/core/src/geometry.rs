//! Planar points and the triangle geometry shared by the mesh and assembly code.

use core::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    /// Rotate by -90 degrees: the right-hand normal of a direction.
    pub fn perp_right(self) -> Point {
        Point::new(self.y, -self.x)
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Signed area, positive for counter-clockwise vertex order.
pub fn signed_area(tri: &[Point; 3]) -> f64 {
    0.5 * (tri[1] - tri[0]).cross(tri[2] - tri[0])
}

/// Arithmetic mean of the vertices. Degenerate triangles are rejected.
pub fn centroid(tri: &[Point; 3]) -> Result<Point> {
    let area = signed_area(tri);
    let scale = (tri[1] - tri[0]).norm().max((tri[2] - tri[0]).norm());
    if !(area.abs() > 1e-14 * scale * scale) {
        return Err(Error::DegenerateTriangle(area));
    }
    Ok(Point::new((tri[0].x + tri[1].x + tri[2].x) / 3.0, (tri[0].y + tri[1].y + tri[2].y) / 3.0))
}

/// Affine data of a non-degenerate triangle: barycentric coordinates and
/// their (constant) gradients.
#[derive(Debug, Clone, Copy)]
pub struct TriangleMap {
    pub vertices: [Point; 3],
    pub area: f64,
    pub grad_bary: [Point; 3],
}

impl TriangleMap {
    pub fn new(vertices: [Point; 3]) -> Self {
        let area = signed_area(&vertices);
        let inv = 1.0 / (2.0 * area);
        let mut grad_bary = [Point::default(); 3];
        for (i, g) in grad_bary.iter_mut().enumerate() {
            let a = vertices[(i + 1) % 3];
            let b = vertices[(i + 2) % 3];
            // gradient of lambda_i is the inward normal of the opposite edge
            // scaled by 1 / height.
            *g = Point::new(a.y - b.y, b.x - a.x) * inv;
        }
        Self { vertices, area: area.abs(), grad_bary }
    }

    pub fn point(&self, bary: [f64; 3]) -> Point {
        self.vertices[0] * bary[0] + self.vertices[1] * bary[1] + self.vertices[2] * bary[2]
    }

    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let mut l = [0.0; 3];
        for i in 0..3 {
            l[i] = 1.0 / 3.0 + self.grad_bary[i].dot(p - self.centroid());
        }
        l
    }

    pub fn centroid(&self) -> Point {
        (self.vertices[0] + self.vertices[1] + self.vertices[2]) * (1.0 / 3.0)
    }

    /// Outward unit normal on the edge opposite local vertex `i`.
    pub fn outward_normal(&self, i: usize) -> Point {
        let g = self.grad_bary[i];
        g * (-1.0 / g.norm())
    }
}
