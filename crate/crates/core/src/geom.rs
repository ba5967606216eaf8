//! Small fixed-size vector algebra and tetrahedron measures.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("quality of an empty element set is undefined")]
    EmptySet,
    #[error("tetrahedron is degenerate (zero volume)")]
    DegenerateTet,
}

/// A 3-vector / point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    #[inline]
    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm2(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm2().sqrt()
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    #[inline]
    pub fn dist2(self, o: Self) -> T {
        (self - o).norm2()
    }

    #[inline]
    pub fn min_comp(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max_comp(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            U::from(self.x).unwrap_or_else(U::nan),
            U::from(self.y).unwrap_or_else(U::nan),
            U::from(self.z).unwrap_or_else(U::nan),
        )
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T> IndexMut<usize> for Vec3<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn empty() -> Self {
        Self {
            min: Vec3::splat(T::infinity()),
            max: Vec3::splat(T::neg_infinity()),
        }
    }

    pub fn from_points<'a, I>(pts: I) -> Self
    where
        I: IntoIterator<Item = &'a Vec3<T>>,
    {
        let mut b = Self::empty();
        for p in pts {
            b.grow(*p);
        }
        b
    }

    #[inline]
    pub fn grow(&mut self, p: Vec3<T>) {
        self.min = self.min.min_comp(p);
        self.max = self.max.max_comp(p);
    }

    #[inline]
    pub fn merge(&self, o: &Self) -> Self {
        Self {
            min: self.min.min_comp(o.min),
            max: self.max.max_comp(o.max),
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn diagonal(&self) -> T {
        if self.is_empty() {
            T::zero()
        } else {
            (self.max - self.min).norm()
        }
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    #[inline]
    pub fn contains(&self, p: Vec3<T>, tol: T) -> bool {
        p.x >= self.min.x - tol
            && p.x <= self.max.x + tol
            && p.y >= self.min.y - tol
            && p.y <= self.max.y + tol
            && p.z >= self.min.z - tol
            && p.z <= self.max.z + tol
    }

    #[inline]
    pub fn overlaps(&self, o: &Self, tol: T) -> bool {
        self.min.x <= o.max.x + tol
            && o.min.x <= self.max.x + tol
            && self.min.y <= o.max.y + tol
            && o.min.y <= self.max.y + tol
            && self.min.z <= o.max.z + tol
            && o.min.z <= self.max.z + tol
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn dist2(&self, p: Vec3<T>) -> T {
        let mut d = T::zero();
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                T::zero()
            };
            d = d + v * v;
        }
        d
    }
}

/// Local vertex indices of the six edges of a tetrahedron.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Faces of a positively oriented tetrahedron, face `i` opposite vertex `i`,
/// ordered so the right-hand normal points out of the tetrahedron.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

/// Signed volume: one sixth of the triple product of the edge vectors from `a`.
#[inline]
pub fn tet_volume<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>, d: Vec3<T>) -> T {
    (b - a).dot((c - a).cross(d - a)) / T::lit(6.0)
}

#[inline]
pub fn tet_volume_of<T: Real>(t: &[Vec3<T>; 4]) -> T {
    tet_volume(t[0], t[1], t[2], t[3])
}

pub fn centroid<T: Real>(t: &[Vec3<T>; 4]) -> Vec3<T> {
    (t[0] + t[1] + t[2] + t[3]) * T::lit(0.25)
}

pub fn sum_sq_edges<T: Real>(t: &[Vec3<T>; 4]) -> T {
    TET_EDGES
        .iter()
        .fold(T::zero(), |acc, e| acc + t[e[0]].dist2(t[e[1]]))
}

pub fn longest_edge<T: Real>(t: &[Vec3<T>; 4]) -> T {
    TET_EDGES
        .iter()
        .fold(T::zero(), |acc, e| acc.max(t[e[0]].dist(t[e[1]])))
}

pub fn shortest_edge<T: Real>(t: &[Vec3<T>; 4]) -> T {
    TET_EDGES
        .iter()
        .fold(T::infinity(), |acc, e| acc.min(t[e[0]].dist(t[e[1]])))
}

/// Shape quality `72 sqrt(3) |K| / (sum of squared edge lengths)^(3/2)`.
///
/// Equals one for a regular tetrahedron and zero for a flat one. Invariant
/// under scaling, rigid motions and vertex permutations.
pub fn element_quality<T: Real>(t: &[Vec3<T>; 4]) -> T {
    let s = sum_sq_edges(t);
    if !(s > T::zero()) {
        return T::zero();
    }
    let vol = tet_volume_of(t).abs();
    let q = T::lit(72.0) * T::lit(3.0).sqrt() * vol / (s * s.sqrt());
    if q.is_finite() {
        q.min(T::one()).max(T::zero())
    } else {
        T::zero()
    }
}

/// Quality of an element set: the minimum element quality.
pub fn set_quality<'a, T, I>(tets: I) -> Result<T, GeomError>
where
    T: Real,
    I: IntoIterator<Item = &'a [Vec3<T>; 4]>,
{
    let mut it = tets.into_iter().peekable();
    if it.peek().is_none() {
        return Err(GeomError::EmptySet);
    }
    Ok(it.fold(T::infinity(), |m, t| m.min(element_quality(t))))
}

/// Circumscribed sphere `(center, radius)`.
pub fn circumsphere<T: Real>(t: &[Vec3<T>; 4]) -> Result<(Vec3<T>, T), GeomError> {
    let u = t[1] - t[0];
    let v = t[2] - t[0];
    let w = t[3] - t[0];
    let det = u.dot(v.cross(w));
    let scale = u.norm() * v.norm() * w.norm();
    if !(det.abs() > T::epsilon() * T::lit(16.0) * scale) {
        return Err(GeomError::DegenerateTet);
    }
    let num = v.cross(w) * u.norm2() + w.cross(u) * v.norm2() + u.cross(v) * w.norm2();
    let off = num / (T::lit(2.0) * det);
    Ok((t[0] + off, off.norm()))
}

/// Circumradius, or infinity for a degenerate tetrahedron.
pub fn circumradius<T: Real>(t: &[Vec3<T>; 4]) -> T {
    circumsphere(t).map(|(_, r)| r).unwrap_or_else(|_| T::infinity())
}

/// Barycentric coordinates of `p` in `t`. Sum to one; all non-negative iff
/// `p` lies in the closed tetrahedron. `None` for a degenerate tetrahedron.
pub fn barycentric<T: Real>(t: &[Vec3<T>; 4], p: Vec3<T>) -> Option<[T; 4]> {
    let vol = tet_volume_of(t);
    if vol == T::zero() || !vol.is_finite() {
        return None;
    }
    let w1 = tet_volume(t[0], p, t[2], t[3]) / vol;
    let w2 = tet_volume(t[0], t[1], p, t[3]) / vol;
    let w3 = tet_volume(t[0], t[1], t[2], p) / vol;
    let w0 = T::one() - w1 - w2 - w3;
    Some([w0, w1, w2, w3])
}

/// Gradient of the piecewise-linear interpolant on `t` of vector nodal values
/// `vals`: returns `G` with `G[i][j] = d vals_i / d x_j`.
pub fn p1_gradient<T: Real>(t: &[Vec3<T>; 4], vals: &[Vec3<T>; 4]) -> Option<[[T; 3]; 3]> {
    let grads = p1_shape_gradients(t)?;
    let mut g = [[T::zero(); 3]; 3];
    for (a, ga) in grads.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = g[i][j] + vals[a][i] * ga[j];
            }
        }
    }
    Some(g)
}

/// Gradients of the four barycentric shape functions on `t`.
pub fn p1_shape_gradients<T: Real>(t: &[Vec3<T>; 4]) -> Option<[Vec3<T>; 4]> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let e3 = t[3] - t[0];
    let det = e1.dot(e2.cross(e3));
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    // Rows of the inverse Jacobian.
    let g1 = e2.cross(e3) / det;
    let g2 = e3.cross(e1) / det;
    let g3 = e1.cross(e2) / det;
    let g0 = -(g1 + g2 + g3);
    Some([g0, g1, g2, g3])
}

/// Closed-hull intersection test between two tetrahedra by the separating
/// axis theorem. Touching (shared vertex, edge or face) counts as
/// intersecting. `tol` is the gap a separating axis must exceed.
pub fn tets_intersect<T: Real>(a: &[Vec3<T>; 4], b: &[Vec3<T>; 4], tol: T) -> bool {
    let separated = |axis: Vec3<T>| -> bool {
        let n2 = axis.norm2();
        if !(n2 > T::epsilon() * T::epsilon()) {
            return false;
        }
        let axis = axis / n2.sqrt();
        let (mut amin, mut amax) = (T::infinity(), T::neg_infinity());
        for p in a {
            let d = p.dot(axis);
            amin = amin.min(d);
            amax = amax.max(d);
        }
        let (mut bmin, mut bmax) = (T::infinity(), T::neg_infinity());
        for p in b {
            let d = p.dot(axis);
            bmin = bmin.min(d);
            bmax = bmax.max(d);
        }
        amax + tol < bmin || bmax + tol < amin
    };
    for t in [a, b] {
        for f in TET_FACES {
            let n = (t[f[1]] - t[f[0]]).cross(t[f[2]] - t[f[0]]);
            if separated(n) {
                return false;
            }
        }
    }
    for ea in TET_EDGES {
        let da = a[ea[1]] - a[ea[0]];
        for eb in TET_EDGES {
            let db = b[eb[1]] - b[eb[0]];
            if separated(da.cross(db)) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn corner() -> [Vec3<f64>; 4] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ]
    }

    pub(crate) fn regular(edge: f64) -> [Vec3<f64>; 4] {
        let s = edge / (2.0 * 2f64.sqrt());
        [
            Vec3::new(s, s, s),
            Vec3::new(s, -s, -s),
            Vec3::new(-s, s, -s),
            Vec3::new(-s, -s, s),
        ]
    }

    #[test]
    fn corner_volume_and_antisymmetry() {
        let t = corner();
        assert_relative_eq!(tet_volume_of(&t), 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(tet_volume(t[1], t[0], t[2], t[3]), -1.0 / 6.0, epsilon = 1e-15);
        let flat = [t[0], t[1], t[2], Vec3::new(0.3, 0.3, 0.0)];
        assert_eq!(tet_volume_of(&flat), 0.0);
    }

    #[test]
    fn quality_reference_values() {
        for e in [1e-3, 1.0, 7.5, 1e4] {
            let q = element_quality(&regular(e));
            assert!((q - 1.0).abs() < 1e-12, "edge {e}: q = {q}");
        }
        // |K| = 1/6, sum of squared edges = 9.
        assert!((element_quality(&corner()) - 4.0 * 3f64.sqrt() / 9.0).abs() < 1e-12);
        let t = corner();
        assert_eq!(element_quality(&[t[0], t[1], t[2], Vec3::new(0.2, 0.7, 0.0)]), 0.0);
        assert_eq!(element_quality(&[t[0]; 4]), 0.0);
    }

    #[test]
    fn quality_generic_over_f32() {
        let t: [Vec3<f32>; 4] = regular(2.0).map(|p| p.cast());
        assert!((element_quality(&t) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn set_quality_is_minimum() {
        let r = regular(1.0);
        let c = corner();
        assert_relative_eq!(set_quality([&r]).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            set_quality([&r, &c]).unwrap(),
            4.0 * 3f64.sqrt() / 9.0,
            epsilon = 1e-12
        );
        let flat = [c[0], c[1], c[2], Vec3::new(0.5, 0.5, 0.0)];
        assert_eq!(set_quality([&r, &flat]).unwrap(), 0.0);
        let none: [&[Vec3<f64>; 4]; 0] = [];
        assert_eq!(set_quality(none), Err(GeomError::EmptySet));
    }

    #[test]
    fn circumsphere_reference_values() {
        let (_, r) = circumsphere(&regular(1.0)).unwrap();
        assert_relative_eq!(r, (3.0f64 / 8.0).sqrt(), epsilon = 1e-12);
        let (c, r) = circumsphere(&corner()).unwrap();
        assert_relative_eq!(c.x, 0.5, epsilon = 1e-14);
        assert_relative_eq!(c.y, 0.5, epsilon = 1e-14);
        assert_relative_eq!(c.z, 0.5, epsilon = 1e-14);
        assert_relative_eq!(r, 3f64.sqrt() / 2.0, epsilon = 1e-14);
        let t = corner();
        assert_eq!(
            circumsphere(&[t[0], t[1], t[2], Vec3::new(2.0, 3.0, 0.0)]),
            Err(GeomError::DegenerateTet)
        );
    }

    #[test]
    fn sphere_points_give_unit_circumsphere() {
        let dirs = [
            Vec3::new(0.3, 0.4, 0.866),
            Vec3::new(-0.8, 0.1, -0.2),
            Vec3::new(0.1, -0.9, 0.3),
            Vec3::new(0.6, 0.5, -0.6),
        ];
        let t = dirs.map(|d: Vec3<f64>| d / d.norm());
        let (c, r) = circumsphere(&t).unwrap();
        assert!(c.norm() < 1e-12);
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn barycentric_and_gradient() {
        let t = corner();
        let w = barycentric(&t, centroid(&t)).unwrap();
        for wi in w {
            assert_relative_eq!(wi, 0.25, epsilon = 1e-15);
        }
        // u(x) = B x with B = diag(1, 2, 3) + off-diagonal.
        let b = [[1.0, 0.5, 0.0], [0.0, 2.0, -1.0], [0.3, 0.0, 3.0]];
        let f = |p: Vec3<f64>| {
            Vec3::new(
                b[0][0] * p.x + b[0][1] * p.y + b[0][2] * p.z,
                b[1][0] * p.x + b[1][1] * p.y + b[1][2] * p.z,
                b[2][0] * p.x + b[2][1] * p.y + b[2][2] * p.z,
            )
        };
        let tt = regular(1.3);
        let g = p1_gradient(&tt, &tt.map(f)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(g[i][j], b[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sat_intersection_cases() {
        let a = corner();
        let shifted = a.map(|p| p + Vec3::new(3.0, 0.0, 0.0));
        assert!(!tets_intersect(&a, &shifted, 1e-12));
        let touching = a.map(|p| p + Vec3::new(1.0, 0.0, 0.0));
        assert!(tets_intersect(&a, &touching, 1e-12));
        let inner = a.map(|p| p * 0.1 + Vec3::splat(0.05));
        assert!(tets_intersect(&a, &inner, 1e-12));
        // Separated only along an edge-edge cross axis.
        let t1 = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let t2 = t1.map(|p| Vec3::new(1.0, 1.0, 1.0) - p + Vec3::splat(0.01));
        assert!(!tets_intersect(&t1, &t2, 1e-12));
    }
}
