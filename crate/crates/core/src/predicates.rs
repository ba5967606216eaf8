//! Exact orientation and insphere predicates.
//!
//! The `f64` entry points use Shewchuk's adaptive-precision expansions (via
//! the `robust` crate), so their signs are exact for any finite input. The
//! generic `*_det` functions evaluate the plain determinant in any [`Ring`],
//! which with exact rationals gives an independent reference.

use thiserror::Error;

use crate::geom::Vec3;
use crate::scalar::Ring;

type P = Vec3<f64>;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PredicateError {
    #[error("base tetrahedron is degenerate")]
    DegenerateTet,
}

/// Position of a point relative to a circumsphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sphere {
    Inside,
    On,
    Outside,
}

#[inline]
fn c3(p: P) -> robust::Coord3D<f64> {
    robust::Coord3D { x: p.x, y: p.y, z: p.z }
}

/// Positive iff `d` sees `a, b, c` clockwise, i.e. iff `tet_volume(a,b,c,d) > 0`.
/// Only the sign is meaningful; it is exact.
#[inline]
pub fn orient3d(a: P, b: P, c: P, d: P) -> f64 {
    -robust::orient3d(c3(a), c3(b), c3(c), c3(d))
}

/// Exact 2D orientation of the projections onto the coordinate plane that
/// drops axis `drop`. Positive for counter-clockwise in the remaining axes
/// taken in cyclic order.
#[inline]
pub fn orient2d_dropping(a: P, b: P, c: P, drop: usize) -> f64 {
    let (i, j) = ((drop + 1) % 3, (drop + 2) % 3);
    let pa = robust::Coord { x: a[i], y: a[j] };
    let pb = robust::Coord { x: b[i], y: b[j] };
    let pc = robust::Coord { x: c[i], y: c[j] };
    robust::orient2d(pa, pb, pc)
}

/// Positive iff `e` lies strictly inside the circumsphere of the positively
/// oriented tetrahedron `(a, b, c, d)`. Exact sign; the caller guarantees the
/// orientation.
#[inline]
pub fn insphere_raw(a: P, b: P, c: P, d: P, e: P) -> f64 {
    // robust expects its own positive orientation, which is ours mirrored.
    robust::insphere(c3(b), c3(a), c3(c), c3(d), c3(e))
}

/// Classifies `p` against the circumsphere of `(a, b, c, d)`. The base tet
/// may have either orientation; a flat one is an error.
pub fn insphere(a: P, b: P, c: P, d: P, p: P) -> Result<Sphere, PredicateError> {
    let o = orient3d(a, b, c, d);
    if o == 0.0 {
        return Err(PredicateError::DegenerateTet);
    }
    let s = if o > 0.0 {
        insphere_raw(a, b, c, d, p)
    } else {
        insphere_raw(b, a, c, d, p)
    };
    Ok(if s > 0.0 {
        Sphere::Inside
    } else if s < 0.0 {
        Sphere::Outside
    } else {
        Sphere::On
    })
}

/// In-circle test for four coplanar points: positive iff `d` lies inside the
/// circle through `a, b, c`, with the sign taken relative to the orientation
/// of `(a, b, c)` in the plane, so the result does not depend on the order of
/// `a, b, c`. `q` is any point off the plane. Exact.
pub fn incircle_coplanar(a: P, b: P, c: P, d: P, q: P) -> f64 {
    // Lifting argument: d is inside the circle iff it is inside every sphere
    // through the circle, and the apex q defines one such sphere.
    let o = orient3d(a, b, c, q);
    if o > 0.0 {
        insphere_raw(a, b, c, q, d)
    } else if o < 0.0 {
        insphere_raw(b, a, c, q, d)
    } else {
        0.0
    }
}

/// Determinant of the 3x3 orientation matrix in any ordered ring.
/// Same sign convention as [`orient3d`].
pub fn orient3d_det<R: Ring>(a: &[R; 3], b: &[R; 3], c: &[R; 3], d: &[R; 3]) -> R {
    let u = sub(b, a);
    let v = sub(c, a);
    let w = sub(d, a);
    det3(&u, &v, &w)
}

/// Insphere determinant in any ordered ring. Positive iff `e` is inside the
/// circumsphere of `(a, b, c, d)` when `orient3d_det(a,b,c,d) > 0`.
pub fn insphere_det<R: Ring>(a: &[R; 3], b: &[R; 3], c: &[R; 3], d: &[R; 3], e: &[R; 3]) -> R {
    let rows: Vec<[R; 4]> = [a, b, c, d]
        .iter()
        .map(|p| {
            let t = sub(p, e);
            let l = t[0].clone() * t[0].clone() + t[1].clone() * t[1].clone() + t[2].clone() * t[2].clone();
            [t[0].clone(), t[1].clone(), t[2].clone(), l]
        })
        .collect();
    // Laplace expansion along the lifted column.
    let minor = |skip: usize| -> R {
        let r: Vec<[R; 3]> = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, r)| [r[0].clone(), r[1].clone(), r[2].clone()])
            .collect();
        det3(&r[0], &r[1], &r[2])
    };
    let mut acc = R::zero();
    for (i, row) in rows.iter().enumerate() {
        let term = row[3].clone() * minor(i);
        // Cofactor sign for column 3 of a 4x4 is (-1)^(i+3).
        if i % 2 == 0 {
            acc = acc - term;
        } else {
            acc = acc + term;
        }
    }
    // The sign flip makes the result agree with orient3d_det's convention.
    R::zero() - acc
}

fn sub<R: Ring>(a: &[R; 3], b: &[R; 3]) -> [R; 3] {
    [
        a[0].clone() - b[0].clone(),
        a[1].clone() - b[1].clone(),
        a[2].clone() - b[2].clone(),
    ]
}

fn det3<R: Ring>(u: &[R; 3], v: &[R; 3], w: &[R; 3]) -> R {
    let cx = v[1].clone() * w[2].clone() - v[2].clone() * w[1].clone();
    let cy = v[2].clone() * w[0].clone() - v[0].clone() * w[2].clone();
    let cz = v[0].clone() * w[1].clone() - v[1].clone() * w[0].clone();
    u[0].clone() * cx + u[1].clone() * cy + u[2].clone() * cz
}
