//! Blending function: 0 in the atomistic core, 1 in the continuum, a quintic
//! ramp across the blending shell.

use serde::{Deserialize, Serialize};

use crate::{ModelError, Point3};

/// `6t⁵ - 15t⁴ + 10t³` clamped to `[0, 1]`.
pub fn quintic(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Radial blend about a set of defect centres: `β(x) = quintic((d(x) - R_a) / L_b)`
/// with `d` the distance to the nearest centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blend {
    pub centers: Vec<[f64; 3]>,
    pub r_a: f64,
    pub l_b: f64,
}

impl Blend {
    pub fn new(centers: Vec<Point3>, r_a: f64, l_b: f64) -> Result<Self, ModelError> {
        let b = Self { centers: centers.iter().map(|c| c.to_array()).collect(), r_a, l_b };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.l_b > 0.0 && self.r_a >= 0.0) || self.centers.is_empty() {
            return Err(ModelError::BadParameter(format!("blend r_a = {}, l_b = {}", self.r_a, self.l_b)));
        }
        Ok(())
    }

    pub fn distance(&self, x: Point3) -> f64 {
        self.centers
            .iter()
            .map(|&c| x.dist(Point3::from_array(c)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn beta(&self, x: Point3) -> f64 {
        quintic((self.distance(x) - self.r_a) / self.l_b)
    }

    /// Outer radius of the blending shell.
    pub fn r_outer(&self) -> f64 {
        self.r_a + self.l_b
    }

    /// Grows the core by `da` and the outer radius by `da + db`.
    pub fn expanded(&self, da: f64, db: f64) -> Self {
        Self { centers: self.centers.clone(), r_a: self.r_a + da, l_b: self.l_b + db }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_symmetry() {
        let b = Blend::new(vec![Point3::zero()], 2.0, 3.0).unwrap();
        assert_eq!(b.beta(Point3::new(1.9, 0.0, 0.0)), 0.0);
        assert_eq!(b.beta(Point3::new(0.0, 5.0, 0.0)), 1.0);
        assert_eq!(b.beta(Point3::new(0.0, 0.0, 9.0)), 1.0);
        assert!((b.beta(Point3::new(3.5, 0.0, 0.0)) - 0.5).abs() < 1e-15);
        for t in [0.1, 0.3, 0.45] {
            assert!((quintic(t) + quintic(1.0 - t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn first_and_second_derivatives_vanish_at_the_ends() {
        let h = 1e-4;
        for t0 in [0.0, 1.0] {
            let d1 = (quintic(t0 + h) - quintic(t0 - h)) / (2.0 * h);
            let d2 = (quintic(t0 + h) - 2.0 * quintic(t0) + quintic(t0 - h)) / (h * h);
            assert!(d1.abs() < 1e-7, "{d1}");
            assert!(d2.abs() < 1e-3, "{d2}");
        }
    }

    #[test]
    fn nearest_centre_wins() {
        let b = Blend::new(vec![Point3::new(-3.0, 0.0, 0.0), Point3::new(3.0, 0.0, 0.0)], 1.0, 1.0).unwrap();
        assert_eq!(b.beta(Point3::new(2.5, 0.0, 0.0)), 0.0);
        assert_eq!(b.beta(Point3::zero()), 1.0);
    }
}
