//! Site potentials. A site potential maps the deformed bond vectors
//! `g_ρ = ρ + D_ρ u(ℓ)` of one site to its energy.

use serde::{Deserialize, Serialize};

use crate::{ModelError, Point3};

/// Fraction of the cutoff where the taper starts.
pub const TAPER_START: f64 = 0.9;

/// Energy of one site as a function of its deformed bond vectors.
pub trait SitePotential: Send + Sync {
    fn cutoff(&self) -> f64;

    fn energy(&self, bonds: &[Point3]) -> f64;

    /// Energy and `∂V/∂g_ρ` written to `grad` (same length as `bonds`).
    fn energy_grad(&self, bonds: &[Point3], grad: &mut [Point3]) -> f64;
}

/// Quintic smoothstep cutoff on `[r_in, r_c]`: 1 below, 0 above, C² at both
/// ends. Returns value and derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Taper {
    pub r_in: f64,
    pub r_c: f64,
}

impl Taper {
    pub fn new(r_c: f64) -> Self {
        Self { r_in: TAPER_START * r_c, r_c }
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.r_in {
            return (1.0, 0.0);
        }
        if r >= self.r_c {
            return (0.0, 0.0);
        }
        let w = self.r_c - self.r_in;
        let t = (r - self.r_in) / w;
        let s = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = -30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
        (s, ds)
    }
}

/// Morse pair potential `D (e^{-2α(r-r0)} - 2 e^{-α(r-r0)})` times a taper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Morse {
    pub depth: f64,
    pub alpha: f64,
    pub r0: f64,
    pub r_cut: f64,
}

impl Morse {
    pub fn new(depth: f64, alpha: f64, r0: f64, r_cut: f64) -> Result<Self, ModelError> {
        let m = Self { depth, alpha, r0, r_cut };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = [self.depth, self.alpha, self.r0, self.r_cut].iter().all(|v| v.is_finite() && *v > 0.0);
        if !ok {
            return Err(ModelError::BadParameter(format!("{self:?}")));
        }
        Ok(())
    }

    /// Tapered pair energy and its derivative in `r`.
    pub fn phi(&self, r: f64) -> (f64, f64) {
        if r >= self.r_cut {
            return (0.0, 0.0);
        }
        let e = (-self.alpha * (r - self.r0)).exp();
        let v = self.depth * (e * e - 2.0 * e);
        let dv = self.depth * (-2.0 * self.alpha * e * e + 2.0 * self.alpha * e);
        let (s, ds) = Taper::new(self.r_cut).eval(r);
        (v * s, dv * s + v * ds)
    }
}

impl SitePotential for Morse {
    fn cutoff(&self) -> f64 {
        self.r_cut
    }

    fn energy(&self, bonds: &[Point3]) -> f64 {
        0.5 * bonds.iter().map(|g| self.phi(g.norm()).0).sum::<f64>()
    }

    fn energy_grad(&self, bonds: &[Point3], grad: &mut [Point3]) -> f64 {
        let mut e = 0.0;
        for (g, out) in bonds.iter().zip(grad.iter_mut()) {
            let r = g.norm();
            let (v, dv) = self.phi(r);
            e += 0.5 * v;
            *out = if r > 0.0 { *g * (0.5 * dv / r) } else { Point3::zero() };
        }
        e
    }
}

/// Finnis-Sinclair style EAM: Morse pair part plus `-A √ρ̄`, with
/// `ρ̄ = Σ e^{-χ(r-r0)}` (tapered).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eam {
    pub pair: Morse,
    pub embed: f64,
    pub chi: f64,
}

impl Eam {
    fn density(&self, r: f64) -> (f64, f64) {
        if r >= self.pair.r_cut {
            return (0.0, 0.0);
        }
        let e = (-self.chi * (r - self.pair.r0)).exp();
        let (s, ds) = Taper::new(self.pair.r_cut).eval(r);
        (e * s, -self.chi * e * s + e * ds)
    }

    fn embedding(&self, rho: f64) -> (f64, f64) {
        if rho <= 0.0 {
            return (0.0, 0.0);
        }
        let s = rho.sqrt();
        (-self.embed * s, -0.5 * self.embed / s)
    }
}

impl SitePotential for Eam {
    fn cutoff(&self) -> f64 {
        self.pair.r_cut
    }

    fn energy(&self, bonds: &[Point3]) -> f64 {
        let mut rho = 0.0;
        let mut e = 0.0;
        for g in bonds {
            let r = g.norm();
            e += 0.5 * self.pair.phi(r).0;
            rho += self.density(r).0;
        }
        e + self.embedding(rho).0
    }

    fn energy_grad(&self, bonds: &[Point3], grad: &mut [Point3]) -> f64 {
        let mut rho = 0.0;
        for g in bonds {
            rho += self.density(g.norm()).0;
        }
        let (f, df) = self.embedding(rho);
        let mut e = f;
        for (g, out) in bonds.iter().zip(grad.iter_mut()) {
            let r = g.norm();
            let (v, dv) = self.pair.phi(r);
            let (_, dpsi) = self.density(r);
            e += 0.5 * v;
            *out = if r > 0.0 { *g * ((0.5 * dv + df * dpsi) / r) } else { Point3::zero() };
        }
        e
    }
}

/// Configurable potential choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Morse(Morse),
    Eam(Eam),
}

impl Potential {
    /// Reduced-unit Morse for an FCC lattice of constant `a`: nearest
    /// neighbours near the well minimum, second shell inside the cutoff.
    pub fn default_morse(a: f64) -> Self {
        Potential::Morse(Morse { depth: 1.0, alpha: 5.0 / a, r0: 0.75 * a, r_cut: 1.15 * a })
    }

    pub fn default_eam(a: f64) -> Self {
        Potential::Eam(Eam {
            pair: Morse { depth: 0.5, alpha: 5.0 / a, r0: 0.75 * a, r_cut: 1.15 * a },
            embed: 1.0,
            chi: 3.0 / a,
        })
    }

    pub fn site(&self) -> &dyn SitePotential {
        match self {
            Potential::Morse(m) => m,
            Potential::Eam(e) => e,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Potential::Morse(m) => m.validate(),
            Potential::Eam(e) => {
                e.pair.validate()?;
                if !(e.embed.is_finite() && e.chi.is_finite() && e.chi > 0.0) {
                    return Err(ModelError::BadParameter(format!("{e:?}")));
                }
                Ok(())
            }
        }
    }
}

impl SitePotential for Potential {
    fn cutoff(&self) -> f64 {
        self.site().cutoff()
    }

    fn energy(&self, bonds: &[Point3]) -> f64 {
        self.site().energy(bonds)
    }

    fn energy_grad(&self, bonds: &[Point3], grad: &mut [Point3]) -> f64 {
        self.site().energy_grad(bonds, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn taper_is_c2_at_both_ends() {
        let t = Taper::new(2.0);
        for r in [t.r_in, t.r_c] {
            let (s_lo, d_lo) = t.eval(r - 1e-9);
            let (s_hi, d_hi) = t.eval(r + 1e-9);
            assert!((s_lo - s_hi).abs() < 1e-8 && (d_lo - d_hi).abs() < 1e-6);
            let dd = |x: f64| t.eval(x).1;
            assert!(fd(dd, r - 1e-4).abs() < 1e-3 || fd(dd, r + 1e-4).abs() < 1e-3);
        }
        let (s, _) = t.eval(0.5 * (t.r_in + t.r_c));
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn morse_minimum_and_derivative() {
        let m = Morse::new(1.3, 4.0, 1.0, 3.0).unwrap();
        let (v, dv) = m.phi(1.0);
        assert!((v + 1.3).abs() < 1e-14 && dv.abs() < 1e-14);
        for r in [0.8, 1.2, 2.75, 2.9] {
            assert!((m.phi(r).1 - fd(|x| m.phi(x).0, r)).abs() < 1e-7);
        }
        assert_eq!(m.phi(3.0), (0.0, 0.0));
    }

    #[test]
    fn site_gradients_match_differences() {
        let bonds = [Point3::new(0.7, 0.1, 0.0), Point3::new(-0.1, 0.8, 0.2), Point3::new(0.0, -0.3, 1.05)];
        for pot in [Potential::default_morse(1.0), Potential::default_eam(1.0)] {
            let mut g = [Point3::zero(); 3];
            let e = pot.energy_grad(&bonds, &mut g);
            assert!((e - pot.energy(&bonds)).abs() < 1e-14);
            for b in 0..3 {
                for k in 0..3 {
                    let f = |x: f64| {
                        let mut bb = bonds;
                        bb[b][k] = x;
                        pot.energy(&bb)
                    };
                    assert!((g[b][k] - fd(f, bonds[b][k])).abs() < 1e-7, "{pot:?} {b} {k}");
                }
            }
        }
    }
}
