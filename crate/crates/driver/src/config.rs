//! Declarative run configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qcmesh_model::cauchy_born::CauchyBorn;
use qcmesh_model::lattice::{LatticeSpec, Structure, Void};
use qcmesh_model::potential::{Potential, SitePotential};

use crate::DriverError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub structure: Structure,
    /// Lattice constant; the stress-free constant of the potential when absent.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub center: [f64; 3],
    pub half_width: f64,
    /// Fixed frame around the domain; twice the cutoff when absent.
    #[serde(default)]
    pub margin: Option<f64>,
    #[serde(default)]
    pub voids: Vec<Void>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlendConfig {
    /// Blend centres; the void centres (or the domain centre) when empty.
    #[serde(default)]
    pub centers: Vec<[f64; 3]>,
    pub r_a: f64,
    pub l_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Node spacing on the domain boundary, in lattice constants.
    pub h_bdry: f64,
    /// Node spacing next to the interface, in lattice constants.
    #[serde(default = "default_h_min")]
    pub h_min: f64,
    /// Atoms are taken out to the blend outer radius plus this pad.
    #[serde(default = "default_pad")]
    pub atom_pad: f64,
    /// Minimum distance of atoms from the domain boundary.
    #[serde(default = "default_clearance")]
    pub clearance: f64,
}

fn default_h_min() -> f64 {
    1.0
}

fn default_pad() -> f64 {
    0.5
}

fn default_clearance() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptConfig {
    pub tau1: f64,
    pub tau2: f64,
    /// Largest number of interface layers `P`.
    pub max_layers: usize,
    pub max_steps: usize,
    /// Stop once the number of degrees of freedom reaches this.
    pub dof_budget: usize,
    pub g_tol: f64,
    pub max_iters: u64,
    /// Layer thickness; the nearest-neighbour distance when absent.
    pub d_layer: Option<f64>,
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            tau1: 0.5,
            tau2: 0.3,
            max_layers: 3,
            max_steps: 4,
            dof_budget: 200_000,
            g_tol: 1e-5,
            max_iters: 5000,
            d_layer: None,
            seed: 0,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(self.tau1) || !open(self.tau2) || self.max_layers < 1 || !(self.g_tol > 0.0) {
            return Err(DriverError::Config(format!(
                "need 0 < tau1, tau2 < 1, max_layers >= 1 and g_tol > 0 (got {}, {}, {}, {})",
                self.tau1, self.tau2, self.max_layers, self.g_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub enabled: bool,
    /// The reference solve is skipped for larger lattices.
    pub max_atoms: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { enabled: true, max_atoms: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    /// Morse in reduced units when absent.
    #[serde(default)]
    pub potential: Option<Potential>,
    pub blend: BlendConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub adapt: AdaptConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, DriverError> {
        let c: RunConfig = toml::from_str(text).map_err(|e| DriverError::Config(e.to_string()))?;
        c.adapt.validate()?;
        c.potential().validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, DriverError> {
        let text = std::fs::read_to_string(path).map_err(|e| DriverError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn potential(&self) -> Potential {
        self.potential.unwrap_or_else(|| Potential::default_morse(1.0))
    }

    /// The lattice constant: given, or the stress-free one.
    pub fn lattice_constant(&self) -> f64 {
        let pot = self.potential();
        self.lattice.a.unwrap_or_else(|| {
            let nn = self.lattice.structure.nearest_neighbour(1.0);
            // Bracket between half and the full cutoff for the nearest shell.
            CauchyBorn::equilibrium_constant(self.lattice.structure, &pot, 0.5 * pot.cutoff() / nn, pot.cutoff() / nn)
        })
    }

    pub fn lattice_spec(&self) -> LatticeSpec {
        let a = self.lattice_constant();
        let l = &self.lattice;
        LatticeSpec {
            structure: l.structure,
            a,
            center: l.center,
            half_width: l.half_width * a,
            margin: l.margin.map_or(2.0 * self.potential().cutoff(), |m| m * a),
            voids: l
                .voids
                .iter()
                .map(|v| Void { center: v.center.map(|c| c * a), radius: v.radius * a })
                .collect(),
        }
    }

    pub fn d_layer(&self, a: f64) -> f64 {
        self.adapt.d_layer.map_or_else(|| self.lattice.structure.nearest_neighbour(a), |d| d * a)
    }
}

/// A small double-void FCC problem.
pub fn example_config() -> RunConfig {
    RunConfig {
        lattice: LatticeConfig {
            structure: Structure::Fcc,
            a: None,
            center: [0.0; 3],
            half_width: 4.5,
            margin: None,
            voids: vec![
                Void { center: [-1.25, 0.0, 0.0], radius: 0.8 },
                Void { center: [1.25, 0.0, 0.0], radius: 0.8 },
            ],
        },
        potential: None,
        blend: BlendConfig { centers: Vec::new(), r_a: 1.0, l_b: 0.8 },
        mesh: MeshConfig { h_bdry: 2.0, h_min: 1.0, atom_pad: 0.5, clearance: 1.5 },
        adapt: AdaptConfig::default(),
        reference: ReferenceConfig::default(),
    }
}
