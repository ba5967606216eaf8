#![allow(dead_code)]

use qcmesh_driver::config::RunConfig;

/// One centred void in a 6a FCC cube; a full run takes well under a second.
pub const SMALL: &str = r#"
[lattice]
structure = "fcc"
half_width = 3.0

[[lattice.voids]]
center = [0.0, 0.0, 0.0]
radius = 0.8

[blend]
r_a = 0.8
l_b = 0.6

[mesh]
h_bdry = 1.5

[adapt]
max_steps = 2
"#;

pub fn small_config() -> RunConfig {
    RunConfig::from_toml(SMALL).unwrap()
}
