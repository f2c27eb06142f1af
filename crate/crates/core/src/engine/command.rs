use serde::{Deserialize, Serialize};

use super::Integrator;
use crate::Vec3;

/// Live steering command, applied between steps only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Pause,
    Resume,
    Reset,
    SetDamping { value: f64 },
    ApplyForce { masses: Vec<usize>, force: Vec3 },
    ClearForces,
    SetActuation { group: String, amplitude: f64, frequency: f64 },
    SetIntegrator { name: Integrator },
}
