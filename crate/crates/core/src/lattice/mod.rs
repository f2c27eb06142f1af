//! Lattice generation: voxel grids and best-candidate (quasi-uniform)
//! sampling of a mesh interior, turned into masses and springs.

mod mesh;
mod random;
mod voxel;

pub use mesh::{MeshError, TriangleMesh};
pub use random::{build_random_lattice, PointGrid};
pub use voxel::{build_voxel_lattice, voxel_block};

pub const DEFAULT_CANDIDATES: usize = 100;
pub const DEFAULT_K_NEAREST: usize = 3;
pub const DEFAULT_RADIUS_FACTOR: f64 = 1.75;
/// Consecutive rejected rounds after which best-candidate placement stops.
pub const DEFAULT_MAX_FAILURES: usize = 20;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LatticeError {
    #[error("no masses generated: the region has an empty interior at this resolution")]
    NoMasses,
    #[error("region has zero volume")]
    ZeroVolume,
    #[error("invalid lattice parameter: {0}")]
    InvalidSpec(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum LatticeMode {
    /// Cubic grid of pitch `dim` anchored at the mesh bounding-box minimum.
    Voxel { dim: f64 },
    /// Mitchell best-candidate sampling with minimum spacing `cutoff`.
    BestCandidate {
        cutoff: f64,
        /// Random candidates drawn per placement.
        candidates: usize,
        /// Neighbours whose summed distance is maximized.
        k_nearest: usize,
        /// Springs join every vertex pair closer than this.
        connection_radius: f64,
        /// Stop after this many consecutive rounds whose best candidate is closer than `cutoff`.
        max_failures: usize,
        /// Optional explicit stopping count.
        target_count: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub mode: LatticeMode,
    pub seed: u64,
}

impl LatticeSpec {
    pub fn voxel(dim: f64) -> Self {
        Self {
            mode: LatticeMode::Voxel { dim },
            seed: 0,
        }
    }

    pub fn best_candidate(cutoff: f64, seed: u64) -> Self {
        Self {
            mode: LatticeMode::BestCandidate {
                cutoff,
                candidates: DEFAULT_CANDIDATES,
                k_nearest: DEFAULT_K_NEAREST,
                connection_radius: DEFAULT_RADIUS_FACTOR * cutoff,
                max_failures: DEFAULT_MAX_FAILURES,
                target_count: None,
            },
            seed,
        }
    }

    pub fn with_connection_radius(mut self, r: f64) -> Self {
        if let LatticeMode::BestCandidate { connection_radius, .. } = &mut self.mode {
            *connection_radius = r;
        }
        self
    }

    pub fn with_target_count(mut self, n: usize) -> Self {
        if let LatticeMode::BestCandidate { target_count, .. } = &mut self.mode {
            *target_count = Some(n);
        }
        self
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        match self.mode {
            LatticeMode::Voxel { dim } if !(dim > 0.0 && dim.is_finite()) => {
                Err(LatticeError::InvalidSpec(format!("dim must be > 0, got {dim}")))
            }
            LatticeMode::BestCandidate {
                cutoff,
                candidates,
                k_nearest,
                connection_radius,
                ..
            } => {
                if !(cutoff > 0.0 && cutoff.is_finite()) {
                    Err(LatticeError::InvalidSpec(format!("cutoff must be > 0, got {cutoff}")))
                } else if candidates == 0 {
                    Err(LatticeError::InvalidSpec("candidate count must be >= 1".into()))
                } else if k_nearest == 0 {
                    Err(LatticeError::InvalidSpec("k-nearest must be >= 1".into()))
                } else if !(connection_radius > 0.0) {
                    Err(LatticeError::InvalidSpec("connection radius must be > 0".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Builds a lattice in whichever mode `spec` selects.
pub fn build_lattice(
    mesh: &TriangleMesh,
    spec: &LatticeSpec,
    material: &crate::model::Material,
) -> Result<crate::model::Scene, LatticeError> {
    match spec.mode {
        LatticeMode::Voxel { .. } => build_voxel_lattice(mesh, spec, material),
        LatticeMode::BestCandidate { .. } => build_random_lattice(mesh, spec, material),
    }
}
