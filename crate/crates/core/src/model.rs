//! Domain types shared by every part of the engine: point masses, Hookean
//! springs, materials, actuation groups, contact planes and the assembled
//! [`Scene`].

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Vec3;

/// Default gravitational acceleration, y-up convention.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Default per-step velocity damping ("0.01 %").
pub const DEFAULT_DAMPING: f64 = 1.0e-4;

/// Default integration time step (s).
pub const DEFAULT_DT: f64 = 1.0e-4;

/// Default penalty stiffness of contact planes (N/m).
pub const DEFAULT_PLANE_PENALTY: f64 = 1.0e5;

/// A point mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mass {
    /// Mass in kg.
    pub m: f64,
    /// Position (m).
    pub x: Vec3,
    /// Velocity (m/s).
    #[serde(default = "Vec3::zeros")]
    pub v: Vec3,
    /// Constant external force (N).
    #[serde(default = "Vec3::zeros")]
    pub f_ext: Vec3,
    /// Anchored masses never move.
    #[serde(default)]
    pub fixed: bool,
}

impl Mass {
    pub fn new(m: f64, x: Vec3) -> Self {
        Self {
            m,
            x,
            v: Vec3::zeros(),
            f_ext: Vec3::zeros(),
            fixed: false,
        }
    }

    pub fn anchored(mut self) -> Self {
        self.fixed = true;
        self
    }
}

/// A Hookean spring between masses `i` and `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spring {
    pub i: usize,
    pub j: usize,
    /// Stiffness (N/m).
    pub k: f64,
    /// Rest length (m).
    pub l0: f64,
    /// Label of the actuation group driving this spring's rest length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

impl Spring {
    pub fn new(i: usize, j: usize, k: f64, l0: f64) -> Self {
        Self {
            i,
            j,
            k,
            l0,
            group: None,
        }
    }

    /// Unordered endpoint pair, smaller index first.
    pub fn key(&self) -> (usize, usize) {
        (self.i.min(self.j), self.i.max(self.j))
    }
}

/// How a material assigns mass to lattice nodes. The structure's mass is
/// always spread uniformly over its nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MassAssignment {
    /// Fixed mass per node (kg).
    PerNode(f64),
    /// Material density (kg/m³); total = density × region volume.
    Density(f64),
    /// Total structure mass (kg).
    TotalMass(f64),
}

impl MassAssignment {
    fn value(&self) -> f64 {
        match *self {
            MassAssignment::PerNode(v) | MassAssignment::Density(v) | MassAssignment::TotalMass(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub name: String,
    pub mass: MassAssignment,
    /// Stiffness (N/m) of a spring whose rest length equals `l_ref`.
    pub k0: f64,
    /// Reference length (m) for `k0`.
    pub l_ref: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self {
            name: "default".to_owned(),
            mass: MassAssignment::PerNode(0.1),
            k0: 10_000.0,
            l_ref: 1.0,
        }
    }
}

impl Material {
    /// Spring constant scaled inversely with rest length: `k0 * l_ref / l0`.
    pub fn stiffness_for_length(&self, l0: f64) -> f64 {
        self.k0 * self.l_ref / l0
    }

    /// Mass of each of `nodes` nodes filling a region of `volume` m³.
    pub fn node_mass(&self, nodes: usize, volume: f64) -> f64 {
        let n = nodes.max(1) as f64;
        match self.mass {
            MassAssignment::PerNode(m) => m,
            MassAssignment::Density(rho) => rho * volume / n,
            MassAssignment::TotalMass(total) => total / n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuationMode {
    Sinusoid,
    ConstantExpansion,
}

/// A labelled set of springs whose rest lengths follow a shared signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationGroup {
    pub label: String,
    pub mode: ActuationMode,
    /// Fractional change of rest length, |amplitude| < 1.
    pub amplitude: f64,
    /// Hz, sinusoid mode only.
    #[serde(default)]
    pub frequency: f64,
    /// rad, sinusoid mode only.
    #[serde(default)]
    pub phase: f64,
}

impl ActuationGroup {
    pub fn sinusoid(label: impl Into<String>, amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self {
            label: label.into(),
            mode: ActuationMode::Sinusoid,
            amplitude,
            frequency,
            phase,
        }
    }

    pub fn expansion(label: impl Into<String>, amplitude: f64) -> Self {
        Self {
            label: label.into(),
            mode: ActuationMode::ConstantExpansion,
            amplitude,
            frequency: 0.0,
            phase: 0.0,
        }
    }

    /// Multiplier applied to a member spring's rest length at time `t`.
    #[inline]
    pub fn scale(&self, t: f64) -> f64 {
        match self.mode {
            ActuationMode::Sinusoid => {
                1.0 + self.amplitude * (2.0 * PI * self.frequency * t + self.phase).sin()
            }
            ActuationMode::ConstantExpansion => 1.0 + self.amplitude,
        }
    }
}

/// Rest length of `spring` at time `t` under actuation `group`.
pub fn actuated_rest_length(spring: &Spring, group: &ActuationGroup, t: f64) -> f64 {
    spring.l0 * group.scale(t)
}

/// Half-space `x · normal >= offset` with penalty contact and Coulomb friction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactPlane {
    pub normal: Vec3,
    pub offset: f64,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default)]
    pub friction: f64,
}

fn default_penalty() -> f64 {
    DEFAULT_PLANE_PENALTY
}

impl ContactPlane {
    /// Plane through `offset * normal`; `normal` is normalized here.
    pub fn new(normal: Vec3, offset: f64, friction: f64) -> Self {
        Self {
            normal: normal.normalize(),
            offset,
            penalty: DEFAULT_PLANE_PENALTY,
            friction,
        }
    }

    /// Horizontal floor at height `y`.
    pub fn floor(y: f64, friction: f64) -> Self {
        Self::new(Vec3::y(), y, friction)
    }
}

/// Complete simulation description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub masses: Vec<Mass>,
    pub springs: Vec<Spring>,
    pub gravity: Vec3,
    pub dt: f64,
    pub damping: f64,
    #[serde(default)]
    pub actuation: Vec<ActuationGroup>,
    #[serde(default)]
    pub planes: Vec<ContactPlane>,
    #[serde(default)]
    pub materials: Vec<Material>,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            masses: Vec::new(),
            springs: Vec::new(),
            gravity: Vec3::new(0.0, -STANDARD_GRAVITY, 0.0),
            dt: DEFAULT_DT,
            damping: 0.0,
            actuation: Vec::new(),
            planes: Vec::new(),
            materials: Vec::new(),
        }
    }
}

impl Scene {
    pub fn mass_count(&self) -> usize {
        self.masses.len()
    }

    pub fn spring_count(&self) -> usize {
        self.springs.len()
    }

    /// Number of springs incident to each mass.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.masses.len()];
        for s in &self.springs {
            if s.i < deg.len() {
                deg[s.i] += 1;
            }
            if s.j < deg.len() {
                deg[s.j] += 1;
            }
        }
        deg
    }

    /// Index of each spring's actuation group, if any. Unknown labels map to `None`.
    pub fn spring_groups(&self) -> Vec<Option<usize>> {
        let by_label: HashMap<&str, usize> = self
            .actuation
            .iter()
            .enumerate()
            .map(|(g, a)| (a.label.as_str(), g))
            .collect();
        self.springs
            .iter()
            .map(|s| s.group.as_deref().and_then(|l| by_label.get(l).copied()))
            .collect()
    }

    pub fn group(&self, label: &str) -> Option<&ActuationGroup> {
        self.actuation.iter().find(|g| g.label == label)
    }

    /// Rest length of spring `s` at time `t`, honouring actuation.
    pub fn rest_length_at(&self, s: usize, t: f64) -> f64 {
        let spring = &self.springs[s];
        match spring.group.as_deref().and_then(|l| self.group(l)) {
            Some(g) => actuated_rest_length(spring, g, t),
            None => spring.l0,
        }
    }

    /// Anchors every mass for which `pred` holds; returns how many were anchored.
    pub fn anchor_where(&mut self, mut pred: impl FnMut(&Mass) -> bool) -> usize {
        let mut n = 0;
        for m in &mut self.masses {
            if pred(m) {
                m.fixed = true;
                n += 1;
            }
        }
        n
    }

    /// Assigns actuation `label` to every spring whose endpoints both satisfy `pred`.
    pub fn assign_group(&mut self, label: &str, mut pred: impl FnMut(&Vec3) -> bool) -> usize {
        let inside: Vec<bool> = self.masses.iter().map(|m| pred(&m.x)).collect();
        let mut n = 0;
        for s in &mut self.springs {
            if inside[s.i] && inside[s.j] {
                s.group = Some(label.to_owned());
                n += 1;
            }
        }
        n
    }
}

/// A single broken invariant, with the index of the offending element.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonPositiveMass { mass: usize },
    NonFiniteMassState { mass: usize },
    InvalidEndpoint { spring: usize, index: usize },
    SelfLoop { spring: usize },
    NonPositiveStiffness { spring: usize },
    NonPositiveRestLength { spring: usize },
    DuplicateSpring { spring: usize, first: usize },
    UnknownGroup { spring: usize, label: String },
    NonPositiveDt,
    DampingOutOfRange,
    NonFiniteGravity,
    DuplicateGroup { group: usize },
    AmplitudeOutOfRange { group: usize },
    NonUnitNormal { plane: usize },
    NonPositivePenalty { plane: usize },
    NegativeFriction { plane: usize },
    InvalidMaterial { material: usize },
}

impl Violation {
    /// Field path of the offending value within a scene document.
    pub fn path(&self) -> String {
        match self {
            Violation::NonPositiveMass { mass } => format!("masses[{mass}].m"),
            Violation::NonFiniteMassState { mass } => format!("masses[{mass}]"),
            Violation::InvalidEndpoint { spring, .. } => format!("springs[{spring}]"),
            Violation::SelfLoop { spring } => format!("springs[{spring}].j"),
            Violation::NonPositiveStiffness { spring } => format!("springs[{spring}].k"),
            Violation::NonPositiveRestLength { spring } => format!("springs[{spring}].l0"),
            Violation::DuplicateSpring { spring, .. } => format!("springs[{spring}]"),
            Violation::UnknownGroup { spring, .. } => format!("springs[{spring}].group"),
            Violation::NonPositiveDt => "dt".to_owned(),
            Violation::DampingOutOfRange => "damping".to_owned(),
            Violation::NonFiniteGravity => "gravity".to_owned(),
            Violation::DuplicateGroup { group } => format!("actuation[{group}].label"),
            Violation::AmplitudeOutOfRange { group } => format!("actuation[{group}].amplitude"),
            Violation::NonUnitNormal { plane } => format!("planes[{plane}].normal"),
            Violation::NonPositivePenalty { plane } => format!("planes[{plane}].penalty"),
            Violation::NegativeFriction { plane } => format!("planes[{plane}].friction"),
            Violation::InvalidMaterial { material } => format!("materials[{material}]"),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self {
            Violation::NonPositiveMass { .. } => "mass must satisfy m > 0".to_owned(),
            Violation::NonFiniteMassState { .. } => "position, velocity and force must be finite".to_owned(),
            Violation::InvalidEndpoint { index, .. } => format!("endpoint {index} is not a valid mass index"),
            Violation::SelfLoop { .. } => "spring endpoints must differ (i != j)".to_owned(),
            Violation::NonPositiveStiffness { .. } => "stiffness must satisfy k > 0".to_owned(),
            Violation::NonPositiveRestLength { .. } => "rest length must satisfy l0 > 0".to_owned(),
            Violation::DuplicateSpring { first, .. } => format!("duplicates the endpoint pair of springs[{first}]"),
            Violation::UnknownGroup { label, .. } => format!("unknown actuation group {label:?}"),
            Violation::NonPositiveDt => "time step must satisfy dt > 0".to_owned(),
            Violation::DampingOutOfRange => "damping must satisfy 0 <= damping < 1".to_owned(),
            Violation::NonFiniteGravity => "gravity must be finite".to_owned(),
            Violation::DuplicateGroup { .. } => "actuation group labels must be unique".to_owned(),
            Violation::AmplitudeOutOfRange { .. } => "amplitude must satisfy |amplitude| < 1".to_owned(),
            Violation::NonUnitNormal { .. } => "plane normal must have unit length".to_owned(),
            Violation::NonPositivePenalty { .. } => "penalty stiffness must be > 0".to_owned(),
            Violation::NegativeFriction { .. } => "friction coefficient must be >= 0".to_owned(),
            Violation::InvalidMaterial { .. } => "material needs mass > 0, k0 > 0 and l_ref > 0".to_owned(),
        };
        write!(f, "{}: {}", self.path(), what)
    }
}

fn finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Returns every invariant violation of `scene`; empty means valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = scene.masses.len();

    for (idx, m) in scene.masses.iter().enumerate() {
        if !(m.m > 0.0 && m.m.is_finite()) {
            out.push(Violation::NonPositiveMass { mass: idx });
        }
        if !(finite(&m.x) && finite(&m.v) && finite(&m.f_ext)) {
            out.push(Violation::NonFiniteMassState { mass: idx });
        }
    }

    let labels: HashSet<&str> = scene.actuation.iter().map(|g| g.label.as_str()).collect();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(scene.springs.len());
    for (idx, s) in scene.springs.iter().enumerate() {
        let mut endpoints_ok = true;
        for e in [s.i, s.j] {
            if e >= n {
                out.push(Violation::InvalidEndpoint { spring: idx, index: e });
                endpoints_ok = false;
            }
        }
        if s.i == s.j {
            out.push(Violation::SelfLoop { spring: idx });
            endpoints_ok = false;
        }
        if !(s.k > 0.0 && s.k.is_finite()) {
            out.push(Violation::NonPositiveStiffness { spring: idx });
        }
        if !(s.l0 > 0.0 && s.l0.is_finite()) {
            out.push(Violation::NonPositiveRestLength { spring: idx });
        }
        if let Some(label) = &s.group {
            if !labels.contains(label.as_str()) {
                out.push(Violation::UnknownGroup {
                    spring: idx,
                    label: label.clone(),
                });
            }
        }
        if endpoints_ok {
            if let Some(&first) = seen.get(&s.key()) {
                out.push(Violation::DuplicateSpring { spring: idx, first });
            } else {
                seen.insert(s.key(), idx);
            }
        }
    }

    if !(scene.dt > 0.0 && scene.dt.is_finite()) {
        out.push(Violation::NonPositiveDt);
    }
    if !(scene.damping >= 0.0 && scene.damping < 1.0) {
        out.push(Violation::DampingOutOfRange);
    }
    if !finite(&scene.gravity) {
        out.push(Violation::NonFiniteGravity);
    }

    let mut group_labels = HashSet::new();
    for (idx, g) in scene.actuation.iter().enumerate() {
        if !group_labels.insert(g.label.as_str()) {
            out.push(Violation::DuplicateGroup { group: idx });
        }
        if !(g.amplitude.abs() < 1.0) || !g.frequency.is_finite() || !g.phase.is_finite() {
            out.push(Violation::AmplitudeOutOfRange { group: idx });
        }
    }

    for (idx, p) in scene.planes.iter().enumerate() {
        if !((p.normal.norm() - 1.0).abs() < 1e-9) {
            out.push(Violation::NonUnitNormal { plane: idx });
        }
        if !(p.penalty > 0.0 && p.penalty.is_finite()) {
            out.push(Violation::NonPositivePenalty { plane: idx });
        }
        if !(p.friction >= 0.0 && p.friction.is_finite()) {
            out.push(Violation::NegativeFriction { plane: idx });
        }
    }

    for (idx, mat) in scene.materials.iter().enumerate() {
        if !(mat.mass.value() > 0.0 && mat.k0 > 0.0 && mat.l_ref > 0.0) {
            out.push(Violation::InvalidMaterial { material: idx });
        }
    }

    out
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BuildError {
    #[error("spring endpoints {0} and {1} must be distinct valid mass indices")]
    BadEndpoints(usize, usize),
    #[error("spring between {0} and {1} already exists")]
    Duplicate(usize, usize),
}

/// Incremental scene construction that never produces duplicate springs.
#[derive(Clone, Debug, Default)]
pub struct SceneBuilder {
    scene: Scene,
    pairs: HashMap<(usize, usize), usize>,
}

impl SceneBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_scene_settings(template: &Scene) -> Self {
        Self {
            scene: Scene {
                masses: Vec::new(),
                springs: Vec::new(),
                ..template.clone()
            },
            pairs: HashMap::new(),
        }
    }

    pub fn gravity(mut self, g: Vec3) -> Self {
        self.scene.gravity = g;
        self
    }

    pub fn dt(mut self, dt: f64) -> Self {
        self.scene.dt = dt;
        self
    }

    pub fn damping(mut self, c: f64) -> Self {
        self.scene.damping = c;
        self
    }

    pub fn add_mass(&mut self, mass: Mass) -> usize {
        self.scene.masses.push(mass);
        self.scene.masses.len() - 1
    }

    /// Adds a spring; a second spring on the same unordered pair is rejected.
    pub fn add_spring(&mut self, spring: Spring) -> Result<usize, BuildError> {
        let n = self.scene.masses.len();
        if spring.i == spring.j || spring.i >= n || spring.j >= n {
            return Err(BuildError::BadEndpoints(spring.i, spring.j));
        }
        let key = spring.key();
        if self.pairs.contains_key(&key) {
            return Err(BuildError::Duplicate(key.0, key.1));
        }
        let id = self.scene.springs.len();
        self.pairs.insert(key, id);
        self.scene.springs.push(spring);
        Ok(id)
    }

    /// Adds a spring at the current endpoint distance (unstressed), or returns
    /// the id of the existing spring on that pair.
    pub fn connect(&mut self, i: usize, j: usize, material: &Material) -> Result<usize, BuildError> {
        if let Some(&id) = self.pairs.get(&(i.min(j), i.max(j))) {
            return Ok(id);
        }
        let n = self.scene.masses.len();
        if i == j || i >= n || j >= n {
            return Err(BuildError::BadEndpoints(i, j));
        }
        let l0 = (self.scene.masses[j].x - self.scene.masses[i].x).norm();
        self.add_spring(Spring::new(i, j, material.stiffness_for_length(l0), l0))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains_key(&(i.min(j), i.max(j)))
    }

    pub fn add_group(&mut self, group: ActuationGroup) {
        self.scene.actuation.push(group);
    }

    pub fn add_plane(&mut self, plane: ContactPlane) {
        self.scene.planes.push(plane);
    }

    pub fn add_material(&mut self, material: Material) {
        self.scene.materials.push(material);
    }

    pub fn masses(&self) -> &[Mass] {
        &self.scene.masses
    }

    pub fn build(self) -> Scene {
        self.scene
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cube_scene() -> Scene {
        let mat = Material::default();
        let mut b = SceneBuilder::new();
        for idx in 0..8 {
            let p = Vec3::new((idx & 1) as f64, ((idx >> 1) & 1) as f64, ((idx >> 2) & 1) as f64);
            b.add_mass(Mass::new(0.1, p));
        }
        for i in 0..8 {
            for j in (i + 1)..8 {
                b.connect(i, j, &mat).unwrap();
            }
        }
        b.build()
    }

    #[test]
    fn well_formed_cube_has_no_violations() {
        let scene = cube_scene();
        assert_eq!(scene.springs.len(), 28);
        assert!(validate_scene(&scene).is_empty());
    }

    #[test]
    fn out_of_range_endpoint_is_reported() {
        let mut scene = cube_scene();
        scene.springs[3].j = scene.masses.len();
        let v = validate_scene(&scene);
        assert_eq!(v, vec![Violation::InvalidEndpoint { spring: 3, index: 8 }]);
    }

    #[test]
    fn zero_dt_is_reported() {
        let mut scene = cube_scene();
        scene.dt = 0.0;
        assert_eq!(validate_scene(&scene), vec![Violation::NonPositiveDt]);
    }

    #[test]
    fn duplicate_and_bad_values_are_all_reported() {
        let mut scene = cube_scene();
        let dup = Spring::new(1, 0, 5.0, 1.0);
        scene.springs.push(dup);
        scene.springs[0].k = -1.0;
        scene.masses[2].m = 0.0;
        scene.damping = 1.0;
        let v = validate_scene(&scene);
        assert!(v.contains(&Violation::DuplicateSpring { spring: 28, first: 0 }));
        assert!(v.contains(&Violation::NonPositiveStiffness { spring: 0 }));
        assert!(v.contains(&Violation::NonPositiveMass { mass: 2 }));
        assert!(v.contains(&Violation::DampingOutOfRange));
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn builder_rejects_duplicates() {
        let mut b = SceneBuilder::new();
        b.add_mass(Mass::new(1.0, Vec3::zeros()));
        b.add_mass(Mass::new(1.0, Vec3::x()));
        b.add_spring(Spring::new(0, 1, 1.0, 1.0)).unwrap();
        assert_eq!(b.add_spring(Spring::new(1, 0, 1.0, 1.0)), Err(BuildError::Duplicate(0, 1)));
        assert_eq!(b.add_spring(Spring::new(1, 1, 1.0, 1.0)), Err(BuildError::BadEndpoints(1, 1)));
        assert_eq!(b.connect(1, 0, &Material::default()), Ok(0));
    }

    #[test]
    fn rest_length_zero_amplitude_is_identity() {
        let s = Spring::new(0, 1, 1.0, 0.37);
        let g = ActuationGroup::sinusoid("a", 0.0, 3.0, 0.4);
        for t in [0.0, 0.1, 1.7] {
            assert_eq!(actuated_rest_length(&s, &g, t), 0.37);
        }
    }

    #[test]
    fn rest_length_sinusoid_quarter_period() {
        let s = Spring::new(0, 1, 1.0, 1.0);
        let g = ActuationGroup::sinusoid("a", 0.2, 1.0, 0.0);
        assert!((actuated_rest_length(&s, &g, 0.25) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn rest_length_constant_expansion() {
        let s = Spring::new(0, 1, 1.0, 2.0);
        let g = ActuationGroup::expansion("heat", 0.5);
        assert_eq!(actuated_rest_length(&s, &g, 12.0), 3.0);
    }

    #[test]
    fn stiffness_scales_inversely_with_length() {
        let mat = Material::default();
        assert_eq!(mat.stiffness_for_length(1.0), 10_000.0);
        assert_eq!(mat.stiffness_for_length(0.5), 20_000.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sinusoid_is_periodic(l0 in 1e-3f64..10.0, a in -0.99f64..0.99, f in 0.1f64..50.0,
                                    phase in -6.3f64..6.3, t in 0.0f64..5.0) {
                let s = Spring::new(0, 1, 1.0, l0);
                let g = ActuationGroup::sinusoid("g", a, f, phase);
                let d = actuated_rest_length(&s, &g, t) - actuated_rest_length(&s, &g, t + 1.0 / f);
                prop_assert!(d.abs() < 1e-12 * l0);
                prop_assert!(actuated_rest_length(&s, &g, t) > 0.0);
            }

            #[test]
            fn builder_never_duplicates(pairs in proptest::collection::vec((0usize..6, 0usize..6), 0..40)) {
                let mut b = SceneBuilder::new();
                for idx in 0..6 {
                    b.add_mass(Mass::new(1.0, Vec3::new(idx as f64, (idx * idx) as f64, 0.0)));
                }
                for (i, j) in pairs {
                    let _ = b.connect(i, j, &Material::default());
                }
                let scene = b.build();
                let unique: HashSet<_> = scene.springs.iter().map(Spring::key).collect();
                prop_assert_eq!(unique.len(), scene.springs.len());
                prop_assert!(validate_scene(&scene).is_empty());
            }
        }
    }
}
