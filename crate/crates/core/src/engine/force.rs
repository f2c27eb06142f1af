//! Force laws: Hookean springs, gravity and external loads, contact planes.

use crate::model::{ContactPlane, Scene};
use crate::Vec3;

/// Endpoint separations below this are treated as coincident.
pub const DEGENERATE_LENGTH: f64 = 1e-12;

/// Hooke's law force on endpoint `i`, or `None` for coincident endpoints.
/// The force on `j` is the exact negation.
#[inline]
pub fn try_spring_force(xi: &Vec3, xj: &Vec3, k: f64, l0: f64) -> Option<Vec3> {
    let d = xj - xi;
    let len = d.norm();
    if len < DEGENERATE_LENGTH {
        return None;
    }
    Some(d * (k * (len - l0) / len))
}

/// Force on mass `i` from a spring to mass `j`; zero for coincident endpoints.
pub fn spring_force(xi: &Vec3, xj: &Vec3, k: f64, l0: f64) -> Vec3 {
    try_spring_force(xi, xj, k, l0).unwrap_or_else(Vec3::zeros)
}

/// Penalty normal force plus Coulomb friction for a mass penetrating `plane`.
#[inline]
pub fn apply_contact_plane(x: &Vec3, v: &Vec3, m: f64, plane: &ContactPlane, dt: f64) -> Vec3 {
    let depth = plane.offset - x.dot(&plane.normal);
    if depth <= 0.0 {
        return Vec3::zeros();
    }
    let normal = plane.normal * (plane.penalty * depth);
    if plane.friction == 0.0 {
        return normal;
    }
    let vt = v - plane.normal * v.dot(&plane.normal);
    let speed = vt.norm();
    if speed == 0.0 {
        return normal;
    }
    let magnitude = (plane.friction * normal.norm()).min(speed * m / dt);
    normal - vt * (magnitude / speed)
}

/// Gravity, external load and plane contacts on one mass.
#[inline]
pub(crate) fn body_force(scene: &Scene, i: usize, x: &Vec3, v: &Vec3) -> Vec3 {
    let mass = &scene.masses[i];
    let mut f = scene.gravity * mass.m;
    f += mass.f_ext;
    for plane in &scene.planes {
        f += apply_contact_plane(x, v, mass.m, plane, scene.dt);
    }
    f
}

/// Total force on mass `i` at time `t` given positions `x` and velocities `v`:
/// incident spring forces (in spring order, actuation applied) plus gravity,
/// external force and contacts.
pub fn total_force(i: usize, scene: &Scene, x: &[Vec3], v: &[Vec3], t: f64) -> Vec3 {
    let mut springs = Vec3::zeros();
    for (s, spring) in scene.springs.iter().enumerate() {
        if spring.i != i && spring.j != i {
            continue;
        }
        let l0 = scene.rest_length_at(s, t);
        let f = spring_force(&x[spring.i], &x[spring.j], spring.k, l0);
        if spring.i == i {
            springs += f;
        } else {
            springs += -f;
        }
    }
    springs + body_force(scene, i, &x[i], &v[i])
}
