use serde::{Deserialize, Serialize};

use crate::model::Scene;
use crate::Vec3;

/// Elastic, gravitational and kinetic energy (J).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub epe: f64,
    pub gpe: f64,
    pub ke: f64,
    pub total: f64,
}

impl Energies {
    pub fn new(epe: f64, gpe: f64, ke: f64) -> Self {
        Self {
            epe,
            gpe,
            ke,
            total: epe + gpe + ke,
        }
    }
}

/// Evaluates energies of one scene. Heights are measured along `-g` from a
/// fixed datum, by default the lowest initial mass.
#[derive(Clone, Debug)]
pub struct EnergyMeter {
    up: Vec3,
    g: f64,
    datum: f64,
    groups: Vec<Option<usize>>,
}

impl EnergyMeter {
    pub fn new(scene: &Scene) -> Self {
        let up = Self::up(scene);
        let datum = scene
            .masses
            .iter()
            .map(|m| m.x.dot(&up))
            .fold(f64::INFINITY, f64::min);
        Self::with_datum(scene, if datum.is_finite() { datum } else { 0.0 })
    }

    pub fn with_datum(scene: &Scene, datum: f64) -> Self {
        Self {
            up: Self::up(scene),
            g: scene.gravity.norm(),
            datum,
            groups: scene.spring_groups(),
        }
    }

    fn up(scene: &Scene) -> Vec3 {
        let g = scene.gravity.norm();
        if g > 0.0 {
            -scene.gravity / g
        } else {
            Vec3::zeros()
        }
    }

    pub fn datum(&self) -> f64 {
        self.datum
    }

    pub fn measure(&self, scene: &Scene, x: &[Vec3], v: &[Vec3], t: f64) -> Energies {
        let scales: Vec<f64> = scene.actuation.iter().map(|g| g.scale(t)).collect();
        let mut epe = 0.0;
        for (s, spring) in scene.springs.iter().enumerate() {
            let l0 = match self.groups[s] {
                Some(g) => spring.l0 * scales[g],
                None => spring.l0,
            };
            let stretch = (x[spring.j] - x[spring.i]).norm() - l0;
            epe += 0.5 * spring.k * stretch * stretch;
        }
        let mut gpe = 0.0;
        let mut ke = 0.0;
        for (i, mass) in scene.masses.iter().enumerate() {
            gpe += mass.m * self.g * (x[i].dot(&self.up) - self.datum);
            ke += 0.5 * mass.m * v[i].norm_squared();
        }
        Energies::new(epe, gpe, ke)
    }
}

/// Energies of `scene` in state `(x, v)` at time `t`, datum at the lowest initial mass.
pub fn energies(scene: &Scene, x: &[Vec3], v: &[Vec3], t: f64) -> Energies {
    EnergyMeter::new(scene).measure(scene, x, v, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mass, SceneBuilder, Spring};

    fn state(scene: &Scene) -> (Vec<Vec3>, Vec<Vec3>) {
        (scene.masses.iter().map(|m| m.x).collect(), scene.masses.iter().map(|m| m.v).collect())
    }

    #[test]
    fn ground_state_is_zero() {
        let mut b = SceneBuilder::new();
        b.add_mass(Mass::new(0.1, Vec3::zeros()));
        b.add_mass(Mass::new(0.1, Vec3::x()));
        b.add_spring(Spring::new(0, 1, 100.0, 1.0)).unwrap();
        let scene = b.build();
        let (x, v) = state(&scene);
        assert_eq!(energies(&scene, &x, &v, 0.0), Energies::default());
    }

    #[test]
    fn gravitational_energy_by_hand() {
        let mut b = SceneBuilder::new();
        b.add_mass(Mass::new(0.1, Vec3::new(0.0, 2.0, 0.0)));
        let scene = b.build();
        let (x, v) = state(&scene);
        let e = EnergyMeter::with_datum(&scene, 0.0).measure(&scene, &x, &v, 0.0);
        assert!((e.gpe - 1.962).abs() < 1e-12);
    }

    #[test]
    fn kinetic_energy_by_hand() {
        let mut b = SceneBuilder::new();
        let mut m = Mass::new(2.0, Vec3::zeros());
        m.v = Vec3::new(3.0, 4.0, 0.0);
        b.add_mass(m);
        let scene = b.build();
        let (x, v) = state(&scene);
        let e = energies(&scene, &x, &v, 0.0);
        assert_eq!(e.ke, 25.0);
        assert_eq!(e.total, 25.0);
    }

    #[test]
    fn stretched_spring_energy() {
        let mut b = SceneBuilder::new().gravity(Vec3::zeros());
        b.add_mass(Mass::new(1.0, Vec3::zeros()));
        b.add_mass(Mass::new(1.0, Vec3::new(1.5, 0.0, 0.0)));
        b.add_spring(Spring::new(0, 1, 8.0, 1.0)).unwrap();
        let scene = b.build();
        let (x, v) = state(&scene);
        assert_eq!(energies(&scene, &x, &v, 0.0).epe, 1.0);
    }
}
