use springsim::analysis::BeamExperiment;
use springsim::engine::{simulate, Engine, EngineConfig, ExecMode, Integrator, SimOptions};
use springsim::model::{Mass, SceneBuilder, Spring};
use springsim::validate::predicted_frequency;
use springsim::Vec3;

#[test]
fn verlet_oscillator_stays_bounded_for_a_million_steps() {
    let (k, m, dt, a) = (10_000.0, 0.1, 1e-4, 0.01);
    let mut b = SceneBuilder::new().gravity(Vec3::zeros()).dt(dt).damping(0.0);
    b.add_mass(Mass::new(m, Vec3::zeros()).anchored());
    b.add_mass(Mass::new(m, Vec3::new(0.0, -(1.0 + a), 0.0)));
    b.add_spring(Spring::new(0, 1, k, 1.0)).unwrap();
    let mut e = Engine::new(b.build(), EngineConfig::new(Integrator::Verlet, ExecMode::Serial)).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        e.run_steps(1000).unwrap();
        let s = e.state();
        worst = worst.max((s.x[1].y + 1.0).abs());
        assert_eq!(s.x[1].x, 0.0);
        assert_eq!(s.x[1].z, 0.0);
    }
    assert_eq!(e.steps(), 1_000_000);
    // symplectic: amplitude may wobble by O((w dt)^2) but never grows
    assert!(worst <= a * 1.001, "excursion {worst}");
    assert!(worst >= a * 0.99);
}

#[test]
fn damped_relaxation_never_gains_energy_over_a_period() {
    let exp = BeamExperiment {
        gravity: Vec3::new(0.0, -9.81, 0.0),
        ..BeamExperiment::default().with_cells([8, 2, 2])
    };
    let mut scene = exp.scene().unwrap();
    scene.damping = exp.relax_damping;
    let period = 1.0 / predicted_frequency(&scene).unwrap();
    let (rec, _) = simulate(scene, EngineConfig::default(), &SimOptions::new(10.0 * period).every(10)).unwrap();
    let e = rec.energy_trace().unwrap();
    let (t, v) = (e.times(), e.values());
    let start = v[0].total;
    let mut checked = 0;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            if t[j] - t[i] > period {
                assert!(
                    v[j].total <= v[i].total + 1e-12 * start.abs(),
                    "E({:.4}) = {} > E({:.4}) = {}",
                    t[j],
                    v[j].total,
                    t[i],
                    v[i].total
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
    assert!(v.last().unwrap().total < start);
}

#[test]
fn anchors_are_bit_identical_after_a_run() {
    for integrator in Integrator::ALL {
        for mode in [ExecMode::Serial, ExecMode::Parallel, ExecMode::ParallelDeterministic] {
            let exp = BeamExperiment {
                gravity: Vec3::new(0.0, -9.81, 0.0),
                ..BeamExperiment::default().with_cells([6, 2, 2])
            };
            let scene = exp.scene().unwrap();
            let anchors: Vec<(usize, Vec3)> = scene.masses.iter().enumerate().filter(|(_, m)| m.fixed).map(|(i, m)| (i, m.x)).collect();
            assert!(!anchors.is_empty());
            let mut e = Engine::new(scene, EngineConfig::new(integrator, mode)).unwrap();
            e.run_steps(500).unwrap();
            for &(i, x) in &anchors {
                assert_eq!(e.state().x[i], x, "{integrator} {mode} mass {i}");
                assert_eq!(e.state().v[i], Vec3::zeros());
            }
        }
    }
}
