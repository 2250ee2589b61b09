//! End-to-end behaviour of the attack loop on preset scenes.

use pitl_core::attack::AttackConfig;
use pitl_core::metrics::presence_rate;
use pitl_core::presets::{self, Preset};
use pitl_core::run_attack;
use pitl_core::victim::VictimDescriptor;

#[test]
fn attack_reduces_objective_and_presence_on_every_preset() {
    for preset in [Preset::Locker, Preset::Stove, Preset::Sofa] {
        let bundle = presets::generate(preset, 24, 4).unwrap();
        let scene = bundle.scene((2, 2)).unwrap();
        let mut config = AttackConfig::new(60, VictimDescriptor::BrightnessBiased { gamma: 1.0 });
        config.seed = 4;
        let r = run_attack(&config, &scene).unwrap();
        let first = r.trace[0].f_best_gen;
        assert!(
            r.best_objective < first,
            "{preset:?}: {} !< {first}",
            r.best_objective
        );
        assert!(
            r.best_presence < r.trace[0].e_best_gen + 1e-12,
            "{preset:?}"
        );
    }
}

#[test]
fn reported_presence_matches_stored_depth() {
    let bundle = presets::generate(Preset::Locker, 24, 2).unwrap();
    let scene = bundle.scene((3, 3)).unwrap();
    let config = AttackConfig::new(20, bundle.victim.clone());
    let r = run_attack(&config, &scene).unwrap();
    let e = presence_rate(
        &r.best_depth,
        &scene.depth_orig,
        &scene.depth_back,
        scene.presence_region(),
    )
    .unwrap();
    assert_eq!(e, r.best_presence);
}

#[test]
fn stronger_bias_hides_more() {
    let bundle = presets::generate(Preset::Locker, 24, 8).unwrap();
    let scene = bundle.scene((2, 2)).unwrap();
    let presence = |gamma| {
        let mut c = AttackConfig::new(80, VictimDescriptor::BrightnessBiased { gamma });
        c.seed = 8;
        run_attack(&c, &scene).unwrap().best_presence
    };
    assert!(presence(1.0) < presence(0.5));
}

#[test]
fn same_seed_same_result() {
    let bundle = presets::generate(Preset::Stove, 20, 3).unwrap();
    let scene = bundle.scene((2, 2)).unwrap();
    let config = AttackConfig::new(15, bundle.victim.clone());
    let a = run_attack(&config, &scene).unwrap();
    let b = run_attack(&config, &scene).unwrap();
    assert_eq!(a.best_pattern, b.best_pattern);
    assert_eq!(a.best_objective, b.best_objective);
    assert_eq!(a.final_state, b.final_state);
}
