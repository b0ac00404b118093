use std::sync::Arc;

use proptest::prelude::*;

use hyreach::automaton::{builtin, HybridAutomaton};
use hyreach::engines::{run, run_agjh_logged, run_seq, signature_distance, Engine, ExploreOptions};
use hyreach::geometry::TemplateDirections;
use hyreach::postc::ReachParams;

const MODELS: [&str; 4] = ["circle", "ball", "oscillator", "nav:3"];

fn model(name: &str) -> HybridAutomaton {
    builtin(name).unwrap().unwrap()
}

fn params(ha: &HybridAutomaton) -> ReachParams {
    ReachParams::new(10.0, 2e-2, Arc::new(TemplateDirections::boxed(ha.dim()))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn engines_agree(
        m in 0usize..4,
        bound in 0usize..=5,
        workers in prop::sample::select(vec![1usize, 2, 4, 8]),
        seed in any::<u64>(),
    ) {
        let ha = model(MODELS[m]);
        let p = params(&ha);
        let opts = ExploreOptions { bound, workers, seed, ..Default::default() };
        let base = run_seq(&ha, ha.init(), &p, &opts).unwrap();
        for engine in [Engine::Agjh, Engine::Tpbfs] {
            let r = run(engine, &ha, ha.init(), &p, &opts).unwrap();
            prop_assert_eq!(signature_distance(&r.signature(), &base.signature()), Some(0.0));
            prop_assert_eq!(r.stats.post_c, base.stats.post_c);
            prop_assert_eq!(r.stats.successors, base.stats.successors);
            prop_assert_eq!(r.stats.support_samples, base.stats.support_samples);
            prop_assert_eq!(r.stats.jump_tasks, base.stats.jump_tasks);
            prop_assert_eq!(r.stats.frontier_remaining, base.stats.frontier_remaining);
        }
    }

    #[test]
    fn agjh_slots_are_exclusive(m in 0usize..4, workers in 2usize..6, seed in any::<u64>()) {
        let ha = model(MODELS[m]);
        let opts = ExploreOptions { bound: 4, workers, seed, ..Default::default() };
        let (_, writes) = run_agjh_logged(&ha, ha.init(), &params(&ha), &opts).unwrap();
        let mut owner = std::collections::HashMap::new();
        for w in writes {
            prop_assert_eq!(w.col, w.worker);
            let prev = owner.insert((w.level, w.row, w.col), w.worker);
            prop_assert!(prev.is_none() || prev == Some(w.worker));
        }
    }
}

#[test]
fn levels_are_tagged_in_bfs_order() {
    for name in MODELS {
        let ha = model(name);
        for engine in Engine::ALL {
            let opts = ExploreOptions { bound: 4, workers: 3, seed: 9, ..Default::default() };
            let r = run(engine, &ha, ha.init(), &params(&ha), &opts).unwrap();
            for (k, lvl) in r.levels.iter().enumerate() {
                assert!(lvl.iter().all(|e| e.level == k), "{name} {engine}");
            }
            assert_eq!(r.levels[0].len(), 1);
            assert_eq!(r.levels[0][0].state, *ha.init());
        }
    }
}

#[test]
fn stats_integrity_and_monotone_posts() {
    for name in MODELS {
        let ha = model(name);
        for engine in Engine::ALL {
            let mut last = 0;
            for bound in 0..=4 {
                let opts = ExploreOptions { bound, workers: 2, seed: 1, ..Default::default() };
                let r = run(engine, &ha, ha.init(), &params(&ha), &opts).unwrap();
                let s = &r.stats;
                assert_eq!(s.post_c as usize, r.entries().count());
                let produced: usize = r.levels.iter().skip(1).map(|l| l.len()).sum::<usize>() + s.frontier_remaining;
                assert_eq!(s.successors as usize, produced, "{name} {engine} bound {bound}");
                assert_eq!(s.total_posts, s.post_c + s.post_d);
                assert!(s.total_posts >= last, "{name} {engine} bound {bound}");
                assert!((0.0..=1.0).contains(&s.utilization));
                last = s.total_posts;
            }
        }
    }
}

#[test]
fn tpbfs_balance_contract_on_all_benchmarks() {
    for name in MODELS {
        let ha = model(name);
        for workers in [2, 3, 4, 8] {
            let opts = ExploreOptions { bound: 4, workers, ..Default::default() };
            let r = run(Engine::Tpbfs, &ha, ha.init(), &params(&ha), &opts).unwrap();
            let s = &r.stats;
            assert_eq!(s.level_assigned_cost.len(), s.level_tasks_per_core.len());
            for ((assigned, per), max) in s.level_assigned_cost.iter().zip(&s.level_tasks_per_core).zip(&s.level_max_task_cost) {
                assert_eq!(assigned.len(), workers);
                assert!(assigned.iter().all(|a| a <= &(per + max)), "{name} N={workers}: {assigned:?} vs {per}+{max}");
            }
        }
    }
}

#[test]
fn containment_prunes_only_repeated_work() {
    let ha = model("oscillator");
    let p = params(&ha);
    let plain = run_seq(&ha, ha.init(), &p, &ExploreOptions { bound: 5, ..Default::default() }).unwrap();
    let pruned = run_seq(&ha, ha.init(), &p, &ExploreOptions { bound: 5, containment: true, ..Default::default() }).unwrap();
    assert!(pruned.stats.post_c <= plain.stats.post_c);
    assert_eq!(pruned.levels[0], plain.levels[0]);
}
