use proptest::prelude::*;

use spu_robust::reference::{
    gibbs_probabilities_fp64, inverse_transform, mode_estimate, run, softmax_probabilities,
};
use spu_robust::rng::ReferenceRng;
use spu_robust::{GridModel, LabelField, Pairwise, RunConfig};

fn random_model(w: usize, h: usize, labels: usize, alpha: f64, beta: f64, seed: u64) -> GridModel {
    let mut rng = ReferenceRng::new(seed);
    let singleton = (0..w * h * labels).map(|_| rng.below(6) as f64).collect();
    GridModel::new(w, h, labels, alpha, beta, singleton, Pairwise::Potts).unwrap()
}

/// Energy of one label by explicit coordinate arithmetic.
fn energy_oracle(m: &GridModel, state: &LabelField, var: usize, label: usize) -> f64 {
    let (w, h) = (m.width() as isize, m.height() as isize);
    let (x, y) = ((var as isize) % w, (var as isize) / w);
    let mut disagree = 0.0;
    for (dx, dy) in [(0, -1), (-1, 0), (1, 0), (0, 1)] {
        let (nx, ny) = (x + dx, y + dy);
        if nx >= 0 && ny >= 0 && nx < w && ny < h {
            let n = (ny * w + nx) as usize;
            if state.get(n) as usize != label {
                disagree += 1.0;
            }
        }
    }
    m.alpha() * m.singleton(var, label) + m.beta() * disagree
}

#[test]
fn exact_marginals_of_small_lattice() {
    // 3x3 binary field: enumerate all 512 joint states for exact marginals
    // and compare with a long Gibbs run at T = 1.
    let model = random_model(3, 3, 2, 0.5, 0.7, 21);
    let t = 1.0;
    let mut exact = [0.0f64; 9];
    let mut z = 0.0;
    for bits in 0u32..512 {
        let labels: Vec<u16> = (0..9).map(|v| ((bits >> v) & 1) as u16).collect();
        let field = LabelField::new(3, 3, labels.clone()).unwrap();
        let mut e = 0.0;
        for v in 0..9 {
            e += model.alpha() * model.singleton(v, labels[v] as usize);
            for n in model.neighbors(v).filter(|&n| n > v) {
                if labels[n] != labels[v] {
                    e += model.beta();
                }
            }
        }
        let p = (-e / t).exp();
        z += p;
        for (v, acc) in exact.iter_mut().enumerate() {
            if field.get(v) == 1 {
                *acc += p;
            }
        }
    }
    let rc = RunConfig::sampling(t, 60_000, 5).with_collect_last(50_000);
    let (_, trace) = run(&model, &rc).unwrap();
    for (v, mass) in exact.iter().enumerate() {
        let want = mass / z;
        let got = trace.variable(v).iter().filter(|&&l| l == 1).count() as f64 / trace.len() as f64;
        assert!(
            (got - want).abs() < 0.015,
            "variable {v}: {got} vs exact {want}"
        );
    }
}

#[test]
fn annealing_without_coupling_reaches_the_singleton_argmin() {
    let mut rng = ReferenceRng::new(8);
    let (w, h, l) = (10, 10, 4);
    let mut singleton = Vec::new();
    let mut want = Vec::new();
    for _ in 0..w * h {
        let best = rng.below(l);
        want.push(best as u16);
        for k in 0..l {
            singleton.push(if k == best {
                0.0
            } else {
                2.0 + rng.below(5) as f64
            });
        }
    }
    let model = GridModel::new(w, h, l, 1.0, 0.0, singleton, Pairwise::Potts).unwrap();
    let (end, _) = run(&model, &RunConfig::optimization(300, 1)).unwrap();
    assert_eq!(end.as_slice(), &want[..]);
}

#[test]
fn hot_chain_is_uniform() {
    let model = random_model(8, 8, 2, 1.0, 1.0, 2);
    let (_, trace) = run(&model, &RunConfig::sampling(1e6, 2000, 3)).unwrap();
    let ones = trace.as_slice().iter().filter(|&&l| l == 1).count();
    let freq = ones as f64 / trace.as_slice().len() as f64;
    assert!((freq - 0.5).abs() < 0.01, "{freq}");
}

#[test]
fn runs_are_deterministic_per_seed() {
    let model = random_model(6, 5, 3, 1.0, 0.5, 4);
    let rc = RunConfig::sampling(1.0, 40, 10);
    assert_eq!(run(&model, &rc).unwrap(), run(&model, &rc).unwrap());
    let (_, other) = run(&model, &RunConfig::sampling(1.0, 40, 11)).unwrap();
    assert_ne!(run(&model, &rc).unwrap().1, other);
}

#[test]
fn trace_window_and_end_state() {
    let model = random_model(4, 4, 2, 1.0, 1.0, 6);
    let (end, trace) = run(
        &model,
        &RunConfig::sampling(1.0, 50, 2).with_collect_last(20),
    )
    .unwrap();
    assert_eq!(trace.len(), 20);
    assert_eq!(trace.variables(), 16);
    assert_eq!(trace.last_state().unwrap(), end);
    assert_eq!(trace.tail(5).len(), 5);
    assert_eq!(trace.tail(5).last_state().unwrap(), end);
    assert!(run(
        &model,
        &RunConfig::sampling(1.0, 10, 0).with_collect_last(11)
    )
    .is_err());
    assert!(run(&model, &RunConfig::sampling(0.0, 10, 0)).is_err());
}

#[test]
fn mode_estimate_of_frozen_chain() {
    let singleton: Vec<f64> = (0..9).flat_map(|_| [0.0, 50.0]).collect();
    let model = GridModel::new(3, 3, 2, 1.0, 0.0, singleton, Pairwise::Potts).unwrap();
    let (_, trace) = run(
        &model,
        &RunConfig::sampling(0.5, 30, 0).with_collect_last(20),
    )
    .unwrap();
    assert_eq!(mode_estimate(&trace).unwrap(), LabelField::filled(3, 3, 0));
}

#[test]
fn schedule_endpoints() {
    let rc = RunConfig::optimization(500, 0);
    assert_eq!(rc.temperature_at(0), 10.0);
    assert!((rc.temperature_at(500) - 0.1).abs() < 1e-9);
    assert_eq!(RunConfig::sampling(2.5, 10, 0).temperature_at(7), 2.5);
}

#[test]
fn inverse_transform_edges() {
    assert_eq!(inverse_transform(&[0.5, 0.5], 0.0), 0);
    assert_eq!(inverse_transform(&[0.5, 0.5], 0.5), 1);
    assert_eq!(inverse_transform(&[0.0, 1.0], 0.0), 1);
    assert_eq!(inverse_transform(&[0.3, 0.7, 0.0], 0.999_999_9), 1);
}

proptest! {
    #[test]
    fn energy_matches_coordinate_oracle(
        w in 1usize..6, h in 1usize..6, labels in 2usize..5,
        alpha in 0.0f64..4.0, beta in 0.0f64..4.0, seed: u64,
    ) {
        let model = random_model(w, h, labels, alpha, beta, seed);
        let mut rng = ReferenceRng::new(seed ^ 0x5a5a);
        let state = LabelField::new(
            w, h, (0..w * h).map(|_| rng.below(labels) as u16).collect()).unwrap();
        for v in 0..w * h {
            let degree = model.neighbors(v).count() as f64;
            for l in 0..labels {
                let e = model.total_energy(&state, v, l).unwrap();
                prop_assert!((e - energy_oracle(&model, &state, v, l)).abs() < 1e-12);
                let base = alpha * model.singleton(v, l);
                prop_assert!(e >= base - 1e-12 && e <= base + beta * degree + 1e-12);
            }
        }
    }

    #[test]
    fn softmax_is_shift_invariant(
        e in prop::collection::vec(0.0f64..300.0, 1..10),
        shift in -100.0f64..100.0,
        t in 0.05f64..20.0,
    ) {
        let p = softmax_probabilities(&e, t);
        let shifted: Vec<f64> = e.iter().map(|x| x + shift).collect();
        let q = softmax_probabilities(&shifted, t);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_conditional_is_softmax_of_energies(seed: u64, t in 0.1f64..10.0) {
        let model = random_model(4, 3, 3, 1.0, 1.5, seed);
        let state = LabelField::filled(4, 3, 1);
        let p = gibbs_probabilities_fp64(&model, &state, 5, t).unwrap();
        let e: Vec<f64> = (0..3).map(|l| model.total_energy(&state, 5, l).unwrap()).collect();
        let q = softmax_probabilities(&e, t);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }
}
