use std::collections::BTreeMap;

use compmc::composition::count_states;
use compmc::oracle::{
    detailed_balance_residual, enumerate_space, exact_distribution, exact_n_marginal, exact_rates,
    stationarity_residual, stationary_distribution, stationary_rates, transition_matrix, transition_matrix_scaled,
};
use compmc::{PriorSpec, Property, SamplerKind, SpaceParams, Sparsity, Target};

fn targets(bins: usize, total: u32) -> Vec<(&'static str, Target)> {
    let space = SpaceParams::new(bins, total).unwrap();
    let uniform = Sparsity::uniform(1, space.max_support(), &space).unwrap();
    let unimodal = PriorSpec::Unimodal { center: 2.0, scale: 0.25 }.build(&space).unwrap();
    let skewed = Property::from_fn(|x: &[u32]| 0.1 + x[0] as f64 / (1.0 + x[1] as f64));
    vec![
        ("uniform", Target::new(space, uniform.clone())),
        ("unimodal", Target::new(space, unimodal)),
        ("uniform+property", Target::new(space, uniform).with_property(skewed)),
    ]
}

#[test]
fn every_kernel_satisfies_detailed_balance() {
    for (bins, total) in [(3, 3), (4, 3), (3, 2), (5, 2)] {
        let es = enumerate_space(&SpaceParams::new(bins, total).unwrap()).unwrap();
        for (name, target) in targets(bins, total) {
            let ed = exact_distribution(&es, &target).unwrap();
            for kind in SamplerKind::ALL {
                let pi = transition_matrix(kind, &es, &target).unwrap();
                assert!(pi.max_row_sum_error() < 1e-12, "{kind} {name} N={bins} M={total}");
                let db = detailed_balance_residual(&ed, &pi);
                assert!(db < 1e-10, "{kind} {name} N={bins} M={total}: residual {db:e}");
                let st = stationarity_residual(&ed, &pi);
                assert!(st < 1e-8, "{kind} {name}: stationarity {st:e}");
                let v = stationary_distribution(&pi);
                let worst = v.iter().zip(&ed.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(worst < 1e-8, "{kind} {name}: power iteration off by {worst:e}");
            }
        }
    }
}

#[test]
fn corrupted_acceptance_breaks_balance() {
    let space = SpaceParams::new(3, 3).unwrap();
    let target = Target::new(space, Sparsity::uniform(1, 3, &space).unwrap());
    let es = enumerate_space(&space).unwrap();
    let ed = exact_distribution(&es, &target).unwrap();
    for kind in [SamplerKind::NaiveMH, SamplerKind::Accelerated] {
        let pi = transition_matrix_scaled(kind, &es, &target, 1.1).unwrap();
        assert!(pi.max_row_sum_error() < 1e-12);
        assert!(detailed_balance_residual(&ed, &pi) > 1e-4, "{kind}");
    }
}

#[test]
fn exact_probabilities_match_energies() {
    let space = SpaceParams::new(4, 4).unwrap();
    for (name, target) in targets(4, 4) {
        let es = enumerate_space(&space).unwrap();
        let ed = exact_distribution(&es, &target).unwrap();
        let unnorm: Vec<f64> = es.states().iter().map(|x| (-target.total_energy(x).unwrap()).exp()).collect();
        let z: f64 = unnorm.iter().sum();
        for (p, u) in ed.probs.iter().zip(&unnorm) {
            assert!((p - u / z).abs() < 1e-10, "{name}");
        }
        assert!((ed.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sparsity_only_marginal_is_the_prior() {
    let space = SpaceParams::new(10, 5).unwrap();
    let es = enumerate_space(&space).unwrap();
    for spec in ["uniform{2,5}", "unimodal{3,0.25}", "{1:1,4:3}", "exponential{0.5,0.5}"] {
        let prior: Sparsity = spec.parse::<PriorSpec>().unwrap().build(&space).unwrap();
        let target = Target::new(space, prior.clone());
        let ed = exact_distribution(&es, &target).unwrap();
        let marginal = exact_n_marginal(&ed, &es);
        for n in 1..=5 {
            let got = marginal.get(&n).copied().unwrap_or(0.0);
            assert!((got - prior.weight(n)).abs() < 1e-12, "{spec} n={n}");
        }
        // Equal n means equal probability.
        let mut by_n: BTreeMap<usize, f64> = BTreeMap::new();
        for (x, p) in es.states().iter().zip(&ed.probs) {
            let first = *by_n.entry(x.l0_norm()).or_insert(*p);
            assert!((first - p).abs() < 1e-15);
        }
    }
}

#[test]
fn point_mass_marginal() {
    let space = SpaceParams::new(4, 3).unwrap();
    let es = enumerate_space(&space).unwrap();
    let target = Target::new(space, Sparsity::point_mass(2, &space).unwrap());
    let marginal = exact_n_marginal(&exact_distribution(&es, &target).unwrap(), &es);
    assert_eq!(marginal.get(&2).copied(), Some(1.0));
    assert!(marginal.iter().all(|(&n, &p)| n == 2 || p == 0.0));
}

#[test]
fn pair_weights_are_the_exact_conditional() {
    let space = SpaceParams::new(4, 4).unwrap();
    let es = enumerate_space(&space).unwrap();
    for (name, target) in targets(4, 4) {
        let ed = exact_distribution(&es, &target).unwrap();
        for x in es.states() {
            for i in 0..4 {
                for j in 0..4 {
                    if i == j || x.values()[i] + x.values()[j] == 0 {
                        continue;
                    }
                    let s = x.values()[i] + x.values()[j];
                    // Oracle: exact probabilities restricted to the fiber.
                    let mut fiber = Vec::new();
                    let mut y = x.values().to_vec();
                    for k in 0..=s {
                        y[i] = k;
                        y[j] = s - k;
                        fiber.push(ed.probs[es.position(&y).unwrap()]);
                    }
                    let zf: f64 = fiber.iter().sum();
                    let w = target.pair_conditional_weights(x, i, j).unwrap();
                    let zw: f64 = w.iter().sum();
                    for (a, b) in w.iter().zip(&fiber) {
                        assert!((a / zw - b / zf).abs() < 1e-10, "{name} {x} ({i},{j})");
                    }
                }
            }
        }
    }
}

#[test]
fn streamed_rates_agree_with_matrices() {
    let space = SpaceParams::new(4, 3).unwrap();
    let es = enumerate_space(&space).unwrap();
    for (_, target) in targets(4, 3) {
        let ed = exact_distribution(&es, &target).unwrap();
        for kind in SamplerKind::ALL {
            let (a, u) = stationary_rates(&ed, &transition_matrix(kind, &es, &target).unwrap());
            let (a2, u2) = exact_rates(kind, &es, &target).unwrap();
            assert!((a - a2).abs() < 1e-12 && (u - u2).abs() < 1e-12);
            assert!(u <= a + 1e-12 || kind == SamplerKind::NaiveMH);
        }
    }
}

#[test]
fn flat_target_prior_makes_naive_acceptance_one() {
    // Prior proportional to the fiber sizes gives every state the same probability.
    let space = SpaceParams::new(6, 4).unwrap();
    let weights = (1..=4).map(|n| (n, count_states(&space, n).unwrap().to_string().parse::<f64>().unwrap()));
    let target = Target::new(space, Sparsity::new(weights, &space).unwrap());
    let es = enumerate_space(&space).unwrap();
    let (accepted, _) = exact_rates(SamplerKind::NaiveMH, &es, &target).unwrap();
    assert!((accepted - 1.0).abs() < 1e-12);
}
