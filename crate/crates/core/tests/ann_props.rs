use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use specid_core::ann::{loss, one_hot, sigmoid, Dims, HyperCell, HyperGrid, Network, Params};
use specid_core::spectra::{ClassId, N_BINS};

fn cases() -> ProptestConfig {
    ProptestConfig {
        cases: 1000,
        rng_seed: RngSeed::Fixed(0x5EED),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

const SMALL: Dims = Dims::new(5, 3, 2);
const FD_EPS: f64 = 1e-5;

fn loss_at(net: &Network, x: &[f64], t: &[f64]) -> f64 {
    loss(&net.forward(x).unwrap().output, t)
}

/// Relative gap between the analytic directional derivative along `u` and
/// its central difference.
fn directional_error(net: &Network, x: &[f64], t: &[f64], u: &[f64]) -> f64 {
    let (grad, _) = net.gradient(x, t).unwrap();
    let analytic: f64 = grad.flat().iter().zip(u).map(|(g, u)| g * u).sum();
    let base = net.flat_params();
    let shifted = |sign: f64| {
        let mut n = net.clone();
        for (i, (w, d)) in base.iter().zip(u).enumerate() {
            n.set_flat_param(i, w + sign * FD_EPS * d);
        }
        loss_at(&n, x, t)
    };
    let numeric = (shifted(1.0) - shifted(-1.0)) / (2.0 * FD_EPS);
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs())
}

/// Largest coordinate-wise gap between analytic and central-difference
/// gradients, relative to the largest gradient component.
fn coordinate_error(net: &Network, x: &[f64], t: &[f64]) -> f64 {
    let (grad, _) = net.gradient(x, t).unwrap();
    let analytic = grad.flat();
    let base = net.flat_params();
    let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut worst: f64 = 0.0;
    for (i, a) in analytic.iter().enumerate() {
        let mut plus = net.clone();
        plus.set_flat_param(i, base[i] + FD_EPS);
        let mut minus = net.clone();
        minus.set_flat_param(i, base[i] - FD_EPS);
        let numeric = (loss_at(&plus, x, t) - loss_at(&minus, x, t)) / (2.0 * FD_EPS);
        worst = worst.max((a - numeric).abs() / scale);
    }
    worst
}

fn unit_direction(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
        .prop_filter("non-zero direction", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(|v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
}

fn network(dims: Dims, spread: f64) -> impl Strategy<Value = Network> {
    let n1 = dims.hidden * dims.input;
    let n2 = dims.output * dims.hidden;
    (
        prop::collection::vec(-spread..spread, n1),
        prop::collection::vec(-spread..spread, dims.hidden),
        prop::collection::vec(-spread..spread, n2),
        prop::collection::vec(-spread..spread, dims.output),
    )
        .prop_map(move |(w1, b1, w2, b2)| Network::from_parts(dims, w1, b1, w2, b2).unwrap())
}

proptest! {
    #![proptest_config(cases())]

    fn directional_derivative_matches_finite_differences(
        seed in any::<u64>(),
        x in prop::collection::vec(0.0..=1.0f64, 5),
        class in 0usize..2,
        u in unit_direction(26),
    ) {
        let net = Network::init_with_dims(SMALL, seed);
        let t = one_hot(ClassId(class), 2).unwrap();
        let err = directional_error(&net, &x, &t, &u);
        prop_assert!(err < 1e-6, "relative error {}", err);
    }

    fn gradient_components_match_finite_differences(
        seed in any::<u64>(),
        x in prop::collection::vec(0.0..=1.0f64, 5),
        class in 0usize..2,
    ) {
        let net = Network::init_with_dims(SMALL, seed);
        let t = one_hot(ClassId(class), 2).unwrap();
        let err = coordinate_error(&net, &x, &t);
        prop_assert!(err < 1e-6, "relative error {}", err);
    }

    fn small_step_lowers_the_loss(seed in any::<u64>(), x in prop::collection::vec(0.0..=1.0f64, N_BINS), class in 0usize..45) {
        let net = Network::init(seed);
        let t = one_hot(ClassId(class), 45).unwrap();
        let before = loss_at(&net, &x, &t);
        let mut next = net.clone();
        let mut v = Params::zeros(Dims::SPECTRAL);
        next.backprop_step(&x, &t, 1e-4, 0.0, &mut v).unwrap();
        prop_assert!(loss_at(&next, &x, &t) < before);
    }

    fn activations_stay_inside_the_unit_interval(
        net in network(Dims::new(6, 4, 5), 50.0),
        x in prop::collection::vec(-1e3..1e3f64, 6),
    ) {
        let a = net.forward(&x).unwrap();
        for v in a.hidden.iter().chain(&a.output) {
            prop_assert!(*v > 0.0 && *v < 1.0, "{}", v);
        }
        let r = net.classify(&x).unwrap();
        prop_assert!(r.margin >= 0.0);
    }

    fn sigmoid_argmax_is_preactivation_argmax(
        net in network(Dims::new(4, 3, 7), 2.0),
        x in prop::collection::vec(0.0..=1.0f64, 4),
        shift in -10.0..10.0f64,
    ) {
        let d = net.dims();
        let b2: Vec<f64> = net.b2().iter().map(|b| b + shift).collect();
        let shifted = Network::from_parts(d, net.w1().to_vec(), net.b1().to_vec(), net.w2().to_vec(), b2.clone()).unwrap();
        let hidden = shifted.forward(&x).unwrap().hidden;
        let z: Vec<f64> = (0..d.output)
            .map(|k| shifted.w2()[k * d.hidden..(k + 1) * d.hidden].iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + b2[k])
            .collect();
        let mut best = 0;
        for (k, v) in z.iter().enumerate() {
            if *v > z[best] {
                best = k;
            }
        }
        prop_assert_eq!(shifted.classify(&x).unwrap().label, ClassId(best));
        prop_assert_eq!(shifted.forward(&x).unwrap().output[best], sigmoid(z[best]));
    }

    fn grid_values_are_reward_means(
        n_cells in 1usize..=12,
        stream in prop::collection::vec((0usize..12, -1.0..1.0f64), 0..200),
    ) {
        let cells = vec![HyperCell { learning_rate: 0.1, momentum: 0.0 }; n_cells];
        let mut grid = HyperGrid::new(cells, 0.1).unwrap();
        let mut sums = vec![0.0; n_cells];
        let mut counts = vec![0u64; n_cells];
        for (cell, reward) in stream {
            let cell = cell % n_cells;
            let before: Vec<f64> = grid.values().to_vec();
            grid.update(cell, reward);
            sums[cell] += reward;
            counts[cell] += 1;
            for j in (0..n_cells).filter(|&j| j != cell) {
                prop_assert_eq!(grid.values()[j], before[j]);
            }
        }
        prop_assert_eq!(grid.visits(), counts.as_slice());
        for c in 0..n_cells {
            if counts[c] > 0 {
                let mean = sums[c] / counts[c] as f64;
                prop_assert!((grid.values()[c] - mean).abs() <= 1e-12, "{} vs {}", grid.values()[c], mean);
            }
        }
    }

    fn selection_is_deterministic_and_in_range(
        values in prop::collection::vec(-1.0..1.0f64, 1..12),
        eps in 0.0..=1.0f64,
        seed in any::<u64>(),
    ) {
        let n = values.len();
        let cells = vec![HyperCell { learning_rate: 0.1, momentum: 0.5 }; n];
        let grid = HyperGrid::with_state(cells, eps, values.clone(), vec![1; n]).unwrap();
        let i = grid.select(seed);
        prop_assert!(i < n);
        prop_assert_eq!(i, grid.select(seed));
        if eps == 0.0 {
            let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(i, values.iter().position(|v| *v == top).unwrap());
        }
    }
}

/// Lists the properties for runners without libtest and registers each as
/// a `#[test]`.
macro_rules! suite {
    ($($name:ident),* $(,)?) => {
        #[allow(dead_code)]
        pub const SUITE: &[(&str, fn())] = &[$((stringify!($name), $name)),*];

        #[cfg(test)]
        mod libtest {
            $(#[test] fn $name() { super::$name() })*
        }
    };
}

suite!(
    directional_derivative_matches_finite_differences,
    gradient_components_match_finite_differences,
    small_step_lowers_the_loss,
    activations_stay_inside_the_unit_interval,
    sigmoid_argmax_is_preactivation_argmax,
    grid_values_are_reward_means,
    selection_is_deterministic_and_in_range,
);
