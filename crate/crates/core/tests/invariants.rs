use pnc_core::baselines::{bitwise_llr, bits_label, label_bits, QamConstellation};
use pnc_core::channel::{ChannelKind, ComplexCoef, GaussianRng};
use pnc_core::evaluation::{evaluate_model, gmi_from_llrs, sum_rate_from_loss};
use pnc_core::mlp::gradcheck::Weighted;
use pnc_core::mlp::{grad_check, ActivationKind, AdamState, Matrix, MlpNetwork};
use pnc_core::persist::{load_system, save_system};
use pnc_core::system::{bce_loss, Batch, CsiMode, SystemConfig, TwoWaySystem};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = GaussianRng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.standard_normal()).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn activation() -> impl Strategy<Value = ActivationKind> {
    prop::sample::select(vec![ActivationKind::Tanh, ActivationKind::Sigmoid, ActivationKind::Linear])
}

fn csi_mode() -> impl Strategy<Value = CsiMode> {
    prop::sample::select(vec![CsiMode::NoCsi, CsiMode::PerfectCsi, CsiMode::IdealRelay])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn smooth_nets_pass_grad_check(
        d0 in 1usize..=8, d1 in 1usize..=8, d2 in 1usize..=8,
        rows in 2usize..=8, act in activation(), norm in any::<bool>(), seed in any::<u64>(),
    ) {
        let mut net = MlpNetwork::init(&[d0, d1, d2], &[act, ActivationKind::Linear], seed).unwrap();
        if norm {
            net = net.with_power_norm();
        }
        let x = matrix(rows, d0, seed ^ 1);
        let w = matrix(rows, d2, seed ^ 2);
        let err = grad_check(&net, &x, &Weighted(w), 1e-5).unwrap();
        prop_assert!(err < 1e-4, "{err:e}");
    }

    #[test]
    fn power_norm_gives_unit_mean_energy(rows in 1usize..=16, cols in 1usize..=4, seed in any::<u64>()) {
        let net = MlpNetwork::init(&[3, cols], &[ActivationKind::Linear], seed).unwrap().with_power_norm();
        let y = net.predict(&matrix(rows, 3, seed)).unwrap();
        prop_assume!(y.data().iter().any(|v| *v != 0.0));
        prop_assert!((y.mean_row_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_is_nonnegative_and_rate_bounded(k in prop::sample::select(vec![1usize, 2, 4]), rows in 1usize..=8, seed in any::<u64>()) {
        let logits = matrix(rows, k, seed).map(|v| 20.0 * v);
        let bits = matrix(rows, k, seed ^ 7).map(|v| f64::from(v > 0.0));
        let loss = bce_loss(&logits, &bits).unwrap();
        prop_assert!(loss >= 0.0);
        let rate = sum_rate_from_loss(k, loss);
        prop_assert!((0.0..=2.0 * k as f64).contains(&rate));
        prop_assert!(sum_rate_from_loss(k, loss + 0.01) <= rate);
    }

    #[test]
    fn gmi_is_at_most_one(rows in 1usize..=8, seed in any::<u64>()) {
        let llrs = matrix(rows, 2, seed).map(|v| 5.0 * v);
        let bits = matrix(rows, 2, seed ^ 3).map(|v| f64::from(v > 0.0));
        prop_assert!(gmi_from_llrs(&llrs, &bits).unwrap() <= 1.0);
    }

    #[test]
    fn label_bits_round_trip(k in prop::sample::select(vec![1usize, 2, 4]), label in 0usize..16) {
        let label = label % (1 << k);
        prop_assert_eq!(bits_label(&label_bits(label, k)), label);
    }

    #[test]
    fn noiseless_llr_signs_match_bits(
        k in prop::sample::select(vec![2usize, 4]), label in 0usize..16, re in -2.0f64..2.0, im in -2.0f64..2.0,
    ) {
        prop_assume!(re * re + im * im > 0.1);
        let c = QamConstellation::new(k).unwrap();
        let label = label % (1 << k);
        let h = ComplexCoef::new(re, im);
        let x = c.points()[label];
        let y = ComplexCoef::new(h.re * x.re - h.im * x.im, h.re * x.im + h.im * x.re);
        let llr = bitwise_llr(y, h, 0.01, &c);
        for (l, b) in llr.iter().zip(label_bits(label, k)) {
            prop_assert!(if b == 0 { *l > 0.0 } else { *l < 0.0 }, "{llr:?}");
        }
    }

    #[test]
    fn end_to_end_loss_is_finite(k in prop::sample::select(vec![1usize, 2, 4]), mode in csi_mode(), seed in any::<u64>()) {
        let sys = TwoWaySystem::new(SystemConfig {
            k_bits: k,
            hidden_sizes: vec![8],
            csi_mode: mode,
            minibatch: 8,
            seed,
            ..SystemConfig::desk_scale(k)
        })
        .unwrap();
        let mut rng = GaussianRng::seed_from_u64(seed);
        let noise = pnc_core::channel::NoiseSpec::from_snr_db(5.0).unwrap();
        let batch = Batch::sample(k, 8, ChannelKind::BlockRayleigh, noise, &mut rng);
        let pass = sys.forward_end_to_end(&batch).unwrap();
        prop_assert!(pass.loss.is_finite() && pass.loss >= 0.0);
    }
}

#[test]
fn adam_is_deterministic() {
    let run = || {
        let mut net = MlpNetwork::init(&[3, 4, 2], &[ActivationKind::Tanh, ActivationKind::Linear], 5).unwrap();
        let mut adam = AdamState::new(&net, 1e-3);
        let x = matrix(6, 3, 1);
        for _ in 0..10 {
            let cache = net.forward(&x).unwrap();
            let (g, _) = net.backward(&cache, &cache.output().clone()).unwrap();
            adam.step(&mut net, &g).unwrap();
        }
        net.params().concat()
    };
    assert_eq!(run(), run());
}

#[test]
fn saved_system_evaluates_identically() {
    let mut sys = TwoWaySystem::new(SystemConfig {
        hidden_sizes: vec![8],
        csi_mode: CsiMode::PerfectCsi,
        ..SystemConfig::desk_scale(2)
    })
    .unwrap();
    sys.calibrate(ChannelKind::Awgn, 5.0, &mut GaussianRng::seed_from_u64(0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_system(&sys, dir.path()).unwrap();
    let loaded = load_system(dir.path()).unwrap();
    let a = evaluate_model(&sys, ChannelKind::Awgn, &[0.0, 5.0], 2000, 3).unwrap();
    let b = evaluate_model(&loaded, ChannelKind::Awgn, &[0.0, 5.0], 2000, 3).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn evaluation_at_one_snr_ignores_the_rest_of_the_grid() {
    let sys = TwoWaySystem::new(SystemConfig { hidden_sizes: vec![8], ..SystemConfig::desk_scale(2) }).unwrap();
    let single = evaluate_model(&sys, ChannelKind::BlockRayleigh, &[5.0], 2000, 4).unwrap();
    let grid = evaluate_model(&sys, ChannelKind::BlockRayleigh, &[0.0, 5.0, 10.0], 2000, 4).unwrap();
    assert_eq!(single.rate_at(5.0), grid.rate_at(5.0));
}
