use approx::assert_relative_eq;

use mmw_discovery::beamformers::optimal_gain;
use mmw_discovery::channel::{build_channel, sample_scenario, ArrayGeometry, DEFAULT_FOV_DEG};
use mmw_discovery::numerics::{to_db, ComplexMatrix, C64};
use mmw_discovery::power_iter::{
    noiseless_closed_form, partition_budget, run_noisy, InitialTx, PowerIterConfig,
};
use mmw_discovery::rng::trial_rng;

fn channel(seed: u64, i: u64, l: usize) -> ComplexMatrix {
    let s = sample_scenario(
        &mut trial_rng(seed, i),
        l,
        ArrayGeometry::ula(4),
        ArrayGeometry::ula(64),
        DEFAULT_FOV_DEG,
        0.0,
        0.0,
    )
    .unwrap();
    build_channel(&s).unwrap().h
}

fn noiseless(n_iter: usize) -> PowerIterConfig {
    PowerIterConfig::new(2 * n_iter, 1, f64::INFINITY, f64::INFINITY)
}

#[test]
fn one_step_on_a_diagonal_channel() {
    let h = ComplexMatrix::from_diag(&[2.0, 1.0]);
    let mut cfg = noiseless(1);
    cfg.initial_tx = InitialTx::Fixed(vec![[1.0, 0.0], [1.0, 0.0]]);
    let t = run_noisy(&h, &cfg, &mut trial_rng(0, 0)).unwrap();
    let s = 17f64.sqrt();
    assert!((t.tx[0].weights()[0] - C64::new(4.0 / s, 0.0)).norm() < 1e-15);
    assert!((t.tx[0].weights()[1] - C64::new(1.0 / s, 0.0)).norm() < 1e-15);
}

#[test]
fn noiseless_iterates_follow_the_matrix_power() {
    for i in 0..50 {
        let h = channel(1, i, 3);
        let mut cfg = noiseless(20);
        let mut rng = trial_rng(2, i);
        let f0 = mmw_discovery::rng::unit_vector(&mut rng, 64);
        cfg.initial_tx = InitialTx::Fixed(f0.iter().map(|z| [z.re, z.im]).collect());
        let t = run_noisy(&h, &cfg, &mut rng).unwrap();
        let closed = noiseless_closed_form(&h, &f0, 20).unwrap();
        for (it, want) in t.tx.iter().zip(&closed) {
            for (a, b) in it.weights().iter().zip(want) {
                assert!((a - b).norm() < 1e-10);
            }
        }
        assert!(t.rayleigh.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    }
}

#[test]
fn noiseless_run_converges_to_the_optimum() {
    let h = ComplexMatrix::from_diag(&[1.1, 1.0, 0.5]);
    let mut cfg = noiseless(50);
    cfg.initial_tx = InitialTx::Fixed(vec![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]);
    let t = run_noisy(&h, &cfg, &mut trial_rng(0, 0)).unwrap();
    assert!(t.final_loss_db() < to_db(1.0 + 1e-6));
    assert_relative_eq!(
        *t.rayleigh.last().unwrap(),
        optimal_gain(&h).unwrap(),
        max_relative = 1e-6
    );
}

#[test]
fn trace_csv_has_one_row_per_iteration() {
    let h = channel(3, 0, 2);
    let t = run_noisy(
        &h,
        &PowerIterConfig::new(256, 8, -10.0, -10.0),
        &mut trial_rng(3, 1),
    )
    .unwrap();
    assert_eq!(t.n_iter(), 16);
    let mut out = Vec::new();
    t.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.starts_with("iteration,rayleigh_quotient,snr_loss_db"));
    assert!(t.loss_db.iter().all(|&l| l >= -1e-9));
}

#[test]
fn noisy_runs_are_reproducible() {
    let h = channel(4, 0, 2);
    let cfg = PowerIterConfig::new(256, 4, -25.0, -25.0);
    let a = run_noisy(&h, &cfg, &mut trial_rng(4, 1)).unwrap();
    let b = run_noisy(&h, &cfg, &mut trial_rng(4, 1)).unwrap();
    assert_eq!(a.loss_db, b.loss_db);
}

#[test]
fn averaging_helps_at_low_snr() {
    let median_loss = |n_noise_avg| {
        let mut v: Vec<f64> = (0..300)
            .map(|i| {
                let h = channel(5, i, 2);
                let cfg = PowerIterConfig::new(256, n_noise_avg, -25.0, -25.0);
                run_noisy(&h, &cfg, &mut trial_rng(6, i))
                    .unwrap()
                    .final_loss_db()
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    assert!(median_loss(64) <= median_loss(4));
}

#[test]
fn budget_partitions_and_validation() {
    let p = partition_budget(256);
    for n_noi in [4, 8, 16, 32, 64] {
        assert!(p.contains(&(n_noi, 128 / n_noi)));
    }
    assert_eq!(partition_budget(2), vec![(1, 1)]);
    assert!(partition_budget(0).is_empty());
    assert!(PowerIterConfig::new(256, 3, 0.0, 0.0).n_iter().is_err());
    let h = channel(7, 0, 1);
    let bad = PowerIterConfig::new(256, 8, f64::NAN, 0.0);
    assert!(run_noisy(&h, &bad, &mut trial_rng(0, 0)).is_err());
    assert!(run_noisy(
        &ComplexMatrix::zeros(4, 8),
        &noiseless(1),
        &mut trial_rng(0, 0)
    )
    .is_err());
}
