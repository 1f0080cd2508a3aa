use std::f64::consts::{PI, TAU};

use approx::assert_relative_eq;

use mmw_discovery::beambook::{
    array_factor, beam_sweep, build_codebook, construct_broad_beam, default_j_max, fov_beamspace,
    optimize_broad_beam, parseval_bound, parseval_energy, pattern_gain, thm3_bound,
    thm3_j2_closed_form, tradeoff_table, worst_case_gain, write_pattern_csv, write_tradeoff_csv,
    BeamspaceInterval, BroadBeamSpec, CodebookSide, SweepCodebook, Thm3Grid, DEFAULT_GRID_PTS,
};
use mmw_discovery::beamformers::{beamforming_gain, Beamformer};
use mmw_discovery::channel::{
    beamspace_vector, build_channel, ArrayGeometry, PathCluster, Scenario, DEFAULT_FOV_DEG,
};
use mmw_discovery::numerics::{to_db, vector, C64};
use mmw_discovery::rng::{complex_normal_vec, trial_rng};

const N: usize = 64;

fn fov_width() -> f64 {
    PI * 3f64.sqrt()
}

fn cpo(omega: f64) -> Vec<C64> {
    beamspace_vector(N, omega)
}

#[test]
fn array_factor_examples() {
    assert_relative_eq!(pattern_gain(&cpo(0.7), 0.7), 64.0, max_relative = 1e-12);
    let ones = cpo(0.0);
    assert!(array_factor(&ones, TAU / 64.0).norm() < 1e-12);
    // Matches the direct sum away from the recurrence anchors.
    let f = complex_normal_vec(&mut trial_rng(1, 0), 100, 1.0);
    let w = 1.234;
    let direct: C64 = f
        .iter()
        .enumerate()
        .map(|(n, x)| x * C64::from_polar(1.0, -w * n as f64))
        .sum();
    assert!((array_factor(&f, w) - direct).norm() < 1e-12 * direct.norm().max(1.0));
}

#[test]
fn parseval_identity_holds_by_quadrature() {
    for i in 0..20 {
        let f = vector::normalized(&complex_normal_vec(&mut trial_rng(2, i), N, 1.0)).unwrap();
        assert!((parseval_energy(&f, 4096) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn cpo_worst_case_over_one_bin() {
    let f = cpo(0.0);
    let iv = BeamspaceInterval::new(0.0, TAU / 64.0).unwrap();
    let d: C64 = (0..N)
        .map(|n| C64::from_polar(1.0, PI / 64.0 * n as f64))
        .sum();
    let want = d.norm_sqr() / 64.0;
    assert_relative_eq!(
        worst_case_gain(&f, &iv, DEFAULT_GRID_PTS).unwrap(),
        want,
        max_relative = 1e-12
    );
    let point = BeamspaceInterval::new(0.0, 0.0).unwrap();
    assert_relative_eq!(
        worst_case_gain(&f, &point, DEFAULT_GRID_PTS).unwrap(),
        64.0,
        max_relative = 1e-12
    );
    assert!(worst_case_gain(&f, &iv, 32).is_err());
    assert!(BeamspaceInterval::new(3.0, 1.0).is_err());
    assert!(BeamspaceInterval::new(0.0, -0.1).is_err());
}

#[test]
fn refining_the_grid_barely_moves_the_minimum() {
    for (i, m) in [2u8, 3, 4].into_iter().enumerate() {
        let omega0 = fov_width() / (8 + 8 * i) as f64;
        let b = optimize_broad_beam(N, m, omega0).unwrap();
        let f = construct_broad_beam(N, &b.spec).unwrap();
        let iv = BeamspaceInterval::new(0.0, omega0).unwrap();
        let coarse = worst_case_gain(f.weights(), &iv, 1024).unwrap();
        let fine = worst_case_gain(f.weights(), &iv, 2048).unwrap();
        assert!((coarse - fine).abs() <= 0.01 * coarse, "M={m}");
        assert_relative_eq!(coarse, b.gain, max_relative = 1e-9);
    }
}

#[test]
fn parseval_bound_examples() {
    assert_relative_eq!(
        parseval_bound(N, fov_width(), 16).unwrap(),
        to_db(32.0 / 3f64.sqrt()),
        epsilon = 1e-12
    );
    assert_relative_eq!(
        parseval_bound(N, fov_width(), 1000).unwrap(),
        to_db(64.0),
        epsilon = 1e-12
    );
    assert!(parseval_bound(N, TAU, 1).unwrap().abs() < 1e-12);
    assert!(parseval_bound(N, fov_width(), 0).is_err());
}

#[test]
fn thm3_examples() {
    let g = Thm3Grid::default();
    assert_relative_eq!(
        thm3_bound(N, TAU / 64.0, 8, g).unwrap(),
        to_db(32.0),
        epsilon = 1e-9
    );
    assert_relative_eq!(
        thm3_j2_closed_form(N, TAU / 64.0),
        to_db(32.0),
        epsilon = 1e-12
    );
    let tiny = thm3_bound(N, 1e-6, 8, g).unwrap();
    assert!((tiny - to_db(64.0)).abs() < 1e-6);
    assert!(thm3_bound(N, 0.1, 1, g).is_err());
    // The searched bound is never looser than the two-point closed form.
    for k in 1..20 {
        let w = 0.05 * k as f64;
        assert!(
            thm3_bound(N, w, default_j_max(N, w), g).unwrap() <= thm3_j2_closed_form(N, w) + 1e-9
        );
    }
}

#[test]
fn bound_ordering_over_omega0() {
    let g = Thm3Grid::default();
    // Up to the widest interval a codebook of 8 beams uses.
    let widest = fov_width() / 8.0;
    for k in 0..50 {
        let omega0 = 0.02 + k as f64 * (widest - 0.02) / 49.0;
        let thm3 = thm3_bound(N, omega0, default_j_max(N, omega0), g).unwrap();
        let parseval = parseval_bound(N, omega0, 1).unwrap();
        let achieved = optimize_broad_beam(N, 4, omega0).unwrap().gain_db;
        assert!(
            achieved <= thm3 + 1e-9,
            "omega0 {omega0}: {achieved} > {thm3}"
        );
        assert!(
            thm3 <= parseval + 1e-9,
            "omega0 {omega0}: {thm3} > {parseval}"
        );
    }
}

#[test]
fn broad_beam_reductions() {
    let ones = construct_broad_beam(
        N,
        &BroadBeamSpec {
            m: 2,
            f_param: 0.0,
            delta_f: 0.0,
            mid_len: 0,
        },
    )
    .unwrap();
    let want = 1.0 / 8.0;
    assert!(ones
        .weights()
        .iter()
        .all(|z| (z - C64::new(want, 0.0)).norm() < 1e-12));

    let close = |a: &Beamformer, b: &Beamformer| {
        a.weights()
            .iter()
            .zip(b.weights())
            .all(|(x, y)| (x - y).norm() < 1e-12)
    };
    for sf in [0.0, 0.75, 2.5] {
        let m2 = construct_broad_beam(
            N,
            &BroadBeamSpec {
                m: 2,
                f_param: sf,
                delta_f: 0.0,
                mid_len: 0,
            },
        )
        .unwrap();
        let m3 = construct_broad_beam(
            N,
            &BroadBeamSpec {
                m: 3,
                f_param: sf,
                delta_f: 0.0,
                mid_len: 0,
            },
        )
        .unwrap();
        let m4 = construct_broad_beam(
            N,
            &BroadBeamSpec {
                m: 4,
                f_param: sf,
                delta_f: 1.5,
                mid_len: 32,
            },
        )
        .unwrap();
        assert!(close(&m2, &m3) && close(&m2, &m4), "sf {sf}");
    }
    assert!(construct_broad_beam(
        N,
        &BroadBeamSpec {
            m: 4,
            f_param: 0.0,
            delta_f: 0.0,
            mid_len: 33
        }
    )
    .is_err());
    assert!(construct_broad_beam(
        N,
        &BroadBeamSpec {
            m: 5,
            ..BroadBeamSpec::cpo()
        }
    )
    .is_err());
}

#[test]
fn narrow_targets_keep_the_broadside_beam() {
    for omega0 in [TAU / 64.0, TAU / 128.0, 0.01] {
        for m in [2u8, 3, 4] {
            let b = optimize_broad_beam(N, m, omega0).unwrap();
            assert_eq!(b.spec.f_param, 0.0, "M={m} omega0={omega0}");
        }
    }
}

fn two_subarray_worst_case(sf: f64, omega0: f64) -> f64 {
    let spec = BroadBeamSpec {
        m: 2,
        f_param: sf,
        delta_f: 0.0,
        mid_len: 0,
    };
    let f = construct_broad_beam(N, &spec).unwrap();
    let iv = BeamspaceInterval::new(0.0, omega0).unwrap();
    worst_case_gain(f.weights(), &iv, DEFAULT_GRID_PTS).unwrap()
}

#[test]
fn two_subarray_optimum_maximizes_the_worst_case() {
    for ratio in [1.3, 2.0, 3.5] {
        let omega0 = ratio * TAU / 64.0;
        let b = optimize_broad_beam(N, 2, omega0).unwrap();
        let scan = |step: f64, n: usize| {
            (0..=n)
                .map(|i| two_subarray_worst_case(i as f64 * step, omega0))
                .fold(0.0, f64::max)
        };
        let on_grid = scan(0.05, 60);
        assert!(
            b.gain >= on_grid * (1.0 - 1e-12),
            "ratio {ratio}: {} vs {on_grid}",
            b.gain
        );
        // The 0.05 step can straddle a sharp edge-limited peak.
        let fine = scan(0.005, 600);
        assert!(
            to_db(fine / b.gain) < 0.2,
            "ratio {ratio}: {} vs {fine}",
            b.gain
        );

        let f = construct_broad_beam(N, &b.spec).unwrap();
        let edge = pattern_gain(f.weights(), omega0 / 2.0);
        assert_relative_eq!(
            pattern_gain(f.weights(), -omega0 / 2.0),
            edge,
            max_relative = 1e-9
        );
        let at_edges = (b.gain - edge).abs() <= 1e-9 * edge;
        // At ratio 2 the pattern dips inside the interval below its edge value
        // for every offset, so the maximin sits at the dip rather than the edges.
        assert_eq!(
            at_edges,
            ratio != 2.0,
            "ratio {ratio}: worst {} edge {edge}",
            b.gain
        );
    }
}

#[test]
fn gain_table_is_consistent() {
    let sizes = [8, 16, 32, 64];
    let rows = tradeoff_table(N, fov_width(), &sizes, 4).unwrap();
    for r in &rows {
        assert!(r.achieved_db <= r.thm3_db + 1e-9 && r.thm3_db <= r.parseval_db + 1e-9);
    }
    assert!(rows
        .windows(2)
        .all(|w| w[1].achieved_db >= w[0].achieved_db));
    let mut out = Vec::new();
    write_tradeoff_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("n_beams,parseval_db,thm3_db,achieved_db"));
}

#[test]
fn pattern_csv_peaks_at_broadside() {
    let mut out = Vec::new();
    write_pattern_csv(&cpo(0.0), -PI, PI, 1001, &mut out).unwrap();
    let mut rdr = csv::Reader::from_reader(out.as_slice());
    let rows: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    let (w, g) = rows.iter().cloned().fold(
        (0.0, f64::NEG_INFINITY),
        |a, b| if b.1 > a.1 { b } else { a },
    );
    assert!(w.abs() < 1e-12);
    assert_relative_eq!(g, to_db(64.0), epsilon = 1e-9);
}

#[test]
fn codebooks_tile_the_field_of_view() {
    let geom = ArrayGeometry::ula(N);
    let book = build_codebook(&geom, DEFAULT_FOV_DEG, 16, 4, CodebookSide::Mwb).unwrap();
    assert_eq!(book.len(), 16);
    let (lo, hi) = fov_beamspace(&geom, DEFAULT_FOV_DEG);
    assert_relative_eq!(hi - lo, fov_width(), epsilon = 1e-12);
    assert_relative_eq!(book.intervals[0].lo(), lo, epsilon = 1e-12);
    assert_relative_eq!(book.intervals[15].hi(), hi, epsilon = 1e-12);
    for w in book.intervals.windows(2) {
        assert!((w[0].hi() - w[1].lo()).abs() < 1e-12);
    }
    for b in &book.beams {
        assert!(b.weights().iter().all(|z| (z.norm() - 0.125).abs() < 1e-12));
    }

    let ue = build_codebook(
        &ArrayGeometry::ula(4),
        DEFAULT_FOV_DEG,
        4,
        1,
        CodebookSide::Ue,
    )
    .unwrap();
    assert_eq!(ue.template, BroadBeamSpec::cpo());
    let back = SweepCodebook::from_json(&ue.to_json().unwrap()).unwrap();
    assert_eq!(back.len(), 4);
    assert!(build_codebook(&geom, DEFAULT_FOV_DEG, 0, 4, CodebookSide::Mwb).is_err());
}

fn single_path(aoa_omega: f64, aod_omega: f64) -> Scenario {
    // Beamspace coordinate to angle at half-wavelength spacing.
    let deg = |w: f64| (w / PI).acos().to_degrees();
    Scenario {
        rx: ArrayGeometry::ula(4),
        tx: ArrayGeometry::ula(N),
        paths: vec![PathCluster {
            gain: C64::new(1.0, 0.0),
            aoa_deg: deg(aoa_omega),
            aod_deg: deg(aod_omega),
        }],
        fov_deg: DEFAULT_FOV_DEG,
        rho_forward_db: 300.0,
        rho_reverse_db: 300.0,
    }
}

#[test]
fn noiseless_sweep_picks_the_best_pair() {
    let mwb = build_codebook(
        &ArrayGeometry::ula(N),
        DEFAULT_FOV_DEG,
        16,
        4,
        CodebookSide::Mwb,
    )
    .unwrap();
    let ue = build_codebook(
        &ArrayGeometry::ula(4),
        DEFAULT_FOV_DEG,
        4,
        1,
        CodebookSide::Ue,
    )
    .unwrap();

    // A path at the centers of MWB beam 5 and UE beam 2.
    let s = single_path(ue.intervals[2].center, mwb.intervals[5].center);
    let h = build_channel(&s).unwrap();
    let out = beam_sweep(&h.h, &mwb, &ue, 300.0, 1, &mut trial_rng(3, 0)).unwrap();
    assert_eq!((out.mwb_index, out.ue_index), (5, 2));
    assert_eq!(out.latency_samples, 64);

    for i in 0..20 {
        let s = mmw_discovery::channel::sample_scenario(
            &mut trial_rng(4, i),
            2,
            ArrayGeometry::ula(4),
            ArrayGeometry::ula(N),
            DEFAULT_FOV_DEG,
            300.0,
            300.0,
        )
        .unwrap();
        let h = build_channel(&s).unwrap();
        let out = beam_sweep(&h.h, &mwb, &ue, 300.0, 2, &mut trial_rng(5, i)).unwrap();
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (a, f) in mwb.beams.iter().enumerate() {
            for (b, g) in ue.beams.iter().enumerate() {
                let v = beamforming_gain(&h.h, f.weights(), g.weights()).unwrap();
                if v > best.2 {
                    best = (a, b, v);
                }
            }
        }
        assert_eq!((out.mwb_index, out.ue_index), (best.0, best.1), "draw {i}");
    }
    assert!(beam_sweep(&h.h, &ue, &mwb, 0.0, 1, &mut trial_rng(0, 0)).is_err());
}
