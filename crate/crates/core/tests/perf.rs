use ncwishart::*;

const SIGMAS: [f64; 3] = [2.9751, 2.2840, 0.9657];

fn db(v: f64) -> f64 {
    10f64.powf(v / 10.0)
}

fn fig3_system() -> MbSystem {
    MbSystem::new(RiceanChannel::from_singulars(3, 5, 1.0, &SIGMAS, 1).unwrap()).unwrap()
}

#[test]
fn ser_curves_ordered_and_decreasing() {
    let sys = fig3_system();
    let cfgs: Vec<MbConfig> = (0..=8)
        .map(|i| MbConfig::uniform(3, db(5.0 * f64::from(i)), Modulation::bpsk()).unwrap())
        .collect();
    let pts = sys.ser_sweep(&cfgs).unwrap();
    for w in pts.windows(2) {
        for k in 0..3 {
            assert!(w[1].subchannels[k] <= w[0].subchannels[k]);
        }
        assert!(w[1].global <= w[0].global);
    }
    for p in &pts {
        assert!(p.subchannels.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(p.subchannels.windows(2).all(|w| w[0] <= w[1]), "{:?}", p.subchannels);
    }
}

#[test]
fn single_subchannel_global_is_bit_exact() {
    let sys = fig3_system();
    let cfg = MbConfig::uniform(1, db(12.0), Modulation::psk(8).unwrap()).unwrap();
    assert_eq!(sys.ser_global(&cfg).unwrap(), sys.ser_subchannel(&cfg, 1).unwrap());
}

#[test]
fn equal_subchannels_average_to_themselves() {
    // s = 1 repeated: one subchannel, global equals it
    let sys = MbSystem::new(RiceanChannel::rayleigh(1, 4).unwrap()).unwrap();
    let cfg = MbConfig::uniform(1, 3.0, Modulation::bfsk()).unwrap();
    let p = sys.ser_point(&cfg).unwrap();
    assert_eq!(p.global, p.subchannels[0]);
}

#[test]
fn high_snr_line_is_tangent() {
    let sys = fig3_system();
    let cfg = MbConfig::uniform(3, db(35.0), Modulation::bpsk()).unwrap();
    for k in 1..=3 {
        let r = sys.ser_high_snr(&cfg, k).unwrap() / sys.ser_subchannel(&cfg, k).unwrap();
        assert!((0.8..=1.25).contains(&r), "k = {k}: {r}");
    }
    let g = sys.ser_global_high_snr(&cfg).unwrap();
    assert!((g - sys.ser_high_snr(&cfg, 3).unwrap() / 3.0).abs() <= 1e-15 * g);
}

#[test]
fn high_snr_slope_is_diversity_order() {
    let sys = fig3_system();
    for k in 1..=3 {
        let a = sys.ser_high_snr(&MbConfig::uniform(3, 1e3, Modulation::bpsk()).unwrap(), k).unwrap();
        let b = sys.ser_high_snr(&MbConfig::uniform(3, 1e4, Modulation::bpsk()).unwrap(), k).unwrap();
        let slope = (b.log10() - a.log10()) / 1.0;
        let gd = f64::from(diversity_order(sys.spec(), k).unwrap());
        assert!((slope + gd).abs() < 1e-10);
    }
}

#[test]
fn global_ser_dominated_by_weakest_subchannel() {
    let sys = fig3_system();
    let mut checked = 0;
    for p_db in (20..=45).step_by(5) {
        let cfg = MbConfig::uniform(3, db(f64::from(p_db)), Modulation::bpsk()).unwrap();
        let exact = sys.ser_global(&cfg).unwrap();
        if exact < 1e-6 {
            let approx = sys.ser_global_high_snr(&cfg).unwrap();
            assert!((exact.log10() - approx.log10()).abs() < 0.1, "{p_db} dB");
            checked += 1;
        }
    }
    assert!(checked >= 3);
}

#[test]
fn asymptotic_outage_approaches_exact_deep_in_the_tail() {
    let sys = fig3_system();
    let mut prev = f64::INFINITY;
    // below x ≈ 1e-4 the largest-eigenvalue determinant itself cancels
    for g in [1e-2, 1e-3, 1e-4] {
        let r = sys.outage_asymptotic(1.0, g).unwrap() / sys.outage(1, 1.0, g).unwrap();
        assert!((r - 1.0).abs() < prev);
        prev = (r - 1.0).abs();
    }
    assert!(prev < 1e-3, "{prev}");
}

#[test]
fn outage_vanishes_with_threshold() {
    let sys = fig3_system();
    assert_eq!(sys.outage(1, 1.0, 0.0).unwrap(), 0.0);
    assert!(sys.outage(1, 1.0, 1e-6).unwrap() < 1e-80);
    assert!(sys.outage(2, 1.0, -1.0).is_err());
}

#[test]
fn rank_beyond_dimension_rejected() {
    let sys = MbSystem::new(RiceanChannel::rayleigh(2, 2).unwrap()).unwrap();
    let cfg = MbConfig::uniform(3, 10.0, Modulation::bpsk()).unwrap();
    assert!(matches!(sys.ser_global(&cfg), Err(Error::Config(_))));
}
