use std::ffi::{CStr, CString};
use std::ptr;

use ncwishart::{asymptotic_coeffs, EigenvalueDistribution, MbConfig, MbSystem, Modulation, RiceanChannel, WishartSpec};
use ncwishart_ffi::*;

const LAMBDAS: [f64; 3] = [14.0, 8.5, 2.0];
const SIGMAS: [f64; 3] = [2.9751, 2.2840, 0.9657];

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { ncw_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned();
    assert_eq!(n, s.len());
    s
}

fn dist() -> *mut NcwDistribution {
    let mut d = ptr::null_mut();
    let st = unsafe { ncw_distribution_new(3, 5, LAMBDAS.as_ptr(), 3, &mut d) };
    assert_eq!(st, NcwStatus::Ok);
    d
}

fn system(k: f64) -> *mut NcwSystem {
    let mut s = ptr::null_mut();
    let st = unsafe { ncw_system_from_singulars(3, 5, k, SIGMAS.as_ptr(), 3, 1, &mut s) };
    assert_eq!(st, NcwStatus::Ok, "{}", last_error());
    s
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ncw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn cdfs_match_the_library() {
    let reference = EigenvalueDistribution::new(WishartSpec::new(3, 5, LAMBDAS.to_vec()).unwrap()).unwrap();
    let d = dist();
    for &x in &[0.3, 1.0, 4.0, 12.0] {
        let mut all = [0.0; 3];
        assert_eq!(unsafe { ncw_cdf_all(d, x, all.as_mut_ptr(), 3) }, NcwStatus::Ok);
        assert_eq!(all.to_vec(), reference.cdf_all(x).unwrap());
        for k in 1..=3 {
            let (mut v, mut dl, mut p) = (f64::NAN, f64::NAN, f64::NAN);
            assert_eq!(unsafe { ncw_cdf_kth(d, k, x, &mut v, &mut dl) }, NcwStatus::Ok);
            let e = reference.cdf_kth_eval(k, x).unwrap();
            assert_eq!((v, dl), (e.value, e.digits_lost));
            assert_eq!(unsafe { ncw_cdf_kth(d, k, x, &mut v, ptr::null_mut()) }, NcwStatus::Ok);
            assert_eq!(unsafe { ncw_pdf_kth(d, k, x, &mut p) }, NcwStatus::Ok);
            assert_eq!(p, reference.pdf_kth(k, x).unwrap());
        }
    }
    for k in 1..=3 {
        let (mut dk, mut ln_a) = (0u32, 0.0);
        assert_eq!(unsafe { ncw_asymptotic_coeffs(d, k, &mut dk, &mut ln_a) }, NcwStatus::Ok);
        let c = asymptotic_coeffs(reference.spec(), k).unwrap();
        assert_eq!((dk, ln_a), (c.d, c.ln_a));
    }
    unsafe { ncw_distribution_free(d) };
}

#[test]
fn errors_map_to_status_codes() {
    let d = dist();
    let mut v = 0.0;
    assert_eq!(unsafe { ncw_cdf_kth(d, 4, 1.0, &mut v, ptr::null_mut()) }, NcwStatus::Domain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { ncw_cdf_kth(d, 1, -1.0, &mut v, ptr::null_mut()) }, NcwStatus::Domain);
    let mut short = [0.0; 2];
    assert_eq!(unsafe { ncw_cdf_all(d, 1.0, short.as_mut_ptr(), 2) }, NcwStatus::Dimension);
    assert!(last_error().contains("need s = 3"));
    unsafe { ncw_distribution_free(d) };

    let mut out = ptr::null_mut();
    let near = [3.0, 3.0 - 1e-12];
    assert_eq!(unsafe { ncw_distribution_new(2, 2, near.as_ptr(), 2, &mut out) }, NcwStatus::DegenerateSpectrum);
    let tied = [3.0, 3.0];
    assert_eq!(unsafe { ncw_distribution_new(2, 2, tied.as_ptr(), 2, &mut out) }, NcwStatus::Domain);
    assert!(out.is_null(), "outputs are untouched on failure");
    let too_many = [3.0, 2.0, 1.0];
    assert_eq!(unsafe { ncw_distribution_new(2, 4, too_many.as_ptr(), 3, &mut out) }, NcwStatus::Dimension);

    let s = system(1.0);
    let bad = NcwModulation { alpha: -1.0, beta: 1.0 };
    let (p, mut g) = (1.0, 0.0);
    assert_eq!(unsafe { ncw_ser(s, &p, &bad, 1, ptr::null_mut(), &mut g) }, NcwStatus::Config);
    unsafe { ncw_system_free(s) };
}

#[test]
fn null_pointers_are_rejected() {
    let mut v = 0.0;
    assert_eq!(unsafe { ncw_cdf_kth(ptr::null(), 1, 1.0, &mut v, ptr::null_mut()) }, NcwStatus::NullPointer);
    assert_eq!(last_error(), "dist is null");
    let d = dist();
    assert_eq!(unsafe { ncw_pdf_kth(d, 1, 1.0, ptr::null_mut()) }, NcwStatus::NullPointer);
    assert_eq!(unsafe { ncw_distribution_new(3, 5, ptr::null(), 3, ptr::null_mut()) }, NcwStatus::NullPointer);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ncw_distribution_new(3, 5, ptr::null(), 3, &mut out) }, NcwStatus::NullPointer);
    // rank 0 needs no array
    assert_eq!(unsafe { ncw_distribution_new(2, 3, ptr::null(), 0, &mut out) }, NcwStatus::Ok);
    let mut m = NcwModulation { alpha: 0.0, beta: 0.0 };
    assert_eq!(unsafe { ncw_modulation_from_name(ptr::null(), &mut m) }, NcwStatus::NullPointer);
    unsafe {
        ncw_distribution_free(out);
        ncw_distribution_free(d);
        ncw_distribution_free(ptr::null_mut());
        ncw_system_free(ptr::null_mut());
    }
}

#[test]
fn error_message_truncates_and_reports_length() {
    let mut v = 0.0;
    unsafe { ncw_pdf_kth(ptr::null(), 1, 1.0, &mut v) };
    let full = "dist is null";
    let mut buf = [1 as std::ffi::c_char; 5];
    let n = unsafe { ncw_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(n, full.len());
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "dist");
    assert_eq!(unsafe { ncw_last_error_message(ptr::null_mut(), 0) }, full.len());
}

#[test]
fn modulation_names() {
    let mut m = NcwModulation { alpha: 0.0, beta: 0.0 };
    let name = CString::new("8psk").unwrap();
    assert_eq!(unsafe { ncw_modulation_from_name(name.as_ptr(), &mut m) }, NcwStatus::Ok);
    let r = Modulation::from_name("8psk").unwrap();
    assert_eq!((m.alpha, m.beta), (r.alpha, r.beta));
    let name = CString::new("qam").unwrap();
    assert_eq!(unsafe { ncw_modulation_from_name(name.as_ptr(), &mut m) }, NcwStatus::Config);
    assert!(last_error().contains("bpsk"));
    let raw = [0xffu8, 0];
    assert_eq!(unsafe { ncw_modulation_from_name(raw.as_ptr().cast(), &mut m) }, NcwStatus::InvalidString);
}

#[test]
fn performance_matches_the_library() {
    let k = 1.0;
    let reference = MbSystem::new(RiceanChannel::from_singulars(3, 5, k, &SIGMAS, 1).unwrap()).unwrap();
    let s = system(k);
    let bpsk = NcwModulation { alpha: 1.0, beta: 1.0 };
    let mods = [bpsk; 3];
    let powers = [40.0 / 3.0; 3];
    let (mut sub, mut g) = ([0.0; 3], 0.0);
    assert_eq!(unsafe { ncw_ser(s, powers.as_ptr(), mods.as_ptr(), 3, sub.as_mut_ptr(), &mut g) }, NcwStatus::Ok);
    let cfg = MbConfig::uniform(3, 40.0, Modulation::bpsk()).unwrap();
    let point = reference.ser_point(&cfg).unwrap();
    assert_eq!((sub.to_vec(), g), (point.subchannels.clone(), point.global));

    let (mut hs, mut ga, mut gd) = (0.0, 0.0, 0u32);
    assert_eq!(unsafe { ncw_ser_high_snr(s, 40.0, mods.as_ptr(), 3, 2, &mut hs, &mut ga, &mut gd) }, NcwStatus::Ok);
    assert_eq!(hs, reference.ser_high_snr(&cfg, 2).unwrap());
    assert_eq!(ga, reference.array_gain(&cfg, 2).unwrap());
    assert_eq!(gd, 8);

    let mut o = 0.0;
    assert_eq!(unsafe { ncw_outage(s, 2, 10.0, 0.5, &mut o) }, NcwStatus::Ok);
    assert_eq!(o, reference.outage(2, 10.0, 0.5).unwrap());
    assert_eq!(unsafe { ncw_outage_asymptotic(3, 5, k, 0.01, 1.0, &mut o) }, NcwStatus::Ok);
    assert_eq!(o, ncwishart::outage_asymptotic(3, 5, k, 0.01, 1.0).unwrap());

    let mut f = 0.0;
    assert_eq!(unsafe { ncw_singular_value_cdf(s, 1, 2.5, &mut f) }, NcwStatus::Ok);
    assert_eq!(f, ncwishart::singular_value_cdf(reference.channel(), 1, 2.5).unwrap());
    unsafe { ncw_system_free(s) };
}

#[test]
fn explicit_mean_agrees_with_the_same_channel_from_singulars() {
    let ch = RiceanChannel::from_singulars(2, 3, 2.0, &[2.0, 1.0], 7).unwrap();
    let h = ch.hbar();
    let (mut re, mut im) = (Vec::new(), Vec::new());
    for i in 0..2 {
        for j in 0..3 {
            re.push(h[(i, j)].re);
            im.push(h[(i, j)].im);
        }
    }
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ncw_system_from_mean(2, 3, 2.0, re.as_ptr(), im.as_ptr(), &mut s) }, NcwStatus::Ok);
    let mut a = 0.0;
    assert_eq!(unsafe { ncw_singular_value_cdf(s, 2, 1.0, &mut a) }, NcwStatus::Ok);
    let b = ncwishart::singular_value_cdf(&ch, 2, 1.0).unwrap();
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    unsafe { ncw_system_free(s) };

    // a real mean with the wrong energy is rejected by the model
    let bad = [2.0; 6];
    assert_ne!(unsafe { ncw_system_from_mean(2, 3, 2.0, bad.as_ptr(), ptr::null(), &mut s) }, NcwStatus::Ok);
}
