mod common;

use common::rel;
use nalgebra::DMatrix;
use proptest::prelude::*;
use wpirc::model::*;
use wpirc::Complex64;

fn vec_pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.0f64..1e-3, n),
        prop::collection::vec(0.0f64..50.0, n),
    )
}

proptest! {
    #[test]
    fn evaluators_are_perspective_homogeneous(
        (gamma, snr) in vec_pair(6),
        tau2 in 1e-6f64..1e-4,
        c in prop::sample::select(vec![0.5, 2.0, 10.0]),
    ) {
        let df = 2.5e5;
        let scaled: Vec<f64> = gamma.iter().map(|g| g * c).collect();
        let mi = radar_mi(&gamma, &snr, tau2, df).unwrap();
        let mi_c = radar_mi(&scaled, &snr, c * tau2, df).unwrap();
        let dir = comm_rate(&gamma, &snr, tau2, df).unwrap();
        let dir_c = comm_rate(&scaled, &snr, c * tau2, df).unwrap();
        prop_assert!(rel(mi_c, c * mi) <= 1e-12 || mi == 0.0);
        prop_assert!(rel(dir_c, c * dir) <= 1e-12 || dir == 0.0);
        prop_assert!(rel(dir, 2.0 * mi) <= 1e-14 || mi == 0.0);
    }

    #[test]
    fn evaluators_are_monotone_and_concave(
        (gamma, snr) in vec_pair(4),
        m in 0usize..4,
        h in 1e-7f64..1e-5,
    ) {
        let tau2 = 5e-5;
        let df = 2.5e5;
        let at = |d: f64| {
            let mut g = gamma.clone();
            g[m] += d;
            (radar_mi(&g, &snr, tau2, df).unwrap(), comm_rate(&g, &snr, tau2, df).unwrap())
        };
        let (r0, c0) = at(0.0);
        let (r1, c1) = at(h);
        let (r2, c2) = at(2.0 * h);
        prop_assert!(r1 >= r0 && r2 >= r1);
        prop_assert!(c1 >= c0 && c2 >= c1);
        let slack = 1e-12 * r2.max(1.0);
        prop_assert!(r2 - 2.0 * r1 + r0 <= slack);
        prop_assert!(c2 - 2.0 * c1 + c0 <= 2.0 * slack);
    }

    #[test]
    fn harvest_is_phase_invariant(
        re in prop::collection::vec(-1.0f64..1.0, 3),
        im in prop::collection::vec(-1.0f64..1.0, 3),
        theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let h = nalgebra::DVector::from_fn(3, |i, _| Complex64::new(re[i], im[(i + 1) % 3]));
        let w = nalgebra::DVector::from_fn(3, |i, _| Complex64::new(im[i], re[(i + 2) % 3]));
        let rot = w.map(|x| x * Complex64::from_polar(1.0, theta));
        let e0 = harvested_energy(&h, &w, 1e-4, 0.5).unwrap();
        let e1 = harvested_energy(&h, &rot, 1e-4, 0.5).unwrap();
        prop_assert!(e0 >= 0.0);
        prop_assert!((e0 - e1).abs() <= 1e-12 * e0.max(1e-300));
    }
}

#[test]
fn aligned_beam_reaches_cauchy_schwarz_bound() {
    let h = nalgebra::DVector::from_vec(vec![Complex64::new(0.3, -0.4), Complex64::new(0.1, 0.2)]);
    let w = h.map(|x| x * 2.5);
    let got = harvested_energy(&h, &w, 1e-4, 0.5).unwrap();
    let bound = 0.5 * 1e-4 * h.norm_squared() * w.norm_squared();
    assert!(rel(got, bound) < 1e-14);
    let other = nalgebra::DVector::from_vec(vec![Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)]);
    let scaled = other.map(|x| x * (w.norm() / other.norm()));
    assert!(harvested_energy(&h, &scaled, 1e-4, 0.5).unwrap() < bound);
}

fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| {
                    v * Complex64::from_polar(1.0, -std::f64::consts::TAU * (k * t) as f64 / n as f64)
                })
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

fn ofdm_params(n_c: usize) -> SystemParams {
    SystemParams {
        n_subcarriers: n_c,
        symbol_duration: 1.0 / 2.5e5,
        ..SystemParams::default()
    }
}

#[test]
fn dft_recovers_subcarrier_symbols() {
    let p = ofdm_params(16);
    let amps: Vec<f64> = (0..16).map(|m| 0.1 + 0.05 * m as f64).collect();
    let spec = WaveformSpec::qpsk(5.8e9, amps.clone(), 3, 9).unwrap();
    for n in 0..3 {
        let z = synthesize_ofdm(&spec, &p, 16.0 * p.delta_f, n).unwrap();
        assert_eq!(z.len(), 16);
        let bins = naive_dft(&z);
        for m in 0..16 {
            let expect = spec.phase_codes[(m, n)] * amps[m];
            assert!((bins[m] - expect).norm() <= 1e-9 * expect.norm());
        }
    }
}

#[test]
fn mean_symbol_power_is_sum_of_subcarrier_powers() {
    let p = ofdm_params(32);
    let amps: Vec<f64> = (0..32).map(|m| ((m * 7 % 5) as f64).sqrt()).collect();
    let spec = WaveformSpec::qpsk(0.0, amps.clone(), 2, 4).unwrap();
    let z = synthesize_ofdm(&spec, &p, 32.0 * p.delta_f, 1).unwrap();
    let mean: f64 = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / z.len() as f64;
    let expect: f64 = amps.iter().map(|a| a * a).sum();
    assert!(rel(mean, expect) <= 1e-9);
}

#[test]
fn non_unit_codes_are_rejected() {
    let codes = DMatrix::from_element(2, 1, Complex64::new(0.5, 0.0));
    assert!(WaveformSpec::new(0.0, codes, vec![1.0, 1.0]).is_err());
}
