use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use rfmems_match::components::reflective_load_impedance;
use rfmems_match::solver::s_parameters_via_z;
use rfmems_match::{
    build_full_network, phase_stage_network, resolve_switches, rtps_response, s_parameters,
    ComplexMatrix, ComponentTable, ConfigurationWord, CouplerMode, LossModel,
};

const F: f64 = 620e6;

fn mode() -> impl Strategy<Value = CouplerMode> {
    prop_oneof![Just(CouplerMode::Ideal), Just(CouplerMode::Lumped)]
}

fn word() -> impl Strategy<Value = ConfigurationWord> {
    (0..ConfigurationWord::COUNT).prop_map(|v| ConfigurationWord::new(v).unwrap())
}

fn loss() -> impl Strategy<Value = LossModel> {
    prop_oneof![
        1 => Just(LossModel::lossless()),
        4 => (10.0..100.0f64, 50.0..500.0f64, 0.5..5.0f64, 0.0..100e-15f64).prop_map(|(q_l, q_c, r_on, c_off)| {
            LossModel {
                q_l,
                q_c,
                r_on,
                c_off,
                ..LossModel::default()
            }
        }),
    ]
}

fn sigma_max(s: &ComplexMatrix) -> f64 {
    let (a, b, c, d) = (s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
    let p = a.norm_sqr() + c.norm_sqr();
    let r = b.norm_sqr() + d.norm_sqr();
    let q = a.conj() * b + c.conj() * d;
    ((p + r) / 2.0 + (((p - r) / 2.0).powi(2) + q.norm_sqr()).sqrt()).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reciprocal_and_passive(mode in mode(), w in word(), loss in loss(), f in 400e6..900e6f64) {
        let net = build_full_network(&ComponentTable::default(), mode);
        let s = s_parameters(&net, f, w, &loss).unwrap().s;
        prop_assert!((s[(0, 1)] - s[(1, 0)]).norm() < 1e-9);
        prop_assert!(sigma_max(&s) <= 1.0 + 1e-9);
        prop_assert!(s[(1, 1)].norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn lossless_network_is_unitary(mode in mode(), w in word(), f in 400e6..900e6f64) {
        let net = build_full_network(&ComponentTable::default(), mode);
        let s = s_parameters(&net, f, w, &LossModel::lossless()).unwrap().s;
        let err = (&s.conj_transpose() * &s).max_abs_diff(&ComplexMatrix::identity(2));
        prop_assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn lossy_network_dissipates(mode in mode(), w in word()) {
        let net = build_full_network(&ComponentTable::default(), mode);
        let s = s_parameters(&net, F, w, &LossModel::default()).unwrap().s;
        prop_assert!(s[(0, 0)].norm_sqr() + s[(1, 0)].norm_sqr() < 1.0);
    }

    #[test]
    fn resolved_netlist_solves_identically(mode in mode(), w in word(), loss in loss()) {
        let net = build_full_network(&ComponentTable::default(), mode);
        let fixed = resolve_switches(&net, w, &loss);
        let a = s_parameters(&net, F, w, &loss).unwrap().s;
        let b = s_parameters(&fixed, F, ConfigurationWord::ZERO, &loss).unwrap().s;
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn impedance_route_agrees(mode in mode(), w in word(), loss in loss()) {
        let net = build_full_network(&ComponentTable::default(), mode);
        let a = s_parameters(&net, F, w, &loss).unwrap().s;
        let b = s_parameters_via_z(&net, F, w, &loss).unwrap().s;
        prop_assert!(a.max_abs_diff(&b) < 1e-9);
    }
}

#[test]
fn ideal_phase_stage_is_the_reflective_type_response() {
    let table = ComponentTable::default();
    let stage = phase_stage_network(&table, CouplerMode::Ideal);
    let w = TAU * F;
    for loss in [LossModel::lossless(), LossModel::default()] {
        for v in 0..8u16 {
            let word = ConfigurationWord::new(v << 8).unwrap();
            let mut y = reflective_load_impedance(word, F, &table, &loss).inv();
            if word.bit(10) {
                if loss.lossless {
                    y += Complex64::new(0.0, w * (table.c_2var.high - table.c_2var.low));
                } else {
                    // the lossy bit-10 capacitor needs its own ESR model
                    continue;
                }
            }
            let z = y.inv();
            let gamma = (z - table.z0) / (z + table.z0);
            let s = s_parameters(&stage, F, word, &loss).unwrap().s;
            assert!(s.max_abs_diff(&rtps_response(gamma)) < 1e-9, "word {word}");
        }
    }
}

#[test]
fn ideal_phase_stage_transmits_fully() {
    let table = ComponentTable::default();
    let stage = phase_stage_network(&table, CouplerMode::Ideal);
    for f in [500e6, 620e6, 800e6] {
        for v in 0..8u16 {
            let s = s_parameters(
                &stage,
                f,
                ConfigurationWord::new(v << 8).unwrap(),
                &LossModel::lossless(),
            )
            .unwrap();
            assert!((s.get(2, 1).norm() - 1.0).abs() < 1e-9);
            assert!(s.get(1, 1).norm() < 1e-9);
        }
    }
}

#[test]
fn every_word_solves_in_both_modes() {
    let table = ComponentTable::default();
    for mode in [CouplerMode::Ideal, CouplerMode::Lumped] {
        let net = build_full_network(&table, mode);
        for w in ConfigurationWord::all() {
            let s = s_parameters(&net, F, w, &LossModel::default()).unwrap();
            assert!(s.s.is_finite(), "{mode} word {w}");
        }
    }
}
