//! The lumped coupler ring against an ideal 3-dB quadrature hybrid.

use rfmems_match::network::lumped_coupler_network;
use rfmems_match::{coupler_balance, s_parameters, ComponentTable, ConfigurationWord, LossModel};

const F: f64 = 620e6;

#[test]
fn ring_is_a_3db_quadrature_hybrid_at_design_frequency() {
    let b = coupler_balance(&ComponentTable::default(), F).unwrap();
    assert!(
        (b.through_db + 3.0).abs() <= 0.5 && (b.coupled_db + 3.0).abs() <= 0.5,
        "split {:.3} / {:.3} dB",
        b.through_db,
        b.coupled_db
    );
    assert!(
        (b.quadrature_deg - 90.0).abs() <= 5.0,
        "quadrature {:.2}°",
        b.quadrature_deg
    );
}

#[test]
fn ring_quadrature_and_match() {
    let b = coupler_balance(&ComponentTable::default(), F).unwrap();
    assert!((b.quadrature_deg - 90.0).abs() <= 5.0, "{b:?}");
    assert!(b.return_loss_db > 20.0 && b.isolation_db > 20.0, "{b:?}");
    // total power out of port 1 is conserved, whatever the split
    let through = 10f64.powf(b.through_db / 10.0);
    let coupled = 10f64.powf(b.coupled_db / 10.0);
    let rest = 10f64.powf(-b.return_loss_db / 10.0) + 10f64.powf(-b.isolation_db / 10.0);
    assert!((through + coupled + rest - 1.0).abs() < 1e-12);
}

#[test]
fn ring_balances_slightly_above_design_frequency() {
    let table = ComponentTable::default();
    let imbalance = |f: f64| {
        let b = coupler_balance(&table, f).unwrap();
        (b.through_db - b.coupled_db).abs()
    };
    assert!(imbalance(640e6) < 0.1, "{}", imbalance(640e6));
    assert!(imbalance(640e6) < imbalance(F));
}

#[test]
fn ring_is_lossless_and_reciprocal() {
    let table = ComponentTable::default();
    let net = lumped_coupler_network(&table);
    for word in [
        ConfigurationWord::ZERO,
        ConfigurationWord::ZERO.with_bit(10, true),
    ] {
        let s = s_parameters(&net, F, word, &LossModel::lossless())
            .unwrap()
            .s;
        let sh_s = &s.conj_transpose() * &s;
        assert!(sh_s.max_abs_diff(&rfmems_match::ComplexMatrix::identity(4)) < 1e-9);
        assert!(s.max_abs_diff(&s.transpose()) < 1e-12);
    }
}
