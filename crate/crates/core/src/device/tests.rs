use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn with_caps() -> ModelCard {
    ModelCard {
        cov: 2.0e-17,
        cch_max: 6.0e-17,
        ..ModelCard::reference()
    }
}

// Frozen from a 40-digit straight-line evaluation of the equation set.
const GOLDEN_ID_ON: f64 = 5.248268896203167e-05;
const GOLDEN_ID_LIN: f64 = 1.2261094256763058e-05;
const GOLDEN_ID_OFF: f64 = 1.5033458187994564e-10;
const GOLDEN_DIBL_MEAS: f64 = 48.53579054589454;

#[test]
fn golden_currents() {
    let c = ModelCard::reference();
    let id = |vd, vg| {
        c.eval_terminal_currents(&BiasPoint::new(vd, vg, 0.0, 0.0), 1)
            .unwrap()
            .id
    };
    assert_relative_eq!(id(0.75, 0.75), GOLDEN_ID_ON, max_relative = 1e-12);
    assert_relative_eq!(id(0.05, 0.75), GOLDEN_ID_LIN, max_relative = 1e-12);
    assert_relative_eq!(id(0.75, 0.0), GOLDEN_ID_OFF, max_relative = 1e-11);
}

#[test]
fn thermal_voltage_at_room_temperature() {
    assert_relative_eq!(
        thermal_voltage(298.15),
        0.025692579121085847,
        max_relative = 1e-14
    );
}

#[test]
fn source_drain_swap_negates_current() {
    let c = ModelCard {
        rs: 3000.0,
        rd: 3000.0,
        ..ModelCard::reference()
    };
    for card in [ModelCard::reference(), c] {
        let fwd = card
            .eval_terminal_currents(&BiasPoint::new(0.75, 0.75, 0.0, 0.0), 1)
            .unwrap();
        let rev = card
            .eval_terminal_currents(&BiasPoint::new(0.0, 0.75, 0.75, 0.0), 1)
            .unwrap();
        assert_relative_eq!(rev.id, -fwd.id, max_relative = 1e-12);
    }
}

#[test]
fn gate_and_bulk_carry_no_current() {
    let out = ModelCard::reference()
        .eval_terminal_currents(&BiasPoint::new(0.6, 0.7, 0.1, -0.2), 3)
        .unwrap();
    assert_eq!(out.ig, 0.0);
    assert_eq!(out.ib, 0.0);
    assert_eq!(out.is, -out.id);
}

#[test]
fn capacitance_free_card_has_no_charge() {
    let q = ModelCard::reference()
        .eval_terminal_charges(&BiasPoint::new(0.3, 0.9, 0.0, 0.0), 4)
        .unwrap();
    assert_eq!(q.as_array(), [0.0, 0.0, 0.0, 0.0]);
}

fn numeric_cgg(card: &ModelCard, vg: f64, vd: f64, nfin: u32) -> f64 {
    let h = 1e-5;
    let q = |v| {
        card.eval_terminal_charges(&BiasPoint::new(vd, v, 0.0, 0.0), nfin)
            .unwrap()
            .qg
    };
    (q(vg + h) - q(vg - h)) / (2.0 * h)
}

#[test]
fn cgg_plateaus() {
    let c = with_caps();
    let nphit = c.n_ss * thermal_voltage(c.temp);
    let nfin = 7;
    let low = numeric_cgg(&c, c.vt0 - 10.0 * nphit - 0.05, 0.0, nfin);
    assert_relative_eq!(low, 2.0 * nfin as f64 * c.cov, max_relative = 0.01);
    let high = numeric_cgg(&c, c.vt0 + 10.0 * nphit + 0.05, 0.0, nfin);
    assert_relative_eq!(
        high,
        nfin as f64 * (2.0 * c.cov + c.cch_max),
        max_relative = 0.01
    );
}

#[test]
fn characterization_matches_analytic_values() {
    let c = ModelCard::reference();
    let r = characterize(&c, 0.75, &CharOptions::default()).unwrap();
    // n_ss * phit * ln 10
    assert_relative_eq!(ideal_swing(&c), 71.0, max_relative = 1e-3);
    assert_relative_eq!(r.ss, 71.0, max_relative = 0.02);
    // Threshold shift of 40 mV/V plus the linear-region and output-conductance
    // offset of the 50 mV reading, n phit ln(1/(1 - e^(-vds/phit)) (1 + lambda vdd)/(1 + lambda vds)) / dVds.
    assert_relative_eq!(r.dibl_meas, 48.299654, max_relative = 0.01);
    assert_relative_eq!(r.dibl_meas, GOLDEN_DIBL_MEAS, max_relative = 1e-9);
    assert!(r.ion > r.ioff && r.ioff > 0.0);
    assert_relative_eq!(r.ioff, GOLDEN_ID_OFF, max_relative = 1e-11);
    assert_relative_eq!(r.ion, GOLDEN_ID_ON, max_relative = 1e-12);
    assert!(r.vt_lin > r.vt_sat);
    assert_relative_eq!(r.ron, 0.05 / GOLDEN_ID_LIN, max_relative = 1e-12);
}

#[test]
fn series_resistance_adds_to_ron() {
    let base = ModelCard::reference();
    let res = ModelCard {
        rs: 5000.0,
        rd: 5000.0,
        ..base.clone()
    };
    for nfin in [1, 4] {
        let opts = CharOptions {
            nfin,
            ..CharOptions::default()
        };
        let r0 = characterize(&base, 0.75, &opts).unwrap().ron;
        let r1 = characterize(&res, 0.75, &opts).unwrap().ron;
        let expected = 10_000.0 / nfin as f64;
        assert_relative_eq!(r1 - r0, expected, max_relative = 0.05);
    }
}

#[test]
fn cgg_components_add_up() {
    let r = characterize(&with_caps(), 0.75, &CharOptions::default()).unwrap();
    assert_relative_eq!(r.cgg, 2.0 * r.cov_meas + r.cch_meas, max_relative = 1e-12);
    assert_relative_eq!(r.cov_meas, 2.0e-17, max_relative = 0.01);
}

#[test]
fn unbracketed_threshold_is_reported() {
    let c = ModelCard {
        vt0: 5.0,
        ..ModelCard::reference()
    };
    let err = characterize(&c, 0.75, &CharOptions::default()).unwrap_err();
    assert!(matches!(err, CharError::NotBracketed { .. }), "{err}");
    assert!(matches!(
        characterize(&c, 0.0, &CharOptions::default()),
        Err(CharError::BadSupply(_))
    ));
}

#[test]
fn rejects_bad_inputs() {
    let c = ModelCard::reference();
    assert!(matches!(
        c.eval_terminal_currents(&BiasPoint::new(f64::NAN, 0.0, 0.0, 0.0), 1),
        Err(DeviceError::NonFiniteBias { terminal: "vd", .. })
    ));
    assert!(matches!(
        c.eval_terminal_currents(&BiasPoint::new(0.0, 11.0, 0.0, 0.0), 1),
        Err(DeviceError::BiasOutOfRange { .. })
    ));
    assert!(matches!(
        c.eval_terminal_currents(&BiasPoint::default(), 0),
        Err(DeviceError::ZeroFins)
    ));
    let bad = ModelCard { n_ss: 0.9, ..c };
    assert!(matches!(
        bad.eval_terminal_charges(&BiasPoint::default(), 1),
        Err(DeviceError::InvalidCard(_))
    ));
}

#[test]
fn current_is_c1_across_zero_vds() {
    let c = ModelCard {
        rs: 1000.0,
        rd: 1000.0,
        ..ModelCard::reference()
    };
    let id = |vd: f64| {
        c.eval_terminal_currents(&BiasPoint::new(vd, 0.7, 0.0, 0.0), 1)
            .unwrap()
            .id
    };
    let h = 1e-7;
    let left = (id(0.0) - id(-h)) / h;
    let right = (id(h) - id(0.0)) / h;
    assert_relative_eq!(left, right, max_relative = 1e-4);
}

#[test]
fn ieff_at_target_ioff_hits_target() {
    let c = ModelCard::reference();
    let (ieff, dv) = ieff_at_target_ioff(&c, 0.75, 1e-10).unwrap();
    let shifted = ModelCard {
        vt0: c.vt0 + dv,
        ..c
    };
    let ioff = shifted
        .eval_terminal_currents(&BiasPoint::new(0.75, 0.0, 0.0, 0.0), 1)
        .unwrap()
        .id;
    assert_relative_eq!(ioff, 1e-10, max_relative = 1e-9);
    assert!(ieff > 0.0);
}

#[test]
fn card_file_round_trip_and_rejections() {
    let c = ModelCard {
        polarity: Polarity::P,
        lg: 17.8,
        wfin: 6.3,
        rs: 120.0,
        ..with_caps()
    };
    assert_eq!(parse_card(&write_card(&c)).unwrap(), c);
    let si = "lg = 0.018u\nwfin = 6\nvt0 = 0.3\nn_ss = 1.2\nk_gain = 100u # A/V^2\n";
    let parsed = parse_card(si).unwrap();
    assert_relative_eq!(parsed.lg, 18.0, max_relative = 1e-12);
    assert_eq!(parsed.k_gain, 1e-4);
    assert!(matches!(
        parse_card(&format!("{si}vth = 1\n")),
        Err(CardFileError::Syntax(_))
    ));
    assert!(matches!(
        parse_card("lg = 18n\n"),
        Err(CardFileError::Missing("wfin"))
    ));
    assert!(matches!(
        parse_card(&format!("{si}polarity = q\n")),
        Err(CardFileError::Polarity(_))
    ));
}

fn arb_card() -> impl Strategy<Value = ModelCard> {
    (
        (
            10.0..30.0f64,
            3.0..9.0f64,
            0.1..0.5f64,
            1.0..1.8f64,
            0.0..0.12f64,
        ),
        (
            3e-5..3e-4f64,
            0.0..2.0f64,
            0.0..0.2f64,
            0.0..4000.0f64,
            0.0..4000.0f64,
        ),
        (0.0..1e-16f64, 0.0..2e-16f64, prop::bool::ANY),
    )
        .prop_map(
            |(
                (lg, wfin, vt0, n_ss, dibl),
                (k_gain, theta_sat, lambda_clm, rs, rd),
                (cov, cch_max, p),
            )| {
                ModelCard {
                    polarity: if p { Polarity::P } else { Polarity::N },
                    lg,
                    wfin,
                    vt0,
                    n_ss,
                    dibl,
                    k_gain,
                    theta_sat,
                    lambda_clm,
                    rs,
                    rd,
                    cov,
                    cch_max,
                    ..ModelCard::reference()
                }
            },
        )
}

fn arb_bias() -> impl Strategy<Value = BiasPoint> {
    (-1.2..1.2f64, -1.2..1.2f64, -1.2..1.2f64, -0.5..0.5f64)
        .prop_map(|(d, g, s, b)| BiasPoint::new(d, g, s, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn zero_vds_is_exactly_zero(card in arb_card(), vg in -1.0..1.2f64, v in -0.8..0.8f64, vb in -0.3..0.3f64) {
        let out = card.eval_terminal_currents(&BiasPoint::new(v, vg, v, vb), 3).unwrap();
        prop_assert_eq!(out.id, 0.0);
    }

    #[test]
    fn outputs_are_linear_in_fins(card in arb_card(), bias in arb_bias(), nfin in 1u32..50, k in 2u32..9) {
        let one = card.evaluate(&bias, nfin).unwrap();
        let many = card.evaluate(&bias, nfin * k).unwrap();
        prop_assert!(rel(many.currents.id, k as f64 * one.currents.id) <= 1e-12);
        for (a, b) in many.charges.as_array().iter().zip(one.charges.as_array()) {
            prop_assert!(rel(*a, k as f64 * b) <= 1e-12);
        }
    }

    #[test]
    fn p_card_mirrors_n_card(card in arb_card(), bias in arb_bias()) {
        let n = ModelCard { polarity: Polarity::N, ..card.clone() };
        let p = ModelCard { polarity: Polarity::P, ..card };
        let on = n.evaluate(&bias.mirrored(), 2).unwrap();
        let op = p.evaluate(&bias, 2).unwrap();
        prop_assert_eq!(op.currents.as_array(), on.currents.scaled(-1.0).as_array());
        prop_assert_eq!(op.charges.as_array(), on.charges.scaled(-1.0).as_array());
    }

    #[test]
    fn charge_is_neutral(card in arb_card(), bias in arb_bias(), nfin in 1u32..20000) {
        let q = card.eval_terminal_charges(&bias, nfin).unwrap();
        prop_assert!(q.total().abs() <= 1e-18);
        prop_assert_eq!(q.qb, 0.0);
    }

    #[test]
    fn current_rises_with_gate(card in arb_card(), vds in 0.0..1.0f64, vs in 0.0..0.2f64) {
        let vd = vs + vds;
        let card = ModelCard { polarity: Polarity::N, ..card };
        let mut last = f64::NEG_INFINITY;
        for i in 0..=50 {
            let vg = i as f64 / 50.0;
            let id = card.eval_terminal_currents(&BiasPoint::new(vd, vg, vs, 0.0), 1).unwrap().id;
            prop_assert!(id >= last - 1e-18 * last.abs().max(1e-30));
            last = id;
        }
    }

    #[test]
    fn gate_charge_rises_with_gate(card in arb_card(), vd in -0.8..0.8f64, vg in -1.0..1.2f64) {
        let card = ModelCard { polarity: Polarity::N, ..card };
        let q = |v| card.eval_terminal_charges(&BiasPoint::new(vd, v, 0.0, 0.0), 1).unwrap().qg;
        prop_assert!(q(vg + 1e-3) >= q(vg));
    }

    #[test]
    fn cgg_stays_between_floor_and_ceiling(card in arb_card(), vg in -1.0..1.2f64, nfin in 1u32..100) {
        let card = ModelCard { polarity: Polarity::N, cov: card.cov.max(1e-18), ..card };
        let c = numeric_cgg(&card, vg, 0.0, nfin);
        let floor = 2.0 * card.cov * nfin as f64;
        let ceil = (2.0 * card.cov + card.cch_max) * nfin as f64;
        prop_assert!(c >= floor * 0.99 && c <= ceil * 1.01, "{} not in [{}, {}]", c, floor, ceil);
    }
}
