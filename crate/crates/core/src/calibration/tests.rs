use approx::assert_relative_eq;

use super::*;
use crate::device::{BiasPoint, ModelCard, Polarity, TerminalModel};
use crate::grid::DesignPoint;

fn card_dataset(card: &ModelCard, bias: &BiasSpec) -> IvDataset {
    let s = card.polarity.sign();
    let mut rows = Vec::new();
    for &vd in &bias.vd_values {
        for vg in bias.vg_values() {
            let b = BiasPoint::new(s * vd, s * vg, 0.0, 0.0);
            rows.push(IvRow {
                vg: s * vg,
                vd: s * vd,
                id: card.currents(&b, 1).unwrap().id,
            });
        }
    }
    IvDataset {
        point: DesignPoint::new(card.lg, card.wfin),
        vdd: bias.vdd,
        polarity: card.polarity,
        rows,
    }
}

fn iv_only() -> FitConfig {
    FitConfig {
        free: FreeParam::IV_DEFAULT.to_vec(),
        ..FitConfig::default()
    }
}

#[test]
fn mobility_term_reaches_k0_for_wide_fins() {
    let p = OracleParams {
        wfin_max: 100.0,
        ..OracleParams::defaults(Polarity::N)
    };
    let c = p.trend_card(&DesignPoint::new(18.0, 20.0 * p.wc)).unwrap();
    assert_relative_eq!(c.k_gain, p.k0, max_relative = 0.01);
}

#[test]
fn reference_point_trends_match_reference_card() {
    let c = OracleParams::defaults(Polarity::N)
        .trend_card(&DesignPoint::new(18.0, 6.0))
        .unwrap();
    assert_relative_eq!(c.vt0, 0.30, epsilon = 0.003);
    assert_relative_eq!(c.n_ss, 1.2, epsilon = 0.005);
    assert_relative_eq!(c.dibl, 0.04, epsilon = 0.003);
}

#[test]
fn ieff_at_target_ioff_peaks_inside_fin_range() {
    let p = OracleParams::defaults(Polarity::N);
    let widths = [4.1, 4.6, 5.1, 5.6, 6.1, 6.6, 7.1];
    let ieff: Vec<f64> = widths
        .iter()
        .map(|&w| {
            p.ieff_at_target_ioff(&DesignPoint::new(18.0, w), 0.75, 1e-10)
                .unwrap()
        })
        .collect();
    let argmax = ieff
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert!(argmax > 0 && argmax < widths.len() - 1, "{ieff:?}");
}

#[test]
fn dibl_falls_with_gate_length() {
    let p = OracleParams::defaults(Polarity::N);
    let short = p.trend_card(&DesignPoint::new(14.5, 6.1)).unwrap();
    let long = p.trend_card(&DesignPoint::new(18.5, 6.1)).unwrap();
    assert!(short.dibl > long.dibl);
}

#[test]
fn oracle_is_deterministic_and_bounded() {
    let p = OracleParams::defaults(Polarity::N);
    let a = virtual_tcad(&p, DesignPoint::new(17.0, 5.0), &BiasSpec::default()).unwrap();
    let b = virtual_tcad(&p, DesignPoint::new(17.0, 5.0), &BiasSpec::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.0.rows.len(), 31 * 3);
    assert!(matches!(
        virtual_tcad(&p, DesignPoint::new(40.0, 5.0), &BiasSpec::default()),
        Err(CalibError::OutsideValidity { .. })
    ));
}

#[test]
fn p_oracle_mirrors_signs() {
    let p = OracleParams::defaults(Polarity::P);
    let (iv, cgg) = virtual_tcad(&p, DesignPoint::new(18.0, 6.0), &BiasSpec::default()).unwrap();
    assert!(iv
        .rows
        .iter()
        .all(|r| r.vd < 0.0 && r.vg <= 0.0 && r.id <= 0.0));
    assert!(cgg.rows.iter().all(|r| r.cgg > 0.0));
}

#[test]
fn oracle_config_parsing() {
    let p = OracleParams::parse("# custom\npolarity = p\nk0 = 50u\nwc = 2.5n\n").unwrap();
    assert_eq!(p.polarity, Polarity::P);
    assert_eq!(p.k0, 5e-5);
    assert_eq!(p.wc, 2.5);
    assert_eq!(p.d0, OracleParams::defaults(Polarity::P).d0);
    assert!(OracleParams::parse("k1 = 3").is_err());
    assert!(OracleParams::parse("polarity = x").is_err());
    assert!(OracleParams::parse("lg_min = 40n").is_err());
}

fn toy() -> IvDataset {
    IvDataset {
        point: DesignPoint::new(18.0, 6.0),
        vdd: 0.75,
        polarity: Polarity::N,
        rows: vec![
            IvRow {
                vg: 0.5,
                vd: 0.05,
                id: 1e-6,
            },
            IvRow {
                vg: 0.75,
                vd: 0.05,
                id: 2e-6,
            },
            IvRow {
                vg: 0.75,
                vd: 0.75,
                id: 4e-6,
            },
        ],
    }
}

#[test]
fn rms_identity_is_zero() {
    let d = toy();
    let sim: Vec<f64> = d.rows.iter().map(|r| r.id).collect();
    assert_eq!(
        relative_rms(&sim, &d).unwrap(),
        RmsPair { lin: 0.0, log: 0.0 }
    );
}

#[test]
fn rms_one_percent_high_by_hand() {
    // Curve maxima 2e-6 and 4e-6 give normalized errors 0.005, 0.01, 0.01.
    let d = toy();
    let sim: Vec<f64> = d.rows.iter().map(|r| 1.01 * r.id).collect();
    let r = relative_rms(&sim, &d).unwrap();
    assert_relative_eq!(
        r.lin,
        ((0.005f64.powi(2) + 2.0 * 0.01f64.powi(2)) / 3.0).sqrt() * 100.0,
        max_relative = 1e-12
    );
    assert_relative_eq!(r.lin, 0.8660254037844386, max_relative = 1e-12);
    assert_relative_eq!(r.log, 0.4321373782642578, max_relative = 1e-9);
}

#[test]
fn rms_single_point_offset_is_hundred_percent() {
    let d = IvDataset {
        rows: vec![IvRow {
            vg: 0.75,
            vd: 0.75,
            id: 3e-6,
        }],
        ..toy()
    };
    let r = relative_rms(&[6e-6], &d).unwrap();
    assert_relative_eq!(r.lin, 100.0, max_relative = 1e-12);
}

#[test]
fn rms_rejects_bad_input() {
    let empty = IvDataset {
        rows: vec![],
        ..toy()
    };
    assert!(matches!(
        relative_rms(&[], &empty),
        Err(CalibError::EmptyDataset)
    ));
    assert!(matches!(
        relative_rms(&[1.0], &toy()),
        Err(CalibError::LengthMismatch { .. })
    ));
    assert!(toy().validate().is_err());
}

#[test]
fn fit_from_truth_stays_put() {
    let truth = ModelCard {
        lg: 17.0,
        wfin: 5.5,
        ..ModelCard::reference()
    };
    let data = card_dataset(&truth, &BiasSpec::default());
    let r = extract_card(&data, None, &truth, &iv_only()).unwrap();
    assert!(r.converged);
    assert!(r.rms_lin < 1e-6);
    assert_eq!(r.iterations, 0);
}

#[test]
fn fit_recovers_from_perturbed_start() {
    let truth = ModelCard {
        lg: 17.0,
        wfin: 5.5,
        ..ModelCard::reference()
    };
    let data = card_dataset(&truth, &BiasSpec::default());
    let init = ModelCard {
        vt0: truth.vt0 * 1.2,
        n_ss: truth.n_ss * 1.2,
        dibl: truth.dibl * 0.8,
        k_gain: truth.k_gain * 0.8,
        theta_sat: truth.theta_sat * 1.2,
        lambda_clm: truth.lambda_clm * 0.8,
        ..truth.clone()
    };
    let r = extract_card(&data, None, &init, &iv_only()).unwrap();
    assert!(r.rms_lin <= 0.5, "rms_lin {}", r.rms_lin);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn fit_at_fig4_point_is_in_band() {
    let p = OracleParams::defaults(Polarity::N);
    let point = DesignPoint::new(17.8, 6.3);
    let (iv, cgg) = virtual_tcad(&p, point, &BiasSpec::default()).unwrap();
    let init = ModelCard {
        lg: 17.8,
        wfin: 6.3,
        ..ModelCard::reference()
    };
    let r = extract_card(&iv, Some(&cgg), &init, &FitConfig::default()).unwrap();
    assert!(r.rms_lin <= 2.5, "rms_lin {}", r.rms_lin);
    assert!(r.rms_lin > 0.0);
    // Cgg plateaus: 2 cov at depletion, 2 cov + cch in inversion.
    let truth = p.trend_card(&point).unwrap();
    assert_relative_eq!(r.card.cov, truth.cov, max_relative = 0.02);
    assert_relative_eq!(r.card.cch_max, truth.cch_max, max_relative = 0.02);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn fit_is_scale_consistent() {
    let p = OracleParams::defaults(Polarity::N);
    let (iv, _) = virtual_tcad(&p, DesignPoint::new(16.0, 5.0), &BiasSpec::default()).unwrap();
    let init = ModelCard {
        lg: 16.0,
        wfin: 5.0,
        ..ModelCard::reference()
    };
    let a = extract_card(&iv, None, &init, &iv_only()).unwrap();
    let init4 = ModelCard {
        k_gain: init.k_gain * 4.0,
        ..init.clone()
    };
    let b = extract_card(&iv.scaled(4.0), None, &init4, &iv_only()).unwrap();
    assert!((a.rms_lin - b.rms_lin).abs() <= 1e-9);
    assert!((a.rms_log - b.rms_log).abs() <= 1e-9);
}

#[test]
fn p_extraction_works() {
    let p = OracleParams::defaults(Polarity::P);
    let (iv, cgg) = virtual_tcad(&p, DesignPoint::new(18.0, 6.0), &BiasSpec::default()).unwrap();
    let init = ModelCard {
        polarity: Polarity::P,
        lg: 18.0,
        wfin: 6.0,
        ..ModelCard::reference()
    };
    let r = extract_card(&iv, Some(&cgg), &init, &FitConfig::default()).unwrap();
    assert!(r.rms_lin <= 2.5);
    assert_eq!(r.card.polarity, Polarity::P);
}

#[test]
fn grid_calibration_places_cards_on_nodes() {
    let p = OracleParams::defaults(Polarity::N);
    let (a1, a2) = ([16.0, 17.0], [5.0, 6.0]);
    let refs = NodeReference::from_oracle(&p, &a1, &a2, &BiasSpec::default()).unwrap();
    let cal = calibrate_grid(
        ["lg", "wfin"],
        &a1,
        &a2,
        &refs,
        &ModelCard::reference(),
        &FitConfig::default(),
    )
    .unwrap();
    for (idx, card) in cal.grid.cards().iter().enumerate() {
        assert_eq!((card.lg, card.wfin), (a1[idx / 2], a2[idx % 2]));
    }
    assert!(cal.fits.iter().all(|f| f.rms_lin <= 2.5));
    assert_eq!(cal.fit_csv().lines().count(), 5);
    assert!(calibrate_grid(
        ["lg", "wfin"],
        &a1,
        &a2,
        &refs[..3],
        &ModelCard::reference(),
        &FitConfig::default()
    )
    .is_err());
}

#[test]
fn free_param_names() {
    assert_eq!(FreeParam::parse("K_GAIN"), Some(FreeParam::KGain));
    assert_eq!(FreeParam::parse("rs=rd"), Some(FreeParam::SeriesR));
    assert_eq!(FreeParam::parse("mobility"), None);
}

#[test]
fn series_resistance_can_be_fitted() {
    let truth = ModelCard {
        rs: 2000.0,
        rd: 2000.0,
        ..ModelCard::reference()
    };
    let data = card_dataset(&truth, &BiasSpec::default());
    let cfg = FitConfig {
        free: vec![FreeParam::SeriesR],
        ..FitConfig::default()
    };
    let init = ModelCard {
        rs: 1500.0,
        rd: 1500.0,
        ..truth.clone()
    };
    let r = extract_card(&data, None, &init, &cfg).unwrap();
    assert_relative_eq!(r.card.rs, 2000.0, max_relative = 1e-3);
    assert_eq!(r.card.rs, r.card.rd);
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = OracleParams::defaults(Polarity::N);
    let point = DesignPoint::new(17.0, 5.0);
    let (iv, cgg) = virtual_tcad(&p, point, &BiasSpec::default()).unwrap();
    let (ivp, cgp) = (dir.path().join("iv.csv"), dir.path().join("cgg.csv"));
    write_iv_csv(&ivp, &iv).unwrap();
    write_cgg_csv(&cgp, &cgg).unwrap();
    let back = read_iv_csv(&ivp, point, 0.75).unwrap();
    assert_eq!(back.rows.len(), iv.rows.len());
    for (a, b) in back.rows.iter().zip(&iv.rows) {
        assert_eq!((a.vg, a.vd), (b.vg, b.vd));
        assert_relative_eq!(a.id, b.id, max_relative = 1e-15);
    }
    assert_eq!(
        read_cgg_csv(&cgp, point, Polarity::N).unwrap().rows.len(),
        cgg.rows.len()
    );
    std::fs::write(&ivp, "vg,id\n0,1\n").unwrap();
    assert!(matches!(
        read_iv_csv(&ivp, point, 0.75),
        Err(CalibError::Csv { .. })
    ));
    std::fs::write(&ivp, "vg,vd,id\n0,0.05,abc\n").unwrap();
    assert!(matches!(
        read_iv_csv(&ivp, point, 0.75),
        Err(CalibError::Csv { .. })
    ));
}
