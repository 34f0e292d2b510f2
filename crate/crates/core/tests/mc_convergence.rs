use gcm_core::clamp::{monte_carlo, ClampConfig, ClampModels, Metric};

/// Means at n = 500 and n = 2000 agree within three standard errors. The
/// smaller run is the first 500 samples of the larger one (per-index
/// streams), so the error of the difference is s * sqrt(1/500 - 1/2000).
/// Takes several minutes.
#[test]
#[ignore]
fn monte_carlo_means_converge() {
    let (models, _) = ClampModels::from_default_oracle().unwrap();
    let cfg = ClampConfig::default();
    let small = monte_carlo(&cfg, &models, 500, 0.5, 0.4, 20240601).unwrap();
    let large = monte_carlo(&cfg, &models, 2000, 0.5, 0.4, 20240601).unwrap();
    for m in Metric::ALL {
        let (a, b) = (small.summary_for(m), large.summary_for(m));
        let se = b.std_dev * (1.0 / 500.0 - 1.0 / 2000.0f64).sqrt();
        assert!(
            (a.mean - b.mean).abs() < 3.0 * se,
            "{m}: {} vs {} (se {se:e})",
            a.mean,
            b.mean
        );
    }
}
