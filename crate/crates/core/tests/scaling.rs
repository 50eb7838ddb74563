use torus_spectra::logdet::in_s;
use torus_spectra::quadrature::QuadratureConfig;

/// `|I_n(s) - log s²| < 1e-3` at `s ∈ {10, 30}`. This does not hold: the
/// leading correction is `2n/s²`, already 0.02 for `n = 1, s = 10`.
/// Run with `--ignored` to see the failure.
#[test]
#[ignore = "tolerance is below the 2n/s² correction"]
fn in_s_approaches_log_s2_within_1e_3() {
    let cfg = QuadratureConfig::default();
    for n in 1..=3usize {
        for s in [10.0f64, 30.0] {
            let gap = in_s(s, n, &cfg).unwrap() - (s * s).ln();
            assert!(gap.abs() < 1e-3, "n={n} s={s}: I_n(s) - log s² = {gap:.3e}");
        }
    }
}

#[test]
fn in_s_minus_log_s2_decreases() {
    let cfg = QuadratureConfig::default();
    for n in 1..=3usize {
        let gaps: Vec<f64> = [10.0f64, 30.0, 100.0]
            .iter()
            .map(|&s| (in_s(s, n, &cfg).unwrap() - (s * s).ln()).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "n={n}: {gaps:?}");
    }
}
