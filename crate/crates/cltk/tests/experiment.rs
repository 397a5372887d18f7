//! Moderate-height moment experiments: windowed and sharp-cutoff second
//! moments of the builtin form against the predicted main term, plus the
//! stability and shift-dependence checks that don't need the full
//! acceptance-scale heights.

use cltk::experiment::{
    make_window, second_moment_mainterm, second_moment_numeric, sharp_cutoff_mainterm,
    sharp_cutoff_moment, DEFAULT_GRID_STEP,
};
use cltk::forms::{build_delta_coefficients, CoefficientTable, ModularForm, ShiftPair, MAX_BUILTIN_N};
use cltk::lfunc::AfeKernelConfig;
use cltk::rankin::MomentConstants;
use num_complex::Complex64;
use std::sync::OnceLock;

fn table() -> &'static CoefficientTable {
    static TABLE: OnceLock<CoefficientTable> = OnceLock::new();
    TABLE.get_or_init(|| build_delta_coefficients(MAX_BUILTIN_N).unwrap())
}

fn constants(form: &ModularForm) -> MomentConstants {
    MomentConstants::compute(form, table()).unwrap()
}

/// Windowed numeric moment at T = 300 within 15% of the predicted main
/// term 𝔞_f·ln(t√N/2π) + 𝔟_f integrated against the window.
#[test]
fn windowed_moment_tracks_mainterm_at_t300() {
    let form = ModularForm::delta();
    let consts = constants(&form);
    let window = make_window(300.0).unwrap();
    let cfg = AfeKernelConfig::default();
    let est = second_moment_numeric(
        &form,
        &window,
        ShiftPair::zero(),
        DEFAULT_GRID_STEP,
        &cfg,
        table(),
    )
    .unwrap();
    let predicted = second_moment_mainterm(&form, &window, &consts).value();
    assert_eq!(est.value.im, 0.0);
    let numeric = est.value.re;
    assert!(numeric > 0.0 && predicted > 0.0);
    // Quadrature and truncation errors are far below the comparison scale.
    assert!(est.error_estimate <= 1e-3 * numeric);
    assert!(est.tail_bound <= 1e-3 * numeric);
    let rel = (numeric - predicted).abs() / predicted;
    assert!(
        rel <= 0.15,
        "T = 300: numeric {numeric} vs main term {predicted} (rel {rel:.4})"
    );
}

/// Halving the grid step at T = 200 moves the value by under one part in
/// two thousand — the trapezoid bulk error scales like h⁴ for the smooth
/// window, so the two runs agree to far better than the 0.1% error budget.
#[test]
fn windowed_moment_is_grid_stable_at_t200() {
    let form = ModularForm::delta();
    let window = make_window(200.0).unwrap();
    let cfg = AfeKernelConfig::default();
    let coarse =
        second_moment_numeric(&form, &window, ShiftPair::zero(), 0.1, &cfg, table()).unwrap();
    let fine =
        second_moment_numeric(&form, &window, ShiftPair::zero(), 0.05, &cfg, table()).unwrap();
    let rel = (coarse.value.re - fine.value.re).abs() / fine.value.re;
    assert!(
        rel <= 5e-4,
        "step 0.1 vs 0.05 at T = 200: {} vs {} (rel {rel:.2e})",
        coarse.value.re,
        fine.value.re
    );
    // The coarse run's own error estimate covers the observed shift.
    assert!(coarse.error_estimate >= 0.2 * (coarse.value.re - fine.value.re).abs());
}

/// Sharp-cutoff moment at T = 200 lands within 20% of
/// 𝔞_f·T·ln T + [𝔟_f + 𝔞_f·ln(√N/2πe)]·T.
#[test]
fn sharp_cutoff_ratio_near_one_at_t200() {
    let form = ModularForm::delta();
    let consts = constants(&form);
    let cfg = AfeKernelConfig::default();
    let est = sharp_cutoff_moment(&form, 200.0, DEFAULT_GRID_STEP, &cfg, table()).unwrap();
    let predicted = sharp_cutoff_mainterm(&form, &consts, 200.0);
    let ratio = est.value / predicted;
    assert!(
        (0.8..=1.2).contains(&ratio),
        "T = 200: numeric {} vs predicted {predicted} (ratio {ratio:.4})",
        est.value
    );
    assert!(est.error_estimate <= 1e-3 * est.value);
    assert!(est.tail_bound <= 1e-3 * est.value);
}

/// Small real shifts on the line α = −β: replacing c by −c swaps the two
/// L-factors, so m(−c) = conj(m(c)) — the real part is even in c (a linear
/// fit through c ∈ {−0.3, 0, 0.3}/ln T has slope ≪ the moment's own scale),
/// the small imaginary part is odd, and the values stay within ~10% of the
/// unshifted one (the even second-order response is (2c·ln(T/2π)/ln T)²-
/// sized).
#[test]
fn opposite_real_shifts_give_flat_slope_at_t120() {
    let form = ModularForm::delta();
    let window = make_window(120.0).unwrap();
    let cfg = AfeKernelConfig::default();
    let ln_t = 120.0_f64.ln();
    let cs = [-0.3, 0.0, 0.3];
    let mut values = Vec::new();
    for &c in &cs {
        let a = c / ln_t;
        let shifts = ShiftPair::new(Complex64::new(a, 0.0), Complex64::new(-a, 0.0));
        let est = second_moment_numeric(&form, &window, shifts, 0.1, &cfg, table()).unwrap();
        assert!(
            est.value.im.abs() <= 0.01 * est.value.re,
            "c = {c}: imaginary part out of scale in {}",
            est.value
        );
        values.push(est.value);
    }
    // conj symmetry across c ↦ −c, up to quadrature noise.
    assert!((values[0].im + values[2].im).abs() <= 1e-3 * values[1].re);
    assert!(values[1].im == 0.0);
    // Least squares over the symmetric design {−d, 0, d}:
    // slope = (m(d) − m(−d)) / (2d), which the evenness sends to ≈ 0.
    let m0 = values[1].re;
    let slope = (values[2].re - values[0].re) / (cs[2] - cs[0]);
    assert!(slope.is_finite());
    assert!(
        slope.abs() <= 0.05 * m0,
        "slope {slope} vs central value {m0}"
    );
    for (&c, &v) in cs.iter().zip(&values) {
        assert!(
            (v.re - m0).abs() <= 0.10 * m0,
            "c = {c}: moment {} drifts from {m0}",
            v.re
        );
    }
}

/// With α = β = 0.25/ln T the sum α + β no longer shrinks like o(1/ln²T),
/// and the unshifted main term is only good to the crude envelope
/// |α+β|·T·ln²T — the numeric moment stays inside it at T = 120.
#[test]
fn shifted_moment_stays_inside_envelope_at_t120() {
    let form = ModularForm::delta();
    let consts = constants(&form);
    let window = make_window(120.0).unwrap();
    let cfg = AfeKernelConfig::default();
    let t = 120.0_f64;
    let a = 0.25 / t.ln();
    let shifts = ShiftPair::new(Complex64::new(a, 0.0), Complex64::new(a, 0.0));
    let est = second_moment_numeric(&form, &window, shifts, 0.1, &cfg, table()).unwrap();
    let unshifted = second_moment_mainterm(&form, &window, &consts).value();
    let envelope = 2.0 * a * t * t.ln() * t.ln();
    let diff = (est.value.re - unshifted).abs();
    assert!(
        diff <= envelope,
        "|numeric − unshifted main term| = {diff} exceeds envelope {envelope}"
    );
    // And the discrepancy is genuinely larger than the quadrature noise —
    // the envelope is doing real work here, not vacuously absorbing zero.
    assert!(diff > 100.0 * est.error_estimate.max(est.tail_bound));
}
