//! Adaptive Gauss–Kronrod quadrature.
//!
//! Used as an independent numerical route for densities, normalization
//! checks and expectation identities. Nothing on the pricing path calls it.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive integration of `f` over `[a, b]`, bisecting the
/// interval with the largest error estimate until the total error is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut value = v;
    let mut error = e;
    while error > abs_tol.max(rel_tol * value.abs()) && parts.len() < MAX_INTERVALS {
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, pv, pe) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            parts.push((lo, hi, pv, 0.0));
            continue;
        }
        let (lv, le) = gk15(&f, lo, mid);
        let (rv, re) = gk15(&f, mid, hi);
        value += lv + rv - pv;
        error += le + re - pe;
        parts.push((lo, mid, lv, le));
        parts.push((mid, hi, rv, re));
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let value = parts.iter().map(|p| p.2).sum();
    let error = parts.iter().map(|p| p.3).sum();
    Estimate { value, error, intervals: parts.len() }
}

/// Integral over `[a, inf)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    integrate(
        |t| {
            let s = 1.0 - t;
            let v = f(a + t / s);
            if v == 0.0 { 0.0 } else { v / (s * s) }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Integral over the whole real line through `x = t / (1 - t^2)`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, abs_tol: f64, rel_tol: f64) -> Estimate {
    integrate(
        |t| {
            let s = 1.0 - t * t;
            let v = f(t / s);
            if v == 0.0 { 0.0 } else { v * (1.0 + t * t) / (s * s) }
        },
        -1.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}
