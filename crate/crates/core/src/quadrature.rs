//! Globally adaptive 21-point Gauss-Kronrod quadrature and a semi-infinite
//! driver for decaying radial integrands.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_452_758,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// 10-point Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], ...`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: T,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

/// One Gauss-Kronrod 21-point rule on `[a, b]`: (Kronrod value, |K - G|).
pub fn gk21<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::of(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::of(WGK[10]);
    let mut gauss = T::zero();
    for i in 0..10 {
        let dx = half_len * T::of(XGK[i]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::of(WGK[i]) * pair;
        if i % 2 == 1 {
            gauss = gauss + T::of(WG[i / 2]) * pair;
        }
    }
    let value = kronrod * half_len;
    let error = ((kronrod - gauss) * half_len).abs();
    (value, error)
}

/// Bisects the segment with the largest error estimate until the total
/// error is below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_segments: usize,
) -> Result<QuadResult<T>> {
    let (value, error) = gk21(&f, a, b);
    let mut segments = vec![Segment { a, b, value, error }];
    let mut evaluations = 21;
    loop {
        let total: T = segments.iter().fold(T::zero(), |s, g| s + g.value);
        let err: T = segments.iter().fold(T::zero(), |s, g| s + g.error);
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            return Ok(QuadResult {
                value: total,
                abs_error: err,
                evaluations,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        let seg = segments.swap_remove(worst);
        let mid = T::of(0.5) * (seg.a + seg.b);
        // Round-off floor: no further progress possible.
        if segments.len() + 2 > max_segments || mid <= seg.a || mid >= seg.b {
            segments.push(seg);
            if err <= T::of(50.0) * tol {
                return Ok(QuadResult {
                    value: total,
                    abs_error: err,
                    evaluations,
                });
            }
            return Err(Error::QuadratureNotConverged {
                value: total.to_f64_lossy(),
                error: err.to_f64_lossy(),
            });
        }
        let (v1, e1) = gk21(&f, seg.a, mid);
        let (v2, e2) = gk21(&f, mid, seg.b);
        evaluations += 42;
        segments.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        segments.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
}

/// Result of a semi-infinite integral with its certified truncation radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailResult<T> {
    pub value: T,
    pub abs_error: T,
    pub truncation: T,
    pub evaluations: usize,
}

/// `int_0^inf f(r) dr` for an eventually decreasing non-negative integrand.
///
/// Integrates over `[0, 1]` and then the dyadic panels `[2^i, 2^(i+1)]`.
/// Once panel contributions shrink monotonically with ratio `q < 1`, the
/// remaining tail is bounded by `c q / (1 - q)` for the last contribution
/// `c`; integration stops when that bound drops below `tail_rel * head`.
pub fn integrate_to_infinity<T: Scalar, F: Fn(T) -> T>(
    f: F,
    rel_tol: T,
    tail_rel: T,
) -> Result<TailResult<T>> {
    const MAX_PANELS: usize = 200;
    let mut head = T::zero();
    let mut error = T::zero();
    let mut evaluations = 0;
    let mut prev: Option<T> = None;
    let mut a = T::zero();
    let mut b = T::one();
    for _ in 0..MAX_PANELS {
        let panel = integrate(&f, a, b, rel_tol * head.abs(), rel_tol, 2000)?;
        evaluations += panel.evaluations;
        head = head + panel.value;
        error = error + panel.abs_error;
        let c = panel.value.abs();
        if let Some(p) = prev {
            if c == T::zero() && head > T::zero() {
                return Ok(TailResult { value: head, abs_error: error, truncation: b, evaluations });
            }
            if p > T::zero() && c < p {
                let q = c / p;
                let bound = c * q / (T::one() - q);
                if bound <= tail_rel * head.abs() {
                    return Ok(TailResult {
                        value: head,
                        abs_error: error + bound,
                        truncation: b,
                        evaluations,
                    });
                }
            }
        }
        prev = Some(c);
        a = b;
        b = b + b;
        if !b.is_finite() {
            break;
        }
    }
    Err(Error::TailNotCertified {
        radius: a.to_f64_lossy(),
    })
}
