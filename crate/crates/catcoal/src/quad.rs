//! Adaptive quadrature on finite intervals.
//!
//! A 21-point Gauss-Kronrod rule with greedy interval bisection: the segment
//! with the largest error estimate is split until the summed error estimate
//! meets `max(abs_tol, rel_tol * |integral|)`. Endpoint singularities are
//! handled by the callers through substitutions, so the integrands seen here
//! are bounded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Abscissae of the 21-point Kronrod rule on [-1, 1] (positive half).
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
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Weights of the embedded 10-point Gauss rule.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Weights of the 21-point Kronrod rule.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const MAX_SEGMENTS: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// GSL-style error rescaling: sharpens the raw `|kronrod - gauss|` estimate.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut fv1 = [0.0_f64; 10];
    let mut fv2 = [0.0_f64; 10];

    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[10];
    let mut res_abs = res_kronrod.abs();

    for (j, wg) in WG.iter().enumerate() {
        let jtw = j * 2 + 1;
        let abscissa = half * XGK[jtw];
        let fval1 = f(center - abscissa);
        let fval2 = f(center + abscissa);
        fv1[jtw] = fval1;
        fv2[jtw] = fval2;
        res_gauss += wg * (fval1 + fval2);
        res_kronrod += WGK[jtw] * (fval1 + fval2);
        res_abs += WGK[jtw] * (fval1.abs() + fval2.abs());
    }
    for j in 0..5 {
        let jtwm1 = j * 2;
        let abscissa = half * XGK[jtwm1];
        let fval1 = f(center - abscissa);
        let fval2 = f(center + abscissa);
        fv1[jtwm1] = fval1;
        fv2[jtwm1] = fval2;
        res_kronrod += WGK[jtwm1] * (fval1 + fval2);
        res_abs += WGK[jtwm1] * (fval1.abs() + fval2.abs());
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = (res_kronrod - res_gauss) * half;
    let value = res_kronrod * half;
    let abs_half = half.abs();
    (value, rescale_error(err, res_abs * abs_half, res_asc * abs_half))
}

/// Integrate `f` over `[a, b]` to the requested tolerances.
///
/// The run stops once the summed segment error drops below
/// `max(abs_tol, rel_tol * |value|)`; exceeding the segment budget first is
/// reported as [`Error::QuadratureNonConvergence`] with the achieved error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("non-finite integration bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0 });
    }

    let (value, error) = gk21(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut evaluations = 21;

    loop {
        let total_value: f64 = heap.iter().map(|s| s.value).sum();
        let total_error: f64 = heap.iter().map(|s| s.error).sum();
        let target = abs_tol.max(rel_tol * total_value.abs());
        if total_error <= target {
            return Ok(QuadResult { value: total_value, abs_error: total_error, evaluations });
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::QuadratureNonConvergence { requested: target, achieved: total_error });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk21(&f, worst.a, mid);
        let (rv, re) = gk21(&f, mid, worst.b);
        evaluations += 42;
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x, 0.0, 1.0, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(r.value, 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn oscillatory_integrand() {
        let r = integrate(|x| (9.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-12, 1e-12).unwrap();
        let exact = 2.0 / 9.0;
        assert_relative_eq!(r.value, exact, max_relative = 1e-10);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        // sqrt singularity at 0; adaptive bisection digs in far enough.
        let r = integrate(|x| x.powf(-0.5), 1e-12, 1.0, 1e-9, 1e-9).unwrap();
        assert_relative_eq!(r.value, 2.0 - 2e-6, max_relative = 1e-7);
    }

    #[test]
    fn empty_interval() {
        let r = integrate(|x| x, 2.0, 2.0, 1e-12, 1e-12).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn non_finite_bounds_rejected() {
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-9, 1e-9).is_err());
    }
}
