//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! The interval with the largest local error estimate `|K15 − G7|` is bisected
//! until the summed estimate meets `max(abs_tol, rel_tol·|I|)` or the
//! evaluation budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
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

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_evals: 2_000_000,
        }
    }
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
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
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut bad = !fc.is_finite();
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = h * x;
        let (f1, f2) = (f(c - dx), f(c + dx));
        bad |= !(f1.is_finite() && f2.is_finite());
        resk += w * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    if bad {
        return Err(Error::Domain(format!("non-finite integrand on [{a:e}, {b:e}]")));
    }
    Ok((resk * h, ((resk - resg) * h).abs()))
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the given
/// subdivision. Breaks must be non-decreasing; empty pieces are skipped.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Err(Error::Precondition("quadrature needs at least two break points".into()));
    }
    if breaks.windows(2).any(|w| !(w[1] >= w[0])) || breaks.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition(format!("quadrature breaks must be finite and sorted: {breaks:?}")));
    }
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = kronrod15(&f, w[0], w[1])?;
        evals += 15;
        value += v;
        error += e;
        heap.push(Segment { a: w[0], b: w[1], value: v, error: e });
    }
    // Segments too narrow to split keep their error but leave the queue.
    let mut frozen_error = 0.0;
    loop {
        if error <= opts.target(value) {
            return Ok(QuadResult { value, error, evals });
        }
        let Some(seg) = heap.pop() else { break };
        if evals + 30 > opts.max_evals {
            heap.push(seg);
            break;
        }
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) || (seg.b - seg.a) <= 4.0 * f64::EPSILON * mid.abs() {
            frozen_error += seg.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = kronrod15(&f, seg.a, mid)?;
        let (v2, e2) = kronrod15(&f, mid, seg.b)?;
        evals += 30;
        value += v1 + v2 - seg.value;
        error += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        // Re-sum to keep the running totals free of cancellation drift.
        if evals % 3000 < 30 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum::<f64>() + frozen_error;
        }
    }
    Err(Error::Tolerance {
        estimate: value,
        achieved: error,
        requested: opts.target(value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_for_high_degree_polynomials() {
        // K15 integrates degree 22 exactly (3n+1 for n = 7).
        let (v, _) = kronrod15(&|x: f64| x.powi(22), 0.0, 1.0).unwrap();
        assert!((v - 1.0 / 23.0).abs() < 1e-15);
        let (v, _) = kronrod15(&|x: f64| 3.0 * x * x - 1.0, -1.0, 2.0).unwrap();
        assert!((v - 6.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        let g: f64 = 2.0 * (WG[0] + WG[1] + WG[2]) + WG[3];
        let k: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert!((g - 2.0).abs() < 1e-15);
        assert!((k - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaks_and_endpoint_singularities() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadOptions::relative(1e-12)).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() <= 1e-11 * exact);

        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, QuadOptions::relative(1e-9)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn breaks_and_budget() {
        let r = integrate_with_breaks(|x: f64| (-x).exp(), &[0.0, 1.0, 1.0, 5.0, 40.0], QuadOptions::relative(1e-13))
            .unwrap();
        assert!((r.value - (1.0 - (-40.0f64).exp())).abs() < 1e-13);

        let opts = QuadOptions {
            max_evals: 45,
            ..QuadOptions::relative(1e-14)
        };
        let err = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 3.0, opts).unwrap_err();
        assert!(matches!(err, Error::Tolerance { .. }));
        assert!(matches!(
            integrate(|_| f64::NAN, 0.0, 1.0, QuadOptions::default()),
            Err(Error::Domain(_))
        ));
    }
}
