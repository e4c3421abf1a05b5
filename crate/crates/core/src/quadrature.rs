//! Adaptive Gauss–Kronrod (7/15 point) quadrature on finite, half-infinite
//! and doubly infinite intervals.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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

// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SUBINTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of |K15 − G7| over the final partition.
    pub error: f64,
    pub converged: bool,
}

/// Tolerances: stop once the error estimate is below `max(abs, rel·|I|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-11 }
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * half, ((k - g) * half).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    let (value, error) = kronrod(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, error });
    let (mut total, mut err) = (value, error);
    loop {
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::NumericalBreakdown(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(Integral { value: total, error: err, converged: true });
        }
        if heap.len() >= MAX_SUBINTERVALS {
            return Ok(Integral { value: total, error: err, converged: false });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            return Ok(Integral { value: total, error: err, converged: false });
        }
        let (v1, e1) = kronrod(f, worst.a, mid);
        let (v2, e2) = kronrod(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        // Re-sum to keep rounding drift out of the stopping test.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// `∫_a^b f(x) dx`; either limit may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::InvalidParameters("NaN integration limit".into()));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, converged: true });
    }
    if a > b {
        let r = integrate(f, b, a, tol)?;
        return Ok(Integral { value: -r.value, ..r });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, tol),
        (true, false) => adaptive(
            &|t: f64| {
                let u = 1.0 - t;
                f(a + t / u) / (u * u)
            },
            0.0,
            1.0,
            tol,
        ),
        (false, true) => adaptive(
            &|t: f64| {
                let u = 1.0 - t;
                f(b - t / u) / (u * u)
            },
            0.0,
            1.0,
            tol,
        ),
        (false, false) => adaptive(
            &|t: f64| {
                let u = 1.0 - t * t;
                f(t / u) * (1.0 + t * t) / (u * u)
            },
            -1.0,
            1.0,
            tol,
        ),
    }
}

/// Iterated integral over the rectangle `[a0, b0] × [a1, b1]`.
///
/// The inner error estimates are added to the outer one, which gives a
/// conservative total.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (a0, b0): (f64, f64),
    (a1, b1): (f64, f64),
    tol: Tolerance,
) -> Result<Integral> {
    let inner_err = std::cell::Cell::new(0.0_f64);
    let inner_ok = std::cell::Cell::new(true);
    let outer = integrate(
        |x| match integrate(|y| f(x, y), a1, b1, tol) {
            Ok(r) => {
                inner_err.set(inner_err.get().max(r.error));
                if !r.converged {
                    inner_ok.set(false);
                }
                r.value
            }
            Err(_) => f64::NAN,
        },
        a0,
        b0,
        tol,
    )?;
    let width = if a0.is_finite() && b0.is_finite() { b0 - a0 } else { 1.0 };
    Ok(Integral {
        value: outer.value,
        error: outer.error + inner_err.get() * width,
        converged: outer.converged && inner_ok.get(),
    })
}
