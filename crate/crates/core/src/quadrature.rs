//! Adaptive Gauss–Kronrod (7/15) integration in one and two dimensions.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            relative: 1e-10,
            absolute: 1e-300,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn relative(relative: f64) -> Self {
        Tolerance {
            relative,
            ..Tolerance::default()
        }
    }
}

fn kronrod_rule<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst interval until the
/// summed error estimate meets the tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let mut intervals = vec![(a, b, kronrod_rule(&mut f, a, b))];
    loop {
        let value: f64 = intervals.iter().map(|i| i.2.value).sum();
        let error: f64 = intervals.iter().map(|i| i.2.error).sum();
        if !value.is_finite() {
            return Err(Error::Convergence(format!("integrand not finite on [{a}, {b}]")));
        }
        if error <= (tol.relative * value.abs()).max(tol.absolute) {
            return Ok(Estimate { value, error });
        }
        if intervals.len() >= tol.max_intervals {
            return Err(Error::Convergence(format!(
                "{} subintervals on [{a}, {b}], error estimate {error:e} vs value {value:e}",
                intervals.len()
            )));
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Convergence(format!(
                "interval [{lo}, {hi}] cannot be split further"
            )));
        }
        intervals.push((lo, mid, kronrod_rule(&mut f, lo, mid)));
        intervals.push((mid, hi, kronrod_rule(&mut f, mid, hi)));
    }
}

/// Iterated integral `∫_{x0}^{x1} ∫_{y0(x)}^{y1(x)} f(x, y) dy dx`.
///
/// The inner integrals run at a tolerance 100 times tighter than the outer
/// one so their error does not dominate the outer estimate.
pub fn integrate_2d<F, L, U>(f: F, x0: f64, x1: f64, y_lo: L, y_hi: U, tol: Tolerance) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    U: Fn(f64) -> f64,
{
    let inner_tol = Tolerance {
        relative: tol.relative * 1e-2,
        ..tol
    };
    let mut failure = None;
    let outer = integrate(
        |x| match integrate(|y| f(x, y), y_lo(x), y_hi(x), inner_tol) {
            Ok(e) => e.value,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        x0,
        x1,
        tol,
    );
    match failure {
        Some(e) => Err(e),
        None => outer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let e = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((e.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        // ∫₀¹ 1/(1e-4 + x²) dx = atan(100)/1e-2
        let e = integrate(|x| 1.0 / (1e-4 + x * x), 0.0, 1.0, Tolerance::relative(1e-12)).unwrap();
        let want = 100.0_f64.atan() * 100.0;
        assert!(((e.value - want) / want).abs() < 1e-11);
    }

    #[test]
    fn unit_disc_area() {
        let e = integrate_2d(
            |_, _| 1.0,
            -1.0,
            1.0,
            |x| -(1.0 - x * x).sqrt(),
            |x| (1.0 - x * x).sqrt(),
            Tolerance::relative(1e-9),
        )
        .unwrap();
        assert!((e.value - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn reports_non_convergence() {
        let tol = Tolerance {
            relative: 1e-14,
            absolute: 0.0,
            max_intervals: 4,
        };
        let r = integrate(|x| x.abs().sqrt().recip(), -1.0, 1.0, tol);
        assert!(matches!(r, Err(Error::Convergence(_))));
    }
}
