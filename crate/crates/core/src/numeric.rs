//! Scalar numerics: adaptive Simpson quadrature, the regularized lower
//! incomplete gamma function and golden-section search.

use core::fmt;

/// Hard cap on integrand evaluations per quadrature call.
pub const MAX_EVALUATIONS: usize = 1 << 20;
const MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub evaluations: usize,
    /// `false` when the depth or evaluation cap stopped refinement somewhere.
    pub converged: bool,
}

/// Adaptive Simpson integration of `f` over `[a, b]` with absolute tolerance `tol`.
///
/// Each accepted panel carries the usual Richardson correction. Refinement stops
/// at a depth of 48 halvings or after [`MAX_EVALUATIONS`] evaluations, in which
/// case the best estimate is still returned with `converged = false`.
pub fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, tol: f64) -> Quadrature
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Quadrature {
            value: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut state = SimpsonState {
        evaluations: 3,
        converged: true,
    };
    let value = simpson_step(&mut f, &mut state, a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    Quadrature {
        value,
        evaluations: state.evaluations,
        converged: state.converged,
    }
}

struct SimpsonState {
    evaluations: usize,
    converged: bool,
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &mut F,
    state: &mut SimpsonState,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64
where
    F: FnMut(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    state.evaluations += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if libm::fabs(delta) <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 || state.evaluations >= MAX_EVALUATIONS {
        state.converged = false;
        return left + right + delta / 15.0;
    }
    simpson_step(f, state, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, state, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Regularized lower incomplete gamma `P(s, x)` for `s > 0`, `x >= 0`.
///
/// Series expansion below `x < s + 1`, Lentz continued fraction above.
pub fn regularized_gamma_p(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let log_prefix = s * libm::log(x) - x - libm::lgamma(s);
    if x < s + 1.0 {
        let mut ap = s;
        let mut sum = 1.0 / s;
        let mut term = sum;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if libm::fabs(term) < libm::fabs(sum) * 1e-17 {
                break;
            }
        }
        (sum * libm::exp(log_prefix)).min(1.0)
    } else {
        1.0 - regularized_gamma_q_cf(s, x, log_prefix)
    }
}

fn regularized_gamma_q_cf(s: f64, x: f64, log_prefix: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < 1e-16 {
            break;
        }
    }
    libm::exp(log_prefix) * h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchError {
    /// `lo >= hi`, or a bound or tolerance is not finite / positive.
    InvalidBracket { lo: f64, hi: f64 },
    /// The objective returned NaN or an infinity at `x`.
    NonFiniteObjective { x: f64 },
}

impl fmt::Display for SearchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchError::InvalidBracket { lo, hi } => {
                write!(f, "invalid search bracket [{lo}, {hi}]")
            }
            SearchError::NonFiniteObjective { x } => {
                write!(f, "objective is not finite at x = {x}")
            }
        }
    }
}

impl core::error::Error for SearchError {}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the minimizer of `objective` on `[lo, hi]`.
///
/// For a unimodal objective the returned point is within `tol` of the true
/// minimizer. The iteration count depends only on `lo`, `hi` and `tol`, so
/// non-unimodal objectives still terminate.
pub fn golden_section_minimize<F>(mut objective: F, lo: f64, hi: f64, tol: f64) -> Result<f64, SearchError>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi || !(tol > 0.0) {
        return Err(SearchError::InvalidBracket { lo, hi });
    }
    let mut eval = |x: f64| {
        let v = objective(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SearchError::NonFiniteObjective { x })
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > 2.0 * tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_exact() {
        let q = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-12);
        assert!((q.value - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
        assert!(q.converged);
    }

    #[test]
    fn simpson_empty_interval() {
        let q = adaptive_simpson(|x| x, 2.0, 2.0, 1e-8);
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn gamma_p_known_values() {
        // P(1, x) = 1 - e^-x
        for &x in &[0.1, 1.0, 2.5, 10.0] {
            let want = 1.0 - libm::exp(-x);
            assert!((regularized_gamma_p(1.0, x) - want).abs() < 1e-14);
        }
        // P(0.5, x) = erf(sqrt(x))
        for &x in &[0.01, 0.3, 2.0, 7.0] {
            let want = libm::erf(libm::sqrt(x));
            assert!((regularized_gamma_p(0.5, x) - want).abs() < 1e-13);
        }
        assert_eq!(regularized_gamma_p(1.5, 0.0), 0.0);
    }

    #[test]
    fn gamma_p_matches_quadrature() {
        for &s in &[1.333_333_333_333_333_3, 1.5, 2.0] {
            for &x in &[0.05, 0.7, 1.9, 4.0] {
                let q = adaptive_simpson(|t| libm::pow(t, s - 1.0) * libm::exp(-t), 0.0, x, 1e-13);
                let want = q.value / libm::tgamma(s);
                assert!((regularized_gamma_p(s, x) - want).abs() < 1e-10, "s={s} x={x}");
            }
        }
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section_minimize(|x| (x - 2.0) * (x - 2.0), 0.0, 5.0, 1e-6).unwrap();
        assert!((x - 2.0).abs() <= 1e-6);
    }

    #[test]
    fn golden_section_kink() {
        let x = golden_section_minimize(f64::abs, -1.0, 3.0, 1e-6).unwrap();
        assert!(x.abs() <= 1e-6);
    }

    #[test]
    fn golden_section_matches_grid_oracle() {
        let f = |x: f64| x.powi(4) - 3.0 * x.powi(3) + 2.0;
        let mut best = (f64::INFINITY, 0.0);
        let n = 100_000;
        for i in 0..=n {
            let x = 3.0 * i as f64 / n as f64;
            let v = f(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        // Grid oracle: 2.25 (f' = 4x^3 - 9x^2 vanishes at x = 9/4).
        assert!((best.1 - 2.25).abs() < 1e-4);
        let x = golden_section_minimize(f, 0.0, 3.0, 1e-6).unwrap();
        assert!((x - best.1).abs() < 1e-4);
    }

    #[test]
    fn golden_section_errors() {
        assert!(matches!(
            golden_section_minimize(|x| x, 1.0, 1.0, 1e-6),
            Err(SearchError::InvalidBracket { .. })
        ));
        assert!(matches!(
            golden_section_minimize(|_| f64::NAN, 0.0, 1.0, 1e-6),
            Err(SearchError::NonFiniteObjective { .. })
        ));
    }

    #[test]
    fn golden_section_deterministic() {
        let f = |x: f64| (x - 0.3).abs() + 0.1 * x.sin();
        let a = golden_section_minimize(f, -2.0, 2.0, 1e-9).unwrap();
        let b = golden_section_minimize(f, -2.0, 2.0, 1e-9).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
