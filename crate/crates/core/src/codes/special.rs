//! Gaussian tail and regularized incomplete gamma functions, with log-domain
//! variants for the magnitudes met in long block codes.

use libm::erfc;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

const ASYMPTOTIC_FROM: f64 = 8.0;

/// Gaussian tail `Q(x) = P[Z > x]` for a standard normal `Z`.
pub fn q_function(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 1.0 - q_function(-x);
    }
    if x > ASYMPTOTIC_FROM {
        return ln_q_tail(x).exp();
    }
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `ln Q(x)`, finite for every finite `x`.
pub fn ln_q_function(x: f64) -> f64 {
    if x > ASYMPTOTIC_FROM {
        ln_q_tail(x)
    } else {
        q_function(x).ln()
    }
}

/// Asymptotic series `Q(x) ~ phi(x)/x * sum (-1)^n (2n-1)!! / x^(2n)`,
/// summed while terms keep shrinking.
fn ln_q_tail(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..60 {
        let next = -term * (2 * n - 1) as f64 / x2;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -0.5 * x2 - x.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + sum.ln()
}

/// `(ln P(a, x), ln Q(a, x))` for the regularized lower/upper incomplete
/// gamma functions, `a > 0`, `x >= 0`.
///
/// The smaller of the two is computed directly (series for `x < a + 1`,
/// Lentz continued fraction otherwise) and the other through `ln1p`.
pub fn ln_gamma_pq(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x.is_infinite() {
        return (0.0, f64::NEG_INFINITY);
    }
    let prefactor = -x + a * x.ln();
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let ln_p = prefactor - ln_gamma(a) + sum.ln();
        (ln_p, (-ln_p.exp()).ln_1p())
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let ln_q = prefactor - ln_gamma(a) + h.ln();
        ((-ln_q.exp()).ln_1p(), ln_q)
    }
}
