//! Numerical reference routines used only to check the closed-form paths.
//!
//! Nothing in here calls into the special functions or the model, so the
//! values it produces are independent of the code under test.

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (7-point rule).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive 7/15-point Gauss–Kronrod quadrature of `f` over `[a, b]`.
///
/// The node set never touches the endpoints, so integrands with integrable
/// endpoint singularities (log, power laws) are fine.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (value, err) = whole;
        if err <= tol || depth == 0 || (b - a) < 1e-15 {
            return value;
        }
        let mid = 0.5 * (a + b);
        let left = gauss_kronrod(f, a, mid);
        let right = gauss_kronrod(f, mid, b);
        recurse(f, a, mid, 0.5 * tol, left, depth - 1) + recurse(f, mid, b, 0.5 * tol, right, depth - 1)
    }
    let whole = gauss_kronrod(&f, a, b);
    recurse(&f, a, b, tol, whole, 60)
}

/// Integral over `[0, 1]` of `f(p, 1 − p)`, split at 1/2 so that the
/// variable near each endpoint is exact rather than `1 − (1 − ε)`.
pub fn integrate_unit<F: Fn(f64, f64) -> f64>(f: F, tol: f64) -> f64 {
    integrate(|p| f(p, 1.0 - p), 0.0, 0.5, 0.5 * tol) + integrate(|q| f(1.0 - q, q), 0.0, 0.5, 0.5 * tol)
}

fn beta_kernel(alpha: f64, beta: f64, p: f64, q: f64) -> f64 {
    p.powf(alpha - 1.0) * q.powf(beta - 1.0)
}

/// Beta(α, β) density normalised by quadrature rather than by Γ functions.
pub fn beta_density_by_quadrature(alpha: f64, beta: f64) -> impl Fn(f64) -> f64 {
    let norm = integrate_unit(|p, q| beta_kernel(alpha, beta, p, q), 1e-15);
    move |p: f64| beta_kernel(alpha, beta, p, 1.0 - p) / norm
}

/// Expected binary cross-entropy under Beta(α, β), integrated numerically.
pub fn expected_bce_by_quadrature(alpha: f64, beta: f64, label: bool) -> f64 {
    let norm = integrate_unit(|p, q| beta_kernel(alpha, beta, p, q), 1e-15);
    let y = if label { 1.0 } else { 0.0 };
    let expected = integrate_unit(
        |p, q| {
            let bce = -y * p.ln() - (1.0 - y) * q.ln();
            bce * beta_kernel(alpha, beta, p, q)
        },
        1e-14,
    );
    expected / norm
}

/// Central difference (f(x + h) − f(x − h)) / 2h.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_singular_endpoints() {
        let v = integrate(|x| x * x, 0.0, 1.0, 1e-14);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        let v = integrate(|x| x.ln(), 0.0, 1.0, 1e-13);
        assert!((v + 1.0).abs() < 1e-10);
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-7);
    }

    #[test]
    fn beta_2_2_has_closed_form_normaliser() {
        let density = beta_density_by_quadrature(2.0, 2.0);
        assert!((density(0.5) - 1.5).abs() < 1e-12);
    }
}
