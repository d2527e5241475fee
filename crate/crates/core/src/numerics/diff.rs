/// Ridders' extrapolated central difference. Returns `(derivative, error estimate)`.
///
/// `h` is the initial step; the tableau shrinks it by a factor 1.4 per level.
pub fn ridders_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> (f64, f64) {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 12;
    let mut a = [[0.0_f64; NTAB]; NTAB];
    let mut hh = h;
    a[0][0] = (f(x + hh) - f(x - hh)) / (2.0 * hh);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..NTAB {
        hh /= CON;
        a[0][i] = (f(x + hh) - f(x - hh)) / (2.0 * hh);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    (best, err)
}

/// One-sided Richardson extrapolation of forward differences `(f(x+h) − f(x))/h`.
pub fn forward_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    const LEVELS: usize = 8;
    let fx = f(x);
    let mut prev = [0.0_f64; LEVELS];
    let mut best = f64::NAN;
    let mut err = f64::INFINITY;
    let mut hh = h;
    for i in 0..LEVELS {
        let mut row = [0.0_f64; LEVELS];
        row[0] = (f(x + hh) - fx) / hh;
        let mut fac = 2.0;
        for j in 1..=i {
            row[j] = (fac * row[j - 1] - prev[j - 1]) / (fac - 1.0);
            fac *= 2.0;
        }
        if i > 0 {
            let e = (row[i] - prev[i - 1]).abs();
            if e < err {
                err = e;
                best = row[i];
            }
        } else {
            best = row[0];
        }
        prev = row;
        hh *= 0.5;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_and_sin() {
        let (d, _) = ridders_derivative(f64::exp, 0.3, 0.1);
        assert!((d - 0.3_f64.exp()).abs() < 1e-12);
        let (d, _) = ridders_derivative(f64::sin, 1.0, 0.1);
        assert!((d - 1.0_f64.cos()).abs() < 1e-12);
        let d = forward_derivative(f64::exp, 0.0, 0.05);
        assert!((d - 1.0).abs() < 1e-11, "{d}");
    }
}
