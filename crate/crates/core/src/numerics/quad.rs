use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Kronrod abscissae on [0, 1); odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const GL8_X: [f64; 4] = [
    0.183434642495649804939476142360184,
    0.525532409916328985817739049189254,
    0.796666477413626739591553936475830,
    0.960289856497536231683560868569473,
];
const GL8_W: [f64; 4] = [
    0.362683783378361982965150449277196,
    0.313706645877887287337962201986601,
    0.222381034453374470544355994426241,
    0.101228536290376259152531354309962,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        kron += w * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).abs();
    // QUADPACK-style error scaling, kept conservative near roundoff.
    let err = if err > 0.0 { err.max(50.0 * f64::EPSILON * value.abs()) } else { err };
    (value, err)
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
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, converged: true };
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut n = 1;
    loop {
        if !total.is_finite() {
            return QuadResult { value: total, error: f64::INFINITY, converged: false };
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            break;
        }
        if n >= opts.max_intervals {
            let value = heap.iter().map(|p| p.value).sum();
            return QuadResult { value, error: err, converged: false };
        }
        let worst = heap.pop().expect("heap never empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            let value = heap.iter().map(|p| p.value).sum();
            return QuadResult { value, error: err, converged: false };
        }
        let (v1, e1) = gk15(&f, worst.a, m);
        let (v2, e2) = gk15(&f, m, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, error: e2 });
        n += 1;
    }
    // re-sum to shed the drift of the running update
    let mut s = super::NeumaierSum::new();
    let mut e = 0.0;
    for p in heap.iter() {
        s.add(p.value);
        e += p.error;
    }
    QuadResult { value: s.value(), error: e, converged: true }
}

/// Fixed 8-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (&x, &w) in GL8_X.iter().zip(GL8_W.iter()) {
        s += w * (f(c - h * x) + f(c + h * x));
    }
    s * h
}

/// Nodes and weights of the 8-point Gauss–Legendre rule mapped to `[a, b]`.
pub(crate) fn gauss_legendre_points(a: f64, b: f64) -> [(f64, f64); 8] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 8];
    for (j, (&x, &w)) in GL8_X.iter().zip(GL8_W.iter()).enumerate() {
        out[2 * j] = (c - h * x, w * h);
        out[2 * j + 1] = (c + h * x, w * h);
    }
    out
}

/// Outcome of integrating up to a possibly singular right endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HorizonIntegral {
    Finite { value: f64, error: f64 },
    Divergent { partial: f64 },
    Indeterminate { partial: f64 },
}

impl HorizonIntegral {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            HorizonIntegral::Finite { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, HorizonIntegral::Divergent { .. })
    }
}

const SHELLS: usize = 50;
const DIVERGENCE_RUN: usize = 8;
const RATIO_FLOOR: f64 = 1.0 - 1e-3;

/// Integrates `f` over `[a, b)` where `b` may carry an endpoint singularity.
///
/// The interval is cut into dyadic shells `(b - L 2^-k, b - L 2^-k-1)`. The shell
/// contributions either die out, settle into a geometric tail that is summed in
/// closed form, or stop decaying, in which case the integral is declared divergent.
pub fn integrate_to_horizon<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> HorizonIntegral {
    let len = b - a;
    if len <= 0.0 {
        return HorizonIntegral::Finite { value: 0.0, error: 0.0 };
    }
    let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-13, max_intervals: 200 };
    let head = integrate(&f, a, b - 0.5 * len, opts);
    if !head.value.is_finite() {
        return HorizonIntegral::Divergent { partial: head.value };
    }
    let mut sum = super::NeumaierSum::new();
    sum.add(head.value);
    let mut err = head.error;
    let mut contrib: Vec<f64> = Vec::with_capacity(SHELLS);
    let mut quiet = 0;
    // shells are laid out in the distance s = b - t so their widths are exact
    let g = |s: f64| f(b - s);
    for k in 1..=SHELLS {
        let outer = len * 0.5_f64.powi(k as i32);
        let inner = 0.5 * outer;
        if inner < 1e-12 * b.abs().max(len) {
            break;
        }
        let r = integrate(g, inner, outer, opts);
        if !r.value.is_finite() {
            return HorizonIntegral::Divergent { partial: sum.value() };
        }
        sum.add(r.value);
        err += r.error;
        contrib.push(r.value);
        let total = sum.value();

        if r.value.abs() <= 1e-17 * total.abs() || r.value == 0.0 {
            quiet += 1;
            if quiet >= 3 {
                return HorizonIntegral::Finite { value: total, error: err };
            }
        } else {
            quiet = 0;
        }

        let n = contrib.len();
        if n > DIVERGENCE_RUN {
            let window = &contrib[n - DIVERGENCE_RUN - 1..];
            let ratios: Vec<f64> = window.windows(2).map(|w| w[1] / w[0]).collect();
            let same_sign = window.iter().all(|c| c.signum() == window[0].signum() && *c != 0.0);
            if same_sign && ratios.iter().all(|&q| q >= RATIO_FLOOR) {
                return HorizonIntegral::Divergent { partial: total };
            }
            // geometric tail once the ratios settle
            let last = &ratios[ratios.len() - 4..];
            let q = last[last.len() - 1];
            let spread = last
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(0.0_f64, f64::max);
            if same_sign && q > 0.0 && q < RATIO_FLOOR && spread < 1e-6 {
                let c = contrib[n - 1];
                let tail = c * q / (1.0 - q);
                let tail_err = (c * spread / ((1.0 - q) * (1.0 - q))).abs();
                if tail.abs() <= 1e-13 * total.abs().max(1e-300) || tail_err <= 1e-11 * total.abs() {
                    return HorizonIntegral::Finite {
                        value: total + tail,
                        error: err + tail_err,
                    };
                }
            }
        }
    }
    // shells exhausted: accept only if the last contributions are negligible
    let total = sum.value();
    let n = contrib.len();
    if n >= 2 {
        let c = contrib[n - 1];
        let q = c / contrib[n - 2];
        if q.abs() < RATIO_FLOOR && q > -RATIO_FLOOR {
            let tail = if q > 0.0 { c * q / (1.0 - q) } else { c };
            if tail.abs() <= 1e-10 * total.abs().max(1e-300) {
                return HorizonIntegral::Finite { value: total + tail, error: err + tail.abs() };
            }
        }
    }
    HorizonIntegral::Indeterminate { partial: total }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_integrals() {
        let r = integrate(f64::exp, 0.0, 1.0, QuadOptions::default());
        assert!((r.value - (1.0_f64.exp() - 1.0)).abs() < 1e-14);
        let r = integrate(|x: f64| x.sqrt(), 0.0, 1.0, QuadOptions::default());
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
        let g = gauss_legendre(|x| x.powi(15), 0.0, 1.0);
        assert!((g - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn horizon_detects_log_divergence() {
        let r = integrate_to_horizon(|t| 1.0 / (1.0 - t), 0.0, 1.0);
        assert!(r.is_divergent(), "{r:?}");
        let r = integrate_to_horizon(|t| (1.0 - t).powf(-1.5), 0.0, 1.0);
        assert!(r.is_divergent(), "{r:?}");
    }

    #[test]
    fn horizon_sums_integrable_singularities() {
        let r = integrate_to_horizon(|t| (1.0 - t).powf(-0.5), 0.0, 1.0);
        let v = r.finite().expect("finite");
        assert!((v - 2.0).abs() < 1e-11, "{v}");
        let r = integrate_to_horizon(|t| (1.0 - t).powf(-0.9), 0.0, 1.0);
        let v = r.finite().expect("finite");
        assert!((v - 10.0).abs() < 1e-8, "{v}");
        let r = integrate_to_horizon(|_| 1.0, 0.0, 2.0);
        assert!((r.finite().unwrap() - 2.0).abs() < 1e-14);
        let r = integrate_to_horizon(|_| 0.0, 0.0, 2.0);
        assert_eq!(r.finite(), Some(0.0));
    }
}
