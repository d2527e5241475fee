/// Piecewise cubic Hermite curve on a strictly increasing grid.
///
/// Outside the grid the curve is held at its end values.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    t: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl Curve {
    /// Builds a curve from knots, values and knot slopes.
    ///
    /// # Panics
    /// If the lengths differ, the grid has fewer than two points or is not increasing.
    pub fn hermite(t: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Self {
        assert!(t.len() >= 2, "curve needs at least two knots");
        assert!(t.len() == y.len() && t.len() == dy.len(), "length mismatch");
        assert!(t.windows(2).all(|w| w[1] > w[0]), "grid must be strictly increasing");
        Self { t, y, dy }
    }

    /// Monotone (Fritsch–Carlson) cubic through the data.
    pub fn monotone(t: Vec<f64>, y: Vec<f64>) -> Self {
        let dy = pchip_slopes(&t, &y);
        Self::hermite(t, y, dy)
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.dy
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn first_time(&self) -> f64 {
        self.t[0]
    }

    pub fn last_time(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.t.len();
        match self.t.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x <= self.t[0] {
            return self.y[0];
        }
        if x >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let i = self.segment(x);
        hermite_value(
            self.t[i], self.t[i + 1], self.y[i], self.y[i + 1], self.dy[i], self.dy[i + 1], x,
        )
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x < self.t[0] || x > self.t[n - 1] {
            return 0.0;
        }
        let i = self.segment(x);
        hermite_slope(
            self.t[i], self.t[i + 1], self.y[i], self.y[i + 1], self.dy[i], self.dy[i + 1], x,
        )
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x < self.t[0] || x > self.t[n - 1] {
            return 0.0;
        }
        let i = self.segment(x);
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let d00 = (12.0 * s - 6.0) / (h * h);
        let d10 = (6.0 * s - 4.0) / h;
        let d11 = (6.0 * s - 2.0) / h;
        d00 * (self.y[i] - self.y[i + 1]) + d10 * self.dy[i] + d11 * self.dy[i + 1]
    }

    /// Maps the values through `f`, keeping slopes consistent via `df`.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64, df: impl Fn(f64, f64, f64) -> f64) -> Curve {
        let y: Vec<f64> = self.t.iter().zip(&self.y).map(|(&t, &y)| f(t, y)).collect();
        let dy = self
            .t
            .iter()
            .zip(self.y.iter().zip(&self.dy))
            .map(|(&t, (&y, &d))| df(t, y, d))
            .collect();
        Curve::hermite(self.t.clone(), y, dy)
    }
}

pub(crate) fn hermite_value(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = t1 - t0;
    let s = (x - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

pub(crate) fn hermite_slope(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = t1 - t0;
    let s = (x - t0) / h;
    let s2 = s * s;
    let d00 = (6.0 * s2 - 6.0 * s) / h;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = (-6.0 * s2 + 6.0 * s) / h;
    let d11 = 3.0 * s2 - 2.0 * s;
    d00 * y0 + d10 * d0 + d01 * y1 + d11 * d1
}

/// Fritsch–Carlson slopes with the usual three-point end conditions.
pub fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    assert!(n >= 2 && y.len() == n);
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![del[0], del[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let mut s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if s.signum() != m0.signum() {
            s = 0.0;
        } else if m0.signum() != m1.signum() && s.abs() > 3.0 * m0.abs() {
            s = 3.0 * m0;
        }
        s
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}
