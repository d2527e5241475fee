//! Discretised integral equation `m(t, y(t)) = exp(−∫ₜᵀ n(u, y(u)) du)`.
//!
//! On each grid cell `y` is the cubic Hermite interpolant whose knot slopes come from the
//! ODE form of the equation, and `∫ n` over the cell uses 8-point Gauss–Legendre. A sweep
//! walks the grid backward from `t_N` and solves each knot given everything to its right.

use super::aux::{Coefficients, Consts};
use crate::error::{Error, Result};
use crate::hazard_model::MarketModel;
use crate::numerics::{brent, dopri5, gauss_legendre_points, hermite_value, integrate, Curve, QuadOptions};

const TAIL_NODES: usize = 8;
const TAIL_WINDOW: f64 = 2.0;
const MIN_TAIL_RATE: f64 = 0.05;

pub(crate) struct Discretisation<'a> {
    model: &'a MarketModel,
    cs: Consts,
    grid: &'a [f64],
    coef: Vec<Coefficients>,
    cells: Vec<[(f64, f64, Coefficients); 8]>,
    lower: &'a [f64],
    upper: &'a [f64],
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct SweepStats {
    pub change: f64,
    pub excursion: f64,
}

impl<'a> Discretisation<'a> {
    pub fn new(model: &'a MarketModel, p: f64, grid: &'a [f64], lower: &'a [f64], upper: &'a [f64]) -> Self {
        let coef = grid.iter().map(|&t| Coefficients::at(model, t)).collect();
        let cells = grid
            .windows(2)
            .map(|w| gauss_legendre_points(w[0], w[1]).map(|(u, wt)| (u, wt, Coefficients::at(model, u))))
            .collect();
        Self { model, cs: Consts::new(model, p), grid, coef, cells, lower, upper }
    }

    fn last(&self) -> usize {
        self.grid.len() - 1
    }

    fn slope(&self, i: usize, y: f64) -> Option<f64> {
        self.cs.rhs(&self.coef[i], y).filter(|v| v.is_finite())
    }

    fn cell(&self, i: usize, yi: f64, di: f64, yj: f64, dj: f64) -> f64 {
        let (t0, t1) = (self.grid[i], self.grid[i + 1]);
        self.cells[i]
            .iter()
            .map(|(u, w, c)| w * self.cs.n(c, hermite_value(t0, t1, yi, yj, di, dj, *u)))
            .sum()
    }

    /// `∫` of `n` over cell `i` when the left knot takes the value `v`.
    fn cell_for(&self, i: usize, v: f64, yj: f64, dj: f64) -> (f64, f64) {
        let dv = self.slope(i, v).unwrap_or_else(|| (yj - v) / (self.grid[i + 1] - self.grid[i]));
        (self.cell(i, v, dv, yj, dj), dv)
    }

    /// `∫_{t_N}^T n`, from an exponential fit in `s = log(T/(T−t))` to `n·(T−t)` over the last knots.
    pub fn tail(&self, y: &[f64]) -> Result<f64> {
        let horizon = self.model.horizon();
        let n = self.grid.len();
        // knots within TAIL_WINDOW of the last one in s, and at least TAIL_NODES of them
        let s_last = (horizon / (horizon - self.grid[n - 1])).ln();
        let within = self
            .grid
            .iter()
            .rev()
            .take_while(|&&t| (horizon / (horizon - t)).ln() >= s_last - TAIL_WINDOW)
            .count();
        let k = within.max(TAIL_NODES).min(n);
        let pts: Vec<(f64, f64)> = (n - k..n)
            .map(|j| {
                let gap = horizon - self.grid[j];
                ((horizon / gap).ln(), self.cs.n(&self.coef[j], y[j]) * gap)
            })
            .collect();
        let g_last = pts[k - 1].1;
        if g_last == 0.0 && pts.iter().all(|p| p.1 == 0.0) {
            return Ok(0.0);
        }
        let sign = g_last.signum();
        if !pts.iter().all(|p| p.1 != 0.0 && p.1.signum() == sign) {
            // changing sign: the tail is at most of the size of the last term
            return Ok(g_last);
        }
        let ms = pts.iter().map(|p| p.0).sum::<f64>() / k as f64;
        let ml = pts.iter().map(|p| p.1.abs().ln()).sum::<f64>() / k as f64;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &(s, g) in &pts {
            sxy += (s - ms) * (g.abs().ln() - ml);
            sxx += (s - ms) * (s - ms);
        }
        let rate = -sxy / sxx;
        if !(rate >= MIN_TAIL_RATE) {
            return Err(Error::NonConvergence {
                reason: format!("integrand n does not decay toward T (fitted rate {rate:.3e})"),
                max_residual: f64::NAN,
                residuals: Vec::new(),
            });
        }
        Ok(g_last / rate)
    }

    fn clamp(&self, i: usize, v: f64, stats: &mut SweepStats) -> f64 {
        let (lo, hi) = (self.lower[i], self.upper[i]);
        let slack = 1e-12 * (1.0 + v.abs());
        if v < lo - slack || v > hi + slack {
            stats.excursion = stats.excursion.max((lo - v).max(v - hi));
        }
        v.clamp(lo, hi)
    }

    fn solve_knot(&self, i: usize, acc: f64, yj: f64, dj: f64, guess: f64, stats: &mut SweepStats) -> Result<(f64, f64)> {
        let c = &self.coef[i];
        let mut v = guess.clamp(self.lower[i], self.upper[i]);
        let mut converged = false;
        for _ in 0..40 {
            let (j, _) = self.cell_for(i, v, yj, dj);
            let next = self.cs.invert_m(c, (-(acc + j)).exp(), Some(v))?;
            let done = next == v || self.log_m_change(i, v, next) <= 1e-15;
            v = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            // F(v) = log m + ∫n is increasing in v, so fall back to a bracketed root
            let f = |v: f64| self.cs.m(c, v).ln() + acc + self.cell_for(i, v, yj, dj).0;
            let (lo, hi) = (self.lower[i], self.upper[i]);
            v = if !(f(lo) < 0.0) {
                stats.excursion = stats.excursion.max(f(lo).abs());
                lo
            } else if !(f(hi) > 0.0) {
                stats.excursion = stats.excursion.max(f(hi).abs());
                hi
            } else {
                brent(f, lo, hi, 1e-15 * (1.0 + hi.abs())).map_err(|e| Error::NonConvergence {
                    reason: format!("knot {i}: {e}"),
                    max_residual: f64::NAN,
                    residuals: Vec::new(),
                })?
            };
        }
        let v = self.clamp(i, v, stats);
        Ok((v, self.cell_for(i, v, yj, dj).0))
    }

    // knot moves are measured by the change of log m, which stays meaningful where m is steep in y
    fn log_m_change(&self, i: usize, old: f64, new: f64) -> f64 {
        let c = &self.coef[i];
        let (m0, m1) = (self.cs.m(c, old), self.cs.m(c, new));
        if m0 > 0.0 && m1 > 0.0 {
            (m1 / m0).ln().abs()
        } else {
            f64::INFINITY
        }
    }

    /// One backward Gauss–Seidel pass with the given tail; updates `y` and the knot slopes.
    pub fn sweep(&self, y: &mut [f64], d: &mut [f64], tail: f64) -> Result<SweepStats> {
        let mut stats = SweepStats::default();
        let last = self.last();
        let c = &self.coef[last];
        let v = self.cs.invert_m(c, (-tail).exp(), Some(y[last]))?;
        let v = self.clamp(last, v, &mut stats);
        stats.change = self.log_m_change(last, y[last], v);
        y[last] = v;
        d[last] = self.slope(last, v).unwrap_or(0.0);
        let mut acc = tail;
        for i in (0..last).rev() {
            let (v, j) = self.solve_knot(i, acc, y[i + 1], d[i + 1], y[i], &mut stats)?;
            acc += j;
            stats.change = stats.change.max(self.log_m_change(i, y[i], v));
            y[i] = v;
            d[i] = self.slope(i, v).unwrap_or((y[i + 1] - v) / (self.grid[i + 1] - self.grid[i]));
        }
        Ok(stats)
    }

    /// Backward DOPRI5 integration of the ODE in `s = log(T/(T−t))` from `y_N`.
    pub fn integrate_ode(&self, y_last: f64) -> Result<Vec<f64>> {
        let horizon = self.model.horizon();
        let s_of = |t: f64| (horizon / (horizon - t)).ln();
        let rhs = |s: f64, y: f64| {
            let t = -horizon * (-s).exp_m1();
            let gap = horizon * (-s).exp();
            self.cs.rhs(&Coefficients::at(self.model, t), y).map_or(f64::NAN, |f| f * gap)
        };
        let last = self.last();
        let mut y = vec![0.0; self.grid.len()];
        y[last] = y_last;
        for i in (0..last).rev() {
            y[i] = dopri5(rhs, s_of(self.grid[i + 1]), y[i + 1], s_of(self.grid[i]), 1e-11, 1e-13)
                .map_err(|e| Error::NonConvergence {
                    reason: format!("backward ode: {e}"),
                    max_residual: f64::NAN,
                    residuals: Vec::new(),
                })?;
        }
        Ok(y)
    }

    pub fn slopes(&self, y: &[f64]) -> Vec<f64> {
        (0..y.len())
            .map(|i| {
                self.slope(i, y[i]).unwrap_or_else(|| {
                    let j = if i + 1 < y.len() { i + 1 } else { i - 1 };
                    (y[j] - y[i]) / (self.grid[j] - self.grid[i])
                })
            })
            .collect()
    }
}

/// `|m(t_i, y(t_i)) exp(∫_{t_i}^T n(u, y(u)) du) − 1|` at every knot, with `∫ n` done by
/// adaptive quadrature along `curve` plus `tail` beyond the last knot.
pub(crate) fn residual_profile(model: &MarketModel, p: f64, curve: &Curve, tail: f64) -> Vec<f64> {
    let cs = Consts::new(model, p);
    let t = curve.times();
    let y = curve.values();
    let opts = QuadOptions { abs_tol: 1e-16, rel_tol: 1e-13, max_intervals: 100 };
    let mut out = vec![0.0; t.len()];
    let mut acc = crate::numerics::NeumaierSum::new();
    acc.add(tail);
    for i in (0..t.len()).rev() {
        if i + 1 < t.len() {
            let r = integrate(|u| cs.n(&Coefficients::at(model, u), curve.eval(u)), t[i], t[i + 1], opts);
            acc.add(r.value);
        }
        let m = cs.m(&Coefficients::at(model, t[i]), y[i]);
        out[i] = (m.ln() + acc.value()).exp_m1().abs();
    }
    out
}
