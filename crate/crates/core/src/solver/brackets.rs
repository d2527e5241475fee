use super::aux::{Coefficients, Consts};
use super::Preference;
use crate::error::{Error, Result};
use crate::hazard_model::MarketModel;
use crate::numerics::Curve;

/// Exponent `k` of the moving bracket target `exp(k (T − t))`.
pub(crate) fn bracket_rate(model: &MarketModel, p: f64) -> f64 {
    (1.0 - p) * model.mu * model.mu / (2.0 * p * p * model.sigma * model.sigma)
}

/// Curve solving `m(t, y, p) = exp(k (T − t))`, with knot slopes from implicit differentiation.
pub(crate) fn level_curve(model: &MarketModel, p: f64, grid: &[f64], k: f64) -> Result<Curve> {
    check_grid(model, grid)?;
    let cs = Consts::new(model, p);
    let horizon = model.horizon();
    let mut y = Vec::with_capacity(grid.len());
    let mut dy = Vec::with_capacity(grid.len());
    let mut guess = None;
    for &t in grid.iter().rev() {
        let c = Coefficients::at(model, t);
        let target = (k * (horizon - t)).exp();
        let v = cs.invert_m(&c, target, guess)?;
        let e = cs.eval(&c, v);
        let root = (1.0 + v).powf(1.0 / p);
        let m_t = root * e.da_dt;
        y.push(v);
        dy.push((-k * target - m_t) / e.dm_dy);
        guess = Some(v);
    }
    y.reverse();
    dy.reverse();
    Ok(Curve::hermite(grid.to_vec(), y, dy))
}

pub(crate) fn check_grid(model: &MarketModel, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || !grid.windows(2).all(|w| w[1] > w[0]) || grid[grid.len() - 1] >= model.horizon() {
        return Err(Error::InvalidParameter("grid must start at 0, increase strictly and end before T".into()));
    }
    if !(model.mu > 0.0) {
        return Err(Error::Precondition(format!("the investment problem needs mu > 0, got {}", model.mu)));
    }
    Ok(())
}

/// `y^m` with `m(t, y^m(t), p) = 1` on `grid`.
pub fn myopic_curve(model: &MarketModel, prefs: &Preference, grid: &[f64]) -> Result<Curve> {
    level_curve(model, prefs.risk_aversion, grid, 0.0)
}

/// Lower and upper bracket `(y_*, y^*)` of the optimal curve on `grid`.
pub fn bracket_curves(model: &MarketModel, prefs: &Preference, grid: &[f64]) -> Result<(Curve, Curve)> {
    let p = prefs.risk_aversion;
    let moving = level_curve(model, p, grid, bracket_rate(model, p))?;
    let flat = level_curve(model, p, grid, 0.0)?;
    if p >= 1.0 {
        Ok((moving, flat))
    } else {
        Ok((flat, moving))
    }
}
