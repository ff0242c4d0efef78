//! Hájek projection of the nearest-neighbor coefficients:
//! `xi* = 6n/(n^2-1) * (sum_i F_Y(Y_i ∧ Y_{N(i)}) + sum_i h(Y_i))`.

use rayon::prelude::*;

use super::model::ModelSpec;
use crate::error::{Error, Result};
use crate::neighbors::NeighborTable;
use crate::sample::Sample;

/// Grid size for the tabulated `h` (and `F_Y` when it lacks a closed form).
pub const HAJEK_GRID_POINTS: usize = 4096;
/// Tail mass left outside the grid on each side.
pub const HAJEK_GRID_TAIL: f64 = 1e-6;

/// Monotone piecewise-cubic Hermite interpolant on a uniform grid.
#[derive(Debug, Clone)]
struct Pchip {
    lo: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    fn new(lo: f64, hi: f64, values: Vec<f64>) -> Self {
        let m = values.len();
        let step = (hi - lo) / (m - 1) as f64;
        let secant: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / step).collect();
        let mut slopes = vec![0.0; m];
        for k in 1..m - 1 {
            let (a, b) = (secant[k - 1], secant[k]);
            // Harmonic mean of same-signed secants keeps each cell monotone.
            if a * b > 0.0 {
                slopes[k] = 2.0 * a * b / (a + b);
            }
        }
        slopes[0] = end_slope(secant[0], secant[1]);
        slopes[m - 1] = end_slope(secant[m - 2], secant[m - 3]);
        Self {
            lo,
            step,
            values,
            slopes,
        }
    }

    fn hi(&self) -> f64 {
        self.lo + self.step * (self.values.len() - 1) as f64
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi()
    }

    fn eval(&self, t: f64) -> f64 {
        let pos = (t - self.lo) / self.step;
        let k = (pos.floor() as usize).min(self.values.len() - 2);
        let s = pos - k as f64;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[k]
            + h10 * self.step * self.slopes[k]
            + h01 * self.values[k + 1]
            + h11 * self.step * self.slopes[k + 1]
    }
}

fn end_slope(near: f64, far: f64) -> f64 {
    let d = (3.0 * near - far) / 2.0;
    if d * near <= 0.0 {
        0.0
    } else if near * far <= 0.0 && d.abs() > 3.0 * near.abs() {
        3.0 * near
    } else {
        d
    }
}

/// `F_Y` and `h` for one model, tabulated once and reused across samples.
#[derive(Debug, Clone)]
pub struct HajekProjection {
    spec: ModelSpec,
    grid: Option<Grid>,
}

#[derive(Debug, Clone)]
struct Grid {
    h: Pchip,
    /// `None` when `F_Y` is cheap in closed form.
    cdf: Option<Pchip>,
}

impl HajekProjection {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        if spec.has_closed_forms() {
            return Ok(Self {
                spec: *spec,
                grid: None,
            });
        }
        let lo = spec.quantile_y(HAJEK_GRID_TAIL)?;
        let hi = spec.quantile_y(1.0 - HAJEK_GRID_TAIL)?;
        let m = HAJEK_GRID_POINTS;
        let ts: Vec<f64> = (0..m)
            .map(|k| lo + (hi - lo) * k as f64 / (m - 1) as f64)
            .collect();
        let h = ts
            .par_iter()
            .map(|&t| spec.h_direct(t))
            .collect::<Result<Vec<_>>>()?;
        let cdf = if matches!(spec.family(), super::model::Family::GaussianCopula { .. }) {
            None
        } else {
            let f = ts
                .par_iter()
                .map(|&t| spec.cdf_y(t))
                .collect::<Result<Vec<_>>>()?;
            Some(Pchip::new(lo, hi, f))
        };
        Ok(Self {
            spec: *spec,
            grid: Some(Grid {
                h: Pchip::new(lo, hi, h),
                cdf,
            }),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// `h(t) = E[G_X(t)^2]`; direct quadrature outside the tabulated range.
    pub fn h(&self, t: f64) -> Result<f64> {
        match &self.grid {
            Some(g) if g.h.contains(t) => Ok(g.h.eval(t).clamp(0.0, 1.0)),
            _ => self.spec.h_direct(t),
        }
    }

    /// Marginal CDF `F_Y(t)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        match self.grid.as_ref().and_then(|g| g.cdf.as_ref()) {
            Some(c) if c.contains(t) => Ok(c.eval(t).clamp(0.0, 1.0)),
            _ => self.spec.cdf_y(t),
        }
    }

    /// `xi*` for a sample drawn from this model, with the nearest neighbor
    /// taken from `table` (Euclidean or right).
    pub fn xi_star(&self, sample: &Sample, table: &NeighborTable) -> Result<f64> {
        let n = sample.n();
        if n < 2 {
            return Err(Error::TooFewPoints { n, required: 2 });
        }
        if sample.d() != self.spec.d() {
            return Err(Error::DimensionMismatch {
                row: 0,
                expected: self.spec.d(),
                found: sample.d(),
            });
        }
        if table.n() != n {
            return Err(Error::TableMismatch(format!(
                "table has {} rows, sample has {n}",
                table.n()
            )));
        }
        let y = sample.y();
        let mut total = 0.0;
        for i in 0..n {
            let low = y[i].min(y[table.nearest(i)]);
            total += self.cdf(low)? + self.h(y[i])?;
        }
        let nf = n as f64;
        Ok(6.0 * nf / (nf * nf - 1.0) * total)
    }
}

/// One-shot `xi*`; build a [`HajekProjection`] instead when evaluating many
/// samples from the same model.
pub fn hajek_xi_star(sample: &Sample, table: &NeighborTable, spec: &ModelSpec) -> Result<f64> {
    HajekProjection::new(spec)?.xi_star(sample, table)
}
