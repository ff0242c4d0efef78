use super::model::ModelSpec;
use super::quadrature::integrate;
use crate::error::Result;

/// Default refinement budget (segments) for [`population_xi`].
pub const DEFAULT_QUADRATURE_SEGMENTS: usize = 2000;

const OUTER_TOL: f64 = 1e-10;

/// Population dependence measure
/// `xi = ∫ Var{E[1(Y >= t) | X]} dF_Y(t) / ∫ Var{1(Y >= t)} dF_Y(t)`.
///
/// The denominator is `1/6` for continuous `Y`. The numerator is
/// `∫ (h(t) - G(t)^2) dF_Y(t)` with `h(t) = E[G_X(t)^2]`, evaluated by
/// nested quadrature: over `u = F_Y(t)` for the closed-form families, over
/// `t` against the marginal density otherwise. `quadrature_nodes` bounds the
/// number of outer segments.
pub fn population_xi(spec: &ModelSpec, quadrature_nodes: usize) -> Result<f64> {
    let numerator = if spec.has_closed_forms() {
        integrate(
            |u| {
                if u <= 0.0 || u >= 1.0 {
                    return 0.0;
                }
                let t = spec.quantile_y(u).expect("u in (0, 1)");
                spec.h_direct(t).expect("closed form") - (1.0 - u).powi(2)
            },
            0.0,
            1.0,
            OUTER_TOL,
            quadrature_nodes,
        )?
    } else {
        let (lo, hi) = spec.y_support();
        let inner_err = std::cell::Cell::new(None);
        let v = integrate(
            |t| {
                let eval = || -> Result<f64> {
                    let h = spec.h_direct(t)?;
                    let g = 1.0 - spec.cdf_y(t)?;
                    Ok((h - g * g) * spec.density_y(t)?)
                };
                eval().unwrap_or_else(|e| {
                    inner_err.set(Some(e));
                    0.0
                })
            },
            lo,
            hi,
            OUTER_TOL,
            quadrature_nodes,
        )?;
        if let Some(e) = inner_err.take() {
            return Err(e);
        }
        v
    };
    Ok((6.0 * numerator).clamp(0.0, 1.0))
}
