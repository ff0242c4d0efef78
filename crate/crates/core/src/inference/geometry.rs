//! Ball volumes, pairwise ball unions, and the Monte Carlo integral for the
//! shared-neighbor constant `o_d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use super::special::regularized_incomplete_beta;
use crate::error::{Error, Result};

/// Samples drawn from one RNG stream. Streams are keyed by chunk index, so
/// the estimate depends only on `(seed, samples)`, never on thread count.
const CHUNK: usize = 4096;

/// Volume of the unit ball in `R^d`, `pi^{d/2} / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / libm::tgamma(h + 1.0)
}

pub fn ball_volume(d: usize, radius: f64) -> f64 {
    unit_ball_volume(d) * radius.powi(d as i32)
}

/// Volume of the part of a ball of radius `r` lying beyond a hyperplane at
/// signed distance `a` from its center (`a > 0`: the minor cap).
fn cap_volume(d: usize, r: f64, a: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let full = ball_volume(d, r);
    if a >= r {
        return 0.0;
    }
    if a <= -r {
        return full;
    }
    let x = (1.0 - (a / r) * (a / r)).clamp(0.0, 1.0);
    let half = 0.5
        * regularized_incomplete_beta(x, (d as f64 + 1.0) / 2.0, 0.5)
            .expect("parameters are in domain");
    if a >= 0.0 {
        full * half
    } else {
        full * (1.0 - half)
    }
}

/// Volume of `B(c1, r1) ∩ B(c2, r2)` for centers `gap` apart.
pub fn lens_volume(d: usize, r1: f64, r2: f64, gap: f64) -> f64 {
    if gap >= r1 + r2 {
        return 0.0;
    }
    if gap <= (r1 - r2).abs() {
        return ball_volume(d, r1.min(r2));
    }
    let a1 = (gap * gap + r1 * r1 - r2 * r2) / (2.0 * gap);
    cap_volume(d, r1, a1) + cap_volume(d, r2, gap - a1)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

/// Lebesgue measure of `B(w1, |w1|) ∪ B(w2, |w2|)`.
pub fn ball_union_volume(w1: &[f64], w2: &[f64]) -> f64 {
    assert_eq!(w1.len(), w2.len(), "vectors must share a dimension");
    let d = w1.len();
    let (r1, r2) = (norm(w1), norm(w2));
    ball_volume(d, r1) + ball_volume(d, r2) - lens_volume(d, r1, r2, distance(w1, w2))
}

/// `(w1, w2)` in the region where each point is closer to the origin than
/// to the other point.
pub fn in_gamma_region(w1: &[f64], w2: &[f64]) -> bool {
    norm(w1).max(norm(w2)) < distance(w1, w2)
}

/// Importance weight of one proposal pair: the target integrand
/// `1(Γ) exp(-λ(union))` over the proposal density
/// `exp(-V_d |w1|^d) exp(-V_d |w2|^d)`.
///
/// Since `λ(union) = V_d(|w1|^d + |w2|^d) - λ(lens)`, the weight on the
/// region equals `exp(λ(lens))`, so it is at least 1 and at most
/// `exp(min single-ball volume)`.
pub(crate) fn o_weight(w1: &[f64], w2: &[f64]) -> f64 {
    if !in_gamma_region(w1, w2) {
        return 0.0;
    }
    let d = w1.len();
    let singles = ball_volume(d, norm(w1)) + ball_volume(d, norm(w2));
    (singles - ball_union_volume(w1, w2)).exp()
}

/// Draws `w` with uniform direction and `|w|^d ~ Exp(rate V_d)`, i.e. with
/// density `exp(-V_d |w|^d)` on `R^d`.
pub(crate) fn draw_proposal<R: Rng>(rng: &mut R, d: usize, out: &mut [f64]) {
    let mut len;
    loop {
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        len = norm(out);
        if len > 0.0 {
            break;
        }
    }
    let e: f64 = rng.sample(Exp1);
    let radius = (e / unit_ball_volume(d)).powf(1.0 / d as f64);
    for v in out.iter_mut() {
        *v *= radius / len;
    }
}

/// Monte Carlo estimate of
/// `o_d = ∫_Γ exp[-λ{B(w1,|w1|) ∪ B(w2,|w2|)}] d(w1, w2)`
/// and its standard error.
pub fn o_constant_mc(d: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::OutOfDomain("dimension must be >= 1".into()));
    }
    if samples < 10_000 {
        return Err(Error::OutOfDomain(format!(
            "o_d needs at least 10^4 samples, got {samples}"
        )));
    }
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(samples - chunk * CHUNK);
            let (mut w1, mut w2) = (vec![0.0; d], vec![0.0; d]);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..count {
                draw_proposal(&mut rng, d, &mut w1);
                draw_proposal(&mut rng, d, &mut w2);
                let w = o_weight(&w1, &w2);
                debug_assert!(w == 0.0 || w >= 1.0 - 1e-9, "lens volume went negative");
                sum += w;
                sum_sq += w * w;
            }
            (sum, sum_sq)
        })
        .collect();

    let (sum, sum_sq) = partial
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let m = samples as f64;
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}
