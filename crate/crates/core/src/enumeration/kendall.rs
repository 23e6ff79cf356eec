use crate::error::{Error, Result};
use crate::metrics::{evaluate, score_ordering, MetricSpec, TopicContext};
use crate::serp::Serp;

use super::{axis_order, MAX_GRID_K};

/// Tie-corrected Kendall tau-b. Values within the score tolerance count as
/// ties. Returns NaN when either input is constant.
pub fn tau_b(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "tau_b needs paired samples");
    let n = xs.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_x, mut ties_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = score_ordering(xs[i], xs[j]) as i64;
            let sy = score_ordering(ys[i], ys[j]) as i64;
            ties_x += (sx == 0) as i64;
            ties_y += (sy == 0) as i64;
            match sx * sy {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let n0 = (n * n.saturating_sub(1) / 2) as i64;
    let denom = (((n0 - ties_x) * (n0 - ties_y)) as f64).sqrt();
    (concordant - discordant) as f64 / denom
}

fn check_depths(a: &MetricSpec, b: &MetricSpec, k: usize) -> Result<()> {
    if k == 0 || k > MAX_GRID_K {
        return Err(Error::invalid(format!(
            "correlation depth must be in 1..={MAX_GRID_K}, got {k}"
        )));
    }
    if a.depth != k || b.depth != k {
        return Err(Error::invalid(format!(
            "metrics {a} and {b} must both be evaluated at depth {k}"
        )));
    }
    Ok(())
}

/// Tau-b between two metrics' scores over all `2^k` SERPs.
pub fn kendall_tau(a: &MetricSpec, b: &MetricSpec, k: usize, ctx: &TopicContext) -> Result<f64> {
    check_depths(a, b, k)?;
    let serps: Vec<Serp> = (0..1u64 << k).map(|c| Serp::from_code(c, k)).collect();
    let score = |m: &MetricSpec| -> Result<Vec<f64>> { serps.iter().map(|s| evaluate(m, s, ctx)).collect() };
    let tau = tau_b(&score(a)?, &score(b)?);
    if tau.is_nan() {
        return Err(Error::invalid(format!(
            "tau undefined: {a} or {b} is constant at depth {k}"
        )));
    }
    Ok(tau)
}

/// Kendall tau between the two grid axis orderings (scores with ties broken
/// lexicographically), i.e. between the positions of each SERP on the row and
/// column axes. Both orderings are total, so no tie correction arises.
pub fn axis_kendall_tau(a: &MetricSpec, b: &MetricSpec, k: usize) -> Result<f64> {
    check_depths(a, b, k)?;
    let position = |m: &MetricSpec| -> Result<Vec<f64>> {
        let mut pos = vec![0.0; 1 << k];
        for (i, s) in axis_order(m, k)?.iter().enumerate() {
            pos[s.code() as usize] = i as f64;
        }
        Ok(pos)
    };
    Ok(tau_b(&position(a)?, &position(b)?))
}
