use std::collections::BTreeMap;

use crate::static_stage::StaticPlan;
use crate::topology::NodeId;

/// Splits `n_res` RBs over weighted claimants by largest remainder.
///
/// Each claimant is `(id, weight, cap)`. Integer parts of the proportional
/// quotas are assigned first; leftover RBs go to the largest fractional parts,
/// ties to the smallest id. Shares are then capped, so the total never exceeds
/// `n_res`. When every weight is zero the split is uniform.
pub fn largest_remainder(claims: &[(NodeId, f64, usize)], n_res: usize) -> BTreeMap<NodeId, usize> {
    let mut out = BTreeMap::new();
    if claims.is_empty() {
        return out;
    }
    let total: f64 = claims.iter().map(|c| c.1.max(0.0)).sum();
    let uniform = !(total > 0.0) || !total.is_finite();
    let quota = |w: f64| {
        if uniform {
            n_res as f64 / claims.len() as f64
        } else {
            w.max(0.0) / total * n_res as f64
        }
    };

    let mut parts: Vec<(NodeId, usize, f64)> = claims
        .iter()
        .map(|&(id, w, _)| {
            let q = quota(w);
            let floor = q.floor();
            (id, floor as usize, q - floor)
        })
        .collect();
    let assigned: usize = parts.iter().map(|p| p.1).sum();
    let mut leftover = n_res.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (parts[a].2, parts[b].2);
        if (fa - fb).abs() <= 1e-12 {
            parts[a].0.cmp(&parts[b].0)
        } else {
            fb.total_cmp(&fa)
        }
    });
    for &i in &order {
        if leftover == 0 {
            break;
        }
        parts[i].1 += 1;
        leftover -= 1;
    }

    for ((id, share, _), &(_, _, cap)) in parts.into_iter().zip(claims) {
        out.insert(id, share.min(cap));
    }
    out
}

/// RBs per candidate this TTI: a share of `n_res` proportional to the score
/// mass of each candidate's reservation set, capped at the set size.
pub fn allocate_reserved(
    theta: &[NodeId],
    plan: &StaticPlan,
    n_res: usize,
) -> BTreeMap<NodeId, usize> {
    let claims: Vec<(NodeId, f64, usize)> = theta
        .iter()
        .map(|&y| (y, plan.score_sum(y), plan.reservation_set(y).len()))
        .collect();
    largest_remainder(&claims, n_res)
}
