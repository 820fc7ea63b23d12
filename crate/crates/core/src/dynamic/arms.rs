use crate::error::{config_err, Result};
use crate::topology::NodeId;

/// Upper bound on the number of arms a candidate may enumerate.
pub const MAX_ARMS: usize = 100_000;

/// Number of `k`-subsets of an `n`-set, saturating.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// All `delta`-subsets of a reservation set, in lexicographic order over the
/// ascending member ids. Arm `j` is `arms()[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmSpace {
    members: Vec<NodeId>,
    delta: usize,
    arms: Vec<Vec<NodeId>>,
}

impl ArmSpace {
    pub fn new(members: &[NodeId], delta: usize) -> Result<Self> {
        let mut members = members.to_vec();
        members.sort_unstable();
        members.dedup();
        let n = members.len();
        if delta == 0 || delta > n {
            return Err(config_err(format!(
                "arm size {delta} not in 1..={n} for this reservation set"
            )));
        }
        let count = binomial(n, delta);
        if count > MAX_ARMS {
            return Err(config_err(format!(
                "{count} arms for C({n},{delta}) exceeds the limit of {MAX_ARMS}"
            )));
        }
        let mut arms = Vec::with_capacity(count);
        let mut idx: Vec<usize> = (0..delta).collect();
        loop {
            arms.push(idx.iter().map(|&i| members[i]).collect());
            // Advance to the next combination.
            let mut i = delta;
            while i > 0 && idx[i - 1] == n - delta + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..delta {
                idx[j] = idx[j - 1] + 1;
            }
        }
        Ok(ArmSpace {
            members,
            delta,
            arms,
        })
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn arms(&self) -> &[Vec<NodeId>] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arm(&self, j: usize) -> &[NodeId] {
        &self.arms[j]
    }
}
