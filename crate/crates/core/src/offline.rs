//! Offline solvers: exact optimum, brute-force oracle, the consecutive
//! line solver and the greedy baseline.
//!
//! An offline solution never gains by waiting, so every pair is matched at
//! its later arrival and costs `dist + |atime(a) - atime(b)|` (the
//! space-time cost). Minimising total cost is then a plain min-cost
//! perfect matching over that cost.

use thiserror::Error;

use crate::instance::{Instance, RequestId};
use crate::matching::Matching;
use crate::metric::MetricSpace;

/// Default size cap (in requests) for the exact subset DP.
pub const DEFAULT_DP_CAP: usize = 22;

/// Hard limit of the DP state encoding.
pub const MAX_DP_REQUESTS: usize = 30;

/// Size cap for exhaustive enumeration.
pub const BRUTE_FORCE_CAP: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OfflineError {
    #[error(
        "instance has {requests} requests, above the exact solver cap of {cap}; \
         use bounds mode (greedy upper bound) or the line solver"
    )]
    Capacity { requests: usize, cap: usize },
    #[error("line solver needs a line metric, got {0}")]
    NotLine(&'static str),
    #[error("line solver needs simultaneous arrivals")]
    NotSimultaneous,
}

/// Dense space-time cost table.
fn cost_table(instance: &Instance) -> Vec<Vec<f64>> {
    let n = instance.len();
    (0..n)
        .map(|a| (0..n).map(|b| instance.space_time_cost(a, b)).collect())
        .collect()
}

/// Exact optimum with the default cap.
pub fn opt_matching(instance: &Instance) -> Result<Matching, OfflineError> {
    opt_matching_with_cap(instance, DEFAULT_DP_CAP)
}

/// Exact minimum-cost perfect matching by dynamic programming over
/// subsets: from each reachable set of matched requests, the lowest
/// unmatched request is paired with every other unmatched one.
pub fn opt_matching_with_cap(instance: &Instance, cap: usize) -> Result<Matching, OfflineError> {
    let n = instance.len();
    let cap = cap.min(MAX_DP_REQUESTS);
    if n > cap {
        return Err(OfflineError::Capacity { requests: n, cap });
    }
    let w = cost_table(instance);
    let full: u32 = (1u32 << n) - 1;
    let states = full as usize + 1;
    let mut best = vec![f64::INFINITY; states];
    let mut choice = vec![(0u8, 0u8); states];
    best[0] = 0.0;
    for mask in 0..full {
        let here = best[mask as usize];
        if here == f64::INFINITY {
            continue;
        }
        let i = (!mask).trailing_zeros() as usize;
        for j in (i + 1)..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = (mask | (1 << i) | (1 << j)) as usize;
            let c = here + w[i][j];
            if c < best[next] {
                best[next] = c;
                choice[next] = (i as u8, j as u8);
            }
        }
    }
    let mut pairs = Vec::with_capacity(n / 2);
    let mut mask = full;
    while mask != 0 {
        let (i, j) = choice[mask as usize];
        pairs.push((i as RequestId, j as RequestId));
        mask &= !((1 << i) | (1 << j));
    }
    Ok(Matching::at_later_arrival(instance, &pairs).expect("dp yields a perfect matching"))
}

/// Result of exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub matching: Matching,
    /// Number of perfect matchings examined, `(2m - 1)!!`.
    pub enumerated: u64,
}

/// Enumerates every perfect matching and keeps the first cheapest one.
pub fn brute_force_matching(instance: &Instance) -> Result<BruteForce, OfflineError> {
    let n = instance.len();
    if n > BRUTE_FORCE_CAP {
        return Err(OfflineError::Capacity {
            requests: n,
            cap: BRUTE_FORCE_CAP,
        });
    }

    struct Search<'a> {
        w: &'a [Vec<f64>],
        used: Vec<bool>,
        current: Vec<(RequestId, RequestId)>,
        best: Option<(f64, Vec<(RequestId, RequestId)>)>,
        enumerated: u64,
    }

    impl Search<'_> {
        fn go(&mut self, cost: f64) {
            let Some(i) = self.used.iter().position(|u| !u) else {
                self.enumerated += 1;
                if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    self.best = Some((cost, self.current.clone()));
                }
                return;
            };
            self.used[i] = true;
            for j in (i + 1)..self.used.len() {
                if self.used[j] {
                    continue;
                }
                self.used[j] = true;
                self.current.push((i, j));
                self.go(cost + self.w[i][j]);
                self.current.pop();
                self.used[j] = false;
            }
            self.used[i] = false;
        }
    }

    let w = cost_table(instance);
    let mut search = Search {
        w: &w,
        used: vec![false; n],
        current: Vec::new(),
        best: None,
        enumerated: 0,
    };
    search.go(0.0);
    let (_, pairs) = search.best.expect("even request count has a perfect matching");
    Ok(BruteForce {
        matching: Matching::at_later_arrival(instance, &pairs).expect("perfect"),
        enumerated: search.enumerated,
    })
}

/// Optimum for simultaneous requests on a line: sort by coordinate and
/// pair neighbours (1-2, 3-4, ...).
pub fn line_opt_matching(instance: &Instance) -> Result<Matching, OfflineError> {
    let MetricSpace::Line { coords } = instance.space() else {
        return Err(OfflineError::NotLine(instance.space().kind_name()));
    };
    if !instance.is_simultaneous() {
        return Err(OfflineError::NotSimultaneous);
    }
    let mut order: Vec<RequestId> = (0..instance.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (instance.requests()[a].point, instance.requests()[b].point);
        coords[pa].total_cmp(&coords[pb]).then(a.cmp(&b))
    });
    let pairs: Vec<_> = order.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    Ok(Matching::at_later_arrival(instance, &pairs).expect("perfect"))
}

/// Repeatedly matches the globally cheapest remaining pair under the
/// space-time cost; ties go to the smaller `(min id, max id)`.
pub fn greedy_matching(instance: &Instance) -> Matching {
    let n = instance.len();
    let mut edges: Vec<(f64, RequestId, RequestId)> = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            edges.push((instance.space_time_cost(a, b), a, b));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    for (_, a, b) in edges {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            pairs.push((a, b));
        }
    }
    Matching::at_later_arrival(instance, &pairs).expect("greedy covers every request")
}
