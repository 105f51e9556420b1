//! Request sequences, generators and the JSON instance format.
//!
//! An instance is a metric space plus `2m` requests sorted by arrival
//! time. Several requests may share a point; requests are told apart by
//! id only.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{MetricError, MetricSpace, PointId};

pub type RequestId = usize;

/// Largest level accepted by [`generate_greedy_adversarial_line`]
/// (`2^(level+1)` requests).
pub const MAX_ADVERSARIAL_LEVEL: u32 = 10;

/// Gap between the two copies of the previous level, as a fraction of the
/// span of that level. Must stay below 1 so greedy bridges the gap before
/// closing either copy.
pub const ADVERSARIAL_GAP_RATIO: f64 = 0.9;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance has no requests")]
    Empty,
    #[error("odd request count: {0}")]
    OddRequestCount(usize),
    #[error("request {index}: id {id} out of order (ids must be 0..2m-1 in order)")]
    IdOutOfOrder { index: usize, id: RequestId },
    #[error("request {index}: arrival time {time} is negative or not finite")]
    BadTime { index: usize, time: f64 },
    #[error("request {index}: arrival time {time} precedes previous arrival time {previous}")]
    DecreasingTime { index: usize, time: f64, previous: f64 },
    #[error("request {index}: point id {point} is not in the metric (has {len} points)")]
    BadPoint { index: usize, point: PointId, len: usize },
    #[error("metric: {0}")]
    Metric(#[from] MetricError),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("level {level} exceeds the size cap (max level {max})")]
    LevelTooLarge { level: u32, max: u32 },
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub point: PointId,
    #[serde(rename = "time")]
    pub atime: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub family: String,
}

impl InstanceMeta {
    pub fn new(name: impl Into<String>, seed: u64, family: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            seed,
            family: family.into(),
        }
    }
}

/// A validated MPMD instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    #[serde(rename = "metric")]
    space: MetricSpace,
    requests: Vec<Request>,
    meta: InstanceMeta,
}

#[derive(Deserialize)]
struct RawInstance {
    metric: MetricSpace,
    requests: Vec<Request>,
    #[serde(default)]
    meta: InstanceMeta,
}

impl Instance {
    pub fn new(space: MetricSpace, requests: Vec<Request>, meta: InstanceMeta) -> Result<Self, InstanceError> {
        space.check_shape()?;
        if requests.is_empty() {
            return Err(InstanceError::Empty);
        }
        if !requests.len().is_multiple_of(2) {
            return Err(InstanceError::OddRequestCount(requests.len()));
        }
        let mut previous = 0.0f64;
        for (index, r) in requests.iter().enumerate() {
            if r.id != index {
                return Err(InstanceError::IdOutOfOrder { index, id: r.id });
            }
            if !r.atime.is_finite() || r.atime < 0.0 {
                return Err(InstanceError::BadTime { index, time: r.atime });
            }
            if index > 0 && r.atime < previous {
                return Err(InstanceError::DecreasingTime {
                    index,
                    time: r.atime,
                    previous,
                });
            }
            if r.point >= space.len() {
                return Err(InstanceError::BadPoint {
                    index,
                    point: r.point,
                    len: space.len(),
                });
            }
            previous = r.atime;
        }
        Ok(Self { space, requests, meta })
    }

    /// One request per point of `space`, with the given arrival times.
    pub fn from_points(space: MetricSpace, times: &[f64], meta: InstanceMeta) -> Result<Self, InstanceError> {
        if times.len() != space.len() {
            return Err(InstanceError::InvalidParameter(format!(
                "{} arrival times for {} points",
                times.len(),
                space.len()
            )));
        }
        let requests = times
            .iter()
            .enumerate()
            .map(|(i, &t)| Request {
                id: i,
                point: i,
                atime: t,
            })
            .collect();
        Instance::new(space, requests, meta)
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut InstanceMeta {
        &mut self.meta
    }

    /// Number of requests (`2m`).
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Number of pairs `m`.
    pub fn pairs(&self) -> usize {
        self.requests.len() / 2
    }

    #[inline]
    pub fn atime(&self, r: RequestId) -> f64 {
        self.requests[r].atime
    }

    /// Metric distance between the points of two requests.
    #[inline]
    pub fn dist(&self, a: RequestId, b: RequestId) -> f64 {
        self.space.dist(self.requests[a].point, self.requests[b].point)
    }

    /// `dist + |atime(a) - atime(b)|`: the cost of matching two requests
    /// as soon as the later one arrives.
    #[inline]
    pub fn space_time_cost(&self, a: RequestId, b: RequestId) -> f64 {
        self.dist(a, b) + (self.atime(a) - self.atime(b)).abs()
    }

    pub fn is_simultaneous(&self) -> bool {
        let t0 = self.requests[0].atime;
        self.requests.iter().all(|r| r.atime == t0)
    }

    /// True when all request-pair distances differ by more than `rel_gap`
    /// (relative).
    pub fn has_distinct_distances(&self, rel_gap: f64) -> bool {
        let n = self.len();
        let mut d: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in (a + 1)..n {
                d.push(self.dist(a, b));
            }
        }
        d.sort_by(f64::total_cmp);
        d.windows(2).all(|w| w[1] - w[0] > rel_gap * w[1].abs().max(w[0].abs()))
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, InstanceError> {
        let raw: RawInstance = serde_json::from_str(text)?;
        Instance::new(raw.metric, raw.requests, raw.meta)
    }
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    fs::write(path, instance.to_json_string())?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let text = fs::read_to_string(path)?;
    Instance::from_json_str(&text)
}

/// Shape of the space drawn by [`generate_uniform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Segment `[0, extent]`.
    Line,
    /// Cube `[0, extent]^d`.
    Euclidean(usize),
    /// Shortest-path closure of random edge lengths in `(0, extent]`.
    Matrix,
}

impl SpaceKind {
    pub fn name(&self) -> String {
        match self {
            SpaceKind::Line => "line".into(),
            SpaceKind::Euclidean(d) => format!("euclidean-{d}"),
            SpaceKind::Matrix => "matrix".into(),
        }
    }
}

fn check_positive_finite(name: &str, v: f64, allow_zero: bool) -> Result<(), InstanceError> {
    let ok = v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
    if ok {
        Ok(())
    } else {
        Err(InstanceError::InvalidParameter(format!("{name} = {v}")))
    }
}

/// Draws `n` random points of the given kind.
pub fn random_space(kind: SpaceKind, n: usize, extent: f64, rng: &mut impl Rng) -> Result<MetricSpace, InstanceError> {
    check_positive_finite("extent", extent, true)?;
    let space = match kind {
        SpaceKind::Line => MetricSpace::line((0..n).map(|_| rng.gen::<f64>() * extent).collect())?,
        SpaceKind::Euclidean(d) => {
            if d == 0 {
                return Err(InstanceError::InvalidParameter("dimension 0".into()));
            }
            MetricSpace::euclidean(
                (0..n)
                    .map(|_| (0..d).map(|_| rng.gen::<f64>() * extent).collect())
                    .collect(),
            )?
        }
        SpaceKind::Matrix => {
            let mut m = vec![vec![0.0; n]; n];
            for a in 0..n {
                for b in (a + 1)..n {
                    let w = (1.0 - rng.gen::<f64>()) * extent;
                    m[a][b] = w;
                    m[b][a] = w;
                }
            }
            shortest_path_closure(&mut m);
            MetricSpace::matrix(m)?
        }
    };
    Ok(space)
}

/// Floyd–Warshall in place; turns any symmetric non-negative matrix into a
/// metric.
pub fn shortest_path_closure(m: &mut [Vec<f64>]) {
    let n = m.len();
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                let via = m[a][k] + m[k][b];
                if via < m[a][b] {
                    m[a][b] = via;
                }
            }
        }
    }
}

/// `pairs` pairs of requests at uniform random points, with arrival times
/// uniform in `[0, horizon]`.
pub fn generate_uniform(
    pairs: usize,
    kind: SpaceKind,
    extent: f64,
    horizon: f64,
    seed: u64,
) -> Result<Instance, InstanceError> {
    if pairs == 0 {
        return Err(InstanceError::InvalidParameter("pairs = 0".into()));
    }
    check_positive_finite("horizon", horizon, true)?;
    let n = 2 * pairs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = random_space(kind, n, extent, &mut rng)?;
    let mut times: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * horizon).collect();
    times.sort_by(f64::total_cmp);
    let meta = InstanceMeta::new(format!("uniform-{}-m{pairs}-s{seed}", kind.name()), seed, "uniform");
    Instance::from_points(space, &times, meta)
}

/// Every point of `space` requested once, all at time `t0`.
pub fn generate_simultaneous(space: MetricSpace, t0: f64) -> Result<Instance, InstanceError> {
    check_positive_finite("t0", t0, true)?;
    if !space.len().is_multiple_of(2) {
        return Err(InstanceError::OddRequestCount(space.len()));
    }
    let times = vec![t0; space.len()];
    let meta = InstanceMeta::new(format!("simultaneous-{}", space.kind_name()), 0, "simultaneous");
    Instance::from_points(space, &times, meta)
}

/// `pairs` pairs of requests at uniform random points, all arriving at `t0`.
pub fn generate_random_simultaneous(
    pairs: usize,
    kind: SpaceKind,
    extent: f64,
    t0: f64,
    seed: u64,
) -> Result<Instance, InstanceError> {
    if pairs == 0 {
        return Err(InstanceError::InvalidParameter("pairs = 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = random_space(kind, 2 * pairs, extent, &mut rng)?;
    let mut instance = generate_simultaneous(space, t0)?;
    *instance.meta_mut() = InstanceMeta::new(
        format!("simultaneous-{}-m{pairs}-s{seed}", kind.name()),
        seed,
        "simultaneous",
    );
    Ok(instance)
}

/// Line positions of the greedy worst-case family, sorted.
///
/// Level 0 is two points at distance 1. Level `k` is two copies of level
/// `k-1` (span `L`) separated by a gap of `ADVERSARIAL_GAP_RATIO * L`. The
/// gap exceeds every non-final greedy edge inside a copy but is shorter than
/// the copy's own closing edge, so greedy bridges the inner ends first and
/// is then forced to join the two outermost points.
pub fn adversarial_line_positions(level: u32) -> Vec<f64> {
    let mut pts = vec![0.0, 1.0];
    let mut span = 1.0;
    for _ in 0..level {
        let gap = ADVERSARIAL_GAP_RATIO * span;
        let shift = span + gap;
        let copy: Vec<f64> = pts.iter().map(|p| p + shift).collect();
        pts.extend(copy);
        span = 2.0 * span + gap;
    }
    pts
}

/// Simultaneous line instance with `2^(level+1)` requests on which greedy
/// matching degrades roughly like `1.5^level` relative to the optimum.
///
/// The construction is deterministic; `seed` is recorded in the metadata.
pub fn generate_greedy_adversarial_line(level: u32, seed: u64) -> Result<Instance, InstanceError> {
    if level == 0 {
        return Err(InstanceError::InvalidParameter("level must be >= 1".into()));
    }
    if level > MAX_ADVERSARIAL_LEVEL {
        return Err(InstanceError::LevelTooLarge {
            level,
            max: MAX_ADVERSARIAL_LEVEL,
        });
    }
    let pts = adversarial_line_positions(level);
    let times = vec![0.0; pts.len()];
    let meta = InstanceMeta::new(format!("adversarial-line-k{level}"), seed, "adversarial-line");
    Instance::from_points(MetricSpace::line(pts)?, &times, meta)
}

/// Perturbs geometry by a seeded jitter of magnitude `eps` so that pairwise
/// distances become distinct almost surely. Matrix entries only ever grow
/// by an amount in `[eps, 2 eps)`, which keeps the triangle inequality.
pub fn jitter(instance: &Instance, eps: f64, seed: u64) -> Result<Instance, InstanceError> {
    check_positive_finite("jitter", eps, true)?;
    if eps == 0.0 {
        return Ok(instance.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = match instance.space() {
        MetricSpace::Line { coords } => MetricSpace::line(
            coords
                .iter()
                .map(|c| c + eps * (2.0 * rng.gen::<f64>() - 1.0))
                .collect(),
        )?,
        MetricSpace::Euclidean { coords } => MetricSpace::euclidean(
            coords
                .iter()
                .map(|p| p.iter().map(|c| c + eps * (2.0 * rng.gen::<f64>() - 1.0)).collect())
                .collect(),
        )?,
        MetricSpace::Matrix { matrix } => {
            let n = matrix.len();
            let mut m = matrix.clone();
            for a in 0..n {
                for b in (a + 1)..n {
                    let bump = eps * (1.0 + rng.gen::<f64>());
                    m[a][b] += bump;
                    m[b][a] = m[a][b];
                }
            }
            MetricSpace::matrix(m)?
        }
    };
    let mut meta = instance.meta().clone();
    meta.name = format!("{}+jitter", meta.name);
    Instance::new(space, instance.requests().to_vec(), meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{validate_metric, DEFAULT_METRIC_TOL};
    use proptest::prelude::*;

    #[test]
    fn uniform_zero_horizon() {
        let inst = generate_uniform(1, SpaceKind::Line, 10.0, 0.0, 3).unwrap();
        assert_eq!(inst.len(), 2);
        assert!(inst.requests().iter().all(|r| r.atime == 0.0));
    }

    #[test]
    fn uniform_is_deterministic_and_sorted() {
        for kind in [SpaceKind::Line, SpaceKind::Euclidean(2), SpaceKind::Matrix] {
            let a = generate_uniform(5, kind, 10.0, 4.0, 11).unwrap();
            let b = generate_uniform(5, kind, 10.0, 4.0, 11).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), 10);
            assert!(a.requests().windows(2).all(|w| w[0].atime <= w[1].atime));
            assert!(validate_metric(a.space(), DEFAULT_METRIC_TOL).is_valid());
        }
        let c = generate_uniform(5, SpaceKind::Line, 10.0, 4.0, 12).unwrap();
        assert_ne!(generate_uniform(5, SpaceKind::Line, 10.0, 4.0, 11).unwrap(), c);
    }

    #[test]
    fn uniform_rejects_zero_pairs() {
        assert!(matches!(
            generate_uniform(0, SpaceKind::Line, 1.0, 1.0, 0),
            Err(InstanceError::InvalidParameter(_))
        ));
    }

    #[test]
    fn simultaneous_times() {
        let space = MetricSpace::line(vec![0.0, 1.0, 5.0, 9.0]).unwrap();
        let inst = generate_simultaneous(space.clone(), 0.0).unwrap();
        assert!(inst.requests().iter().all(|r| r.atime == 0.0));
        let inst = generate_simultaneous(space, 7.0).unwrap();
        assert!(inst.requests().iter().all(|r| r.atime == 7.0));
        assert!(inst.is_simultaneous());
    }

    #[test]
    fn simultaneous_odd_count() {
        let space = MetricSpace::line(vec![0.0, 1.0, 5.0]).unwrap();
        assert!(matches!(
            generate_simultaneous(space, 0.0),
            Err(InstanceError::OddRequestCount(3))
        ));
    }

    #[test]
    fn adversarial_level_one_shape() {
        let inst = generate_greedy_adversarial_line(1, 0).unwrap();
        assert_eq!(inst.len(), 4);
        let pts = adversarial_line_positions(1);
        // the middle gap is the unique shortest distance
        let middle = pts[2] - pts[1];
        assert!(middle < pts[1] - pts[0] && middle < pts[3] - pts[2]);
        assert_eq!(generate_greedy_adversarial_line(3, 0).unwrap().len(), 16);
    }

    #[test]
    fn adversarial_level_cap() {
        assert!(matches!(
            generate_greedy_adversarial_line(MAX_ADVERSARIAL_LEVEL + 1, 0),
            Err(InstanceError::LevelTooLarge { .. })
        ));
        assert!(generate_greedy_adversarial_line(0, 0).is_err());
    }

    #[test]
    fn jitter_makes_distances_distinct_and_stays_metric() {
        let space = MetricSpace::matrix(vec![
            vec![0.0, 1.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 1.0],
            vec![2.0, 1.0, 1.0, 0.0],
        ])
        .unwrap();
        let inst = generate_simultaneous(space, 0.0).unwrap();
        assert!(!inst.has_distinct_distances(1e-12));
        let j = jitter(&inst, 1e-3, 5).unwrap();
        assert!(j.has_distinct_distances(1e-12));
        assert!(validate_metric(j.space(), DEFAULT_METRIC_TOL).is_valid());
    }

    #[test]
    fn roundtrip_through_file() {
        let inst = generate_uniform(4, SpaceKind::Euclidean(2), 3.0, 2.0, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        save_instance(&inst, &path).unwrap();
        let back = load_instance(&path).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json_string(), fs::read_to_string(&path).unwrap());
    }

    #[test]
    fn odd_request_count_in_file() {
        let text = r#"{"metric":{"kind":"line","coords":[0,1,2]},
            "requests":[{"id":0,"point":0,"time":0},{"id":1,"point":1,"time":0},
                        {"id":2,"point":2,"time":0}],
            "meta":{"name":"x","seed":0,"family":"f"}}"#;
        let err = Instance::from_json_str(text).unwrap_err();
        assert_eq!(err.to_string(), "odd request count: 3");
    }

    #[test]
    fn decreasing_time_names_request() {
        let text = r#"{"metric":{"kind":"line","coords":[0,1]},
            "requests":[{"id":0,"point":0,"time":2.0},{"id":1,"point":1,"time":1.0}]}"#;
        let err = Instance::from_json_str(text).unwrap_err();
        assert!(matches!(err, InstanceError::DecreasingTime { index: 1, .. }));
        assert!(err.to_string().starts_with("request 1:"));
    }

    #[test]
    fn bad_point_and_bad_ids() {
        let text = r#"{"metric":{"kind":"line","coords":[0,1]},
            "requests":[{"id":0,"point":0,"time":0},{"id":1,"point":5,"time":1}]}"#;
        assert!(matches!(
            Instance::from_json_str(text).unwrap_err(),
            InstanceError::BadPoint { index: 1, point: 5, .. }
        ));
        let text = r#"{"metric":{"kind":"line","coords":[0,1]},
            "requests":[{"id":1,"point":0,"time":0},{"id":0,"point":1,"time":1}]}"#;
        assert!(matches!(
            Instance::from_json_str(text).unwrap_err(),
            InstanceError::IdOutOfOrder { index: 0, id: 1 }
        ));
        assert!(matches!(
            Instance::from_json_str("{not json").unwrap_err(),
            InstanceError::Json(_)
        ));
    }

    #[test]
    fn shared_points_are_allowed() {
        let space = MetricSpace::line(vec![0.0, 4.0]).unwrap();
        let reqs = vec![
            Request {
                id: 0,
                point: 0,
                atime: 0.0,
            },
            Request {
                id: 1,
                point: 0,
                atime: 1.0,
            },
            Request {
                id: 2,
                point: 1,
                atime: 1.0,
            },
            Request {
                id: 3,
                point: 1,
                atime: 3.0,
            },
        ];
        let inst = Instance::new(space, reqs, InstanceMeta::default()).unwrap();
        assert_eq!(inst.dist(0, 1), 0.0);
        assert_eq!(inst.space_time_cost(0, 3), 7.0);
    }

    #[test]
    fn random_simultaneous_family() {
        let inst = generate_random_simultaneous(4, SpaceKind::Euclidean(2), 10.0, 3.0, 9).unwrap();
        assert_eq!(inst.len(), 8);
        assert!(inst.is_simultaneous());
        assert_eq!(inst.atime(5), 3.0);
        assert_eq!(inst.meta().family, "simultaneous");
        assert_eq!(
            inst,
            generate_random_simultaneous(4, SpaceKind::Euclidean(2), 10.0, 3.0, 9).unwrap()
        );
    }

    proptest! {
        #[test]
        fn json_roundtrip_is_identity(
            pairs in 1usize..6,
            kind in prop_oneof![Just(SpaceKind::Line), Just(SpaceKind::Euclidean(3)), Just(SpaceKind::Matrix)],
            seed in any::<u64>(),
            horizon in 0.0f64..100.0,
        ) {
            let inst = generate_uniform(pairs, kind, 50.0, horizon, seed).unwrap();
            let text = inst.to_json_string();
            let back = Instance::from_json_str(&text).unwrap();
            prop_assert_eq!(&back, &inst);
            prop_assert_eq!(back.to_json_string(), text);
        }
    }
}
