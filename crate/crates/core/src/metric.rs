//! Metric spaces in which requests live.
//!
//! Three representations are supported: points on a line, points in
//! `d`-dimensional euclidean space, and an explicit symmetric distance
//! matrix. Distinct points may be at distance zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a point inside a [`MetricSpace`].
pub type PointId = usize;

/// Default relative tolerance for metric axiom checks.
pub const DEFAULT_METRIC_TOL: f64 = 1e-9;

/// Largest space validated with an exhaustive triple scan.
pub const DEFAULT_VALIDATION_CAP: usize = 512;

/// Number of random triples examined when a space exceeds the validation cap.
const SAMPLED_TRIPLES: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("unknown point id {id} (space has {len} points)")]
    UnknownPoint { id: PointId, len: usize },
    #[error("euclidean point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("distance matrix row {row} has {found} entries, expected {expected}")]
    NotSquare { row: usize, expected: usize, found: usize },
    #[error("non-finite coordinate or distance at point {index}")]
    NonFinite { index: usize },
}

/// A finite metric space.
///
/// The serialized form is tagged by `kind`, e.g.
/// `{"kind": "line", "coords": [0.0, 1.5]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricSpace {
    Line { coords: Vec<f64> },
    Euclidean { coords: Vec<Vec<f64>> },
    Matrix { matrix: Vec<Vec<f64>> },
}

impl MetricSpace {
    pub fn line(coords: Vec<f64>) -> Result<Self, MetricError> {
        let space = MetricSpace::Line { coords };
        space.check_shape()?;
        Ok(space)
    }

    pub fn euclidean(coords: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let space = MetricSpace::Euclidean { coords };
        space.check_shape()?;
        Ok(space)
    }

    /// Builds a matrix metric. Only the shape and finiteness are checked
    /// here; use [`validate_metric`] for the metric axioms.
    pub fn matrix(matrix: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let space = MetricSpace::Matrix { matrix };
        space.check_shape()?;
        Ok(space)
    }

    pub fn len(&self) -> usize {
        match self {
            MetricSpace::Line { coords } => coords.len(),
            MetricSpace::Euclidean { coords } => coords.len(),
            MetricSpace::Matrix { matrix } => matrix.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MetricSpace::Line { .. } => "line",
            MetricSpace::Euclidean { .. } => "euclidean",
            MetricSpace::Matrix { .. } => "matrix",
        }
    }

    /// Line and euclidean spaces are metrics by construction.
    pub fn is_metric_by_construction(&self) -> bool {
        !matches!(self, MetricSpace::Matrix { .. })
    }

    /// Checks dimensions and finiteness (not the metric axioms).
    pub fn check_shape(&self) -> Result<(), MetricError> {
        match self {
            MetricSpace::Line { coords } => {
                if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
                    return Err(MetricError::NonFinite { index });
                }
            }
            MetricSpace::Euclidean { coords } => {
                let expected = coords.first().map_or(0, Vec::len);
                for (index, c) in coords.iter().enumerate() {
                    if c.len() != expected {
                        return Err(MetricError::DimensionMismatch {
                            index,
                            expected,
                            found: c.len(),
                        });
                    }
                    if c.iter().any(|x| !x.is_finite()) {
                        return Err(MetricError::NonFinite { index });
                    }
                }
            }
            MetricSpace::Matrix { matrix } => {
                let n = matrix.len();
                for (row, r) in matrix.iter().enumerate() {
                    if r.len() != n {
                        return Err(MetricError::NotSquare {
                            row,
                            expected: n,
                            found: r.len(),
                        });
                    }
                    if r.iter().any(|x| !x.is_finite()) {
                        return Err(MetricError::NonFinite { index: row });
                    }
                }
            }
        }
        Ok(())
    }

    /// Distance between two points, checking both ids.
    pub fn distance(&self, p: PointId, q: PointId) -> Result<f64, MetricError> {
        let len = self.len();
        for id in [p, q] {
            if id >= len {
                return Err(MetricError::UnknownPoint { id, len });
            }
        }
        Ok(self.dist(p, q))
    }

    /// Distance between two points known to be valid.
    ///
    /// Panics if either id is out of range.
    #[inline]
    pub fn dist(&self, p: PointId, q: PointId) -> f64 {
        if p == q {
            return 0.0;
        }
        match self {
            MetricSpace::Line { coords } => (coords[p] - coords[q]).abs(),
            MetricSpace::Euclidean { coords } => coords[p]
                .iter()
                .zip(&coords[q])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            MetricSpace::Matrix { matrix } => matrix[p][q],
        }
    }
}

/// One failed metric axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum MetricViolation {
    NonZeroDiagonal {
        p: PointId,
        value: f64,
    },
    Negative {
        p: PointId,
        q: PointId,
        value: f64,
    },
    Asymmetric {
        p: PointId,
        q: PointId,
        pq: f64,
        qp: f64,
    },
    Triangle {
        p: PointId,
        q: PointId,
        r: PointId,
        direct: f64,
        via: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<MetricViolation>,
    /// True when the triangle check was sampled instead of exhaustive.
    pub partial: bool,
    pub triples_checked: u64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn exceeds(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs > rhs + tol * lhs.abs().max(rhs.abs())
}

/// Checks the metric axioms with the default size cap.
pub fn validate_metric(space: &MetricSpace, tol: f64) -> ValidationReport {
    validate_metric_with_cap(space, tol, DEFAULT_VALIDATION_CAP)
}

/// Checks diagonal, sign, symmetry and triangle inequality.
///
/// Spaces with more than `cap` points get a seeded random sample of
/// triples instead of the full scan, and the report is flagged partial.
pub fn validate_metric_with_cap(space: &MetricSpace, tol: f64, cap: usize) -> ValidationReport {
    let n = space.len();
    let mut violations = Vec::new();
    let raw = |p: PointId, q: PointId| match space {
        MetricSpace::Matrix { matrix } => matrix[p][q],
        _ => space.dist(p, q),
    };

    for p in 0..n {
        let d = raw(p, p);
        if d.abs() > tol {
            violations.push(MetricViolation::NonZeroDiagonal { p, value: d });
        }
        for q in (p + 1)..n {
            let (pq, qp) = (raw(p, q), raw(q, p));
            if pq < 0.0 || qp < 0.0 {
                violations.push(MetricViolation::Negative {
                    p,
                    q,
                    value: pq.min(qp),
                });
            }
            if (pq - qp).abs() > tol * pq.abs().max(qp.abs()) {
                violations.push(MetricViolation::Asymmetric { p, q, pq, qp });
            }
        }
    }

    let check = |p: PointId, q: PointId, r: PointId, out: &mut Vec<MetricViolation>| {
        let direct = raw(p, r);
        let via = raw(p, q) + raw(q, r);
        if exceeds(direct, via, tol) {
            out.push(MetricViolation::Triangle { p, q, r, direct, via });
        }
    };

    let partial = n > cap;
    let mut triples_checked = 0u64;
    if !partial {
        for p in 0..n {
            for r in (p + 1)..n {
                for q in 0..n {
                    if q != p && q != r {
                        check(p, q, r, &mut violations);
                        triples_checked += 1;
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_7472_6963);
        for _ in 0..SAMPLED_TRIPLES {
            let (p, q, r) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            if p != q && q != r && p != r {
                check(p, q, r, &mut violations);
                triples_checked += 1;
            }
        }
    }

    ValidationReport {
        violations,
        partial,
        triples_checked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn line_distance() {
        let s = MetricSpace::line(vec![0.0, 1.0]).unwrap();
        assert_eq!(s.distance(0, 1).unwrap(), 1.0);
        assert_eq!(s.distance(1, 1).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_pythagorean() {
        let s = MetricSpace::euclidean(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.distance(0, 1).unwrap(), 5.0);
    }

    #[test]
    fn unknown_point_is_error() {
        let s = MetricSpace::line(vec![0.0, 1.0]).unwrap();
        assert_eq!(s.distance(0, 2), Err(MetricError::UnknownPoint { id: 2, len: 2 }));
    }

    #[test]
    fn ragged_inputs_rejected() {
        assert!(matches!(
            MetricSpace::euclidean(vec![vec![0.0, 0.0], vec![1.0]]),
            Err(MetricError::DimensionMismatch { index: 1, .. })
        ));
        assert!(matches!(
            MetricSpace::matrix(vec![vec![0.0, 1.0], vec![1.0]]),
            Err(MetricError::NotSquare { row: 1, .. })
        ));
        assert!(matches!(
            MetricSpace::line(vec![0.0, f64::NAN]),
            Err(MetricError::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn valid_line_has_empty_report() {
        let s = MetricSpace::line(vec![0.0, 3.0, -2.5, 7.0]).unwrap();
        let report = validate_metric(&s, DEFAULT_METRIC_TOL);
        assert!(report.is_valid());
        assert!(!report.partial);
    }

    #[test]
    fn triangle_violation_is_listed() {
        let s = MetricSpace::matrix(vec![vec![0.0, 1.0, 10.0], vec![1.0, 0.0, 1.0], vec![10.0, 1.0, 0.0]]).unwrap();
        let report = validate_metric(&s, DEFAULT_METRIC_TOL);
        assert_eq!(
            report.violations,
            vec![MetricViolation::Triangle {
                p: 0,
                q: 1,
                r: 2,
                direct: 10.0,
                via: 2.0
            }]
        );
    }

    #[test]
    fn asymmetry_is_listed() {
        let s = MetricSpace::matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let report = validate_metric(&s, DEFAULT_METRIC_TOL);
        assert_eq!(
            report.violations,
            vec![MetricViolation::Asymmetric {
                p: 0,
                q: 1,
                pq: 1.0,
                qp: 2.0
            }]
        );
    }

    #[test]
    fn zero_distance_between_distinct_points_is_fine() {
        let s = MetricSpace::matrix(vec![vec![0.0, 0.0, 2.0], vec![0.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]]).unwrap();
        assert!(validate_metric(&s, DEFAULT_METRIC_TOL).is_valid());
    }

    #[test]
    fn oversized_space_is_sampled() {
        let s = MetricSpace::line((0..20).map(f64::from).collect()).unwrap();
        let report = validate_metric_with_cap(&s, DEFAULT_METRIC_TOL, 10);
        assert!(report.partial);
        assert!(report.is_valid());
        assert!(report.triples_checked > 0);
    }

    #[test]
    fn serde_tagging() {
        let s = MetricSpace::line(vec![0.0, 2.5]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"kind":"line","coords":[0.0,2.5]}"#);
        let m: MetricSpace = serde_json::from_str(r#"{"kind":"matrix","matrix":[[0,1],[1,0]]}"#).unwrap();
        assert_eq!(m.dist(0, 1), 1.0);
    }

    proptest! {
        #[test]
        fn constructed_metrics_always_validate(
            line in prop::collection::vec(-1e3f64..1e3, 1..12),
            plane in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..12),
        ) {
            let l = MetricSpace::line(line).unwrap();
            let e = MetricSpace::euclidean(plane).unwrap();
            prop_assert!(validate_metric(&l, DEFAULT_METRIC_TOL).is_valid());
            prop_assert!(validate_metric(&e, DEFAULT_METRIC_TOL).is_valid());
            for s in [&l, &e] {
                for p in 0..s.len() {
                    for q in 0..s.len() {
                        let d = s.distance(p, q).unwrap();
                        prop_assert!(d >= 0.0);
                        prop_assert_eq!(d, s.distance(q, p).unwrap());
                    }
                }
            }
        }
    }
}
