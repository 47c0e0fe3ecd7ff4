//! Exact TL² distance between equal-size empirical (measure, function) pairs.

use crate::error::{Error, Result};
use crate::torus::{periodic_distance, periodic_distance_sq, SampleSet};

/// `n` atoms with weight `1/n`, each carrying a value.
#[derive(Debug, Clone)]
pub struct EmpiricalPair {
    points: SampleSet,
    values: Vec<f64>,
}

impl EmpiricalPair {
    pub fn new(points: SampleSet, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: points.len(),
                right: values.len(),
            });
        }
        Ok(EmpiricalPair { points, values })
    }

    pub fn points(&self) -> &SampleSet {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Minimum-cost perfect matching on a square row-major cost matrix
/// (Hungarian method with potentials). Returns `assignment[row] = col`.
pub fn linear_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n × n");
    // 1-based arrays; index 0 is the virtual column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched_row[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    assignment
}

/// `(1/n) Σ_i [d_T(x_i, y_π(i))² + (u_i − v_π(i))²]` row-major, `n × n`.
pub fn tl2_cost_matrix(a: &EmpiricalPair, b: &EmpiricalPair) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "TL² needs equal-size measures, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.points.dim() != b.points.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.points.dim(),
            found: b.points.dim(),
        });
    }
    let n = a.len();
    let mut cost = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let dv = a.values[i] - b.values[j];
            cost.push(periodic_distance_sq(a.points.point(i), b.points.point(j)) + dv * dv);
        }
    }
    Ok(cost)
}

/// Optimal-coupling TL² discrepancy. As displayed for `p = 2`, no square
/// root is taken.
pub fn tl2_distance(a: &EmpiricalPair, b: &EmpiricalPair) -> Result<f64> {
    let cost = tl2_cost_matrix(a, b)?;
    let n = a.len();
    if n == 0 {
        return Ok(0.0);
    }
    let assignment = linear_assignment(&cost, n);
    // summing in sorted order makes swapped arguments agree bitwise
    let mut matched: Vec<f64> = assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).collect();
    matched.sort_by(f64::total_cmp);
    Ok(matched.iter().sum::<f64>() / n as f64)
}

/// Nearest-atom map with its sup displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap {
    pub targets: Vec<usize>,
    pub sup_displacement: f64,
}

/// Maps every point of `from` to its torus-nearest point of `to` (lowest index on ties).
pub fn nearest_transport_map(from: &SampleSet, to: &SampleSet) -> Result<TransportMap> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::invalid("both point sets must be nonempty"));
    }
    if from.dim() != to.dim() {
        return Err(Error::DimensionMismatch {
            expected: from.dim(),
            found: to.dim(),
        });
    }
    let mut targets = Vec::with_capacity(from.len());
    let mut sup: f64 = 0.0;
    for x in from.points() {
        let (best, dist) = to
            .points()
            .enumerate()
            .map(|(j, y)| (j, periodic_distance(x, y)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        targets.push(best);
        sup = sup.max(dist);
    }
    Ok(TransportMap {
        targets,
        sup_displacement: sup,
    })
}
