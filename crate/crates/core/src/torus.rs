//! Flat unit torus `[0,1)^d` with periodic distance, seeded uniform
//! sampling and CSV point ingestion.
//!
//! Randomness: every sample set is drawn from a ChaCha8 stream seeded via
//! `ChaCha8Rng::seed_from_u64`; each coordinate is one 53-bit uniform draw in
//! `[0,1)`, consumed point-major. Per-job seeds are derived with
//! [`derive_seed`], a SplitMix64 chain over the base seed and job indices.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Canonical representative of `c` in `[0,1)`.
#[inline]
pub fn wrap(c: f64) -> f64 {
    let w = c - c.floor();
    // c slightly below an integer rounds up to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// A point on the flat torus, always stored in canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint(Vec<f64>);

impl TorusPoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let mut coords = coords.into();
        if coords.is_empty() {
            return Err(Error::invalid("torus point needs at least one coordinate"));
        }
        for c in coords.iter_mut() {
            if !c.is_finite() {
                return Err(Error::invalid("non-finite coordinate"));
            }
            *c = wrap(*c);
        }
        Ok(TorusPoint(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Periodic distance between two canonical coordinate slices of equal length.
#[inline]
pub(crate) fn periodic_distance(x: &[f64], y: &[f64]) -> f64 {
    periodic_distance_sq(x, y).sqrt()
}

#[inline]
pub(crate) fn periodic_distance_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let g = (a - b).abs();
            let g = g.min(1.0 - g);
            g * g
        })
        .sum()
}

/// Euclidean norm of the componentwise wrapped difference.
pub fn torus_distance(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(periodic_distance(&x.0, &y.0))
}

/// Ordered point cloud on the torus. Index `i` identifies `x_i` everywhere
/// downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    coords: Vec<f64>,
    dim: usize,
    seed: Option<u64>,
}

impl SampleSet {
    pub fn from_points(points: &[TorusPoint]) -> Result<Self> {
        let dim = points
            .first()
            .map(TorusPoint::dim)
            .ok_or_else(|| Error::invalid("empty point list"))?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(SampleSet {
            coords,
            dim,
            seed: None,
        })
    }

    /// Builds from a flat point-major coordinate buffer, wrapping each value.
    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::invalid("flat buffer length must be a positive multiple of dim"));
        }
        let coords = coords
            .into_iter()
            .map(|c| {
                if c.is_finite() {
                    Ok(wrap(c))
                } else {
                    Err(Error::invalid("non-finite coordinate"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SampleSet {
            coords,
            dim,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn torus_point(&self, i: usize) -> TorusPoint {
        TorusPoint(self.point(i).to_vec())
    }

    /// `self` followed by `other`, preserving both orders. Keeps `self`'s seed.
    pub fn concat(&self, other: &SampleSet) -> Result<SampleSet> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(SampleSet {
            coords,
            dim: self.dim,
            seed: self.seed.or(other.seed),
        })
    }
}

/// `n` iid uniform points on `[0,1)^d`. Identical seeds give bit-identical sets.
pub fn sample_uniform(n: usize, d: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    Ok(SampleSet {
        coords,
        dim: d,
        seed: Some(seed),
    })
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with job indices, e.g. `derive_seed(base, &[n, rep])`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |h, &p| splitmix64(h ^ p))
}

/// Reads a headerless CSV with `d` decimal columns per row.
pub fn load_points(path: impl AsRef<Path>, d: usize) -> Result<SampleSet> {
    let path = path.as_ref();
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut coords = Vec::new();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        if record.len() != d {
            return Err(parse_err(
                line,
                format!("expected {d} columns, found {}", record.len()),
            ));
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value {field:?}")));
            }
            coords.push(wrap(v));
        }
    }
    if coords.is_empty() {
        return Err(parse_err(0, "no points".into()));
    }
    Ok(SampleSet {
        coords,
        dim: d,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> TorusPoint {
        TorusPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let d = torus_distance(&pt(&[0.1, 0.1]), &pt(&[0.9, 0.9])).unwrap();
        assert!((d - 0.2 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(torus_distance(&pt(&[0.3, 0.7]), &pt(&[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(torus_distance(&pt(&[0.0]), &pt(&[0.5])).unwrap(), 0.5);
        assert!(torus_distance(&pt(&[0.0]), &pt(&[0.5, 0.1])).is_err());
    }

    #[test]
    fn wrap_edge_cases() {
        assert_eq!(wrap(1.25), 0.25);
        assert_eq!(wrap(-0.25), 0.75);
        assert_eq!(wrap(1.0), 0.0);
        assert_eq!(wrap(-1e-300), 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_uniform(3, 2, 7).unwrap();
        let b = sample_uniform(3, 2, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_uniform(3, 2, 8).unwrap());
        assert!(sample_uniform(0, 2, 7).is_err());
    }

    #[test]
    fn sampling_mean_and_quadrant() {
        let s = sample_uniform(10_000, 1, 1).unwrap();
        let mean = s.points().map(|p| p[0]).sum::<f64>() / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");

        let s = sample_uniform(10_000, 2, 2).unwrap();
        let frac = s.points().filter(|p| p[0] < 0.5 && p[1] < 0.5).count() as f64 / 10_000.0;
        assert!((frac - 0.25).abs() < 0.02, "fraction {frac}");
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[100, 0]);
        assert_eq!(a, derive_seed(1, &[100, 0]));
        assert_ne!(a, derive_seed(1, &[100, 1]));
        assert_ne!(a, derive_seed(2, &[100, 0]));
    }

    #[test]
    fn load_points_parses_and_wraps() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pts.csv");
        std::fs::write(&p, "0.1,0.1\n0.9,0.9\n").unwrap();
        let s = load_points(&p, 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.point(1), &[0.9, 0.9]);

        std::fs::write(&p, "1.25,0.5\n").unwrap();
        assert_eq!(load_points(&p, 2).unwrap().point(0), &[0.25, 0.5]);
    }

    #[test]
    fn load_points_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pts.csv");
        std::fs::write(&p, "0.1\n").unwrap();
        match load_points(&p, 2) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&p, "0.1,0.2\n0.3,nan\n").unwrap();
        match load_points(&p, 2) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&p, "0.1,0.2\n0.3,abc\n").unwrap();
        assert!(matches!(load_points(&p, 2), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn wrap_is_idempotent(c in -3.0f64..3.0) {
            let w = wrap(c);
            prop_assert!((0.0..1.0).contains(&w));
            prop_assert_eq!(wrap(w), w);
        }
    }

    proptest! {

        #[test]
        fn metric_axioms(a in prop::collection::vec(0.0f64..1.0, 6)) {
            let (x, y, z) = (pt(&a[0..2]), pt(&a[2..4]), pt(&a[4..6]));
            let dxy = torus_distance(&x, &y).unwrap();
            let dyx = torus_distance(&y, &x).unwrap();
            let dyz = torus_distance(&y, &z).unwrap();
            let dxz = torus_distance(&x, &z).unwrap();
            prop_assert_eq!(dxy, dyx);
            prop_assert!(dxz <= dxy + dyz + 1e-12);
            prop_assert!(dxy <= 2f64.sqrt() / 2.0 + 1e-15);
            let euclid = a[0..2].iter().zip(&a[2..4]).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            prop_assert!(dxy <= euclid + 1e-15);
        }
    }
}
