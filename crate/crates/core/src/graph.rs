//! ε-neighborhood graphs on torus samples: kernel weights, degrees, the
//! rescaled graph Laplacian and connectivity utilities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::torus::{periodic_distance, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Indicator,
    Custom,
}

impl KernelKind {
    /// Tag byte used by the eigen cache.
    pub fn tag(self) -> u8 {
        match self {
            KernelKind::Indicator => 0,
            KernelKind::Custom => 1,
        }
    }
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial kernel profile `η` with support in `[0,1]`.
#[derive(Clone)]
pub struct Kernel {
    kind: KernelKind,
    profile: Profile,
    normalized: bool,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("kind", &self.kind)
            .field("normalized", &self.normalized)
            .finish()
    }
}

impl Kernel {
    /// `η(t) = 1` for `t ≤ 1`, else 0. Not normalized.
    pub fn indicator() -> Self {
        Kernel {
            kind: KernelKind::Indicator,
            profile: Arc::new(|t: f64| if t <= 1.0 { 1.0 } else { 0.0 }),
            normalized: false,
        }
    }

    /// A user profile. Checked on a dense grid of `[0, 2]` for finiteness,
    /// nonnegativity, monotone decrease and vanishing on `(1, ∞)`.
    pub fn custom<F>(profile: F, normalized: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        const STEPS: usize = 4000;
        let mut prev = f64::INFINITY;
        for k in 0..=STEPS {
            let t = 2.0 * k as f64 / STEPS as f64;
            let v = profile(t);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("kernel profile invalid at t={t}: {v}")));
            }
            if v > prev {
                return Err(Error::invalid(format!("kernel profile increases at t={t}")));
            }
            if t > 1.0 && v != 0.0 {
                return Err(Error::invalid(format!("kernel profile nonzero at t={t} > 1")));
            }
            prev = v;
        }
        if profile(0.0) <= 0.0 {
            return Err(Error::invalid("kernel profile vanishes at the origin"));
        }
        Ok(Kernel {
            kind: KernelKind::Custom,
            profile: Arc::new(profile),
            normalized,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.profile)(t)
    }

    /// Largest `t` with `η(t) > 0`, found by bisection to `tol`.
    fn support_radius(&self, tol: f64) -> f64 {
        match self.kind {
            KernelKind::Indicator => 1.0,
            KernelKind::Custom => {
                if self.eval(1.0) > 0.0 {
                    return 1.0;
                }
                let (mut lo, mut hi) = (0.0, 1.0);
                while hi - lo > tol.max(f64::EPSILON) {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }
}

fn gamma_half_integer(d: usize) -> f64 {
    // Γ(d/2) by the recursion Γ(x+1) = xΓ(x)
    let (mut x, mut g) = if d % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while x < d as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d)
}

fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson_step(f, a, fa, m, fm);
    let (rm, frm, right) = simpson_step(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson_step(f, a, fa, b, fb);
    // absolute target from a coarse magnitude estimate
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    adaptive_simpson(f, a, fa, b, fb, m, fm, whole, rel_tol * scale, 48)
}

/// `σ_η = (1/d) ∫_{R^d} η(|h|) |h|² dh`.
pub fn sigma_eta(kernel: &Kernel, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let area = sphere_area(d);
    let value = match kernel.kind {
        KernelKind::Indicator => area / (d * (d + 2)) as f64,
        KernelKind::Custom => {
            let radial = |r: f64| kernel.eval(r) * r.powi(d as i32 + 1);
            area / d as f64 * integrate(&radial, 0.0, 1.0, 1e-10)
        }
    };
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::invalid(format!("kernel second moment is not positive: {value}")));
    }
    Ok(value)
}

/// Dense symmetric kernel graph.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    pub n: usize,
    pub dim: usize,
    pub eps: f64,
    pub weights: DMatrix<f64>,
    pub degrees: Vec<f64>,
    pub sigma_eta: f64,
}

impl WeightedGraph {
    /// Wraps an explicit weight matrix; degrees are full row sums.
    pub fn from_weights(weights: DMatrix<f64>, dim: usize, eps: f64, sigma_eta: f64) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::invalid("weight matrix must be square and nonempty"));
        }
        if !(eps > 0.0) || !(sigma_eta > 0.0) {
            return Err(Error::invalid("eps and sigma_eta must be positive"));
        }
        for j in 0..n {
            for i in 0..n {
                let w = weights[(i, j)];
                if !(w >= 0.0) || w != weights[(j, i)] {
                    return Err(Error::invalid(format!("weights not symmetric nonnegative at ({i},{j})")));
                }
            }
        }
        let degrees = row_sums(&weights);
        Ok(WeightedGraph {
            n,
            dim,
            eps,
            weights,
            degrees,
            sigma_eta,
        })
    }
}

fn row_sums(w: &DMatrix<f64>) -> Vec<f64> {
    // symmetric: column sums equal row sums and are contiguous
    w.column_iter().map(|c| c.iter().sum()).collect()
}

/// `w_ij = ε^{-d} η(d_T(x_i, x_j) / ε)` for all pairs including `i = j`.
pub fn build_weight_matrix(points: &SampleSet, eps: f64, kernel: &Kernel) -> Result<WeightedGraph> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let n = points.len();
    let d = points.dim();
    let sigma = sigma_eta(kernel, d)?;
    let scale = eps.powi(-(d as i32));
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        let xj = points.point(j);
        for (i, w) in col.iter_mut().enumerate() {
            let t = periodic_distance(points.point(i), xj) / eps;
            *w = scale * kernel.eval(t);
        }
    });
    let weights = DMatrix::from_vec(n, n, data);
    let degrees = row_sums(&weights);
    Ok(WeightedGraph {
        n,
        dim: d,
        eps,
        weights,
        degrees,
        sigma_eta: sigma,
    })
}

/// `Δ = (2 / (σ_η n ε²)) (D − W)`. Self-weights cancel.
pub fn graph_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.n;
    let pref = 2.0 / (g.sigma_eta * n as f64 * g.eps * g.eps);
    let mut lap = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut off = 0.0;
        for i in 0..n {
            if i != j {
                let w = g.weights[(i, j)];
                lap[(i, j)] = -pref * w;
                off += w;
            }
        }
        lap[(j, j)] = pref * off;
    }
    lap
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Number of connected components of the graph with edges `w_ij > 0, i ≠ j`.
pub fn component_count(g: &WeightedGraph) -> usize {
    let mut dsu = DisjointSet::new(g.n);
    let mut components = g.n;
    for j in 0..g.n {
        for i in (j + 1)..g.n {
            if g.weights[(i, j)] > 0.0 && dsu.union(i, j) {
                components -= 1;
            }
        }
    }
    components
}

pub fn is_connected(g: &WeightedGraph) -> bool {
    component_count(g) == 1
}

/// Largest edge of the torus-distance minimum spanning tree (dense Prim).
pub fn mst_bottleneck(points: &SampleSet) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut current = 0;
    in_tree[0] = true;
    let mut bottleneck: f64 = 0.0;
    for _ in 1..n {
        let xc = points.point(current);
        let mut next = usize::MAX;
        let mut next_dist = f64::INFINITY;
        for k in 0..n {
            if in_tree[k] {
                continue;
            }
            let dk = periodic_distance(xc, points.point(k));
            if dk < best[k] {
                best[k] = dk;
            }
            if best[k] < next_dist {
                next_dist = best[k];
                next = k;
            }
        }
        in_tree[next] = true;
        bottleneck = bottleneck.max(next_dist);
        current = next;
    }
    Ok(bottleneck)
}

/// Smallest ε at which the kernel graph is connected.
///
/// Exact for the indicator kernel (the MST bottleneck, since `η(1) = 1`);
/// for custom kernels the bottleneck is divided by the effective support
/// radius, located to `tol`.
pub fn connectivity_radius(points: &SampleSet, kernel: &Kernel, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let bottleneck = mst_bottleneck(points)?;
    Ok(bottleneck / kernel.support_radius(tol))
}
