//! Convex sets used as projection and decoding sets, with their linear
//! maximization oracles (LMO), small-instance vertex enumeration and the ℓ₁
//! radius that controls smoothness under the Shannon geometry.
//!
//! Matrix-valued sets (Birkhoff, row-stochastic) store points row-major.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::assignment::hungarian;
use crate::error::{check_dim, Error, Result};
use crate::geometry::Geometry;
use crate::scalar::{dot, sum, Scalar};
use crate::structure::StructuredLabel;

/// Default cap on brute-force vertex enumeration.
pub const DEFAULT_VERTEX_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Polytope<F> {
    /// Probability simplex in ℝᵏ.
    Simplex(usize),
    /// Unit cube [0,1]ᵏ.
    Cube(usize),
    /// {μ ∈ [0,1]ᵏ : lower ≤ ⟨μ,1⟩ ≤ upper}.
    Knapsack { k: usize, lower: usize, upper: usize },
    /// Doubly stochastic k × k matrices.
    Birkhoff(usize),
    /// Row-stochastic k × k matrices.
    RowStochastic(usize),
    /// Convex hull of the permutations of a descending weight vector.
    Permutahedron(Vec<F>),
    /// {1 ≥ μ₁ ≥ … ≥ μ_{k−1} ≥ 0} ⊂ ℝ^{k−1}, for `k` ordinal levels.
    OrderSimplex(usize),
    /// All of ℝᵖ (no projection).
    FullSpace(usize),
}

/// An extreme point, together with the structure it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex<F> {
    pub point: Vec<F>,
    pub structure: Option<StructuredLabel>,
}

impl<F: Scalar> Polytope<F> {
    /// Checks the structural invariants of the descriptor.
    pub fn validate(&self) -> Result<()> {
        match self {
            Polytope::Knapsack { k, lower, upper } => {
                if lower > upper {
                    return Err(Error::InfeasibleBounds {
                        lower: *lower,
                        upper: *upper,
                    });
                }
                if upper > k {
                    return Err(Error::InvalidPolytope(format!(
                        "knapsack upper bound {upper} exceeds k = {k}"
                    )));
                }
                Ok(())
            }
            Polytope::Permutahedron(w) => {
                if w.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidPolytope("non-finite permutahedron weight".into()));
                }
                if w.windows(2).any(|p| p[0] < p[1]) {
                    return Err(Error::InvalidPolytope(
                        "permutahedron weights must be sorted in descending order".into(),
                    ));
                }
                Ok(())
            }
            Polytope::OrderSimplex(0) => {
                Err(Error::InvalidPolytope("order simplex needs at least one level".into()))
            }
            _ => Ok(()),
        }
    }

    /// Dimension of the vectors living in the set.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Polytope::Simplex(k) | Polytope::Cube(k) | Polytope::FullSpace(k) => *k,
            Polytope::Knapsack { k, .. } => *k,
            Polytope::Birkhoff(k) | Polytope::RowStochastic(k) => k * k,
            Polytope::Permutahedron(w) => w.len(),
            Polytope::OrderSimplex(k) => k.saturating_sub(1),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Polytope::FullSpace(_))
    }

    /// Stable textual identifier, accepted back by [`Polytope::parse`].
    pub fn identifier(&self) -> String {
        match self {
            Polytope::Simplex(_) => "simplex".into(),
            Polytope::Cube(_) => "cube".into(),
            Polytope::Knapsack { lower, upper, .. } => format!("knapsack:{lower}:{upper}"),
            Polytope::Birkhoff(_) => "birkhoff".into(),
            Polytope::RowStochastic(_) => "rowstochastic".into(),
            Polytope::Permutahedron(w) => {
                let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                format!("permutahedron:{}", parts.join(","))
            }
            Polytope::OrderSimplex(_) => "ordersimplex".into(),
            Polytope::FullSpace(_) => "full".into(),
        }
    }

    /// Parses an identifier for a set whose points have dimension `dim`.
    ///
    /// Accepted forms: `simplex`, `cube`, `knapsack:L:U`, `birkhoff`,
    /// `rowstochastic`, `permutahedron` (weights dim, …, 1),
    /// `permutahedron:w1,w2,…`, `ordersimplex`, `full`.
    pub fn parse(ident: &str, dim: usize) -> Result<Self> {
        let lower = ident.to_ascii_lowercase();
        let mut parts = lower.splitn(2, ':');
        let head = parts.next().unwrap_or("");
        let rest = parts.next();
        let bad = |msg: String| Error::InvalidArgument(msg);
        let side = || -> Result<usize> {
            let k = (dim as f64).sqrt().round() as usize;
            if k * k != dim {
                Err(bad(format!("'{head}' needs a square matrix, got {dim} entries")))
            } else {
                Ok(k)
            }
        };
        let spec = match (head, rest) {
            ("simplex", None) => Polytope::Simplex(dim),
            ("cube", None) => Polytope::Cube(dim),
            ("full" | "fullspace" | "real", None) => Polytope::FullSpace(dim),
            ("birkhoff", None) => Polytope::Birkhoff(side()?),
            ("rowstochastic" | "row_stochastic", None) => Polytope::RowStochastic(side()?),
            ("ordersimplex" | "order_simplex", None) => Polytope::OrderSimplex(dim + 1),
            ("permutahedron", None) => {
                Polytope::Permutahedron((0..dim).map(|i| F::from_usize_lossy(dim - i)).collect())
            }
            ("permutahedron", Some(ws)) => {
                let w = ws
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map(F::lit)
                            .map_err(|e| bad(format!("bad weight '{t}': {e}")))
                    })
                    .collect::<Result<Vec<F>>>()?;
                check_dim(dim, w.len())?;
                Polytope::Permutahedron(w)
            }
            ("knapsack", Some(bounds)) => {
                let nums: Vec<usize> = bounds
                    .split(':')
                    .map(|t| t.trim().parse::<usize>().map_err(|e| bad(format!("bad bound '{t}': {e}"))))
                    .collect::<Result<_>>()?;
                if nums.len() != 2 {
                    return Err(bad(format!("knapsack needs 'knapsack:L:U', got '{ident}'")));
                }
                Polytope::Knapsack {
                    k: dim,
                    lower: nums[0],
                    upper: nums[1],
                }
            }
            _ => return Err(bad(format!("unknown set '{ident}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// argmax over the set of ⟨u, v⟩, always a vertex.
    ///
    /// Ties go to the lowest index (stable descending sorts); cube
    /// coordinates with vᵢ = 0 map to 0.
    pub fn lmo(&self, v: &[F]) -> Result<Vertex<F>> {
        self.validate()?;
        check_dim(self.ambient_dim(), v.len())?;
        if v.iter().any(|x| x.is_nan()) {
            return Err(Error::Domain("NaN direction".into()));
        }
        let vertex = match self {
            Polytope::Simplex(k) => {
                let y = argmax_first(v);
                let mut point = vec![F::zero(); *k];
                if *k > 0 {
                    point[y] = F::one();
                }
                Vertex {
                    point,
                    structure: Some(StructuredLabel::Class(y)),
                }
            }
            Polytope::Cube(_) => {
                let set: Vec<usize> = (0..v.len()).filter(|&i| v[i] > F::zero()).collect();
                indicator_vertex(v.len(), set)
            }
            Polytope::Knapsack { k, lower, upper } => {
                let order = argsort_desc(v);
                let mut chosen = vec![false; *k];
                for (pos, &i) in order.iter().enumerate() {
                    if pos < *lower || (pos < *upper && v[i] > F::zero()) {
                        chosen[i] = true;
                    }
                }
                let set: Vec<usize> = (0..*k).filter(|&i| chosen[i]).collect();
                indicator_vertex(*k, set)
            }
            Polytope::Birkhoff(k) => {
                let perm = hungarian(v, *k)?;
                Vertex {
                    point: assignment_point(&perm, *k),
                    structure: Some(StructuredLabel::Permutation(perm)),
                }
            }
            Polytope::RowStochastic(k) => {
                let assign: Vec<usize> = (0..*k).map(|i| argmax_first(&v[i * k..(i + 1) * k])).collect();
                Vertex {
                    point: assignment_point(&assign, *k),
                    structure: Some(StructuredLabel::RowAssignment(assign)),
                }
            }
            Polytope::Permutahedron(w) => {
                let order = argsort_desc(v);
                let mut ranks = vec![0usize; w.len()];
                for (pos, &i) in order.iter().enumerate() {
                    ranks[i] = pos;
                }
                Vertex {
                    point: ranks.iter().map(|&r| w[r]).collect(),
                    structure: Some(StructuredLabel::Permutation(ranks)),
                }
            }
            Polytope::OrderSimplex(k) => {
                // score(y) = Σ_{i<y} vᵢ; keep the first maximizer.
                let mut best = 0usize;
                let mut best_score = F::zero();
                let mut running = F::zero();
                for y in 1..*k {
                    running += v[y - 1];
                    if running > best_score {
                        best_score = running;
                        best = y;
                    }
                }
                Vertex {
                    point: (0..k - 1)
                        .map(|i| if i < best { F::one() } else { F::zero() })
                        .collect(),
                    structure: Some(StructuredLabel::Ordinal(best)),
                }
            }
            Polytope::FullSpace(_) => {
                return Err(Error::Unbounded("no linear maximizer over the full space".into()))
            }
        };
        Ok(vertex)
    }

    /// Number of vertices (with multiplicity for repeated permutahedron weights).
    pub fn vertex_count(&self) -> Result<u128> {
        let n = match self {
            Polytope::Simplex(k) => *k as u128,
            Polytope::Cube(k) => 1u128.checked_shl(*k as u32).unwrap_or(u128::MAX),
            Polytope::Knapsack { k, lower, upper } => (*lower..=*upper).map(|s| binomial(*k, s)).sum(),
            Polytope::Birkhoff(k) => factorial(*k),
            Polytope::RowStochastic(k) => (*k as u128).checked_pow(*k as u32).unwrap_or(u128::MAX),
            Polytope::Permutahedron(w) => factorial(w.len()),
            Polytope::OrderSimplex(k) => *k as u128,
            Polytope::FullSpace(_) => {
                return Err(Error::Unbounded("the full space has no vertices".into()))
            }
        };
        Ok(n)
    }

    /// The exact vertex set, refusing when it has more than `cap` elements.
    pub fn enumerate_vertices(&self, cap: usize) -> Result<Vec<Vertex<F>>> {
        self.validate()?;
        let count = self.vertex_count()?;
        if count > cap as u128 {
            return Err(Error::TooManyVertices { count, cap });
        }
        let out = match self {
            Polytope::Simplex(k) => (0..*k)
                .map(|y| {
                    let mut point = vec![F::zero(); *k];
                    point[y] = F::one();
                    Vertex {
                        point,
                        structure: Some(StructuredLabel::Class(y)),
                    }
                })
                .collect(),
            Polytope::Cube(k) => subsets(*k, 0, *k),
            Polytope::Knapsack { k, lower, upper } => subsets(*k, *lower, *upper),
            Polytope::Birkhoff(k) => permutations(*k)
                .into_iter()
                .map(|perm| Vertex {
                    point: assignment_point(&perm, *k),
                    structure: Some(StructuredLabel::Permutation(perm)),
                })
                .collect(),
            Polytope::RowStochastic(k) => {
                let total = (*k as u128).pow(*k as u32) as usize;
                (0..total)
                    .map(|mut code| {
                        let assign: Vec<usize> = (0..*k)
                            .map(|_| {
                                let c = code % k;
                                code /= k;
                                c
                            })
                            .collect();
                        Vertex {
                            point: assignment_point(&assign, *k),
                            structure: Some(StructuredLabel::RowAssignment(assign)),
                        }
                    })
                    .collect()
            }
            Polytope::Permutahedron(w) => {
                let mut seen: Vec<Vec<F>> = Vec::new();
                let mut out = Vec::new();
                for ranks in permutations(w.len()) {
                    let point: Vec<F> = ranks.iter().map(|&r| w[r]).collect();
                    if seen.contains(&point) {
                        continue;
                    }
                    seen.push(point.clone());
                    out.push(Vertex {
                        point,
                        structure: Some(StructuredLabel::Permutation(ranks)),
                    });
                }
                out
            }
            Polytope::OrderSimplex(k) => (0..*k)
                .map(|y| Vertex {
                    point: (0..k - 1)
                        .map(|i| if i < y { F::one() } else { F::zero() })
                        .collect(),
                    structure: Some(StructuredLabel::Ordinal(y)),
                })
                .collect(),
            Polytope::FullSpace(_) => unreachable!("vertex_count rejects the full space"),
        };
        Ok(out)
    }

    /// Smoothness constant β of the projection loss: 1 under the Euclidean
    /// geometry, sup_{u ∈ C} ‖u‖₁ under the Shannon geometry.
    pub fn smoothness_constant(&self, geometry: Geometry) -> Result<F> {
        self.validate()?;
        if geometry == Geometry::Euclidean {
            return Ok(F::one());
        }
        let beta = match self {
            Polytope::Simplex(_) => F::one(),
            Polytope::Cube(k) | Polytope::Birkhoff(k) | Polytope::RowStochastic(k) => {
                F::from_usize_lossy(*k)
            }
            Polytope::Knapsack { upper, .. } => F::from_usize_lossy(*upper),
            Polytope::Permutahedron(w) => w.iter().map(|x| x.abs()).sum(),
            Polytope::OrderSimplex(k) => F::from_usize_lossy(k.saturating_sub(1)),
            Polytope::FullSpace(_) => {
                return Err(Error::Unbounded("the ℓ1 radius of the full space is infinite".into()))
            }
        };
        Ok(beta)
    }

    /// Whether `u` satisfies every defining (in)equality within `tol`.
    pub fn contains(&self, u: &[F], tol: F) -> bool {
        if u.len() != self.ambient_dim() || u.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let in_box = |x: &F| *x >= -tol && *x <= F::one() + tol;
        match self {
            Polytope::Simplex(_) => u.iter().all(|&x| x >= -tol) && (sum(u) - F::one()).abs() <= tol,
            Polytope::Cube(_) => u.iter().all(in_box),
            Polytope::Knapsack { lower, upper, .. } => {
                let s = sum(u);
                u.iter().all(in_box)
                    && s >= F::from_usize_lossy(*lower) - tol
                    && s <= F::from_usize_lossy(*upper) + tol
            }
            Polytope::Birkhoff(k) => {
                u.iter().all(in_box) && max_row_violation(u, *k) <= tol && max_col_violation(u, *k) <= tol
            }
            Polytope::RowStochastic(k) => u.iter().all(in_box) && max_row_violation(u, *k) <= tol,
            Polytope::Permutahedron(w) => {
                // Majorization: partial sums of sorted u never exceed those of w.
                let mut sorted = u.to_vec();
                sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
                let mut su = F::zero();
                let mut sw = F::zero();
                for (a, b) in sorted.iter().zip(w) {
                    su += *a;
                    sw += *b;
                    if su > sw + tol {
                        return false;
                    }
                }
                (su - sw).abs() <= tol
            }
            Polytope::OrderSimplex(_) => {
                let Some(first) = u.first() else {
                    return true;
                };
                *first <= F::one() + tol
                    && u.windows(2).all(|p| p[0] >= p[1] - tol)
                    && *u.last().unwrap() >= -tol
            }
            Polytope::FullSpace(_) => true,
        }
    }

    /// Value of the linear objective at the LMO vertex, max over the set of ⟨u, v⟩.
    pub fn support(&self, v: &[F]) -> Result<F> {
        let vertex = self.lmo(v)?;
        Ok(dot(&vertex.point, v))
    }
}

pub(crate) fn max_row_violation<F: Scalar>(u: &[F], k: usize) -> F {
    (0..k).fold(F::zero(), |acc, i| acc.max((sum(&u[i * k..(i + 1) * k]) - F::one()).abs()))
}

pub(crate) fn max_col_violation<F: Scalar>(u: &[F], k: usize) -> F {
    (0..k).fold(F::zero(), |acc, j| {
        let s: F = (0..k).map(|i| u[i * k + j]).sum();
        acc.max((s - F::one()).abs())
    })
}

/// Index of the first maximal entry.
pub(crate) fn argmax_first<F: Scalar>(v: &[F]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Indices sorting `v` in descending order; equal entries keep index order.
pub(crate) fn argsort_desc<F: Scalar>(v: &[F]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap_or(Ordering::Equal));
    idx
}

fn indicator_vertex<F: Scalar>(k: usize, set: Vec<usize>) -> Vertex<F> {
    let mut point = vec![F::zero(); k];
    for &i in &set {
        point[i] = F::one();
    }
    Vertex {
        point,
        structure: Some(StructuredLabel::LabelSet(set)),
    }
}

fn assignment_point<F: Scalar>(cols: &[usize], k: usize) -> Vec<F> {
    let mut point = vec![F::zero(); k * k];
    for (i, &c) in cols.iter().enumerate() {
        point[i * k + c] = F::one();
    }
    point
}

fn subsets<F: Scalar>(k: usize, lower: usize, upper: usize) -> Vec<Vertex<F>> {
    (0u64..(1u64 << k))
        .filter(|mask| {
            let c = mask.count_ones() as usize;
            c >= lower && c <= upper
        })
        .map(|mask| {
            let set: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            indicator_vertex(k, set)
        })
        .collect()
}

/// All permutations of `0..k` in lexicographic order.
pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..k).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

fn factorial(k: usize) -> u128 {
    (1..=k as u128).try_fold(1u128, |acc, x| acc.checked_mul(x)).unwrap_or(u128::MAX)
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
