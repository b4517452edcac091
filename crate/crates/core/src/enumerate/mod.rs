//! Deciding whether the autodiff conservative gradient of a ReLU network at a
//! point is a singleton, and producing two distinct elements when it is not.
//!
//! With `D_i = Q̄_i + Q_i` (fixed part plus free zero-activation diagonal), the
//! set of elements is the image of the box `[0,1]^vars` under the multilinear
//! map `M_1ᵀ D_1 ... D_{L-1} M_Lᵀ`. Subtracting its value at `Q = 0` (the doubled
//! network below) and contracting with a free diagonal over the inputs gives a
//! scalar multilinear polynomial that vanishes identically iff the set is a
//! singleton. Its nonzero monomials are exactly the source to sink paths of a
//! layered graph whose edges are the nonzero entries of the partial products
//! `N_{i+1} Q̄_{i+1} ... Q̄_{j-1} N_j`.
//!
//! Extraction of a second element: fix every variable off the path to 0. The
//! restriction is a multilinear polynomial with a nonzero top monomial, so it is
//! nonzero at some vertex of the path's cube; small cubes are searched
//! directly, larger ones go through a seeded random evaluation followed by
//! vertex rounding (the polynomial is affine in each variable, so one of the two
//! endpoints keeps it nonzero).

use std::collections::{BTreeSet, VecDeque};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::relu_net::{Activation, ActivationPattern, RationalNetwork};
use crate::scalar::{rational_to_json, Rational};

/// Default cap on the number of path variables searched exhaustively.
pub const PATH_SEARCH_LIMIT: usize = 16;
/// Default seed of the randomized fallback.
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Largest number of zero activations [`brute_force_vertices`] accepts.
pub const BRUTE_FORCE_BUDGET: usize = 20;
const FALLBACK_TRIALS: usize = 1000;
const FALLBACK_DENOM_BITS: u32 = 16;

/// Sign split of the hidden coordinates at a point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    /// `fixed[i][j]`: coordinate `j` of hidden layer `i + 1` has `D = 1` for every
    /// choice (identity or strictly positive ReLU input).
    pub fixed: Vec<Vec<bool>>,
    /// Zero-input ReLU coordinates of each hidden layer (0-based).
    pub variables: Vec<Vec<usize>>,
    pub pattern: ActivationPattern,
}

impl Split {
    pub fn variable_count(&self) -> usize {
        self.variables.iter().map(Vec::len).sum()
    }
}

/// Exact forward pass at `x`, splitting every hidden coordinate into fixed-one,
/// fixed-zero (negative ReLU input) and variable.
pub fn split_activations(net: &RationalNetwork, x: &[Rational]) -> Result<Split> {
    let (_, pattern) = net.eval(x)?;
    let fixed = pattern
        .layers
        .iter()
        .map(|l| l.iter().map(|a| matches!(a, Activation::Identity | Activation::Pos)).collect())
        .collect();
    let variables = pattern
        .layers
        .iter()
        .map(|l| l.iter().enumerate().filter(|(_, a)| **a == Activation::Zero).map(|(j, _)| j).collect())
        .collect();
    Ok(Split { fixed, variables, pattern })
}

/// Node of the layered graph: `layer` runs from `-1` (source) to `L` (sink);
/// `index` is the input coordinate on layer 0 and the hidden coordinate on
/// layers `1..L-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PathNode {
    pub layer: isize,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct LayeredGraph {
    /// Node labels per layer, from the source layer to the sink layer.
    layers: Vec<Vec<PathNode>>,
    offsets: Vec<usize>,
    adj: Vec<Vec<usize>>,
    products: usize,
}

impl LayeredGraph {
    /// Builds the graph for `net` with the split computed at some point.
    pub fn build(net: &RationalNetwork, split: &Split) -> Result<Self> {
        if net.output_dim() != 1 {
            return Err(Error::Dimension(format!(
                "enumeration needs a scalar output, network has {}",
                net.output_dim()
            )));
        }
        let l = net.depth();
        let p = net.input_dim();
        let n = doubled_factors(net);
        // Q̄ on doubled coordinates; layer 0 has Q̄_0 = 0.
        let mut qbar: Vec<Vec<bool>> = vec![vec![false; p]];
        for f in &split.fixed {
            qbar.push(f.iter().chain(f.iter()).copied().collect());
        }
        // Variable coordinates (rows/columns of the partial products) per layer -1..=L.
        let mut coords: Vec<Vec<usize>> = vec![vec![0], (0..p).collect()];
        coords.extend(split.variables.iter().cloned());
        coords.push(vec![0]);

        let layers: Vec<Vec<PathNode>> = coords
            .iter()
            .enumerate()
            .map(|(a, cs)| cs.iter().map(|&index| PathNode { layer: a as isize - 1, index }).collect())
            .collect();
        let mut offsets = Vec::with_capacity(layers.len() + 1);
        let mut total = 0;
        for layer in &layers {
            offsets.push(total);
            total += layer.len();
        }
        offsets.push(total);
        let mut adj = vec![Vec::new(); total];
        let mut products = 0;

        // Layer `a` in 0..=L+1 stands for network layer a-1; factor N_k joins layers k and k+1.
        for a in 0..=l {
            if coords[a].is_empty() {
                continue;
            }
            let first = &n[a];
            let mut r = Matrix::from_fn(coords[a].len(), first.cols(), |i, j| first.get(coords[a][i], j).clone());
            for b in a + 1..=l + 1 {
                if b > a + 1 {
                    // R <- R Q̄_{b-1} N_{b-1}
                    let keep = &qbar[b - 2];
                    r = Matrix::from_fn(r.rows(), r.cols(), |i, j| {
                        if keep[j] {
                            r.get(i, j).clone()
                        } else {
                            Rational::zero()
                        }
                    });
                    r = r.matmul(&n[b - 1])?;
                    products += 2;
                }
                for (i, _) in coords[a].iter().enumerate() {
                    for (j, &cj) in coords[b].iter().enumerate() {
                        if !r.get(i, cj).is_zero() {
                            adj[offsets[a] + i].push(offsets[b] + j);
                        }
                    }
                }
                if r.is_zero_matrix() {
                    break;
                }
            }
        }
        Ok(LayeredGraph { layers, offsets, adj, products })
    }

    pub fn node_count(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Matrix products spent on the edges (diagonal maskings included).
    pub fn products(&self) -> usize {
        self.products
    }

    fn label(&self, id: usize) -> PathNode {
        let a = self.offsets.partition_point(|&o| o <= id) - 1;
        self.layers[a][id - self.offsets[a]]
    }

    /// Every edge as a pair of labels.
    pub fn edges(&self) -> Vec<(PathNode, PathNode)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
            .map(|(u, v)| (self.label(u), self.label(v)))
            .collect()
    }

    /// Shortest source to sink path found by breadth-first search.
    pub fn source_sink_path(&self) -> Option<Vec<PathNode>> {
        let sink = self.node_count() - 1;
        let mut parent = vec![usize::MAX; self.node_count()];
        parent[0] = 0;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            if u == sink {
                let mut path = vec![sink];
                let mut v = sink;
                while v != 0 {
                    v = parent[v];
                    path.push(v);
                }
                path.reverse();
                return Some(path.into_iter().map(|id| self.label(id)).collect());
            }
            for &v in &self.adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

/// Factors `N_0 .. N_L` of the doubled product: `N_0 = 1ᵀ`,
/// `N_1 = (M_1ᵀ, -M_1ᵀ)`, `N_i = diag(M_iᵀ, M_iᵀ)`, `N_L = (M_Lᵀ; M_Lᵀ)`.
fn doubled_factors(net: &RationalNetwork) -> Vec<Matrix<Rational>> {
    let l = net.depth();
    let p = net.input_dim();
    let t: Vec<Matrix<Rational>> = net.mats().iter().map(Matrix::transpose).collect();
    let mut n = vec![Matrix::from_fn(1, p, |_, _| Rational::one())];
    if l == 1 {
        // No hidden layer: the difference is identically zero.
        n.push(Matrix::zeros(p, 1));
        return n;
    }
    n.push(Matrix::hstack(&[t[0].clone(), t[0].neg()]).expect("equal row counts"));
    for ti in &t[1..l - 1] {
        n.push(Matrix::block_diag(&[ti.clone(), ti.clone()]));
    }
    n.push(Matrix::vstack(&[t[l - 1].clone(), t[l - 1].clone()]).expect("equal column counts"));
    n
}

/// Which extraction branch produced the second element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    PathVertices,
    Randomized,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::PathVertices => "path-vertices",
            Branch::Randomized => "randomized",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnumVerdict {
    Singleton {
        element: Vec<Rational>,
    },
    TwoElements {
        /// Element for all-zero choices.
        e1: Vec<Rational>,
        e2: Vec<Rational>,
        path: Vec<PathNode>,
        /// Choices (indexed by the zero-activation order) reproducing `e2`.
        choices: Vec<Rational>,
        branch: Branch,
        seed: Option<u64>,
    },
}

impl EnumVerdict {
    pub fn is_singleton(&self) -> bool {
        matches!(self, EnumVerdict::Singleton { .. })
    }

    pub fn to_json(&self) -> Value {
        let vec = |v: &[Rational]| Value::Array(v.iter().map(rational_to_json).collect());
        match self {
            EnumVerdict::Singleton { element } => json!({ "singleton": true, "e1": vec(element) }),
            EnumVerdict::TwoElements { e1, e2, path, choices, branch, seed } => {
                let mut v = json!({
                    "singleton": false,
                    "e1": vec(e1),
                    "e2": vec(e2),
                    "path": path.iter().map(|n| json!([n.layer, n.index])).collect::<Vec<_>>(),
                    "choices": vec(choices),
                    "branch": branch.name(),
                });
                if let Some(s) = seed {
                    v["seed"] = json!(s);
                }
                v
            }
        }
    }
}

/// Options of [`decide_singleton_with`].
#[derive(Clone, Copy, Debug)]
pub struct DecideOptions {
    /// Paths with more hidden variables than this skip the exhaustive search.
    pub path_search_limit: usize,
    pub seed: u64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions { path_search_limit: PATH_SEARCH_LIMIT, seed: DEFAULT_SEED }
    }
}

pub fn decide_singleton(net: &RationalNetwork, x: &[Rational]) -> Result<EnumVerdict> {
    decide_singleton_with(net, x, DecideOptions::default())
}

pub fn decide_singleton_with(net: &RationalNetwork, x: &[Rational], opts: DecideOptions) -> Result<EnumVerdict> {
    let split = split_activations(net, x)?;
    let graph = LayeredGraph::build(net, &split)?;
    let nvars = split.variable_count();
    let e1 = net.autodiff_element_for(&split.pattern, &vec![Rational::zero(); nvars])?;
    let Some(path) = graph.source_sink_path() else {
        return Ok(EnumVerdict::Singleton { element: e1 });
    };

    // Positions of the path's hidden variables in the choice vector.
    let order = split.pattern.zero_coords();
    let l = net.depth() as isize;
    let slots: Vec<usize> = path
        .iter()
        .filter(|n| n.layer >= 1 && n.layer < l)
        .map(|n| {
            order
                .iter()
                .position(|&(layer, j)| layer as isize == n.layer && j == n.index)
                .expect("path nodes are zero activations")
        })
        .collect();
    let element = |choices: &[Rational]| net.autodiff_element_for(&split.pattern, choices);
    let mut choices = vec![Rational::zero(); nvars];

    if slots.len() <= opts.path_search_limit {
        let full = (1u64 << slots.len()) - 1;
        for mask in (1..=full).rev() {
            for (b, &s) in slots.iter().enumerate() {
                choices[s] = if mask >> b & 1 == 1 { Rational::one() } else { Rational::zero() };
            }
            let e2 = element(&choices)?;
            if e2 != e1 {
                return Ok(EnumVerdict::TwoElements {
                    e1,
                    e2,
                    path,
                    choices,
                    branch: Branch::PathVertices,
                    seed: None,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let denom = Rational::from_integer((1u64 << FALLBACK_DENOM_BITS).into());
    for _ in 0..FALLBACK_TRIALS {
        for &s in &slots {
            let k: u64 = rng.gen_range(0..=1u64 << FALLBACK_DENOM_BITS);
            choices[s] = Rational::from_integer(k.into()) / denom.clone();
        }
        if element(&choices)? == e1 {
            continue;
        }
        // Round to a vertex, one variable at a time.
        for &s in &slots {
            let keep = choices[s].clone();
            choices[s] = Rational::zero();
            if element(&choices)? == e1 {
                choices[s] = Rational::one();
                if element(&choices)? == e1 {
                    choices[s] = keep;
                }
            }
        }
        let e2 = element(&choices)?;
        debug_assert!(e2 != e1);
        return Ok(EnumVerdict::TwoElements {
            e1,
            e2,
            path,
            choices,
            branch: Branch::Randomized,
            seed: Some(opts.seed),
        });
    }
    Err(Error::SearchExhausted(FALLBACK_TRIALS))
}

/// All elements at vertices of the choice cube, deduplicated and sorted.
/// By multilinearity these span the whole set as a convex hull.
pub fn brute_force_vertices(net: &RationalNetwork, x: &[Rational]) -> Result<Vec<Vec<Rational>>> {
    let (_, pattern) = net.eval(x)?;
    let k = pattern.zero_count();
    if k > BRUTE_FORCE_BUDGET {
        return Err(Error::BudgetExceeded { needed: k, budget: BRUTE_FORCE_BUDGET });
    }
    let mut out = BTreeSet::new();
    let mut choices = vec![Rational::zero(); k];
    for mask in 0u64..1 << k {
        for (b, c) in choices.iter_mut().enumerate() {
            *c = if mask >> b & 1 == 1 { Rational::one() } else { Rational::zero() };
        }
        out.insert(net.autodiff_element_for(&pattern, &choices)?);
    }
    Ok(out.into_iter().collect())
}
