//! Constructions behind the hardness results: the `{-1, 0, 1}` max network,
//! the 3-SAT encoder, the sign-vector sweep deciding whether the Clarke
//! subdifferential of an encoded network at the origin is `{0}`, and the
//! directional-derivative instances.

mod cnf;
pub mod directional;

use std::sync::atomic::{AtomicUsize, Ordering};

use num_traits::{One, Zero};

pub use cnf::{CnfFormula, Literal};
pub use directional::{
    directional_check, directional_values, hadamard, program_pf, DirectionReport, DirectionalInstance,
    DirectionalReport,
};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::relu_net::{RationalNetwork, ReluNetwork};
use crate::scalar::{int, Rational, Scalar};

/// Largest input dimension the sign sweep accepts.
pub const SWEEP_BUDGET: usize = 20;

fn max2_layer() -> Matrix<Rational> {
    Matrix::from_rows(vec![vec![int(1), int(-1)], vec![int(0), int(1)], vec![int(0), int(-1)]]).expect("3x2")
}

fn max2_readout() -> Matrix<Rational> {
    Matrix::row_vector(vec![int(1), int(1), int(-1)])
}

/// Network computing the maximum of `2^k` inputs with `k` ReLU layers of width
/// at most `3 * 2^(k-1)` and weights in `{-1, 0, 1}`.
///
/// Built recursively from `max(a, b) = ReLU(a - b) + ReLU(b) - ReLU(-b)`: two
/// copies of the level-`k` network side by side, with the `3x2` layer folded into
/// their last matrix.
pub fn max_net(k: usize) -> Result<RationalNetwork> {
    if k == 0 {
        return Err(Error::Dimension("max_net needs k >= 1".into()));
    }
    let mut mats = vec![max2_layer(), max2_readout()];
    for _ in 1..k {
        let last = mats.pop().expect("nonempty");
        let mut next: Vec<Matrix<Rational>> = mats.iter().map(|m| Matrix::block_diag(&[m.clone(), m.clone()])).collect();
        next.push(max2_layer().matmul(&Matrix::block_diag(&[last.clone(), last]))?);
        next.push(max2_readout());
        mats = next;
    }
    let masks = mats[..mats.len() - 1].iter().map(|m| vec![true; m.rows()]).collect();
    ReluNetwork::new(mats, masks)
}

/// Always-true clause used to pad the clause count to a power of two.
fn padding_clause() -> [Literal; 3] {
    [Literal::pos(1), Literal::neg(1), Literal::pos(1)]
}

/// Network `F(x) = min_c ReLU(max(l_c1, l_c2, l_c3))`, where a literal is `x_v`
/// or `-x_v`. The formula is satisfiable iff `F(s) > 0` for some `s` in
/// `{-1, 1}^p`.
///
/// Layers: an identity layer listing four literals per clause (the third is
/// repeated), two ReLU layers of max-of-4 blocks, the outer ReLU, then the min
/// over the padded clause count `n̂ = 2^k` as `-max(-·)` with `k` ReLU layers.
/// All weights are in `{-1, 0, 1}`, the ReLU depth is `k + 3`, and widths are at
/// most `6 n̂`.
pub fn encode_3sat(cnf: &CnfFormula) -> Result<RationalNetwork> {
    let p = cnf.p();
    if p == 0 {
        return Err(Error::Dimension("formula without variables".into()));
    }
    let mut clauses = cnf.clauses().to_vec();
    if clauses.is_empty() {
        return Err(Error::Dimension("formula without clauses".into()));
    }
    let nhat = clauses.len().next_power_of_two();
    clauses.resize(nhat, padding_clause());
    let k = nhat.trailing_zeros() as usize;

    // Literal layer, 4 rows per clause, identity activations.
    let lit = Matrix::from_fn(4 * nhat, p, |r, c| {
        let l = clauses[r / 4][(r % 4).min(2)];
        match (l.var - 1 == c, l.negated) {
            (false, _) => Rational::zero(),
            (true, false) => Rational::one(),
            (true, true) => -Rational::one(),
        }
    });
    let max4 = max_net(2)?;
    let block = |m: &Matrix<Rational>| Matrix::block_diag(&vec![m.clone(); nhat]);
    let mut mats = vec![lit, block(&max4.mats()[0]), block(&max4.mats()[1]), block(&max4.mats()[2])];
    let mut masks = vec![vec![false; 4 * nhat], vec![true; 6 * nhat], vec![true; 3 * nhat], vec![true; nhat]];
    if k == 0 {
        mats.push(Matrix::row_vector(vec![Rational::one()]));
    } else {
        let outer = max_net(k)?;
        let n = outer.mats();
        for (i, m) in n.iter().enumerate() {
            let m = if i == 0 || i == n.len() - 1 { m.neg() } else { m.clone() };
            if i + 1 < n.len() {
                masks.push(vec![true; m.rows()]);
            }
            mats.push(m);
        }
    }
    ReluNetwork::new(mats, masks)
}

/// `s ∈ {-1, 1}^p` for sweep index `idx`: bit `j` set means `s_{j+1} = 1`.
pub fn sign_vector(idx: usize, p: usize) -> Vec<i8> {
    (0..p).map(|j| if idx >> j & 1 == 1 { 1 } else { -1 }).collect()
}

/// `true` when evaluating `net` in `f64` on `{-1, 1}^p` is exact: weights are
/// integers and every intermediate magnitude stays below `2^53`.
fn f64_sweep_is_exact(net: &RationalNetwork) -> bool {
    if net.mats().iter().flat_map(|m| m.entries()).any(|v| !v.is_integer()) {
        return false;
    }
    let mut bound = 1.0f64;
    for m in net.mats() {
        bound *= m.max_row_abs_sum().as_f64().max(1.0);
    }
    // Accumulated sums are bounded by the same row-sum product.
    bound < 9.0e15
}

/// Lowest-index sign vector `s` with `F(s) > 0`, sweeping `{-1, 1}^p` on `jobs`
/// threads. The result does not depend on `jobs`.
pub fn positive_sign_vector(net: &RationalNetwork, jobs: usize) -> Result<Option<Vec<i8>>> {
    let p = net.input_dim();
    if p > SWEEP_BUDGET {
        return Err(Error::BudgetExceeded { needed: p, budget: SWEEP_BUDGET });
    }
    if net.output_dim() != 1 {
        return Err(Error::MultiOutput(net.output_dim()));
    }
    let total = 1usize << p;
    let jobs = jobs.clamp(1, total);
    let best = AtomicUsize::new(usize::MAX);
    let fast = f64_sweep_is_exact(net);
    let fnet = net.to_f64();
    let positive = |idx: usize| -> Result<bool> {
        let s = sign_vector(idx, p);
        if fast {
            let x: Vec<f64> = s.iter().map(|&v| v as f64).collect();
            Ok(fnet.value(&x)?[0] > 0.0)
        } else {
            let x: Vec<Rational> = s.iter().map(|&v| int(v as i64)).collect();
            Ok(net.value(&x)?[0].gt_zero())
        }
    };
    let chunk = total.div_ceil(jobs);
    std::thread::scope(|scope| -> Result<()> {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let (best, positive) = (&best, &positive);
                scope.spawn(move || -> Result<()> {
                    for idx in w * chunk..((w + 1) * chunk).min(total) {
                        if idx > best.load(Ordering::Relaxed) {
                            break;
                        }
                        if positive(idx)? {
                            best.fetch_min(idx, Ordering::Relaxed);
                            break;
                        }
                    }
                    Ok(())
                })
            })
            .collect();
        for h in handles {
            h.join().expect("sweep worker panicked")?;
        }
        Ok(())
    })?;
    let idx = best.into_inner();
    Ok((idx != usize::MAX).then(|| sign_vector(idx, p)))
}

/// For a network produced by [`encode_3sat`]: `true` iff its Clarke
/// subdifferential at the origin is `{0}`, i.e. `F` vanishes on `{-1, 1}^p`.
/// The reduction to sign vectors relies on the encoder's structure.
pub fn clarke_singleton_at_zero(net: &RationalNetwork, jobs: usize) -> Result<bool> {
    Ok(positive_sign_vector(net, jobs)?.is_none())
}
