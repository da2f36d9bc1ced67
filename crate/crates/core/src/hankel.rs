//! Finite Hankel matrices and extended reachability/observability matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::markov::{BlockDims, SubMarkovOracle};
use crate::model::{InitialState, LpvSsa};
use crate::words::{self, Word};

pub use crate::linalg::numeric_rank;

/// Default ceiling on `car(n) * car(m)` blocks for command-line assembly.
pub const DEFAULT_MAX_BLOCKS: usize = 20_000;

/// The upper-left `car(n) x car(m)` block sub-matrix of the Hankel matrix.
///
/// Block `(i, j)` is `theta(s^(j) s^(i))`: the column word comes first in
/// the concatenation.
#[derive(Debug, Clone)]
pub struct HankelFinite {
    pub n: usize,
    pub m: usize,
    pub dims: BlockDims,
    pub matrix: DMatrix<f64>,
    pub row_words: Vec<Word>,
    pub col_words: Vec<Word>,
}

impl HankelFinite {
    /// `theta(s^(j) s^(i))` as stored in the matrix.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let (br, bc) = (self.dims.rows(), self.dims.cols());
        self.matrix.view((i * br, j * bc), (br, bc)).into_owned()
    }

    /// The leading `car(n') x car(m')` sub-Hankel matrix.
    pub fn truncate(&self, n: usize, m: usize) -> Result<HankelFinite> {
        if n > self.n || m > self.m {
            return Err(Error::OutOfRange {
                what: "Hankel bound",
                value: n.max(m),
                limit: self.n.min(self.m),
            });
        }
        let rows = words::car(self.dims.np, n);
        let cols = words::car(self.dims.np, m);
        Ok(HankelFinite {
            n,
            m,
            dims: self.dims,
            matrix: self
                .matrix
                .view((0, 0), (rows * self.dims.rows(), cols * self.dims.cols()))
                .into_owned(),
            row_words: self.row_words[..rows].to_vec(),
            col_words: self.col_words[..cols].to_vec(),
        })
    }
}

/// Number of blocks in `H(n, m)`, or `None` on overflow.
pub fn block_count(np: usize, n: usize, m: usize) -> Option<usize> {
    words::checked_car(np, n)?.checked_mul(words::checked_car(np, m)?)
}

/// Assembles `H(n, m)` from an oracle defined on all words of length
/// `<= n + m`.
pub fn build_hankel(oracle: &dyn SubMarkovOracle, n: usize, m: usize) -> Result<HankelFinite> {
    let dims = oracle.dims();
    let table = oracle.table(n + m)?;
    build_hankel_from_table(dims, &table, n, m)
}

/// Assembles `H(n, m)` from precomputed blocks in word order.
pub fn build_hankel_from_table(
    dims: BlockDims,
    table: &[DMatrix<f64>],
    n: usize,
    m: usize,
) -> Result<HankelFinite> {
    let need = words::checked_car(dims.np, n + m).ok_or(Error::OutOfRange {
        what: "word length",
        value: n + m,
        limit: 64,
    })?;
    if table.len() < need {
        return Err(Error::OutOfRange {
            what: "sub-Markov table length",
            value: table.len(),
            limit: need,
        });
    }
    let row_words = words::enumerate_up_to(dims.np, n);
    let col_words = words::enumerate_up_to(dims.np, m);
    let (br, bc) = (dims.rows(), dims.cols());
    let mut matrix = DMatrix::zeros(row_words.len() * br, col_words.len() * bc);
    for (i, rw) in row_words.iter().enumerate() {
        for (j, cw) in col_words.iter().enumerate() {
            let k = words::concat_ordinal(cw, rw).expect("ordinal bounded by table length");
            let blk = &table[k];
            if blk.shape() != (br, bc) {
                return Err(Error::dim(
                    format!("theta({})", words::word_at(k, dims.np, n + m)?),
                    format!("expected {br}x{bc}, got {}x{}", blk.nrows(), blk.ncols()),
                ));
            }
            matrix.view_mut((i * br, j * bc), (br, bc)).copy_from(blk);
        }
    }
    Ok(HankelFinite {
        n,
        m,
        dims,
        matrix,
        row_words,
        col_words,
    })
}

/// `R_0, ..., R_n` with `R_0 = [x0 | B_0 | ... | B_np]` and
/// `R_{k+1} = [R_k | A_0 R_k | ... | A_np R_k]`.
pub fn extended_reach(model: &LpvSsa, x0: &InitialState, n: usize) -> Result<Vec<DMatrix<f64>>> {
    model.check_state(x0)?;
    let nx = model.nx();
    let mut out = vec![model.reach_generators(x0)];
    for _ in 0..n {
        let last = out.last().expect("non-empty");
        let mut parts = vec![last.clone()];
        parts.extend(model.a().iter().map(|a| a * last));
        let refs: Vec<&DMatrix<f64>> = parts.iter().collect();
        out.push(linalg::hstack(&refs, nx));
    }
    Ok(out)
}

/// `O_0, ..., O_n` with `O_0 = [C_0; ...; C_np]` and
/// `O_{k+1} = [O_k; O_k A_0; ...; O_k A_np]`. Independent of any initial state.
pub fn extended_obs(model: &LpvSsa, n: usize) -> Vec<DMatrix<f64>> {
    let nx = model.nx();
    let mut out = vec![model.stacked_c()];
    for _ in 0..n {
        let last = out.last().expect("non-empty");
        let mut parts = vec![last.clone()];
        parts.extend(model.a().iter().map(|a| last * a));
        let refs: Vec<&DMatrix<f64>> = parts.iter().collect();
        out.push(linalg::vstack(&refs, nx));
    }
    out
}

/// Word labelling each `R_0`-sized column group of `R_n`, in storage order.
/// Group `A_k R` of the recursion appends `k` to the words of `R`.
pub fn reach_words(np: usize, n: usize) -> Vec<Word> {
    let mut out = vec![Word::empty(np)];
    for _ in 0..n {
        let prev = out.clone();
        for k in 0..=np {
            out.extend(prev.iter().map(|w| w.push(k).expect("symbol in alphabet")));
        }
    }
    out
}

/// Word labelling each `O_0`-sized row group of `O_n`, in storage order.
/// Group `O A_k` of the recursion prepends `k` to the words of `O`.
pub fn obs_words(np: usize, n: usize) -> Vec<Word> {
    let mut out = vec![Word::empty(np)];
    for _ in 0..n {
        let prev = out.clone();
        for k in 0..=np {
            out.extend(prev.iter().map(|w| w.prepend(k).expect("symbol in alphabet")));
        }
    }
    out
}

/// Relation between `H(n, m)` and the product `O_n R_m`.
///
/// `O_n R_m` repeats rows and columns (several recursion paths produce the
/// same word), so the relation is a pair of index maps rather than square
/// permutations: `row_map[k]` is the Hankel row reproduced by row `k` of the
/// product, and `row_select[i]` is the first product row mapped onto Hankel
/// row `i` (likewise for columns). `H = (O_n R_m)[row_select, col_select]`.
#[derive(Debug, Clone)]
pub struct HankelFactorization {
    pub row_map: Vec<usize>,
    pub col_map: Vec<usize>,
    pub row_select: Vec<usize>,
    pub col_select: Vec<usize>,
    /// Max-abs difference between every entry of `O_n R_m` and the Hankel
    /// entry it maps to.
    pub residual: f64,
}

pub fn hankel_vs_or(model: &LpvSsa, x0: &InitialState, n: usize, m: usize) -> Result<HankelFactorization> {
    let dims = BlockDims::of(model);
    let oracle = crate::markov::ModelOracle::new(model, x0);
    let h = build_hankel(&oracle, n, m)?;
    let o = extended_obs(model, n).pop().expect("non-empty");
    let r = extended_reach(model, x0, m)?.pop().expect("non-empty");
    let product = &o * &r;

    let (br, bc) = (dims.rows(), dims.cols());
    let mut row_map = Vec::with_capacity(product.nrows());
    for w in obs_words(dims.np, n) {
        let blk = words::index_of(&w, n)?;
        row_map.extend((0..br).map(|q| blk * br + q));
    }
    let mut col_map = Vec::with_capacity(product.ncols());
    for w in reach_words(dims.np, m) {
        let blk = words::index_of(&w, m)?;
        col_map.extend((0..bc).map(|q| blk * bc + q));
    }

    let first_hit = |map: &[usize], len: usize| -> Vec<usize> {
        let mut sel = vec![usize::MAX; len];
        for (k, &target) in map.iter().enumerate() {
            if sel[target] == usize::MAX {
                sel[target] = k;
            }
        }
        sel
    };
    let row_select = first_hit(&row_map, h.matrix.nrows());
    let col_select = first_hit(&col_map, h.matrix.ncols());

    let mut residual = 0.0_f64;
    for (k, &hr) in row_map.iter().enumerate() {
        for (l, &hc) in col_map.iter().enumerate() {
            residual = residual.max((product[(k, l)] - h.matrix[(hr, hc)]).abs());
        }
    }
    Ok(HankelFactorization {
        row_map,
        col_map,
        row_select,
        col_select,
        residual,
    })
}
