//! Sub-Markov parameters and word coefficients.
//!
//! For a model and initial state, the sub-Markov block of a word `s` is
//! `theta(s) = O_0 * A_s * [x0 | B_0 | ... | B_np]`, where `O_0` stacks
//! `C_0 .. C_np` and `A_s = A_{s_n} ... A_{s_1}` (the first symbol acts
//! first). Row block `i` of `theta(s)` reads `[eta_i(s) | theta_{i,0}(s) |
//! ... | theta_{i,np}(s)]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{sched_coeff, InitialState, LpvSsa};
use crate::signal::SampledSignal;
use crate::words::{self, Word};

/// Shape parameters of a sub-Markov block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockDims {
    pub np: usize,
    pub nu: usize,
    pub ny: usize,
}

impl BlockDims {
    pub fn of(model: &LpvSsa) -> Self {
        BlockDims {
            np: model.np(),
            nu: model.nu(),
            ny: model.ny(),
        }
    }

    /// `(np+1) * ny`
    pub fn rows(&self) -> usize {
        (self.np + 1) * self.ny
    }

    /// `nu * (np+1) + 1`
    pub fn cols(&self) -> usize {
        self.nu * (self.np + 1) + 1
    }
}

/// `theta(s)` together with its block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SubMarkovBlock {
    dims: BlockDims,
    data: DMatrix<f64>,
}

impl SubMarkovBlock {
    pub fn new(dims: BlockDims, data: DMatrix<f64>) -> Result<Self> {
        if data.shape() != (dims.rows(), dims.cols()) {
            return Err(Error::dim(
                "theta",
                format!(
                    "expected {}x{}, got {}x{}",
                    dims.rows(),
                    dims.cols(),
                    data.nrows(),
                    data.ncols()
                ),
            ));
        }
        Ok(SubMarkovBlock { dims, data })
    }

    pub fn dims(&self) -> BlockDims {
        self.dims
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// `eta_i(s)`, an `ny x 1` column.
    pub fn eta(&self, i: usize) -> DMatrix<f64> {
        let ny = self.dims.ny;
        self.data.view((i * ny, 0), (ny, 1)).into_owned()
    }

    /// `theta_{i,j}(s)`, an `ny x nu` block.
    pub fn theta(&self, i: usize, j: usize) -> DMatrix<f64> {
        let (ny, nu) = (self.dims.ny, self.dims.nu);
        self.data.view((i * ny, 1 + j * nu), (ny, nu)).into_owned()
    }
}

/// `A_s = A_{s_n} ... A_{s_1}`, with `A_eps = I`.
pub fn word_matrix(model: &LpvSsa, s: &Word) -> Result<DMatrix<f64>> {
    model.check_alphabet(s.np())?;
    let nx = model.nx();
    // symbols are consumed in order; each new factor multiplies on the left
    Ok(s
        .symbols()
        .iter()
        .fold(DMatrix::identity(nx, nx), |acc, &q| &model.a()[q] * acc))
}

/// `theta(s)` for a model from the initial state `x0`.
pub fn sub_markov(model: &LpvSsa, x0: &InitialState, s: &Word) -> Result<SubMarkovBlock> {
    model.check_state(x0)?;
    let a_s = word_matrix(model, s)?;
    let data = model.stacked_c() * a_s * model.reach_generators(x0);
    SubMarkovBlock::new(BlockDims::of(model), data)
}

/// `theta(s)` for every word with `|s| <= max_len`, in word order.
///
/// Uses `A_s R_0` of the prefix (the word minus its last symbol), which
/// always precedes the word in the ordering.
pub fn sub_markov_table(model: &LpvSsa, x0: &InitialState, max_len: usize) -> Result<Vec<DMatrix<f64>>> {
    model.check_state(x0)?;
    let count = words::checked_car(model.np(), max_len).ok_or(Error::OutOfRange {
        what: "word length",
        value: max_len,
        limit: 64,
    })?;
    let base = model.np() + 1;
    let o0 = model.stacked_c();
    let mut reach: Vec<DMatrix<f64>> = Vec::with_capacity(count);
    reach.push(model.reach_generators(x0));
    for k in 1..count {
        // for k >= 1 the prefix ordinal is (k - 1) / base and the last
        // symbol is (k - 1) % base
        let prefix = (k - 1) / base;
        let last = (k - 1) % base;
        let next = &model.a()[last] * &reach[prefix];
        reach.push(next);
    }
    Ok(reach.iter().map(|r| &o0 * r).collect())
}

/// Source of sub-Markov parameters, word by word.
pub trait SubMarkovOracle {
    fn dims(&self) -> BlockDims;

    fn theta(&self, s: &Word) -> Result<DMatrix<f64>>;

    /// All blocks for `|s| <= max_len`, in word order.
    fn table(&self, max_len: usize) -> Result<Vec<DMatrix<f64>>> {
        words::enumerate_up_to(self.dims().np, max_len)
            .iter()
            .map(|w| self.theta(w))
            .collect()
    }
}

/// The sub-Markov parameters of a model from a fixed initial state.
#[derive(Debug, Clone, Copy)]
pub struct ModelOracle<'a> {
    pub model: &'a LpvSsa,
    pub x0: &'a InitialState,
}

impl<'a> ModelOracle<'a> {
    pub fn new(model: &'a LpvSsa, x0: &'a InitialState) -> Self {
        ModelOracle { model, x0 }
    }
}

impl SubMarkovOracle for ModelOracle<'_> {
    fn dims(&self) -> BlockDims {
        BlockDims::of(self.model)
    }

    fn theta(&self, s: &Word) -> Result<DMatrix<f64>> {
        sub_markov(self.model, self.x0, s).map(SubMarkovBlock::into_matrix)
    }

    fn table(&self, max_len: usize) -> Result<Vec<DMatrix<f64>>> {
        sub_markov_table(self.model, self.x0, max_len)
    }
}

/// Constants of an exponential bound `||theta(s)||_F <= K R^|s|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub k: f64,
    pub r: f64,
}

impl GrowthBound {
    pub fn at(&self, len: usize) -> f64 {
        self.k * self.r.powi(len as i32)
    }
}

/// `K = sqrt(sum_i ||C_i||_F^2) * sqrt(||x0||^2 + sum_j ||B_j||_F^2)` and
/// `R = max_q ||A_q||_F`.
///
/// Follows from `||C_i A_s v|| <= ||C_i||_F ||A_s||_2 ||v||` and
/// `||A_s||_2 <= prod ||A_{s_k}||_F`.
pub fn growth_bound(model: &LpvSsa, x0: &InitialState) -> Result<GrowthBound> {
    model.check_state(x0)?;
    let c_sq: f64 = model.c().iter().map(|c| c.norm_squared()).sum();
    let g_sq: f64 = x0.0.norm_squared() + model.b().iter().map(|b| b.norm_squared()).sum::<f64>();
    let r = model.a().iter().map(|a| a.norm()).fold(0.0_f64, f64::max);
    Ok(GrowthBound {
        k: (c_sq * g_sq).sqrt(),
        r,
    })
}

/// Discrete-time word coefficient `(w_s <> p)(t, tau)`.
///
/// Equals `p_{s_1}(tau) p_{s_2}(tau+1) ... p_{s_n}(t)` when `|s| = t - tau + 1`
/// and zero otherwise. The empty word gives 1 exactly when `tau = t + 1`.
/// `p[k]` is the scheduling vector at time `k`; `p_0 = 1`.
pub fn w_dt(s: &Word, p: &[DVector<f64>], t: isize, tau: isize) -> Result<f64> {
    if t - tau + 1 != s.len() as isize {
        return Ok(0.0);
    }
    let mut prod = 1.0;
    for (k, &q) in s.symbols().iter().enumerate() {
        let time = tau + k as isize;
        if time < 0 || time as usize >= p.len() {
            return Err(Error::OutOfRange {
                what: "scheduling sample",
                value: time.max(0) as usize,
                limit: p.len(),
            });
        }
        let pk = &p[time as usize];
        if q > pk.len() {
            return Err(Error::Symbol { symbol: q, np: pk.len() });
        }
        prod *= sched_coeff(pk, q);
    }
    Ok(prod)
}

/// Uniform quadrature grid on `[a, b]` with spacing at most `step`.
pub(crate) fn quad_grid(a: f64, b: f64, step: f64) -> (usize, f64) {
    let len = b - a;
    if len <= 0.0 {
        return (0, 0.0);
    }
    let n = ((len / step).ceil() as usize).max(1);
    (n, len / n as f64)
}

/// Continuous-time word coefficient `(w_s <> p)(t, tau)`: the iterated
/// integral `int_tau^t p_{s_n}(d) (w_{s_1..s_{n-1}} <> p)(d, tau) dd`,
/// evaluated by nested composite trapezoid on a uniform grid of spacing at
/// most `step`, innermost symbol first.
pub fn w_ct(s: &Word, p: &SampledSignal, t: f64, tau: f64, step: f64) -> Result<f64> {
    if tau > t {
        return Err(Error::Interval { t, tau });
    }
    if !(step > 0.0) {
        return Err(Error::format("step", format!("must be positive, got {step}")));
    }
    if let Some(&q) = s.symbols().iter().find(|&&q| q > p.dim()) {
        return Err(Error::Symbol { symbol: q, np: p.dim() });
    }
    if s.is_empty() {
        return Ok(1.0);
    }
    let (n, h) = quad_grid(tau, t, step);
    if n == 0 {
        return Ok(0.0);
    }
    let samples: Vec<DVector<f64>> = (0..=n).map(|m| p.at(tau + m as f64 * h)).collect();
    let mut w = vec![1.0; n + 1];
    let mut next = vec![0.0; n + 1];
    for &q in s.symbols() {
        next[0] = 0.0;
        let mut prev_f = sched_coeff(&samples[0], q) * w[0];
        for m in 1..=n {
            let f = sched_coeff(&samples[m], q) * w[m];
            next[m] = next[m - 1] + 0.5 * h * (prev_f + f);
            prev_f = f;
        }
        std::mem::swap(&mut w, &mut next);
    }
    Ok(w[n])
}
