#![allow(dead_code)]

use lpvssa::hankel::{extended_obs, extended_reach};
use lpvssa::linalg::SortedSvd;
use lpvssa::{InitialState, LpvSsa, TimeDomain};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn gauss_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, bound: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-bound..=bound))
}

/// State matrices with Frobenius norm around 0.6, so word products stay O(1)
/// over the lengths used in tests.
fn state_scale(nx: usize) -> f64 {
    0.6 / (nx.max(1) as f64)
}

pub fn random_model(
    rng: &mut ChaCha8Rng,
    np: usize,
    nx: usize,
    nu: usize,
    ny: usize,
    td: TimeDomain,
) -> (LpvSsa, InitialState) {
    let a = (0..=np).map(|_| gauss(rng, nx, nx, state_scale(nx))).collect();
    let b = (0..=np).map(|_| gauss(rng, nx, nu, 1.0)).collect();
    let c = (0..=np).map(|_| gauss(rng, ny, nx, 1.0)).collect();
    let m = LpvSsa::new(a, b, c, td).unwrap();
    (m, InitialState(gauss_vec(rng, nx, 1.0)))
}

pub fn with_random_feedthrough(rng: &mut ChaCha8Rng, m: LpvSsa) -> LpvSsa {
    let d = (0..=m.np()).map(|_| gauss(rng, m.ny(), m.nu(), 1.0)).collect();
    m.with_feedthrough(d).unwrap()
}

fn sv_ratio(m: &DMatrix<f64>, k: usize) -> f64 {
    let s = SortedSvd::new(m).singular_values;
    if k == 0 {
        return 1.0;
    }
    if s.len() < k || s[0] == 0.0 {
        return 0.0;
    }
    s[k - 1] / s[0]
}

/// Ratio of the `nx`-th to the largest singular value of `R_{nx-1}` and of
/// `O_{nx-1}`, whichever is smaller. Zero for non-minimal models.
pub fn minimality_margin(m: &LpvSsa, x0: &InitialState) -> f64 {
    let nx = m.nx();
    let k = nx.saturating_sub(1);
    let r = extended_reach(m, x0, k).unwrap().pop().unwrap();
    let o = extended_obs(m, k).pop().unwrap();
    sv_ratio(&r, nx).min(sv_ratio(&o, nx))
}

/// A dense random model, redrawn until it is minimal with margin 1e-3 so
/// rank decisions at 1e-9 are unambiguous.
pub fn random_minimal(
    rng: &mut ChaCha8Rng,
    np: usize,
    nx: usize,
    nu: usize,
    ny: usize,
    td: TimeDomain,
) -> (LpvSsa, InitialState) {
    loop {
        let (m, x0) = random_model(rng, np, nx, nu, ny, td);
        if minimality_margin(&m, &x0) > 1e-3 {
            return (m, x0);
        }
    }
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian, sign-corrected).
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let qr = gauss(rng, n, n, 1.0).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random invertible matrix with condition number below about 10.
pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let u = random_orthogonal(rng, n);
    let v = random_orthogonal(rng, n);
    let s = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(0.5..=4.0)));
    u * s * v.transpose()
}

/// Block sizes of a model in Kalman form: reachable and observable,
/// reachable and unobservable, unreachable and observable, neither.
#[derive(Debug, Clone, Copy)]
pub struct KalmanSizes {
    pub ro: usize,
    pub r_unobs: usize,
    pub unreach_o: usize,
    pub neither: usize,
}

impl KalmanSizes {
    pub fn nx(&self) -> usize {
        self.ro + self.r_unobs + self.unreach_o + self.neither
    }
    pub fn r(&self) -> usize {
        self.ro + self.r_unobs
    }
}

/// A model whose Kalman block sizes are known: generated in canonical form
/// and then rotated by a random orthogonal change of coordinates. With
/// coordinates ordered (ro, r_unobs, unreach_o, neither) the matrices are
///
/// ```text
/// A = [A11  0   A13  0 ]   B = [B1]   C = [C1 0 C3 0]   x0 = [x1]
///     [A21 A22 A23 A24]       [B2]                          [x2]
///     [ 0   0  A33  0 ]       [0 ]                          [0 ]
///     [ 0   0  A43 A44]       [0 ]                          [0 ]
/// ```
///
/// The (ro) part is redrawn until minimal with margin 1e-3, and the
/// coupling blocks are generic, so the reachable space is exactly the first
/// two groups and the unobservable space exactly groups two and four.
pub fn kalman_structured(
    rng: &mut ChaCha8Rng,
    np: usize,
    sizes: KalmanSizes,
    nu: usize,
    ny: usize,
    td: TimeDomain,
) -> (LpvSsa, InitialState, DMatrix<f64>) {
    let n = [sizes.ro, sizes.r_unobs, sizes.unreach_o, sizes.neither];
    let off: Vec<usize> = n.iter().scan(0, |acc, &k| {
        let o = *acc;
        *acc += k;
        Some(o)
    })
    .collect();
    let nx = sizes.nx();
    let (core, core_x0) = random_minimal(rng, np, sizes.ro, nu, ny, td);
    let scale = state_scale(nx);
    let present = [
        (0, 0),
        (0, 2),
        (1, 0),
        (1, 1),
        (1, 2),
        (1, 3),
        (2, 2),
        (3, 2),
        (3, 3),
    ];
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    for i in 0..=np {
        let mut ai = DMatrix::zeros(nx, nx);
        for &(r, q) in &present {
            let blk = if (r, q) == (0, 0) {
                core.a()[i].clone()
            } else {
                gauss(rng, n[r], n[q], scale)
            };
            ai.view_mut((off[r], off[q]), (n[r], n[q])).copy_from(&blk);
        }
        let mut bi = DMatrix::zeros(nx, nu);
        bi.view_mut((0, 0), (n[0], nu)).copy_from(&core.b()[i]);
        bi.view_mut((off[1], 0), (n[1], nu)).copy_from(&gauss(rng, n[1], nu, 1.0));
        let mut ci = DMatrix::zeros(ny, nx);
        ci.view_mut((0, 0), (ny, n[0])).copy_from(&core.c()[i]);
        ci.view_mut((0, off[2]), (ny, n[2])).copy_from(&gauss(rng, ny, n[2], 1.0));
        a.push(ai);
        b.push(bi);
        c.push(ci);
    }
    let mut x0 = DVector::zeros(nx);
    x0.rows_mut(0, n[0]).copy_from(&core_x0.0);
    x0.rows_mut(off[1], n[1]).copy_from(&gauss_vec(rng, n[1], 1.0));

    let canonical = LpvSsa::new(a, b, c, td).unwrap();
    let q = random_orthogonal(rng, nx);
    let rotated = canonical.transform(&q, &q.transpose()).unwrap();
    (rotated, InitialState(&q * x0), q)
}

/// Random `(u, p)` of the given length with `|p_i| <= 1`.
pub fn random_dt_signals(
    rng: &mut ChaCha8Rng,
    np: usize,
    nu: usize,
    len: usize,
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let u = (0..len).map(|_| gauss_vec(rng, nu, 1.0)).collect();
    let p = (0..len).map(|_| uniform_vec(rng, np, 1.0)).collect();
    (u, p)
}

/// Independent `C_i A_{s_n} ... A_{s_1} v` by explicit loops, for checking
/// the library's sub-Markov parameters.
pub fn naive_theta(m: &LpvSsa, x0: &InitialState, symbols: &[usize]) -> DMatrix<f64> {
    let (np, nx, nu, ny) = (m.np(), m.nx(), m.nu(), m.ny());
    let apply = |v: &DVector<f64>| -> DVector<f64> {
        let mut v = v.clone();
        for &q in symbols {
            let mut next = DVector::zeros(nx);
            for r in 0..nx {
                for k in 0..nx {
                    next[r] += m.a()[q][(r, k)] * v[k];
                }
            }
            v = next;
        }
        v
    };
    let mut out = DMatrix::zeros((np + 1) * ny, nu * (np + 1) + 1);
    let mut cols = vec![x0.0.clone()];
    for j in 0..=np {
        for l in 0..nu {
            cols.push(m.b()[j].column(l).into_owned());
        }
    }
    for (col, v) in cols.iter().enumerate() {
        let w = apply(v);
        for i in 0..=np {
            for r in 0..ny {
                let mut acc = 0.0;
                for k in 0..nx {
                    acc += m.c()[i][(r, k)] * w[k];
                }
                out[(i * ny + r, col)] = acc;
            }
        }
    }
    out
}

/// Largest absolute difference between two output sequences.
pub fn max_output_gap(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).amax())
        .fold(0.0, f64::max)
}
