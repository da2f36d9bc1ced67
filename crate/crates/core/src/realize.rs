//! Ho-Kalman realization from Hankel data, partial-realization checks and
//! recovery of the state isomorphism between minimal realizations.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hankel::{self, HankelFinite};
use crate::linalg::{self, max_abs, SortedSvd};
use crate::markov::{sub_markov_table, SubMarkovOracle};
use crate::model::{InitialState, LpvSsa, TimeDomain};
use crate::words;

/// Default tolerance on isomorphism residuals.
pub const DEFAULT_ISO_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct HoKalman {
    pub model: LpvSsa,
    pub x0: InitialState,
    /// Rank of `H(n, n+1)` at the tolerance; the recovered state dimension.
    pub rank: usize,
    /// Rank of the leading `H(n, n)`.
    pub rank_square: usize,
    pub singular_values: Vec<f64>,
}

impl HoKalman {
    /// `H(n, n)` and `H(n, n+1)` disagree on rank at the tolerance.
    pub fn rank_mismatch(&self) -> bool {
        self.rank != self.rank_square
    }
}

/// Realization from `H(n, n+1)`.
///
/// With the rank-`r` truncated SVD `H = U S V^T`, `O = U S^1/2` and
/// `R = S^1/2 V^T`: `[x0 | B_0 | ... | B_np]` is the first block column of
/// `R`, `[C_0; ...; C_np]` the first block row of `O`, and
/// `A_i = R~_i pinv(R-)`, where `R-` holds the block columns of `R` for all
/// words of length `<= n` and `R~_i` the block columns for the same words
/// with `i` appended.
pub fn ho_kalman(h: &HankelFinite, rel_tol: f64, time_domain: TimeDomain) -> Result<HoKalman> {
    if h.m != h.n + 1 {
        return Err(Error::HankelShape { n: h.n, m: h.m });
    }
    let dims = h.dims;
    let (np, nu, ny) = (dims.np, dims.nu, dims.ny);
    let bc = dims.cols();

    let svd = SortedSvd::new(&h.matrix);
    let rank = svd.rank(rel_tol);
    let singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    let n_cols_square = words::car(np, h.n) * bc;
    let rank_square = linalg::numeric_rank(&h.matrix.columns(0, n_cols_square).into_owned(), rel_tol).0;

    if rank == 0 {
        return Ok(HoKalman {
            model: LpvSsa::empty(np, nu, ny, time_domain),
            x0: InitialState::zeros(0),
            rank,
            rank_square,
            singular_values,
        });
    }

    let sqrt_s = DMatrix::from_diagonal(&svd.singular_values.rows(0, rank).map(f64::sqrt));
    let obs = svd.u.columns(0, rank) * &sqrt_s;
    let reach = &sqrt_s * svd.v_t.rows(0, rank);

    let x0 = InitialState(reach.column(0).into_owned());
    let b: Vec<DMatrix<f64>> = (0..=np)
        .map(|j| reach.columns(1 + j * nu, nu).into_owned())
        .collect();
    let c: Vec<DMatrix<f64>> = (0..=np).map(|i| obs.rows(i * ny, ny).into_owned()).collect();

    let base_words = words::enumerate_up_to(np, h.n);
    let reach_bar = reach.columns(0, base_words.len() * bc).into_owned();
    let reach_bar_pinv = linalg::pinv(&reach_bar, rel_tol);
    let mut a = Vec::with_capacity(np + 1);
    for i in 0..=np {
        let mut shifted = DMatrix::zeros(rank, base_words.len() * bc);
        for (k, w) in base_words.iter().enumerate() {
            let target = words::index_of(&w.push(i)?, h.m)?;
            shifted
                .columns_mut(k * bc, bc)
                .copy_from(&reach.columns(target * bc, bc));
        }
        a.push(shifted * &reach_bar_pinv);
    }

    let model = LpvSsa::new(a, b, c, time_domain)?;
    Ok(HoKalman {
        model,
        x0,
        rank,
        rank_square,
        singular_values,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialRealizationReport {
    pub bound: usize,
    pub max_deviation: f64,
    /// Word with the largest deviation.
    pub worst_word: String,
    pub pass: bool,
}

/// Largest deviation between the model's sub-Markov parameters and the
/// oracle over all words of length `<= n`.
pub fn partial_realization_check(
    model: &LpvSsa,
    x0: &InitialState,
    oracle: &dyn SubMarkovOracle,
    n: usize,
    tol: f64,
) -> Result<PartialRealizationReport> {
    let dims = oracle.dims();
    model.check_alphabet(dims.np)?;
    if dims.nu != model.nu() || dims.ny != model.ny() {
        return Err(Error::dim(
            "oracle",
            format!(
                "block dimensions (nu={}, ny={}) differ from the model (nu={}, ny={})",
                dims.nu,
                dims.ny,
                model.nu(),
                model.ny()
            ),
        ));
    }
    let ours = sub_markov_table(model, x0, n)?;
    let theirs = oracle.table(n)?;
    let mut max_deviation = 0.0_f64;
    let mut worst = 0usize;
    for (k, (a, b)) in ours.iter().zip(theirs.iter()).enumerate() {
        if a.shape() != b.shape() {
            return Err(Error::dim(
                format!("theta({})", words::word_at(k, dims.np, n)?),
                "block shape mismatch",
            ));
        }
        let dev = max_abs(&(a - b));
        if dev > max_deviation || dev.is_nan() {
            max_deviation = dev;
            worst = k;
        }
    }
    Ok(PartialRealizationReport {
        bound: n,
        max_deviation,
        worst_word: words::word_at(worst, dims.np, n)?.to_string(),
        pass: max_deviation <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankStabilization {
    /// rank `H(n, n)`
    pub rank_nn: usize,
    /// rank `H(n+1, n)`
    pub rank_n1n: usize,
    /// rank `H(n, n+1)`
    pub rank_nn1: usize,
    pub stabilized: bool,
}

/// Ranks of `H(n,n)`, `H(n+1,n)` and `H(n,n+1)`, and whether they agree.
pub fn rank_stabilization(oracle: &dyn SubMarkovOracle, n: usize, rel_tol: f64) -> Result<RankStabilization> {
    let dims = oracle.dims();
    let table = oracle.table(2 * n + 1)?;
    let rank = |rows: usize, cols: usize| -> Result<usize> {
        let h = hankel::build_hankel_from_table(dims, &table, rows, cols)?;
        Ok(linalg::numeric_rank(&h.matrix, rel_tol).0)
    };
    let rank_nn = rank(n, n)?;
    let rank_n1n = rank(n + 1, n)?;
    let rank_nn1 = rank(n, n + 1)?;
    Ok(RankStabilization {
        rank_nn,
        rank_n1n,
        rank_nn1,
        stabilized: rank_nn == rank_n1n && rank_nn == rank_nn1,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IsoResiduals {
    /// max |A'_i T - T A_i|
    pub a: f64,
    /// max |B'_i - T B_i|
    pub b: f64,
    /// max |C'_i T - C_i|
    pub c: f64,
    /// max |D'_i - D_i|; reported only, since realization ignores `D`
    pub d: f64,
    /// max |T x0 - x0'|
    pub x0: f64,
}

impl IsoResiduals {
    pub fn max(&self) -> f64 {
        self.a.max(self.b).max(self.c).max(self.x0)
    }
}

#[derive(Debug, Clone)]
pub struct Isomorphism {
    pub t: DMatrix<f64>,
    pub residuals: IsoResiduals,
    /// 2-norm condition number of `T` (infinite when singular).
    pub condition: f64,
    pub success: bool,
}

/// Residuals of `A2 T = T A1`, `B2 = T B1`, `C2 T = C1`, `T x1 = x2`.
pub fn iso_residuals(
    m1: &LpvSsa,
    x1: &InitialState,
    m2: &LpvSsa,
    x2: &InitialState,
    t: &DMatrix<f64>,
) -> IsoResiduals {
    let fold = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0_f64, f64::max);
    IsoResiduals {
        a: fold(&mut m1.a().iter().zip(m2.a()).map(|(a1, a2)| max_abs(&(a2 * t - t * a1)))),
        b: fold(&mut m1.b().iter().zip(m2.b()).map(|(b1, b2)| max_abs(&(b2 - t * b1)))),
        c: fold(&mut m1.c().iter().zip(m2.c()).map(|(c1, c2)| max_abs(&(c2 * t - c1)))),
        d: fold(&mut m1.d().iter().zip(m2.d()).map(|(d1, d2)| max_abs(&(d2 - d1)))),
        x0: (t * &x1.0 - &x2.0).amax(),
    }
}

/// Recovers `T` with `T R_k(Sigma1, x1) = R_k(Sigma2, x2)`, using the
/// smallest `k <= nx - 1` at which `R_k` of the first model has full rank
/// (the image stops growing there, so `T` is the same as for `k = nx - 1`).
pub fn find_isomorphism(
    m1: &LpvSsa,
    x1: &InitialState,
    m2: &LpvSsa,
    x2: &InitialState,
    tol: f64,
    rel_tol: f64,
) -> Result<Isomorphism> {
    m1.check_state(x1)?;
    m2.check_state(x2)?;
    if (m1.np(), m1.nx(), m1.nu(), m1.ny()) != (m2.np(), m2.nx(), m2.nu(), m2.ny()) {
        return Err(Error::dim(
            "models",
            format!(
                "dimensions differ: (np,nx,nu,ny) = ({},{},{},{}) vs ({},{},{},{})",
                m1.np(),
                m1.nx(),
                m1.nu(),
                m1.ny(),
                m2.np(),
                m2.nx(),
                m2.nu(),
                m2.ny()
            ),
        ));
    }
    let nx = m1.nx();
    if nx == 0 {
        return Ok(Isomorphism {
            t: DMatrix::zeros(0, 0),
            residuals: IsoResiduals::default(),
            condition: 1.0,
            success: true,
        });
    }

    let mut r1 = m1.reach_generators(x1);
    let mut r2 = m2.reach_generators(x2);
    for _ in 0..nx.saturating_sub(1) {
        if linalg::numeric_rank(&r1, rel_tol).0 == nx {
            break;
        }
        r1 = grow(m1, &r1);
        r2 = grow(m2, &r2);
    }
    let t = &r2 * linalg::pinv(&r1, rel_tol);

    let (rank, s) = linalg::numeric_rank(&t, rel_tol);
    let condition = if rank == nx && s[nx - 1] > 0.0 {
        s[0] / s[nx - 1]
    } else {
        f64::INFINITY
    };
    let residuals = iso_residuals(m1, x1, m2, x2, &t);
    let success = condition.is_finite() && residuals.max() <= tol;
    Ok(Isomorphism {
        t,
        residuals,
        condition,
        success,
    })
}

fn grow(model: &LpvSsa, r: &DMatrix<f64>) -> DMatrix<f64> {
    let mut parts = vec![r.clone()];
    parts.extend(model.a().iter().map(|a| a * r));
    let refs: Vec<&DMatrix<f64>> = parts.iter().collect();
    linalg::hstack(&refs, model.nx())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hankel::build_hankel;
    use crate::linalg::DEFAULT_REL_TOL;
    use crate::markov::ModelOracle;

    fn model() -> (LpvSsa, InitialState) {
        let m2 = |v: [f64; 4]| DMatrix::from_row_slice(2, 2, &v);
        let a = vec![m2([0.5, 0.1, -0.2, 0.3]), m2([0.0, 0.4, 0.1, -0.1])];
        let b = vec![
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 0.5]),
        ];
        let c = vec![
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 2.0]),
        ];
        (
            LpvSsa::new(a, b, c, TimeDomain::Discrete).unwrap(),
            InitialState::from_slice(&[1.0, -1.0]),
        )
    }

    #[test]
    fn rejects_wrong_shape() {
        let (m, x0) = model();
        let h = build_hankel(&ModelOracle::new(&m, &x0), 2, 2).unwrap();
        assert!(matches!(
            ho_kalman(&h, DEFAULT_REL_TOL, TimeDomain::Discrete),
            Err(Error::HankelShape { n: 2, m: 2 })
        ));
    }

    #[test]
    fn zero_function_gives_empty_model() {
        let (m, _) = model();
        let x0 = InitialState::zeros(2);
        let mut parts = m.into_parts();
        parts.b = vec![DMatrix::zeros(2, 1); 2];
        let m = LpvSsa::from_parts(parts).unwrap();
        let h = build_hankel(&ModelOracle::new(&m, &x0), 1, 2).unwrap();
        let hk = ho_kalman(&h, DEFAULT_REL_TOL, TimeDomain::Discrete).unwrap();
        assert_eq!(hk.model.nx(), 0);
        assert_eq!(hk.rank, 0);
    }

    #[test]
    fn recovers_reference_model() {
        let (m, x0) = model();
        let oracle = ModelOracle::new(&m, &x0);
        let h = build_hankel(&oracle, 2, 3).unwrap();
        let hk = ho_kalman(&h, DEFAULT_REL_TOL, TimeDomain::Discrete).unwrap();
        assert_eq!(hk.model.nx(), 2);
        assert!(!hk.rank_mismatch());
        let rep = partial_realization_check(&hk.model, &hk.x0, &oracle, 5, 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
        let iso = find_isomorphism(&m, &x0, &hk.model, &hk.x0, 1e-8, DEFAULT_REL_TOL).unwrap();
        assert!(iso.success, "{:?}", iso.residuals);
    }

    #[test]
    fn deterministic_output() {
        let (m, x0) = model();
        let h = build_hankel(&ModelOracle::new(&m, &x0), 2, 3).unwrap();
        let a = ho_kalman(&h, DEFAULT_REL_TOL, TimeDomain::Discrete).unwrap();
        let b = ho_kalman(&h, DEFAULT_REL_TOL, TimeDomain::Discrete).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.x0, b.x0);
    }

    #[test]
    fn identity_isomorphism() {
        let (m, x0) = model();
        let iso = find_isomorphism(&m, &x0, &m, &x0, 1e-10, DEFAULT_REL_TOL).unwrap();
        assert!(iso.success);
        assert!(max_abs(&(iso.t - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn self_check_is_exact() {
        let (m, x0) = model();
        let rep = partial_realization_check(&m, &x0, &ModelOracle::new(&m, &x0), 4, 0.0).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        assert!(rep.pass);
    }
}
