//! Reachability and observability reduction, minimization, Kalman
//! decomposition and the rank test for minimality.
//!
//! `Im R_{nx-1}` is the smallest subspace containing `x0` and every
//! `Im B_i` that is invariant under all `A_i`; `Ker O_{nx-1}` is the largest
//! `A_i`-invariant subspace inside every `Ker C_i`. Both are computed by
//! growing an orthonormal basis until it stops growing, which reaches the
//! same subspace as the explicit matrices after at most `nx` rounds without
//! materialising their `(np+2)^(nx-1)` column groups.

use nalgebra::DMatrix;

use crate::linalg::{self, max_abs, SortedSvd};
use crate::model::{InitialState, LpvSsa};

/// Orthonormal bases of a subspace and of its orthogonal complement.
#[derive(Debug, Clone)]
pub struct SubspaceSplit {
    pub basis: DMatrix<f64>,
    pub complement: DMatrix<f64>,
}

impl SubspaceSplit {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `[basis | complement]`, an orthogonal matrix.
    pub fn full(&self) -> DMatrix<f64> {
        linalg::hstack(&[&self.basis, &self.complement], self.basis.nrows())
    }
}

/// Smallest subspace containing `Im generators` and invariant under `maps`.
///
/// Generator directions count when their singular value exceeds
/// `rel_tol * max(sigma_max, floor)`; `floor` carries the scale of a model
/// this one was projected from, so projection noise is not mistaken for a
/// direction.
fn invariant_closure(generators: &DMatrix<f64>, maps: &[DMatrix<f64>], rel_tol: f64, floor: f64) -> SubspaceSplit {
    let n = generators.nrows();
    let sigma_max = SortedSvd::new(generators).singular_values.iter().copied().fold(0.0, f64::max);
    let (mut basis, mut complement) = linalg::range_and_complement_abs(generators, rel_tol * sigma_max.max(floor));
    for _ in 0..n {
        if basis.ncols() == 0 || basis.ncols() == n {
            break;
        }
        let mut parts = vec![basis.clone()];
        parts.extend(maps.iter().map(|a| a * &basis));
        let refs: Vec<&DMatrix<f64>> = parts.iter().collect();
        let (b, c) = linalg::range_and_complement(&linalg::hstack(&refs, n), rel_tol);
        let grew = b.ncols() > basis.ncols();
        basis = b;
        complement = c;
        if !grew {
            break;
        }
    }
    SubspaceSplit { basis, complement }
}

/// `Im R_{nx-1}` and its complement.
pub fn reachable_subspace(model: &LpvSsa, x0: &InitialState, rel_tol: f64) -> SubspaceSplit {
    invariant_closure(&model.reach_generators(x0), model.a(), rel_tol, 0.0)
}

/// Row space of `O_{nx-1}` (basis) and `Ker O_{nx-1}` (complement).
pub fn observable_subspace(model: &LpvSsa, rel_tol: f64) -> SubspaceSplit {
    observable_subspace_with_floor(model, rel_tol, 0.0)
}

fn observable_subspace_with_floor(model: &LpvSsa, rel_tol: f64, floor: f64) -> SubspaceSplit {
    let at: Vec<DMatrix<f64>> = model.a().iter().map(|a| a.transpose()).collect();
    invariant_closure(&model.stacked_c().transpose(), &at, rel_tol, floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct MinimalityReport {
    pub nx: usize,
    pub reach_rank: usize,
    pub obs_rank: usize,
    pub reachable: bool,
    pub observable: bool,
    pub minimal: bool,
}

/// Span-reachability from `x0` and observability via the ranks of the
/// extended matrices; minimal iff both are full.
pub fn minimality_test(model: &LpvSsa, x0: &InitialState, rel_tol: f64) -> crate::Result<MinimalityReport> {
    model.check_state(x0)?;
    let nx = model.nx();
    let reach_rank = reachable_subspace(model, x0, rel_tol).dim();
    let obs_rank = observable_subspace(model, rel_tol).dim();
    let reachable = reach_rank == nx;
    let observable = obs_rank == nx;
    Ok(MinimalityReport {
        nx,
        reach_rank,
        obs_rank,
        reachable,
        observable,
        minimal: reachable && observable,
    })
}

/// Output of a single reduction step.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub model: LpvSsa,
    pub x0: InitialState,
    /// Orthogonal change of basis `x_hat = T x`; the reduced state is the
    /// leading `dim` coordinates of `x_hat`.
    pub t: DMatrix<f64>,
    pub dim: usize,
}

fn restrict(model: &LpvSsa, x0: &InitialState, basis: &DMatrix<f64>, full: DMatrix<f64>) -> Reduction {
    let left = basis.transpose();
    Reduction {
        model: model.project(&left, basis),
        x0: InitialState(&left * &x0.0),
        t: full.transpose(),
        dim: basis.ncols(),
    }
}

/// Restricts the model to `Im R_{nx-1}`.
pub fn reach_reduce(model: &LpvSsa, x0: &InitialState, rel_tol: f64) -> crate::Result<Reduction> {
    model.check_state(x0)?;
    let split = reachable_subspace(model, x0, rel_tol);
    Ok(restrict(model, x0, &split.basis, split.full()))
}

/// Quotients the model by `Ker O_{nx-1}`. The basis used is orthonormal,
/// with the kernel spanned by the trailing vectors.
pub fn obs_reduce(model: &LpvSsa, x0: &InitialState, rel_tol: f64) -> crate::Result<Reduction> {
    model.check_state(x0)?;
    let split = observable_subspace(model, rel_tol);
    Ok(restrict(model, x0, &split.basis, split.full()))
}

#[derive(Debug, Clone)]
pub struct Minimized {
    pub model: LpvSsa,
    pub x0: InitialState,
}

/// Reachability reduction followed by observability reduction.
pub fn minimize(model: &LpvSsa, x0: &InitialState, rel_tol: f64) -> crate::Result<Minimized> {
    let r = reach_reduce(model, x0, rel_tol)?;
    // rank decisions on the projected outputs keep the source's scale
    let c_scale = SortedSvd::new(&model.stacked_c()).singular_values.iter().copied().fold(0.0, f64::max);
    let split = observable_subspace_with_floor(&r.model, rel_tol, c_scale);
    let o = restrict(&r.model, &r.x0, &split.basis, split.full());
    Ok(Minimized {
        model: o.model,
        x0: o.x0,
    })
}

/// Kalman decomposition with block sizes `r_m <= r <= nx`.
#[derive(Debug, Clone)]
pub struct KalmanDecomposition {
    /// `x_hat = T x`; orthogonal, so `T^-1 = T^T`.
    pub t: DMatrix<f64>,
    pub hat_model: LpvSsa,
    pub hat_x0: InitialState,
    /// `dim Im R_{nx-1}`
    pub r: usize,
    /// dimension of the reachable and observable part
    pub r_m: usize,
    pub minimal_part: LpvSsa,
    pub minimal_x0: InitialState,
    /// Largest entry in the blocks that must vanish.
    pub zero_pattern_residual: f64,
}

/// Basis `[b_1 .. b_nx]` with `span{b_1..b_r} = Im R` and
/// `span{b_{r_m+1}..b_r} = Im R ∩ Ker O`, then `T = [b]^-1`.
pub fn kalman_decompose(model: &LpvSsa, x0: &InitialState, rel_tol: f64) -> crate::Result<KalmanDecomposition> {
    model.check_state(x0)?;
    let nx = model.nx();
    let reach = reachable_subspace(model, x0, rel_tol);
    let obs = observable_subspace(model, rel_tol);
    let r = reach.dim();

    // z in R^r with (row space of O)^T V_R z = 0 parametrises Im R ∩ Ker O.
    // Both bases are orthonormal, so the singular values of the coupling are
    // cosines of principal angles and the threshold is absolute.
    let coupling = obs.basis.transpose() * &reach.basis;
    let (z_obs, z_unobs) = if r == 0 {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
    } else {
        linalg::range_and_complement_abs(&coupling.transpose(), rel_tol)
    };
    let r_m = z_obs.ncols();

    let b_min = &reach.basis * &z_obs;
    let b_mid = &reach.basis * &z_unobs;
    let basis = linalg::hstack(&[&b_min, &b_mid, &reach.complement], nx);
    let t = basis.transpose();
    let hat_model = model.transform(&t, &basis)?;
    let hat_x0 = InitialState(&t * &x0.0);

    let zero_pattern_residual = zero_pattern(&hat_model, &hat_x0, r, r_m);

    let left = b_min.transpose();
    let minimal_part = model.project(&left, &b_min);
    let minimal_x0 = InitialState(&left * &x0.0);
    Ok(KalmanDecomposition {
        t,
        hat_model,
        hat_x0,
        r,
        r_m,
        minimal_part,
        minimal_x0,
        zero_pattern_residual,
    })
}

/// Largest magnitude among the entries forced to zero by the decomposition.
pub fn zero_pattern(hat: &LpvSsa, hat_x0: &InitialState, r: usize, r_m: usize) -> f64 {
    let nx = hat.nx();
    let mut worst = 0.0_f64;
    let block = |m: &DMatrix<f64>, r0: usize, r1: usize, c0: usize, c1: usize| -> f64 {
        if r1 <= r0 || c1 <= c0 {
            0.0
        } else {
            max_abs(&m.view((r0, c0), (r1 - r0, c1 - c0)).into_owned())
        }
    };
    for a in hat.a() {
        worst = worst.max(block(a, r, nx, 0, r)); // (3,1) and (3,2)
        worst = worst.max(block(a, 0, r_m, r_m, r)); // (1,2)
    }
    for b in hat.b() {
        worst = worst.max(block(b, r, nx, 0, b.ncols()));
    }
    for c in hat.c() {
        worst = worst.max(block(c, 0, c.nrows(), r_m, r));
    }
    for k in r..nx {
        worst = worst.max(hat_x0.0[k].abs());
    }
    worst
}
