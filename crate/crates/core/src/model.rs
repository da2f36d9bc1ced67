//! Affine LPV state-space models and their associated switched systems.
//!
//! A model is
//!
//! ```text
//! xi x(t) = A(p(t)) x(t) + B(p(t)) u(t)
//!    y(t) = C(p(t)) x(t) + D(p(t)) u(t)
//! ```
//!
//! with `M(p) = M_0 + sum_i M_i p_i` for each matrix family, where `xi` is the
//! forward shift (discrete time) or `d/dt` (continuous time). The
//! realization routines ignore `D`; it only enters simulated outputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeDomain {
    #[serde(rename = "dt")]
    Discrete,
    #[serde(rename = "ct")]
    Continuous,
}

impl TimeDomain {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeDomain::Discrete => "dt",
            TimeDomain::Continuous => "ct",
        }
    }
}

/// Unchecked model data, as read from a file or assembled by hand.
#[derive(Debug, Clone)]
pub struct ModelParts {
    pub np: usize,
    pub nx: usize,
    pub nu: usize,
    pub ny: usize,
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub c: Vec<DMatrix<f64>>,
    pub d: Vec<DMatrix<f64>>,
    pub time_domain: TimeDomain,
    pub scheduling_set: Option<Vec<DVector<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanStatus {
    /// The declared scheduling points affinely span `R^np`.
    Spans,
    /// The declared points lie in a proper affine subspace.
    Deficient,
    /// No scheduling set declared; the span condition is assumed.
    Assumed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub span: SpanStatus,
    pub d_is_zero: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty() && self.span != SpanStatus::Deficient
    }
}

fn check_family(
    errors: &mut Vec<String>,
    name: &str,
    family: &[DMatrix<f64>],
    count: usize,
    rows: usize,
    cols: usize,
) {
    if family.len() != count {
        errors.push(format!(
            "expected {count} {name}-matrices, got {}",
            family.len()
        ));
    }
    for (i, m) in family.iter().enumerate() {
        if m.shape() != (rows, cols) {
            errors.push(format!(
                "{name}[{i}]: expected {rows}x{cols}, got {}x{}",
                m.nrows(),
                m.ncols()
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            errors.push(format!("{name}[{i}]: non-finite entry"));
        }
    }
}

/// Rank of the differences `p_k - p_0` of a point set in `R^np`.
pub fn affine_rank(np: usize, points: &[DVector<f64>]) -> usize {
    if points.len() < 2 || np == 0 {
        return 0;
    }
    let mut diffs = DMatrix::zeros(np, points.len() - 1);
    for (k, p) in points.iter().skip(1).enumerate() {
        diffs.set_column(k, &(p - &points[0]));
    }
    linalg::numeric_rank(&diffs, DEFAULT_REL_TOL).0
}

fn span_status(np: usize, set: Option<&[DVector<f64>]>, errors: &mut Vec<String>) -> SpanStatus {
    let Some(points) = set else {
        return SpanStatus::Assumed;
    };
    for (k, p) in points.iter().enumerate() {
        if p.len() != np {
            errors.push(format!("P[{k}]: expected length {np}, got {}", p.len()));
        }
    }
    if points.is_empty() || points.iter().any(|p| p.len() != np) {
        return SpanStatus::Deficient;
    }
    if affine_rank(np, points) == np {
        SpanStatus::Spans
    } else {
        SpanStatus::Deficient
    }
}

/// Diagnoses dimension mismatches, the affine span of the scheduling set
/// and whether the feedthrough is identically zero.
pub fn validate(parts: &ModelParts) -> ValidationReport {
    let mut errors = Vec::new();
    let n = parts.np + 1;
    check_family(&mut errors, "A", &parts.a, n, parts.nx, parts.nx);
    check_family(&mut errors, "B", &parts.b, n, parts.nx, parts.nu);
    check_family(&mut errors, "C", &parts.c, n, parts.ny, parts.nx);
    check_family(&mut errors, "D", &parts.d, n, parts.ny, parts.nu);
    let span = span_status(parts.np, parts.scheduling_set.as_deref(), &mut errors);
    let d_is_zero = parts.d.iter().all(|m| m.iter().all(|&v| v == 0.0));
    ValidationReport {
        errors,
        span,
        d_is_zero,
    }
}

/// An affine LPV state-space model with validated dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct LpvSsa {
    np: usize,
    nx: usize,
    nu: usize,
    ny: usize,
    a: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
    c: Vec<DMatrix<f64>>,
    d: Vec<DMatrix<f64>>,
    time_domain: TimeDomain,
    scheduling_set: Option<Vec<DVector<f64>>>,
}

/// The matrices `(A(p), B(p), C(p), D(p))` at one scheduling point.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

/// Coefficient of family member `i` at scheduling value `p`: `p_0 = 1`.
#[inline]
pub fn sched_coeff(p: &DVector<f64>, i: usize) -> f64 {
    if i == 0 {
        1.0
    } else {
        p[i - 1]
    }
}

impl LpvSsa {
    /// Builds a model, rejecting dimension errors and scheduling sets that
    /// fail the affine span condition.
    pub fn from_parts(parts: ModelParts) -> Result<Self> {
        let report = validate(&parts);
        if let Some(first) = report.errors.first() {
            return Err(Error::dim("model", first.clone()));
        }
        if report.span == SpanStatus::Deficient {
            let rank = parts
                .scheduling_set
                .as_deref()
                .map(|s| affine_rank(parts.np, s))
                .unwrap_or(0);
            return Err(Error::SpanFailure {
                np: parts.np,
                rank,
            });
        }
        Ok(LpvSsa {
            np: parts.np,
            nx: parts.nx,
            nu: parts.nu,
            ny: parts.ny,
            a: parts.a,
            b: parts.b,
            c: parts.c,
            d: parts.d,
            time_domain: parts.time_domain,
            scheduling_set: parts.scheduling_set,
        })
    }

    /// Builds a model with zero feedthrough and no declared scheduling set.
    pub fn new(
        a: Vec<DMatrix<f64>>,
        b: Vec<DMatrix<f64>>,
        c: Vec<DMatrix<f64>>,
        time_domain: TimeDomain,
    ) -> Result<Self> {
        let np = a.len().checked_sub(1).ok_or_else(|| {
            Error::dim("A", "at least one A-matrix is required")
        })?;
        let nx = a[0].nrows();
        let nu = b.first().map(|m| m.ncols()).unwrap_or(0);
        let ny = c.first().map(|m| m.nrows()).unwrap_or(0);
        let d = vec![DMatrix::zeros(ny, nu); np + 1];
        LpvSsa::from_parts(ModelParts {
            np,
            nx,
            nu,
            ny,
            a,
            b,
            c,
            d,
            time_domain,
            scheduling_set: None,
        })
    }

    /// The zero-dimensional model, whose output is identically zero.
    pub fn empty(np: usize, nu: usize, ny: usize, time_domain: TimeDomain) -> Self {
        LpvSsa {
            np,
            nx: 0,
            nu,
            ny,
            a: vec![DMatrix::zeros(0, 0); np + 1],
            b: vec![DMatrix::zeros(0, nu); np + 1],
            c: vec![DMatrix::zeros(ny, 0); np + 1],
            d: vec![DMatrix::zeros(ny, nu); np + 1],
            time_domain,
            scheduling_set: None,
        }
    }

    pub fn into_parts(self) -> ModelParts {
        ModelParts {
            np: self.np,
            nx: self.nx,
            nu: self.nu,
            ny: self.ny,
            a: self.a,
            b: self.b,
            c: self.c,
            d: self.d,
            time_domain: self.time_domain,
            scheduling_set: self.scheduling_set,
        }
    }

    pub fn np(&self) -> usize {
        self.np
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nu(&self) -> usize {
        self.nu
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn a(&self) -> &[DMatrix<f64>] {
        &self.a
    }
    pub fn b(&self) -> &[DMatrix<f64>] {
        &self.b
    }
    pub fn c(&self) -> &[DMatrix<f64>] {
        &self.c
    }
    pub fn d(&self) -> &[DMatrix<f64>] {
        &self.d
    }
    pub fn time_domain(&self) -> TimeDomain {
        self.time_domain
    }
    pub fn scheduling_set(&self) -> Option<&[DVector<f64>]> {
        self.scheduling_set.as_deref()
    }

    pub fn with_time_domain(mut self, time_domain: TimeDomain) -> Self {
        self.time_domain = time_domain;
        self
    }

    /// Replaces the feedthrough matrices. Dimensions are checked.
    pub fn with_feedthrough(self, d: Vec<DMatrix<f64>>) -> Result<Self> {
        let mut parts = self.into_parts();
        parts.d = d;
        LpvSsa::from_parts(parts)
    }

    /// Attaches (or removes) a scheduling set, checking the span condition.
    pub fn with_scheduling_set(self, set: Option<Vec<DVector<f64>>>) -> Result<Self> {
        let mut parts = self.into_parts();
        parts.scheduling_set = set;
        LpvSsa::from_parts(parts)
    }

    /// Same model with `D = 0`.
    pub fn without_feedthrough(&self) -> Self {
        let mut out = self.clone();
        out.d = vec![DMatrix::zeros(self.ny, self.nu); self.np + 1];
        out
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.clone().into_parts())
    }

    /// `M(p) = M_0 + sum_i M_i p_i` for all four families.
    pub fn eval_at(&self, p: &DVector<f64>) -> Result<FrozenMatrices> {
        if p.len() != self.np {
            return Err(Error::dim(
                "p",
                format!("expected length {}, got {}", self.np, p.len()),
            ));
        }
        let combine = |family: &[DMatrix<f64>]| {
            let mut m = family[0].clone();
            for (i, fi) in family.iter().enumerate().skip(1) {
                m += fi * p[i - 1];
            }
            m
        };
        Ok(FrozenMatrices {
            a: combine(&self.a),
            b: combine(&self.b),
            c: combine(&self.c),
            d: combine(&self.d),
        })
    }

    /// Change of state coordinates `x' = T x`, given `T` and its inverse:
    /// `A'_i = T A_i T^-1`, `B'_i = T B_i`, `C'_i = C_i T^-1`.
    pub fn transform(&self, t: &DMatrix<f64>, t_inv: &DMatrix<f64>) -> Result<Self> {
        let nx = self.nx;
        if t.shape() != (nx, nx) || t_inv.shape() != (nx, nx) {
            return Err(Error::dim("T", format!("expected {nx}x{nx}")));
        }
        let mut out = self.clone();
        out.a = self.a.iter().map(|a| t * a * t_inv).collect();
        out.b = self.b.iter().map(|b| t * b).collect();
        out.c = self.c.iter().map(|c| c * t_inv).collect();
        Ok(out)
    }

    /// Restriction to a coordinate subspace: `A'_i = L A_i R`, `B'_i = L B_i`,
    /// `C'_i = C_i R`, where `L` is `k x nx` and `R` is `nx x k`.
    pub(crate) fn project(&self, left: &DMatrix<f64>, right: &DMatrix<f64>) -> Self {
        let k = left.nrows();
        LpvSsa {
            np: self.np,
            nx: k,
            nu: self.nu,
            ny: self.ny,
            a: self.a.iter().map(|a| left * a * right).collect(),
            b: self.b.iter().map(|b| left * b).collect(),
            c: self.c.iter().map(|c| c * right).collect(),
            d: self.d.clone(),
            time_domain: self.time_domain,
            scheduling_set: self.scheduling_set.clone(),
        }
    }

    /// Stacked `[C_0; ...; C_np]`.
    pub fn stacked_c(&self) -> DMatrix<f64> {
        let refs: Vec<&DMatrix<f64>> = self.c.iter().collect();
        linalg::vstack(&refs, self.nx)
    }

    /// `[x0 | B_0 | ... | B_np]`.
    pub fn reach_generators(&self, x0: &InitialState) -> DMatrix<f64> {
        let x0m = DMatrix::from_column_slice(self.nx, 1, x0.0.as_slice());
        let mut refs: Vec<&DMatrix<f64>> = vec![&x0m];
        refs.extend(self.b.iter());
        linalg::hstack(&refs, self.nx)
    }

    pub(crate) fn check_state(&self, x0: &InitialState) -> Result<()> {
        if x0.len() != self.nx {
            return Err(Error::dim(
                "x0",
                format!("expected length {}, got {}", self.nx, x0.len()),
            ));
        }
        Ok(())
    }

    pub(crate) fn check_alphabet(&self, np: usize) -> Result<()> {
        if np != self.np {
            return Err(Error::AlphabetMismatch {
                left: self.np,
                right: np,
            });
        }
        Ok(())
    }
}

/// Initial state paired with a model.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState(pub DVector<f64>);

impl InitialState {
    pub fn new(x0: DVector<f64>) -> Self {
        InitialState(x0)
    }

    pub fn zeros(nx: usize) -> Self {
        InitialState(DVector::zeros(nx))
    }

    pub fn from_slice(v: &[f64]) -> Self {
        InitialState(DVector::from_column_slice(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

/// The switched system sharing the matrices of an LPV model, with the
/// scheduling restricted to the vertices `{0, e_1, ..., e_np}` and `D = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedModel {
    model: LpvSsa,
}

/// `{e_0 = 0, e_1, ..., e_np}` in `R^np`.
pub fn switching_vertices(np: usize) -> Vec<DVector<f64>> {
    let mut out = vec![DVector::zeros(np)];
    for j in 0..np {
        let mut e = DVector::zeros(np);
        e[j] = 1.0;
        out.push(e);
    }
    out
}

impl SwitchedModel {
    pub fn model(&self) -> &LpvSsa {
        &self.model
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        self.model
            .scheduling_set()
            .expect("switched models always carry their vertex set")
    }
}

pub fn to_switched(model: &LpvSsa) -> SwitchedModel {
    let mut m = model.without_feedthrough();
    m.scheduling_set = Some(switching_vertices(model.np));
    SwitchedModel { model: m }
}

/// LPV model associated with a switched system, over a scheduling set that
/// must affinely span `R^np`.
pub fn from_switched(sw: &SwitchedModel, scheduling_set: Vec<DVector<f64>>) -> Result<LpvSsa> {
    sw.model.clone().with_scheduling_set(Some(scheduling_set))
}
