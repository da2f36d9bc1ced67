//! The `check` property suite.

use std::fmt::Write;

use lpvssa::hankel::block_count;
use lpvssa::linalg::{max_abs, numeric_rank};
use lpvssa::markov::sub_markov_table;
use lpvssa::realize::{find_isomorphism, ho_kalman};
use lpvssa::reduce::{minimality_test, minimize, MinimalityReport};
use lpvssa::words::checked_car;
use lpvssa::{build_hankel, sim, InitialState, LpvSsa, ModelOracle, SampledSignal, TimeDomain};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub struct Options {
    pub tol: f64,
    pub iso_tol: f64,
    pub seed: u64,
    pub runs: usize,
    pub max_blocks: usize,
}

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub minimality: MinimalityReport,
    pub minimal_dim: usize,
    pub checks: Vec<Outcome>,
    pub pass: bool,
}

impl Report {
    pub fn render(&self) -> String {
        let m = &self.minimality;
        let mut out = format!(
            "nx {}, reachable rank {}, observable rank {}, minimal {}, minimal dimension {}\n",
            m.nx, m.reach_rank, m.obs_rank, m.minimal, self.minimal_dim
        );
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{tag} {}: {}", c.name, c.detail);
        }
        out
    }
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

/// Max-abs gap relative to the larger of the two magnitudes (at least 1).
fn relative_gap(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let scale = a.iter().chain(b).map(|v| v.amax()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max) / scale
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..=1.0))
}

/// `sum_k a_k sin(w_k t + phi_k)` with random amplitudes in [-1, 1].
fn random_smooth(rng: &mut ChaCha8Rng, dim: usize) -> SampledSignal {
    let coeffs: Vec<[f64; 3]> = (0..dim * 3)
        .map(|_| {
            [
                rng.random_range(-1.0..=1.0),
                rng.random_range(0.5..=6.0),
                rng.random_range(0.0..=std::f64::consts::TAU),
            ]
        })
        .collect();
    SampledSignal::from_fn(0.0, 0.01, 101, |t| {
        DVector::from_fn(dim, |i, _| {
            coeffs[3 * i..3 * i + 3]
                .iter()
                .map(|[a, w, phi]| a * (w * t + phi).sin())
                .sum::<f64>()
                / 3.0
        })
    })
    .expect("uniform grid")
}

/// Outputs of both models under the same random signals.
fn simulate_pair(
    m1: &LpvSsa,
    x1: &InitialState,
    m2: &LpvSsa,
    x2: &InitialState,
    rng: &mut ChaCha8Rng,
) -> lpvssa::Result<f64> {
    match m1.time_domain() {
        TimeDomain::Discrete => {
            let len = 2 * m1.nx() + 6;
            let u: Vec<_> = (0..len).map(|_| random_vec(rng, m1.nu())).collect();
            let p: Vec<_> = (0..len).map(|_| random_vec(rng, m1.np())).collect();
            let t1 = sim::simulate_dt(m1, x1, &u, &p)?;
            let t2 = sim::simulate_dt(m2, x2, &u, &p)?;
            Ok(relative_gap(&t1.y, &t2.y))
        }
        TimeDomain::Continuous => {
            let u = random_smooth(rng, m1.nu());
            let p = random_smooth(rng, m1.np());
            let t1 = sim::simulate_ct(m1, x1, &u, &p, 1e-3)?;
            let t2 = sim::simulate_ct(m2, x2, &u, &p, 1e-3)?;
            Ok(relative_gap(&t1.y, &t2.y))
        }
    }
}

/// Largest word length `<= want` whose table stays within `max_blocks`.
fn affordable_len(np: usize, want: usize, max_blocks: usize) -> usize {
    (0..=want)
        .rev()
        .find(|&l| checked_car(np, l).is_some_and(|c| c <= max_blocks))
        .unwrap_or(0)
}

pub fn run(model: &LpvSsa, x0: &InitialState, opts: &Options) -> lpvssa::Result<Report> {
    let nx = model.nx();
    let np = model.np();
    let minimality = minimality_test(model, x0, opts.tol)?;
    let min = minimize(model, x0, opts.tol)?;
    let nm = min.model.nx();
    let mut checks = Vec::new();

    // H(nx-1, nx-1) already has the rank of the full Hankel matrix.
    let n = nx.saturating_sub(1);
    let oracle = ModelOracle::new(model, x0);
    let fits = |rows: usize, cols: usize| block_count(np, rows, cols).is_some_and(|c| c <= opts.max_blocks);
    if fits(n, n) {
        let h = build_hankel(&oracle, n, n)?;
        let (rank, _) = numeric_rank(&h.matrix, opts.tol);
        checks.push(outcome(
            "hankel rank",
            rank == nm && rank <= nx,
            format!("rank H({n}, {n}) = {rank}, minimal dimension {nm}, nx {nx}"),
        ));
        checks.push(outcome(
            "minimality test",
            minimality.minimal == (rank == nx),
            format!("minimal = {}, rank H = {rank}, nx = {nx}", minimality.minimal),
        ));
    } else {
        checks.push(outcome(
            "hankel rank",
            false,
            format!("H({n}, {n}) exceeds {} blocks", opts.max_blocks),
        ));
    }

    // Behavioural equality of the minimized model: sub-Markov parameters up
    // to nx + nm, then random simulations.
    let len = affordable_len(np, nx + nm, opts.max_blocks);
    let ours = sub_markov_table(model, x0, len)?;
    let theirs = sub_markov_table(&min.model, &min.x0, len)?;
    let scale = ours.iter().map(max_abs).fold(1.0, f64::max);
    let theta_gap = ours.iter().zip(&theirs).map(|(a, b)| max_abs(&(a - b))).fold(0.0, f64::max) / scale;
    checks.push(outcome(
        "reduction sub-Markov",
        theta_gap <= opts.iso_tol,
        format!("relative gap {theta_gap:.2e} over words up to length {len}"),
    ));
    let sim_tol = match model.time_domain() {
        TimeDomain::Discrete => opts.iso_tol,
        // both RK4 runs carry their own discretization error
        TimeDomain::Continuous => opts.iso_tol.max(1e-6),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sim_gap = 0.0_f64;
    for _ in 0..opts.runs {
        sim_gap = sim_gap.max(simulate_pair(model, x0, &min.model, &min.x0, &mut rng)?);
    }
    checks.push(outcome(
        "reduction simulation",
        sim_gap <= sim_tol,
        format!("{} runs, relative output gap {sim_gap:.2e}", opts.runs),
    ));

    if fits(n, n + 1) {
        let h = build_hankel(&oracle, n, n + 1)?;
        let hk = ho_kalman(&h, opts.tol, model.time_domain())?;
        let (pass, detail) = if hk.rank != nm || hk.rank_mismatch() {
            (
                false,
                format!("rank {} (square {}), minimal dimension {nm}", hk.rank, hk.rank_square),
            )
        } else {
            let iso = find_isomorphism(&hk.model, &hk.x0, &min.model.without_feedthrough(), &min.x0, opts.iso_tol, opts.tol)?;
            (
                iso.success,
                format!("nx {}, isomorphism residual {:.2e}", hk.rank, iso.residuals.max()),
            )
        };
        checks.push(outcome("ho-kalman roundtrip", pass, detail));
    } else {
        checks.push(outcome(
            "ho-kalman roundtrip",
            false,
            format!("H({n}, {}) exceeds {} blocks", n + 1, opts.max_blocks),
        ));
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        minimality,
        minimal_dim: nm,
        checks,
        pass,
    })
}
