//! File formats: JSON models, sub-Markov tables, signals and trajectories,
//! and a raw little-endian Hankel dump.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::HankelFinite;
use crate::markov::{BlockDims, SubMarkovOracle};
use crate::model::{validate, InitialState, LpvSsa, ModelParts, TimeDomain};
use crate::signal::SampledSignal;
use crate::sim::Trajectory;
use crate::words::{self, Word};

type Rows = Vec<Vec<f64>>;

/// Largest number of matrix entries a file may imply without listing them.
const MAX_IMPLIED_ENTRIES: usize = 1 << 24;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    np: usize,
    nx: usize,
    nu: usize,
    ny: usize,
    time_domain: TimeDomain,
    #[serde(rename = "A")]
    a: Vec<Rows>,
    #[serde(rename = "B")]
    b: Vec<Rows>,
    #[serde(rename = "C")]
    c: Vec<Rows>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    d: Option<Vec<Rows>>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<f64>>,
}

/// A model file before dimension checks.
#[derive(Debug, Clone)]
pub struct ModelDocument {
    pub parts: ModelParts,
    pub x0: Option<InitialState>,
}

/// Row-major nested arrays to a matrix. An empty list is a `0 x cols`
/// matrix, so zero-row blocks need no placeholder.
fn matrix_from_rows(field: &str, rows: &Rows, cols: usize) -> Result<DMatrix<f64>> {
    let Some(first) = rows.first() else {
        return Ok(DMatrix::zeros(0, cols));
    };
    let width = first.len();
    if let Some(k) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::format(
            format!("{field} row {k}"),
            format!("expected {width} entries, got {}", rows[k].len()),
        ));
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

fn family(name: &str, data: &[Rows], cols: usize) -> Result<Vec<DMatrix<f64>>> {
    data.iter()
        .enumerate()
        .map(|(i, m)| matrix_from_rows(&format!("{name}[{i}]"), m, cols))
        .collect()
}

fn rows_of(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Reads a model file without rejecting dimension errors, so they can be
/// reported by [`validate`].
pub fn parse_model_document(text: &str) -> Result<ModelDocument> {
    let file: ModelFile = serde_json::from_str(text)?;
    let d = match &file.d {
        Some(d) => family("D", d, file.nu)?,
        None => {
            let implied = file
                .ny
                .checked_mul(file.nu)
                .and_then(|e| e.checked_mul(file.np.checked_add(1)?))
                .filter(|&e| e <= MAX_IMPLIED_ENTRIES);
            if implied.is_none() {
                return Err(Error::format("D", "omitted, but the implied zero blocks are too large"));
            }
            vec![DMatrix::zeros(file.ny, file.nu); file.np + 1]
        }
    };
    let parts = ModelParts {
        np: file.np,
        nx: file.nx,
        nu: file.nu,
        ny: file.ny,
        a: family("A", &file.a, file.nx)?,
        b: family("B", &file.b, file.nu)?,
        c: family("C", &file.c, file.nx)?,
        d,
        time_domain: file.time_domain,
        scheduling_set: file
            .p
            .map(|pts| pts.into_iter().map(DVector::from_vec).collect()),
    };
    Ok(ModelDocument {
        parts,
        x0: file.x0.map(|v| InitialState::new(DVector::from_vec(v))),
    })
}

/// Reads and checks a model file. The initial state, when present, must
/// match the state dimension.
pub fn parse_model(text: &str) -> Result<(LpvSsa, Option<InitialState>)> {
    let doc = parse_model_document(text)?;
    if let Some(err) = validate(&doc.parts).errors.first() {
        return Err(Error::dim("model", err.clone()));
    }
    let model = LpvSsa::from_parts(doc.parts)?;
    if let Some(x0) = &doc.x0 {
        if x0.len() != model.nx() {
            return Err(Error::dim("x0", format!("expected length {}, got {}", model.nx(), x0.len())));
        }
    }
    Ok((model, doc.x0))
}

pub fn model_to_json(model: &LpvSsa, x0: Option<&InitialState>) -> String {
    let family = |f: &[DMatrix<f64>]| f.iter().map(rows_of).collect::<Vec<_>>();
    let file = ModelFile {
        np: model.np(),
        nx: model.nx(),
        nu: model.nu(),
        ny: model.ny(),
        time_domain: model.time_domain(),
        a: family(model.a()),
        b: family(model.b()),
        c: family(model.c()),
        d: Some(family(model.d())),
        p: model
            .scheduling_set()
            .map(|s| s.iter().map(|p| p.iter().copied().collect()).collect()),
        x0: x0.map(|x| x.0.iter().copied().collect()),
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaRecord {
    word: String,
    theta: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaFile {
    np: usize,
    ny: usize,
    nu: usize,
    max_len: usize,
    records: Vec<ThetaRecord>,
}

/// Sub-Markov blocks for every word of length `<= max_len`, in word order.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTable {
    dims: BlockDims,
    max_len: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl ThetaTable {
    pub fn from_oracle(oracle: &dyn SubMarkovOracle, max_len: usize) -> Result<Self> {
        Ok(ThetaTable {
            dims: oracle.dims(),
            max_len,
            blocks: oracle.table(max_len)?,
        })
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: ThetaFile = serde_json::from_str(text)?;
        let dims = BlockDims {
            np: file.np,
            nu: file.nu,
            ny: file.ny,
        };
        let block_len = file
            .np
            .checked_add(1)
            .and_then(|n| {
                let rows = n.checked_mul(file.ny)?;
                let cols = n.checked_mul(file.nu)?.checked_add(1)?;
                rows.checked_mul(cols)
            })
            .ok_or_else(|| Error::format("header", "block size overflows"))?;
        let count = words::checked_car(file.np, file.max_len)
            .ok_or_else(|| Error::format("max_len", "word count overflows"))?;
        if file.records.len() != count {
            return Err(Error::format(
                "records",
                format!(
                    "expected {count} records for np = {}, max_len = {}, got {}",
                    file.np,
                    file.max_len,
                    file.records.len()
                ),
            ));
        }
        let (rows, cols) = (dims.rows(), dims.cols());
        let mut blocks: Vec<Option<DMatrix<f64>>> = vec![None; count];
        for (k, rec) in file.records.iter().enumerate() {
            let field = format!("records[{k}]");
            let w = Word::parse(file.np, &rec.word).map_err(|e| Error::format(&field, e.to_string()))?;
            if w.len() > file.max_len {
                return Err(Error::format(&field, format!("word {w} is longer than max_len")));
            }
            let idx = words::index_of(&w, file.max_len)?;
            if blocks[idx].is_some() {
                return Err(Error::format(&field, format!("duplicate word {w}")));
            }
            if rec.theta.len() != block_len {
                return Err(Error::format(
                    &field,
                    format!("expected {rows}x{cols} = {block_len} entries, got {}", rec.theta.len()),
                ));
            }
            blocks[idx] = Some(DMatrix::from_row_slice(rows, cols, &rec.theta));
        }
        // counts match and duplicates are rejected, so every slot is filled
        let blocks = blocks.into_iter().map(|b| b.expect("slot filled")).collect();
        Ok(ThetaTable {
            dims,
            max_len: file.max_len,
            blocks,
        })
    }

    pub fn to_json(&self) -> String {
        let records = words::enumerate_up_to(self.dims.np, self.max_len)
            .into_iter()
            .zip(&self.blocks)
            .map(|(w, b)| ThetaRecord {
                word: w.to_string(),
                theta: b.transpose().iter().copied().collect(),
            })
            .collect();
        let file = ThetaFile {
            np: self.dims.np,
            ny: self.dims.ny,
            nu: self.dims.nu,
            max_len: self.max_len,
            records,
        };
        serde_json::to_string_pretty(&file).expect("table serialization cannot fail")
    }
}

impl SubMarkovOracle for ThetaTable {
    fn dims(&self) -> BlockDims {
        self.dims
    }

    fn theta(&self, s: &Word) -> Result<DMatrix<f64>> {
        if s.np() != self.dims.np {
            return Err(Error::AlphabetMismatch {
                left: s.np(),
                right: self.dims.np,
            });
        }
        if s.len() > self.max_len {
            return Err(Error::OutOfRange {
                what: "word length",
                value: s.len(),
                limit: self.max_len,
            });
        }
        Ok(self.blocks[words::index_of(s, self.max_len)?].clone())
    }

    fn table(&self, max_len: usize) -> Result<Vec<DMatrix<f64>>> {
        if max_len > self.max_len {
            return Err(Error::OutOfRange {
                what: "word length",
                value: max_len,
                limit: self.max_len,
            });
        }
        Ok(self.blocks[..words::car(self.dims.np, max_len)].to_vec())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalsFile {
    time_domain: TimeDomain,
    u: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    #[serde(default)]
    step: Option<f64>,
    #[serde(default)]
    times: Option<Vec<f64>>,
}

/// Input and scheduling signals for a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub enum Signals {
    /// Samples at `t = 0, 1, ...`.
    Discrete {
        u: Vec<DVector<f64>>,
        p: Vec<DVector<f64>>,
    },
    Continuous { u: SampledSignal, p: SampledSignal },
}

fn vectors(field: &str, data: Vec<Vec<f64>>) -> Result<Vec<DVector<f64>>> {
    if let Some(first) = data.first() {
        let dim = first.len();
        if let Some(k) = data.iter().position(|v| v.len() != dim) {
            return Err(Error::format(
                format!("{field}[{k}]"),
                format!("expected {dim} entries, got {}", data[k].len()),
            ));
        }
    }
    Ok(data.into_iter().map(DVector::from_vec).collect())
}

/// Reads a signals file. Discrete-time files list `u` and `p` sample by
/// sample; continuous-time files add either a `step` (grid starting at 0)
/// or explicit uniformly spaced `times`.
pub fn parse_signals(text: &str) -> Result<Signals> {
    let file: SignalsFile = serde_json::from_str(text)?;
    if file.u.len() != file.p.len() {
        return Err(Error::format(
            "u",
            format!("{} input samples for {} scheduling samples", file.u.len(), file.p.len()),
        ));
    }
    if file.u.is_empty() {
        return Err(Error::format("u", "at least one sample is required"));
    }
    let u = vectors("u", file.u)?;
    let p = vectors("p", file.p)?;
    match file.time_domain {
        TimeDomain::Discrete => {
            if file.step.is_some() || file.times.is_some() {
                return Err(Error::format("step", "discrete-time signals use the integer grid"));
            }
            Ok(Signals::Discrete { u, p })
        }
        TimeDomain::Continuous => match (file.step, file.times) {
            (Some(step), None) => Ok(Signals::Continuous {
                u: SampledSignal::new(0.0, step, u)?,
                p: SampledSignal::new(0.0, step, p)?,
            }),
            (None, Some(times)) => Ok(Signals::Continuous {
                u: SampledSignal::from_times(&times, u)?,
                p: SampledSignal::from_times(&times, p)?,
            }),
            _ => Err(Error::format("step", "give exactly one of step or times")),
        },
    }
}

#[derive(Serialize)]
struct TrajectoryFile<'a> {
    time_domain: TimeDomain,
    t: &'a [f64],
    u: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

pub fn trajectory_to_json(traj: &Trajectory) -> String {
    let flat = |v: &[DVector<f64>]| v.iter().map(|x| x.iter().copied().collect()).collect();
    let file = TrajectoryFile {
        time_domain: traj.time_domain,
        t: &traj.grid,
        u: flat(&traj.u),
        p: flat(&traj.p),
        x: flat(&traj.x),
        y: flat(&traj.y),
    };
    serde_json::to_string_pretty(&file).expect("trajectory serialization cannot fail")
}

/// A Hankel matrix read back from a binary dump.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelDump {
    pub n: usize,
    pub m: usize,
    pub matrix: DMatrix<f64>,
}

const DUMP_HEADER: usize = 32;

/// Header of four little-endian `u64` (rows, cols, n, m), then the entries
/// as little-endian `f64` in row-major order.
pub fn write_hankel_dump(h: &HankelFinite) -> Vec<u8> {
    let (rows, cols) = h.matrix.shape();
    let mut out = Vec::with_capacity(DUMP_HEADER + 8 * rows * cols);
    for v in [rows, cols, h.n, h.m] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for i in 0..rows {
        for j in 0..cols {
            out.extend_from_slice(&h.matrix[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn read_hankel_dump(bytes: &[u8]) -> Result<HankelDump> {
    if bytes.len() < DUMP_HEADER {
        return Err(Error::format("header", format!("expected {DUMP_HEADER} bytes, got {}", bytes.len())));
    }
    let mut header = [0usize; 4];
    for (k, slot) in header.iter_mut().enumerate() {
        let raw = u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
        *slot = usize::try_from(raw).map_err(|_| Error::format("header", format!("field {k} too large")))?;
    }
    let [rows, cols, n, m] = header;
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(DUMP_HEADER))
        .ok_or_else(|| Error::format("header", "matrix size overflows"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            "payload",
            format!("expected {expected} bytes for {rows}x{cols}, got {}", bytes.len()),
        ));
    }
    let data = &bytes[DUMP_HEADER..];
    let matrix = DMatrix::from_fn(rows, cols, |i, j| {
        let at = 8 * (i * cols + j);
        f64::from_le_bytes(data[at..at + 8].try_into().expect("8 bytes"))
    });
    Ok(HankelDump { n, m, matrix })
}
