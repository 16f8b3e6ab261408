//! JSON form of set values and CSV form of trajectories.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use setest_core::interval::IntervalVector;
use setest_core::setcore::{ConstrainedZonotope, Ellipsoid, SetError, SetValue, Zonotope, ZonotopeBundle};
use setest_core::sysmodel::Trajectory;

#[derive(Debug, thiserror::Error)]
pub enum SerialError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error("malformed input: {0}")]
    Malformed(String),
}

type Rows = Vec<Vec<f64>>;

#[derive(Serialize, Deserialize)]
struct ZonoFields {
    center: Vec<f64>,
    generators: Rows,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", content = "fields", rename_all = "snake_case")]
enum SetJson {
    Interval { lower: Vec<f64>, upper: Vec<f64> },
    Ellipsoid { center: Vec<f64>, shape: Rows },
    Zonotope(ZonoFields),
    ConstrainedZonotope { center: Vec<f64>, generators: Rows, a: Rows, b: Vec<f64> },
    ZonotopeBundle { members: Vec<ZonoFields> },
    Empty { dim: usize },
}

fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &Rows, ncols: usize) -> Result<DMatrix<f64>, SerialError> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(SerialError::Malformed("ragged matrix".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn ncols(rows: &Rows) -> usize {
    rows.first().map_or(0, Vec::len)
}

fn zono_fields(z: &Zonotope) -> ZonoFields {
    ZonoFields { center: z.center().iter().copied().collect(), generators: rows(z.generators()) }
}

fn zono(f: &ZonoFields) -> Result<Zonotope, SerialError> {
    let g = matrix(&f.generators, ncols(&f.generators))?;
    let g = if g.nrows() == 0 { DMatrix::zeros(f.center.len(), 0) } else { g };
    Ok(Zonotope::new(DVector::from_column_slice(&f.center), g)?)
}

fn to_json(s: &SetValue) -> SetJson {
    match s {
        SetValue::Interval(b) => SetJson::Interval {
            lower: b.lower().iter().copied().collect(),
            upper: b.upper().iter().copied().collect(),
        },
        SetValue::Ellipsoid(e) => SetJson::Ellipsoid { center: e.center().iter().copied().collect(), shape: rows(e.shape()) },
        SetValue::Zonotope(z) => SetJson::Zonotope(zono_fields(z)),
        SetValue::ConstrainedZonotope(c) => SetJson::ConstrainedZonotope {
            center: c.center().iter().copied().collect(),
            generators: rows(c.generators()),
            a: rows(c.constraint_matrix()),
            b: c.constraint_offset().iter().copied().collect(),
        },
        SetValue::Bundle(b) => SetJson::ZonotopeBundle { members: b.members().iter().map(zono_fields).collect() },
        SetValue::Empty { dim } => SetJson::Empty { dim: *dim },
    }
}

fn from_json(j: SetJson) -> Result<SetValue, SerialError> {
    Ok(match j {
        SetJson::Interval { lower, upper } => SetValue::Interval(
            IntervalVector::from_bounds(&lower, &upper).ok_or_else(|| SerialError::Malformed("interval bounds".into()))?,
        ),
        SetJson::Ellipsoid { center, shape } => {
            let p = matrix(&shape, center.len())?;
            SetValue::Ellipsoid(Ellipsoid::new(DVector::from_vec(center), p)?)
        }
        SetJson::Zonotope(f) => SetValue::Zonotope(zono(&f)?),
        SetJson::ConstrainedZonotope { center, generators, a, b } => {
            let r = ncols(&generators);
            let g = matrix(&generators, r)?;
            let g = if g.nrows() == 0 { DMatrix::zeros(center.len(), 0) } else { g };
            let a = matrix(&a, if a.is_empty() { r } else { ncols(&a) })?;
            SetValue::ConstrainedZonotope(ConstrainedZonotope::new(DVector::from_vec(center), g, a, DVector::from_vec(b))?)
        }
        SetJson::ZonotopeBundle { members } => {
            let members = members.iter().map(zono).collect::<Result<Vec<_>, _>>()?;
            SetValue::Bundle(ZonotopeBundle::new(members)?)
        }
        SetJson::Empty { dim } => SetValue::Empty { dim },
    })
}

/// `{"type": .., "fields": ..}` with shortest round-trip doubles.
pub fn set_to_json(s: &SetValue) -> Result<String, SerialError> {
    Ok(serde_json::to_string(&to_json(s))?)
}

pub fn set_to_value(s: &SetValue) -> serde_json::Value {
    serde_json::to_value(to_json(s)).expect("set values serialize")
}

pub fn set_from_json(text: &str) -> Result<SetValue, SerialError> {
    from_json(serde_json::from_str(text)?)
}

/// Shortest decimal that parses back to the same double; `inf`, `-inf`, `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

fn columns(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

/// Columns `step, x.., u.., y.., w.., v..`; the last row leaves `u` and `w` blank.
pub fn write_trajectory_csv<W: Write>(t: &Trajectory, out: W) -> Result<(), SerialError> {
    let n = t.states[0].len();
    let m = t.inputs.first().map_or(0, |u| u.len());
    let r = t.measurements[0].len();
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("step".to_string())
        .chain(columns("x", n))
        .chain(columns("u", m))
        .chain(columns("y", r))
        .chain(columns("w", n))
        .chain(columns("v", r))
        .collect();
    w.write_record(&header)?;
    let cells = |v: Option<&DVector<f64>>, len: usize| -> Vec<String> {
        match v {
            Some(v) => v.iter().map(|x| fmt_f64(*x)).collect(),
            None => vec![String::new(); len],
        }
    };
    for k in 0..t.states.len() {
        let mut row = vec![k.to_string()];
        row.extend(cells(Some(&t.states[k]), n));
        row.extend(cells(t.inputs.get(k), m));
        row.extend(cells(Some(&t.measurements[k]), r));
        row.extend(cells(t.disturbances.get(k), n));
        row.extend(cells(Some(&t.noises[k]), r));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R, seed: u64) -> Result<Trajectory, SerialError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    let count = |p: char| header.iter().filter(|h| h.starts_with(p) && h[1..].parse::<usize>().is_ok()).count();
    let (n, m, r) = (count('x'), count('u'), count('y'));
    if count('w') != n || count('v') != r || header.len() != 1 + 2 * n + m + 2 * r {
        return Err(SerialError::Malformed("unexpected trajectory columns".into()));
    }
    let mut t = Trajectory { states: vec![], inputs: vec![], measurements: vec![], disturbances: vec![], noises: vec![], seed };
    for rec in rd.records() {
        let rec = rec?;
        let mut at = 1;
        let mut take = |len: usize| -> Result<Option<DVector<f64>>, SerialError> {
            let cells: Vec<&str> = (at..at + len).map(|i| rec.get(i).unwrap_or("")).collect();
            at += len;
            if len > 0 && cells.iter().all(|c| c.is_empty()) {
                return Ok(None);
            }
            let vals = cells
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| SerialError::Malformed(format!("bad number `{c}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Some(DVector::from_vec(vals)))
        };
        let x = take(n)?.ok_or_else(|| SerialError::Malformed("missing state".into()))?;
        let u = take(m)?;
        let y = take(r)?.unwrap_or_else(|| DVector::zeros(0));
        let w = take(n)?;
        let v = take(r)?.unwrap_or_else(|| DVector::zeros(0));
        t.states.push(x);
        t.inputs.extend(u);
        t.measurements.push(y);
        t.disturbances.extend(w);
        t.noises.push(v);
    }
    if t.states.is_empty() || t.disturbances.len() + 1 != t.states.len() {
        return Err(SerialError::Malformed("inconsistent trajectory length".into()));
    }
    if m == 0 {
        t.inputs = vec![DVector::zeros(0); t.disturbances.len()];
    }
    Ok(t)
}
