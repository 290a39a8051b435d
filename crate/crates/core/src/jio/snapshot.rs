//! Plain-text state snapshot of a [`JioDfe`].
//!
//! ```text
//! jio-dfe obs_len=9 n_tx=2 rank=3 lambda=0.998 window=12.5
//! matrix P 9 9
//! <9 lines of re,im tokens>
//! stream 0
//! matrix S 9 3
//! ...
//! vector w_bar 3
//! <one line>
//! ```

use std::fmt::Write as _;

use crate::channel::parse_complex_row;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, ComplexVector};
use crate::rls::InverseCorrelation;

use super::{JioDfe, ObservationInverse};

fn tokens(values: &[num_complex::Complex64]) -> String {
    values
        .iter()
        .map(|v| format!("{},{}", v.re, v.im))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_matrix(out: &mut String, name: &str, m: &ComplexMatrix) {
    let _ = writeln!(out, "matrix {name} {} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let _ = writeln!(out, "{}", tokens(m.row(r)));
    }
}

fn write_vector(out: &mut String, name: &str, v: &ComplexVector) {
    let _ = writeln!(out, "vector {name} {}", v.len());
    let _ = writeln!(out, "{}", tokens(v));
}

struct Reader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Reader<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::Parse(format!("snapshot truncated at line {}", self.line_no)))
    }

    fn header(&mut self, keyword: &str, name: &str) -> Result<Vec<usize>> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(keyword) || parts.next() != Some(name) {
            return Err(Error::Parse(format!(
                "line {}: expected '{keyword} {name}', found '{line}'",
                self.line_no
            )));
        }
        parts
            .map(|p| {
                p.parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad size '{p}'", self.line_no)))
            })
            .collect()
    }

    fn row(&mut self, expected: usize) -> Result<Vec<num_complex::Complex64>> {
        let row = parse_complex_row(self.next()?)?;
        if row.len() != expected {
            return Err(Error::Parse(format!(
                "line {}: expected {expected} entries, found {}",
                self.line_no,
                row.len()
            )));
        }
        Ok(row)
    }

    fn matrix(&mut self, name: &str) -> Result<ComplexMatrix> {
        let dims = self.header("matrix", name)?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse(format!("line {}: matrix needs two sizes", self.line_no)));
        };
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.row(cols)?);
        }
        ComplexMatrix::from_row_major(rows, cols, data)
    }

    fn vector(&mut self, name: &str) -> Result<ComplexVector> {
        let dims = self.header("vector", name)?;
        let [len] = dims[..] else {
            return Err(Error::Parse(format!("line {}: vector needs one size", self.line_no)));
        };
        Ok(self.row(len)?.into())
    }
}

fn field<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str) -> Result<T> {
    let raw = fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Parse(format!("snapshot header is missing {key}")))?;
    raw.parse()
        .map_err(|_| Error::Parse(format!("snapshot header: bad value for {key}: '{raw}'")))
}

impl JioDfe {
    /// Every matrix and vector of the detector, round-trippable by
    /// [`JioDfe::from_snapshot`].
    pub fn to_snapshot(&self) -> String {
        let mut out = format!(
            "jio-dfe obs_len={} n_tx={} rank={} lambda={} window={}\n",
            self.obs_len(),
            self.n_tx(),
            self.rank(),
            self.lambda(),
            self.window()
        );
        write_matrix(&mut out, "P", self.observation_inverse());
        for s in self.streams() {
            let _ = writeln!(out, "stream {}", s.index());
            write_matrix(&mut out, "S", s.projection());
            write_vector(&mut out, "w_bar", s.weights());
            write_vector(&mut out, "f", s.feedback());
            write_matrix(&mut out, "Q_wbar", s.q_wbar());
            write_matrix(&mut out, "Phi_bar", s.phi_bar());
            write_matrix(&mut out, "P_B", s.p_b());
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut rd = Reader {
            lines: text.lines(),
            line_no: 0,
        };
        let head = rd.next()?;
        let mut parts = head.split_whitespace();
        if parts.next() != Some("jio-dfe") {
            return Err(Error::Parse("snapshot must start with 'jio-dfe'".into()));
        }
        let fields: Vec<(&str, &str)> = parts
            .map(|p| {
                p.split_once('=')
                    .ok_or_else(|| Error::Parse(format!("bad snapshot header field '{p}'")))
            })
            .collect::<Result<_>>()?;
        let obs_len: usize = field(&fields, "obs_len")?;
        let n_tx: usize = field(&fields, "n_tx")?;
        let rank: usize = field(&fields, "rank")?;
        let lambda: f64 = field(&fields, "lambda")?;
        let window: f64 = field(&fields, "window")?;

        let p = rd.matrix("P")?;
        if p.rows() != obs_len || p.cols() != obs_len {
            return Err(Error::Parse("P does not match obs_len".into()));
        }
        let mut streams = Vec::with_capacity(n_tx);
        for j in 0..n_tx {
            let tag = rd.next()?;
            if tag.trim() != format!("stream {j}") {
                return Err(Error::Parse(format!("expected 'stream {j}', found '{tag}'")));
            }
            let mut st = super::init_state(obs_len, n_tx, j, rank, lambda, 1.0)?;
            st.set_projection(rd.matrix("S")?)?;
            st.set_weights(rd.vector("w_bar")?)?;
            st.set_feedback(rd.vector("f")?)?;
            let square = |m: ComplexMatrix, n: usize, name: &str| -> Result<InverseCorrelation> {
                if m.rows() != n || m.cols() != n {
                    return Err(Error::Parse(format!("{name} must be {n}x{n}")));
                }
                Ok(InverseCorrelation::from_matrix(m, lambda))
            };
            st.q_wbar = square(rd.matrix("Q_wbar")?, rank, "Q_wbar")?;
            st.phi_bar = square(rd.matrix("Phi_bar")?, rank, "Phi_bar")?;
            st.p_b = square(rd.matrix("P_B")?, n_tx - 1, "P_B")?;
            streams.push(st);
        }
        let obs = ObservationInverse::from_parts(InverseCorrelation::from_matrix(p, lambda), window);
        Ok(JioDfe::from_parts(obs, streams))
    }
}
