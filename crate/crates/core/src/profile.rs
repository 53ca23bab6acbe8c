//! Sampled radial profiles `(r, u, v, u', v')` and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Which formula or solver produced a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceTag {
    Ball,
    Core,
    Annulus,
    Exterior,
    Integrated,
    Discrete,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    /// Empty, or one tag per node.
    pub tags: Vec<PieceTag>,
}

pub const CSV_HEADER: [&str; 5] = ["r", "u", "v", "du", "dv"];

/// Formats a float with 17 significant digits, enough to round-trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, u: Vec<f64>, v: Vec<f64>, du: Vec<f64>, dv: Vec<f64>, tags: Vec<PieceTag>) -> Result<Self> {
        let p = Self { r, u, v, du, dv, tags };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.r.len();
        if n < 2 {
            return Err(domain("profile", "needs at least two nodes"));
        }
        if [self.u.len(), self.v.len(), self.du.len(), self.dv.len()].iter().any(|&m| m != n) {
            return Err(domain("profile", "columns have unequal lengths"));
        }
        if !self.tags.is_empty() && self.tags.len() != n {
            return Err(domain("profile", "tag count does not match node count"));
        }
        if self.r[0] != 0.0 {
            return Err(domain("profile", format!("first radius is {}, expected 0", self.r[0])));
        }
        if let Some(i) = self.r.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(domain("profile", format!("radii not strictly increasing at node {}", i + 1)));
        }
        for (name, col) in [("r", &self.r), ("u", &self.u), ("v", &self.v), ("du", &self.du), ("dv", &self.dv)] {
            if let Some(i) = col.iter().position(|x| !x.is_finite()) {
                return Err(domain("profile", format!("non-finite {name} at node {i}")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Index of the node at `r = 1`.
    pub fn index_of_one(&self) -> Result<usize> {
        self.r
            .iter()
            .position(|&x| (x - 1.0).abs() <= 1e-12)
            .ok_or_else(|| domain("profile", "no node at r = 1"))
    }

    /// Cubic Hermite interpolation of `(u, v)` at `x` inside the profile.
    pub fn interpolate(&self, x: f64) -> (f64, f64) {
        let n = self.len();
        let i = self.r.partition_point(|&r| r <= x).clamp(1, n - 1) - 1;
        let (a, b) = (self.r[i], self.r[i + 1]);
        (
            hermite(a, b, self.u[i], self.u[i + 1], self.du[i], self.du[i + 1], x),
            hermite(a, b, self.v[i], self.v[i + 1], self.dv[i], self.dv[i + 1], x),
        )
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(CSV_HEADER).map_err(csv_err)?;
        for i in 0..self.len() {
            wr.write_record([
                fmt17(self.r[i]),
                fmt17(self.u[i]),
                fmt17(self.v[i]),
                fmt17(self.du[i]),
                fmt17(self.dv[i]),
            ])
            .map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Parses the CSV written by [`RadialProfile::write_csv`]; errors carry
    /// the 1-based line number.
    pub fn read_csv<R: Read>(rd: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(rd);
        let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if header.iter().map(str::trim).ne(CSV_HEADER) {
            return Err(parse_err(
                1,
                format!("expected header r,u,v,du,dv, found {}", header.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        let mut cols: [Vec<f64>; 5] = Default::default();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 5 {
                return Err(parse_err(line, format!("expected 5 fields, found {}", rec.len())));
            }
            for (k, field) in rec.iter().enumerate() {
                let x: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line, format!("column {} is not a number: {field:?}", CSV_HEADER[k])))?;
                cols[k].push(x);
            }
        }
        let [r, u, v, du, dv] = cols;
        Self::new(r, u, v, du, dv, Vec::new())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Cubic Hermite interpolant on `[a, b]` through values `ya, yb` and slopes `da, db`.
pub fn hermite(a: f64, b: f64, ya: f64, yb: f64, da: f64, db: f64, x: f64) -> f64 {
    let h = b - a;
    let t = (x - a) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * ya + (t3 - 2.0 * t2 + t) * h * da + (-2.0 * t3 + 3.0 * t2) * yb + (t3 - t2) * h * db
}

fn parse_err(line: usize, reason: String) -> Error {
    Error::Parse { line, reason }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line: 0,
            reason: format!("{other:?}"),
        },
    }
}

/// Sorted copy of `grid` with `points` inserted where they fall inside
/// the grid's range.
pub fn with_breakpoints(grid: &[f64], points: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    if let (Some(&lo), Some(&hi)) = (grid.first(), grid.last()) {
        for &p in points {
            if p >= lo && p <= hi && !grid.iter().any(|&x| (x - p).abs() <= 1e-14) {
                g.push(p);
            }
        }
    }
    g.sort_by(f64::total_cmp);
    g
}

/// Uniform grid on `[0, 1]` with `n_inner` intervals followed by
/// `n_outer` uniform intervals up to `r_max`.
pub fn radial_grid(n_inner: usize, r_max: f64, n_outer: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=n_inner).map(|i| i as f64 / n_inner as f64).collect();
    if r_max > 1.0 && n_outer > 0 {
        g.extend((1..=n_outer).map(|i| 1.0 + (r_max - 1.0) * i as f64 / n_outer as f64));
    }
    g
}
