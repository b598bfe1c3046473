// SPDX-License-Identifier: Apache-2.0

//! Finite-difference spectral oracle for flat Schrödinger operators
//! `−d²/dx² + W` and, through the ground-state conjugation, for `−L`.

mod solver;
mod tridiag;

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use solver::{
    counting_function, eigenfunction_of_L, solve_diffusion_spectrum, solve_with, weyl_fit, weyl_fit_with,
    SolverOptions, SpectrumResult, EDGE_AGMON, TRUST_THRESHOLD,
};
pub use tridiag::{discretize, eigenvalues_sturm, eigenvector, eigenvector_values, sturm_count, TridiagonalOperator};

/// Uniform grid of `n` nodes on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!("grid needs at least 3 nodes, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::invalid(format!("bad grid interval [{x_min}, {x_max}]")));
        }
        Ok(Grid { x_min, x_max, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// The grid with twice the resolution and the same end points.
    pub fn refined(&self) -> Grid {
        Grid { n: 2 * (self.n - 1) + 1, ..*self }
    }

    /// Index range `lo..=hi` of a sub-grid, as a grid.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<Grid> {
        Grid::new(self.x(lo), self.x(hi), hi - lo + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `max |f| = 1`
    SupOne,
    /// `Σ f_i² = 1` over the nodes.
    L2One,
    /// As read or constructed, no scaling applied.
    Raw,
}

/// Samples of a real function on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub normalization: Normalization,
}

impl TabulatedFunction {
    pub fn new(grid: Grid, values: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::invalid(format!("{} values for a grid of {} nodes", values.len(), grid.n)));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "tabulated value".into(), x: grid.x(i) });
        }
        Ok(TabulatedFunction { grid, values, normalization })
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(grid: Grid, mut f: F) -> Self {
        let values = grid.points().map(&mut f).collect();
        TabulatedFunction { grid, values, normalization: Normalization::Raw }
    }

    pub fn sup_normalized(mut self) -> Self {
        let m = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= m);
        }
        self.normalization = Normalization::SupOne;
        self
    }

    /// Writes the `x,value` CSV form, one row per node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["x", "value"]).map_err(io)?;
        for (x, v) in self.grid.points().zip(&self.values) {
            w.write_record([format!("{x:?}"), format!("{v:?}")]).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    /// Reads the `x,value` CSV form. The nodes must be uniformly spaced.
    pub fn from_csv_reader<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(Error::invalid("expected the header `x,value`"));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
            let field = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::invalid(format!("row {}: bad number in column {}", row + 2, j + 1)))
            };
            xs.push(field(0)?);
            vs.push(field(1)?);
        }
        let n = xs.len();
        if n < 3 {
            return Err(Error::invalid("need at least 3 rows"));
        }
        let grid = Grid::new(xs[0], xs[n - 1], n)?;
        let h = grid.spacing();
        for (i, x) in xs.iter().enumerate() {
            if (x - grid.x(i)).abs() > 1e-9 * h.max(x.abs() * 1e-3) + 1e-12 * h {
                return Err(Error::invalid(format!("row {}: nodes are not uniformly spaced", i + 2)));
            }
        }
        TabulatedFunction::new(grid, vs, Normalization::Raw)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = Grid::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.points().collect::<Vec<_>>(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.refined().n, 9);
        assert!(Grid::new(0.0, 1.0, 2).is_err());
        assert!(Grid::new(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = Grid::new(-2.0, 3.0, 37).unwrap();
        let f = TabulatedFunction::from_fn(grid, |x| (0.3 * x).sin() / 7.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,value\n"));
        let g = TabulatedFunction::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(g.values, f.values);
        assert_eq!(g.grid, f.grid);
    }

    #[test]
    fn csv_rejects_ragged_nodes() {
        let text = "x,value\n0,1\n0.5,2\n1.2,3\n";
        assert!(TabulatedFunction::from_csv_reader(text.as_bytes()).is_err());
        let text = "a,b\n0,1\n0.5,2\n1,3\n";
        assert!(TabulatedFunction::from_csv_reader(text.as_bytes()).is_err());
    }
}
