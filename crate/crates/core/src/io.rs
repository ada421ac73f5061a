//! Plain-text state files.
//!
//! Layout: one `# {json}` header line, one line of column names, then one
//! whitespace-separated row per node. Floats are written with the shortest
//! representation that parses back to the same bits.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eulerian::{Atom, EnergyMeasure, EulerianState};
use crate::grid::Grid;
use crate::lagrangian::LagrangianState;

pub const LAGRANGIAN_COLUMNS: [&str; 8] = ["xi", "y", "U", "H", "r", "yxi", "Uxi", "Hxi"];
pub const EULERIAN_COLUMNS: [&str; 4] = ["x", "u", "rho", "density"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Header {
    Lagrangian {
        t: f64,
        xi_min: f64,
        xi_max: f64,
        n: usize,
    },
    Eulerian {
        t: f64,
        x_min: f64,
        x_max: f64,
        n: usize,
        atoms: Vec<Atom>,
    },
}

fn write_table(out: &mut impl Write, header: &Header, columns: &[&str], cols: &[&[f64]]) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "# {}", serde_json::to_string(header)?).expect("write to string");
    writeln!(s, "{}", columns.join(" ")).expect("write to string");
    for i in 0..cols[0].len() {
        for (k, c) in cols.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            write!(s, "{:?}", c[i]).expect("write to string");
        }
        s.push('\n');
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn read_table(input: impl Read, columns: &[&str]) -> Result<(Header, Vec<Vec<f64>>)> {
    let mut lines = BufReader::new(input).lines();
    let mut next = |what: &str| -> Result<String> {
        lines.next().transpose()?.ok_or_else(|| Error::Parse(format!("missing {what} line")))
    };
    let first = next("header")?;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("first line must start with '#'".into()))?;
    let header: Header = serde_json::from_str(json.trim())?;
    let names = next("column")?;
    let got: Vec<&str> = names.split_whitespace().collect();
    if got != columns {
        return Err(Error::Parse(format!("expected columns {columns:?}, found {got:?}")));
    }
    let mut cols = vec![Vec::new(); columns.len()];
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != columns.len() {
            return Err(Error::Parse(format!(
                "row {row} has {} fields, expected {}",
                fields.len(),
                columns.len()
            )));
        }
        for (c, f) in cols.iter_mut().zip(fields) {
            c.push(f.parse().map_err(|e| Error::Parse(format!("row {row}: {f:?}: {e}")))?);
        }
    }
    Ok((header, cols))
}

fn check_nodes(grid: &Grid, xs: &[f64]) -> Result<()> {
    if xs.len() != grid.len() {
        return Err(Error::Structural(format!("{} rows for a grid of {} nodes", xs.len(), grid.len())));
    }
    let tol = 1e-9 * grid.dx();
    if let Some(i) = xs.iter().enumerate().position(|(i, &x)| (x - grid.node(i)).abs() > tol) {
        return Err(Error::Structural(format!("node column disagrees with the header grid at row {i}")));
    }
    Ok(())
}

pub fn write_lagrangian(out: &mut impl Write, x: &LagrangianState, t: f64) -> Result<()> {
    let g = x.grid;
    let header = Header::Lagrangian { t, xi_min: g.xi_min(), xi_max: g.xi_max(), n: g.len() };
    let nodes = g.nodes();
    write_table(out, &header, &LAGRANGIAN_COLUMNS, &[&nodes, &x.y, &x.u, &x.h, &x.r, &x.yxi, &x.uxi, &x.hxi])
}

pub fn read_lagrangian(input: impl Read) -> Result<(LagrangianState, f64)> {
    let (header, mut c) = read_table(input, &LAGRANGIAN_COLUMNS)?;
    let Header::Lagrangian { t, xi_min, xi_max, n } = header else {
        return Err(Error::Parse("not a Lagrangian state file".into()));
    };
    let grid = Grid::new(xi_min, xi_max, n)?;
    check_nodes(&grid, &c[0])?;
    let mut take = |k: usize| std::mem::take(&mut c[k]);
    let x = LagrangianState::new(grid, take(1), take(2), take(3), take(4), take(5), take(6), take(7))?;
    Ok((x, t))
}

pub fn write_eulerian(out: &mut impl Write, z: &EulerianState, t: f64) -> Result<()> {
    let g = z.grid;
    let header = Header::Eulerian { t, x_min: g.xi_min(), x_max: g.xi_max(), n: g.len(), atoms: z.mu.atoms.clone() };
    let nodes = g.nodes();
    write_table(out, &header, &EULERIAN_COLUMNS, &[&nodes, &z.u, &z.rho, &z.mu.density])
}

pub fn read_eulerian(input: impl Read) -> Result<(EulerianState, f64)> {
    let (header, mut c) = read_table(input, &EULERIAN_COLUMNS)?;
    let Header::Eulerian { t, x_min, x_max, n, atoms } = header else {
        return Err(Error::Parse("not an Eulerian state file".into()));
    };
    let grid = Grid::new(x_min, x_max, n)?;
    check_nodes(&grid, &c[0])?;
    let mut take = |k: usize| std::mem::take(&mut c[k]);
    let mu = EnergyMeasure::new(grid, take(3), atoms)?;
    let z = EulerianState::new(grid, take(1), take(2), mu)?;
    Ok((z, t))
}
