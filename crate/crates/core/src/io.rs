//! Text and binary formats for profiles, orbits and fields.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, so a write/read round trip is lossless.

use std::io::{BufRead, Write};

use crate::abstract_orbit::AbstractOrbit;
use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::grid::{Grid1D, Grid2D};
use crate::heteroclinic::Path1D;
use crate::layer2d::Order;

const BINARY_MAGIC: &[u8; 4] = b"HDL1";

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        msg: msg.into(),
    })
}

fn write_rows(
    w: &mut impl Write,
    coord: &str,
    nodes: &[f64],
    m: usize,
    values: &[f64],
) -> Result<()> {
    let mut head = coord.to_string();
    for k in 1..=m {
        head.push_str(&format!(",{}{k}", if coord == "t" { "v" } else { "u" }));
    }
    writeln!(w, "{head}")?;
    for (i, x) in nodes.iter().enumerate() {
        write!(w, "{x}")?;
        for v in &values[i * m..(i + 1) * m] {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `x,u1,...,um`, one row per node.
pub fn write_profile(w: &mut impl Write, e: &Path1D) -> Result<()> {
    write_rows(w, "x", &e.grid().nodes(), e.dim(), e.values())
}

/// Same layout with `t` in place of `x`.
pub fn write_orbit(w: &mut impl Write, v: &AbstractOrbit) -> Result<()> {
    let values: Vec<f64> = (0..v.len()).flat_map(|i| v.at(i).to_vec()).collect();
    write_rows(w, "t", v.times(), v.dim(), &values)
}

fn parse_row(line: &str, lineno: usize, expect: usize) -> Result<Vec<f64>> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if cols.len() != expect {
        return parse_err(
            lineno,
            format!("expected {expect} columns, found {}", cols.len()),
        );
    }
    cols.iter()
        .map(|c| {
            c.parse::<f64>()
                .or_else(|_| parse_err(lineno, format!("not a number: {c:?}")))
        })
        .collect()
}

pub fn read_profile(r: impl BufRead) -> Result<Path1D> {
    let mut lines = r.lines();
    let head = match lines.next() {
        Some(l) => l?,
        None => return parse_err(1, "empty profile"),
    };
    let cols: Vec<&str> = head.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "x" {
        return parse_err(1, "header must be x,u1,...,um");
    }
    let m = cols.len() - 1;
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for (i, l) in lines.enumerate() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let row = parse_row(&l, i + 2, m + 1)?;
        xs.push(row[0]);
        values.extend_from_slice(&row[1..]);
    }
    let grid = grid_from_nodes(&xs, 2)?;
    Path1D::new(grid, m, values)
}

fn grid_from_nodes(xs: &[f64], first_line: usize) -> Result<Grid1D> {
    let n = xs.len();
    if n < 3 {
        return parse_err(first_line, "need at least three rows");
    }
    let half = xs[n - 1];
    if (xs[0] + half).abs() > 1e-12 * half.abs().max(1.0) {
        return parse_err(first_line, "nodes must be symmetric about 0");
    }
    let grid = Grid1D::new(half, n).or_else(|e| parse_err(first_line, e.to_string()))?;
    for (j, &x) in xs.iter().enumerate() {
        if (x - grid.node(j)).abs() > 1e-9 * half {
            return parse_err(first_line + j, format!("node {x} is off the uniform grid"));
        }
    }
    Ok(grid)
}

fn field_header(u: &Field2D, order: Option<Order>) -> String {
    let g = u.grid();
    let mut s = format!(
        "m={} n_t={} n_x={} T={} L={}",
        u.dim(),
        g.nt(),
        g.nx(),
        g.t.half_length(),
        g.x.half_length()
    );
    if order == Some(Order::Fourth) {
        s.push_str(" order=4");
    }
    s
}

struct Header {
    m: usize,
    grid: Grid2D,
    order: Option<Order>,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut m = None;
    let (mut nt, mut nx, mut tt, mut ll) = (None, None, None, None);
    let mut order = None;
    for tok in line.split_whitespace() {
        let Some((k, v)) = tok.split_once('=') else {
            return parse_err(1, format!("expected key=value, found {tok:?}"));
        };
        let int = || {
            v.parse::<usize>()
                .or_else(|_| parse_err(1, format!("{k}: not an integer")))
        };
        let real = || {
            v.parse::<f64>()
                .or_else(|_| parse_err(1, format!("{k}: not a number")))
        };
        match k {
            "m" => m = Some(int()?),
            "n_t" => nt = Some(int()?),
            "n_x" => nx = Some(int()?),
            "T" => tt = Some(real()?),
            "L" => ll = Some(real()?),
            "order" => {
                order = Some(match v {
                    "2" => Order::Second,
                    "4" => Order::Fourth,
                    _ => return parse_err(1, "order must be 2 or 4"),
                })
            }
            _ => return parse_err(1, format!("unknown header key {k:?}")),
        }
    }
    let (Some(m), Some(nt), Some(nx), Some(tt), Some(ll)) = (m, nt, nx, tt, ll) else {
        return parse_err(1, "header must contain m, n_t, n_x, T and L");
    };
    if m == 0 {
        return parse_err(1, "m must be positive");
    }
    let t = Grid1D::new(tt, nt).or_else(|e| parse_err(1, e.to_string()))?;
    let x = Grid1D::new(ll, nx).or_else(|e| parse_err(1, e.to_string()))?;
    Ok(Header {
        m,
        grid: Grid2D::new(t, x),
        order,
    })
}

/// Header `m=.. n_t=.. n_x=.. T=.. L=..` (plus `order=4` for fourth-order
/// layers), then `t,x,u1,...,um` rows, `t` outermost.
pub fn write_field_csv(w: &mut impl Write, u: &Field2D, order: Option<Order>) -> Result<()> {
    writeln!(w, "{}", field_header(u, order))?;
    let g = u.grid();
    for i in 0..g.nt() {
        let t = g.t.node(i);
        for j in 0..g.nx() {
            write!(w, "{t},{}", g.x.node(j))?;
            for v in u.at(i, j) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn read_field_csv(r: impl BufRead) -> Result<(Field2D, Option<Order>)> {
    let mut lines = r.lines();
    let head = match lines.next() {
        Some(l) => l?,
        None => return parse_err(1, "empty field file"),
    };
    let h = parse_header(&head)?;
    let g = h.grid;
    let mut values = Vec::with_capacity(g.nt() * g.nx() * h.m);
    let mut k = 0;
    for (i, l) in lines.enumerate() {
        let l = l?;
        let lineno = i + 2;
        if l.trim().is_empty() {
            continue;
        }
        if k == g.nt() * g.nx() {
            return parse_err(lineno, "more rows than n_t * n_x");
        }
        let row = parse_row(&l, lineno, h.m + 2)?;
        let (ti, xj) = (k / g.nx(), k % g.nx());
        let tol = 1e-9 * g.t.half_length().max(g.x.half_length());
        if (row[0] - g.t.node(ti)).abs() > tol || (row[1] - g.x.node(xj)).abs() > tol {
            return parse_err(
                lineno,
                format!("expected node ({}, {})", g.t.node(ti), g.x.node(xj)),
            );
        }
        values.extend_from_slice(&row[2..]);
        k += 1;
    }
    if k != g.nt() * g.nx() {
        return parse_err(
            k + 2,
            format!("expected {} rows, found {k}", g.nt() * g.nx()),
        );
    }
    Ok((Field2D::new(g, h.m, values)?, h.order))
}

/// `HDL1`, the text header and a newline, then the values as little-endian
/// `f64` in the same order as the CSV rows.
pub fn write_field_binary(w: &mut impl Write, u: &Field2D, order: Option<Order>) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    writeln!(w, "{}", field_header(u, order))?;
    for v in u.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary(mut r: impl BufRead) -> Result<(Field2D, Option<Order>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return parse_err(1, "not a binary field file");
    }
    let mut head = String::new();
    r.read_line(&mut head)?;
    let h = parse_header(head.trim_end())?;
    let n = h.grid.nt() * h.grid.nx() * h.m;
    let mut bytes = Vec::with_capacity(n * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 8 {
        return parse_err(
            2,
            format!("expected {} bytes of data, found {}", n * 8, bytes.len()),
        );
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((Field2D::new(h.grid, h.m, values)?, h.order))
}

/// Reads either format, deciding by the first bytes.
pub fn read_field(mut r: impl BufRead) -> Result<(Field2D, Option<Order>)> {
    let start = r.fill_buf()?;
    if start.starts_with(BINARY_MAGIC) {
        read_field_binary(r)
    } else {
        read_field_csv(r)
    }
}
