//! Text renderings of results. Every number is printed with 17 significant
//! digits so runs can be compared byte for byte.

use std::fmt::Write;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use kgraph::continuation::HomotopyStep;
use kgraph::mce::Coefficients;
use kgraph::rotational::{FluxCheck, ProfileCurve};
use kgraph::{ScalarField, Shape};

use crate::config::OutputConfig;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// `key = value` lines in insertion order.
#[derive(Debug, Default, Clone)]
pub struct KeyValues {
    lines: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, num(value))
    }

    pub fn check(&mut self, key: &str, pass: bool) -> &mut Self {
        self.text(key, verdict(pass))
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Writes files into one output directory, honouring the format filter.
pub struct Sink {
    dir: PathBuf,
    filter: OutputConfig,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, filter: &OutputConfig) -> io::Result<Sink> {
        fs::create_dir_all(dir)?;
        Ok(Sink { dir: dir.to_path_buf(), filter: filter.clone(), written: Vec::new() })
    }

    /// `artifact` is the format name, `file` the file written for it.
    pub fn write(&mut self, artifact: &str, file: &str, contents: &str) -> io::Result<()> {
        if !self.filter.wants(artifact) {
            return Ok(());
        }
        let path = self.dir.join(file);
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }
}

/// `KGRAPH 1`, then `kind n m_r m_theta r0`, then one node value per line in
/// row-major order (first chart coordinate slowest).
pub fn solution_file(u: &ScalarField, n: usize) -> String {
    let grid = u.grid();
    let (m1, m2) = grid.cells();
    let r0 = match grid.shape() {
        Shape::Disc { r0 } => *r0,
        Shape::Annulus { r_out, .. } => *r_out,
        Shape::Rectangle { .. } => 0.0,
    };
    let mut out = format!("KGRAPH 1\n{} {} {} {} {}\n", grid.kind().name(), n, m1, m2, num(r0));
    for v in u.values() {
        out.push_str(&num(*v));
        out.push('\n');
    }
    out
}

pub const HOMOTOPY_HEADER: &str = "sigma,iterations,residual,sup_u,sup_grad";

pub fn homotopy_csv(history: &[HomotopyStep]) -> String {
    let mut out = format!("{HOMOTOPY_HEADER}\n");
    for s in history {
        let _ = writeln!(out, "{},{},{},{},{}", num(s.sigma), s.iterations, num(s.residual), num(s.sup_u), num(s.sup_gradient));
    }
    out
}

pub const PROFILE_HEADER: &str = "u,s,r,sdot,rdot,flux_residual";

pub fn profile_csv(c: &ProfileCurve) -> String {
    let mut out = format!("{PROFILE_HEADER}\n");
    for k in 0..c.len() {
        let row = [c.u[k], c.s[k], c.r[k], c.sdot[k], c.rdot[k], c.flux_residual[k]];
        out.push_str(&row.map(num).join(","));
        out.push('\n');
    }
    out
}

pub fn coefficients_summary(c: &Coefficients) -> KeyValues {
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio: Vec<f64> = c.big_lambda.iter().zip(&c.lambda).map(|(b, l)| b / l).collect();
    let abs_b: Vec<f64> = c.b.iter().map(|b| b.abs()).collect();
    let mut kv = KeyValues::new();
    kv.text("nodes", c.w.len())
        .num("min_w", min(&c.w))
        .num("max_w", max(&c.w))
        .num("min_lambda", min(&c.lambda))
        .num("max_big_lambda", max(&c.big_lambda))
        .num("max_ellipticity_ratio", max(&ratio))
        .num("max_abs_b", max(&abs_b))
        .check("elliptic", min(&c.lambda) > 0.0);
    kv
}

pub fn flux_summary(f: &FluxCheck, tol: f64) -> KeyValues {
    let mut kv = KeyValues::new();
    kv.num("lhs", f.lhs)
        .num("rhs", f.rhs)
        .num("absolute_residual", f.absolute_residual)
        .num("relative_residual", f.relative_residual)
        .num("scale", f.scale)
        .num("scaled_residual", f.scaled_residual())
        .num("tolerance", tol)
        .check("flux", f.scaled_residual() <= tol);
    kv
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use kgraph::{FieldTag, Grid};

    use super::*;

    #[test]
    fn solution_header_and_rows() {
        let grid = Arc::new(Grid::radial(Shape::disc(0.8).unwrap(), 2, 8).unwrap());
        let u = ScalarField::constant(grid.clone(), 0.5, FieldTag::Height);
        let text = solution_file(&u, 2);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "KGRAPH 1");
        assert_eq!(lines[1], "radial 2 8 0 8.0000000000000004e-1");
        assert_eq!(lines.len(), 2 + grid.len());
        assert_eq!(lines[2].parse::<f64>().unwrap(), 0.5);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -4.021238596594935, 1e-300, 123456789.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn key_values_keep_order() {
        let mut kv = KeyValues::new();
        kv.text("b", 1).check("a", false);
        assert_eq!(kv.render(), "b = 1\na = FAIL\n");
    }
}
