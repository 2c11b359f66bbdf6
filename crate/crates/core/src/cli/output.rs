//! Text output formats: solution snapshots, CSV tables and legacy VTK.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh_fem::{DiscreteField, Discretization};

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp: PathBuf = path.with_file_name(format!(".{file_name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(&tmp, e));
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table kept as text; every numeric cell uses [`num`].
#[derive(Debug, Clone)]
pub struct CsvTable {
    text: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "CSV row width mismatch");
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.text)
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }
}

const SNAPSHOT_MAGIC: &str = "# nozzleflow snapshot v1";

/// Solution snapshot: mesh description, physical node coordinates and the
/// potential at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub config_hash: String,
    pub dim: usize,
    pub transverse_cells: usize,
    pub axial_cells: usize,
    pub half_length: f64,
    pub coordinates: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn capture(disc: &Discretization, field: &DiscreteField, config_hash: &str) -> Self {
        let mesh = disc.mesh();
        Self {
            config_hash: config_hash.to_string(),
            dim: mesh.dim(),
            transverse_cells: mesh.transverse_cells(),
            axial_cells: mesh.axial_cells(),
            half_length: mesh.half_length(),
            coordinates: (0..mesh.node_count())
                .map(|n| mesh.node_physical(disc.map(), n))
                .collect(),
            values: field.values().to_vec(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{SNAPSHOT_MAGIC}");
        let _ = writeln!(s, "config_sha256 {}", self.config_hash);
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "transverse_cells {}", self.transverse_cells);
        let _ = writeln!(s, "axial_cells {}", self.axial_cells);
        let _ = writeln!(s, "half_length {}", num(self.half_length));
        let _ = writeln!(s, "nodes {}", self.values.len());
        for (x, v) in self.coordinates.iter().zip(&self.values) {
            for c in x {
                s.push_str(&num(*c));
                s.push(' ');
            }
            s.push_str(&num(*v));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let bad = |line: usize, message: &str| Error::Snapshot {
            line,
            message: message.to_string(),
        };
        match lines.next() {
            Some((_, l)) if l.trim() == SNAPSHOT_MAGIC => {}
            _ => return Err(bad(1, "missing snapshot header")),
        }
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (line, l) = lines.next().ok_or_else(|| bad(0, "truncated header"))?;
            match l.split_once(' ') {
                Some((k, v)) if k == key => Ok((line, v.trim().to_string())),
                _ => Err(bad(line, &format!("expected `{key}`"))),
            }
        };
        let (_, config_hash) = header("config_sha256")?;
        let mut int = |key: &str| -> Result<usize> {
            let (line, v) = header(key)?;
            v.parse().map_err(|_| bad(line, &format!("bad `{key}`")))
        };
        let dim = int("dim")?;
        let transverse_cells = int("transverse_cells")?;
        let axial_cells = int("axial_cells")?;
        let (line, v) = header("half_length")?;
        let half_length: f64 = v.parse().map_err(|_| bad(line, "bad `half_length`"))?;
        let (line, v) = header("nodes")?;
        let count: usize = v.parse().map_err(|_| bad(line, "bad `nodes`"))?;
        if !(2..=3).contains(&dim) {
            return Err(bad(3, "dim must be 2 or 3"));
        }
        let mut coordinates = Vec::with_capacity(count);
        let mut values = Vec::with_capacity(count);
        for (line, l) in lines.by_ref().take(count) {
            let nums: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad(line, "bad number")))
                .collect::<Result<_>>()?;
            if nums.len() != dim + 1 {
                return Err(bad(line, "wrong number of columns"));
            }
            values.push(nums[dim]);
            coordinates.push(nums[..dim].to_vec());
        }
        if values.len() != count {
            return Err(bad(0, "fewer node rows than declared"));
        }
        Ok(Self {
            config_hash,
            dim,
            transverse_cells,
            axial_cells,
            half_length,
            coordinates,
            values,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Rebuilds the field on a matching discretization.
    pub fn to_field(&self, disc: &Discretization) -> Result<DiscreteField> {
        let mesh = disc.mesh();
        if mesh.dim() != self.dim
            || mesh.transverse_cells() != self.transverse_cells
            || mesh.axial_cells() != self.axial_cells
        {
            return Err(Error::InvalidResolution(
                "snapshot mesh does not match the discretization".into(),
            ));
        }
        Ok(DiscreteField::from_values(mesh, self.values.clone()))
    }
}

/// Legacy ASCII VTK structured grid with the potential, nodal velocity and
/// Mach number (−1 where the speed exceeds the vacuum limit).
pub fn vtk_structured_grid(disc: &Discretization, field: &DiscreteField) -> String {
    let mesh = disc.mesh();
    let dim = mesh.dim();
    let m = mesh.transverse_cells() + 1;
    let dims = if dim == 2 {
        [m, 1, mesh.axial_cells() + 1]
    } else {
        [m, m, mesh.axial_cells() + 1]
    };
    let n = mesh.node_count();
    let rel = disc.energy_density().theta().base();
    let velocity = disc.nodal_gradients(field);

    let mut s = String::with_capacity(n * 160);
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("nozzleflow potential flow\nASCII\nDATASET STRUCTURED_GRID\n");
    let _ = writeln!(s, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
    let _ = writeln!(s, "POINTS {n} double");
    for node in 0..n {
        let x = mesh.node_physical(disc.map(), node);
        let p = if dim == 2 {
            [x[0], 0.0, x[1]]
        } else {
            [x[0], x[1], x[2]]
        };
        let _ = writeln!(s, "{} {} {}", num(p[0]), num(p[1]), num(p[2]));
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    s.push_str("SCALARS phi double 1\nLOOKUP_TABLE default\n");
    for v in field.values() {
        let _ = writeln!(s, "{}", num(*v));
    }
    s.push_str("VECTORS velocity double\n");
    for g in &velocity {
        let v = if dim == 2 {
            [g[0], 0.0, g[1]]
        } else {
            [g[0], g[1], g[2]]
        };
        let _ = writeln!(s, "{} {} {}", num(v[0]), num(v[1]), num(v[2]));
    }
    s.push_str("SCALARS mach double 1\nLOOKUP_TABLE default\n");
    for g in &velocity {
        let q = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        let _ = writeln!(s, "{}", num(rel.mach(q).unwrap_or(-1.0)));
    }
    s
}
