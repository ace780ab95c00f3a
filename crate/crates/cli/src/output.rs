//! Atomic file writers and CSV helpers.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use edgeroles::featlearn::EntityKind;
use edgeroles::Graph;
use ndarray::Array2;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Output directory that writes every file through a temp file + rename.
#[derive(Clone, Debug)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let target = self.path(name);
        let dir = target.parent().unwrap_or(&self.root).to_path_buf();
        fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        let mut tmp = NamedTempFile::new_in(&dir).map_err(CliError::io(&dir))?;
        tmp.write_all(contents.as_bytes()).map_err(CliError::io(&target))?;
        tmp.flush().map_err(CliError::io(&target))?;
        tmp.persist(&target).map_err(|e| CliError::Io {
            path: target.clone(),
            source: e.error,
        })?;
        Ok(target)
    }
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Leading identifier columns of a per-entity table.
#[derive(Clone, Copy)]
pub enum RowIds<'a> {
    Edges(&'a Graph),
    Nodes(&'a Graph),
    Plain,
}

impl<'a> RowIds<'a> {
    pub fn for_entity(g: &'a Graph, kind: EntityKind) -> Self {
        match kind {
            EntityKind::Edge => RowIds::Edges(g),
            EntityKind::Node => RowIds::Nodes(g),
        }
    }

    fn header(&self) -> &'static str {
        match self {
            RowIds::Edges(_) => "src,dst",
            RowIds::Nodes(_) => "node",
            RowIds::Plain => "row",
        }
    }

    fn cells(&self, i: usize) -> String {
        match self {
            RowIds::Edges(g) => {
                let (u, v) = g.edge(i);
                format!("{},{}", field(g.label(u)), field(g.label(v)))
            }
            RowIds::Nodes(g) => field(g.label(i)),
            RowIds::Plain => i.to_string(),
        }
    }
}

/// Dense CSV with a header of id columns followed by `names`.
pub fn matrix_csv(x: &Array2<f64>, names: &[String], ids: RowIds<'_>) -> String {
    let mut s = String::new();
    s.push_str(ids.header());
    for n in names {
        s.push(',');
        s.push_str(&field(n));
    }
    s.push('\n');
    for (i, row) in x.rows().into_iter().enumerate() {
        s.push_str(&ids.cells(i));
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// `row col value` triplets of the nonzero entries, 0-based.
pub fn triplets(x: &Array2<f64>) -> String {
    let mut s = String::from("row col value\n");
    for ((i, j), &v) in x.indexed_iter() {
        if v != 0.0 {
            let _ = writeln!(s, "{i} {j} {v}");
        }
    }
    s
}

pub fn role_names(prefix: &str, r: usize) -> Vec<String> {
    (0..r).map(|k| format!("{prefix}{k}")).collect()
}

/// Reads a numeric matrix from CSV or whitespace separated text. A first
/// line that does not parse as numbers is taken as a header.
pub fn read_matrix(path: &Path) -> CliResult<Array2<f64>> {
    let file = fs::File::open(path).map_err(CliError::io(path))?;
    let bad = |msg: String| CliError::Input {
        path: path.to_path_buf(),
        msg,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen_data_or_header = false;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|c| !c.is_empty())
            .map(str::parse::<f64>)
            .collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if !seen_data_or_header => {}
            Err(e) => return Err(bad(format!("line {}: {e}", lineno + 1))),
        }
        seen_data_or_header = true;
    }
    let f = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || f == 0 {
        return Err(bad("no numeric rows".into()));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != f) {
        return Err(bad(format!("row {} has {} columns, expected {f}", i + 1, rows[i].len())));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let m = flat.len() / f;
    Ok(Array2::from_shape_vec((m, f), flat).expect("rectangular rows"))
}
