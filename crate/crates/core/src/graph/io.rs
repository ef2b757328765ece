//! Dataset directory format.
//!
//! * `edges.csv`: one `u,v` pair per line, 0-indexed.
//! * `features.csv`: header `n,d`, then n rows of d comma-separated reals.
//! * `labels.csv` (optional): one class id per line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use super::{Dataset, EdgeListStats, Graph};
use crate::error::{Error, Result};
use crate::ndmath::Tensor;

/// What was cleaned up while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub duplicate_edges: usize,
    pub self_loops: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_fields<T: std::str::FromStr>(path: &Path, line: usize, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|f| {
            f.trim()
                .parse::<T>()
                .map_err(|_| parse_err(path, line, format!("cannot parse {f:?}")))
        })
        .collect()
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(Dataset, LoadReport)> {
    let dir = dir.as_ref();
    let features = read_features(&dir.join("features.csv"))?;
    let n = features.rows();

    let edges_path = dir.join("edges.csv");
    let mut edges = Vec::new();
    for (no, line) in lines(&read(&edges_path)?) {
        let f: Vec<usize> = parse_fields(&edges_path, no, line)?;
        let [u, v] = f[..] else {
            return Err(parse_err(&edges_path, no, "expected `u,v`"));
        };
        if u >= n || v >= n {
            return Err(parse_err(
                &edges_path,
                no,
                format!("node index out of range for n={n}"),
            ));
        }
        edges.push((u, v));
    }
    let (
        graph,
        EdgeListStats {
            duplicates,
            self_loops,
        },
    ) = Graph::from_edges(n, &edges)?;
    if duplicates + self_loops > 0 {
        warn!(
            "{}: dropped {duplicates} duplicate edges and {self_loops} self-loops",
            edges_path.display()
        );
    }

    let labels_path = dir.join("labels.csv");
    let labels = if labels_path.exists() {
        let labels = read_labels(&labels_path)?;
        if labels.len() != n {
            return Err(parse_err(
                &labels_path,
                labels.len(),
                format!("{} labels for {n} nodes", labels.len()),
            ));
        }
        Some(labels)
    } else {
        None
    };

    let ds = Dataset::new(graph, features, labels)?;
    Ok((
        ds,
        LoadReport {
            duplicate_edges: duplicates,
            self_loops,
        },
    ))
}

fn read_features(path: &Path) -> Result<Tensor> {
    let text = read(path)?;
    let mut it = lines(&text);
    let Some((no, header)) = it.next() else {
        return Err(parse_err(path, 1, "missing `n,d` header"));
    };
    let hd: Vec<usize> = parse_fields(path, no, header)?;
    let [n, d] = hd[..] else {
        return Err(parse_err(path, no, "header must be `n,d`"));
    };
    let mut data = Vec::with_capacity(n * d);
    let mut rows = 0;
    for (no, line) in it {
        let row: Vec<f64> = parse_fields(path, no, line)?;
        if row.len() != d {
            return Err(parse_err(
                path,
                no,
                format!("expected {d} values, got {}", row.len()),
            ));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(path, no, "non-finite feature value"));
        }
        data.extend(row);
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(
            path,
            rows + 1,
            format!("header says {n} rows, found {rows}"),
        ));
    }
    Tensor::new(n, d, data)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    lines(&read(path)?)
        .map(|(no, l)| {
            l.parse::<usize>()
                .map_err(|_| parse_err(path, no, format!("bad label {l:?}")))
        })
        .collect()
}

fn write(path: PathBuf, contents: String) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_edges(path: impl AsRef<Path>, g: &Graph) -> Result<()> {
    let mut s = String::new();
    for (u, v) in g.edges() {
        writeln!(s, "{u},{v}").unwrap();
    }
    write(path.as_ref().to_path_buf(), s)
}

/// Writes `edges.csv`, `features.csv` and (when present) `labels.csv` into `dir`.
pub fn save_dataset(dir: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_edges(dir.join("edges.csv"), &ds.graph)?;

    let mut s = format!("{},{}\n", ds.features.rows(), ds.features.cols());
    push_rows(&mut s, &ds.features);
    write(dir.join("features.csv"), s)?;

    if let Some(labels) = &ds.labels {
        let mut s = String::new();
        for l in labels {
            writeln!(s, "{l}").unwrap();
        }
        write(dir.join("labels.csv"), s)?;
    }
    Ok(())
}

fn push_rows(s: &mut String, t: &Tensor) {
    for i in 0..t.rows() {
        for (j, x) in t.row(i).iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            write!(s, "{x}").unwrap();
        }
        s.push('\n');
    }
}

/// Plain matrix CSV, no header.
pub fn write_dense_csv(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let mut s = String::new();
    push_rows(&mut s, t);
    write(path.as_ref().to_path_buf(), s)
}

pub fn read_dense_csv(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (no, line) in lines(&text) {
        let row: Vec<f64> = parse_fields(path, no, line)?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(parse_err(
                    path,
                    no,
                    format!("expected {c} values, got {}", row.len()),
                ))
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    Tensor::new(rows, cols.unwrap_or(0), data)
}
