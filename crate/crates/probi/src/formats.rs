//! On-disk formats: plain point files, JSON-lines node files and coreset
//! files (node lines plus a `#meta` header).
//!
//! Readers are streaming iterators so a file is consumed in one pass.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use probi_core::{CoresetNode, Point, ProbabilisticNode, Realization};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Relative tolerance for the `total_weight` check on coreset files.
pub const META_TOLERANCE: f64 = 1e-9;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| HarnessError::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

/// Splits on commas and/or whitespace.
pub fn parse_coords(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(format!("non-finite coordinate {t:?}")),
            Err(_) => Err(format!("invalid number {t:?}")),
        })
        .collect()
}

/// Iterator over the points of a point file.
pub struct PointReader<R> {
    lines: Lines<R>,
    path: PathBuf,
    line: usize,
    dim: Option<usize>,
}

impl<R: BufRead> PointReader<R> {
    pub fn new(reader: R, path: impl Into<PathBuf>) -> Self {
        PointReader {
            lines: reader.lines(),
            path: path.into(),
            line: 0,
            dim: None,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    fn parse_error(&self, message: impl Into<String>) -> HarnessError {
        HarnessError::Parse {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }
}

impl PointReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        Ok(PointReader::new(open(path)?, path))
    }
}

impl<R: BufRead> Iterator for PointReader<R> {
    type Item = Result<Point>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(HarnessError::io(&self.path, e))),
            };
            self.line += 1;
            let text = text.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let coords = match parse_coords(text) {
                Ok(c) => c,
                Err(m) => return Some(Err(self.parse_error(m))),
            };
            match self.dim {
                None => self.dim = Some(coords.len()),
                Some(d) if d != coords.len() => {
                    return Some(Err(HarnessError::Dimension {
                        path: self.path.clone(),
                        line: self.line,
                        expected: d,
                        found: coords.len(),
                    }))
                }
                _ => {}
            }
            return Some(Point::new(coords).map_err(|e| self.parse_error(e.to_string())));
        }
    }
}

/// Reads a whole point file; it must contain at least one point.
pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    let points = PointReader::open(path)?.collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        return Err(HarnessError::Parse {
            path: path.into(),
            line: 0,
            message: "no data lines".into(),
        });
    }
    Ok(points)
}

pub fn write_points<W: Write>(
    out: &mut W,
    header: Option<&str>,
    points: &[Point],
) -> io::Result<()> {
    if let Some(h) = header {
        for line in h.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    for p in points {
        let mut first = true;
        for c in p.coords() {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            // Shortest round-trip representation.
            write!(out, "{c:?}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub p: f64,
    pub x: Vec<f64>,
}

/// One line of a node or coreset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    pub realizations: Vec<RealizationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coreset_weight: Option<f64>,
}

fn unit_weight() -> f64 {
    1.0
}

impl NodeRecord {
    pub fn from_node(node: &ProbabilisticNode, coreset_weight: Option<f64>) -> Self {
        NodeRecord {
            id: node.id().to_owned(),
            weight: node.weight(),
            realizations: node
                .realizations()
                .iter()
                .map(|r| RealizationRecord {
                    p: r.probability(),
                    x: r.point().coords().to_vec(),
                })
                .collect(),
            coreset_weight,
        }
    }

    pub fn into_node(self) -> probi_core::Result<CoresetNode> {
        let realizations = self
            .realizations
            .into_iter()
            .map(|r| Realization::new(Point::new(r.x)?, r.p))
            .collect::<probi_core::Result<Vec<_>>>()?;
        let node = ProbabilisticNode::new(self.id, self.weight, realizations)?;
        match self.coreset_weight {
            None => Ok(CoresetNode::raw(node)),
            Some(w) => CoresetNode::new(Arc::new(node), w),
        }
    }
}

// Borrowing twin of `NodeRecord` so writing does not copy coordinates.
#[derive(Serialize)]
struct RealizationRef<'a> {
    p: f64,
    x: &'a [f64],
}

#[derive(Serialize)]
struct NodeRef<'a> {
    id: &'a str,
    weight: f64,
    realizations: Vec<RealizationRef<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coreset_weight: Option<f64>,
}

pub fn write_node<W: Write>(
    out: &mut W,
    node: &ProbabilisticNode,
    coreset_weight: Option<f64>,
) -> io::Result<()> {
    let record = NodeRef {
        id: node.id(),
        weight: node.weight(),
        realizations: node
            .realizations()
            .iter()
            .map(|r| RealizationRef {
                p: r.probability(),
                x: r.point().coords(),
            })
            .collect(),
        coreset_weight,
    };
    serde_json::to_writer(&mut *out, &record)?;
    out.write_all(b"\n")
}

/// Header of a coreset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetFileMeta {
    pub k: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub sample_constant: f64,
    pub bucket_capacity: usize,
    /// Σ coreset weights of the body.
    pub total_weight: f64,
    /// Number of lines in the body.
    pub coreset_size: usize,
    /// Number of nodes the coreset summarises.
    pub source_nodes: u64,
}

const META_PREFIX: &str = "#meta ";

pub fn write_coreset<W: Write>(
    out: &mut W,
    meta: &CoresetFileMeta,
    nodes: &[CoresetNode],
) -> io::Result<()> {
    let header = serde_json::to_string(meta)?;
    writeln!(out, "{META_PREFIX}{header}")?;
    for n in nodes {
        write_node(out, n.node(), Some(n.coreset_weight()))?;
    }
    Ok(())
}

/// Iterator over a node file or coreset file.
///
/// Nodes without a `coreset_weight` field come out as raw nodes whose
/// coreset weight is their own weight.
pub struct NodeReader<R> {
    lines: Lines<R>,
    path: PathBuf,
    line: usize,
    dim: Option<usize>,
    meta: Option<CoresetFileMeta>,
    peeked: Option<Result<CoresetNode>>,
}

impl<R: BufRead> NodeReader<R> {
    /// Reads up to the first node so that a `#meta` header is available.
    pub fn new(reader: R, path: impl Into<PathBuf>) -> Self {
        let mut r = NodeReader {
            lines: reader.lines(),
            path: path.into(),
            line: 0,
            dim: None,
            meta: None,
            peeked: None,
        };
        r.peeked = r.advance();
        r
    }

    pub fn meta(&self) -> Option<&CoresetFileMeta> {
        self.meta.as_ref()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn parse_error(&self, message: impl Into<String>) -> HarnessError {
        HarnessError::Parse {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    fn advance(&mut self) -> Option<Result<CoresetNode>> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(HarnessError::io(&self.path, e))),
            };
            self.line += 1;
            let text = text.trim();
            if let Some(json) = text.strip_prefix(META_PREFIX) {
                if self.meta.is_some() || self.dim.is_some() {
                    return Some(Err(self.parse_error("#meta header must be the first line")));
                }
                match serde_json::from_str(json) {
                    Ok(m) => self.meta = Some(m),
                    Err(e) => return Some(Err(self.parse_error(format!("bad #meta header: {e}")))),
                }
                continue;
            }
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let record: NodeRecord = match serde_json::from_str(text) {
                Ok(r) => r,
                Err(e) => return Some(Err(self.parse_error(e.to_string()))),
            };
            for r in &record.realizations {
                match self.dim {
                    None => self.dim = Some(r.x.len()),
                    Some(expected) if expected != r.x.len() => {
                        return Some(Err(HarnessError::Dimension {
                            path: self.path.clone(),
                            line: self.line,
                            expected,
                            found: r.x.len(),
                        }))
                    }
                    _ => {}
                }
            }
            return Some(
                record
                    .into_node()
                    .map_err(|source| HarnessError::InvalidNode {
                        path: self.path.clone(),
                        line: self.line,
                        source,
                    }),
            );
        }
    }
}

impl NodeReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        Ok(NodeReader::new(open(path)?, path))
    }
}

impl<R: BufRead> Iterator for NodeReader<R> {
    type Item = Result<CoresetNode>;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.peeked.take()?;
        self.peeked = self.advance();
        Some(out)
    }
}

/// A fully loaded node or coreset file.
#[derive(Debug, Clone)]
pub struct NodeSet {
    pub nodes: Vec<CoresetNode>,
    pub meta: Option<CoresetFileMeta>,
}

/// Loads a node or coreset file, checking coreset headers against the body.
pub fn read_nodes(path: &Path) -> Result<NodeSet> {
    let mut reader = NodeReader::open(path)?;
    let nodes = reader.by_ref().collect::<Result<Vec<_>>>()?;
    let meta = reader.meta.take();
    if nodes.is_empty() {
        return Err(HarnessError::Parse {
            path: path.into(),
            line: reader.line,
            message: "no nodes".into(),
        });
    }
    if let Some(m) = &meta {
        let total: f64 = nodes.iter().map(|n| n.coreset_weight()).sum();
        let scale = m.total_weight.abs().max(total.abs()).max(f64::MIN_POSITIVE);
        if m.coreset_size != nodes.len() || (total - m.total_weight).abs() > META_TOLERANCE * scale
        {
            return Err(HarnessError::Parse {
                path: path.into(),
                line: 1,
                message: format!(
                    "#meta totals do not match body: header says {} nodes of weight {}, body has {} of weight {}",
                    m.coreset_size,
                    m.total_weight,
                    nodes.len(),
                    total
                ),
            });
        }
    }
    Ok(NodeSet { nodes, meta })
}

pub fn write_nodes<W: Write>(out: &mut W, nodes: &[ProbabilisticNode]) -> io::Result<()> {
    nodes.iter().try_for_each(|n| write_node(out, n, None))
}
