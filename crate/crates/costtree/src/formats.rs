//! Plain-text file formats: tree models, physical networks, sample
//! tables, learned trees, exact-cover subset lists, and study configs.
//! Node indices are 1-based on disk and 0-based in memory; `#` starts a
//! comment. Writers are deterministic, so equal inputs give
//! byte-identical files, and every float is printed with the shortest
//! string that parses back to the same value.

use crate::inference::Protocol;
use crate::learn::LearnedTree;
use crate::model::{ModelError, SampleSet, TreeModel};
use crate::physnet::{NetworkError, PhysicalNetwork};
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn parse_err(line: u64, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

/// Lines with comments stripped and blanks dropped, tagged with their
/// 1-based position in the original text.
fn significant_lines(text: &str) -> impl Iterator<Item = (u64, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((k as u64 + 1, line))
        }
    })
}

fn parse_tok<T: FromStr>(line: u64, tok: &str, what: &str) -> Result<T, FormatError> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot read {what} from {tok:?}")))
}

/// Converts a 1-based on-disk node label into a 0-based index.
fn node_index(line: u64, label: usize, d: usize) -> Result<usize, FormatError> {
    if label == 0 || label > d {
        return Err(parse_err(line, format!("node label {label} outside 1..={d}")));
    }
    Ok(label - 1)
}

fn fields(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

/// Model file: header `d`, then d lines `i p0` giving P(X_i = 0), then
/// d-1 lines `i j p00 p01 p10 p11` giving the edge joint with the first
/// value index at node i.
pub fn parse_model(text: &str) -> Result<TreeModel, FormatError> {
    let mut lines = significant_lines(text);
    let (hline, header) =
        lines.next().ok_or_else(|| parse_err(0, "empty model file"))?;
    let d: usize = parse_tok(hline, header, "node count")?;
    if d == 0 {
        return Err(parse_err(hline, "node count must be positive"));
    }
    let mut node = vec![[0.0f64; 2]; d];
    for want in 1..=d {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {d} node lines")))?;
        let f = fields(line);
        if f.len() != 2 {
            return Err(parse_err(ln, "node line must be `i p0`"));
        }
        let label: usize = parse_tok(ln, f[0], "node label")?;
        if label != want {
            return Err(parse_err(ln, format!("expected node {want}, got {label}")));
        }
        let p0: f64 = parse_tok(ln, f[1], "probability")?;
        node[want - 1] = [p0, 1.0 - p0];
    }
    let mut edges = Vec::with_capacity(d.saturating_sub(1));
    let mut pair = Vec::with_capacity(d.saturating_sub(1));
    for (ln, line) in lines {
        let f = fields(line);
        if f.len() != 6 {
            return Err(parse_err(ln, "edge line must be `i j p00 p01 p10 p11`"));
        }
        let i = node_index(ln, parse_tok(ln, f[0], "node label")?, d)?;
        let j = node_index(ln, parse_tok(ln, f[1], "node label")?, d)?;
        let mut m = [[0.0f64; 2]; 2];
        for (k, slot) in m.iter_mut().flatten().enumerate() {
            *slot = parse_tok(ln, f[2 + k], "probability")?;
        }
        edges.push((i, j));
        pair.push(m);
    }
    if edges.len() + 1 != d {
        return Err(parse_err(0, format!("expected {} edge lines, got {}", d - 1, edges.len())));
    }
    Ok(TreeModel::new(d, edges, node, pair)?)
}

pub fn write_model(model: &TreeModel) -> String {
    let d = model.dimension();
    let mut out = String::new();
    let _ = writeln!(out, "{d}");
    for i in 0..d {
        let _ = writeln!(out, "{} {}", i + 1, model.node_marginal(i)[0]);
    }
    for (k, &(i, j)) in model.edges().iter().enumerate() {
        let m = model.edge_marginal(k);
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            i + 1,
            j + 1,
            m[0][0],
            m[0][1],
            m[1][0],
            m[1][1]
        );
    }
    out
}

/// Network file: header `d`, then one line `i j cost` per physical link.
pub fn parse_network(text: &str) -> Result<PhysicalNetwork, FormatError> {
    let mut lines = significant_lines(text);
    let (hline, header) =
        lines.next().ok_or_else(|| parse_err(0, "empty network file"))?;
    let d: usize = parse_tok(hline, header, "node count")?;
    let mut links = Vec::new();
    for (ln, line) in lines {
        let f = fields(line);
        if f.len() != 3 {
            return Err(parse_err(ln, "link line must be `i j cost`"));
        }
        let i = node_index(ln, parse_tok(ln, f[0], "node label")?, d)?;
        let j = node_index(ln, parse_tok(ln, f[1], "node label")?, d)?;
        let cost: f64 = parse_tok(ln, f[2], "cost")?;
        links.push((i, j, cost));
    }
    Ok(PhysicalNetwork::new(d, links)?)
}

pub fn write_network(net: &PhysicalNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", net.dimension());
    for &(i, j, c) in net.links() {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, c);
    }
    out
}

/// Samples file: CSV, one row per sample, one 0/1 field per node.
pub fn parse_samples(text: &str) -> Result<SampleSet, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut d = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if data.is_empty() {
            d = rec.len();
        }
        for field in rec.iter() {
            data.push(match field {
                "0" => 0u8,
                "1" => 1u8,
                _ => {
                    return Err(parse_err(
                        line,
                        format!("sample value must be 0 or 1, got {field:?}"),
                    ))
                }
            });
        }
    }
    if data.is_empty() {
        return Err(parse_err(0, "no sample rows"));
    }
    Ok(SampleSet::new(d, data)?)
}

pub fn write_samples(samples: &SampleSet) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in 0..samples.len() {
        w.write_record(samples.row(r).iter().map(|&v| if v == 0 { "0" } else { "1" }))
            .expect("in-memory csv write cannot fail");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Learned-tree file: a `#`-prefixed metadata line carrying algorithm,
/// gamma, beta, diameter, and objective, then one `i j` line per edge.
pub fn write_tree(tree: &LearnedTree, objective: f64) -> String {
    let beta = match tree.beta {
        Some(b) => format!("{b}"),
        None => "null".to_string(),
    };
    let mut out = format!(
        "# {{\"algorithm\":\"{}\",\"gamma\":{},\"beta\":{},\"diameter\":{},\"objective\":{}}}\n",
        tree.algorithm.label(),
        tree.gamma,
        beta,
        tree.diameter,
        objective
    );
    for &(i, j) in &tree.edges {
        let _ = writeln!(out, "{} {}", i + 1, j + 1);
    }
    out
}

/// Edge list read back from a learned-tree file. Edges are 0-based and
/// sorted; whether they span a tree is the consumer's check.
#[derive(Debug, Clone)]
pub struct TreeFile {
    pub edges: Vec<(usize, usize)>,
    /// First comment line of the file, without the leading `#`.
    pub metadata: Option<String>,
}

pub fn parse_tree(text: &str) -> Result<TreeFile, FormatError> {
    let metadata = text
        .lines()
        .find_map(|l| l.trim().strip_prefix('#'))
        .map(|m| m.trim().to_string());
    let mut edges = Vec::new();
    let mut max_label = 0usize;
    for (ln, line) in significant_lines(text) {
        let f = fields(line);
        if f.len() != 2 {
            return Err(parse_err(ln, "edge line must be `i j`"));
        }
        let i: usize = parse_tok(ln, f[0], "node label")?;
        let j: usize = parse_tok(ln, f[1], "node label")?;
        if i == 0 || j == 0 || i == j {
            return Err(parse_err(ln, format!("bad edge ({i}, {j})")));
        }
        max_label = max_label.max(i).max(j);
        edges.push((i.min(j) - 1, i.max(j) - 1));
    }
    if edges.is_empty() {
        return Err(parse_err(0, "no edge lines"));
    }
    if edges.len() + 1 != max_label {
        return Err(parse_err(
            0,
            format!("{} edges cannot span {} nodes", edges.len(), max_label),
        ));
    }
    edges.sort_unstable();
    Ok(TreeFile { edges, metadata })
}

/// Subsets file: one triple of positive element labels per line,
/// separated by whitespace or commas.
pub fn parse_subsets(text: &str) -> Result<Vec<[u32; 3]>, FormatError> {
    let mut subsets = Vec::new();
    for (ln, line) in significant_lines(text) {
        let toks: Vec<&str> =
            line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        if toks.len() != 3 {
            return Err(parse_err(ln, "subset line must hold exactly three elements"));
        }
        let mut t = [0u32; 3];
        for (slot, tok) in t.iter_mut().zip(&toks) {
            *slot = parse_tok(ln, tok, "element label")?;
        }
        subsets.push(t);
    }
    if subsets.is_empty() {
        return Err(parse_err(0, "no subset lines"));
    }
    Ok(subsets)
}

/// Where a study gets its model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSource {
    /// The built-in 20-node scenario tree.
    Builtin,
    Path(String),
}

/// Where a study gets its physical network.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSource {
    /// The built-in 20-node line with the given cost scale.
    BuiltinLine { kappa: f64 },
    Path(String),
}

/// A study configuration file: flat `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyFile {
    pub model: ModelSource,
    pub network: NetworkSource,
    /// Learner choice; a missing key defers to the study kind's default.
    pub algorithm: Option<Protocol>,
    pub gammas: Vec<f64>,
    pub beta: f64,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub out_dir: Option<String>,
}

fn parse_list<T: FromStr>(line: u64, val: &str, what: &str) -> Result<Vec<T>, FormatError> {
    val.split(',')
        .map(|t| parse_tok(line, t.trim(), what))
        .collect()
}

/// Parses `key = value` study configuration text. Required keys:
/// `gammas`, `sample_sizes`, `trials`, `seed`. Optional: `model` (path or
/// `builtin`, the default), `network` (path or `line20`, the default),
/// `kappa` (cost scale of the built-in line, default 1), `algorithm`
/// (`async`/`sync`), `beta` (default 1), `out` (output directory).
pub fn parse_study_config(text: &str) -> Result<StudyFile, FormatError> {
    let mut model = ModelSource::Builtin;
    let mut network_key: Option<(u64, String)> = None;
    let mut kappa: Option<(u64, f64)> = None;
    let mut algorithm = None;
    let mut gammas: Option<Vec<f64>> = None;
    let mut beta = crate::experiments::REFERENCE_BETA;
    let mut sample_sizes: Option<Vec<usize>> = None;
    let mut trials: Option<usize> = None;
    let mut seed: Option<u64> = None;
    let mut out_dir = None;
    let mut seen = std::collections::HashSet::new();

    for (ln, line) in significant_lines(text) {
        let Some((key, val)) = line.split_once('=') else {
            return Err(parse_err(ln, "expected `key = value`"));
        };
        let (key, val) = (key.trim(), val.trim());
        if val.is_empty() {
            return Err(parse_err(ln, format!("empty value for {key}")));
        }
        if !seen.insert(key.to_string()) {
            return Err(parse_err(ln, format!("duplicate key {key}")));
        }
        match key {
            "model" => {
                if val != "builtin" {
                    model = ModelSource::Path(val.to_string());
                }
            }
            "network" => network_key = Some((ln, val.to_string())),
            "kappa" => kappa = Some((ln, parse_tok(ln, val, "cost scale")?)),
            "algorithm" => {
                algorithm = Some(match val {
                    "async" => Protocol::Async,
                    "sync" => Protocol::Sync,
                    _ => {
                        return Err(parse_err(
                            ln,
                            format!("algorithm must be async or sync, got {val:?}"),
                        ))
                    }
                })
            }
            "gammas" => gammas = Some(parse_list(ln, val, "gamma")?),
            "beta" => beta = parse_tok(ln, val, "beta")?,
            "sample_sizes" => sample_sizes = Some(parse_list(ln, val, "sample size")?),
            "trials" => trials = Some(parse_tok(ln, val, "trial count")?),
            "seed" => seed = Some(parse_tok(ln, val, "seed")?),
            "out" => out_dir = Some(val.to_string()),
            _ => return Err(parse_err(ln, format!("unknown key {key}"))),
        }
    }

    let network = match network_key {
        Some((_, path)) if path != "line20" => {
            if let Some((kline, _)) = kappa {
                return Err(parse_err(
                    kline,
                    "kappa applies only to the built-in line network",
                ));
            }
            NetworkSource::Path(path)
        }
        _ => NetworkSource::BuiltinLine { kappa: kappa.map_or(1.0, |(_, k)| k) },
    };
    let need = |ln: u64, key: &str| parse_err(ln, format!("missing required key {key}"));
    Ok(StudyFile {
        model,
        network,
        algorithm,
        gammas: gammas.ok_or_else(|| need(0, "gammas"))?,
        beta,
        sample_sizes: sample_sizes.ok_or_else(|| need(0, "sample_sizes"))?,
        trials: trials.ok_or_else(|| need(0, "trials"))?,
        seed: seed.ok_or_else(|| need(0, "seed"))?,
        out_dir,
    })
}
