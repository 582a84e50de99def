use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Edge = (usize, usize);

/// Undirected device connectivity. Edges are stored as `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct CouplingMap {
    num_qubits: usize,
    edges: BTreeSet<Edge>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    num_qubits: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<RawMap> for CouplingMap {
    type Error = Error;
    fn try_from(raw: RawMap) -> Result<Self> {
        CouplingMap::new(raw.num_qubits, raw.edges.into_iter().map(|[a, b]| (a, b)))
    }
}

impl From<CouplingMap> for RawMap {
    fn from(m: CouplingMap) -> Self {
        RawMap { num_qubits: m.num_qubits, edges: m.edges.iter().map(|&(a, b)| [a, b]).collect() }
    }
}

impl CouplingMap {
    /// Edges may be given in either orientation; repeats collapse.
    pub fn new(num_qubits: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::invalid("coupling map needs at least one qubit"));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for q in [a, b] {
                if q >= num_qubits {
                    return Err(Error::IndexOutOfRange { index: q, num_qubits });
                }
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop on qubit {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); num_qubits];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        Ok(CouplingMap { num_qubits, edges: set, adjacency })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Neighbours in ascending order.
    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::IndexOutOfRange { index: q, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    /// BFS distances from `src`; `None` marks unreachable qubits.
    pub fn distances_from(&self, src: usize) -> Result<Vec<Option<usize>>> {
        self.check(src)?;
        let mut dist = vec![None; self.num_qubits];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    /// Shortest-path length, `None` when disconnected.
    pub fn distance(&self, i: usize, j: usize) -> Result<Option<usize>> {
        self.check(j)?;
        Ok(self.distances_from(i)?[j])
    }

    /// Qubits within distance `k` of any of `sources` (sources included).
    pub fn ball(&self, sources: &[usize], k: usize) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = sources.iter().copied().collect();
        let mut layer: Vec<usize> = sources.to_vec();
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &layer {
                for &w in &self.adjacency[u] {
                    if seen.insert(w) {
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(0).map(|d| d.iter().all(Option::is_some)).unwrap_or(false)
    }

    /// Map on the first `n` qubits only.
    pub fn induced(&self, n: usize) -> Result<CouplingMap> {
        CouplingMap::new(n, self.edges.iter().copied().filter(|&(_, b)| b < n))
    }
}

impl fmt::Display for CouplingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} qubits, {} edges", self.num_qubits, self.edges.len())
    }
}

/// Generator parameters for the supported device families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Linear { num_qubits: usize },
    Grid { rows: usize, cols: usize },
    /// Grid with both diagonals in every cell whose `row + col` is odd.
    LocalGrid { rows: usize, cols: usize },
    /// `rows + 1` chains of `4 cols + 1` qubits joined by bridge qubits,
    /// optionally truncated to the first `num_qubits` indices.
    HeavyHex { rows: usize, cols: usize, #[serde(default)] num_qubits: Option<usize> },
    /// Eight-qubit rings joined to each horizontal and vertical neighbour by two links.
    Octagonal { rows: usize, cols: usize },
    FullyConnected { num_qubits: usize },
    /// Random spanning tree plus extra edges up to the requested mean degree.
    Random { num_qubits: usize, avg_degree: f64, seed: u64 },
    /// A named device layout.
    Preset { name: String },
}

impl Architecture {
    pub fn generate(&self) -> Result<CouplingMap> {
        generate_architecture(self)
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::invalid(format!("{name} must be positive")));
    }
    Ok(())
}

fn sized(n: usize) -> Result<()> {
    positive("qubit count", n)
}

pub fn generate_architecture(arch: &Architecture) -> Result<CouplingMap> {
    match *arch {
        Architecture::Linear { num_qubits: n } => {
            sized(n)?;
            CouplingMap::new(n, (1..n).map(|i| (i - 1, i)))
        }
        Architecture::Grid { rows, cols } => grid(rows, cols, false),
        Architecture::LocalGrid { rows, cols } => grid(rows, cols, true),
        Architecture::HeavyHex { rows, cols, num_qubits } => heavy_hex(rows, cols, num_qubits),
        Architecture::Octagonal { rows, cols } => octagonal(rows, cols),
        Architecture::FullyConnected { num_qubits: n } => {
            sized(n)?;
            CouplingMap::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
        }
        Architecture::Random { num_qubits, avg_degree, seed } => random(num_qubits, avg_degree, seed),
        Architecture::Preset { ref name } => preset(name),
    }
}

fn grid(rows: usize, cols: usize, diagonals: bool) -> Result<CouplingMap> {
    positive("rows", rows)?;
    positive("cols", cols)?;
    sized(rows * cols)?;
    let at = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((at(r, c), at(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((at(r, c), at(r + 1, c)));
            }
            if diagonals && r + 1 < rows && c + 1 < cols && (r + c) % 2 == 1 {
                edges.push((at(r, c), at(r + 1, c + 1)));
                edges.push((at(r, c + 1), at(r + 1, c)));
            }
        }
    }
    CouplingMap::new(rows * cols, edges)
}

fn heavy_hex(rows: usize, cols: usize, truncate: Option<usize>) -> Result<CouplingMap> {
    positive("rows", rows)?;
    positive("cols", cols)?;
    let chain = 4 * cols + 1;
    let mut edges = Vec::new();
    let mut next = 0usize;
    let mut prev_chain: Option<usize> = None;
    for r in 0..=rows {
        if let Some(start) = prev_chain {
            // bridges between chain r-1 (at `start`) and chain r (placed after the bridges)
            let offset = if (r - 1) % 2 == 0 { 0 } else { 2 };
            let positions: Vec<usize> = (offset..chain).step_by(4).collect();
            let chain_start = next + positions.len();
            for (b, &p) in positions.iter().enumerate() {
                let bridge = next + b;
                edges.push((start + p, bridge));
                edges.push((bridge, chain_start + p));
            }
            next = chain_start;
        }
        for p in 1..chain {
            edges.push((next + p - 1, next + p));
        }
        prev_chain = Some(next);
        next += chain;
    }
    let total = next;
    let n = truncate.unwrap_or(total);
    sized(n)?;
    if n > total {
        return Err(Error::invalid(format!("heavy-hex {rows}x{cols} has only {total} qubits, {n} requested")));
    }
    CouplingMap::new(n, edges.into_iter().filter(|&(a, b)| a < n && b < n))
}

fn octagonal(rows: usize, cols: usize) -> Result<CouplingMap> {
    positive("rows", rows)?;
    positive("cols", cols)?;
    sized(8 * rows * cols)?;
    let at = |r: usize, c: usize, pos: usize| (r * cols + c) * 8 + pos;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            for pos in 0..8 {
                edges.push((at(r, c, pos), at(r, c, (pos + 1) % 8)));
            }
            if c + 1 < cols {
                edges.push((at(r, c, 2), at(r, c + 1, 7)));
                edges.push((at(r, c, 3), at(r, c + 1, 6)));
            }
            if r + 1 < rows {
                edges.push((at(r, c, 5), at(r + 1, c, 0)));
                edges.push((at(r, c, 4), at(r + 1, c, 1)));
            }
        }
    }
    CouplingMap::new(8 * rows * cols, edges)
}

fn random(n: usize, avg_degree: f64, seed: u64) -> Result<CouplingMap> {
    sized(n)?;
    if !(avg_degree.is_finite() && avg_degree >= 0.0) {
        return Err(Error::invalid("average degree must be a nonnegative number"));
    }
    let max_edges = n * (n - 1) / 2;
    let target = ((n as f64 * avg_degree / 2.0).round() as usize).clamp(n - 1, max_edges);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = (order[i], order[j]);
        edges.insert((a.min(b), a.max(b)));
    }
    while edges.len() < target {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    CouplingMap::new(n, edges)
}

const TOKYO: [Edge; 35] = [
    (0, 1), (0, 5), (1, 2), (1, 6), (1, 7), (2, 6), (3, 8), (4, 8), (4, 9), (5, 6), (5, 10), (5, 11),
    (6, 7), (6, 10), (6, 11), (7, 8), (7, 12), (8, 9), (8, 12), (8, 13), (10, 11), (10, 15), (11, 12),
    (11, 16), (11, 17), (12, 13), (12, 16), (13, 14), (13, 18), (13, 19), (14, 18), (14, 19), (15, 16),
    (16, 17), (17, 18),
];

pub const PRESETS: [&str; 6] = ["tokyo", "nairobi", "quito", "lima", "belem", "manila"];

pub fn preset(name: &str) -> Result<CouplingMap> {
    match name.to_ascii_lowercase().as_str() {
        "tokyo" => CouplingMap::new(20, TOKYO),
        "nairobi" => CouplingMap::new(7, [(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)]),
        "quito" | "lima" | "belem" => CouplingMap::new(5, [(0, 1), (1, 2), (1, 3), (3, 4)]),
        "manila" => CouplingMap::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)]),
        other => Err(Error::UnknownArchitecture(other.to_string())),
    }
}

fn dims(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s
        .split_once('x')
        .ok_or_else(|| Error::invalid(format!("expected ROWSxCOLS, got `{s}`")))?;
    Ok((num(r)?, num(c)?))
}

fn num(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::invalid(format!("not a count: `{s}`")))
}

/// Compact form used on the command line: `linear:7`, `grid:4x5`,
/// `local_grid:4x5`, `heavy_hex:1x2`, `heavy_hex:1x2:16`, `octagonal:1x2`,
/// `fully_connected:16`, `random:100:4:SEED`, or a preset name.
impl FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let arg = |i: usize| -> Result<&str> {
            parts.get(i).copied().ok_or_else(|| Error::invalid(format!("missing parameters in `{s}`")))
        };
        Ok(match parts[0] {
            "linear" => Architecture::Linear { num_qubits: num(arg(1)?)? },
            "grid" => {
                let (rows, cols) = dims(arg(1)?)?;
                Architecture::Grid { rows, cols }
            }
            "local_grid" => {
                let (rows, cols) = dims(arg(1)?)?;
                Architecture::LocalGrid { rows, cols }
            }
            "heavy_hex" => {
                let (rows, cols) = dims(arg(1)?)?;
                let num_qubits = parts.get(2).map(|v| num(v)).transpose()?;
                Architecture::HeavyHex { rows, cols, num_qubits }
            }
            "octagonal" => {
                let (rows, cols) = dims(arg(1)?)?;
                Architecture::Octagonal { rows, cols }
            }
            "fully_connected" => Architecture::FullyConnected { num_qubits: num(arg(1)?)? },
            "random" => Architecture::Random {
                num_qubits: num(arg(1)?)?,
                avg_degree: arg(2)?.parse().map_err(|_| Error::invalid("bad degree"))?,
                seed: parts.get(3).map_or(Ok(0), |v| v.parse().map_err(|_| Error::invalid("bad seed")))?,
            },
            name if PRESETS.contains(&name) => Architecture::Preset { name: name.to_string() },
            other => return Err(Error::UnknownArchitecture(other.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(s: &str) -> CouplingMap {
        s.parse::<Architecture>().unwrap().generate().unwrap()
    }

    #[test]
    fn closed_form_edge_counts() {
        assert_eq!(gen("fully_connected:5").num_edges(), 10);
        assert_eq!(gen("linear:7").num_edges(), 6);
        for (r, c) in [(1, 1), (1, 5), (3, 3), (4, 5)] {
            assert_eq!(gen(&format!("grid:{r}x{c}")).num_edges(), 2 * r * c - r - c);
        }
    }

    #[test]
    fn tokyo_costs() {
        let t = preset("tokyo").unwrap();
        assert_eq!(t.num_qubits(), 20);
        assert_eq!(t.num_edges(), 35);
        assert_eq!(4 * t.num_edges(), 140);
        assert_eq!(4 * 20 * 19 / 2, 760);
        assert!(t.is_connected());
    }

    #[test]
    fn heavy_hex_structure() {
        let m = gen("heavy_hex:1x1");
        // two 5-chains plus bridges at 0 and 4
        assert_eq!(m.num_qubits(), 12);
        assert_eq!(m.num_edges(), 4 + 4 + 4);
        assert!(m.is_connected());
        assert!((0..m.num_qubits()).all(|q| m.neighbors(q).len() <= 3));
        let t = gen("heavy_hex:1x2:16");
        assert_eq!(t.num_qubits(), 16);
        assert!(t.is_connected());
    }

    #[test]
    fn octagonal_structure() {
        let m = gen("octagonal:1x2");
        assert_eq!(m.num_qubits(), 16);
        assert_eq!(m.num_edges(), 18);
        let m = gen("octagonal:2x2");
        assert_eq!(m.num_edges(), 32 + 4 + 4);
        assert!(m.is_connected());
    }

    #[test]
    fn random_maps_are_connected_and_sized() {
        let m = gen("random:100:4:7");
        assert_eq!(m.num_edges(), 200);
        assert!(m.is_connected());
        assert_eq!(m, gen("random:100:4:7"));
    }

    #[test]
    fn distances() {
        let m = gen("linear:5");
        assert_eq!(m.distance(0, 4).unwrap(), Some(4));
        assert_eq!(m.distance(3, 3).unwrap(), Some(0));
        let split = CouplingMap::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(split.distance(0, 3).unwrap(), None);
        assert!(m.distance(0, 9).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CouplingMap::new(3, [(1, 1)]).is_err());
        assert!(CouplingMap::new(3, [(1, 3)]).is_err());
        assert!("grid:0x3".parse::<Architecture>().unwrap().generate().is_err());
        assert!(matches!("hexagon:3".parse::<Architecture>(), Err(Error::UnknownArchitecture(_))));
        assert_eq!(CouplingMap::new(3, [(1, 0), (0, 1)]).unwrap().num_edges(), 1);
    }

    #[test]
    fn json_shape() {
        let m = gen("linear:3");
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"num_qubits":3,"edges":[[0,1],[1,2]]}"#);
        assert_eq!(serde_json::from_str::<CouplingMap>(&s).unwrap(), m);
    }
}
