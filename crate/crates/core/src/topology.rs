//! Communication graphs and consensus weights.
//!
//! Graphs are undirected: a link lets both endpoints exchange values, so the
//! neighbor relation is symmetric and strong connectivity reduces to plain
//! connectivity. Erdős–Rényi draws with `prob > (1 + ζ) log p / p` are
//! connected with high probability for large `p`; nothing here enforces that
//! threshold, callers check [`NetworkTopology::is_strongly_connected`].

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Largest tolerated deviation of a row/column sum from 1 or of `W` from `Wᵀ`.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkTopology {
    neighbors: Vec<BTreeSet<usize>>,
    /// Probability the graph was drawn with, kept for provenance only.
    pub edge_probability: f64,
}

impl NetworkTopology {
    /// Graph on `p` nodes from 0-based undirected edges. Duplicates collapse.
    pub fn from_edges(p: usize, edges: &[(usize, usize)], edge_probability: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("a graph needs at least one node"));
        }
        let mut neighbors = vec![BTreeSet::new(); p];
        for &(g, j) in edges {
            if g >= p || j >= p {
                return Err(Error::invalid(format!(
                    "edge ({g}, {j}) leaves a {p}-node graph"
                )));
            }
            if g == j {
                return Err(Error::invalid(format!("self-loop on node {g}")));
            }
            neighbors[g].insert(j);
            neighbors[j].insert(g);
        }
        Ok(Self {
            neighbors,
            edge_probability,
        })
    }

    pub fn complete(p: usize) -> Result<Self> {
        let edges: Vec<_> = (0..p)
            .flat_map(|g| (g + 1..p).map(move |j| (g, j)))
            .collect();
        Self::from_edges(p, &edges, 1.0)
    }

    pub fn p(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, g: usize) -> &BTreeSet<usize> {
        &self.neighbors[g]
    }

    pub fn degree(&self, g: usize) -> usize {
        self.neighbors[g].len()
    }

    /// Undirected edges `(g, j)` with `g < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(g, ns)| ns.iter().filter(move |&&j| j > g).map(move |&j| (g, j)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.p()];
        let mut out = Vec::new();
        for start in 0..self.p() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(g) = queue.pop_front() {
                for &j in &self.neighbors[g] {
                    if !seen[j] {
                        seen[j] = true;
                        comp.push(j);
                        queue.push_back(j);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Whether a traversal from node 0 reaches every node. Symmetry makes this
    /// equivalent to every node reaching every other.
    pub fn is_strongly_connected(&self) -> bool {
        let mut seen = vec![false; self.p()];
        seen[0] = true;
        let mut stack = vec![0];
        let mut reached = 1;
        while let Some(g) = stack.pop() {
            for &j in &self.neighbors[g] {
                if !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    stack.push(j);
                }
            }
        }
        reached == self.p()
    }

    /// Edge list text: a `# dlrcs-topology` header carrying the node count,
    /// then one `g j` pair per line with 1-based ids and `g < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!(
            "# dlrcs-topology nodes={} edge_probability={}\n",
            self.p(),
            self.edge_probability
        );
        for (g, j) in self.edges() {
            out.push_str(&format!("{} {}\n", g + 1, j + 1));
        }
        out
    }
}

/// Parses [`NetworkTopology::to_edge_list`] output.
///
/// Without a header the node count is the largest id seen. Other `#` lines are
/// comments.
pub fn parse_edge_list(text: &str) -> Result<NetworkTopology> {
    let mut declared: Option<usize> = None;
    let mut prob = f64::NAN;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if let Some(header) = line.strip_prefix("# dlrcs-topology") {
            for field in header.split_whitespace() {
                match field.split_once('=') {
                    Some(("nodes", v)) => {
                        declared = Some(
                            v.parse()
                                .map_err(|_| Error::parse(ln, format!("bad node count `{v}`")))?,
                        )
                    }
                    Some(("edge_probability", v)) => {
                        prob = v
                            .parse()
                            .map_err(|_| Error::parse(ln, format!("bad probability `{v}`")))?
                    }
                    _ => return Err(Error::parse(ln, format!("unknown header field `{field}`"))),
                }
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ids: Vec<&str> = line.split_whitespace().collect();
        let [g, j] = ids[..] else {
            return Err(Error::parse(ln, "expected two node ids"));
        };
        let parse_id = |t: &str| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(0) | Err(_) => Err(Error::parse(ln, format!("`{t}` is not a 1-based node id"))),
                Ok(v) => Ok(v - 1),
            }
        };
        edges.push((parse_id(g)?, parse_id(j)?));
    }
    let max_id = edges.iter().map(|&(g, j)| g.max(j) + 1).max().unwrap_or(0);
    let p = declared.unwrap_or(max_id);
    if max_id > p {
        return Err(Error::parse(
            0,
            format!("node id {max_id} exceeds declared count {p}"),
        ));
    }
    if p > 1 << 20 {
        return Err(Error::parse(
            0,
            format!("node count {p} is unreasonably large"),
        ));
    }
    NetworkTopology::from_edges(p, &edges, prob).map_err(|e| Error::parse(0, e.to_string()))
}

fn check_probability(prob: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::invalid(format!(
            "edge probability {prob} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Erdős–Rényi `G(p, prob)`: each unordered pair `(g, j)`, `g < j`, visited in
/// lexicographic order, consumes one uniform draw `u` and is linked iff
/// `u < prob`.
pub fn generate_er_graph(p: usize, prob: f64, rng: &mut Rng) -> Result<NetworkTopology> {
    check_probability(prob)?;
    if p == 0 {
        return Err(Error::invalid("a graph needs at least one node"));
    }
    let mut edges = Vec::new();
    for g in 0..p {
        for j in g + 1..p {
            if rng.uniform() < prob {
                edges.push((g, j));
            }
        }
    }
    NetworkTopology::from_edges(p, &edges, prob)
}

/// Two Erdős–Rényi blocks with no links between them: nodes `0..⌈p/2⌉` and
/// `⌈p/2⌉..p`. Draws follow the same pair order as [`generate_er_graph`], and
/// cross pairs consume no draws.
pub fn generate_split_er_graph(p: usize, prob: f64, rng: &mut Rng) -> Result<NetworkTopology> {
    check_probability(prob)?;
    if p < 2 {
        return Err(Error::invalid("a split graph needs at least two nodes"));
    }
    let half = p.div_ceil(2);
    let mut edges = Vec::new();
    for g in 0..p {
        for j in g + 1..p {
            if (g < half) == (j < half) && rng.uniform() < prob {
                edges.push((g, j));
            }
        }
    }
    NetworkTopology::from_edges(p, &edges, prob)
}

/// Symmetric, doubly stochastic consensus weights with the graph's sparsity.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    w: Matrix,
    /// Off-diagonal nonzeros per row.
    links: Vec<Vec<(usize, f64)>>,
}

impl WeightMatrix {
    /// Validates symmetry, nonnegativity and unit row sums to [`WEIGHT_TOLERANCE`].
    pub fn new(w: Matrix) -> Result<Self> {
        let p = w.rows();
        if w.cols() != p {
            return Err(Error::dims(format!("weight matrix is {}x{}", p, w.cols())));
        }
        for g in 0..p {
            let row_sum: f64 = w.row(g).iter().sum();
            if (row_sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(Error::invalid(format!("row {g} sums to {row_sum}")));
            }
            for j in 0..p {
                if w[(g, j)] < 0.0 {
                    return Err(Error::invalid(format!("negative weight at ({g}, {j})")));
                }
                if (w[(g, j)] - w[(j, g)]).abs() > WEIGHT_TOLERANCE {
                    return Err(Error::invalid(format!("asymmetric weight at ({g}, {j})")));
                }
            }
        }
        let links = (0..p)
            .map(|g| {
                (0..p)
                    .filter(|&j| j != g && w[(g, j)] != 0.0)
                    .map(|j| (j, w[(g, j)]))
                    .collect()
            })
            .collect();
        Ok(Self { w, links })
    }

    pub fn p(&self) -> usize {
        self.w.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    /// `(j, W_gj)` for every `j ≠ g` with nonzero weight.
    pub fn links(&self, g: usize) -> &[(usize, f64)] {
        &self.links[g]
    }
}

/// Metropolis–Hastings weights: `W_gj = 1 / (1 + max(d_g, d_j))` on edges,
/// `W_gg = 1 − Σ_j W_gj`, zero elsewhere. Needs only neighbor degrees, so each
/// node can compute its own row.
pub fn metropolis_weights(topo: &NetworkTopology) -> WeightMatrix {
    let p = topo.p();
    let mut w = Matrix::zeros(p, p);
    for g in 0..p {
        let mut off = 0.0;
        for &j in topo.neighbors(g) {
            let wgj = 1.0 / (1.0 + topo.degree(g).max(topo.degree(j)) as f64);
            w[(g, j)] = wgj;
            off += wgj;
        }
        w[(g, g)] = 1.0 - off;
    }
    let links = (0..p)
        .map(|g| topo.neighbors(g).iter().map(|&j| (j, w[(g, j)])).collect())
        .collect();
    WeightMatrix { w, links }
}
