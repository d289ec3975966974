//! Tree and network representations shared by the generators and analyses.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Recursive tree stored as a parent array in arrival order.
///
/// Node 0 is the root. For every `i >= 1`, `parent(i) < i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    // parents[i - 1] is the parent of node i
    parents: Vec<u32>,
}

impl Tree {
    /// Single-node tree.
    pub fn root_only() -> Self {
        Tree {
            parents: Vec::new(),
        }
    }

    /// Builds a tree from the parents of nodes `1..N`. An empty slice is the
    /// root-only tree.
    pub fn from_parents(parents: &[usize]) -> Result<Self> {
        if parents.len() >= u32::MAX as usize {
            return Err(Error::param("parents", "tree too large"));
        }
        for (k, &p) in parents.iter().enumerate() {
            let child = k + 1;
            if p >= child {
                return Err(Error::ArrivalOrder { child, parent: p });
            }
        }
        Ok(Tree {
            parents: parents.iter().map(|&p| p as u32).collect(),
        })
    }

    pub(crate) fn from_parents_unchecked(parents: Vec<u32>) -> Self {
        debug_assert!(parents
            .iter()
            .enumerate()
            .all(|(k, &p)| (p as usize) < k + 1));
        Tree { parents }
    }

    /// Star on `n` nodes centred at the root.
    pub fn star(n: usize) -> Self {
        assert!(n >= 1);
        Tree {
            parents: vec![0; n - 1],
        }
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        assert!(n >= 1);
        Tree {
            parents: (0..n as u32 - 1).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.parents.len() + 1
    }

    /// Always false; a tree has at least its root.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Parent of `node`, or `None` for the root.
    #[inline]
    pub fn parent(&self, node: usize) -> Option<usize> {
        if node == 0 {
            None
        } else {
            Some(self.parents[node - 1] as usize)
        }
    }

    /// Parents of nodes `1..N`, in order.
    pub fn parents(&self) -> Vec<usize> {
        self.parents.iter().map(|&p| p as usize).collect()
    }

    pub(crate) fn raw_parents(&self) -> &[u32] {
        &self.parents
    }

    /// Link count of every node: children, plus one for the parent link of
    /// non-root nodes.
    pub fn degrees(&self) -> Vec<usize> {
        let n = self.len();
        let mut deg = vec![0usize; n];
        for (k, &p) in self.parents.iter().enumerate() {
            deg[k + 1] += 1;
            deg[p as usize] += 1;
        }
        deg
    }

    /// Child lists, derived on demand.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (k, &p) in self.parents.iter().enumerate() {
            out[p as usize].push(k + 1);
        }
        out
    }

    /// Depth of every node (root at 0).
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.len()];
        for (k, &p) in self.parents.iter().enumerate() {
            depth[k + 1] = depth[p as usize] + 1;
        }
        depth
    }

    /// Writes the header `N` followed by one `child parent` line per link.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.len())?;
        for (k, &p) in self.parents.iter().enumerate() {
            writeln!(w, "{} {}", k + 1, p)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`Tree::write_text`]. Link lines may
    /// appear in any order.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let n = loop {
            let Some((ln, line)) = lines.next() else {
                return Err(Error::Parse {
                    line: 1,
                    message: "missing node-count header".into(),
                });
            };
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            break t.parse::<usize>().map_err(|e| Error::Parse {
                line: ln + 1,
                message: format!("bad node count `{t}`: {e}"),
            })?;
        };
        if n == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "tree must have at least one node".into(),
            });
        }
        let mut parents: Vec<Option<usize>> = vec![None; n - 1];
        for (ln, line) in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let (c, p) = parse_pair(t, ln + 1)?;
            if c == 0 || c >= n {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: format!("child {c} out of range 1..{n}"),
                });
            }
            if parents[c - 1].replace(p).is_some() {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: format!("node {c} has two parents"),
                });
            }
        }
        let parents: Vec<usize> = parents
            .into_iter()
            .enumerate()
            .map(|(k, p)| {
                p.ok_or_else(|| Error::Parse {
                    line: 0,
                    message: format!("node {} has no parent line", k + 1),
                })
            })
            .collect::<Result<_>>()?;
        Tree::from_parents(&parents)
    }
}

fn parse_pair(t: &str, line: usize) -> Result<(usize, usize)> {
    let mut it = t.split_whitespace();
    let mut next = || -> Result<usize> {
        let tok = it.next().ok_or_else(|| Error::Parse {
            line,
            message: "expected two integers".into(),
        })?;
        tok.parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad integer `{tok}`: {e}"),
        })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(Error::Parse {
            line,
            message: "trailing tokens".into(),
        });
    }
    Ok((a, b))
}

/// Simple undirected graph with neighbour lists in one contiguous buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Network {
    /// Validating constructor: rejects self-loops, duplicate edges and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(Error::param("n", "node count exceeds u32 range"));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::EndpointOutOfRange { endpoint: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            norm.push((u.min(v) as u32, u.max(v) as u32));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0 as usize, w[0].1 as usize));
        }
        Ok(Self::from_sorted_unique(n, &norm))
    }

    /// `edges` must be sorted, deduplicated, loop-free pairs with `u < v`.
    pub(crate) fn from_sorted_unique(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, v) in edges {
            offsets[u as usize + 1] += 1;
            offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0u32; 2 * edges.len()];
        // Sorted (u, v) input yields sorted neighbour lists: for a fixed node x,
        // partners u < x arrive in increasing u, then partners v > x in
        // increasing v.
        for &(u, v) in edges {
            targets[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        for &(u, v) in edges {
            targets[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
        }
        Network { offsets, targets }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.len()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Sorted neighbours of `node`.
    #[inline]
    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// One `u v` line per edge with `u < v`.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    /// Reads an edge list. Without `n`, the node count is one past the
    /// largest endpoint.
    pub fn read_edge_list<R: BufRead>(r: R, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            edges.push(parse_pair(t, ln + 1)?);
        }
        let n = n.unwrap_or_else(|| {
            edges
                .iter()
                .map(|&(u, v)| u.max(v) + 1)
                .max()
                .unwrap_or(0)
        });
        Network::from_edges(n, &edges)
    }
}

/// Target degree of every node, as drawn by a degree sampler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence(Vec<usize>);

impl DegreeSequence {
    /// Every entry must be at least 1.
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        if let Some(i) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::ZeroDegree(i));
        }
        Ok(DegreeSequence(degrees))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().map(|&d| d as u64).sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() as f64 / self.0.len() as f64
    }
}
