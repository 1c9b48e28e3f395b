//! Bitset graphs with exact maximum independent set search.
//!
//! Independent sets of `G` are cliques of the complement; the search is a
//! branch and bound over the complement with a greedy coloring bound.

/// Fixed-width bitset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bits(Vec<u64>);

impl Bits {
    pub fn new(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64)])
    }

    pub fn full(n: usize) -> Bits {
        let mut b = Bits::new(n);
        for i in 0..n {
            b.insert(i);
        }
        b
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }

    pub fn and_not(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & !b).collect())
    }

    pub fn intersects(&self, o: &Bits) -> bool {
        self.0.iter().zip(&o.0).any(|(a, b)| a & b != 0)
    }

    pub fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                (w != 0).then(|| {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    i * 64 + t
                })
            })
        })
    }
}

/// Simple undirected graph on `0..n`.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    adj: Vec<Bits>,
}

impl Graph {
    pub fn new(n: usize) -> Graph {
        Graph { n, adj: vec![Bits::new(n); n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.adj[u].insert(v);
            self.adj[v].insert(u);
        }
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    pub fn neighbors(&self, u: usize) -> &Bits {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count()
    }

    /// Whether the vertex set is independent.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &u)| set[i + 1..].iter().all(|&v| !self.adjacent(u, v)))
    }

    fn complement(&self) -> Vec<Bits> {
        let all = Bits::full(self.n);
        (0..self.n)
            .map(|v| {
                let mut b = all.and_not(&self.adj[v]);
                b.remove(v);
                b
            })
            .collect()
    }
}

/// Result of an exact search that may have been cut off.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MisResult {
    /// Best independent set found, sorted.
    pub set: Vec<usize>,
    /// Whether the search completed, certifying optimality.
    pub exact: bool,
    /// Branch nodes visited.
    pub nodes: u64,
}

struct Search<'a> {
    adj: &'a [Bits],
    best: Vec<usize>,
    target: usize,
    collect: Option<Vec<Vec<usize>>>,
    nodes: u64,
    limit: u64,
    aborted: bool,
}

impl Search<'_> {
    fn color_sort(&self, p: &Bits) -> (Vec<usize>, Vec<usize>) {
        let mut order = Vec::new();
        let mut colors = Vec::new();
        let mut uncolored = p.clone();
        let mut k = 0;
        while !uncolored.is_empty() {
            k += 1;
            let mut q = uncolored.clone();
            while let Some(v) = q.first() {
                uncolored.remove(v);
                q.remove(v);
                q = q.and_not(&self.adj[v]);
                order.push(v);
                colors.push(k);
            }
        }
        (order, colors)
    }

    fn bound(&self) -> usize {
        match self.collect {
            Some(_) => self.target,
            None => self.best.len() + 1,
        }
    }

    fn expand(&mut self, r: &mut Vec<usize>, mut p: Bits) {
        self.nodes += 1;
        if self.nodes > self.limit {
            self.aborted = true;
            return;
        }
        let (order, colors) = self.color_sort(&p);
        for i in (0..order.len()).rev() {
            if self.aborted || r.len() + colors[i] < self.bound() {
                return;
            }
            let v = order[i];
            r.push(v);
            let np = p.and(&self.adj[v]);
            if np.is_empty() {
                if let Some(found) = self.collect.as_mut() {
                    if r.len() == self.target {
                        let mut s = r.clone();
                        s.sort_unstable();
                        found.push(s);
                    }
                } else if r.len() > self.best.len() {
                    self.best = r.clone();
                }
            } else {
                self.expand(r, np);
            }
            r.pop();
            p.remove(v);
        }
    }
}

/// Exact maximum independent set (up to `node_limit` branch nodes), seeded
/// with an optional known independent set as lower bound.
pub fn max_independent_set(g: &Graph, seed: Option<&[usize]>, node_limit: u64) -> MisResult {
    let comp = g.complement();
    let mut s = Search {
        adj: &comp,
        best: seed.map(|s| s.to_vec()).unwrap_or_default(),
        target: 0,
        collect: None,
        nodes: 0,
        limit: node_limit,
        aborted: false,
    };
    let mut r = Vec::new();
    s.expand(&mut r, Bits::full(g.n));
    let mut set = s.best;
    set.sort_unstable();
    MisResult { set, exact: !s.aborted, nodes: s.nodes }
}

/// All independent sets of exactly `size` vertices that cannot be extended,
/// when `size` is the independence number; sorted lexicographically.
pub fn independent_sets_of_size(g: &Graph, size: usize, node_limit: u64) -> Option<Vec<Vec<usize>>> {
    let comp = g.complement();
    let mut s = Search {
        adj: &comp,
        best: Vec::new(),
        target: size,
        collect: Some(Vec::new()),
        nodes: 0,
        limit: node_limit,
        aborted: false,
    };
    let mut r = Vec::new();
    s.expand(&mut r, Bits::full(g.n));
    if s.aborted {
        return None;
    }
    let mut out = s.collect.unwrap();
    out.sort();
    Some(out)
}
