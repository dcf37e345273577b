//! Substitution graphs: n-triangles, the hat construction, the finite
//! quotients Γ_n, balls of the Pascal graph and line graphs.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Letter {
    A,
    B,
    C,
}

impl Letter {
    pub const ALL: [Letter; 3] = [Letter::A, Letter::B, Letter::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Letter {
        Letter::ALL[i]
    }

    pub fn as_char(self) -> char {
        (b'A' + self as u8) as char
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Main,
    Dual,
    None,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Main => "main",
            Side::Dual => "dual",
            Side::None => "none",
        }
    }
}

/// Hierarchical address of a vertex.
///
/// Triangle-like graphs use words over {A, B, C} whose first letter is the
/// coarsest sub-triangle; the quotients Γ_n carry a root in {a, b, c, d}
/// followed by a path of neighbor slots; line-graph vertices carry the
/// endpoints of the underlying edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexAddress {
    pub side: Side,
    pub root: Option<u8>,
    pub word: Vec<Letter>,
    pub edge: Option<(usize, usize)>,
    pub raw_id: usize,
}

impl VertexAddress {
    fn key(&self) -> (Side, Option<u8>, Vec<Letter>, Option<(usize, usize)>) {
        (self.side, self.root, self.word.clone(), self.edge)
    }

    pub fn word_string(&self) -> String {
        self.word.iter().map(|l| l.as_char()).collect()
    }
}

impl fmt::Display for VertexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((u, v)) = self.edge {
            return write!(f, "{u}-{v}");
        }
        if let Some(r) = self.root {
            write!(f, "{}", (b'a' + r) as char)?;
        }
        write!(f, "{}", self.word_string())
    }
}

/// Finite graph with addresses, boundary marks and an optional parent map.
#[derive(Clone, Debug)]
pub struct SubstGraph {
    pub level: usize,
    vertices: Vec<VertexAddress>,
    adj: Vec<Vec<usize>>,
    boundary: Vec<bool>,
    parent: Option<Vec<usize>>,
    index: HashMap<(Side, Option<u8>, Vec<Letter>), usize>,
}

impl SubstGraph {
    pub fn from_parts(
        level: usize,
        mut vertices: Vec<VertexAddress>,
        edges: &[(usize, usize)],
        boundary: Vec<bool>,
        parent: Option<Vec<usize>>,
    ) -> Result<SubstGraph> {
        let n = vertices.len();
        if boundary.len() != n {
            return Err(Error::MalformedInput("boundary length".into()));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::MalformedInput(format!("self-loop at {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::MalformedInput(format!("edge ({u}, {v}) out of range")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            if list.len() != before {
                return Err(Error::MalformedInput("repeated edge".into()));
            }
        }
        let mut index = HashMap::new();
        for (i, v) in vertices.iter_mut().enumerate() {
            v.raw_id = i;
            if v.edge.is_none() {
                index.insert((v.side, v.root, v.word.clone()), i);
            }
        }
        Ok(SubstGraph { level, vertices, adj, boundary, parent, index })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[VertexAddress] {
        &self.vertices
    }

    pub fn address(&self, v: usize) -> &VertexAddress {
        &self.vertices[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.boundary[v]).collect()
    }

    pub fn parent_map(&self) -> Option<&[usize]> {
        self.parent.as_deref()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as pairs `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    pub fn find(&self, side: Side, word: &[Letter]) -> Option<usize> {
        self.index.get(&(side, None, word.to_vec())).copied()
    }

    pub fn find_rooted(&self, root: u8, word: &[Letter]) -> Option<usize> {
        self.index.get(&(Side::None, Some(root), word.to_vec())).copied()
    }

    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        self.distances_from(&[0]).iter().all(|d| d.is_some())
    }

    /// Breadth-first distances from a set of sources.
    pub fn distances_from(&self, sources: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            dist[s] = Some(0);
            queue.push_back(s);
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Checks the invariants of a valence-3 graph with boundary.
    pub fn validate(&self) -> Result<()> {
        for v in 0..self.len() {
            let want = if self.boundary[v] { 2 } else { 3 };
            if self.degree(v) != want {
                return Err(Error::MalformedInput(format!(
                    "vertex {} has valence {}",
                    self.vertices[v],
                    self.degree(v)
                )));
            }
        }
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        if let Some(parent) = &self.parent {
            let mut fibers: HashMap<usize, Vec<usize>> = HashMap::new();
            for (v, &p) in parent.iter().enumerate() {
                fibers.entry(p).or_default().push(v);
            }
            for fiber in fibers.values() {
                if fiber.len() != 3 || !is_triangle(self, fiber[0], fiber[1], fiber[2]) {
                    return Err(Error::MalformedInput("parent fiber is not a triangle".into()));
                }
            }
        }
        Ok(())
    }

    /// All triangles `{u, v, w}` with `u < v < w`.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for u in 0..self.len() {
            for &v in &self.adj[u] {
                if v <= u {
                    continue;
                }
                for &w in &self.adj[v] {
                    if w > v && self.has_edge(u, w) {
                        out.push([u, v, w]);
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vertices: Vec<_> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::json!({
                    "id": i,
                    "address": v.to_string(),
                    "side": v.side.as_str(),
                    "boundary": self.boundary[i],
                })
            })
            .collect();
        let edges: Vec<_> = self.edges().into_iter().map(|(u, v)| [u, v]).collect();
        serde_json::json!({ "level": self.level, "vertices": vertices, "edges": edges })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph G {\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let label = match v.side {
                Side::Dual => format!("{v}'"),
                _ => v.to_string(),
            };
            if self.boundary[i] {
                s.push_str(&format!("  {i} [label=\"{label}\", shape=doublecircle];\n"));
            } else {
                s.push_str(&format!("  {i} [label=\"{label}\"];\n"));
            }
        }
        for (u, v) in self.edges() {
            s.push_str(&format!("  {u} -- {v};\n"));
        }
        s.push_str("}\n");
        s
    }
}

fn is_triangle(g: &SubstGraph, a: usize, b: usize, c: usize) -> bool {
    g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c)
}

/// Word of length n with base-3 id `id`, first letter most significant.
pub fn word_of(mut id: usize, n: usize) -> Vec<Letter> {
    let mut w = vec![Letter::A; n];
    for slot in w.iter_mut().rev() {
        *slot = Letter::from_index(id % 3);
        id /= 3;
    }
    w
}

pub fn id_of(word: &[Letter]) -> usize {
    word.iter().fold(0, |acc, l| acc * 3 + l.index())
}

/// Edges of 𝒯_n as pairs of base-3 word ids, from the rule
/// `w·x·yᵏ ~ w·y·xᵏ` for distinct letters x, y.
fn triangle_edges(n: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for j in 0..n {
        let k = n - j - 1;
        for prefix in 0..3usize.pow(j as u32) {
            let w = word_of(prefix, j);
            for x in 0..3 {
                for y in (x + 1)..3 {
                    let mut u = w.clone();
                    u.push(Letter::from_index(x));
                    u.extend(std::iter::repeat(Letter::from_index(y)).take(k));
                    let mut v = w.clone();
                    v.push(Letter::from_index(y));
                    v.extend(std::iter::repeat(Letter::from_index(x)).take(k));
                    edges.push((id_of(&u), id_of(&v)));
                }
            }
        }
    }
    edges
}

/// The n-triangle 𝒯_n: 3ⁿ vertices addressed by words of length n.
pub fn triangle_graph(n: usize) -> Result<SubstGraph> {
    if n == 0 {
        return Err(Error::InvalidArgument("n-triangles need n >= 1".into()));
    }
    let count = 3usize.pow(n as u32);
    let vertices = (0..count)
        .map(|id| VertexAddress { side: Side::None, root: None, word: word_of(id, n), edge: None, raw_id: id })
        .collect();
    let mut boundary = vec![false; count];
    for x in Letter::ALL {
        boundary[id_of(&vec![x; n])] = true;
    }
    SubstGraph::from_parts(n, vertices, &triangle_edges(n), boundary, None)
}

/// Letter of the child `(p, q)` of `p` in the hat construction.
fn child_letter(g: &SubstGraph, p: usize, q: usize) -> Letter {
    let a = g.address(p);
    let b = g.address(q);
    if a.root.is_some() || a.word.is_empty() {
        let slot = g.neighbors(p).iter().position(|&x| x == q).unwrap();
        return Letter::from_index(slot);
    }
    let n = a.word.len();
    let sibling = a.side == b.side
        && a.root == b.root
        && b.word.len() == n
        && a.word[..n - 1] == b.word[..n - 1];
    if sibling {
        b.word[n - 1]
    } else {
        a.word[n - 1]
    }
}

/// The hat Φ̂: every vertex replaced by a triangle.
pub fn hat(g: &SubstGraph) -> Result<SubstGraph> {
    for v in 0..g.len() {
        let d = g.degree(v);
        if d != 2 && d != 3 {
            return Err(Error::MalformedInput(format!("vertex {} has valence {d}", g.address(v))));
        }
        if g.is_boundary(v) != (d == 2) {
            return Err(Error::MalformedInput(format!("boundary mark of {} disagrees with valence", g.address(v))));
        }
    }
    // Slots: (p, Some(q)) for every ordered edge, (p, None) for boundary p.
    let mut slots: Vec<(usize, Option<usize>)> = Vec::new();
    for p in 0..g.len() {
        if g.is_boundary(p) {
            slots.push((p, None));
        }
        for &q in g.neighbors(p) {
            slots.push((p, Some(q)));
        }
    }
    let address = |&(p, q): &(usize, Option<usize>)| {
        let a = g.address(p);
        let letter = match q {
            Some(q) => child_letter(g, p, q),
            None => *a.word.last().expect("boundary vertices carry words"),
        };
        let mut word = a.word.clone();
        word.push(letter);
        VertexAddress { side: a.side, root: a.root, word, edge: None, raw_id: 0 }
    };
    let mut order: Vec<usize> = (0..slots.len()).collect();
    let addrs: Vec<VertexAddress> = slots.iter().map(address).collect();
    order.sort_by(|&i, &j| addrs[i].key().cmp(&addrs[j].key()));
    let mut new_id = vec![0; slots.len()];
    for (k, &i) in order.iter().enumerate() {
        new_id[i] = k;
    }
    let slot_id: HashMap<(usize, Option<usize>), usize> =
        slots.iter().enumerate().map(|(i, &s)| (s, new_id[i])).collect();
    let mut edges = Vec::new();
    for &(p, q) in &slots {
        let me = slot_id[&(p, q)];
        match q {
            None => {
                for &r in g.neighbors(p) {
                    edges.push((me, slot_id[&(p, Some(r))]));
                }
            }
            Some(q) => {
                edges.push((me, slot_id[&(q, Some(p))]));
                for &r in g.neighbors(p) {
                    if r != q {
                        edges.push((me, slot_id[&(p, Some(r))]));
                    }
                }
                if g.is_boundary(p) {
                    edges.push((me, slot_id[&(p, None)]));
                }
            }
        }
    }
    let edges: Vec<(usize, usize)> = edges
        .into_iter()
        .filter(|&(u, v)| u < v)
        .collect();
    let vertices: Vec<VertexAddress> = order.iter().map(|&i| addrs[i].clone()).collect();
    let mut boundary = vec![false; slots.len()];
    let mut parent = vec![0; slots.len()];
    for (i, &(p, q)) in slots.iter().enumerate() {
        boundary[new_id[i]] = q.is_none();
        parent[new_id[i]] = p;
    }
    SubstGraph::from_parts(g.level + 1, vertices, &edges, boundary, Some(parent))
}

/// The complete graph Γ_0 on {a, b, c, d}.
pub fn k4() -> SubstGraph {
    let vertices = (0..4u8)
        .map(|r| VertexAddress { side: Side::None, root: Some(r), word: Vec::new(), edge: None, raw_id: 0 })
        .collect();
    let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    SubstGraph::from_parts(0, vertices, &edges, vec![false; 4], None).expect("K4 is well formed")
}

/// Γ_n, the n-fold hat of K₄.
pub fn gamma_graph(n: usize) -> SubstGraph {
    let mut g = k4();
    for _ in 0..n {
        g = hat(&g).expect("Γ_n is 3-regular");
    }
    g
}

/// The ball of the Pascal graph made of the two m-triangles at the apexes
/// p₀ = (main, Aᵐ) and p₀^∨ = (dual, Bᵐ) joined by the apex edge.
pub fn pascal_ball(m: usize) -> Result<SubstGraph> {
    if m == 0 {
        return Err(Error::InvalidArgument("ball level must be >= 1".into()));
    }
    let count = 3usize.pow(m as u32);
    let mut vertices = Vec::with_capacity(2 * count);
    for side in [Side::Main, Side::Dual] {
        for id in 0..count {
            vertices.push(VertexAddress { side, root: None, word: word_of(id, m), edge: None, raw_id: 0 });
        }
    }
    let mut edges = triangle_edges(m);
    let dual: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (u + count, v + count)).collect();
    edges.extend(dual);
    let a = id_of(&vec![Letter::A; m]);
    let b = id_of(&vec![Letter::B; m]);
    let c = id_of(&vec![Letter::C; m]);
    edges.push((a, count + b));
    let mut boundary = vec![false; 2 * count];
    for v in [b, c, count + a, count + c] {
        boundary[v] = true;
    }
    SubstGraph::from_parts(m, vertices, &edges, boundary, None)
}

/// Apexes `(p₀, p₀^∨)` of a Pascal ball.
pub fn apexes(ball: &SubstGraph) -> (usize, usize) {
    let m = ball.level;
    (
        ball.find(Side::Main, &vec![Letter::A; m]).expect("main apex"),
        ball.find(Side::Dual, &vec![Letter::B; m]).expect("dual apex"),
    )
}

/// Vertices of a Pascal ball whose whole neighborhood coincides with the
/// infinite graph: graph distance to the apex edge below 2^{m−1}.
pub fn ball_safe_radius(ball: &SubstGraph) -> usize {
    1 << (ball.level - 1)
}

/// Line graph: one vertex per edge, adjacency by shared endpoint.
pub fn line_graph(g: &SubstGraph) -> SubstGraph {
    let edges = g.edges();
    let index: HashMap<(usize, usize), usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let key = |u: usize, v: usize| if u < v { (u, v) } else { (v, u) };
    let mut out = Vec::new();
    for (i, &(u, v)) in edges.iter().enumerate() {
        for &end in &[u, v] {
            for &w in g.neighbors(end) {
                let j = index[&key(end, w)];
                if j > i {
                    out.push((i, j));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    let vertices = edges
        .iter()
        .map(|&e| VertexAddress { side: Side::None, root: None, word: Vec::new(), edge: Some(e), raw_id: 0 })
        .collect();
    SubstGraph::from_parts(g.level, vertices, &out, vec![false; edges.len()], None)
        .expect("line graphs are simple")
}

/// Bipartition test. `Some(side)` gives the colour of each vertex.
pub fn is_partageable(g: &SubstGraph) -> Result<Option<Vec<bool>>> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut colour: Vec<Option<bool>> = vec![None; g.len()];
    if g.is_empty() {
        return Ok(Some(Vec::new()));
    }
    colour[0] = Some(false);
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let cu = colour[u].unwrap();
        for &v in g.neighbors(u) {
            match colour[v] {
                None => {
                    colour[v] = Some(!cu);
                    queue.push_back(v);
                }
                Some(cv) if cv == cu => return Ok(None),
                _ => {}
            }
        }
    }
    Ok(Some(colour.into_iter().map(|c| c.unwrap()).collect()))
}

/// Automorphism of 𝒯_n induced by a permutation of its corners, acting
/// letter by letter on addresses. `perm[x]` is the image of letter x.
pub fn automorphism_from_corner_perm(g: &SubstGraph, perm: [Letter; 3]) -> Result<Vec<usize>> {
    let mut seen = [false; 3];
    for l in perm {
        seen[l.index()] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidArgument("not a permutation".into()));
    }
    (0..g.len())
        .map(|v| {
            let a = g.address(v);
            let word: Vec<Letter> = a.word.iter().map(|l| perm[l.index()]).collect();
            g.find(a.side, &word)
                .ok_or_else(|| Error::MalformedInput("not a triangle graph".into()))
        })
        .collect()
}

/// Whether a vertex map is a graph automorphism.
pub fn is_automorphism(g: &SubstGraph, map: &[usize]) -> bool {
    let mut hit = vec![false; g.len()];
    for &m in map {
        if hit[m] {
            return false;
        }
        hit[m] = true;
    }
    g.edges().into_iter().all(|(u, v)| g.has_edge(map[u], map[v]))
}

/// Labels of a covering onto Γ_0 = K₄ (0..4 stand for a, b, c, d).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringMap {
    pub target_labels: Vec<u8>,
}

impl CoveringMap {
    /// Local injectivity at every vertex; bijectivity where valence is 3.
    pub fn is_valid(&self, g: &SubstGraph) -> bool {
        (0..g.len()).all(|p| {
            let own = self.target_labels[p];
            let mut seen = [false; 4];
            seen[own as usize] = true;
            g.neighbors(p).iter().all(|&q| {
                let l = self.target_labels[q] as usize;
                !std::mem::replace(&mut seen[l], true)
            })
        })
    }
}

/// Extends anchor labels to a covering of K₄, propagating forced labels and
/// backtracking on the remaining choices. Returns the first extension in a
/// deterministic search order.
pub fn covering_to_gamma0(g: &SubstGraph, anchors: &[(usize, u8)]) -> Result<CoveringMap> {
    let mut found = coverings_with_anchors(g, anchors, 1)?;
    found
        .pop()
        .ok_or_else(|| Error::NotACovering("anchors admit no extension".into()))
}

/// Up to `limit` coverings extending the anchors.
pub fn coverings_with_anchors(g: &SubstGraph, anchors: &[(usize, u8)], limit: usize) -> Result<Vec<CoveringMap>> {
    let mut labels: Vec<Option<u8>> = vec![None; g.len()];
    for &(v, l) in anchors {
        if l > 3 {
            return Err(Error::InvalidArgument(format!("label {l} outside a..d")));
        }
        if labels[v].is_some_and(|x| x != l) {
            return Err(Error::NotACovering("contradictory anchors".into()));
        }
        labels[v] = Some(l);
    }
    if !consistent_all(g, &labels) {
        return Err(Error::NotACovering("anchors violate local injectivity".into()));
    }
    let mut out = Vec::new();
    search(g, labels, limit, &mut out);
    Ok(out)
}

fn allowed(g: &SubstGraph, labels: &[Option<u8>], v: usize) -> [bool; 4] {
    let mut ok = [true; 4];
    for &q in g.neighbors(v) {
        if let Some(l) = labels[q] {
            ok[l as usize] = false;
        }
        for &r in g.neighbors(q) {
            if r != v {
                if let Some(l) = labels[r] {
                    ok[l as usize] = false;
                }
            }
        }
    }
    ok
}

fn consistent_at(g: &SubstGraph, labels: &[Option<u8>], p: usize) -> bool {
    let mut seen = [false; 4];
    if let Some(l) = labels[p] {
        seen[l as usize] = true;
    }
    for &q in g.neighbors(p) {
        if let Some(l) = labels[q] {
            if std::mem::replace(&mut seen[l as usize], true) {
                return false;
            }
        }
    }
    true
}

fn consistent_all(g: &SubstGraph, labels: &[Option<u8>]) -> bool {
    (0..g.len()).all(|p| consistent_at(g, labels, p))
}

fn propagate(g: &SubstGraph, labels: &mut [Option<u8>]) -> bool {
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..g.len() {
            if labels[v].is_some() {
                continue;
            }
            let ok = allowed(g, labels, v);
            let count = ok.iter().filter(|&&b| b).count();
            if count == 0 {
                return false;
            }
            let has_labelled_neighbor = g.neighbors(v).iter().any(|&q| labels[q].is_some());
            if count == 1 && has_labelled_neighbor {
                labels[v] = Some(ok.iter().position(|&b| b).unwrap() as u8);
                changed = true;
            }
        }
    }
    true
}

fn search(g: &SubstGraph, mut labels: Vec<Option<u8>>, limit: usize, out: &mut Vec<CoveringMap>) {
    if out.len() >= limit || !propagate(g, &mut labels) {
        return;
    }
    let mut best: Option<(usize, [bool; 4])> = None;
    for v in 0..g.len() {
        if labels[v].is_some() || !g.neighbors(v).iter().any(|&q| labels[q].is_some()) {
            continue;
        }
        let ok = allowed(g, &labels, v);
        let c = ok.iter().filter(|&&b| b).count();
        if best.is_none_or(|(_, b)| c < b.iter().filter(|&&x| x).count()) {
            best = Some((v, ok));
        }
    }
    match best {
        None => {
            if labels.iter().all(|l| l.is_some()) {
                out.push(CoveringMap { target_labels: labels.into_iter().map(|l| l.unwrap()).collect() });
            } else {
                // Disconnected remainder: seed the first unlabelled vertex.
                let v = labels.iter().position(|l| l.is_none()).unwrap();
                for l in 0..4u8 {
                    let mut next = labels.clone();
                    next[v] = Some(l);
                    search(g, next, limit, out);
                }
            }
        }
        Some((v, ok)) => {
            for l in 0..4u8 {
                if ok[l as usize] {
                    let mut next = labels.clone();
                    next[v] = Some(l);
                    if consistent_at(g, &next, v) {
                        search(g, next, limit, out);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<Letter> {
        s.chars().map(|c| Letter::from_index((c as u8 - b'A') as usize)).collect()
    }

    #[test]
    fn triangle_counts() {
        for (n, v, e) in [(1, 3, 3), (2, 9, 12), (3, 27, 39)] {
            let t = triangle_graph(n).unwrap();
            assert_eq!((t.len(), t.edge_count()), (v, e));
            t.validate().unwrap();
        }
        assert!(triangle_graph(0).is_err());
    }

    #[test]
    fn hat_reproduces_triangle_addresses() {
        for n in 1..6 {
            let h = hat(&triangle_graph(n).unwrap()).unwrap();
            let t = triangle_graph(n + 1).unwrap();
            assert_eq!(h.vertices().iter().map(|v| v.word.clone()).collect::<Vec<_>>(),
                       t.vertices().iter().map(|v| v.word.clone()).collect::<Vec<_>>());
            assert_eq!(h.edges(), t.edges());
            h.validate().unwrap();
            let base = triangle_graph(n).unwrap();
            for (v, &p) in h.parent_map().unwrap().iter().enumerate() {
                assert_eq!(h.address(v).word[..n], base.address(p).word[..]);
            }
        }
    }

    #[test]
    fn gamma_sizes() {
        for n in 0..5 {
            let g = gamma_graph(n);
            assert_eq!(g.len(), 4 * 3usize.pow(n as u32));
            assert_eq!(g.edge_count(), 6 * 3usize.pow(n as u32));
            g.validate().unwrap();
        }
    }

    #[test]
    fn ball_hat_is_next_ball() {
        for m in 1..5 {
            let h = hat(&pascal_ball(m).unwrap()).unwrap();
            let b = pascal_ball(m + 1).unwrap();
            assert_eq!(h.len(), b.len());
            for v in 0..h.len() {
                assert_eq!(h.address(v), b.address(v));
                assert_eq!(h.is_boundary(v), b.is_boundary(v));
            }
            assert_eq!(h.edges(), b.edges());
        }
    }

    #[test]
    fn ball_shape() {
        for m in 1..6 {
            let b = pascal_ball(m).unwrap();
            assert_eq!(b.len(), 2 * 3usize.pow(m as u32));
            assert_eq!(b.edge_count(), 3usize.pow(m as u32 + 1) - 3 + 1);
            b.validate().unwrap();
            let (p0, q0) = apexes(&b);
            assert_eq!((b.degree(p0), b.degree(q0)), (3, 3));
            let d = b.distances_from(&[p0, q0]);
            for c in b.boundary_vertices() {
                assert_eq!(d[c], Some((1 << m) - 1));
            }
        }
    }

    #[test]
    fn corner_distance_doubles() {
        for n in 1..=6 {
            let t = triangle_graph(n).unwrap();
            let a = t.find(Side::None, &vec![Letter::A; n]).unwrap();
            let b = t.find(Side::None, &vec![Letter::B; n]).unwrap();
            assert_eq!(t.distances_from(&[a])[b], Some((1 << n) - 1));
        }
    }

    #[test]
    fn line_graphs() {
        assert_eq!(line_graph(&triangle_graph(1).unwrap()).edge_count(), 3);
        let l = line_graph(&gamma_graph(1));
        assert_eq!(l.len(), 18);
        assert!((0..18).all(|v| l.degree(v) == 4));
    }

    #[test]
    fn bipartite() {
        let k2 = SubstGraph::from_parts(0, vec![
            VertexAddress { side: Side::None, root: Some(0), word: vec![], edge: None, raw_id: 0 },
            VertexAddress { side: Side::None, root: Some(1), word: vec![], edge: None, raw_id: 0 },
        ], &[(0, 1)], vec![false; 2], None).unwrap();
        assert!(is_partageable(&k2).unwrap().is_some());
        for n in 0..=4 {
            assert!(is_partageable(&gamma_graph(n)).unwrap().is_none());
        }
    }

    #[test]
    fn transposition_on_t2() {
        let t = triangle_graph(2).unwrap();
        let map = automorphism_from_corner_perm(&t, [Letter::B, Letter::A, Letter::C]).unwrap();
        let ab = t.find(Side::None, &w("AB")).unwrap();
        let ba = t.find(Side::None, &w("BA")).unwrap();
        assert_eq!(map[ab], ba);
        assert!(is_automorphism(&t, &map));
    }

    #[test]
    fn exactly_six_corner_automorphisms() {
        let t = triangle_graph(3).unwrap();
        let mut maps = Vec::new();
        for p in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let perm = p.map(Letter::from_index);
            let m = automorphism_from_corner_perm(&t, perm).unwrap();
            assert!(is_automorphism(&t, &m));
            maps.push(m);
        }
        maps.sort();
        maps.dedup();
        assert_eq!(maps.len(), 6);
    }

    #[test]
    fn k4_identity_covering() {
        let g = k4();
        let c = covering_to_gamma0(&g, &[(0, 0), (1, 1), (2, 2), (3, 3)]).unwrap();
        assert_eq!(c.target_labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn four_anchor_covering_on_ball() {
        let b = pascal_ball(3).unwrap();
        let (p0, pd) = apexes(&b);
        let n0: Vec<usize> = b.neighbors(p0).iter().copied().filter(|&q| q != pd).collect();
        let c = covering_to_gamma0(&b, &[(p0, 0), (pd, 1), (n0[0], 2), (n0[1], 3)]).unwrap();
        assert!(c.is_valid(&b));
        let mut dual: Vec<u8> = b.neighbors(pd).iter().filter(|&&q| q != p0).map(|&q| c.target_labels[q]).collect();
        dual.sort();
        assert_eq!(dual, vec![2, 3]);
    }
}
