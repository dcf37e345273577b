//! The binomial-parity model of the Pascal graph in ℤ², its contraction Π̄
//! and the bréchet classes.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Letter, Side, SubstGraph, VertexAddress};

pub type Cell = (i64, i64);

/// The six lattice directions T, S, T⁻¹S, T⁻¹, S⁻¹, TS⁻¹.
pub const DIRECTIONS: [Cell; 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

pub fn direction_name(d: Cell) -> &'static str {
    match d {
        (1, 0) => "T",
        (0, 1) => "S",
        (-1, 1) => "T^-1 S",
        (-1, 0) => "T^-1",
        (0, -1) => "S^-1",
        (1, -1) => "T S^-1",
        _ => "?",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PlaneCell {
    pub k: i64,
    pub l: i64,
}

fn binom_odd(n: i64, k: i64) -> bool {
    // Lucas: C(n, k) is odd iff k's bits are a subset of n's.
    0 <= k && k <= n && (k & (n - k)) == 0
}

/// The configuration p with p₀ at the origin and p₀^∨ at (1, 0).
pub fn pascal_value(k: i64, l: i64) -> bool {
    if l > 0 {
        return false;
    }
    let depth = -l;
    if k <= 0 {
        binom_odd(-k + depth, -k)
    } else if k <= depth {
        false
    } else {
        binom_odd(k - 1, k - depth - 1)
    }
}

/// 2×2 integer matrix acting on column vectors (k, l).
pub type Mat2 = [[i64; 2]; 2];

pub const I_MAT: Mat2 = [[-1, -1], [0, 1]];
pub const R_MAT: Mat2 = [[0, 1], [-1, -1]];
pub const E_MAT: Mat2 = [[1, 0], [0, 1]];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat_apply(a: &Mat2, v: Cell) -> Cell {
    (a[0][0] * v.0 + a[0][1] * v.1, a[1][0] * v.0 + a[1][1] * v.1)
}

pub fn mat_inv(a: &Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] * det, -a[0][1] * det], [-a[1][0] * det, a[0][0] * det]]
}

/// The six elements of 𝔖 in the fixed order e, i, r, ri, r², r²i.
pub fn symmetry_group() -> [Mat2; 6] {
    let r2 = mat_mul(&R_MAT, &R_MAT);
    [E_MAT, I_MAT, R_MAT, mat_mul(&R_MAT, &I_MAT), r2, mat_mul(&r2, &I_MAT)]
}

pub fn group_index(m: &Mat2) -> usize {
    symmetry_group().iter().position(|g| g == m).expect("element of the symmetry group")
}

/// Triangle type: the pair of directions towards the other two cells of the
/// triangle containing a cell.
pub fn type_directions(t: Letter) -> [Cell; 2] {
    match t {
        Letter::A => [(-1, 0), (0, -1)],
        Letter::B => [(1, 0), (1, -1)],
        Letter::C => [(0, 1), (-1, 1)],
    }
}

fn type_of_pair(pair: [Cell; 2]) -> Letter {
    for t in Letter::ALL {
        let d = type_directions(t);
        if (d[0] == pair[0] && d[1] == pair[1]) || (d[0] == pair[1] && d[1] == pair[0]) {
            return t;
        }
    }
    panic!("not a triangle direction pair")
}

/// The permutation of {a, b, c} induced by a group element.
pub fn letter_permutation(m: &Mat2) -> [Letter; 3] {
    Letter::ALL.map(|t| {
        let d = type_directions(t);
        type_of_pair([mat_apply(m, d[0]), mat_apply(m, d[1])])
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BrechetId {
    pub triangle_type: Letter,
    pub external_dir: Cell,
}

impl BrechetId {
    pub const B0: BrechetId = BrechetId { triangle_type: Letter::A, external_dir: (1, 0) };

    pub fn act(&self, m: &Mat2) -> BrechetId {
        BrechetId {
            triangle_type: letter_permutation(m)[self.triangle_type.index()],
            external_dir: mat_apply(m, self.external_dir),
        }
    }

    /// The six admissible classes, indexed like `symmetry_group`: class g is gB₀.
    pub fn all() -> [BrechetId; 6] {
        symmetry_group().map(|g| BrechetId::B0.act(&g))
    }

    /// Index g with self = gB₀.
    pub fn group_index(&self) -> usize {
        BrechetId::all().iter().position(|b| b == self).expect("admissible bréchet")
    }
}

/// Cell set of a window, with type and parent per cell.
#[derive(Clone, Debug, Serialize)]
pub struct Contracted {
    pub cell: Cell,
    pub triangle_type: Letter,
    pub parent: Cell,
}

fn triangle_type(cells: &HashSet<Cell>, c: Cell) -> Option<Letter> {
    let found: Vec<Letter> = Letter::ALL
        .into_iter()
        .filter(|&t| type_directions(t).iter().all(|d| cells.contains(&(c.0 + d.0, c.1 + d.1))))
        .collect();
    (found.len() == 1).then(|| found[0])
}

/// Classifies every cell by the triangle containing it and maps the triangle
/// to its parent cell (the inverse of the refinement rules). The parity class
/// of the configuration is read off the cells themselves.
pub fn plane_contract(cells: &HashSet<Cell>) -> Result<Vec<Contracted>> {
    let mut out = Vec::with_capacity(cells.len());
    let mut sorted: Vec<Cell> = cells.iter().copied().collect();
    sorted.sort_unstable();
    let mut zero_class: Option<Cell> = None;
    for &c in &sorted {
        let t = triangle_type(cells, c).ok_or(Error::NotInTriangle(c.0, c.1))?;
        let corner = match t {
            Letter::A => c,
            Letter::B => (c.0 + 1, c.1),
            Letter::C => (c.0, c.1 + 1),
        };
        let class = ((corner.0 - 1).rem_euclid(2), (corner.1 - 1).rem_euclid(2));
        match zero_class {
            None => zero_class = Some(class),
            Some(z) if z != class => return Err(Error::NotInTriangle(c.0, c.1)),
            _ => {}
        }
        let parent = ((corner.0 - (class.0 + 1) % 2).div_euclid(2), (corner.1 - (class.1 + 1) % 2).div_euclid(2));
        out.push(Contracted { cell: c, triangle_type: t, parent });
    }
    Ok(out)
}

/// Bréchet of a cell whose three neighbors all lie in `cells`.
pub fn brechet_of(c: Cell, cells: &HashSet<Cell>) -> Result<BrechetId> {
    let t = triangle_type(cells, c).ok_or(Error::NotInTriangle(c.0, c.1))?;
    let inner = type_directions(t);
    let ext: Vec<Cell> = DIRECTIONS
        .into_iter()
        .filter(|d| !inner.contains(d) && cells.contains(&(c.0 + d.0, c.1 + d.1)))
        .collect();
    if ext.len() != 1 {
        return Err(Error::NotInTriangle(c.0, c.1));
    }
    let b = BrechetId { triangle_type: t, external_dir: ext[0] };
    if !BrechetId::all().contains(&b) {
        return Err(Error::IdentityFailed(format!("inadmissible bréchet at {c:?}")));
    }
    Ok(b)
}

/// Cells of the configuration in the window l ∈ [−2^m, 1], k ∈ [−2^m, 2^m + 2].
pub fn parity_window(m: u32) -> HashSet<Cell> {
    let r = 1i64 << m;
    let mut cells = HashSet::new();
    for l in -r..=1 {
        for k in -r..=r + 2 {
            if pascal_value(k, l) {
                cells.insert((k, l));
            }
        }
    }
    cells
}

/// The m-triangles of (0, 0) and (1, 0) joined by their edge, as a graph,
/// with the cell of each vertex. Vertex 0 is (0, 0) and vertex 1 is (1, 0).
pub fn parity_patch(m: u32) -> Result<(SubstGraph, Vec<Cell>)> {
    if m == 0 {
        return Err(Error::InvalidArgument("patch level must be >= 1".into()));
    }
    let r = 1i64 << m;
    let window = parity_window(m);
    let mut coords: Vec<Cell> = vec![(0, 0), (1, 0)];
    let mut sides = vec![Side::Main, Side::Dual];
    for &(k, l) in &window {
        if (k, l) == (0, 0) || (k, l) == (1, 0) {
            continue;
        }
        let depth = -l;
        let left = k <= 0 && -k + depth < r;
        let right = k > depth && k - 1 < r;
        if left || right {
            coords.push((k, l));
            sides.push(if left { Side::Main } else { Side::Dual });
        }
    }
    let mut order: Vec<usize> = (2..coords.len()).collect();
    order.sort_by_key(|&i| coords[i]);
    let mut sorted = vec![coords[0], coords[1]];
    let mut sorted_sides = vec![sides[0], sides[1]];
    for i in order {
        sorted.push(coords[i]);
        sorted_sides.push(sides[i]);
    }
    let pos: HashMap<Cell, usize> = sorted.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut edges = Vec::new();
    for (i, &c) in sorted.iter().enumerate() {
        for d in DIRECTIONS {
            if let Some(&j) = pos.get(&(c.0 + d.0, c.1 + d.1)) {
                if i < j && (sorted_sides[i] == sorted_sides[j] || (i, j) == (0, 1)) {
                    edges.push((i, j));
                }
            }
        }
    }
    let vertices = sorted_sides
        .iter()
        .map(|&side| VertexAddress { side, root: None, word: Vec::new(), edge: None, raw_id: 0 })
        .collect();
    let mut degree = vec![0; sorted.len()];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    let boundary = degree.iter().map(|&d| d == 2).collect();
    let g = SubstGraph::from_parts(m as usize, vertices, &edges, boundary, None)?;
    Ok((g, sorted))
}

/// A graph isomorphism g1 → g2 extending the given vertex pairs, found by
/// backtracking over neighbor bijections.
pub fn anchored_isomorphism(g1: &SubstGraph, g2: &SubstGraph, anchors: &[(usize, usize)]) -> Option<Vec<usize>> {
    if g1.len() != g2.len() || g1.edge_count() != g2.edge_count() {
        return None;
    }
    let mut fwd = vec![usize::MAX; g1.len()];
    let mut bwd = vec![usize::MAX; g2.len()];
    for &(a, b) in anchors {
        if g1.degree(a) != g2.degree(b) {
            return None;
        }
        fwd[a] = b;
        bwd[b] = a;
    }
    fn consistent(g1: &SubstGraph, g2: &SubstGraph, fwd: &[usize], u: usize) -> bool {
        let v = fwd[u];
        g1.degree(u) == g2.degree(v)
            && g1.neighbors(u).iter().all(|&w| fwd[w] == usize::MAX || g2.has_edge(v, fwd[w]))
    }
    if !anchors.iter().all(|&(a, _)| consistent(g1, g2, &fwd, a)) {
        return None;
    }
    fn search(g1: &SubstGraph, g2: &SubstGraph, fwd: &mut Vec<usize>, bwd: &mut Vec<usize>) -> bool {
        let Some(u) = (0..g1.len()).find(|&u| fwd[u] != usize::MAX && g1.neighbors(u).iter().any(|&w| fwd[w] == usize::MAX))
        else {
            return fwd.iter().all(|&x| x != usize::MAX);
        };
        let free1: Vec<usize> = g1.neighbors(u).iter().copied().filter(|&w| fwd[w] == usize::MAX).collect();
        let free2: Vec<usize> = g2.neighbors(fwd[u]).iter().copied().filter(|&w| bwd[w] == usize::MAX).collect();
        if free1.len() != free2.len() {
            return false;
        }
        for perm in permutations(free2.len()) {
            for (i, &w) in free1.iter().enumerate() {
                fwd[w] = free2[perm[i]];
                bwd[free2[perm[i]]] = w;
            }
            if free1.iter().all(|&w| consistent(g1, g2, fwd, w)) && search(g1, g2, fwd, bwd) {
                return true;
            }
            for (i, &w) in free1.iter().enumerate() {
                fwd[w] = usize::MAX;
                bwd[free2[perm[i]]] = usize::MAX;
            }
        }
        false
    }
    search(g1, g2, &mut fwd, &mut bwd).then_some(fwd)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Cells fixed by the contraction, among cells of the patch.
pub fn contraction_fixed_cells(m: u32) -> Result<Vec<Cell>> {
    let (_, coords) = parity_patch(m)?;
    let cells: HashSet<Cell> = coords.iter().copied().collect();
    let mut fixed: Vec<Cell> = plane_contract(&cells)?
        .into_iter()
        .filter(|c| c.cell == c.parent)
        .map(|c| c.cell)
        .collect();
    fixed.sort_unstable();
    Ok(fixed)
}

/// True if the translate T^k S^l p agrees with s·p on the box |k|, |l| ≤ radius.
pub fn translate_equals_image(cell: Cell, s: &Mat2, radius: i64) -> bool {
    let inv = mat_inv(s);
    (-radius..=radius).all(|k| {
        (-radius..=radius).all(|l| {
            let (a, b) = mat_apply(&inv, (k, l));
            pascal_value(k + cell.0, l + cell.1) == pascal_value(a, b)
        })
    })
}

/// Cells of parity_patch(m) at which the configuration is an 𝔖-image of the
/// configuration at the origin, compared on a box of radius 2^{m+1}, which
/// is wide enough to exclude local coincidences inside the window.
pub fn origin_images(m: u32) -> Result<Vec<Cell>> {
    let (_, coords) = parity_patch(m)?;
    let group = symmetry_group();
    let radius = 1i64 << (m + 1);
    let mut out: Vec<Cell> =
        coords.into_iter().filter(|&c| group.iter().any(|s| translate_equals_image(c, s, radius))).collect();
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{apexes, pascal_ball};

    #[test]
    fn configuration_obeys_the_rule() {
        for k in -40..40 {
            for l in -40..40 {
                let s = pascal_value(k, l) as u8 + pascal_value(k + 1, l) as u8 + pascal_value(k, l + 1) as u8;
                assert_eq!(s % 2, 0, "({k}, {l})");
            }
        }
        assert!(!binom_odd(2, 1));
    }

    #[test]
    fn group_is_closed() {
        let g = symmetry_group();
        for a in &g {
            for b in &g {
                assert!(g.contains(&mat_mul(a, b)));
            }
        }
        assert_eq!(letter_permutation(&I_MAT), [Letter::B, Letter::A, Letter::C]);
        assert_eq!(letter_permutation(&R_MAT), [Letter::C, Letter::A, Letter::B]);
    }

    #[test]
    fn apex_brechets() {
        let cells = parity_window(3);
        assert_eq!(brechet_of((0, 0), &cells).unwrap(), BrechetId::B0);
        assert_eq!(brechet_of((1, 0), &cells).unwrap(), BrechetId::B0.act(&I_MAT));
    }

    #[test]
    fn patches_match_balls() {
        for m in 1..=4 {
            let (patch, _) = parity_patch(m).unwrap();
            let ball = pascal_ball(m as usize).unwrap();
            let (a, b) = apexes(&ball);
            assert!(anchored_isomorphism(&patch, &ball, &[(0, a), (1, b)]).is_some(), "m = {m}");
        }
    }

    #[test]
    fn contraction_shrinks_patch() {
        let (_, coords) = parity_patch(3).unwrap();
        let mut cells: HashSet<Cell> = coords.into_iter().collect();
        for _ in 0..3 {
            cells = plane_contract(&cells).unwrap().into_iter().map(|c| c.parent).collect();
        }
        let mut v: Vec<Cell> = cells.into_iter().collect();
        v.sort_unstable();
        assert_eq!(v, vec![(0, 0), (1, 0)]);
    }
}
