//! Greedy graph coloring of the matrix adjacency pattern.

use super::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    /// Color of each node.
    pub colors: Vec<usize>,
    /// Number of colors used.
    pub count: usize,
    /// Nodes grouped by color, ascending index within a color.
    pub order: Vec<usize>,
    /// `order[offsets[c]..offsets[c + 1]]` are the nodes of color `c`.
    pub offsets: Vec<usize>,
}

impl Coloring {
    pub fn nodes_of(&self, color: usize) -> &[usize] {
        &self.order[self.offsets[color]..self.offsets[color + 1]]
    }

    /// Checks that no two adjacent nodes of `a` share a color.
    pub fn is_proper(&self, a: &CsrMatrix) -> bool {
        (0..a.nrows()).all(|r| a.row_iter(r).all(|(c, _)| c == r || self.colors[c] != self.colors[r]))
    }
}

/// Symmetrized off-diagonal adjacency lists, sorted and deduplicated.
fn adjacency(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj = vec![Vec::new(); n];
    for r in 0..n {
        for (c, _) in a.row_iter(r) {
            if c != r && c < n {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Palette-rotating greedy coloring. Nodes are visited by descending degree
/// (ties by ascending index); each takes the first palette color absent from
/// its painted neighbours, and that color moves to the back of the palette.
pub fn greedy_color(a: &CsrMatrix) -> Coloring {
    let n = a.nrows();
    let adj = adjacency(a);
    let mut visit: Vec<usize> = (0..n).collect();
    visit.sort_by(|&x, &y| adj[y].len().cmp(&adj[x].len()).then(x.cmp(&y)));

    const UNPAINTED: usize = usize::MAX;
    let mut colors = vec![UNPAINTED; n];
    let mut palette: Vec<usize> = Vec::new();
    // blocked[c] == node + 1 means color c is used by a neighbour of node
    let mut blocked: Vec<usize> = Vec::new();
    for &v in &visit {
        for &u in &adj[v] {
            if colors[u] != UNPAINTED {
                blocked[colors[u]] = v + 1;
            }
        }
        let color = match palette.iter().position(|&c| blocked[c] != v + 1) {
            Some(pos) => palette.remove(pos),
            None => {
                blocked.push(0);
                blocked.len() - 1
            }
        };
        palette.push(color);
        colors[v] = color;
    }

    let count = blocked.len();
    let mut offsets = vec![0usize; count + 1];
    for &c in &colors {
        offsets[c + 1] += 1;
    }
    for c in 0..count {
        offsets[c + 1] += offsets[c];
    }
    let mut fill = offsets.clone();
    let mut order = vec![0usize; n];
    for (v, &c) in colors.iter().enumerate() {
        order[fill[c]] = v;
        fill[c] += 1;
    }
    Coloring { colors, count, order, offsets }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pattern(n: usize, edges: &[(usize, usize)]) -> CsrMatrix {
        let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        for &(a, b) in edges {
            t.push((a, b, 1.0));
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    /// Smallest k admitting a proper coloring, by exhaustive search.
    fn chromatic_number(n: usize, edges: &[(usize, usize)]) -> usize {
        for k in 1..=n {
            let mut assign = vec![0usize; n];
            loop {
                if edges.iter().all(|&(a, b)| assign[a] != assign[b]) {
                    return k;
                }
                let mut i = 0;
                while i < n {
                    assign[i] += 1;
                    if assign[i] < k {
                        break;
                    }
                    assign[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
        n
    }

    #[test]
    fn diagonal_uses_one_color() {
        let c = greedy_color(&CsrMatrix::identity(5));
        assert_eq!(c.count, 1);
        assert_eq!(c.order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn triangle_needs_three() {
        let a = pattern(3, &[(0, 1), (1, 2), (0, 2)]);
        let c = greedy_color(&a);
        assert_eq!(c.count, 3);
        assert!(c.is_proper(&a));
    }

    #[test]
    fn path_matches_brute_force() {
        let edges = [(0, 1), (1, 2)];
        let c = greedy_color(&pattern(3, &edges));
        assert_eq!(c.count, chromatic_number(3, &edges));
        assert_eq!(c.count, 2);
    }

    #[test]
    fn one_sided_pattern_is_symmetrized() {
        let a = pattern(2, &[(0, 1)]);
        let c = greedy_color(&a);
        assert_eq!(c.count, 2);
    }

    #[test]
    fn random_patterns_are_proper_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.gen_range(1..40);
            let density = rng.gen_range(0.0..0.5);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && rng.gen::<f64>() < density {
                        edges.push((a, b));
                    }
                }
            }
            let a = pattern(n, &edges);
            let c = greedy_color(&a);
            assert!(c.is_proper(&a));
            let max_degree = adjacency(&a).iter().map(Vec::len).max().unwrap_or(0);
            assert!(c.count <= max_degree + 1);
            let mut seen = c.order.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }
}
