/// `order[new] = old`, `inverse[old] = new`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    pub order: Vec<usize>,
    pub inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    fn from_order(order: Vec<usize>) -> Self {
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        Self { order, inverse }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, mark: &mut [usize], stamp: usize) -> (usize, usize) {
    // (eccentricity of `start`, min-degree node of the deepest level)
    let mut level = vec![(start, 0usize)];
    mark[start] = stamp;
    let mut head = 0;
    while head < level.len() {
        let (u, lu) = level[head];
        head += 1;
        for &v in &adj[u] {
            if mark[v] != stamp {
                mark[v] = stamp;
                level.push((v, lu + 1));
            }
        }
    }
    let max_level = level.last().map(|&(_, l)| l).unwrap_or(0);
    let best = level
        .iter()
        .filter(|(_, l)| *l == max_level)
        .min_by_key(|(v, _)| (adj[*v].len(), *v))
        .map(|(v, _)| *v)
        .unwrap_or(start);
    (max_level, best)
}

/// Reverse Cuthill–McKee ordering with a George–Liu pseudo-peripheral start
/// node for every connected component. Deterministic for a given graph.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Permutation {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut mark = vec![usize::MAX; n];
    let mut stamp = 0usize;
    let mut order = Vec::with_capacity(n);
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral node search
        let mut root = seed;
        let (mut ecc, mut cand) = bfs_levels(adj, root, &mut mark, stamp);
        stamp += 1;
        loop {
            let (e2, c2) = bfs_levels(adj, cand, &mut mark, stamp);
            stamp += 1;
            if e2 > ecc {
                root = cand;
                ecc = e2;
                cand = c2;
            } else {
                root = if e2 == ecc { cand } else { root };
                break;
            }
        }
        let start = order.len();
        visited[root] = true;
        order.push(root);
        let mut head = start;
        let mut nbrs = Vec::new();
        while head < order.len() {
            let u = order[head];
            head += 1;
            nbrs.clear();
            nbrs.extend(adj[u].iter().copied().filter(|&v| !visited[v]));
            nbrs.sort_by_key(|&v| (adj[v].len(), v));
            for &v in &nbrs {
                visited[v] = true;
                order.push(v);
            }
        }
        order[start..].reverse();
    }
    Permutation::from_order(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rcm_is_a_permutation_and_reduces_path_bandwidth() {
        // a path graph labelled in a scrambled order
        let n = 40;
        let labels: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut adj = vec![Vec::new(); n];
        for w in labels.windows(2) {
            adj[w[0]].push(w[1]);
            adj[w[1]].push(w[0]);
        }
        let p = reverse_cuthill_mckee(&adj);
        let mut sorted = p.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        let bw = (0..n)
            .flat_map(|u| adj[u].iter().map(move |&v| (u, v)))
            .map(|(u, v)| p.inverse[u].abs_diff(p.inverse[v]))
            .max()
            .unwrap();
        assert_eq!(bw, 1);
    }
}
