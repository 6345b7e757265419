use std::collections::{BTreeMap, HashMap};
use std::fmt::Display;

use super::CorpusError;

/// Maximum total weight of an assignment over a dense `rows × cols` weight
/// matrix; zero entries stand for missing edges.
fn assignment_value(w: &[Vec<f64>]) -> f64 {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let transposed = rows > cols;
    let (n, m) = if transposed {
        (cols, rows)
    } else {
        (rows, cols)
    };
    let cost = |i: usize, j: usize| if transposed { -w[j][i] } else { -w[i][j] };
    // Hungarian algorithm with potentials, 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| -cost(p[j] - 1, j - 1))
        .sum()
}

/// Edges of one connected component, with local node indices.
struct Component {
    lefts: usize,
    rights: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Component {
    /// Best matching value with the given local nodes removed.
    fn value(&self, left_gone: &[bool], right_gone: &[bool]) -> f64 {
        let li: Vec<usize> = (0..self.lefts).filter(|&i| !left_gone[i]).collect();
        let ri: Vec<usize> = (0..self.rights).filter(|&j| !right_gone[j]).collect();
        let mut lpos = vec![usize::MAX; self.lefts];
        let mut rpos = vec![usize::MAX; self.rights];
        li.iter().enumerate().for_each(|(k, &i)| lpos[i] = k);
        ri.iter().enumerate().for_each(|(k, &j)| rpos[j] = k);
        let mut w = vec![vec![0.0; ri.len()]; li.len()];
        for &(i, j, wt) in &self.edges {
            if lpos[i] != usize::MAX && rpos[j] != usize::MAX {
                w[lpos[i]][rpos[j]] = wt;
            }
        }
        assignment_value(&w)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Exact maximum-weight bipartite matching.
///
/// Among all matchings of maximum total weight, returns the one whose pair
/// list, sorted by `(left, right)`, is lexicographically smallest. Weights
/// within `1e-9 * (1 + optimum)` of each other count as equal. The result is
/// sorted.
pub fn max_weight_matching<L, R>(edges: &[(L, R, f64)]) -> Result<Vec<(L, R)>, CorpusError>
where
    L: Ord + Clone + Display,
    R: Ord + Clone + Display,
{
    let invalid = |l: &L, r: &R, reason: &str| CorpusError::InvalidEdge {
        left: l.to_string(),
        right: r.to_string(),
        reason: reason.to_string(),
    };
    let mut sorted: Vec<&(L, R, f64)> = edges.iter().collect();
    sorted.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    for pair in sorted.windows(2) {
        if (&pair[0].0, &pair[0].1) == (&pair[1].0, &pair[1].1) {
            return Err(invalid(&pair[0].0, &pair[0].1, "duplicate edge"));
        }
    }
    if let Some((l, r, _)) = sorted.iter().find(|e| !(e.2.is_finite() && e.2 > 0.0)) {
        return Err(invalid(l, r, "weight must be positive and finite"));
    }

    let mut left_ids: BTreeMap<&L, usize> = BTreeMap::new();
    let mut right_ids: BTreeMap<&R, usize> = BTreeMap::new();
    for (l, r, _) in &sorted {
        let n = left_ids.len();
        left_ids.entry(l).or_insert(n);
        let n = right_ids.len();
        right_ids.entry(r).or_insert(n);
    }
    let nl = left_ids.len();
    let mut parent: Vec<usize> = (0..nl + right_ids.len()).collect();
    let global: Vec<(usize, usize, f64)> = sorted
        .iter()
        .map(|(l, r, w)| (left_ids[l], right_ids[r], *w))
        .collect();
    for &(i, j, _) in &global {
        let (a, b) = (find(&mut parent, i), find(&mut parent, nl + j));
        parent[a] = b;
    }

    // split into components with local indices
    let mut comp_of_root: HashMap<usize, usize> = HashMap::new();
    let mut comps: Vec<Component> = Vec::new();
    let mut left_local = vec![(0usize, 0usize); nl];
    let mut right_local = vec![(0usize, 0usize); right_ids.len()];
    let mut left_seen = vec![false; nl];
    let mut right_seen = vec![false; right_ids.len()];
    let mut edge_loc = Vec::with_capacity(global.len());
    for &(i, j, w) in &global {
        let root = find(&mut parent, i);
        let c = *comp_of_root.entry(root).or_insert_with(|| {
            comps.push(Component {
                lefts: 0,
                rights: 0,
                edges: Vec::new(),
            });
            comps.len() - 1
        });
        if !left_seen[i] {
            left_seen[i] = true;
            left_local[i] = (c, comps[c].lefts);
            comps[c].lefts += 1;
        }
        if !right_seen[j] {
            right_seen[j] = true;
            right_local[j] = (c, comps[c].rights);
            comps[c].rights += 1;
        }
        let (li, rj) = (left_local[i].1, right_local[j].1);
        comps[c].edges.push((li, rj, w));
        edge_loc.push((c, li, rj, w));
    }

    let mut left_gone: Vec<Vec<bool>> = comps.iter().map(|c| vec![false; c.lefts]).collect();
    let mut right_gone: Vec<Vec<bool>> = comps.iter().map(|c| vec![false; c.rights]).collect();
    let mut rest: Vec<f64> = comps
        .iter()
        .enumerate()
        .map(|(c, comp)| comp.value(&left_gone[c], &right_gone[c]))
        .collect();
    let optimum: f64 = rest.iter().sum();
    let tol = 1e-9 * (1.0 + optimum.abs());

    let mut fixed_weight = 0.0;
    let mut chosen = Vec::new();
    let mut cursor = 0;
    while optimum - fixed_weight > tol && cursor < edge_loc.len() {
        let (c, li, rj, w) = edge_loc[cursor];
        cursor += 1;
        if left_gone[c][li] || right_gone[c][rj] {
            continue;
        }
        left_gone[c][li] = true;
        right_gone[c][rj] = true;
        let without = comps[c].value(&left_gone[c], &right_gone[c]);
        let others: f64 = rest
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != c)
            .map(|(_, v)| v)
            .sum();
        if fixed_weight + w + without + others >= optimum - tol {
            fixed_weight += w;
            rest[c] = without;
            chosen.push(cursor - 1);
        } else {
            left_gone[c][li] = false;
            right_gone[c][rj] = false;
        }
    }
    Ok(chosen
        .into_iter()
        .map(|k| (sorted[k].0.clone(), sorted[k].1.clone()))
        .collect())
}

/// Total weight of `pairs` under `edges`; pairs without an edge count zero.
pub fn matching_weight<L: Ord, R: Ord>(edges: &[(L, R, f64)], pairs: &[(L, R)]) -> f64 {
    let lookup: BTreeMap<(&L, &R), f64> = edges.iter().map(|(l, r, w)| ((l, r), *w)).collect();
    pairs
        .iter()
        .map(|(l, r)| lookup.get(&(l, r)).copied().unwrap_or(0.0))
        .sum()
}
