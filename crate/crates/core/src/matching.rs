//! Maximum bipartite matching between equations (left side) and the
//! variables they contain (right side).
//!
//! Augmenting paths are found by depth-first search from each unmatched
//! left vertex (Kuhn's algorithm). The graphs handled here are structure
//! matrices of desk-scale models, so the O(V·E) bound is more than enough.

/// A maximum matching of a bipartite graph given by left-side adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    left_to_right: Vec<Option<usize>>,
    right_to_left: Vec<Option<usize>>,
}

impl Matching {
    /// Computes a maximum matching. `adjacency[l]` lists the right vertices
    /// adjacent to left vertex `l`; every entry must be `< n_right`.
    ///
    /// Left vertices are tried in ascending order and neighbours in the
    /// order given, so the result is deterministic.
    pub fn maximum(adjacency: &[Vec<usize>], n_right: usize) -> Self {
        let mut m = Matching { left_to_right: vec![None; adjacency.len()], right_to_left: vec![None; n_right] };
        let mut visited = vec![false; n_right];
        for l in 0..adjacency.len() {
            visited.iter_mut().for_each(|v| *v = false);
            m.augment(l, adjacency, &mut visited);
        }
        m
    }

    fn augment(&mut self, l: usize, adjacency: &[Vec<usize>], visited: &mut [bool]) -> bool {
        for &r in &adjacency[l] {
            if visited[r] {
                continue;
            }
            visited[r] = true;
            let free = match self.right_to_left[r] {
                None => true,
                Some(other) => self.augment(other, adjacency, visited),
            };
            if free {
                self.left_to_right[l] = Some(r);
                self.right_to_left[r] = Some(l);
                return true;
            }
        }
        false
    }

    pub fn size(&self) -> usize {
        self.left_to_right.iter().filter(|m| m.is_some()).count()
    }

    /// True when every left vertex is matched.
    pub fn saturates_left(&self) -> bool {
        self.left_to_right.iter().all(Option::is_some)
    }

    pub fn right_of(&self, left: usize) -> Option<usize> {
        self.left_to_right[left]
    }

    pub fn left_of(&self, right: usize) -> Option<usize> {
        self.right_to_left[right]
    }

    pub fn left_to_right(&self) -> &[Option<usize>] {
        &self.left_to_right
    }

    /// A set of left vertices whose neighbourhood is strictly smaller than
    /// the set itself, or `None` if the matching saturates the left side.
    ///
    /// Starting from the first unmatched left vertex, collect everything
    /// reachable by alternating paths (left → any neighbour → its matched
    /// partner). Every right vertex reached is matched (the matching is
    /// maximum), and its partner is in the set, so the set has exactly one
    /// more left vertex than it has neighbours.
    pub fn hall_violator(&self, adjacency: &[Vec<usize>]) -> Option<Vec<usize>> {
        let start = self.left_to_right.iter().position(Option::is_none)?;
        let mut in_set = vec![false; adjacency.len()];
        let mut seen_right = vec![false; self.right_to_left.len()];
        let mut stack = vec![start];
        in_set[start] = true;
        while let Some(l) = stack.pop() {
            for &r in &adjacency[l] {
                if seen_right[r] {
                    continue;
                }
                seen_right[r] = true;
                let partner =
                    self.right_to_left[r].expect("maximum matching leaves no free right vertex on an alternating path");
                if !in_set[partner] {
                    in_set[partner] = true;
                    stack.push(partner);
                }
            }
        }
        Some((0..adjacency.len()).filter(|&l| in_set[l]).collect())
    }
}
