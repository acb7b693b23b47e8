use crate::state::NodeState;
use crate::token::Ident;
use crate::topology::Topology;

/// Parent edges of one snapshot, resolved to global node indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IIGraph {
    pub parent: Vec<Option<usize>>,
    pub rid: Vec<Ident>,
    /// Nodes whose parent port does not exist.
    pub dangling: Vec<usize>,
}

pub fn extract_iig(snapshot: &[NodeState], t: &Topology) -> IIGraph {
    let mut dangling = Vec::new();
    let parent = snapshot
        .iter()
        .enumerate()
        .map(|(v, s)| {
            let p = s.core().parent?;
            if p == 0 || p as usize > t.degree(v) {
                dangling.push(v);
                return None;
            }
            Some(t.peer(v, p).node)
        })
        .collect();
    IIGraph { parent, rid: snapshot.iter().map(|s| s.core().rid.clone()).collect(), dangling }
}

impl IIGraph {
    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parent.iter().flatten().count()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&v| self.parent[v].is_none()).collect()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.node_count()).filter(|&w| self.parent[w] == Some(v)).collect()
    }

    /// A directed cycle, if any.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        let n = self.node_count();
        // 0 unvisited, 1 on the current walk, 2 known to reach a root
        let mut mark = vec![0u8; n];
        for start in 0..n {
            let mut walk = Vec::new();
            let mut v = start;
            loop {
                match mark[v] {
                    2 => break,
                    1 => {
                        let at = walk.iter().position(|&w| w == v).unwrap();
                        return Some(walk[at..].to_vec());
                    }
                    _ => {}
                }
                mark[v] = 1;
                walk.push(v);
                match self.parent[v] {
                    Some(p) => v = p,
                    None => break,
                }
            }
            for w in walk {
                mark[w] = 2;
            }
        }
        None
    }

    pub fn is_forest(&self) -> bool {
        self.dangling.is_empty() && self.find_cycle().is_none()
    }

    /// `r` and its descendants. Terminates on cyclic graphs too.
    pub fn subtree(&self, r: usize) -> Vec<usize> {
        let n = self.node_count();
        let mut kids = vec![Vec::new(); n];
        for w in 0..n {
            if let Some(p) = self.parent[w] {
                kids[p].push(w);
            }
        }
        let mut seen = vec![false; n];
        let mut out = vec![r];
        seen[r] = true;
        let mut i = 0;
        while i < out.len() {
            for &w in &kids[out[i]] {
                if !seen[w] {
                    seen[w] = true;
                    out.push(w);
                }
            }
            i += 1;
        }
        out
    }

    /// Nodes of `r`'s subtree that share `r`'s identifier.
    pub fn id_subtree(&self, r: usize) -> Vec<usize> {
        let mut s: Vec<usize> = self.subtree(r).into_iter().filter(|&w| self.rid[w] == self.rid[r]).collect();
        s.sort_unstable();
        s
    }

    /// Path from `v` up to its root, `v` first. Stops at a repeated node.
    pub fn path_to_root(&self, v: usize) -> Vec<usize> {
        let mut seen = vec![false; self.node_count()];
        let mut out = Vec::new();
        let mut cur = Some(v);
        while let Some(w) = cur {
            if seen[w] {
                break;
            }
            seen[w] = true;
            out.push(w);
            cur = self.parent[w];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(parent: &[Option<usize>]) -> IIGraph {
        IIGraph { parent: parent.to_vec(), rid: vec![Ident::Top; parent.len()], dangling: vec![] }
    }

    #[test]
    fn edgeless_and_chain() {
        let g = graph(&[None, None, None]);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.roots(), vec![0, 1, 2]);
        let g = graph(&[None, Some(0), Some(1)]);
        assert_eq!(g.edge_count(), 2);
        assert!(g.is_forest());
        assert_eq!(g.subtree(1), vec![1, 2]);
        assert_eq!(g.path_to_root(2), vec![2, 1, 0]);
    }

    #[test]
    fn cycles_are_found() {
        let g = graph(&[Some(2), Some(0), Some(1), None]);
        let mut c = g.find_cycle().unwrap();
        c.sort_unstable();
        assert_eq!(c, vec![0, 1, 2]);
        assert_eq!(g.subtree(3), vec![3]);
        assert_eq!(g.path_to_root(0).len(), 3);
    }
}
