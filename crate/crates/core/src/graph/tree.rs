use super::Graph;
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// Shortest-path tree rooted at one vertex.
///
/// Children of a vertex are stored as a contiguous slice of the BFS order,
/// which keeps a tree at five `u32` words per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsTree {
    root: usize,
    parent: Vec<u32>,
    depth: Vec<u32>,
    child_start: Vec<u32>,
    child_len: Vec<u32>,
    order: Vec<u32>,
    height: usize,
}

impl BfsTree {
    fn empty(n: usize, root: usize) -> Self {
        let mut tree = Self {
            root,
            parent: vec![NONE; n],
            depth: vec![NONE; n],
            child_start: vec![0; n],
            child_len: vec![0; n],
            order: Vec::new(),
            height: 0,
        };
        tree.depth[root] = 0;
        tree.order.push(root as u32);
        tree
    }

    /// Appends `children` (already sorted) under `parent`.
    fn attach(&mut self, parent: usize, children: &[usize]) {
        self.child_start[parent] = self.order.len() as u32;
        self.child_len[parent] = children.len() as u32;
        let d = self.depth[parent] + 1;
        for &c in children {
            self.parent[c] = parent as u32;
            self.depth[c] = d;
            self.order.push(c as u32);
        }
        if !children.is_empty() {
            self.height = self.height.max(d as usize);
        }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Number of vertices in the source graph (reachable or not).
    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NONE).then_some(p as usize)
    }

    pub fn depth(&self, v: usize) -> Option<usize> {
        let d = self.depth[v];
        (d != NONE).then_some(d as usize)
    }

    pub fn is_reachable(&self, v: usize) -> bool {
        self.depth[v] != NONE
    }

    pub fn children(&self, v: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        let start = self.child_start[v] as usize;
        let len = self.child_len[v] as usize;
        self.order[start..start + len].iter().map(|&c| c as usize)
    }

    pub fn child_count(&self, v: usize) -> usize {
        self.child_len[v] as usize
    }

    /// Tree neighbors of `v`: its parent (if any) followed by its children
    /// in ascending order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent(v).into_iter().chain(self.children(v))
    }

    pub fn neighbor_count(&self, v: usize) -> usize {
        self.child_count(v) + usize::from(self.parent[v] != NONE)
    }

    /// Greatest depth of any reachable vertex.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Largest tree-neighbor count over reachable vertices.
    pub fn max_tree_degree(&self) -> usize {
        self.bfs_order()
            .map(|v| self.neighbor_count(v))
            .max()
            .unwrap_or(0)
    }

    pub fn reachable_count(&self) -> usize {
        self.order.len()
    }

    /// Reachable vertices in BFS discovery order, starting at the root.
    pub fn bfs_order(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.order.iter().map(|&v| v as usize)
    }
}

/// Root-to-target path in a [`BfsTree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePath {
    vertices: Vec<usize>,
}

impl TreePath {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Number of edges on the path.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() <= 1
    }

    pub fn root(&self) -> usize {
        self.vertices[0]
    }

    pub fn target(&self) -> usize {
        *self.vertices.last().unwrap()
    }

    pub(crate) fn from_vertices(vertices: Vec<usize>) -> Self {
        debug_assert!(!vertices.is_empty());
        Self { vertices }
    }
}

/// Breadth-first search tree of `graph` from `root`, expanding neighbors in
/// ascending index order. Vertices outside the root's component are left
/// unreachable.
pub fn bfs_tree(graph: &Graph, root: usize) -> Result<BfsTree> {
    graph.check_vertex(root)?;
    let mut tree = BfsTree::empty(graph.vertex_count(), root);
    let mut children = Vec::new();
    let mut head = 0;
    while head < tree.order.len() {
        let u = tree.order[head] as usize;
        head += 1;
        children.clear();
        for &w in graph.neighbors(u) {
            if tree.depth[w] == NONE {
                children.push(w);
            }
        }
        tree.attach(u, &children);
    }
    Ok(tree)
}

/// Walks parent links from `target` back to the root.
pub fn path_to(tree: &BfsTree, target: usize) -> Result<TreePath> {
    if target >= tree.vertex_count() {
        return Err(Error::InvalidVertex(target));
    }
    if target == tree.root {
        return Err(Error::TargetIsRoot(target));
    }
    let Some(depth) = tree.depth(target) else {
        return Err(Error::NotInComponent {
            root: tree.root,
            vertex: target,
        });
    };
    let mut vertices = vec![0; depth + 1];
    let mut v = target;
    for slot in vertices.iter_mut().rev() {
        *slot = v;
        v = tree.parent(v).unwrap_or(v);
    }
    debug_assert_eq!(vertices[0], tree.root);
    Ok(TreePath { vertices })
}

/// Checks that every edge joins a user and a non-user.
pub fn validate_bipartite(graph: &Graph, is_user: &[bool]) -> Result<()> {
    if is_user.len() != graph.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.vertex_count(),
            found: is_user.len(),
        });
    }
    for (u, v) in graph.edges() {
        if is_user[u] == is_user[v] {
            return Err(Error::NotBipartite(u, v));
        }
    }
    Ok(())
}

/// Builds user-rooted trees over a validated bipartite graph in which every
/// non-root user is short-circuited: items co-rated by some user are joined
/// directly.
#[derive(Debug, Clone, Copy)]
pub struct ShortcutBuilder<'a> {
    graph: &'a Graph,
    is_user: &'a [bool],
}

impl<'a> ShortcutBuilder<'a> {
    pub fn new(graph: &'a Graph, is_user: &'a [bool]) -> Result<Self> {
        validate_bipartite(graph, is_user)?;
        Ok(Self { graph, is_user })
    }

    pub fn tree(&self, user_root: usize) -> Result<BfsTree> {
        let graph = self.graph;
        graph.check_vertex(user_root)?;
        if !self.is_user[user_root] {
            return Err(Error::Data(format!(
                "shortcut root {user_root} is not a user vertex"
            )));
        }
        let n = graph.vertex_count();
        let mut tree = BfsTree::empty(n, user_root);
        // A user's items are all discovered the first time any of them is
        // expanded, so each user is scanned at most once per tree.
        let mut scanned = vec![false; n];
        scanned[user_root] = true;
        let mut found = Vec::new();
        let mut head = 0;
        while head < tree.order.len() {
            let u = tree.order[head] as usize;
            head += 1;
            found.clear();
            if u == user_root {
                found.extend(graph.neighbors(u).iter().copied());
                for &m in &found {
                    tree.depth[m] = 0;
                }
            } else {
                for &user in graph.neighbors(u) {
                    if scanned[user] {
                        continue;
                    }
                    scanned[user] = true;
                    for &m in graph.neighbors(user) {
                        if tree.depth[m] == NONE {
                            tree.depth[m] = 0;
                            found.push(m);
                        }
                    }
                }
                found.sort_unstable();
            }
            tree.attach(u, &found);
        }
        Ok(tree)
    }
}

/// Shortcut tree for a single user root; see [`ShortcutBuilder`].
pub fn shortcut_bipartite_tree(graph: &Graph, user_root: usize, is_user: &[bool]) -> Result<BfsTree> {
    ShortcutBuilder::new(graph, is_user)?.tree(user_root)
}
