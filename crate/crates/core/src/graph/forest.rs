use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::{bfs_tree, Graph, ShortcutBuilder};
use crate::error::Result;
use super::BfsTree;

/// One tree per training root.
///
/// `Eager` holds every tree in memory (five `u32` arrays of length `V`
/// each). `Lazy` rebuilds plain BFS trees on demand behind a small LRU
/// cache, for graphs where `V²` words do not fit.
pub struct Forest {
    roots: Vec<usize>,
    storage: Storage,
}

enum Storage {
    Eager(Vec<Option<Arc<BfsTree>>>),
    Lazy {
        graph: Arc<Graph>,
        cache: Mutex<Lru>,
    },
}

struct Lru {
    capacity: usize,
    trees: HashMap<usize, Arc<BfsTree>>,
    recency: VecDeque<usize>,
}

impl Lru {
    fn get(&mut self, root: usize) -> Option<Arc<BfsTree>> {
        let tree = self.trees.get(&root)?.clone();
        if let Some(pos) = self.recency.iter().position(|&r| r == root) {
            self.recency.remove(pos);
        }
        self.recency.push_back(root);
        Some(tree)
    }

    fn put(&mut self, root: usize, tree: Arc<BfsTree>) {
        if self.capacity == 0 {
            return;
        }
        if self.trees.len() >= self.capacity {
            if let Some(old) = self.recency.pop_front() {
                self.trees.remove(&old);
            }
        }
        self.trees.insert(root, tree);
        self.recency.push_back(root);
    }
}

impl Forest {
    /// Builds a BFS tree for every vertex, in parallel.
    pub fn build(graph: &Graph) -> Self {
        let n = graph.vertex_count();
        let trees = (0..n)
            .into_par_iter()
            .map(|root| Some(Arc::new(bfs_tree(graph, root).expect("root in range"))))
            .collect();
        Self {
            roots: (0..n).collect(),
            storage: Storage::Eager(trees),
        }
    }

    /// Builds shortcut trees rooted at every user of a bipartite graph.
    pub fn build_shortcut(graph: &Graph, is_user: &[bool]) -> Result<Self> {
        let builder = ShortcutBuilder::new(graph, is_user)?;
        let roots: Vec<usize> = (0..graph.vertex_count()).filter(|&v| is_user[v]).collect();
        let built: Vec<(usize, BfsTree)> = roots
            .par_iter()
            .map(|&r| builder.tree(r).map(|t| (r, t)))
            .collect::<Result<_>>()?;
        let mut trees = vec![None; graph.vertex_count()];
        for (r, t) in built {
            trees[r] = Some(Arc::new(t));
        }
        Ok(Self {
            roots,
            storage: Storage::Eager(trees),
        })
    }

    /// On-demand plain BFS trees, caching at most `capacity` of them.
    pub fn lazy(graph: Arc<Graph>, capacity: usize) -> Self {
        let roots = (0..graph.vertex_count()).collect();
        Self {
            roots,
            storage: Storage::Lazy {
                graph,
                cache: Mutex::new(Lru {
                    capacity,
                    trees: HashMap::new(),
                    recency: VecDeque::new(),
                }),
            },
        }
    }

    /// Roots the trainer iterates over, ascending.
    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn tree(&self, root: usize) -> Option<Arc<BfsTree>> {
        match &self.storage {
            Storage::Eager(trees) => trees.get(root).and_then(Clone::clone),
            Storage::Lazy { graph, cache } => {
                if root >= graph.vertex_count() {
                    return None;
                }
                if let Some(t) = cache.lock().unwrap().get(root) {
                    return Some(t);
                }
                let tree = Arc::new(bfs_tree(graph, root).ok()?);
                cache.lock().unwrap().put(root, tree.clone());
                Some(tree)
            }
        }
    }
}
