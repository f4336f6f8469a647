//! Shared simulation state split into per-node slots.
//!
//! Each locality's tasks touch only the slots that locality owns; everything
//! crossing locality boundaries flows through channels and parcels. The
//! driver owns setup and teardown single-threaded.

use octobox_fmm::{CellGravity, NodeMultipoles, Taylor};
use octobox_grid::state::NFIELDS;
use octobox_grid::tree::Domain;
use octobox_grid::{HaloPlan, Octree, SubGrid, TreeKey};
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

pub struct NodeSlot {
    pub key: TreeKey,
    pub refined: bool,
    pub locality: u32,
    pub sub: Mutex<SubGrid>,
    pub u0: Mutex<Vec<[f64; NFIELDS]>>,
    pub moments: Mutex<Option<Arc<NodeMultipoles>>>,
    pub taylor: Mutex<Option<Arc<Vec<Taylor>>>>,
    pub gravity: Mutex<Option<Arc<Vec<CellGravity>>>>,
}

pub struct World {
    pub n: usize,
    pub g: usize,
    pub domain: Domain,
    pub slots: BTreeMap<TreeKey, Arc<NodeSlot>>,
    pub localities: u32,
    /// All node keys per locality, (level, sfc) sorted.
    pub keys_by_locality: Vec<Vec<TreeKey>>,
    pub leaves_by_locality: Vec<Vec<TreeKey>>,
    pub plan: HaloPlan,
    pub max_level: u8,
}

impl World {
    pub fn from_tree(tree: Octree, localities: u32) -> Result<World, octobox_grid::GridError> {
        let plan = HaloPlan::build(&tree)?;
        let n = tree.n;
        let g = tree.g;
        let domain = tree.domain;
        let max_level = tree.max_level();
        let mut slots = BTreeMap::new();
        let mut keys_by_locality = vec![Vec::new(); localities as usize];
        let mut leaves_by_locality = vec![Vec::new(); localities as usize];
        for key in tree.keys() {
            let node = tree.get(&key).unwrap();
            keys_by_locality[node.locality as usize].push(key);
            if !node.refined {
                leaves_by_locality[node.locality as usize].push(key);
            }
            slots.insert(
                key,
                Arc::new(NodeSlot {
                    key,
                    refined: node.refined,
                    locality: node.locality,
                    sub: Mutex::new(node.sub.clone()),
                    u0: Mutex::new(Vec::new()),
                    moments: Mutex::new(None),
                    taylor: Mutex::new(None),
                    gravity: Mutex::new(None),
                }),
            );
        }
        Ok(World {
            n,
            g,
            domain,
            slots,
            localities,
            keys_by_locality,
            leaves_by_locality,
            plan,
            max_level,
        })
    }

    pub fn owner(&self, key: &TreeKey) -> u32 {
        self.slots[key].locality
    }

    pub fn leaf_keys(&self) -> Vec<TreeKey> {
        self.slots
            .values()
            .filter(|s| !s.refined)
            .map(|s| s.key)
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.slots.values().filter(|s| !s.refined).count()
    }

    /// Rebuild a plain tree (restriction refreshed) for checkpointing,
    /// dumps, and test comparisons.
    pub fn to_tree(&self) -> Octree {
        let mut tree = Octree::build(self.n, self.g, self.domain, 1, |_| false);
        for slot in self.slots.values() {
            if slot.refined {
                ensure_path(&mut tree, slot.key);
                if !tree.get(&slot.key).map(|n| n.refined).unwrap_or(false) {
                    tree.refine_node(slot.key);
                }
            }
        }
        for slot in self.slots.values() {
            let node = tree.get_mut(&slot.key).expect("slot key present");
            node.locality = slot.locality;
            node.sub = slot.sub.lock().unwrap().clone();
        }
        tree.restrict_interior();
        tree
    }

    /// Per-level (nodes, leaves) counts.
    pub fn level_counts(&self) -> Vec<(usize, usize)> {
        let mut counts = vec![(0usize, 0usize); self.max_level as usize + 1];
        for slot in self.slots.values() {
            let e = &mut counts[slot.key.level as usize];
            e.0 += 1;
            if !slot.refined {
                e.1 += 1;
            }
        }
        counts
    }
}

fn ensure_path(tree: &mut Octree, key: TreeKey) {
    if tree.contains(&key) {
        return;
    }
    let parent = key.parent().expect("root always present");
    ensure_path(tree, parent);
    if !tree.get(&parent).unwrap().refined {
        tree.refine_node(parent);
    }
}
