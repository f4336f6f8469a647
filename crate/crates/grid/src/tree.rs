//! Octree construction, 2:1 grading, and SFC partitioning.

use crate::key::TreeKey;
use crate::subgrid::SubGrid;
use std::collections::BTreeMap;

/// Cubic simulation domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    /// Position of the low corner of the cube.
    pub corner: [f64; 3],
    /// Edge length.
    pub size: f64,
}

impl Domain {
    pub fn unit() -> Self {
        Domain {
            corner: [0.0; 3],
            size: 1.0,
        }
    }

    pub fn centered(size: f64) -> Self {
        Domain {
            corner: [-0.5 * size; 3],
            size,
        }
    }

    pub fn center(&self) -> [f64; 3] {
        [
            self.corner[0] + 0.5 * self.size,
            self.corner[1] + 0.5 * self.size,
            self.corner[2] + 0.5 * self.size,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub key: TreeKey,
    pub refined: bool,
    pub locality: u32,
    pub sub: SubGrid,
}

#[derive(Debug, Clone)]
pub struct Octree {
    pub n: usize,
    pub g: usize,
    pub domain: Domain,
    nodes: BTreeMap<TreeKey, TreeNode>,
}

impl Octree {
    /// Cell width at a given node level.
    pub fn cell_width(&self, level: u8) -> f64 {
        self.domain.size / (self.n as f64 * (1u64 << level) as f64)
    }

    fn make_subgrid(&self, key: TreeKey) -> SubGrid {
        let h = self.cell_width(key.level);
        let node_size = self.domain.size / (1u64 << key.level) as f64;
        let origin = [
            self.domain.corner[0] + key.idx[0] as f64 * node_size + 0.5 * h,
            self.domain.corner[1] + key.idx[1] as f64 * node_size + 0.5 * h,
            self.domain.corner[2] + key.idx[2] as f64 * node_size + 0.5 * h,
        ];
        SubGrid::new(self.n, self.g, h, origin, key.level)
    }

    /// Build a graded tree. `levels` caps the depth (root is level 0, the
    /// deepest allowed node level is `levels - 1`). Every node the predicate
    /// flags is refined; extra refinement is added to keep adjacent leaves
    /// within one level of each other.
    pub fn build(
        n: usize,
        g: usize,
        domain: Domain,
        levels: u8,
        mut refine: impl FnMut(&TreeKey) -> bool,
    ) -> Octree {
        assert!(levels >= 1, "need at least the root level");
        let mut tree = Octree {
            n,
            g,
            domain,
            nodes: BTreeMap::new(),
        };
        tree.insert_node(TreeKey::ROOT);

        // Predicate-driven refinement, re-examining new children.
        let mut frontier = vec![TreeKey::ROOT];
        while let Some(key) = frontier.pop() {
            if key.level + 1 < levels && refine(&key) {
                tree.refine_node(key);
                frontier.extend(key.children());
            }
        }

        // 2:1 grading: any leaf more than one level coarser than an adjacent
        // leaf gets refined, repeated to a fixed point.
        loop {
            let mut to_refine = Vec::new();
            for leaf in tree.leaf_keys() {
                for dir in TreeKey::directions() {
                    if let Some(nk) = leaf.neighbor(dir) {
                        // Walk up until an existing node covers the region.
                        let mut probe = nk;
                        loop {
                            if let Some(node) = tree.nodes.get(&probe) {
                                if !node.refined && probe.level + 1 < leaf.level {
                                    to_refine.push(probe);
                                }
                                break;
                            }
                            match probe.parent() {
                                Some(p) => probe = p,
                                None => break,
                            }
                        }
                    }
                }
            }
            to_refine.sort();
            to_refine.dedup();
            if to_refine.is_empty() {
                break;
            }
            for key in to_refine {
                tree.refine_node(key);
            }
        }
        tree
    }

    fn insert_node(&mut self, key: TreeKey) {
        let sub = self.make_subgrid(key);
        self.nodes.insert(
            key,
            TreeNode {
                key,
                refined: false,
                locality: 0,
                sub,
            },
        );
    }

    pub fn refine_node(&mut self, key: TreeKey) {
        let node = self.nodes.get_mut(&key).expect("refining a missing node");
        if node.refined {
            return;
        }
        node.refined = true;
        for child in key.children() {
            self.insert_node(child);
        }
    }

    pub fn get(&self, key: &TreeKey) -> Option<&TreeNode> {
        self.nodes.get(key)
    }

    pub fn get_mut(&mut self, key: &TreeKey) -> Option<&mut TreeNode> {
        self.nodes.get_mut(key)
    }

    pub fn contains(&self, key: &TreeKey) -> bool {
        self.nodes.contains_key(key)
    }

    /// All nodes in (level, sfc) order.
    pub fn keys(&self) -> Vec<TreeKey> {
        self.nodes.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut TreeNode> {
        self.nodes.values_mut()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaves in (level, sfc) order.
    pub fn leaf_keys(&self) -> Vec<TreeKey> {
        self.nodes
            .values()
            .filter(|n| !n.refined)
            .map(|n| n.key)
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.values().filter(|n| !n.refined).count()
    }

    pub fn max_level(&self) -> u8 {
        self.nodes.keys().map(|k| k.level).max().unwrap_or(0)
    }

    /// Node and leaf counts per level, index = level.
    pub fn level_counts(&self) -> Vec<(usize, usize)> {
        let mut counts = vec![(0usize, 0usize); self.max_level() as usize + 1];
        for node in self.nodes.values() {
            let e = &mut counts[node.key.level as usize];
            e.0 += 1;
            if !node.refined {
                e.1 += 1;
            }
        }
        counts
    }

    /// Cut the SFC-sorted leaf list into `localities` contiguous chunks whose
    /// sizes differ by at most one; interior nodes follow their first child.
    pub fn partition(&mut self, localities: u32) -> Vec<Vec<TreeKey>> {
        assert!(localities >= 1);
        let leaves = self.leaf_keys();
        let total = leaves.len();
        let l = localities as usize;
        let base = total / l;
        let rem = total % l;
        let mut assignment = vec![Vec::new(); l];
        let mut pos = 0usize;
        for (loc, slot) in assignment.iter_mut().enumerate() {
            let take = base + usize::from(loc < rem);
            for key in &leaves[pos..pos + take] {
                self.nodes.get_mut(key).unwrap().locality = loc as u32;
                slot.push(*key);
            }
            pos += take;
        }
        // Interior nodes, deepest first, inherit the first child's owner.
        let mut interior: Vec<TreeKey> = self
            .nodes
            .values()
            .filter(|n| n.refined)
            .map(|n| n.key)
            .collect();
        interior.sort_by_key(|k| std::cmp::Reverse(k.level));
        for key in interior {
            let owner = self.nodes[&key.child(0)].locality;
            self.nodes.get_mut(&key).unwrap().locality = owner;
        }
        assignment
    }

    /// Fill every interior node's interior cells with the conservative mean of
    /// its children, deepest levels first.
    pub fn restrict_interior(&mut self) {
        let mut interior: Vec<TreeKey> = self
            .nodes
            .values()
            .filter(|n| n.refined)
            .map(|n| n.key)
            .collect();
        interior.sort_by_key(|k| std::cmp::Reverse(k.level));
        for key in interior {
            let children: Vec<SubGrid> = key
                .children()
                .iter()
                .map(|c| self.nodes[c].sub.clone())
                .collect();
            let node = self.nodes.get_mut(&key).unwrap();
            crate::refine::restrict_children(&children, &mut node.sub);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_no_refinement_single_leaf() {
        let t = Octree::build(8, 2, Domain::unit(), 2, |_| false);
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn build_refine_root_eight_leaves() {
        let t = Octree::build(8, 2, Domain::unit(), 2, |k| k.level == 0);
        assert_eq!(t.leaf_count(), 8);
        assert_eq!(t.len(), 9);
    }

    #[test]
    fn build_refine_root_and_one_child() {
        let target = TreeKey::ROOT.child(0);
        let t = Octree::build(8, 2, Domain::unit(), 3, |k| {
            *k == TreeKey::ROOT || *k == target
        });
        // 7 coarse leaves + 8 fine leaves.
        assert_eq!(t.leaf_count(), 15);
    }

    #[test]
    fn grading_refines_coarse_neighbors() {
        // Chase one corner down 3 levels; grading must keep neighbors within
        // one level.
        let t = Octree::build(8, 2, Domain::unit(), 4, |k| {
            k.idx == [0, 0, 0] && k.level < 3
        });
        for leaf in t.leaf_keys() {
            for dir in TreeKey::directions() {
                if let Some(nk) = leaf.neighbor(dir) {
                    let mut probe = nk;
                    let covering = loop {
                        if t.contains(&probe) {
                            break probe;
                        }
                        probe = probe.parent().expect("region must be covered");
                    };
                    if !t.get(&covering).unwrap().refined {
                        assert!(
                            leaf.level as i16 - covering.level as i16 <= 1,
                            "leaf {leaf} vs neighbor leaf {covering}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn partition_balanced_chunks() {
        let mut t = Octree::build(8, 2, Domain::unit(), 2, |k| k.level == 0);
        let parts = t.partition(2);
        assert_eq!(parts[0].len(), 4);
        assert_eq!(parts[1].len(), 4);

        let parts = t.partition(3);
        let sizes: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        assert_eq!(sizes, vec![3, 3, 2]);
    }

    #[test]
    fn partition_degenerate_more_localities_than_leaves() {
        let mut t = Octree::build(8, 2, Domain::unit(), 1, |_| true);
        assert_eq!(t.leaf_count(), 1);
        let parts = t.partition(4);
        assert_eq!(parts.iter().filter(|p| !p.is_empty()).count(), 1);
    }

    #[test]
    fn partition_chunks_are_sfc_contiguous() {
        let mut t = Octree::build(8, 2, Domain::unit(), 3, |k| k.level <= 1);
        let leaves = t.leaf_keys();
        for l in 1..=leaves.len().min(9) as u32 {
            let parts = t.partition(l);
            let mut recombined: Vec<TreeKey> = Vec::new();
            let mut sizes = Vec::new();
            for p in &parts {
                recombined.extend_from_slice(p);
                sizes.push(p.len());
            }
            assert_eq!(recombined, leaves, "chunks must tile the SFC order");
            let max = *sizes.iter().max().unwrap();
            let min = *sizes.iter().min().unwrap();
            assert!(max - min <= 1);
        }
    }

    #[test]
    fn interior_nodes_follow_first_child() {
        let mut t = Octree::build(8, 2, Domain::unit(), 2, |k| k.level == 0);
        t.partition(3);
        let root_owner = t.get(&TreeKey::ROOT).unwrap().locality;
        let first_child_owner = t.get(&TreeKey::ROOT.child(0)).unwrap().locality;
        assert_eq!(root_owner, first_child_owner);
    }
}
