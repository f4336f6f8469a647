//! Versioned binary checkpoint container.
//!
//! Layout (little-endian throughout):
//!   magic "OKT1", version u32, n u32, g u32, levels u32,
//!   node_count u64, step u64, sim_time f64,
//!   then per node: level u8, idx 3 x u32, locality u32, refined u8,
//!   and the 11 raw field arrays (full extent, ghosts included) as f64,
//!   component order rho, s0, s1, s2, E, tau, frac0..frac4.

use crate::error::GridError;
use crate::key::TreeKey;
use crate::state::NFIELDS;
use crate::tree::{Domain, Octree, TreeNode};
use std::io::{Read, Write};

pub const MAGIC: &[u8; 4] = b"OKT1";
pub const VERSION: u32 = 1;

pub struct CheckpointMeta {
    pub step: u64,
    pub sim_time: f64,
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    tree: &Octree,
    meta: &CheckpointMeta,
) -> Result<(), GridError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(tree.n as u32).to_le_bytes())?;
    w.write_all(&(tree.g as u32).to_le_bytes())?;
    w.write_all(&(tree.max_level() as u32 + 1).to_le_bytes())?;
    w.write_all(&(tree.len() as u64).to_le_bytes())?;
    w.write_all(&meta.step.to_le_bytes())?;
    w.write_all(&meta.sim_time.to_le_bytes())?;
    w.write_all(&tree.domain.corner[0].to_le_bytes())?;
    w.write_all(&tree.domain.corner[1].to_le_bytes())?;
    w.write_all(&tree.domain.corner[2].to_le_bytes())?;
    w.write_all(&tree.domain.size.to_le_bytes())?;
    for key in tree.keys() {
        let node = tree.get(&key).unwrap();
        w.write_all(&[key.level])?;
        for c in key.idx {
            w.write_all(&c.to_le_bytes())?;
        }
        w.write_all(&node.locality.to_le_bytes())?;
        w.write_all(&[u8::from(node.refined)])?;
        for field in node.sub.raw_fields() {
            for v in field {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, GridError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, GridError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, GridError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(Octree, CheckpointMeta), GridError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(GridError::Checkpoint(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(GridError::Checkpoint(format!(
            "version mismatch: file has {version}, this build reads {VERSION}"
        )));
    }
    let n = read_u32(&mut r)? as usize;
    let g = read_u32(&mut r)? as usize;
    let _levels = read_u32(&mut r)?;
    let node_count = read_u64(&mut r)?;
    let step = read_u64(&mut r)?;
    let sim_time = read_f64(&mut r)?;
    let corner = [read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?];
    let size = read_f64(&mut r)?;
    let domain = Domain { corner, size };

    let mut tree = Octree::build(n, g, domain, 1, |_| false);
    // Rebuild the exact node set: refine along each stored key's path.
    let mut records = Vec::with_capacity(node_count as usize);
    let ext = n + 2 * g;
    let cells = ext * ext * ext;
    for _ in 0..node_count {
        let mut level = [0u8; 1];
        r.read_exact(&mut level)?;
        let idx = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
        let key = TreeKey::new(level[0], idx)
            .map_err(|e| GridError::Checkpoint(format!("bad key in file: {e}")))?;
        let locality = read_u32(&mut r)?;
        let mut refined = [0u8; 1];
        r.read_exact(&mut refined)?;
        let mut fields = Vec::with_capacity(NFIELDS);
        for _ in 0..NFIELDS {
            let mut arr = vec![0.0f64; cells];
            for v in arr.iter_mut() {
                *v = read_f64(&mut r)?;
            }
            fields.push(arr);
        }
        records.push((key, locality, refined[0] != 0, fields));
    }

    for (key, _, refined, _) in &records {
        if *refined {
            ensure_path(&mut tree, *key);
            tree.refine_node(*key);
        }
    }
    for (key, locality, refined, fields) in records {
        let node: &mut TreeNode = tree
            .get_mut(&key)
            .ok_or_else(|| GridError::Checkpoint(format!("node {key} missing after rebuild")))?;
        if node.refined != refined {
            return Err(GridError::Checkpoint(format!(
                "refinement flag mismatch for {key}"
            )));
        }
        node.locality = locality;
        for (dst, src) in node.sub.raw_fields_mut().iter_mut().zip(fields) {
            *dst = src;
        }
    }
    Ok((tree, CheckpointMeta { step, sim_time }))
}

fn ensure_path(tree: &mut Octree, key: TreeKey) {
    if tree.contains(&key) {
        return;
    }
    let parent = key.parent().expect("root always exists");
    ensure_path(tree, parent);
    if !tree.get(&parent).unwrap().refined {
        tree.refine_node(parent);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Field;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let t0 = TreeKey::ROOT.child(5);
        let mut tree = Octree::build(8, 2, Domain::centered(2.0), 3, |k| {
            *k == TreeKey::ROOT || *k == t0
        });
        tree.partition(3);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let keys = tree.keys();
        for key in keys {
            let node = tree.get_mut(&key).unwrap();
            for f in Field::ALL {
                for v in node.sub.field_mut(f).iter_mut() {
                    *v = rng.gen_range(-2.0..2.0);
                }
            }
        }
        let mut buf = Vec::new();
        write_checkpoint(
            &mut buf,
            &tree,
            &CheckpointMeta {
                step: 17,
                sim_time: 0.25,
            },
        )
        .unwrap();
        let (tree2, meta) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(meta.step, 17);
        assert_eq!(meta.sim_time.to_bits(), 0.25f64.to_bits());
        assert_eq!(tree.keys(), tree2.keys());
        for key in tree.keys() {
            let a = tree.get(&key).unwrap();
            let b = tree2.get(&key).unwrap();
            assert_eq!(a.locality, b.locality);
            assert_eq!(a.refined, b.refined);
            for f in Field::ALL {
                let fa = a.sub.field(f);
                let fb = b.sub.field(f);
                assert_eq!(fa.len(), fb.len());
                for (x, y) in fa.iter().zip(fb) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
        // Writing again must produce identical bytes.
        let mut buf2 = Vec::new();
        write_checkpoint(
            &mut buf2,
            &tree2,
            &CheckpointMeta {
                step: 17,
                sim_time: 0.25,
            },
        )
        .unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn rejects_wrong_magic_and_version() {
        let tree = Octree::build(8, 2, Domain::unit(), 1, |_| false);
        let mut buf = Vec::new();
        write_checkpoint(
            &mut buf,
            &tree,
            &CheckpointMeta {
                step: 0,
                sim_time: 0.0,
            },
        )
        .unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(bad.as_slice()).is_err());
        let mut badv = buf.clone();
        badv[4] = 99;
        assert!(matches!(
            read_checkpoint(badv.as_slice()),
            Err(GridError::Checkpoint(_))
        ));
    }
}
