//! The futurized step driver.
//!
//! Every step is one dependency graph: a timestep reduction, the three
//! gravity passes (moments up, same-level kernels through the stream pools,
//! expansions down), and two hydro stages whose per-leaf updates wait only on
//! their own halo futures. All inter-node data crosses through step-keyed
//! channels; channels between localities ride on parcels. The driver thread
//! owns setup and teardown and otherwise just awaits the per-step metrics row.

use crate::codec;
use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::metrics::{ConsRow, StepRow};
use crate::scenario::{self, Scenario};
use crate::world::World;
use octobox_fmm::interact::{same_level_class_pass, slot_of};
use octobox_fmm::moments::{m2m_node, p2m_node};
use octobox_fmm::propagate::{extract_node, l2l_apply};
use octobox_fmm::stencil::{generate_stencil, root_closure, Stencil};
use octobox_fmm::{FmmConfig, KernelClass, NodeMultipoles};
use octobox_grid::checkpoint::{read_checkpoint, write_checkpoint, CheckpointMeta};
use octobox_grid::halo::{apply_block, extract_block, fill_boundary, HaloSource};
use octobox_grid::state::{ConservedState, NFIELDS};
use octobox_grid::{BoundaryKind, Octree, TreeKey};
use octobox_hydro::sweep::compute_rhs;
use octobox_hydro::{cfl, eos::apply_floors_and_dual_energy, rk_combine1, rk_combine2, EosParams};
use octobox_parcel::{Counters, Fabric, NetConfig};
use octobox_runtime::{ChannelHub, ChannelKey, Future, Runtime, StreamConfig, StreamPool};
use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

const PH_DT_GATHER: u32 = 1 << 24;
const PH_DT_BCAST: u32 = 2 << 24;
const PH_MOM_UP: u32 = 3 << 24;
const PH_MHALO: u32 = 4 << 24;
const PH_TAYLOR: u32 = 5 << 24;
const PH_HALO1: u32 = 6 << 24;
const PH_HALO2: u32 = 7 << 24;
const PH_STATS: u32 = 8 << 24;
const PH_ROW: u32 = 9 << 24;

fn obj_special(kind: u64) -> u64 {
    (0x7Fu64 << 57) | kind
}

const OBJ_DT: u64 = 1;
const OBJ_STATS: u64 = 2;
const OBJ_ROW: u64 = 3;

fn dir_index(dir: [i8; 3]) -> u32 {
    ((dir[0] + 1) as u32) + 3 * ((dir[1] + 1) as u32) + 9 * ((dir[2] + 1) as u32)
}

/// Channel plumbing shared by all localities.
struct Comm {
    fabric: Arc<Fabric>,
    hubs: Arc<Vec<Arc<ChannelHub>>>,
    chan_action: u32,
}

impl Comm {
    fn send(&self, from: u32, to: u32, key: ChannelKey, step: u64, bytes: Vec<u8>) {
        if from == to {
            self.hubs[to as usize]
                .send(key, step, bytes)
                .expect("duplicate channel send");
        } else {
            let mut payload = Vec::with_capacity(20 + bytes.len());
            payload.extend_from_slice(&key.object.to_le_bytes());
            payload.extend_from_slice(&key.tag.to_le_bytes());
            payload.extend_from_slice(&step.to_le_bytes());
            payload.extend_from_slice(&bytes);
            let _ack = self
                .fabric
                .send_action(from as u16, to as u16, self.chan_action, payload);
        }
    }

    fn get(&self, loc: u32, key: ChannelKey, step: u64) -> Future<Vec<u8>> {
        self.hubs[loc as usize].get_future(key, step)
    }
}

struct Localities {
    runtimes: Vec<Runtime>,
    pools: Vec<Arc<StreamPool>>,
    comm: Arc<Comm>,
}

fn spin_up(cfg: &RunConfig) -> Localities {
    let p = cfg.localities;
    let wpl = cfg.workers_per_locality();
    let runtimes: Vec<Runtime> = (0..p).map(|_| Runtime::new(wpl)).collect();
    let mut net = NetConfig::new(p as u16, cfg.parcelport);
    net.eager_threshold = cfg.eager_threshold;
    let fabric = Fabric::new(net);
    let hubs: Arc<Vec<Arc<ChannelHub>>> = Arc::new((0..p).map(|_| ChannelHub::new()).collect());
    let the_hubs = hubs.clone();
    let chan_action = fabric
        .register_action_fn("chan", move |loc, bytes| {
            let object = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
            let tag = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
            let step = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
            the_hubs[loc as usize]
                .send(ChannelKey::new(object, tag), step, bytes[20..].to_vec())
                .map_err(|e| e.to_string())?;
            Ok(Vec::new())
        })
        .expect("registration");
    let pools: Vec<Arc<StreamPool>> = (0..p)
        .map(|_| {
            Arc::new(StreamPool::new(StreamConfig::new(
                cfg.streams,
                wpl,
                KernelClass::ALL.iter().map(|c| c.name()).collect(),
            )))
        })
        .collect();
    for (loc, rt) in runtimes.iter().enumerate() {
        let fab = fabric.clone();
        rt.register_progress(Arc::new(move || fab.progress(loc as u16)));
        let fab2 = fabric.clone();
        rt.register_pending_probe(Arc::new(move || fab2.pending()));
        let pool = pools[loc].clone();
        rt.register_progress(Arc::new(move || pool.progress()));
        let pool2 = pools[loc].clone();
        rt.register_pending_probe(Arc::new(move || pool2.in_flight()));
    }
    Localities {
        runtimes,
        pools,
        comm: Arc::new(Comm {
            fabric,
            hubs,
            chan_action,
        }),
    }
}

/// Wait for a future while workers run, reporting missing halo messages if
/// the graph can never finish.
fn await_bytes(
    locs: &Localities,
    fut: &Future<Vec<u8>>,
) -> Result<Arc<Vec<u8>>, HarnessError> {
    loop {
        if let Some(out) = fut.wait_timeout(Duration::from_millis(2)) {
            return out.map_err(|e| HarnessError::Runtime(e.into()));
        }
        let mut moved = 0;
        for rt in &locs.runtimes {
            moved += rt.poll_progress();
        }
        if moved > 0 {
            continue;
        }
        let idle = locs.runtimes.iter().all(|r| r.is_quiescent())
            && locs.comm.fabric.pending() == 0;
        if idle && !fut.is_ready() {
            std::thread::sleep(Duration::from_millis(5));
            let still = locs.runtimes.iter().all(|r| r.is_quiescent())
                && locs.comm.fabric.pending() == 0
                && !fut.is_ready();
            if still {
                // Name the first missing message.
                for hub in locs.comm.hubs.iter() {
                    if let Some((key, step)) = hub.pending_keys().first().copied() {
                        if key.object >> 57 != 0x7F {
                            let node = TreeKey::from_id(key.object);
                            return Err(HarnessError::Config(format!(
                                "halo timeout: node {node} never received tag {:#x} for step {step}",
                                key.tag
                            )));
                        }
                    }
                }
                return Err(HarnessError::Config(
                    "deadlock: workers idle with the step incomplete".into(),
                ));
            }
        }
    }
}

pub struct RunOutput {
    pub final_tree: Octree,
    /// Per-leaf gravity from the last step, when the scenario self-gravitates.
    pub gravity: BTreeMap<TreeKey, Vec<octobox_fmm::CellGravity>>,
    pub metrics: Vec<StepRow>,
    pub conservation: Vec<ConsRow>,
    pub subgrids_per_sec: f64,
    pub sim_net_us: f64,
    pub offload_fraction: f64,
    pub stream_counters: Vec<(u32, &'static str, u64, u64)>,
    pub parcel_counters: Vec<(u32, Counters)>,
    /// Max relative drift over conserved components from refine-on-restart.
    pub refine_drift: Option<f64>,
    pub steps_run: u64,
}

struct StepOutcome {
    row: ConsRow,
}

struct DriverState {
    world: Arc<World>,
    eos: EosParams,
    fmm_cfg: FmmConfig,
    stencil: Arc<Stencil>,
    closure: Arc<Stencil>,
    scenario: Scenario,
    bc: BoundaryKind,
    sends_by_source: BTreeMap<TreeKey, Vec<usize>>,
    recvs_by_leaf: BTreeMap<TreeKey, Vec<usize>>,
    boundary_dirs_by_leaf: BTreeMap<TreeKey, Vec<[i8; 3]>>,
}

fn one_step(
    st: &DriverState,
    locs: &Localities,
    step: u64,
    time_left: f64,
    courant: f64,
) -> Result<StepOutcome, HarnessError> {
    let world = &st.world;
    let comm = &locs.comm;
    let p = world.localities;
    let gravity_on = st.scenario.self_gravity;

    // --- timestep reduction ---
    for loc in 0..p {
        let rt = &locs.runtimes[loc as usize];
        let world = world.clone();
        let comm = comm.clone();
        let eos = st.eos;
        let leaves = world.leaves_by_locality[loc as usize].clone();
        rt.spawn(move || {
            let mut local = f64::INFINITY;
            for key in &leaves {
                let slot = &world.slots[key];
                let sub = slot.sub.lock().unwrap();
                let s = cfl::max_signal(&sub, &eos);
                if s > 0.0 {
                    local = local.min(sub.h / s);
                }
            }
            comm.send(
                loc,
                0,
                ChannelKey::new(obj_special(OBJ_DT), PH_DT_GATHER | loc),
                step,
                local.to_le_bytes().to_vec(),
            );
        });
    }
    {
        let rt = &locs.runtimes[0];
        let gathers: Vec<Future<Vec<u8>>> = (0..p)
            .map(|loc| comm.get(0, ChannelKey::new(obj_special(OBJ_DT), PH_DT_GATHER | loc), step))
            .collect();
        let all = rt.when_all(gathers);
        let comm = comm.clone();
        rt.then(&all, move |vals| {
            let vals = vals?;
            let mut dt = f64::INFINITY;
            for v in vals.iter() {
                dt = dt.min(f64::from_le_bytes(v[0..8].try_into().unwrap()));
            }
            let mut dt = courant * dt;
            if time_left.is_finite() && dt > time_left {
                dt = time_left;
            }
            for loc in 0..p {
                comm.send(
                    0,
                    loc,
                    ChannelKey::new(obj_special(OBJ_DT), PH_DT_BCAST),
                    step,
                    dt.to_le_bytes().to_vec(),
                );
            }
            Ok(())
        });
    }
    let dt_futs: Vec<Future<Vec<u8>>> = (0..p)
        .map(|loc| comm.get(loc, ChannelKey::new(obj_special(OBJ_DT), PH_DT_BCAST), step))
        .collect();

    // --- gravity graph ---
    let mut grav_ready: BTreeMap<TreeKey, Future<Vec<u8>>> = BTreeMap::new();
    if gravity_on {
        let mut mom_done: BTreeMap<TreeKey, Future<Vec<u8>>> = BTreeMap::new();
        let mut keys_desc: Vec<TreeKey> = world.slots.keys().copied().collect();
        keys_desc.sort_by_key(|k| std::cmp::Reverse(k.level));
        for key in keys_desc {
            let slot = world.slots[&key].clone();
            let loc = slot.locality;
            let rt = &locs.runtimes[loc as usize];
            let world_c = world.clone();
            let comm_c = comm.clone();
            let fmm_cfg = st.fmm_cfg;
            let n = world.n;
            let finish = move |set: NodeMultipoles| {
                let set = Arc::new(set);
                *world_c.slots[&key].moments.lock().unwrap() = Some(set.clone());
                let encoded = codec::encode_multipoles(&set);
                // Up to the parent.
                if let Some(parent) = key.parent() {
                    let owner = world_c.owner(&parent);
                    comm_c.send(
                        loc,
                        owner,
                        ChannelKey::new(key.id(), PH_MOM_UP),
                        step,
                        encoded.clone(),
                    );
                }
                // Same-level halos to existing neighbors.
                for dir in TreeKey::directions() {
                    if let Some(nk) = key.neighbor(dir) {
                        if world_c.slots.contains_key(&nk) {
                            let back = [-dir[0], -dir[1], -dir[2]];
                            comm_c.send(
                                loc,
                                world_c.owner(&nk),
                                ChannelKey::new(nk.id(), PH_MHALO | dir_index(back)),
                                step,
                                encoded.clone(),
                            );
                        }
                    }
                }
                Vec::new()
            };
            let fut = if !slot.refined {
                let slot2 = slot.clone();
                rt.run(move || {
                    let sub = slot2.sub.lock().unwrap();
                    let set = p2m_node(key, &sub).expect("positive density");
                    drop(sub);
                    finish(set)
                })
            } else {
                let kids = key.children();
                let deps: Vec<Future<Vec<u8>>> = kids
                    .iter()
                    .map(|c| comm.get(loc, ChannelKey::new(c.id(), PH_MOM_UP), step))
                    .collect();
                let all = rt.when_all(deps);
                rt.then(&all, move |vals| {
                    let vals = vals?;
                    let sets: Vec<NodeMultipoles> =
                        vals.iter().map(|v| codec::decode_multipoles(v)).collect();
                    let refs: [&NodeMultipoles; 8] = std::array::from_fn(|i| &sets[i]);
                    Ok(finish(m2m_node(key, n, &refs, &fmm_cfg)))
                })
            };
            mom_done.insert(key, fut);
        }

        // Same-level pass and downward chain per node.
        let mut incr_ready: BTreeMap<TreeKey, Future<Vec<u8>>> = BTreeMap::new();
        for (&key, slot) in world.slots.iter() {
            let slot = slot.clone();
            let loc = slot.locality;
            let rt = locs.runtimes[loc as usize].clone();
            let pool = locs.pools[loc as usize].clone();
            let mut deps = vec![mom_done[&key].clone()];
            let mut dirs = Vec::new();
            for dir in TreeKey::directions() {
                if let Some(nk) = key.neighbor(dir) {
                    if world.slots.contains_key(&nk) {
                        deps.push(comm.get(loc, ChannelKey::new(key.id(), PH_MHALO | dir_index(dir)), step));
                        dirs.push(dir);
                    }
                }
            }
            let all = rt.when_all(deps);
            let world_c = world.clone();
            let stencil = if key.level == 0 {
                st.closure.clone()
            } else {
                st.stencil.clone()
            };
            let fmm_cfg = st.fmm_cfg;
            let n = world.n;
            let rt2 = rt.clone();
            let (incr_p, incr_f) = octobox_runtime::future::pair::<Vec<u8>>();
            rt.then(&all, move |vals| {
                let vals = match vals {
                    Ok(v) => v,
                    Err(e) => {
                        incr_p.set_error(e);
                        return Ok(());
                    }
                };
                // vals[0] is the own-moments completion; the rest align with
                // `dirs`.
                let own = world_c.slots[&key]
                    .moments
                    .lock()
                    .unwrap()
                    .clone()
                    .expect("moments stored");
                let mut nbrs_data: Vec<Option<Arc<NodeMultipoles>>> = vec![None; 27];
                nbrs_data[13] = Some(own);
                for (i, dir) in dirs.iter().enumerate() {
                    let decoded = Arc::new(codec::decode_multipoles(&vals[i + 1]));
                    nbrs_data[slot_of([dir[0] as i64, dir[1] as i64, dir[2] as i64])] =
                        Some(decoded);
                }
                let nbrs_data = Arc::new(nbrs_data);
                let worker = Runtime::current_worker().unwrap_or(0);
                let class_futs: Vec<Future<(Vec<octobox_fmm::Taylor>, u64)>> = KernelClass::ALL
                    .iter()
                    .map(|&class| {
                        let nbrs_data = nbrs_data.clone();
                        let stencil = stencil.clone();
                        pool.submit(worker, class as usize, None, move || {
                            let refs: [Option<&NodeMultipoles>; 27] =
                                std::array::from_fn(|i| nbrs_data[i].as_deref());
                            let res =
                                same_level_class_pass(key, n, &refs, &stencil, class, &fmm_cfg);
                            (res.taylor, res.interactions)
                        })
                    })
                    .collect();
                let merged = rt2.when_all(class_futs);
                let world_m = world_c.clone();
                rt2.then(&merged, move |parts| {
                    let parts = match parts {
                        Ok(p) => p,
                        Err(e) => {
                            incr_p.set_error(e);
                            return Ok(());
                        }
                    };
                    let ncells = n * n * n;
                    let mut total = vec![[0.0; octobox_fmm::index::NCOEF]; ncells];
                    for part in parts.iter() {
                        for (m, t) in total.iter_mut().zip(&part.0) {
                            for (a, b) in m.iter_mut().zip(t) {
                                *a += b;
                            }
                        }
                    }
                    *world_m.slots[&key].taylor.lock().unwrap() = Some(Arc::new(total));
                    incr_p.set(Vec::new());
                    Ok(())
                });
                Ok(())
            });
            incr_ready.insert(key, incr_f);
        }

        // Downward pass.
        let mut keys_asc: Vec<TreeKey> = world.slots.keys().copied().collect();
        keys_asc.sort();
        for key in keys_asc {
            let slot = world.slots[&key].clone();
            let loc = slot.locality;
            let rt = &locs.runtimes[loc as usize];
            let mut deps = vec![incr_ready[&key].clone()];
            if key.level > 0 {
                deps.push(comm.get(loc, ChannelKey::new(key.id(), PH_TAYLOR), step));
            }
            let all = rt.when_all(deps);
            let world_c = world.clone();
            let comm_c = comm.clone();
            let fmm_cfg = st.fmm_cfg;
            let n = world.n;
            let done = rt.then(&all, move |vals| {
                let vals = vals?;
                let slot = &world_c.slots[&key];
                let moms = slot.moments.lock().unwrap().clone().expect("moments");
                let mut taylor_guard = slot.taylor.lock().unwrap();
                let mut total = (**taylor_guard.as_ref().expect("increments stored")).clone();
                if key.level > 0 {
                    let (pcoms, ptaylor) = codec::decode_taylor_down(&vals[1]);
                    let parent = key.parent().unwrap();
                    l2l_apply(
                        parent, &pcoms, &ptaylor, key, &moms, &mut total, n, &fmm_cfg,
                    );
                }
                let total = Arc::new(total);
                *taylor_guard = Some(total.clone());
                drop(taylor_guard);
                if slot.refined {
                    let msg = codec::encode_taylor_down(&moms, &total);
                    for child in key.children() {
                        comm_c.send(
                            slot.locality,
                            world_c.owner(&child),
                            ChannelKey::new(child.id(), PH_TAYLOR),
                            step,
                            msg.clone(),
                        );
                    }
                } else {
                    let field = extract_node(&total);
                    *slot.gravity.lock().unwrap() = Some(Arc::new(field));
                }
                Ok(Vec::new())
            });
            if !slot.refined {
                grav_ready.insert(key, done);
            }
        }
    }

    // --- hydro stages ---
    let mut done2: Vec<Vec<Future<Vec<u8>>>> = vec![Vec::new(); p as usize];
    for (&leaf, slot) in world.slots.iter().filter(|(_, s)| !s.refined) {
        let slot = slot.clone();
        let loc = slot.locality;
        let rt = locs.runtimes[loc as usize].clone();

        // Stage-1 sends from this leaf's step-start interior.
        let send1 = {
            let world_c = world.clone();
            let comm_c = comm.clone();
            let sends = st.sends_by_source.get(&leaf).cloned().unwrap_or_default();
            rt.run(move || {
                let sub = world_c.slots[&leaf].sub.lock().unwrap();
                for ti in sends {
                    let task = &world_c.plan.tasks[ti];
                    let block = extract_block(task, &sub, world_c.n);
                    comm_c.send(
                        loc,
                        world_c.owner(&task.leaf),
                        ChannelKey::new(
                            task.leaf.id(),
                            PH_HALO1 | (task.dir_idx as u32) * 8 | task.piece as u32,
                        ),
                        step,
                        codec::encode_f64s(&block),
                    );
                }
                Vec::new()
            })
        };

        let recvs = st.recvs_by_leaf.get(&leaf).cloned().unwrap_or_default();
        let mut deps1: Vec<Future<Vec<u8>>> = vec![send1, dt_futs[loc as usize].clone()];
        if gravity_on {
            deps1.push(grav_ready[&leaf].clone());
        }
        for &ti in &recvs {
            let task = &world.plan.tasks[ti];
            deps1.push(comm.get(
                loc,
                ChannelKey::new(leaf.id(), PH_HALO1 | (task.dir_idx as u32) * 8 | task.piece as u32),
                step,
            ));
        }
        let all1 = rt.when_all(deps1);
        let world_c = world.clone();
        let comm_c = comm.clone();
        let eos = st.eos;
        let bc = st.bc;
        let recvs1 = recvs.clone();
        let boundaries = st.boundary_dirs_by_leaf.get(&leaf).cloned().unwrap_or_default();
        let sends2 = st.sends_by_source.get(&leaf).cloned().unwrap_or_default();
        let grav_offset = if gravity_on { 3 } else { 2 };
        let done1 = rt.then(&all1, move |vals| {
            let vals = vals?;
            let dt = f64::from_le_bytes(vals[1][0..8].try_into().unwrap());
            let slot = &world_c.slots[&leaf];
            let mut sub = slot.sub.lock().unwrap();
            for (i, &ti) in recvs1.iter().enumerate() {
                let task = &world_c.plan.tasks[ti];
                let block = codec::decode_f64s(&vals[grav_offset + i]);
                apply_block(&mut sub, task, &block);
            }
            for dir in &boundaries {
                fill_boundary(&mut sub, *dir, bc);
            }
            let u0: Vec<[f64; NFIELDS]> = sub
                .interior()
                .map(|(i, j, k)| {
                    let l = sub.lin(i, j, k);
                    std::array::from_fn(|fi| sub.raw_fields()[fi][l])
                })
                .collect();
            let gravity = slot.gravity.lock().unwrap().clone();
            let rhs = compute_rhs(&sub, &eos, gravity.as_deref().map(|v| &v[..]))
                .map_err(|e| octobox_runtime::TaskError::new(e.to_string()))?;
            let mut hits = 0u64;
            let cells: Vec<_> = sub.interior().collect();
            for (ci, (i, j, k)) in cells.into_iter().enumerate() {
                let v = rk_combine1(&u0[ci], &rhs[ci], dt);
                let mut state = ConservedState::from_array(&v);
                hits += apply_floors_and_dual_energy(&mut state, &eos) as u64;
                sub.set_cell_state(i, j, k, &state);
            }
            *slot.u0.lock().unwrap() = u0;
            // Stage-2 halos extracted from the freshly written interior.
            for ti in sends2 {
                let task = &world_c.plan.tasks[ti];
                let block = extract_block(task, &sub, world_c.n);
                comm_c.send(
                    loc,
                    world_c.owner(&task.leaf),
                    ChannelKey::new(
                        task.leaf.id(),
                        PH_HALO2 | (task.dir_idx as u32) * 8 | task.piece as u32,
                    ),
                    step,
                    codec::encode_f64s(&block),
                );
            }
            Ok(hits.to_le_bytes().to_vec())
        });

        let mut deps2: Vec<Future<Vec<u8>>> = vec![done1];
        for &ti in &recvs {
            let task = &world.plan.tasks[ti];
            deps2.push(comm.get(
                loc,
                ChannelKey::new(leaf.id(), PH_HALO2 | (task.dir_idx as u32) * 8 | task.piece as u32),
                step,
            ));
        }
        let all2 = rt.when_all(deps2);
        let world_c = world.clone();
        let eos = st.eos;
        let bc = st.bc;
        let recvs2 = recvs;
        let boundaries2 = st.boundary_dirs_by_leaf.get(&leaf).cloned().unwrap_or_default();
        let dt_fut2 = dt_futs[loc as usize].clone();
        let fut2 = rt.then(&all2, move |vals| {
            let vals = vals?;
            let hits1 = u64::from_le_bytes(vals[0][0..8].try_into().unwrap());
            let dt = f64::from_le_bytes(
                dt_fut2.try_get().expect("dt resolved")?[0..8].try_into().unwrap(),
            );
            let slot = &world_c.slots[&leaf];
            let mut sub = slot.sub.lock().unwrap();
            for (i, &ti) in recvs2.iter().enumerate() {
                let task = &world_c.plan.tasks[ti];
                let block = codec::decode_f64s(&vals[1 + i]);
                apply_block(&mut sub, task, &block);
            }
            for dir in &boundaries2 {
                fill_boundary(&mut sub, *dir, bc);
            }
            let gravity = slot.gravity.lock().unwrap().clone();
            let rhs1 = compute_rhs(&sub, &eos, gravity.as_deref().map(|v| &v[..]))
                .map_err(|e| octobox_runtime::TaskError::new(e.to_string()))?;
            let u0 = slot.u0.lock().unwrap();
            let mut hits = hits1;
            let cells: Vec<_> = sub.interior().collect();
            for (ci, (i, j, k)) in cells.into_iter().enumerate() {
                let cur: [f64; NFIELDS] = {
                    let l = sub.lin(i, j, k);
                    std::array::from_fn(|fi| sub.raw_fields()[fi][l])
                };
                let v = rk_combine2(&u0[ci], &cur, &rhs1[ci], dt);
                let mut state = ConservedState::from_array(&v);
                hits += apply_floors_and_dual_energy(&mut state, &eos) as u64;
                sub.set_cell_state(i, j, k, &state);
            }
            Ok(hits.to_le_bytes().to_vec())
        });
        done2[loc as usize].push(fut2);
    }

    // --- per-locality stats, reduced at locality 0 ---
    for loc in 0..p {
        let rt = &locs.runtimes[loc as usize];
        let all = rt.when_all(done2[loc as usize].clone());
        let world_c = world.clone();
        let comm_c = comm.clone();
        let leaves = world.leaves_by_locality[loc as usize].clone();
        rt.then(&all, move |vals| {
            let vals = vals?;
            let mut hits = 0u64;
            for v in vals.iter() {
                hits += u64::from_le_bytes(v[0..8].try_into().unwrap());
            }
            let mut sums = [0.0f64; NFIELDS];
            for key in &leaves {
                let sub = world_c.slots[key].sub.lock().unwrap();
                let t = sub.totals();
                for i in 0..NFIELDS {
                    sums[i] += t[i];
                }
            }
            let mut payload = Vec::with_capacity(8 * (NFIELDS + 1));
            for v in sums {
                codec::push_f64(&mut payload, v);
            }
            payload.extend_from_slice(&hits.to_le_bytes());
            comm_c.send(
                loc,
                0,
                ChannelKey::new(obj_special(OBJ_STATS), PH_STATS | loc),
                step,
                payload,
            );
            Ok(())
        });
    }
    {
        let rt = &locs.runtimes[0];
        let gathers: Vec<Future<Vec<u8>>> = (0..p)
            .map(|loc| comm.get(0, ChannelKey::new(obj_special(OBJ_STATS), PH_STATS | loc), step))
            .collect();
        let all = rt.when_all(gathers);
        let comm_c = comm.clone();
        let dt_fut = dt_futs[0].clone();
        rt.then(&all, move |vals| {
            let vals = vals?;
            let mut sums = [0.0f64; NFIELDS];
            let mut hits = 0u64;
            for v in vals.iter() {
                let mut pos = 0;
                for s in sums.iter_mut() {
                    *s += codec::read_f64(v, &mut pos);
                }
                hits += u64::from_le_bytes(v[pos..pos + 8].try_into().unwrap());
            }
            let dt = f64::from_le_bytes(
                dt_fut.try_get().expect("dt resolved")?[0..8].try_into().unwrap(),
            );
            let mut row = Vec::new();
            codec::push_f64(&mut row, dt);
            for s in sums {
                codec::push_f64(&mut row, s);
            }
            row.extend_from_slice(&hits.to_le_bytes());
            comm_c.send(0, 0, ChannelKey::new(obj_special(OBJ_ROW), PH_ROW), step, row);
            Ok(())
        });
    }

    let row_fut = comm.get(0, ChannelKey::new(obj_special(OBJ_ROW), PH_ROW), step);
    let bytes = await_bytes(locs, &row_fut)?;
    let mut pos = 0;
    let dt = codec::read_f64(&bytes, &mut pos);
    let mut sums = [0.0f64; NFIELDS];
    for s in sums.iter_mut() {
        *s = codec::read_f64(&bytes, &mut pos);
    }
    let hits = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
    Ok(StepOutcome {
        row: ConsRow {
            step,
            dt,
            mass: sums[0],
            momentum: [sums[1], sums[2], sums[3]],
            energy: sums[4],
            frac_sum: sums[6] + sums[7] + sums[8] + sums[9] + sums[10],
            floor_hits: hits,
        },
    })
}

/// Fill every leaf from the scenario generator.
fn init_fields(tree: &mut Octree, sc: &Scenario, eos: &EosParams) {
    for key in tree.leaf_keys() {
        let node = tree.get_mut(&key).unwrap();
        let h = node.sub.h;
        let cells: Vec<_> = node.sub.interior().collect();
        for (i, j, k) in cells {
            let x = node.sub.cell_center(i, j, k);
            let state = (sc.init)(x, h, eos);
            node.sub.set_cell_state(i, j, k, &state);
        }
    }
    tree.restrict_interior();
}

/// Uniformly deepen every leaf to `target_levels`, conservatively.
fn refine_to_levels(tree: &mut Octree, target_levels: u8) -> Result<f64, HarnessError> {
    let before = tree_totals(tree);
    loop {
        let candidates: Vec<TreeKey> = tree
            .leaf_keys()
            .into_iter()
            .filter(|k| k.level + 1 < target_levels)
            .collect();
        if candidates.is_empty() {
            break;
        }
        octobox_grid::halo::exchange_halos_local(tree, BoundaryKind::Outflow)?;
        for key in candidates {
            let children = octobox_grid::refine::refine_subgrid(&tree.get(&key).unwrap().sub);
            tree.refine_node(key);
            for (o, child_sub) in children.into_iter().enumerate() {
                tree.get_mut(&key.child(o)).unwrap().sub = child_sub;
            }
        }
    }
    tree.restrict_interior();
    let after = tree_totals(tree);
    let mut drift = 0.0f64;
    for i in 0..NFIELDS {
        let scale = before[i].abs().max(before[0].abs());
        drift = drift.max((after[i] - before[i]).abs() / scale.max(f64::MIN_POSITIVE));
    }
    Ok(drift)
}

fn tree_totals(tree: &Octree) -> [f64; NFIELDS] {
    let mut out = [0.0; NFIELDS];
    for key in tree.leaf_keys() {
        let t = tree.get(&key).unwrap().sub.totals();
        for i in 0..NFIELDS {
            out[i] += t[i];
        }
    }
    out
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, HarnessError> {
    let sc = scenario::lookup(&cfg.scenario, cfg.seed)?;
    let eos = EosParams {
        gamma: sc.gamma,
        ..EosParams::default()
    };
    let fmm_cfg = FmmConfig {
        theta: cfg.theta,
        ..FmmConfig::default()
    };
    fmm_cfg.validate()?;

    // Build or restore the tree.
    let mut start_step = 0u64;
    let mut sim_time = 0.0f64;
    let mut refine_drift = None;
    let mut tree = match &cfg.restart {
        Some(path) => {
            let file = std::fs::File::open(path)?;
            let (mut tree, meta) = read_checkpoint(std::io::BufReader::new(file))?;
            start_step = meta.step;
            sim_time = meta.sim_time;
            if cfg.levels > tree.max_level() + 1 {
                refine_drift = Some(refine_to_levels(&mut tree, cfg.levels)?);
            }
            tree
        }
        None => {
            let refine = sc.refine.clone();
            let domain = sc.domain;
            let mut tree = Octree::build(
                octobox_grid::DEFAULT_N,
                octobox_grid::DEFAULT_GHOST,
                domain,
                cfg.levels,
                |k| refine(k, &domain),
            );
            init_fields(&mut tree, &sc, &eos);
            tree
        }
    };
    tree.partition(cfg.localities);

    // Gravity diagnostic against the direct-sum oracle on the initial state,
    // while the whole tree is still in one piece.
    let stencil_row = if cfg.stencil_report
        && sc.self_gravity
        && tree.leaf_count() * tree.n.pow(3) <= 40_000
    {
        Some(octobox_fmm::report::diagnose(&tree, &fmm_cfg)?)
    } else {
        None
    };

    let world = Arc::new(World::from_tree(tree, cfg.localities)?);

    // Static halo-plan lookup tables.
    let mut sends_by_source: BTreeMap<TreeKey, Vec<usize>> = BTreeMap::new();
    let mut recvs_by_leaf: BTreeMap<TreeKey, Vec<usize>> = BTreeMap::new();
    let mut boundary_dirs: BTreeMap<TreeKey, Vec<[i8; 3]>> = BTreeMap::new();
    for (ti, task) in world.plan.tasks.iter().enumerate() {
        match &task.source {
            HaloSource::Boundary => boundary_dirs.entry(task.leaf).or_default().push(task.dir),
            HaloSource::SameLevel(k) | HaloSource::Coarse(k) => {
                sends_by_source.entry(*k).or_default().push(ti);
                recvs_by_leaf.entry(task.leaf).or_default().push(ti);
            }
            HaloSource::Fine { child } => {
                sends_by_source.entry(*child).or_default().push(ti);
                recvs_by_leaf.entry(task.leaf).or_default().push(ti);
            }
        }
    }

    let state = DriverState {
        world: world.clone(),
        eos,
        fmm_cfg,
        stencil: Arc::new(generate_stencil(&fmm_cfg)?),
        closure: Arc::new(root_closure(&fmm_cfg, world.n)),
        scenario: sc.clone(),
        bc: BoundaryKind::Outflow,
        sends_by_source,
        recvs_by_leaf,
        boundary_dirs_by_leaf: boundary_dirs,
    };

    let locs = spin_up(cfg);
    std::fs::create_dir_all(&cfg.output)?;

    let mut metrics = Vec::new();
    let mut conservation = Vec::new();
    let leaf_count = world.leaf_count();
    let run_start = Instant::now();
    let mut step = start_step;
    while step < cfg.steps {
        if let Some(t_end) = cfg.t_end {
            if sim_time >= t_end {
                break;
            }
        }
        let time_left = cfg.t_end.map(|te| te - sim_time).unwrap_or(f64::INFINITY);
        let t0 = Instant::now();
        let outcome = one_step(&state, &locs, step, time_left, cfg.courant)?;
        let wall = t0.elapsed().as_secs_f64();
        sim_time += outcome.row.dt;
        metrics.push(StepRow {
            step,
            t: sim_time,
            dt: outcome.row.dt,
            wall_s: wall,
            sim_net_us: locs.comm.fabric.simulated_makespan_us(),
            leaf_updates: leaf_count as u64,
            subgrids_per_sec: leaf_count as f64 / wall,
        });
        conservation.push(outcome.row);
        step += 1;
        if cfg.dump_every > 0 && step % cfg.dump_every == 0 {
            let tree = world.to_tree();
            crate::output::write_dumps(&cfg.output, step, &tree, &state.eos)?;
        }
        // Bound channel memory on long runs.
        for hub in locs.comm.hubs.iter() {
            hub.retire_below(step.saturating_sub(1));
        }
    }
    let elapsed = run_start.elapsed().as_secs_f64();

    // Teardown before touching shared state single-threaded.
    for rt in &locs.runtimes {
        rt.wait_quiescent();
    }
    for pool in &locs.pools {
        pool.drain();
    }
    for rt in &locs.runtimes {
        rt.shutdown();
    }

    let final_tree = world.to_tree();
    let mut gravity = BTreeMap::new();
    for (key, slot) in world.slots.iter() {
        if let Some(g) = slot.gravity.lock().unwrap().as_ref() {
            gravity.insert(*key, (**g).clone());
        }
    }
    if let Some(path) = &cfg.checkpoint {
        let file = std::fs::File::create(path)?;
        write_checkpoint(
            std::io::BufWriter::new(file),
            &final_tree,
            &CheckpointMeta {
                step,
                sim_time,
            },
        )?;
    }
    crate::output::write_dumps(&cfg.output, step, &final_tree, &state.eos)?;

    let steps_run = step - start_step;
    let stream_counters: Vec<(u32, &'static str, u64, u64)> = locs
        .pools
        .iter()
        .enumerate()
        .flat_map(|(loc, pool)| {
            pool.counters()
                .into_iter()
                .map(move |(name, off, local)| (loc as u32, name, off, local))
        })
        .collect();
    let offload: u64 = stream_counters.iter().map(|(_, _, o, _)| o).sum();
    let ran_local: u64 = stream_counters.iter().map(|(_, _, _, l)| l).sum();
    let offload_fraction = if offload + ran_local == 0 {
        1.0
    } else {
        offload as f64 / (offload + ran_local) as f64
    };
    let parcel_counters: Vec<(u32, Counters)> = (0..cfg.localities)
        .map(|loc| (loc, locs.comm.fabric.counters(loc as u16)))
        .collect();

    let output = RunOutput {
        final_tree,
        gravity,
        subgrids_per_sec: if elapsed > 0.0 && steps_run > 0 {
            (leaf_count as u64 * steps_run) as f64 / elapsed
        } else {
            0.0
        },
        sim_net_us: locs.comm.fabric.simulated_makespan_us(),
        offload_fraction,
        stream_counters,
        parcel_counters,
        metrics,
        conservation,
        refine_drift,
        steps_run,
    };
    crate::metrics::write_all(cfg, &output, &world.level_counts(), stencil_row.as_ref())?;
    Ok(output)
}
