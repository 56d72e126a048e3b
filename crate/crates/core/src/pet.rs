//! Post-encroachment time on a mesh grid laid over the intersection.
//!
//! Each trajectory is swept through the grid segment by segment, so that fast
//! objects register every cell they cross even when consecutive samples are
//! more than one cell apart. Each cell then holds a time-ordered list of
//! transits; consecutive transits by different objects yield PET values.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{sort_events, ConflictEvent, ConflictKind, Metric};
use crate::geometry::{Polygon, Vec2};
use crate::intersection::IntersectionConfig;
use crate::model::{ObjectClass, ObjectId, Trajectory};
use crate::FRAME_PERIOD;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshGrid {
    pub origin: Vec2,
    pub cell_size: f64,
    pub n_cols: usize,
    pub n_rows: usize,
}

/// Row-major linear cell index.
pub type CellIndex = usize;

impl MeshGrid {
    /// Grid of `cell_size` cells covering the bounding box of `region`;
    /// partial cells at the far edges are included.
    pub fn covering(region: &Polygon, cell_size: f64) -> Result<MeshGrid> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Config(alloc::format!("mesh_cell_size must be > 0, got {cell_size}")));
        }
        let bb = region.bounding_box();
        let count = |span: f64| (libm::ceil(span / cell_size - 1e-9) as usize).max(1);
        Ok(MeshGrid { origin: bb.min, cell_size, n_cols: count(bb.width()), n_rows: count(bb.height()) })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn width(&self) -> f64 {
        self.n_cols as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        self.n_rows as f64 * self.cell_size
    }

    pub fn col_row(&self, cell: CellIndex) -> (usize, usize) {
        (cell % self.n_cols, cell / self.n_cols)
    }

    pub fn index(&self, col: usize, row: usize) -> CellIndex {
        row * self.n_cols + col
    }

    fn axis_index(&self, v: f64, n: usize) -> Option<usize> {
        let k = libm::floor(v / self.cell_size);
        if k < 0.0 {
            return None;
        }
        let k = k as usize;
        if k < n {
            Some(k)
        } else if k == n && v <= n as f64 * self.cell_size {
            // Points on the far boundary belong to the last cell.
            Some(n - 1)
        } else {
            None
        }
    }

    pub fn cell_of(&self, p: Vec2) -> Option<CellIndex> {
        let col = self.axis_index(p.x - self.origin.x, self.n_cols)?;
        let row = self.axis_index(p.y - self.origin.y, self.n_rows)?;
        Some(self.index(col, row))
    }

    pub fn cell_center(&self, cell: CellIndex) -> Vec2 {
        let (c, r) = self.col_row(cell);
        Vec2::new(
            self.origin.x + (c as f64 + 0.5) * self.cell_size,
            self.origin.y + (r as f64 + 0.5) * self.cell_size,
        )
    }

    /// The same extent with cells of half the size.
    pub fn refined(&self) -> MeshGrid {
        MeshGrid { origin: self.origin, cell_size: self.cell_size / 2.0, n_cols: self.n_cols * 2, n_rows: self.n_rows * 2 }
    }

    /// Parameters in (0, 1) where segment `a → b` crosses a grid line.
    fn crossings(&self, a: Vec2, b: Vec2, out: &mut Vec<f64>) {
        let mut axis = |a0: f64, b0: f64, origin: f64, n: usize| {
            if a0 == b0 {
                return;
            }
            let (lo, hi) = (a0.min(b0), a0.max(b0));
            let first = libm::ceil((lo - origin) / self.cell_size).max(0.0) as usize;
            let last = (libm::floor((hi - origin) / self.cell_size).min(n as f64)).max(-1.0);
            if last < 0.0 {
                return;
            }
            for k in first..=(last as usize) {
                let line = origin + k as f64 * self.cell_size;
                let u = (line - a0) / (b0 - a0);
                if u > 0.0 && u < 1.0 {
                    out.push(u);
                }
            }
        };
        axis(a.x, b.x, self.origin.x, self.n_cols);
        axis(a.y, b.y, self.origin.y, self.n_rows);
    }
}

pub fn build_mesh(cfg: &IntersectionConfig) -> Result<MeshGrid> {
    MeshGrid::covering(&cfg.analysis_region, cfg.mesh_cell_size)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellTransit {
    pub cell: CellIndex,
    pub object_id: ObjectId,
    pub class: ObjectClass,
    pub t_enter: f64,
    pub t_exit: f64,
}

/// Per-cell transit lists, each ordered by entry time.
pub type TransitMap = BTreeMap<CellIndex, Vec<CellTransit>>;

/// Cells swept by one trajectory, as (cell, enter, exit) in time order with
/// contiguous pieces in the same cell joined.
pub fn sweep_cells(traj: &Trajectory, mesh: &MeshGrid) -> Vec<(CellIndex, f64, f64)> {
    let s = traj.samples();
    let mut out: Vec<(CellIndex, f64, f64)> = Vec::new();
    let mut push = |cell: CellIndex, t0: f64, t1: f64| match out.last_mut() {
        Some(last) if last.0 == cell && last.2 >= t0 => last.2 = t1,
        _ => out.push((cell, t0, t1)),
    };
    if s.len() == 1 {
        if let Some(c) = mesh.cell_of(s[0].pos) {
            push(c, s[0].t, s[0].t);
        }
        return out;
    }
    let mut us = Vec::new();
    for w in s.windows(2) {
        let (a, b) = (w[0], w[1]);
        us.clear();
        us.push(0.0);
        mesh.crossings(a.pos, b.pos, &mut us);
        us.push(1.0);
        us.sort_by(f64::total_cmp);
        us.dedup();
        let dt = b.t - a.t;
        for k in 0..us.len() - 1 {
            let (u0, u1) = (us[k], us[k + 1]);
            if let Some(c) = mesh.cell_of(a.pos.lerp(b.pos, 0.5 * (u0 + u1))) {
                push(c, a.t + u0 * dt, a.t + u1 * dt);
            }
        }
    }
    out
}

/// Merge one object's transits over a cell when they are less than a frame
/// apart, then sort every cell list by entry time.
pub fn build_transit_map(pieces: impl IntoIterator<Item = CellTransit>) -> TransitMap {
    let mut by_cell_obj: BTreeMap<(CellIndex, ObjectId), Vec<CellTransit>> = BTreeMap::new();
    for p in pieces {
        by_cell_obj.entry((p.cell, p.object_id.clone())).or_default().push(p);
    }
    let mut map = TransitMap::new();
    for ((cell, _), mut list) in by_cell_obj {
        list.sort_by(|a, b| a.t_enter.total_cmp(&b.t_enter));
        let mut merged: Vec<CellTransit> = Vec::new();
        for tr in list {
            match merged.last_mut() {
                Some(last) if tr.t_enter - last.t_exit < FRAME_PERIOD - 1e-9 => {
                    last.t_exit = last.t_exit.max(tr.t_exit);
                }
                _ => merged.push(tr),
            }
        }
        map.entry(cell).or_default().extend(merged);
    }
    for list in map.values_mut() {
        list.sort_by(|a, b| {
            a.t_enter
                .total_cmp(&b.t_enter)
                .then_with(|| a.t_exit.total_cmp(&b.t_exit))
                .then_with(|| a.object_id.cmp(&b.object_id))
        });
    }
    map
}

pub fn extract_transits(trajs: &[Trajectory], mesh: &MeshGrid) -> TransitMap {
    build_transit_map(trajs.iter().flat_map(|tr| {
        sweep_cells(tr, mesh).into_iter().map(move |(cell, t_enter, t_exit)| CellTransit {
            cell,
            object_id: tr.object_id.clone(),
            class: tr.class,
            t_enter,
            t_exit,
        })
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PetParams {
    /// Largest gap still recorded as a conflict (s).
    pub pet_window: f64,
    /// Severe when PET ≤ this (s).
    pub pet_severe: f64,
    /// Records of the same pair closer than this in time belong to one
    /// episode (s).
    pub episode_gap: f64,
}

impl Default for PetParams {
    fn default() -> Self {
        PetParams { pet_window: 10.0, pet_severe: 3.0, episode_gap: 2.0 }
    }
}

/// One PET measurement in one cell, before episode collapsing.
#[derive(Debug, Clone, PartialEq)]
pub struct PetRecord {
    pub cell: CellIndex,
    pub leader: ObjectId,
    pub follower: ObjectId,
    pub pet: f64,
    /// Entry time of the follower.
    pub t: f64,
    /// The follower entered before the leader left.
    pub overlap: bool,
}

/// Raw per-cell PET records for consecutive transits by different objects,
/// with pedestrian–pedestrian pairs dropped.
pub fn pet_records(transits: &TransitMap, params: &PetParams) -> Vec<(PetRecord, ConflictKind, ObjectClass, ObjectClass)> {
    let mut out = Vec::new();
    for list in transits.values() {
        for w in list.windows(2) {
            let (lead, follow) = (&w[0], &w[1]);
            if lead.object_id == follow.object_id {
                continue;
            }
            let Some(kind) = ConflictKind::of(lead.class, follow.class) else { continue };
            let gap = follow.t_enter - lead.t_exit;
            let pet = gap.max(0.0);
            if pet > params.pet_window {
                continue;
            }
            out.push((
                PetRecord {
                    cell: lead.cell,
                    leader: lead.object_id.clone(),
                    follower: follow.object_id.clone(),
                    pet,
                    t: follow.t_enter,
                    overlap: gap < 0.0,
                },
                kind,
                lead.class,
                follow.class,
            ));
        }
    }
    out
}

/// PET events: one per pair and episode, at the cell of minimum PET.
pub fn detect_pet_conflicts(transits: &TransitMap, mesh: &MeshGrid, params: &PetParams) -> Vec<ConflictEvent> {
    type Rec = (PetRecord, ConflictKind, ObjectClass, ObjectClass);
    let mut by_pair: BTreeMap<(ObjectId, ObjectId), Vec<Rec>> = BTreeMap::new();
    for rec in pet_records(transits, params) {
        let (a, b) = (&rec.0.leader, &rec.0.follower);
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        by_pair.entry(key).or_default().push(rec);
    }
    let mut events = Vec::new();
    for (_, mut recs) in by_pair {
        recs.sort_by(|x, y| x.0.t.total_cmp(&y.0.t).then_with(|| x.0.cell.cmp(&y.0.cell)));
        let mut start = 0;
        for i in 0..recs.len() {
            let ends = i + 1 == recs.len() || recs[i + 1].0.t - recs[i].0.t > params.episode_gap;
            if !ends {
                continue;
            }
            let ep = &recs[start..=i];
            let best = ep
                .iter()
                .min_by(|x, y| x.0.pet.total_cmp(&y.0.pet).then_with(|| x.0.t.total_cmp(&y.0.t)))
                .expect("non-empty episode");
            let (r, kind, lc, fc) = best;
            events.push(ConflictEvent::new(
                *kind,
                Metric::Pet,
                r.pet,
                r.t,
                mesh.cell_center(r.cell),
                (r.leader.clone(), *lc),
                (r.follower.clone(), *fc),
                r.pet <= params.pet_severe,
            ));
            start = i + 1;
        }
    }
    sort_events(&mut events);
    events
}
