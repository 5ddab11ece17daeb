//! Drop geometry: 19-cell hexagonal macro layout, buildings with a centred
//! femtocell BS, and uniform user drops.
//!
//! Cells are flat-topped hexagons of circumradius `R`; neighbouring sites
//! are `sqrt(3) R` apart. There is no wrap-around: statistics come from the
//! centre cell (index 0) and the two outer rings act as interferers.
//!
//! BS indexing used throughout the crate: macro BSs are `0..19`, the femto
//! BS of building `j` is `19 + j`. User indexing: macro users first, then
//! femto users in building order.

use rand::Rng;

use crate::channel::ChannelModel;
use crate::config::{FemtoLayout, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::{stream, tag, StreamRng};

pub const MACRO_CELLS: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroLayout {
    pub bs_positions: Vec<Point>,
    pub cell_radius: f64,
}

/// Centre site plus two hexagonal rings (6 + 12).
pub fn build_hex_layout(cell_radius: f64) -> MacroLayout {
    let r = cell_radius;
    let mut axial: Vec<(i32, i32)> = Vec::with_capacity(MACRO_CELLS);
    axial.push((0, 0));
    for ring in 1..=2i32 {
        for q in -ring..=ring {
            for s in -ring..=ring {
                let t = -q - s;
                if q.abs().max(s.abs()).max(t.abs()) == ring {
                    axial.push((q, s));
                }
            }
        }
    }
    let bs_positions = axial
        .into_iter()
        .map(|(q, s)| {
            Point::new(
                1.5 * r * q as f64,
                3f64.sqrt() * r * (s as f64 + q as f64 / 2.0),
            )
        })
        .collect();
    MacroLayout {
        bs_positions,
        cell_radius,
    }
}

impl MacroLayout {
    pub fn len(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bs_positions.is_empty()
    }

    /// Whether `p` lies in the flat-topped hexagon of `cell`.
    pub fn contains(&self, cell: usize, p: Point) -> bool {
        let c = self.bs_positions[cell];
        let r = self.cell_radius;
        let dx = (p.x - c.x).abs();
        let dy = (p.y - c.y).abs();
        let h = 3f64.sqrt() / 2.0 * r;
        let eps = 1e-9 * r;
        dx <= r + eps && dy <= h + eps && 3f64.sqrt() * dx + dy <= 3f64.sqrt() * r + eps
    }

    /// Cell whose hexagon contains `p` (the nearest site), if any.
    pub fn cell_of(&self, p: Point) -> Option<usize> {
        let nearest = self
            .bs_positions
            .iter()
            .enumerate()
            .min_by(|a, b| p.distance(*a.1).total_cmp(&p.distance(*b.1)))
            .map(|(i, _)| i)?;
        self.contains(nearest, p).then_some(nearest)
    }

    /// Uniform point in the hexagon of `cell` by rejection from its bounding box.
    pub fn sample_in_cell(&self, cell: usize, rng: &mut impl Rng) -> Point {
        let c = self.bs_positions[cell];
        let r = self.cell_radius;
        let h = 3f64.sqrt() / 2.0 * r;
        loop {
            let p = Point::new(c.x + rng.random_range(-r..r), c.y + rng.random_range(-h..h));
            if self.contains(cell, p) {
                return p;
            }
        }
    }

    /// Whether an axis-aligned square of half-width `half` centred at `center`
    /// lies entirely in `cell` (the hexagon is convex, so corners suffice).
    pub fn square_inside(&self, cell: usize, center: Point, half: f64) -> bool {
        [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
            .iter()
            .all(|&(sx, sy)| {
                self.contains(cell, Point::new(center.x + sx * half, center.y + sy * half))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    pub center: Point,
    pub width: f64,
    pub length: f64,
    /// Always equal to `center`.
    pub femto_bs_position: Point,
    /// Macro cell whose hexagon contains the footprint.
    pub cell: usize,
}

impl Building {
    pub fn new(center: Point, size: f64, cell: usize) -> Self {
        Building {
            center,
            width: size,
            length: size,
            femto_bs_position: center,
            cell,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        (p.x - self.center.x).abs() <= self.width / 2.0 + 1e-9
            && (p.y - self.center.y).abs() <= self.length / 2.0 + 1e-9
    }

    fn overlaps(&self, other: &Building) -> bool {
        (self.center.x - other.center.x).abs() < (self.width + other.width) / 2.0
            && (self.center.y - other.center.y).abs() < (self.length + other.length) / 2.0
    }

    fn sample_inside(&self, rng: &mut impl Rng) -> Point {
        Point::new(
            self.center.x + rng.random_range(-self.width / 2.0..=self.width / 2.0),
            self.center.y + rng.random_range(-self.length / 2.0..=self.length / 2.0),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroUser {
    pub position: Point,
    /// Cell the user was dropped in.
    pub cell: usize,
    /// Macro BS with the lowest static loss.
    pub serving: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FemtoUser {
    pub position: Point,
    pub building: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserKind {
    Macro,
    Femto { building: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsKind {
    Macro,
    Femto { building: usize },
}

/// Immutable placement of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub layout: MacroLayout,
    pub buildings: Vec<Building>,
    pub macro_users: Vec<MacroUser>,
    pub femto_users: Vec<FemtoUser>,
    pub rng_seed: u64,
}

impl Topology {
    pub fn n_macro_bs(&self) -> usize {
        self.layout.len()
    }

    pub fn n_bs(&self) -> usize {
        self.layout.len() + self.buildings.len()
    }

    pub fn n_users(&self) -> usize {
        self.macro_users.len() + self.femto_users.len()
    }

    pub fn femto_bs(&self, building: usize) -> usize {
        self.layout.len() + building
    }

    pub fn bs_kind(&self, bs: usize) -> BsKind {
        if bs < self.layout.len() {
            BsKind::Macro
        } else {
            BsKind::Femto {
                building: bs - self.layout.len(),
            }
        }
    }

    pub fn bs_position(&self, bs: usize) -> Point {
        match self.bs_kind(bs) {
            BsKind::Macro => self.layout.bs_positions[bs],
            BsKind::Femto { building } => self.buildings[building].femto_bs_position,
        }
    }

    pub fn user_kind(&self, user: usize) -> UserKind {
        if user < self.macro_users.len() {
            UserKind::Macro
        } else {
            UserKind::Femto {
                building: self.femto_users[user - self.macro_users.len()].building,
            }
        }
    }

    pub fn user_position(&self, user: usize) -> Point {
        let nm = self.macro_users.len();
        if user < nm {
            self.macro_users[user].position
        } else {
            self.femto_users[user - nm].position
        }
    }

    pub fn serving_bs(&self, user: usize) -> usize {
        match self.user_kind(user) {
            UserKind::Macro => self.macro_users[user].serving,
            UserKind::Femto { building } => self.femto_bs(building),
        }
    }

    /// Stable key of a user for random-stream derivation. Macro user keys
    /// do not depend on the femtocell deployment.
    pub fn user_key(&self, user: usize) -> u64 {
        let nm = self.macro_users.len();
        if user < nm {
            user as u64
        } else {
            let f = user - nm;
            (1u64 << 40) | ((self.femto_users[f].building as u64) << 8) | (f as u64 & 0xff)
        }
    }

    pub fn bs_key(&self, bs: usize) -> u64 {
        match self.bs_kind(bs) {
            BsKind::Macro => bs as u64,
            BsKind::Femto { building } => (1u64 << 40) | building as u64,
        }
    }

    /// Users attached to each BS, in user-index order.
    pub fn users_by_bs(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_bs()];
        for u in 0..self.n_users() {
            out[self.serving_bs(u)].push(u);
        }
        out
    }
}

/// Index of the smallest loss; the lowest index wins ties.
pub fn argmin_lowest_index(losses: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in losses.iter().enumerate().skip(1) {
        if l < losses[best] {
            best = i;
        }
    }
    best
}

/// Serving macro BS of each user: argmin of static loss, lowest index on ties.
pub fn associate_macro_users<R: AsRef<[f64]>>(loss_rows: &[R]) -> Vec<usize> {
    loss_rows
        .iter()
        .map(|row| argmin_lowest_index(row.as_ref()))
        .collect()
}

fn place_single(
    layout: &MacroLayout,
    cfg: &ScenarioConfig,
    rng: &mut StreamRng,
) -> Result<Building> {
    let half = cfg.building_size_m / 2.0;
    for _ in 0..cfg.placement_retries {
        let az = match cfg.femto_azimuth_deg {
            Some(deg) => deg.to_radians(),
            None => rng.random_range(0.0..std::f64::consts::TAU),
        };
        let c = Point::new(
            cfg.femto_distance_m * az.cos(),
            cfg.femto_distance_m * az.sin(),
        );
        if layout.square_inside(0, c, half) {
            return Ok(Building::new(c, cfg.building_size_m, 0));
        }
        if cfg.femto_azimuth_deg.is_some() {
            break;
        }
    }
    Err(Error::Placement {
        index: 0,
        attempts: cfg.placement_retries,
    })
}

fn place_multi(
    layout: &MacroLayout,
    cfg: &ScenarioConfig,
    rng: &mut StreamRng,
) -> Result<Vec<Building>> {
    let total = cfg.femto_count();
    let half = cfg.building_size_m / 2.0;
    let mut out: Vec<Building> = Vec::with_capacity(total);
    for index in 0..total {
        let mut placed = false;
        for _ in 0..cfg.placement_retries {
            // Equal-area cells: uniform cell then uniform point is uniform
            // over the region.
            let cell = rng.random_range(0..layout.len());
            let c = layout.sample_in_cell(cell, rng);
            if !layout.square_inside(cell, c, half) {
                continue;
            }
            let b = Building::new(c, cfg.building_size_m, cell);
            if out.iter().any(|o| o.overlaps(&b)) {
                continue;
            }
            out.push(b);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Placement {
                index,
                attempts: cfg.placement_retries,
            });
        }
    }
    Ok(out)
}

/// Draws one topology. Deterministic in `(config, seed)`.
pub fn drop_topology(cfg: &ScenarioConfig, seed: u64) -> Result<Topology> {
    cfg.validate()?;
    let layout = build_hex_layout(cfg.cell_radius_m);

    let mut macro_users = Vec::with_capacity(layout.len() * cfg.macro_users_per_cell);
    for cell in 0..layout.len() {
        let mut rng = stream(seed, &[tag::MACRO_USERS, cell as u64]);
        for _ in 0..cfg.macro_users_per_cell {
            macro_users.push(MacroUser {
                position: layout.sample_in_cell(cell, &mut rng),
                cell,
                serving: cell,
            });
        }
    }

    let mut brng = stream(seed, &[tag::BUILDINGS]);
    let buildings = match cfg.femto_layout {
        FemtoLayout::Single => vec![place_single(&layout, cfg, &mut brng)?],
        FemtoLayout::Multi => place_multi(&layout, cfg, &mut brng)?,
    };

    let mut femto_users = Vec::with_capacity(buildings.len() * cfg.femto_users_per_building);
    for (j, b) in buildings.iter().enumerate() {
        let mut rng = stream(seed, &[tag::FEMTO_USERS, j as u64]);
        for _ in 0..cfg.femto_users_per_building {
            femto_users.push(FemtoUser {
                position: b.sample_inside(&mut rng),
                building: j,
            });
        }
    }

    let mut topo = Topology {
        layout,
        buildings,
        macro_users,
        femto_users,
        rng_seed: seed,
    };

    let channel = ChannelModel::new(cfg, seed);
    let n_macro = topo.n_macro_bs();
    let rows: Vec<Vec<f64>> = (0..topo.macro_users.len())
        .map(|u| {
            channel
                .user_links_upto(&topo, u, n_macro)
                .iter()
                .map(|l| l.total.value())
                .collect()
        })
        .collect();
    for (user, serving) in topo
        .macro_users
        .iter_mut()
        .zip(associate_macro_users(&rows))
    {
        user.serving = serving;
    }
    Ok(topo)
}
