use alloc::vec::Vec;
use core::fmt;

use fixedbitset::FixedBitSet;

use crate::geom::{Box3, GridVec};

use super::ModelError;

/// Position grid of the scenery: cells `[0, dims - 1]` on every axis, with
/// `z = 0` being the ground.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    dims: [u32; 3],
}

impl Grid {
    pub fn new(nx: u32, ny: u32, nz: u32) -> Result<Self, ModelError> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(ModelError::EmptyGrid);
        }
        if (nx as u64) * (ny as u64) * (nz as u64) > (1u64 << 31) {
            return Err(ModelError::GridTooLarge);
        }
        Ok(Grid { dims: [nx, ny, nz] })
    }

    pub fn dims(&self) -> [u32; 3] {
        self.dims
    }

    pub fn bounds(&self) -> Box3 {
        Box3::new(
            GridVec::ZERO,
            GridVec::new(
                self.dims[0] as i32 - 1,
                self.dims[1] as i32 - 1,
                self.dims[2] as i32 - 1,
            ),
        )
    }

    pub fn contains(&self, p: GridVec) -> bool {
        self.bounds().contains(p)
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    #[inline]
    pub fn index(&self, p: GridVec) -> usize {
        self.bounds().index_of(p)
    }

    pub fn point(&self, idx: usize) -> GridVec {
        self.bounds().point_at(idx)
    }
}

/// Norm-ball safety radius as a reduced fraction, so that the collision test
/// stays in integer arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SafetyRadius {
    num: u32,
    den: u32,
}

impl SafetyRadius {
    pub fn new(num: u32, den: u32) -> Result<Self, ModelError> {
        if den == 0 {
            return Err(ModelError::InvalidSafetyRadius);
        }
        let g = gcd(num, den).max(1);
        Ok(SafetyRadius {
            num: num / g,
            den: den / g,
        })
    }

    /// Radius given in thousandths (1500 is 1.5).
    pub fn from_milli(milli: u32) -> Self {
        SafetyRadius::new(milli, 1000).expect("non-zero denominator")
    }

    pub fn numer(&self) -> u32 {
        self.num
    }

    pub fn denom(&self) -> u32 {
        self.den
    }

    /// `⌊radius²⌋`; an obstacle at squared distance up to this is a collision.
    pub fn threshold_sq(&self) -> i64 {
        let (n, d) = (self.num as i64, self.den as i64);
        (n * n) / (d * d)
    }

    /// Integer offsets `o` with `|o|² ≤ ⌊radius²⌋`, in lexicographic order.
    pub fn offsets(&self) -> Vec<GridVec> {
        let t = self.threshold_sq();
        let r = isqrt(t) as i32;
        let mut out = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    let o = GridVec::new(x, y, z);
                    if o.norm_sq() <= t {
                        out.push(o);
                    }
                }
            }
        }
        out
    }
}

impl Default for SafetyRadius {
    fn default() -> Self {
        SafetyRadius { num: 3, den: 2 }
    }
}

impl fmt::Display for SafetyRadius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn isqrt(n: i64) -> i64 {
    let mut r = 0;
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// An aerial delivery task: grid, route and a fixed obstacle cloud, together
/// with the safety radii used to interpret the cloud.
///
/// Construction only checks structural sanity. Route validity and tube
/// perforation are checked by [`crate::scenario`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    grid: Grid,
    route: Vec<GridVec>,
    z_min: i32,
    delta_safe: SafetyRadius,
    delta_tube: u32,
    occupancy: FixedBitSet,
    safety_offsets: Vec<GridVec>,
}

impl Task {
    pub fn new(
        grid: Grid,
        route: Vec<GridVec>,
        obstacles: impl IntoIterator<Item = GridVec>,
        z_min: i32,
        delta_safe: SafetyRadius,
        delta_tube: u32,
    ) -> Result<Self, ModelError> {
        let mut occupancy = FixedBitSet::with_capacity(grid.cell_count());
        for o in obstacles {
            if !grid.contains(o) {
                return Err(ModelError::ObstacleOutsideGrid(o));
            }
            occupancy.insert(grid.index(o));
        }
        Ok(Task {
            grid,
            route,
            z_min,
            delta_safe,
            delta_tube,
            occupancy,
            safety_offsets: delta_safe.offsets(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Waypoints `p_1..p_n` (stored zero-based).
    pub fn route(&self) -> &[GridVec] {
        &self.route
    }

    /// Waypoint `p_i` for a 1-based index.
    pub fn waypoint(&self, i: u32) -> Option<GridVec> {
        if i == 0 {
            return None;
        }
        self.route.get(i as usize - 1).copied()
    }

    /// Obstacle cells in grid order.
    pub fn obstacles(&self) -> impl Iterator<Item = GridVec> + '_ {
        self.occupancy.ones().map(|i| self.grid.point(i))
    }

    pub fn obstacle_count(&self) -> usize {
        self.occupancy.count_ones(..)
    }

    /// Obstacle bitmap indexed like [`Grid::index`].
    pub fn occupancy(&self) -> &FixedBitSet {
        &self.occupancy
    }

    pub fn z_min(&self) -> i32 {
        self.z_min
    }

    pub fn delta_safe(&self) -> SafetyRadius {
        self.delta_safe
    }

    pub fn delta_tube(&self) -> u32 {
        self.delta_tube
    }

    #[inline]
    pub fn is_obstacle(&self, p: GridVec) -> bool {
        self.grid.contains(p) && self.occupancy.contains(self.grid.index(p))
    }

    /// Same task with a different route and extra obstacles.
    pub fn with_changes(
        &self,
        route: Vec<GridVec>,
        extra_obstacles: impl IntoIterator<Item = GridVec>,
    ) -> Result<Task, ModelError> {
        Task::new(
            self.grid,
            route,
            self.obstacles().chain(extra_obstacles),
            self.z_min,
            self.delta_safe,
            self.delta_tube,
        )
    }

    pub(crate) fn safety_offsets(&self) -> &[GridVec] {
        &self.safety_offsets
    }
}

/// Static collision predicate: some obstacle lies within `delta_safe` of `p`,
/// compared as `|o - p|² ≤ ⌊delta_safe²⌋`.
pub fn unsafe_static(p: GridVec, task: &Task) -> bool {
    task.safety_offsets()
        .iter()
        .any(|&o| task.is_obstacle(p + o))
}
