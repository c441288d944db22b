use alloc::vec::Vec;

use crate::geom::GridVec;

use super::{Mode, ModelError};

/// Control alphabet `U`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ControlSet {
    /// Every integer vector in `[±radius]^3`.
    Cube { radius: i32 },
    /// `step · {-1, 0, 1}^3`: the 26 compass directions plus hovering.
    Directions { step: i32 },
    Custom(Vec<GridVec>),
}

impl ControlSet {
    /// Sorted lexicographically, duplicates removed.
    pub fn vectors(&self) -> Vec<GridVec> {
        let mut out = match self {
            ControlSet::Cube { radius } => {
                let r = *radius;
                let mut v = Vec::new();
                for x in -r..=r {
                    for y in -r..=r {
                        for z in -r..=r {
                            v.push(GridVec::new(x, y, z));
                        }
                    }
                }
                v
            }
            ControlSet::Directions { step } => {
                let mut v = Vec::new();
                for x in -1..=1 {
                    for y in -1..=1 {
                        for z in -1..=1 {
                            v.push(GridVec::new(x * step, y * step, z * step));
                        }
                    }
                }
                v
            }
            ControlSet::Custom(v) => v.clone(),
        };
        out.sort();
        out.dedup();
        out
    }
}

impl Default for ControlSet {
    fn default() -> Self {
        ControlSet::Cube { radius: 1 }
    }
}

/// Disturbance alphabet `D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DisturbanceSet {
    /// Only the zero vector.
    Calm,
    /// Horizontal wind from the four compass directions with the given
    /// magnitude, plus calm.
    Wind { magnitude: i32 },
    Custom(Vec<GridVec>),
}

impl DisturbanceSet {
    pub fn vectors(&self) -> Vec<GridVec> {
        let mut out = match self {
            DisturbanceSet::Calm => alloc::vec![GridVec::ZERO],
            DisturbanceSet::Wind { magnitude: m } => alloc::vec![
                GridVec::ZERO,
                GridVec::new(*m, 0, 0),
                GridVec::new(-*m, 0, 0),
                GridVec::new(0, *m, 0),
                GridVec::new(0, -*m, 0),
            ],
            DisturbanceSet::Custom(v) => v.clone(),
        };
        out.sort();
        out.dedup();
        out
    }
}

impl Default for DisturbanceSet {
    fn default() -> Self {
        DisturbanceSet::Wind { magnitude: 1 }
    }
}

/// Position and velocity padding of one mode's scope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Padding {
    pub position: i32,
    pub velocity: i32,
}

/// Parameters of the parametric modal games.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameParams {
    pub controls: ControlSet,
    pub disturbances: DisturbanceSet,
    pub v_max: i32,
    /// Horizon `N`; stages run `1..=N` with the terminal cost at `N + 1`.
    pub horizon: u32,
    /// Indexed by [`Mode::index`].
    pub padding: [Padding; 4],
    /// Weight on the 6-dimensional shifted state `(p - p_i, v)`.
    pub state_weight: [[i64; 6]; 6],
    pub control_weight: [[i64; 3]; 3],
    pub disturbance_weight: [[i64; 3]; 3],
    /// Position padding added per scope-extension retry.
    pub extension_padding: i32,
    /// Horizon added per scope-extension retry.
    pub temporal_extension: u32,
    /// Number of scope-extension retries after the initial solve.
    pub max_extensions: u32,
}

impl GameParams {
    pub fn new(v_max: i32, horizon: u32) -> Self {
        let fly = Padding {
            position: 2,
            velocity: v_max.min(2),
        };
        let mut padding = [fly; 4];
        padding[Mode::Cruise.index()] = Padding {
            position: 2,
            velocity: v_max,
        };
        GameParams {
            controls: ControlSet::default(),
            disturbances: DisturbanceSet::default(),
            v_max,
            horizon,
            padding,
            state_weight: identity(),
            control_weight: identity(),
            disturbance_weight: [[0; 3]; 3],
            extension_padding: 2,
            temporal_extension: 0,
            max_extensions: 3,
        }
    }

    pub fn padding(&self, mode: Mode) -> Padding {
        self.padding[mode.index()]
    }

    pub fn control_vectors(&self) -> Vec<GridVec> {
        self.controls.vectors()
    }

    pub fn disturbance_vectors(&self) -> Vec<GridVec> {
        self.disturbances.vectors()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &'static str| Err(ModelError::InvalidParams(what));
        let u = self.control_vectors();
        let d = self.disturbance_vectors();
        if !u.contains(&GridVec::ZERO) {
            return bad("control set must contain 0");
        }
        if !d.contains(&GridVec::ZERO) {
            return bad("disturbance set must contain 0");
        }
        if u.len() > 254 {
            return bad("control set larger than 254 vectors");
        }
        if u.iter().chain(d.iter()).any(|w| w.chebyshev() > 8) {
            return bad("control or disturbance magnitude above 8");
        }
        if self.v_max < 0 {
            return bad("v_max must be non-negative");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self
            .padding
            .iter()
            .any(|p| p.position < 0 || p.velocity < 0)
        {
            return bad("paddings must be non-negative");
        }
        if self.extension_padding < 0 {
            return bad("extension padding must be non-negative");
        }
        if !weight_ok(&self.state_weight)
            || !weight_ok(&self.control_weight)
            || !weight_ok(&self.disturbance_weight)
        {
            return bad("weights must be symmetric, non-negative and diagonally dominant");
        }
        Ok(())
    }
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams::new(5, 30)
    }
}

fn identity<const N: usize>() -> [[i64; N]; N] {
    let mut m = [[0; N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1;
    }
    m
}

// Symmetric with non-negative entries and a dominant diagonal, which makes the
// quadratic form non-negative.
fn weight_ok<const N: usize>(m: &[[i64; N]; N]) -> bool {
    for i in 0..N {
        let mut off = 0;
        for j in 0..N {
            if m[i][j] < 0 || m[i][j] != m[j][i] {
                return false;
            }
            if i != j {
                off += m[i][j];
            }
        }
        if m[i][i] < off {
            return false;
        }
    }
    true
}

/// `wᵀ M w`.
pub fn quadratic<const N: usize>(m: &[[i64; N]; N], w: &[i64; N]) -> i64 {
    let mut acc = 0;
    for i in 0..N {
        if w[i] == 0 {
            continue;
        }
        for j in 0..N {
            acc += w[i] * m[i][j] * w[j];
        }
    }
    acc
}
