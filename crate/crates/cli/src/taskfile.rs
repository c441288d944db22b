//! TOML task files: grid, route, obstacles (cells and inclusive boxes) and the
//! game parameters the task is meant to be played with.

use std::fs;
use std::path::Path;

use reachgrid_core::model::{ControlSet, DisturbanceSet, Padding};
use reachgrid_core::scenario::{validate_task, ScenarioError};
use reachgrid_core::{Box3, GameParams, Grid, GridVec, Mode, SafetyRadius, Task};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TaskFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("field {field}: {msg}")]
    Field { field: &'static str, msg: String },
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
    #[error("serialization failed: {0}")]
    Serialize(#[from] toml::ser::Error),
}

impl TaskFileError {
    /// True when the file parsed but the task it describes is rejected.
    pub fn is_validation(&self) -> bool {
        matches!(self, TaskFileError::Invalid(_))
    }
}

type V3 = [i32; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub grid: GridSection,
    pub route: RouteSection,
    pub safety: SafetySection,
    #[serde(default)]
    pub obstacles: ObstacleSection,
    #[serde(default)]
    pub params: ParamsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dims: [u32; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSection {
    pub z_min: i32,
    pub waypoints: Vec<V3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetySection {
    /// Norm-ball radius as `[numerator, denominator]`.
    pub delta_safe: [u32; 2],
    pub delta_tube: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<V3>,
    /// Inclusive `[lo, hi]` corners.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<[V3; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ControlSpec {
    Cube { radius: i32 },
    Directions { step: i32 },
    Custom { vectors: Vec<V3> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DisturbanceSpec {
    Calm,
    Wind { magnitude: i32 },
    Custom { vectors: Vec<V3> },
}

/// `[position, velocity]` padding per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaddingSection {
    pub standby: [i32; 2],
    pub depart: [i32; 2],
    pub cruise: [i32; 2],
    pub arrive: [i32; 2],
}

/// Every field is optional; missing ones take the defaults of
/// `GameParams::new(v_max, horizon)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<ControlSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbances: Option<DisturbanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<PaddingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_weight: Option<[[i64; 6]; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_weight: Option<[[i64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance_weight: Option<[[i64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension_padding: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_extension: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_extensions: Option<u32>,
}

/// A validated task together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTask {
    pub task: Task,
    pub params: GameParams,
    pub note: Option<String>,
}

fn v(a: V3) -> GridVec {
    GridVec::from_array(a)
}

fn field<T>(field: &'static str, r: Result<T, impl std::fmt::Display>) -> Result<T, TaskFileError> {
    r.map_err(|e| TaskFileError::Field {
        field,
        msg: e.to_string(),
    })
}

impl ParamsSection {
    pub fn to_params(&self) -> GameParams {
        let mut p = GameParams::new(self.v_max.unwrap_or(3), self.horizon.unwrap_or(12));
        if let Some(c) = &self.controls {
            p.controls = match c {
                ControlSpec::Cube { radius } => ControlSet::Cube { radius: *radius },
                ControlSpec::Directions { step } => ControlSet::Directions { step: *step },
                ControlSpec::Custom { vectors } => {
                    ControlSet::Custom(vectors.iter().copied().map(v).collect())
                }
            };
        }
        if let Some(d) = &self.disturbances {
            p.disturbances = match d {
                DisturbanceSpec::Calm => DisturbanceSet::Calm,
                DisturbanceSpec::Wind { magnitude } => DisturbanceSet::Wind {
                    magnitude: *magnitude,
                },
                DisturbanceSpec::Custom { vectors } => {
                    DisturbanceSet::Custom(vectors.iter().copied().map(v).collect())
                }
            };
        }
        if let Some(pad) = &self.padding {
            for (mode, [position, velocity]) in [
                (Mode::Standby, pad.standby),
                (Mode::Depart, pad.depart),
                (Mode::Cruise, pad.cruise),
                (Mode::Arrive, pad.arrive),
            ] {
                p.padding[mode.index()] = Padding { position, velocity };
            }
        }
        if let Some(w) = self.state_weight {
            p.state_weight = w;
        }
        if let Some(w) = self.control_weight {
            p.control_weight = w;
        }
        if let Some(w) = self.disturbance_weight {
            p.disturbance_weight = w;
        }
        if let Some(x) = self.extension_padding {
            p.extension_padding = x;
        }
        if let Some(x) = self.temporal_extension {
            p.temporal_extension = x;
        }
        if let Some(x) = self.max_extensions {
            p.max_extensions = x;
        }
        p
    }

    pub fn from_params(p: &GameParams) -> Self {
        let pad = |m: Mode| {
            let q = p.padding(m);
            [q.position, q.velocity]
        };
        ParamsSection {
            v_max: Some(p.v_max),
            horizon: Some(p.horizon),
            controls: Some(match &p.controls {
                ControlSet::Cube { radius } => ControlSpec::Cube { radius: *radius },
                ControlSet::Directions { step } => ControlSpec::Directions { step: *step },
                ControlSet::Custom(vs) => ControlSpec::Custom {
                    vectors: vs.iter().map(|g| g.to_array()).collect(),
                },
            }),
            disturbances: Some(match &p.disturbances {
                DisturbanceSet::Calm => DisturbanceSpec::Calm,
                DisturbanceSet::Wind { magnitude } => DisturbanceSpec::Wind {
                    magnitude: *magnitude,
                },
                DisturbanceSet::Custom(vs) => DisturbanceSpec::Custom {
                    vectors: vs.iter().map(|g| g.to_array()).collect(),
                },
            }),
            padding: Some(PaddingSection {
                standby: pad(Mode::Standby),
                depart: pad(Mode::Depart),
                cruise: pad(Mode::Cruise),
                arrive: pad(Mode::Arrive),
            }),
            state_weight: Some(p.state_weight),
            control_weight: Some(p.control_weight),
            disturbance_weight: Some(p.disturbance_weight),
            extension_padding: Some(p.extension_padding),
            temporal_extension: Some(p.temporal_extension),
            max_extensions: Some(p.max_extensions),
        }
    }
}

impl TaskFile {
    /// Builds the task without running the route and perforation validators.
    pub fn to_task_unchecked(&self) -> Result<Task, TaskFileError> {
        if self.schema != SCHEMA_VERSION {
            return Err(TaskFileError::Schema(self.schema));
        }
        let [nx, ny, nz] = self.grid.dims;
        let grid = field("grid.dims", Grid::new(nx, ny, nz))?;
        let [num, den] = self.safety.delta_safe;
        let delta_safe = field("safety.delta_safe", SafetyRadius::new(num, den))?;
        for (i, [lo, hi]) in self.obstacles.boxes.iter().enumerate() {
            if (0..3).any(|a| lo[a] > hi[a]) {
                return Err(TaskFileError::Field {
                    field: "obstacles.boxes",
                    msg: format!("box {i} has lo > hi"),
                });
            }
        }
        let cells = self
            .obstacles
            .cells
            .iter()
            .map(|&c| v(c))
            .chain(
                self.obstacles
                    .boxes
                    .iter()
                    .flat_map(|&[lo, hi]| Box3::new(v(lo), v(hi)).iter()),
            );
        let route = self.route.waypoints.iter().map(|&w| v(w)).collect();
        field(
            "obstacles",
            Task::new(grid, route, cells, self.route.z_min, delta_safe, self.safety.delta_tube),
        )
    }

    pub fn to_loaded(&self) -> Result<LoadedTask, TaskFileError> {
        let task = self.to_task_unchecked()?;
        validate_task(&task)?;
        Ok(LoadedTask {
            task,
            params: self.params.to_params(),
            note: self.note.clone(),
        })
    }

    /// Obstacles are stored as a greedy box cover: each box grows along z,
    /// then y, then x while it stays inside unclaimed obstacle cells.
    pub fn from_task(task: &Task, params: &GameParams, note: Option<&str>) -> Self {
        let grid = *task.grid();
        let [nx, ny, nz] = grid.dims().map(|d| d as i32);
        let occ = task.occupancy();
        let mut free: Vec<bool> = (0..grid.cell_count()).map(|i| occ.contains(i)).collect();
        let mut boxes: Vec<[V3; 2]> = Vec::new();
        let mut cells: Vec<V3> = Vec::new();
        for o in task.obstacles() {
            if !free[grid.index(o)] {
                continue;
            }
            let all = |free: &[bool], lo: GridVec, hi: GridVec| Box3::new(lo, hi).iter().all(|p| free[grid.index(p)]);
            let mut hi = o;
            while hi.z + 1 < nz && all(&free, GridVec::new(o.x, o.y, hi.z + 1), GridVec::new(o.x, o.y, hi.z + 1)) {
                hi.z += 1;
            }
            while hi.y + 1 < ny && all(&free, GridVec::new(o.x, hi.y + 1, o.z), GridVec::new(o.x, hi.y + 1, hi.z)) {
                hi.y += 1;
            }
            while hi.x + 1 < nx && all(&free, GridVec::new(hi.x + 1, o.y, o.z), GridVec::new(hi.x + 1, hi.y, hi.z)) {
                hi.x += 1;
            }
            for p in Box3::new(o, hi).iter() {
                free[grid.index(p)] = false;
            }
            if o == hi {
                cells.push(o.to_array());
            } else {
                boxes.push([o.to_array(), hi.to_array()]);
            }
        }
        let ds = task.delta_safe();
        TaskFile {
            schema: SCHEMA_VERSION,
            note: note.map(str::to_owned),
            grid: GridSection {
                dims: task.grid().dims(),
            },
            route: RouteSection {
                z_min: task.z_min(),
                waypoints: task.route().iter().map(|w| w.to_array()).collect(),
            },
            safety: SafetySection {
                delta_safe: [ds.numer(), ds.denom()],
                delta_tube: task.delta_tube(),
            },
            obstacles: ObstacleSection { cells, boxes },
            params: ParamsSection::from_params(params),
        }
    }
}

pub fn parse_task_file(text: &str) -> Result<TaskFile, TaskFileError> {
    Ok(toml::from_str(text)?)
}

pub fn load_task(path: &Path) -> Result<LoadedTask, TaskFileError> {
    let text = fs::read_to_string(path).map_err(|source| TaskFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_task_file(&text)?.to_loaded()
}

pub fn task_to_toml(task: &Task, params: &GameParams, note: Option<&str>) -> Result<String, TaskFileError> {
    Ok(toml::to_string(&TaskFile::from_task(task, params, note))?)
}

pub fn save_task(task: &Task, params: &GameParams, note: Option<&str>, path: &Path) -> Result<(), TaskFileError> {
    let text = task_to_toml(task, params, note)?;
    fs::write(path, text).map_err(|source| TaskFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use reachgrid_core::scenario::builtin_scenario;

    const MINIMAL: &str = r#"
schema = 1

[grid]
dims = [12, 12, 8]

[route]
z_min = 3
waypoints = [[0, 0, 0], [0, 0, 5], [9, 9, 5], [9, 9, 0]]

[safety]
delta_safe = [1, 1]
delta_tube = 1

[obstacles]
boxes = [[[4, 0, 0], [4, 2, 7]]]
"#;

    #[test]
    fn minimal_file_loads_with_default_params() {
        let t = parse_task_file(MINIMAL).unwrap().to_loaded().unwrap();
        assert_eq!(t.task.obstacle_count(), 3 * 8);
        assert_eq!(t.params, GameParams::new(3, 12));
    }

    #[test]
    fn box_expands_to_cells() {
        let text = MINIMAL.replace("[[[4, 0, 0], [4, 2, 7]]]", "[[[0, 0, 0], [2, 2, 2]]]");
        let f = parse_task_file(&text).unwrap();
        assert_eq!(f.to_task_unchecked().unwrap().obstacle_count(), 27);
    }

    #[test]
    fn round_trip_of_every_builtin() {
        for name in ["mini-yard", "yard", "random-fixture"] {
            let s = builtin_scenario(name).unwrap();
            let text = task_to_toml(&s.task, &s.params, Some(s.note)).unwrap();
            let back = parse_task_file(&text).unwrap().to_loaded().unwrap();
            assert_eq!(back.task, s.task, "{name}");
            assert_eq!(back.params, s.params, "{name}");
            assert_eq!(back.note.as_deref(), Some(s.note));
        }
    }

    #[test]
    fn short_route_is_rejected_with_clause() {
        let text = MINIMAL.replace("[[0, 0, 0], [0, 0, 5], [9, 9, 5], [9, 9, 0]]", "[[0, 0, 0], [0, 0, 5], [0, 0, 0]]");
        let err = parse_task_file(&text).unwrap().to_loaded().unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("n ≥ 4"), "{err}");
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_task_file("schema = 1\n[grid]\ndims = [1, 2\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_task_file(&MINIMAL.replace("delta_tube", "delta_tub")).unwrap_err();
        assert!(err.to_string().contains("delta_tub"), "{err}");
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let f = parse_task_file(&MINIMAL.replace("schema = 1", "schema = 7")).unwrap();
        assert!(matches!(f.to_loaded(), Err(TaskFileError::Schema(7))));
    }

    #[test]
    fn inverted_box_is_a_field_error() {
        let text = MINIMAL.replace("[[[4, 0, 0], [4, 2, 7]]]", "[[[4, 3, 0], [4, 2, 7]]]");
        let err = parse_task_file(&text).unwrap().to_loaded().unwrap_err();
        assert!(matches!(err, TaskFileError::Field { field: "obstacles.boxes", .. }));
    }
}
