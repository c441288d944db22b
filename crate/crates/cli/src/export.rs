//! Trajectory CSV, key=value summaries, run manifests and raw value-table
//! dumps.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use reachgrid_core::player::{Outcome, PlayRecord, Row};
use reachgrid_core::solver::Solution;
use reachgrid_core::{Event, GridVec, Mode, ModalGame, StateVec};
use serde::{Deserialize, Serialize};

/// One CSV line; `u` and `d` are empty on the final row and on rows left by a
/// jump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvRow {
    pub step: usize,
    pub mode: String,
    pub k: u32,
    pub p_x: i32,
    pub p_y: i32,
    pub p_z: i32,
    pub v_x: i32,
    pub v_y: i32,
    pub v_z: i32,
    pub i: u32,
    pub u_x: Option<i32>,
    pub u_y: Option<i32>,
    pub u_z: Option<i32>,
    pub d_x: Option<i32>,
    pub d_y: Option<i32>,
    pub d_z: Option<i32>,
    pub event: String,
}

impl CsvRow {
    pub fn from_row(step: usize, r: &Row) -> Self {
        let (u, d) = match r.input {
            Some((u, d)) => (Some(u), Some(d)),
            None => (None, None),
        };
        CsvRow {
            step,
            mode: r.mode.name().into(),
            k: r.k,
            p_x: r.x.p.x,
            p_y: r.x.p.y,
            p_z: r.x.p.z,
            v_x: r.x.v.x,
            v_y: r.x.v.y,
            v_z: r.x.v.z,
            i: r.x.i,
            u_x: u.map(|u| u.x),
            u_y: u.map(|u| u.y),
            u_z: u.map(|u| u.z),
            d_x: d.map(|d| d.x),
            d_y: d.map(|d| d.y),
            d_z: d.map(|d| d.z),
            event: r.event.map(|e| e.name().to_string()).unwrap_or_default(),
        }
    }

    pub fn to_row(&self) -> Result<Row> {
        let mode = Mode::from_name(&self.mode).ok_or_else(|| anyhow!("unknown mode {:?}", self.mode))?;
        let event = match self.event.as_str() {
            "" => None,
            e => Some(Event::from_name(e).ok_or_else(|| anyhow!("unknown event {e:?}"))?),
        };
        let triple = |a: Option<i32>, b: Option<i32>, c: Option<i32>| match (a, b, c) {
            (Some(a), Some(b), Some(c)) => Ok(Some(GridVec::new(a, b, c))),
            (None, None, None) => Ok(None),
            _ => Err(anyhow!("step {}: partially filled vector", self.step)),
        };
        let u = triple(self.u_x, self.u_y, self.u_z)?;
        let d = triple(self.d_x, self.d_y, self.d_z)?;
        let input = match (u, d) {
            (Some(u), Some(d)) => Some((u, d)),
            (None, None) => None,
            _ => bail!("step {}: u and d must both be present", self.step),
        };
        Ok(Row {
            mode,
            x: StateVec::new(
                GridVec::new(self.p_x, self.p_y, self.p_z),
                GridVec::new(self.v_x, self.v_y, self.v_z),
                self.i,
            ),
            k: self.k,
            input,
            event,
        })
    }

    pub fn position(&self) -> GridVec {
        GridVec::new(self.p_x, self.p_y, self.p_z)
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (step, r) in rows.iter().enumerate() {
        w.serialize(CsvRow::from_row(step, r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (n, rec) in r.deserialize().enumerate() {
        out.push(rec.with_context(|| format!("trajectory row {}", n + 1))?);
    }
    Ok(out)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<CsvRow>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_csv(std::io::BufReader::new(f))
}

/// Ordered `key=value` lines.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Summary(Vec<(String, String)>);

impl Summary {
    pub fn new() -> Self {
        Summary::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        let key = key.into();
        let value = value.to_string();
        match self.0.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 = value,
            None => self.0.push((key, value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Summary::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("summary line {}: missing '='", n + 1))?;
            s.set(k, v);
        }
        Ok(s)
    }
}

pub fn play_summary(rec: &PlayRecord) -> Summary {
    let mut s = Summary::new();
    s.set("outcome", rec.outcome)
        .set("play_steps", rec.step_count())
        .set("total_cost", rec.total_cost())
        .set("segments", rec.segments.len());
    let max_cells = rec.segments.iter().map(|g| g.states).max().unwrap_or(0);
    s.set("max_scope_cells", max_cells);
    for (n, g) in rec.segments.iter().enumerate() {
        let key = |f: &str| format!("segment.{}.{f}", n + 1);
        s.set(key("mode"), g.mode)
            .set(key("waypoint"), g.waypoint)
            .set(key("states"), g.states)
            .set(key("backups"), g.backups)
            .set(key("extensions"), g.extensions)
            .set(key("first_stage"), g.first_stage)
            .set(key("k_fp"), opt(g.k_fp))
            .set(key("solve_ns"), opt(g.wall_ns))
            .set(key("value"), g.value)
            .set(key("cost"), g.cost)
            .set(key("steps"), g.steps);
    }
    for (n, d) in rec.diagnostics.iter().enumerate() {
        s.set(format!("diagnostic.{}", n + 1), format!("{d:?}"));
    }
    s
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|x| x.to_string()).unwrap_or_else(|| "none".into())
}

pub fn solve_summary(game: &ModalGame<'_>, sol: &Solution) -> Summary {
    let mut s = Summary::new();
    let st = &sol.stats;
    s.set("mode", game.mode())
        .set("waypoint", game.scope().waypoint)
        .set("horizon", game.horizon())
        .set("states", st.states)
        .set("backups", st.backups)
        .set("wall_ns", opt(st.wall_ns))
        .set(
            "backups_per_sec",
            st.wall_ns
                .filter(|&ns| ns > 0)
                .map(|ns| format!("{:.0}", st.backups as f64 * 1e9 / ns as f64))
                .unwrap_or_else(|| "none".into()),
        )
        .set("peak_cells", st.peak_cells)
        .set("first_stage", sol.first_stage())
        .set("k_fp", opt(sol.k_fp))
        .set("extensions", st.extensions);
    for (k, n) in (sol.first_stage()..).zip(&st.winning_sizes) {
        s.set(format!("winning.{k}"), n);
    }
    s
}

/// Exit code of a play outcome.
pub fn outcome_code(o: Outcome) -> u8 {
    match o {
        Outcome::Terminated => 0,
        Outcome::Failure => 3,
        Outcome::Timeout => 4,
        Outcome::InvariantViolation => 5,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub task: Option<String>,
    pub params: serde_json::Value,
    pub seeds: Vec<u64>,
    pub out_dir: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, task: Option<&Path>, params: serde_json::Value, seeds: Vec<u64>, out_dir: &Path) -> Self {
        RunManifest {
            command: command.into(),
            task: task.map(|p| p.display().to_string()),
            params,
            seeds,
            out_dir: out_dir.display().to_string(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

const TABLE_MAGIC: &[u8; 4] = b"RGVT";

/// Little-endian dump: magic, version, scope bounds (12 × i32), waypoint,
/// first and last stage, state count, then one packed `u32` per state and
/// stage (`u32::MAX` is ⊤).
pub fn write_table<W: Write>(mut w: W, sol: &Solution) -> Result<()> {
    let t = &sol.table;
    let b = t.scope().bounds;
    w.write_all(TABLE_MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    for c in [b.p.lo, b.p.hi, b.v.lo, b.v.hi] {
        for x in c.to_array() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    for x in [t.scope().waypoint, t.first_stage(), t.last_stage(), t.state_count() as u32] {
        w.write_all(&x.to_le_bytes())?;
    }
    for k in t.first_stage()..=t.last_stage() {
        for &c in t.stage_cells(k) {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Header and stage slices of a table dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDump {
    pub bounds: [i32; 12],
    pub waypoint: u32,
    pub first_stage: u32,
    pub last_stage: u32,
    pub slices: Vec<Vec<u32>>,
}

pub fn read_table<R: Read>(mut r: R) -> Result<TableDump> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 8 || &buf[..4] != TABLE_MAGIC {
        bail!("not a value-table dump");
    }
    let words: Vec<u32> = buf[4..]
        .chunks(4)
        .map(|c| c.try_into().map(u32::from_le_bytes))
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow!("truncated table dump"))?;
    if words[0] != 1 {
        bail!("unsupported table dump version {}", words[0]);
    }
    if words.len() < 17 {
        bail!("truncated table dump");
    }
    let mut bounds = [0i32; 12];
    for (b, w) in bounds.iter_mut().zip(&words[1..13]) {
        *b = *w as i32;
    }
    let (waypoint, first, last, n) = (words[13], words[14], words[15], words[16] as usize);
    let body = &words[17..];
    let stages = (last + 1).saturating_sub(first) as usize;
    if body.len() != stages * n {
        bail!("table dump has {} cells, expected {}", body.len(), stages * n);
    }
    Ok(TableDump {
        bounds,
        waypoint,
        first_stage: first,
        last_stage: last,
        slices: body.chunks(n.max(1)).map(<[u32]>::to_vec).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(mode: Mode, p: [i32; 3], input: Option<([i32; 3], [i32; 3])>, event: Option<Event>) -> Row {
        Row {
            mode,
            x: StateVec::new(GridVec::from_array(p), GridVec::new(0, 1, -1), 2),
            k: 4,
            input: input.map(|(u, d)| (GridVec::from_array(u), GridVec::from_array(d))),
            event,
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            row(Mode::Depart, [1, 2, 0], None, Some(Event::Start)),
            row(Mode::Depart, [1, 2, 1], Some(([0, 0, 1], [-1, 0, 0])), None),
            row(Mode::Standby, [1, 2, 0], None, Some(Event::Land)),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,mode,k,p_x,p_y,p_z,v_x,v_y,v_z,i,u_x,u_y,u_z,d_x,d_y,d_z,event\n"));
        let back: Vec<Row> = read_csv(&buf[..]).unwrap().iter().map(|r| r.to_row().unwrap()).collect();
        assert_eq!(back, rows);
    }

    #[test]
    fn partial_vectors_are_rejected() {
        let text = "step,mode,k,p_x,p_y,p_z,v_x,v_y,v_z,i,u_x,u_y,u_z,d_x,d_y,d_z,event\n\
                    0,cruise,1,0,0,0,0,0,0,3,1,,0,0,0,0,\n";
        let rows = read_csv(text.as_bytes()).unwrap();
        assert!(rows[0].to_row().is_err());
    }

    #[test]
    fn summary_round_trip() {
        let mut s = Summary::new();
        s.set("outcome", "terminated").set("play_steps", 17).set("outcome", "failure");
        let back = Summary::parse(&s.render()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.get("outcome"), Some("failure"));
        assert!(Summary::parse("novalue\n").is_err());
    }
}
