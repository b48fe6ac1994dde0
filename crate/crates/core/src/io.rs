//! File formats: CSV snapshots and series, JSON reports, saved solutions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classical::FieldStack;
use crate::error::{Error, Result};
use crate::geometry::{Fireline, MetricsSeries};
use crate::grid::{Grid2, ScalarField2};
use crate::net::DenseNet;
use crate::pinn::LevelSetSolution;
use crate::scenario::{Domain3, ScalingTransform};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

/// `t,x,y,psi`, one row per node in grid order.
pub fn snapshot_csv(t: f64, field: &ScalarField2) -> String {
    let mut s = String::from("t,x,y,psi\n");
    for ((x, y), v) in field.grid.nodes().zip(&field.values) {
        let _ = writeln!(s, "{t:?},{x:?},{y:?},{v:?}");
    }
    s
}

pub fn write_snapshot(path: &Path, t: f64, field: &ScalarField2) -> Result<()> {
    write_text(path, &snapshot_csv(t, field))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: not a number: {s:?}")))
}

/// Reads a snapshot written by [`write_snapshot`]; the grid is recovered
/// from the node coordinates.
pub fn read_snapshot(path: &Path) -> Result<(f64, ScalarField2)> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "t,x,y,psi" => {}
        _ => return Err(Error::Parse(format!("{}: missing t,x,y,psi header", path.display()))),
    }
    let mut rows = Vec::new();
    for (n, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Parse(format!("{}: line {}: expected 4 columns", path.display(), n + 1)));
        }
        let v: Vec<f64> = cols.iter().map(|c| parse_f64(c, n + 1)).collect::<Result<_>>()?;
        rows.push([v[0], v[1], v[2], v[3]]);
    }
    let first = rows.first().ok_or_else(|| Error::Parse(format!("{}: no rows", path.display())))?;
    let t = first[0];
    let nx = rows.iter().take_while(|r| r[2] == first[2]).count();
    if nx < 2 || rows.len() % nx != 0 {
        return Err(Error::Parse(format!("{}: rows do not form a grid", path.display())));
    }
    let ny = rows.len() / nx;
    let dx = (rows[nx - 1][1] - first[1]) / (nx - 1) as f64;
    let dy = if ny > 1 { (rows[rows.len() - 1][2] - first[2]) / (ny - 1) as f64 } else { dx };
    let grid = Grid2::new(nx, ny, first[1], first[2], dx, dy)?;
    ScalarField2::new(grid, rows.iter().map(|r| r[3]).collect()).map(|f| (t, f))
}

pub fn snapshot_name(k: usize) -> String {
    format!("snapshot_{k:03}.csv")
}

/// Writes each snapshot of a stack as `snapshot_NNN.csv` plus
/// `ignition_time.csv`; returns the written paths.
pub fn write_stack(dir: &Path, stack: &FieldStack) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (k, &t) in stack.times.iter().enumerate() {
        let p = dir.join(snapshot_name(k));
        write_snapshot(&p, t, &stack.snapshot(k))?;
        paths.push(p);
    }
    let mut s = String::from("x,y,t_ignition\n");
    for ((x, y), ti) in stack.grid.nodes().zip(&stack.ignition_time) {
        let _ = writeln!(s, "{x:?},{y:?},{ti:?}");
    }
    let p = dir.join("ignition_time.csv");
    write_text(&p, &s)?;
    paths.push(p);
    Ok(paths)
}

/// Loads all `snapshot_*.csv` files of a directory as a stack.
pub fn read_stack(dir: &Path) -> Result<FieldStack> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snapshot_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::validation(format!("{}: no snapshot files", dir.display())));
    }
    let mut snaps: Vec<(f64, ScalarField2)> = files.iter().map(|f| read_snapshot(f)).collect::<Result<_>>()?;
    snaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let grid = snaps[0].1.grid;
    if snaps.iter().any(|(_, f)| !f.grid.matches(&grid, 1e-9)) {
        return Err(Error::validation("snapshots use different grids"));
    }
    let times = snaps.iter().map(|s| s.0).collect();
    let fields = snaps.into_iter().map(|s| s.1.values).collect();
    FieldStack::new(grid, times, fields, vec![f64::NAN; grid.len()])
}

pub fn loss_csv(history: &[f64]) -> String {
    let mut s = String::from("iteration,loss\n");
    for (k, l) in history.iter().enumerate() {
        let _ = writeln!(s, "{k},{l:?}");
    }
    s
}

pub fn fireline_csv(line: &Fireline) -> String {
    let mut s = String::from("loop_id,x,y\n");
    for (id, l) in line.loops.iter().enumerate() {
        for p in &l.points {
            let _ = writeln!(s, "{id},{:?},{:?}", p[0], p[1]);
        }
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:?}"))
}

/// Absent distances are empty cells.
pub fn metrics_csv(series: &MetricsSeries) -> String {
    let mut s = String::from("t,d_h,d_h_sqrt_area,d_h_area,d_h_perimeter,area_a,area_b,perim_a,perim_b\n");
    for r in &series.records {
        let _ = writeln!(
            s,
            "{:?},{},{},{},{},{:?},{:?},{:?},{:?}",
            r.t,
            opt(r.d_h),
            opt(r.d_h_sqrt_area),
            opt(r.d_h_area),
            opt(r.d_h_perimeter),
            r.area_a,
            r.area_b,
            r.perim_a,
            r.perim_b
        );
    }
    s
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    format: String,
    scaling: ScalingTransform,
    domain: Domain3,
    scenario_hash: String,
    net: String,
}

const SOLUTION_FORMAT: &str = "level-set-solution 1";

/// Saves the network, scaling, domain and scenario hash as JSON. The loss
/// history is not part of the file.
pub fn save_solution(path: &Path, solution: &LevelSetSolution) -> Result<()> {
    write_json(
        path,
        &SolutionFile {
            format: SOLUTION_FORMAT.into(),
            scaling: solution.scaling,
            domain: solution.domain,
            scenario_hash: solution.scenario_hash.clone(),
            net: solution.net.to_text(),
        },
    )
}

pub fn load_solution(path: &Path) -> Result<LevelSetSolution> {
    let file: SolutionFile =
        serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if file.format != SOLUTION_FORMAT {
        return Err(Error::Parse(format!("{}: unknown format {:?}", path.display(), file.format)));
    }
    file.scaling.validate()?;
    Ok(LevelSetSolution {
        net: DenseNet::from_text(&file.net)?,
        scaling: file.scaling,
        domain: file.domain,
        scenario_hash: file.scenario_hash,
        loss_history: Vec::new(),
    })
}

/// Record of one command run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario_hash: Option<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub threads: usize,
    pub timings: BTreeMap<String, f64>,
    pub artifacts: Vec<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MetricsRecord, Polyline};
    use crate::net::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2::new(4, 3, -1.0, 0.5, 0.1, 0.3).unwrap();
        let f = ScalarField2::from_fn(g, |x, y| (x * 3.1).sin() + y / 7.0);
        let p = dir.path().join("s.csv");
        write_snapshot(&p, 2.5, &f).unwrap();
        let (t, back) = read_snapshot(&p).unwrap();
        assert_eq!(t, 2.5);
        assert_eq!(back.values, f.values);
        assert!(back.grid.matches(&g, 1e-12));
    }

    #[test]
    fn stack_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2::new(3, 3, 0.0, 0.0, 1.0, 1.0).unwrap();
        let stack = FieldStack::new(g, vec![0.0, 1.0], vec![vec![1.0; 9], vec![-1.0; 9]], vec![0.0; 9]).unwrap();
        let paths = write_stack(dir.path(), &stack).unwrap();
        assert_eq!(paths.len(), 3);
        let back = read_stack(dir.path()).unwrap();
        assert_eq!(back.times, stack.times);
        assert_eq!(back.fields, stack.fields);
    }

    #[test]
    fn missing_file_is_an_io_error_with_path() {
        let err = read_snapshot(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/x.csv"));
    }

    #[test]
    fn csv_layouts() {
        assert_eq!(loss_csv(&[0.5, 0.25]), "iteration,loss\n0,0.5\n1,0.25\n");
        let line = Fireline {
            time: 0.0,
            loops: vec![Polyline { points: vec![[0.0, 1.0], [2.0, 3.0]], closed: false }],
        };
        assert_eq!(fireline_csv(&line), "loop_id,x,y\n0,0.0,1.0\n0,2.0,3.0\n");
        let m = MetricsSeries {
            records: vec![MetricsRecord {
                t: 1.0,
                d_h: None,
                d_h_sqrt_area: None,
                d_h_area: None,
                d_h_perimeter: None,
                area_a: 0.0,
                area_b: 2.0,
                perim_a: 0.0,
                perim_b: 5.0,
            }],
        };
        assert!(metrics_csv(&m).ends_with("1.0,,,,,0.0,2.0,0.0,5.0\n"));
    }

    #[test]
    fn solution_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let net = DenseNet::glorot(vec![3, 16, 1], Activation::Tanh, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let sol = LevelSetSolution {
            net,
            scaling: ScalingTransform::identity(),
            domain: Domain3 { t_min: 0.0, t_max: 1.0, x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 },
            scenario_hash: "abc".into(),
            loss_history: vec![],
        };
        let p = dir.path().join("sol.json");
        save_solution(&p, &sol).unwrap();
        assert_eq!(load_solution(&p).unwrap(), sol);
    }
}
