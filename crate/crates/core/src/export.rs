//! CSV output. Every float is written with 17 significant digits so that a
//! file read back reproduces the exact binary value.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::potential::NavFunction;
use crate::sim::{Event, RunOutput, Summary, TrajectorySample};
use crate::vec2::Vec2;

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "t", "x", "y", "vx", "vy", "eta", "phi", "f0", "src_x", "src_y", "known_count", "clearance",
];
pub const EVENTS_HEADER: [&str; 3] = ["t", "kind", "detail"];
pub const SUMMARY_HEADER: [&str; 9] = [
    "final_t",
    "final_distance",
    "min_clearance",
    "converged",
    "collided",
    "path_length",
    "ticks",
    "known_count",
    "k",
];
pub const LEVELSET_HEADER: [&str; 3] = ["x", "y", "phi"];
pub const GRADIENT_HEADER: [&str; 4] = ["x", "y", "gx", "gy"];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> io::Result<()> {
    w.flush()
}

pub fn write_trajectory<W: Write>(w: W, samples: &[TrajectorySample]) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for s in samples {
        out.write_record([
            num(s.t),
            num(s.p.x),
            num(s.p.y),
            num(s.v_cmd.x),
            num(s.v_cmd.y),
            num(s.eta),
            num(s.phi_meas),
            num(s.f0_meas),
            num(s.source_pos.x),
            num(s.source_pos.y),
            s.known_count.to_string(),
            num(s.clearance),
        ])?;
    }
    flush(out)
}

pub fn write_events<W: Write>(w: W, events: &[Event]) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(EVENTS_HEADER)?;
    for e in events {
        out.write_record([num(e.t), e.kind.name().to_string(), e.kind.payload()])?;
    }
    flush(out)
}

/// Summary fields in [`SUMMARY_HEADER`] order.
pub fn summary_fields(s: &Summary) -> [String; 9] {
    [
        num(s.final_t),
        num(s.final_distance),
        num(s.min_clearance),
        s.converged.to_string(),
        s.collided.to_string(),
        num(s.path_length),
        s.ticks.to_string(),
        s.known_count.to_string(),
        s.k.to_string(),
    ]
}

pub fn write_summary<W: Write>(w: W, s: &Summary) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    out.write_record(summary_fields(s))?;
    flush(out)
}

/// Writes `trajectory.csv`, `events.csv` and `summary.csv` into `dir`,
/// creating it if needed.
pub fn write_run(dir: &Path, run: &RunOutput) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_trajectory(io::BufWriter::new(fs::File::create(dir.join("trajectory.csv"))?), &run.trajectory)?;
    write_events(io::BufWriter::new(fs::File::create(dir.join("events.csv"))?), &run.events)?;
    write_summary(io::BufWriter::new(fs::File::create(dir.join("summary.csv"))?), &run.summary)
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let span = hi - lo;
    let last = n.saturating_sub(1).max(1) as f64;
    (0..n).map(move |i| if i + 1 == n && n > 1 { hi } else { lo + span * i as f64 / last })
}

/// Grid nodes over the box `lo..=hi`, `n` per axis, x varying fastest.
pub fn grid(lo: Vec2, hi: Vec2, n: usize) -> Vec<Vec2> {
    let xs: Vec<f64> = linspace(lo.x, hi.x, n).collect();
    linspace(lo.y, hi.y, n)
        .flat_map(|y| xs.iter().map(move |&x| Vec2::new(x, y)))
        .collect()
}

/// Navigation function values on an `n` by `n` grid over the workspace
/// bounding box; `None` outside the known free space.
pub fn levelset(nav: &NavFunction<'_>, t: f64, n: usize) -> Vec<(Vec2, Option<f64>)> {
    let (lo, hi) = nav.world().bounding_box();
    grid(lo, hi, n).into_iter().map(|p| (p, nav.phi(p, t).ok())).collect()
}

/// Gradient samples on a coarser `n` by `n` grid, same conventions as [`levelset`].
pub fn gradient_field(nav: &NavFunction<'_>, t: f64, n: usize) -> Vec<(Vec2, Option<Vec2>)> {
    let (lo, hi) = nav.world().bounding_box();
    grid(lo, hi, n).into_iter().map(|p| (p, nav.grad_phi(p, t).ok())).collect()
}

/// Side length of the companion gradient grid for a level-set grid of side `n`.
pub fn gradient_grid_size(n: usize) -> usize {
    (n / 10).max(2)
}

pub fn write_levelset<W: Write>(w: W, cells: &[(Vec2, Option<f64>)]) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(LEVELSET_HEADER)?;
    for (p, phi) in cells {
        out.write_record([num(p.x), num(p.y), phi.map(num).unwrap_or_default()])?;
    }
    flush(out)
}

pub fn write_gradient<W: Write>(w: W, cells: &[(Vec2, Option<Vec2>)]) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(GRADIENT_HEADER)?;
    for (p, g) in cells {
        let (gx, gy) = g.map(|g| (num(g.x), num(g.y))).unwrap_or_default();
        out.write_record([num(p.x), num(p.y), gx, gy])?;
    }
    flush(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::particle_static;
    use crate::sim::run;

    fn text(f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0, 2.5] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.25), "2.5000000000000000e-1");
    }

    #[test]
    fn linspace_ends() {
        let v: Vec<f64> = linspace(-3.0, 3.0, 4).collect();
        assert_eq!(v, vec![-3.0, -1.0, 1.0, 3.0]);
        assert_eq!(linspace(0.0, 1.0, 1).collect::<Vec<_>>(), vec![0.0]);
        assert_eq!(linspace(0.0, 1.0, 0).count(), 0);
    }

    #[test]
    fn two_by_two_grid_is_corners() {
        let s = particle_static();
        let cells = levelset(&s.full_nav(), 0.0, 2);
        let corners: Vec<Vec2> = cells.iter().map(|c| c.0).collect();
        assert_eq!(
            corners,
            vec![Vec2::new(-3.0, -3.0), Vec2::new(3.0, -3.0), Vec2::new(-3.0, 3.0), Vec2::new(3.0, 3.0)]
        );
        // Corners of the box lie outside the round workspace.
        assert!(cells.iter().all(|c| c.1.is_none()));
        let csv = text(|b| write_levelset(b, &cells));
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn run_files_have_headers() {
        let mut s = particle_static();
        s.duration = 0.5;
        let out = run(&s).unwrap();
        let traj = text(|b| write_trajectory(b, &out.trajectory));
        assert_eq!(traj.lines().next().unwrap(), "t,x,y,vx,vy,eta,phi,f0,src_x,src_y,known_count,clearance");
        assert_eq!(traj.lines().count(), out.trajectory.len() + 1);
        let events = text(|b| write_events(b, &out.events));
        assert_eq!(events.lines().next().unwrap(), "t,kind,detail");
        let summary = text(|b| write_summary(b, &out.summary));
        assert_eq!(
            summary.lines().next().unwrap(),
            "final_t,final_distance,min_clearance,converged,collided,path_length,ticks,known_count,k"
        );
        assert_eq!(summary.lines().count(), 2);
    }

    #[test]
    fn gradient_grid_blanks() {
        let s = particle_static();
        let cells = gradient_field(&s.full_nav(), 0.0, gradient_grid_size(40));
        assert_eq!(cells.len(), 16);
        let csv = text(|b| write_gradient(b, &cells));
        assert!(csv.lines().nth(1).unwrap().ends_with(",,"));
    }
}
