//! Maps of inversion and entanglement figures of merit over the
//! (trion detuning, mode splitting) plane, and their level contours.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emission::{photon_state_angles, pure_state_concurrence, spin_photon_state};
use crate::error::{Error, Result};
use crate::excitation::{max_trion_population, OptimizerConfig};
use crate::format::number;
use crate::multiphoton::{build_cluster_state, electron_x, three_tangle};
use crate::params::SystemParams;

/// Magic bytes opening a binary grid dump.
pub const BINARY_MAGIC: [u8; 4] = *b"SPG1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        let axis = Self { min, max, count };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.count == 0 {
            return Err(Error::InvalidInput("axis needs finite bounds and at least one point".into()));
        }
        if self.count > 1 && self.max <= self.min {
            return Err(Error::InvalidInput(format!("axis max {} must exceed min {}", self.max, self.min)));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "N_tr_max")]
    NTrMax,
    #[serde(rename = "Fc")]
    Fc,
    #[serde(rename = "concurrence")]
    Concurrence,
    #[serde(rename = "tau")]
    Tau,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::NTrMax, Quantity::Fc, Quantity::Concurrence, Quantity::Tau];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::NTrMax => "N_tr_max",
            Quantity::Fc => "Fc",
            Quantity::Concurrence => "concurrence",
            Quantity::Tau => "tau",
        }
    }

    /// Identifier stored in the binary header.
    pub fn id(self) -> u32 {
        match self {
            Quantity::NTrMax => 0,
            Quantity::Fc => 1,
            Quantity::Concurrence => 2,
            Quantity::Tau => 3,
        }
    }

    pub fn from_id(id: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.id() == id)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown quantity {s:?}; expected N_tr_max, Fc, concurrence or tau")))
    }
}

/// Grid axes in units of `kappa` plus the fixed coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// `omega_0 - omega_c`.
    pub detuning: Axis,
    /// Half splitting `Delta`.
    pub splitting: Axis,
    pub g: f64,
    pub kappa: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let axis = Axis { min: -4.0, max: 4.0, count: 81 };
        Self { detuning: axis, splitting: axis, g: 0.15, kappa: 1.0 }
    }
}

impl SweepSpec {
    pub fn len(&self) -> usize {
        self.detuning.count * self.splitting.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell index `j * n_detuning + i` for detuning index `i`, splitting index `j`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.detuning.count + i
    }

    pub fn cell_params(&self, n: usize) -> SystemParams {
        let (i, j) = (n % self.detuning.count, n / self.detuning.count);
        SystemParams {
            omega_c: 0.0,
            omega_0: self.kappa * self.detuning.value(i),
            delta: self.kappa * self.splitting.value(j),
            g: self.g,
            kappa: self.kappa,
            ..SystemParams::default()
        }
    }

    fn validate(&self) -> Result<()> {
        self.detuning.validate()?;
        self.splitting.validate()?;
        self.cell_params(0).require_fast_cavity()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellWarning {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub spec: SweepSpec,
    /// Row-major maps (splitting rows, detuning columns); a `None` cell
    /// failed and is reported in `warnings`.
    pub maps: Vec<(Quantity, Vec<Option<f64>>)>,
    pub warnings: Vec<CellWarning>,
}

impl SweepGrid {
    pub fn map(&self, q: Quantity) -> Option<&[Option<f64>]> {
        self.maps.iter().find(|(k, _)| *k == q).map(|(_, v)| v.as_slice())
    }

    pub fn value(&self, q: Quantity, i: usize, j: usize) -> Option<f64> {
        self.map(q).and_then(|m| m[self.spec.index(i, j)])
    }

    /// Long format `omega0,delta,quantity,value`, quantity-major then row-major.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega0,delta,quantity,value\n");
        for (q, map) in &self.maps {
            for (n, v) in map.iter().enumerate() {
                let (i, j) = (n % self.spec.detuning.count, n / self.spec.detuning.count);
                let (x, y) = (number(self.spec.detuning.value(i)), number(self.spec.splitting.value(j)));
                s.push_str(&format!("{x},{y},{q},{}\n", number(v.unwrap_or(f64::NAN))));
            }
        }
        s
    }

    /// 16-byte header (`SPG1`, u32 LE detuning count, u32 LE splitting
    /// count, u32 LE quantity id) followed by the row-major f64 LE values;
    /// failed cells are stored as NaN.
    pub fn to_binary(&self, q: Quantity) -> Result<Vec<u8>> {
        let map = self.map(q).ok_or_else(|| Error::InvalidInput(format!("quantity {q} not on grid")))?;
        let mut out = Vec::with_capacity(16 + 8 * map.len());
        out.extend_from_slice(&BINARY_MAGIC);
        out.extend_from_slice(&(self.spec.detuning.count as u32).to_le_bytes());
        out.extend_from_slice(&(self.spec.splitting.count as u32).to_le_bytes());
        out.extend_from_slice(&q.id().to_le_bytes());
        for v in map {
            out.extend_from_slice(&v.unwrap_or(f64::NAN).to_le_bytes());
        }
        Ok(out)
    }
}

/// Decoded binary dump: `(n_detuning, n_splitting, quantity, values)`.
pub fn read_binary(bytes: &[u8]) -> Result<(usize, usize, Quantity, Vec<f64>)> {
    if bytes.len() < 16 || bytes[..4] != BINARY_MAGIC {
        return Err(Error::Parse("not a grid dump".into()));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().expect("4 bytes")) as usize;
    let (nx, ny) = (word(1), word(2));
    let q = Quantity::from_id(word(3) as u32).ok_or_else(|| Error::Parse("unknown quantity id".into()))?;
    if bytes.len() != 16 + 8 * nx * ny {
        return Err(Error::Parse("payload length does not match the header".into()));
    }
    let values = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((nx, ny, q, values))
}

fn cell_value(q: Quantity, params: &SystemParams, optimizer: &OptimizerConfig) -> Result<(f64, Option<String>)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match q {
        Quantity::NTrMax => {
            let m = max_trion_population(params, optimizer)?;
            let warn = (!m.converged).then(|| "pump optimization hit the iteration cap".to_string());
            Ok((m.n_tr, warn))
        }
        Quantity::Fc => Ok((photon_state_angles(params)?.fc, None)),
        Quantity::Concurrence => {
            let qubit = photon_state_angles(params)?;
            let s = spin_photon_state(Complex64::new(h, 0.0), Complex64::new(h, 0.0), &qubit)?;
            Ok((pure_state_concurrence(&s.amplitudes), None))
        }
        Quantity::Tau => {
            let qubit = photon_state_angles(params)?;
            Ok((three_tangle(&build_cluster_state(2, &qubit, electron_x())?)?, None))
        }
    }
}

/// Evaluates the requested quantities on every cell. Per-cell failures and
/// optimizer warnings are collected, not fatal. Results do not depend on
/// `workers`.
pub fn run_map(spec: &SweepSpec, quantities: &[Quantity], optimizer: &OptimizerConfig, workers: Option<usize>) -> Result<SweepGrid> {
    spec.validate()?;
    if quantities.is_empty() {
        return Err(Error::InvalidInput("no quantities requested".into()));
    }
    let mut qs = quantities.to_vec();
    qs.sort();
    qs.dedup();
    let job = || -> Vec<(Quantity, Vec<(Option<f64>, Option<String>)>)> {
        qs.iter()
            .map(|&q| {
                let cells = (0..spec.len())
                    .into_par_iter()
                    .map(|n| match cell_value(q, &spec.cell_params(n), optimizer) {
                        Ok((v, w)) => (Some(v.clamp(0.0, 1.0)), w),
                        Err(e) => (None, Some(e.to_string())),
                    })
                    .collect();
                (q, cells)
            })
            .collect()
    };
    let results = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    };
    let mut warnings = Vec::new();
    let maps = results
        .into_iter()
        .map(|(q, cells)| {
            let values = cells
                .into_iter()
                .enumerate()
                .map(|(n, (v, w))| {
                    if let Some(message) = w {
                        warnings.push(CellWarning { index: n, message: format!("{q}: {message}") });
                    }
                    v
                })
                .collect();
            (q, values)
        })
        .collect();
    Ok(SweepGrid { spec: *spec, maps, warnings })
}

/// One contour line in axis coordinates `(omega_0 - omega_c, Delta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    /// True when the line closes on itself inside the grid; open lines end on
    /// the grid boundary.
    pub closed: bool,
}

impl Polyline {
    /// Even-odd point-in-polygon test; only meaningful for closed lines.
    /// Points on the line count as inside, so grid nodes on a boundary-closed
    /// line belong to the region it encloses.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let p = &self.points;
        let mut inside = false;
        let mut k = p.len() - 1;
        for m in 0..p.len() {
            let ((xi, yi), (xk, yk)) = (p[m], p[k]);
            if on_segment((x, y), (xi, yi), (xk, yk)) {
                return true;
            }
            if (yi > y) != (yk > y) && x < (xk - xi) * (y - yi) / (yk - yi) + xi {
                inside = !inside;
            }
            k = m;
        }
        inside
    }
}

fn on_segment(q: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let scale = 1e-12 * (1.0 + a.0.abs().max(a.1.abs()).max(b.0.abs()).max(b.1.abs()));
    if len2 == 0.0 {
        return (q.0 - a.0).abs() <= scale && (q.1 - a.1).abs() <= scale;
    }
    let cross = dx * (q.1 - a.1) - dy * (q.0 - a.0);
    let t = (dx * (q.0 - a.0) + dy * (q.1 - a.1)) / len2;
    cross.abs() <= scale * len2.sqrt() && (-1e-12..=1.0 + 1e-12).contains(&t)
}

/// Marching-squares level set of `values` (row-major, `nx` columns) at
/// `level`, with a cell corner counting as inside when its value exceeds the
/// level. Missing (`None`) corners count as outside. With `close_at_boundary`
/// the grid is surrounded by an outside frame so every line closes, running
/// along the grid edge where the inside region touches it.
pub fn marching_squares(values: &[Option<f64>], nx: usize, xs: &[f64], ys: &[f64], level: f64, close_at_boundary: bool) -> Vec<Polyline> {
    let ny = values.len() / nx.max(1);
    let finite: Vec<f64> = values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if finite.is_empty() || level < lo || level >= hi || nx == 0 {
        return Vec::new();
    }
    // Padded lattice coordinates: index 0 and n+1 are the frame when closing.
    let pad = usize::from(close_at_boundary);
    let (px, py) = (nx + 2 * pad, ny + 2 * pad);
    let sample = |i: usize, j: usize| -> Option<f64> {
        if pad == 1 && (i == 0 || j == 0 || i == px - 1 || j == py - 1) {
            None
        } else {
            values[(j - pad) * nx + (i - pad)].filter(|v| v.is_finite())
        }
    };
    let inside = |i: usize, j: usize| sample(i, j).is_some_and(|v| v > level);
    let coord = |i: usize, j: usize| -> (f64, f64) {
        let ci = (i as isize - pad as isize).clamp(0, nx as isize - 1) as usize;
        let cj = (j as isize - pad as isize).clamp(0, ny as isize - 1) as usize;
        (xs[ci], ys[cj])
    };
    // Crossing on the edge between two lattice points; a frame point sits on
    // top of its neighbour so the line follows the grid edge.
    let crossing = |a: (usize, usize), b: (usize, usize)| -> (f64, f64) {
        let (pa, pb) = (coord(a.0, a.1), coord(b.0, b.1));
        let t = match (sample(a.0, a.1), sample(b.0, b.1)) {
            (Some(va), Some(vb)) if va != vb => ((level - va) / (vb - va)).clamp(0.0, 1.0),
            (Some(_), None) => 1.0,
            (None, Some(_)) => 0.0,
            _ => 0.5,
        };
        (pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1))
    };
    // Edge ids: horizontal (i,j)-(i+1,j) -> 2*(j*px+i), vertical (i,j)-(i,j+1) -> 2*(j*px+i)+1.
    let h_edge = |i: usize, j: usize| 2 * (j * px + i);
    let v_edge = |i: usize, j: usize| 2 * (j * px + i) + 1;
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut point_of: HashMap<usize, (f64, f64)> = HashMap::new();
    for j in 0..py.saturating_sub(1) {
        for i in 0..px.saturating_sub(1) {
            let c = [inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)];
            // Edges in order bottom, right, top, left with their endpoints.
            let edges = [
                (h_edge(i, j), (i, j), (i + 1, j)),
                (v_edge(i + 1, j), (i + 1, j), (i + 1, j + 1)),
                (h_edge(i, j + 1), (i, j + 1), (i + 1, j + 1)),
                (v_edge(i, j), (i, j), (i, j + 1)),
            ];
            let cut: Vec<usize> = (0..4).filter(|&e| c[e] != c[(e + 1) % 4]).collect();
            for &e in &cut {
                let (id, a, b) = edges[e];
                point_of.entry(id).or_insert_with(|| crossing(a, b));
            }
            match cut.len() {
                2 => segments.push((edges[cut[0]].0, edges[cut[1]].0)),
                4 => {
                    // Saddle: the cell-centre average decides which corners connect.
                    let mean = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
                        .iter()
                        .map(|&(a, b)| sample(a, b).unwrap_or(f64::NEG_INFINITY))
                        .sum::<f64>()
                        / 4.0;
                    let centre_in = mean > level;
                    // Corner 0 is inside iff corner 2 is; join around the
                    // corners that differ from the centre.
                    if centre_in == c[0] {
                        segments.push((edges[0].0, edges[1].0));
                        segments.push((edges[2].0, edges[3].0));
                    } else {
                        segments.push((edges[3].0, edges[0].0));
                        segments.push((edges[1].0, edges[2].0));
                    }
                }
                _ => {}
            }
        }
    }

    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(s);
        adjacency.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start_edge: usize, first: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut chain = vec![start_edge];
        let (mut seg, mut at) = (first, start_edge);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return (chain, true);
            }
            chain.push(next);
            at = next;
            match adjacency[&at].iter().copied().find(|&s| !used[s]) {
                Some(s) => seg = s,
                None => return (chain, false),
            }
        }
    };
    // Open lines first, started from their dangling ends, then loops; both
    // in edge-id order so the output is deterministic.
    let mut ends: Vec<usize> = adjacency.iter().filter(|(_, s)| s.len() == 1).map(|(&e, _)| e).collect();
    ends.sort_unstable();
    for e in ends {
        let s = adjacency[&e][0];
        if !used[s] {
            let (chain, closed) = walk(e, s, &mut used);
            lines.push(Polyline { points: chain.iter().map(|id| point_of[id]).collect(), closed });
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (chain, closed) = walk(segments[s].0, s, &mut used);
            lines.push(Polyline { points: chain.iter().map(|id| point_of[id]).collect(), closed });
        }
    }
    lines
}

/// Level contour of one quantity, open where it meets the grid boundary.
/// Levels outside the data range (or equal to the maximum) give no lines.
pub fn extract_contour(grid: &SweepGrid, q: Quantity, level: f64) -> Result<Vec<Polyline>> {
    let map = grid.map(q).ok_or_else(|| Error::InvalidInput(format!("quantity {q} not on grid")))?;
    let (xs, ys) = (grid.spec.detuning.values(), grid.spec.splitting.values());
    Ok(marching_squares(map, grid.spec.detuning.count, &xs, &ys, level, false))
}

/// Like [`extract_contour`], but every line is closed along the grid edge.
pub fn extract_closed_contour(grid: &SweepGrid, q: Quantity, level: f64) -> Result<Vec<Polyline>> {
    let map = grid.map(q).ok_or_else(|| Error::InvalidInput(format!("quantity {q} not on grid")))?;
    let (xs, ys) = (grid.spec.detuning.values(), grid.spec.splitting.values());
    Ok(marching_squares(map, grid.spec.detuning.count, &xs, &ys, level, true))
}
